//! Feeds user acts to the rule tracker and prints the belief after each turn.

use dialoglab::dialog::{string_to_acts, DialogActSet};
use dialoglab::dst;
use dialoglab::world::World;

fn main() -> dialoglab::error::Result<()> {
    let world = World::toy();
    let turns = [
        "inform(restaurant, food=italian)",
        "inform(restaurant, area=dontcare; pricerange=cheap)",
        "request(restaurant, phone; address)",
        "inform(restaurant, pricerange=expensive)",
        "book(restaurant, people=2; day=friday)",
    ];
    let mut state = dst::init_state(&world.schemas);
    for text in turns {
        let acts: DialogActSet = string_to_acts(text)?;
        state = dst::update(&world.schemas, &state, &acts)?;
        let r = state.domain("restaurant").expect("restaurant is tracked");
        println!("user: {acts}");
        println!("  constraints {:?}", r.constraints);
        println!("  requested   {:?}", r.requested);
        println!("  dontcare    {:?}", r.dontcare);
        println!("  booking     {:?}", r.booking);
    }
    Ok(())
}
