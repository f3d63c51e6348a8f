//! Renders act sets with the template NLG and parses them back with the pattern NLU.

use dialoglab::dialog::{string_to_acts, DialogActSet};
use dialoglab::nlg::Role;
use dialoglab::world::World;

fn main() -> dialoglab::error::Result<()> {
    let world = World::toy();
    let cases = [
        ("inform(restaurant, food=chinese; area=north)", Role::User),
        ("inform(hotel, stars=4)|request(hotel, parking)", Role::User),
        ("inform(restaurant, name=golden wok; phone=01223 350688)", Role::System),
        ("request(train, day)", Role::System),
    ];
    for (text, role) in cases {
        let acts: DialogActSet = string_to_acts(text)?;
        let surface = world.templates.generate(&acts, role)?;
        let parsed = world.lexicon.parse(&surface, None);
        println!("{role:>6}: {acts}\n        \"{surface}\"\n        {parsed}  {}", if parsed == acts { "ok" } else { "MISMATCH" });
    }
    println!("{} templates, {} invertible", world.templates.len(), world.templates.invertible_count());
    Ok(())
}
