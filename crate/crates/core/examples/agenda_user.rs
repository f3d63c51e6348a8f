//! Samples a goal and walks the agenda-based user against a scripted system.

use dialoglab::dialog::{ActType, DialogAct, DialogActSet};
use dialoglab::domain::{sample_goal, GoalProfile};
use dialoglab::user_sim::{AgendaConfig, AgendaUser};
use dialoglab::world::World;

fn show(user: &AgendaUser) {
    let stack: Vec<String> = user.agenda().stack().iter().rev().map(|a| a.to_string()).collect();
    println!("  agenda (top first): {}", stack.join(" "));
}

fn main() -> dialoglab::error::Result<()> {
    let world = World::toy();
    let profile = GoalProfile { book_prob: 0.0, ..GoalProfile::single("restaurant") };
    let goal = sample_goal(11, &world.schemas, &world.db, &profile)?;
    println!("goal: {}", serde_json::to_string_pretty(&goal).unwrap());

    let mut user = AgendaUser::new(&goal, 11, AgendaConfig::default())?;
    show(&user);
    let (acts, _) = user.respond(&DialogActSet::new(), &world.schemas, &world.db);
    println!("user: {acts}");
    show(&user);

    // a system that asks for the area, then a system that repeats itself
    let ask: DialogActSet = vec![DialogAct::request("restaurant", "area")].into();
    for _ in 0..5 {
        let (acts, done) = user.respond(&ask, &world.schemas, &world.db);
        println!("system: {ask}\nuser: {acts} (done={done}, patience left {})", user.agenda().patience());
        if done {
            break;
        }
    }
    let bye: DialogActSet = vec![DialogAct::general(ActType::Bye)].into();
    let (acts, done) = user.respond(&bye, &world.schemas, &world.db);
    println!("system: {bye}\nuser: {acts} (done={done}) succeeded={}", user.succeeded(&world.db));
    Ok(())
}
