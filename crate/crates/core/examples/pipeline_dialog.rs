//! One text-level dialog between the rule pipeline agent and the simulated user.
//!
//! `cargo run --example pipeline_dialog -- [seed]`

use dialoglab::agent::Agent;
use dialoglab::env::{EnvKind, EnvSpec, Environment, SimulatedEnv};
use dialoglab::world::World;

fn main() -> dialoglab::error::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let world = World::toy();
    let mut agent = Agent::rule_pipeline(world.clone());
    let spec = EnvSpec { kind: EnvKind::SimulatedText, ..EnvSpec::default() };
    let mut env = SimulatedEnv::new(world, spec)?;

    agent.begin_episode(0, 1);
    let mut obs = env.reset(seed)?;
    println!("goal: {}", serde_json::to_string(&env.episode().goal).unwrap());
    while !obs.done {
        let out = agent.respond(&obs.payload)?;
        obs = env.step(&out)?;
    }
    for turn in &env.episode().turns {
        println!("{:>6}: {}", turn.speaker.as_str(), turn.utterance.as_deref().unwrap_or(""));
        println!("        {}", turn.acts);
    }
    let ep = env.episode();
    println!("success={} return={} system turns={}", ep.success, ep.total_return(), ep.system_turns());
    Ok(())
}
