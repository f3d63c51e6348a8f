//! Registers a user-defined policy and composes it with builtins from a config.

use std::sync::Arc;

use dialoglab::agent::Policy;
use dialoglab::config::{parse_config_with, Factory, Registry};
use dialoglab::dialog::{ActType, BeliefState, DialogAct, DialogActSet};
use dialoglab::error::Result;
use dialoglab::harness::{run_config, summarize};
use dialoglab::policy::decide_rule;
use dialoglab::world::World;

/// The rule policy, except that it greets before its first reply.
struct Polite {
    world: Arc<World>,
    greeted: bool,
}

impl Policy for Polite {
    fn begin_episode(&mut self, _index: usize, _total: usize) {
        self.greeted = false;
    }

    fn decide(&mut self, state: &BeliefState) -> Result<DialogActSet> {
        let mut acts = decide_rule(&self.world.schemas, state, &self.world.db);
        if !self.greeted {
            acts.insert(DialogAct::general(ActType::Greet));
            self.greeted = true;
        }
        Ok(acts)
    }
}

const CONFIG: &str = r#"{"polite": {
  "agent": [{"name": "polite", "dst": {"name": "RuleDST"}, "policy": {"name": "Polite"}}],
  "env": [{"name": "acts", "max_t": 40, "max_tick": 100}]
}}"#;

fn main() -> anyhow::Result<()> {
    let mut registry = Registry::builtin();
    registry.register(
        "Polite",
        Factory::Policy(Arc::new(|ctx| Ok(Box::new(Polite { world: ctx.world.clone(), greeted: false }) as Box<dyn Policy>))),
    )?;
    println!("components: {}", registry.names().join(", "));
    let config = parse_config_with(CONFIG, &registry)?;
    // run_config uses the builtin registry, so compose through ours by hand
    let mut comp = dialoglab::config::compose_with(&config, &registry, config.meta.seed)?;
    let world = comp.world.clone();
    let body = dialoglab::harness::run_body(&mut comp.bodies[0], &world, &config.meta, 100, 0)?;
    println!("{} episodes, success {:.3}, avg turns {:.2}", body.episodes, body.success_rate, body.avg_turns);

    let builtin = dialoglab::config::parse_config(include_str!("configs/rule_acts.json"))?;
    print!("{}", summarize(&run_config(&builtin)?));
    Ok(())
}
