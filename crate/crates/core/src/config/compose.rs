//! Agents-environments-bodies wiring.

use std::sync::Arc;

use super::registry::{BuildContext, Factory, Registry};
use super::{AgentLayoutSpec, AgentSpec, ComponentSpec, EnvConfig, ExperimentConfig};
use crate::agent::{Agent, Layout};
use crate::domain::load_ontology;
use crate::env::{AgendaRoleplay, Channel, EnvKind, EnvSpec, Environment, SimulatedEnv};
use crate::error::{Error, Result};
use crate::nlg::{load_templates, TemplateSet};
use crate::world::World;

/// The environment side of a body.
pub enum BodyEnv {
    Simulated(Box<dyn Environment>),
    /// Driven by a person through the chat service.
    Human(EnvSpec),
}

/// Running statistics a body keeps while a session proceeds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BodyStats {
    pub episodes: u64,
    pub successes: u64,
    pub total_return: f64,
    pub done: bool,
}

/// One agent incarnated in one environment.
pub struct Body {
    pub index: usize,
    pub agent_index: usize,
    pub env_index: usize,
    pub copy: usize,
    pub env_name: String,
    pub agent: Agent,
    pub env: BodyEnv,
    pub stats: BodyStats,
}

pub struct Composition {
    pub world: Arc<World>,
    pub bodies: Vec<Body>,
}

impl Composition {
    /// `(agent, env)` per body.
    pub fn wiring(&self) -> Vec<(usize, usize)> {
        self.bodies.iter().map(|b| (b.agent_index, b.env_index)).collect()
    }
}

/// Seed for the components of body `index` in a session seeded with `seed`.
pub fn body_seed(seed: u64, index: usize) -> u64 {
    splitmix(seed ^ splitmix(index as u64 + 1))
}

pub(crate) fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Whether `agent` can talk over `env`'s channel.
pub fn check_pair(agent: &AgentSpec, env: &EnvConfig) -> Result<()> {
    let fail = |why: &str| Err(Error::Incompatible(format!("agent `{}` with env `{}`: {why}", agent.name, env.name)));
    match (env.spec.kind.channel(), &agent.layout) {
        (Channel::Text, AgentLayoutSpec::Pipeline { nlu, nlg, .. }) if nlu.is_none() || nlg.is_none() => {
            fail("a text environment needs agent nlu and nlg")
        }
        (Channel::Text, AgentLayoutSpec::WordDst { nlg: None, .. }) => fail("a text environment needs agent nlg"),
        (Channel::Text, AgentLayoutSpec::WordPolicy { nlu: None, .. }) => fail("a text environment needs agent nlu"),
        (Channel::Acts, AgentLayoutSpec::WordDst { .. }) => fail("word-level DST needs a text environment"),
        (Channel::Acts, AgentLayoutSpec::WordPolicy { .. }) => fail("a word-level policy needs a text environment"),
        _ => Ok(()),
    }
}

/// The domain data a config runs on: the shipped toy data unless `meta` names files.
pub fn world_for(config: &ExperimentConfig) -> Result<Arc<World>> {
    let meta = &config.meta;
    if meta.ontology.is_none() && meta.templates.is_none() {
        return Ok(World::toy());
    }
    let (schemas, db) = match &meta.ontology {
        Some(p) => load_ontology(config.resolve(p))?,
        None => crate::domain::toy_ontology(),
    };
    let templates = match &meta.templates {
        Some(p) => load_templates(config.resolve(p))?,
        None => TemplateSet::toy(),
    };
    World::new(schemas, db, templates)
}

/// Builds every body with fresh component instances, using the shipped registry.
pub fn compose(config: &ExperimentConfig, seed: u64) -> Result<Composition> {
    compose_with(config, &Registry::builtin(), seed)
}

pub fn compose_with(config: &ExperimentConfig, registry: &Registry, seed: u64) -> Result<Composition> {
    let world = world_for(config)?;
    compose_in(config, registry, world, seed)
}

pub(crate) fn compose_in(config: &ExperimentConfig, registry: &Registry, world: Arc<World>, seed: u64) -> Result<Composition> {
    let pairs = config.wiring()?;
    let mut bodies = Vec::with_capacity(pairs.len() * config.body.num);
    for (a, e) in pairs {
        check_pair(&config.agents[a], &config.envs[e])?;
        for copy in 0..config.body.num {
            let index = bodies.len();
            let s = body_seed(seed, index);
            bodies.push(Body {
                index,
                agent_index: a,
                env_index: e,
                copy,
                env_name: config.envs[e].name.clone(),
                agent: build_agent(&config.agents[a], registry, &world, s)?,
                env: build_env(&config.envs[e], &world)?,
                stats: BodyStats::default(),
            });
        }
    }
    Ok(Composition { world, bodies })
}

/// Builds one agent from its spec.
pub fn build_agent(spec: &AgentSpec, registry: &Registry, world: &Arc<World>, seed: u64) -> Result<Agent> {
    macro_rules! build {
        ($spec:expr, $variant:ident) => {{
            let c: &ComponentSpec = $spec;
            match registry.lookup(&c.name)? {
                Factory::$variant(make) => make(&BuildContext { world, params: &c.params, seed })?,
                other => {
                    return Err(Error::Incompatible(format!("`{}` fills the {} slot", c.name, other.slot())));
                }
            }
        }};
    }
    let layout = match &spec.layout {
        AgentLayoutSpec::Pipeline { nlu, dst, policy, nlg } => Layout::Pipeline {
            nlu: match nlu {
                Some(c) => Some(build!(c, Nlu)),
                None => None,
            },
            tracker: build!(dst, Dst),
            policy: build!(policy, Policy),
            nlg: match nlg {
                Some(c) => Some(build!(c, Nlg)),
                None => None,
            },
        },
        AgentLayoutSpec::WordDst { word_dst, policy, nlg } => Layout::WordDst {
            tracker: build!(word_dst, WordDst),
            policy: build!(policy, Policy),
            nlg: match nlg {
                Some(c) => Some(build!(c, Nlg)),
                None => None,
            },
        },
        AgentLayoutSpec::WordPolicy { nlu, dst, word_policy } => Layout::WordPolicy {
            nlu: match nlu {
                Some(c) => Some(build!(c, Nlu)),
                None => None,
            },
            tracker: build!(dst, Dst),
            policy: build!(word_policy, WordPolicy),
        },
        AgentLayoutSpec::EndToEnd { end_to_end } => Layout::EndToEnd(build!(end_to_end, EndToEnd)),
    };
    Ok(Agent::new(spec.name.clone(), layout))
}

/// Builds the environment side of a body.
pub fn build_env(config: &EnvConfig, world: &Arc<World>) -> Result<BodyEnv> {
    let spec = config.spec.clone();
    Ok(match spec.kind {
        EnvKind::SimulatedActs | EnvKind::SimulatedText => BodyEnv::Simulated(Box::new(SimulatedEnv::new(world.clone(), spec)?)),
        EnvKind::Roleplay => BodyEnv::Simulated(Box::new(AgendaRoleplay::new(world.clone(), spec)?)),
        EnvKind::Human => BodyEnv::Human(spec),
    })
}
