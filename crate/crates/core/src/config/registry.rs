//! Named component factories.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{Map, Value};

use crate::agent::{
    EndToEnd, LearnedPolicy, Nlg, Nlu, PatternNlu, Policy, ReferenceWordPolicy, RuleDst, RuleEndToEnd,
    RulePolicy, TemplateNlg, Tracker, WordDst, WordPolicy, WordTracker,
};
use crate::error::{Error, Result};
use crate::nlg::Role;
use crate::policy::{Algorithm, RlConfig};
use crate::user_sim::AgendaConfig;
use crate::world::World;

pub type Params = Map<String, Value>;

/// What a factory gets to build one instance.
pub struct BuildContext<'a> {
    pub world: &'a Arc<World>,
    pub params: &'a Params,
    pub seed: u64,
}

type Build<T> = Arc<dyn Fn(&BuildContext) -> Result<T> + Send + Sync>;

pub type UserPolicyFn = Arc<dyn Fn(&Params) -> Result<AgendaConfig> + Send + Sync>;

/// A factory for one agent slot (or for the user side of an environment).
#[derive(Clone)]
pub enum Factory {
    Nlu(Build<Box<dyn Nlu>>),
    Dst(Build<Box<dyn Tracker>>),
    WordDst(Build<Box<dyn WordTracker>>),
    Policy(Build<Box<dyn Policy>>),
    Nlg(Build<Box<dyn Nlg>>),
    WordPolicy(Build<Box<dyn WordPolicy>>),
    EndToEnd(Build<Box<dyn EndToEnd>>),
    UserPolicy(UserPolicyFn),
}

impl Factory {
    /// The config slot this factory fills.
    pub fn slot(&self) -> &'static str {
        match self {
            Factory::Nlu(_) => "nlu",
            Factory::Dst(_) => "dst",
            Factory::WordDst(_) => "word_dst",
            Factory::Policy(_) => "policy",
            Factory::Nlg(_) => "nlg",
            Factory::WordPolicy(_) => "word_policy",
            Factory::EndToEnd(_) => "end_to_end",
            Factory::UserPolicy(_) => "user_policy",
        }
    }

    /// Identity of the underlying closure.
    pub fn same_as(&self, other: &Factory) -> bool {
        fn addr<T: ?Sized>(a: &Arc<T>) -> *const () {
            Arc::as_ptr(a) as *const ()
        }
        let (a, b) = match (self, other) {
            (Factory::Nlu(a), Factory::Nlu(b)) => (addr(a), addr(b)),
            (Factory::Dst(a), Factory::Dst(b)) => (addr(a), addr(b)),
            (Factory::WordDst(a), Factory::WordDst(b)) => (addr(a), addr(b)),
            (Factory::Policy(a), Factory::Policy(b)) => (addr(a), addr(b)),
            (Factory::Nlg(a), Factory::Nlg(b)) => (addr(a), addr(b)),
            (Factory::WordPolicy(a), Factory::WordPolicy(b)) => (addr(a), addr(b)),
            (Factory::EndToEnd(a), Factory::EndToEnd(b)) => (addr(a), addr(b)),
            (Factory::UserPolicy(a), Factory::UserPolicy(b)) => (addr(a), addr(b)),
            _ => return false,
        };
        std::ptr::eq(a, b)
    }
}

/// Fills parameter defaults so normalized configs echo every setting.
pub type Normalizer = Arc<dyn Fn(&Params) -> Result<Params> + Send + Sync>;

#[derive(Clone)]
pub struct Entry {
    pub factory: Factory,
    pub normalize: Option<Normalizer>,
}

#[derive(Clone, Default)]
pub struct Registry {
    entries: BTreeMap<String, Entry>,
}

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    pub fn register(&mut self, name: &str, factory: Factory) -> Result<()> {
        self.register_entry(name, Entry { factory, normalize: None })
    }

    pub fn register_entry(&mut self, name: &str, entry: Entry) -> Result<()> {
        if self.entries.contains_key(name) {
            return Err(Error::DuplicateName(name.to_string()));
        }
        self.entries.insert(name.to_string(), entry);
        Ok(())
    }

    pub fn lookup(&self, name: &str) -> Result<&Factory> {
        self.entry(name).map(|e| &e.factory)
    }

    pub fn entry(&self, name: &str) -> Result<&Entry> {
        self.entries.get(name).ok_or_else(|| Error::UnknownComponent(name.to_string()))
    }

    /// Registered names in alphabetical order.
    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }

    /// Every shipped component.
    pub fn builtin() -> Self {
        let mut r = Registry::new();
        let mut add = |name: &str, factory: Factory, normalize: Option<Normalizer>| {
            r.register_entry(name, Entry { factory, normalize }).expect("builtin names are unique");
        };
        add("PatternNLU", Factory::Nlu(Arc::new(|cx| Ok(Box::new(PatternNlu::new(cx.world.clone())) as _))), Some(no_params()));
        add("RuleDST", Factory::Dst(Arc::new(|cx| Ok(Box::new(RuleDst::new(cx.world.clone())) as _))), Some(no_params()));
        add(
            "WordDST",
            Factory::WordDst(Arc::new(|cx| Ok(Box::new(WordDst::new(cx.world.clone())) as _))),
            Some(no_params()),
        );
        add("RulePolicy", Factory::Policy(Arc::new(|cx| Ok(Box::new(RulePolicy::new(cx.world.clone())) as _))), Some(no_params()));
        for (name, algorithm) in [("QLearning", Algorithm::QLearning), ("Reinforce", Algorithm::Reinforce)] {
            add(
                name,
                Factory::Policy(Arc::new(move |cx| {
                    let config = rl_config(cx.params, algorithm)?;
                    Ok(Box::new(LearnedPolicy::new(cx.world.clone(), config, cx.seed)?) as _)
                })),
                Some(Arc::new(move |p| to_params(&rl_config(p, algorithm)?))),
            );
        }
        add(
            "TemplateNLG",
            Factory::Nlg(Arc::new(|cx| {
                let role = if nlg_is_user(cx.params)? { Role::User } else { Role::System };
                Ok(Box::new(TemplateNlg::new(cx.world.clone(), role)) as _)
            })),
            Some(Arc::new(|p| {
                let mut out = Params::new();
                out.insert("is_user".into(), Value::Bool(nlg_is_user(p)?));
                Ok(out)
            })),
        );
        add(
            "WordPolicy",
            Factory::WordPolicy(Arc::new(|cx| Ok(Box::new(ReferenceWordPolicy::new(cx.world.clone())) as _))),
            Some(no_params()),
        );
        add(
            "RuleEndToEnd",
            Factory::EndToEnd(Arc::new(|cx| Ok(Box::new(RuleEndToEnd::new(cx.world.clone())) as _))),
            Some(no_params()),
        );
        add(
            "UserPolicyAgenda",
            Factory::UserPolicy(Arc::new(agenda_config)),
            Some(Arc::new(|p| to_params(&agenda_config(p)?))),
        );
        r
    }
}

fn no_params() -> Normalizer {
    Arc::new(|p: &Params| match p.keys().next() {
        None => Ok(Params::new()),
        Some(k) => Err(Error::validation(format!("params.{k}"), "component takes no parameters")),
    })
}

fn to_params<T: serde::Serialize>(value: &T) -> Result<Params> {
    match serde_json::to_value(value) {
        Ok(Value::Object(m)) => Ok(m),
        _ => Err(Error::validation("params", "expected an object")),
    }
}

fn from_params<T: serde::de::DeserializeOwned>(p: &Params, what: &str) -> Result<T> {
    serde_json::from_value(Value::Object(p.clone())).map_err(|e| Error::validation(what, e.to_string()))
}

fn rl_config(p: &Params, algorithm: Algorithm) -> Result<RlConfig> {
    let mut config: RlConfig = from_params(p, "policy.params")?;
    if p.contains_key("algorithm") && config.algorithm != algorithm {
        return Err(Error::validation("policy.params.algorithm", "contradicts the component name"));
    }
    config.algorithm = algorithm;
    config.validate()?;
    Ok(config)
}

fn agenda_config(p: &Params) -> Result<AgendaConfig> {
    let config: AgendaConfig = from_params(p, "env.policy.params")?;
    if config.max_initiative == 0 {
        return Err(Error::validation("env.policy.params.max_initiative", "must be at least 1"));
    }
    Ok(config)
}

fn nlg_is_user(p: &Params) -> Result<bool> {
    for k in p.keys() {
        if k != "is_user" {
            return Err(Error::validation(format!("nlg.params.{k}"), "unknown parameter"));
        }
    }
    match p.get("is_user") {
        None => Ok(false),
        Some(Value::Bool(b)) => Ok(*b),
        Some(_) => Err(Error::validation("nlg.params.is_user", "expected a boolean")),
    }
}
