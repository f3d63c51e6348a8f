//! Experiment configs: parsing, validation, normalization and composition.
//!
//! A config file is a JSON object whose top-level key names the experiment:
//!
//! ```json
//! {"multiwoz": {
//!   "agent": [{"name": "DialogAgent",
//!              "nlu": {"name": "PatternNLU"}, "dst": {"name": "RuleDST"},
//!              "policy": {"name": "ExternalPolicy", "algorithm": {"name": "RulePolicy"}},
//!              "nlg": {"name": "TemplateNLG", "is_user": false}}],
//!   "env": [{"name": "multiwoz",
//!            "nlu": {"name": "PatternNLU"}, "policy": {"name": "UserPolicyAgenda"},
//!            "nlg": {"name": "TemplateNLG", "is_user": true},
//!            "max_t": 40, "max_tick": 20000}],
//!   "body": {"product": "outer", "num": 1}
//! }}
//! ```
//!
//! Slot keys other than `name` and `params` are folded into `params`, and an
//! `ExternalPolicy` wrapper is replaced by its `algorithm`. The normalized form
//! (see `schema/experiment.schema.json`) spells every default out.

mod compose;
mod registry;

use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

pub use compose::{body_seed, build_agent, build_env, check_pair, compose, compose_with, world_for, Body, BodyEnv, BodyStats, Composition};
pub use registry::{BuildContext, Entry, Factory, Normalizer, Params, Registry};

use crate::env::{EnvKind, EnvSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub name: String,
    #[serde(default)]
    pub params: Params,
}

impl ComponentSpec {
    pub fn named(name: &str) -> Self {
        ComponentSpec { name: name.to_string(), params: Params::new() }
    }
}

/// Which layers an agent fills.
#[derive(Debug, Clone, PartialEq)]
pub enum AgentLayoutSpec {
    Pipeline { nlu: Option<ComponentSpec>, dst: ComponentSpec, policy: ComponentSpec, nlg: Option<ComponentSpec> },
    WordDst { word_dst: ComponentSpec, policy: ComponentSpec, nlg: Option<ComponentSpec> },
    WordPolicy { nlu: Option<ComponentSpec>, dst: ComponentSpec, word_policy: ComponentSpec },
    EndToEnd { end_to_end: ComponentSpec },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    pub name: String,
    pub layout: AgentLayoutSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub name: String,
    pub nlu: Option<ComponentSpec>,
    pub user_policy: ComponentSpec,
    pub nlg: Option<ComponentSpec>,
    /// `spec.user` mirrors the user policy's parameters.
    pub spec: EnvSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Product {
    Outer,
    Inner,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySpec {
    pub product: Product,
    /// Copies of every (agent, env) pairing.
    #[serde(default = "one")]
    pub num: usize,
    /// `[agent, env]` index pairs; custom product only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub adjacency: Vec<[usize; 2]>,
}

fn one() -> usize {
    1
}

impl Default for BodySpec {
    fn default() -> Self {
        BodySpec { product: Product::Outer, num: 1, adjacency: Vec::new() }
    }
}

/// One searched hyperparameter: an explicit grid or an inclusive linear range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SearchDim {
    Grid(Vec<Value>),
    Range { low: f64, high: f64, count: usize },
}

impl SearchDim {
    pub fn values(&self) -> Vec<Value> {
        match self {
            SearchDim::Grid(v) => v.clone(),
            SearchDim::Range { low, high, count } => (0..*count)
                .map(|i| {
                    let x = if *count == 1 { *low } else { low + (high - low) * i as f64 / (*count - 1) as f64 };
                    json!(x)
                })
                .collect(),
        }
    }
}

/// Harness settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetaSpec {
    /// Master seed; session `i` of a trial runs with `seed + i`.
    pub seed: u64,
    /// Episodes per session; unset means each env's `max_tick`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub episodes: Option<u64>,
    /// Sessions per trial.
    pub sessions: usize,
    /// Learning policies update online.
    pub train: bool,
    /// Episodes per success-rate window.
    pub window: usize,
    /// Run the sessions of a trial concurrently.
    pub parallel: bool,
    /// Keep full transcripts in session reports.
    pub transcripts: bool,
    pub objective: String,
    /// JSON pointer into the normalized experiment body → values to try.
    #[serde(skip_serializing_if = "IndexMap::is_empty")]
    pub search: IndexMap<String, SearchDim>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ontology: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub templates: Option<PathBuf>,
}

impl Default for MetaSpec {
    fn default() -> Self {
        MetaSpec {
            seed: 0,
            episodes: None,
            sessions: 1,
            train: true,
            window: 200,
            parallel: true,
            transcripts: false,
            objective: "success_rate".into(),
            search: IndexMap::new(),
            ontology: None,
            templates: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub agents: Vec<AgentSpec>,
    pub envs: Vec<EnvConfig>,
    pub body: BodySpec,
    pub meta: MetaSpec,
    /// Directory relative paths in `meta` resolve against.
    pub base_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// `(agent, env)` index pairs in body order, before `num` copies.
    pub fn wiring(&self) -> Result<Vec<(usize, usize)>> {
        let (na, ne) = (self.agents.len(), self.envs.len());
        match self.body.product {
            Product::Outer => Ok((0..na).flat_map(|a| (0..ne).map(move |e| (a, e))).collect()),
            Product::Inner if na == ne => Ok((0..na).map(|i| (i, i)).collect()),
            Product::Inner => Err(Error::ShapeMismatch { agents: na, envs: ne }),
            Product::Custom => {
                if self.body.adjacency.is_empty() {
                    return Err(Error::validation("body.adjacency", "custom product needs an adjacency list"));
                }
                self.body
                    .adjacency
                    .iter()
                    .map(|&[a, e]| {
                        if a < na && e < ne {
                            Ok((a, e))
                        } else {
                            Err(Error::validation("body.adjacency", format!("pair [{a}, {e}] out of range")))
                        }
                    })
                    .collect()
            }
        }
    }

    /// Episodes a session runs against env `e`.
    pub fn episodes_for(&self, env: usize) -> u64 {
        self.meta.episodes.unwrap_or(self.envs[env].spec.max_tick)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        match &self.base_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }

    /// The experiment body (without the name wrapper) in normalized form.
    pub fn body_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("agent".into(), Value::Array(self.agents.iter().map(agent_value).collect()));
        m.insert("env".into(), Value::Array(self.envs.iter().map(env_value).collect()));
        m.insert("body".into(), serde_json::to_value(&self.body).expect("body serializes"));
        m.insert("meta".into(), serde_json::to_value(&self.meta).expect("meta serializes"));
        Value::Object(m)
    }
}

/// The normalized config document.
pub fn normalize(config: &ExperimentConfig) -> Value {
    let mut m = Map::new();
    m.insert(config.name.clone(), config.body_value());
    Value::Object(m)
}

fn slot_value(c: &ComponentSpec) -> Value {
    json!({"name": c.name, "params": c.params})
}

fn agent_value(a: &AgentSpec) -> Value {
    let mut m = Map::new();
    m.insert("name".into(), json!(a.name));
    let mut put = |k: &str, c: &Option<ComponentSpec>| {
        if let Some(c) = c {
            m.insert(k.into(), slot_value(c));
        }
    };
    match &a.layout {
        AgentLayoutSpec::Pipeline { nlu, dst, policy, nlg } => {
            put("nlu", nlu);
            put("dst", &Some(dst.clone()));
            put("policy", &Some(policy.clone()));
            put("nlg", nlg);
        }
        AgentLayoutSpec::WordDst { word_dst, policy, nlg } => {
            put("word_dst", &Some(word_dst.clone()));
            put("policy", &Some(policy.clone()));
            put("nlg", nlg);
        }
        AgentLayoutSpec::WordPolicy { nlu, dst, word_policy } => {
            put("nlu", nlu);
            put("dst", &Some(dst.clone()));
            put("word_policy", &Some(word_policy.clone()));
        }
        AgentLayoutSpec::EndToEnd { end_to_end } => put("end_to_end", &Some(end_to_end.clone())),
    }
    Value::Object(m)
}

fn env_value(e: &EnvConfig) -> Value {
    let mut m = Map::new();
    m.insert("name".into(), json!(e.name));
    if let Some(c) = &e.nlu {
        m.insert("nlu".into(), slot_value(c));
    }
    m.insert("policy".into(), slot_value(&e.user_policy));
    if let Some(c) = &e.nlg {
        m.insert("nlg".into(), slot_value(c));
    }
    let Value::Object(spec) = serde_json::to_value(&e.spec).expect("env spec serializes") else {
        unreachable!("env spec is a struct")
    };
    for (k, v) in spec {
        if k != "user" {
            m.insert(k, v);
        }
    }
    Value::Object(m)
}

/// Parses a config holding exactly one experiment, using the shipped components.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_with(text, &Registry::builtin())
}

pub fn parse_config_with(text: &str, registry: &Registry) -> Result<ExperimentConfig> {
    let mut all = parse_configs_with(text, registry)?;
    if all.len() != 1 {
        return Err(Error::validation("config", format!("expected one experiment, found {}", all.len())));
    }
    Ok(all.remove(0))
}

/// Parses a config holding one or more experiments.
pub fn parse_configs_with(text: &str, registry: &Registry) -> Result<Vec<ExperimentConfig>> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::from_json("config", e))?;
    let Value::Object(top) = doc else {
        return Err(Error::parse("config", "top level must be an object keyed by experiment name"));
    };
    if top.is_empty() {
        return Err(Error::parse("config", "no experiment"));
    }
    top.into_iter().map(|(name, body)| parse_experiment(&name, body, registry)).collect()
}

/// Reads a config file; relative data paths resolve against its directory.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let mut all = load_configs(path)?;
    if all.len() != 1 {
        return Err(Error::validation("config", format!("expected one experiment, found {}", all.len())));
    }
    Ok(all.remove(0))
}

pub fn load_configs(path: impl AsRef<Path>) -> Result<Vec<ExperimentConfig>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut all = parse_configs_with(&text, &Registry::builtin())?;
    let dir = path.parent().map(Path::to_path_buf);
    for c in &mut all {
        c.base_dir = dir.clone();
    }
    Ok(all)
}

/// Builds a config from an experiment body value (as produced by [`ExperimentConfig::body_value`]).
pub fn parse_experiment(name: &str, body: Value, registry: &Registry) -> Result<ExperimentConfig> {
    let Value::Object(mut m) = body else {
        return Err(Error::parse(name, "experiment must be an object"));
    };
    for k in m.keys() {
        if !["agent", "env", "body", "meta"].contains(&k.as_str()) {
            return Err(Error::parse(format!("{name}.{k}"), "unknown section"));
        }
    }
    let agents = list(m.remove("agent"), &format!("{name}.agent"))?
        .into_iter()
        .enumerate()
        .map(|(i, v)| parse_agent(v, &format!("{name}.agent[{i}]"), registry))
        .collect::<Result<Vec<_>>>()?;
    let envs = list(m.remove("env"), &format!("{name}.env"))?
        .into_iter()
        .enumerate()
        .map(|(i, v)| parse_env(v, &format!("{name}.env[{i}]"), registry))
        .collect::<Result<Vec<_>>>()?;
    let body: BodySpec = match m.remove("body") {
        None => BodySpec::default(),
        Some(v) => serde_json::from_value(v).map_err(|e| Error::parse(format!("{name}.body"), e.to_string()))?,
    };
    if body.num == 0 {
        return Err(Error::validation(format!("{name}.body.num"), "must be at least 1"));
    }
    if body.product != Product::Custom && !body.adjacency.is_empty() {
        return Err(Error::validation(format!("{name}.body.adjacency"), "only a custom product takes an adjacency list"));
    }
    let meta: MetaSpec = match m.remove("meta") {
        None => MetaSpec::default(),
        Some(v) => serde_json::from_value(v).map_err(|e| Error::parse(format!("{name}.meta"), e.to_string()))?,
    };
    if meta.sessions == 0 || meta.window == 0 {
        return Err(Error::validation(format!("{name}.meta"), "sessions and window must be at least 1"));
    }
    if !crate::harness::METRICS.contains(&meta.objective.as_str()) {
        return Err(Error::validation(format!("{name}.meta.objective"), format!("unknown metric `{}`", meta.objective)));
    }
    let config = ExperimentConfig { name: name.to_string(), agents, envs, body, meta, base_dir: None };
    // pairing errors surface at composition; compatible wiring is checked here
    if let Ok(pairs) = config.wiring() {
        for (a, e) in pairs {
            check_pair(&config.agents[a], &config.envs[e])?;
        }
    }
    Ok(config)
}

fn list(v: Option<Value>, at: &str) -> Result<Vec<Value>> {
    match v {
        Some(Value::Array(items)) if !items.is_empty() => Ok(items),
        Some(Value::Array(_)) | None => Err(Error::validation(at, "needs at least one entry")),
        Some(_) => Err(Error::parse(at, "expected a list")),
    }
}

/// Reads one slot, folding inline keys into `params` and normalizing them.
fn parse_slot(v: Value, slot: &str, at: &str, registry: &Registry) -> Result<ComponentSpec> {
    let Value::Object(mut m) = v else {
        return Err(Error::parse(at, "component slot must be an object"));
    };
    let mut name = match m.remove("name") {
        Some(Value::String(s)) => s,
        _ => return Err(Error::parse(at, "component slot needs a string `name`")),
    };
    let mut params = match m.remove("params") {
        None => Params::new(),
        Some(Value::Object(p)) => p,
        Some(_) => return Err(Error::parse(format!("{at}.params"), "expected an object")),
    };
    if name == "ExternalPolicy" && slot == "policy" {
        let Some(Value::Object(mut alg)) = m.remove("algorithm") else {
            return Err(Error::parse(at, "ExternalPolicy needs an `algorithm` object"));
        };
        name = match alg.remove("name") {
            Some(Value::String(s)) => s,
            _ => return Err(Error::parse(format!("{at}.algorithm"), "needs a string `name`")),
        };
        if let Some(p) = alg.remove("params") {
            let Value::Object(p) = p else {
                return Err(Error::parse(format!("{at}.algorithm.params"), "expected an object"));
            };
            m.extend(p);
        }
        m.extend(alg);
    }
    for (k, v) in m {
        if params.insert(k.clone(), v).is_some() {
            return Err(Error::validation(format!("{at}.{k}"), "given both inline and in params"));
        }
    }
    let entry = registry.entry(&name)?;
    if entry.factory.slot() != slot {
        return Err(Error::Incompatible(format!("`{name}` fills the {} slot, not {slot}", entry.factory.slot())));
    }
    if let Some(norm) = &entry.normalize {
        params = norm(&params).map_err(|e| match e {
            Error::Validation { location, message } => Error::validation(format!("{at}.{location}"), message),
            other => other,
        })?;
    }
    Ok(ComponentSpec { name, params })
}

fn parse_agent(v: Value, at: &str, registry: &Registry) -> Result<AgentSpec> {
    let Value::Object(m) = v else {
        return Err(Error::parse(at, "agent must be an object"));
    };
    let mut name = "DialogAgent".to_string();
    let mut slots: IndexMap<&'static str, ComponentSpec> = IndexMap::new();
    for (k, v) in m {
        let key: &'static str = match k.as_str() {
            "name" => {
                name = v.as_str().ok_or_else(|| Error::parse(format!("{at}.name"), "expected a string"))?.to_string();
                continue;
            }
            "nlu" => "nlu",
            "dst" => "dst",
            "word_dst" | "word-dst" => "word_dst",
            "policy" => "policy",
            "nlg" => "nlg",
            "word_policy" | "word-policy" => "word_policy",
            "end_to_end" | "end-to-end" => "end_to_end",
            _ => return Err(Error::parse(format!("{at}.{k}"), "unknown agent slot")),
        };
        let spec = parse_slot(v, key, &format!("{at}.{key}"), registry)?;
        if slots.insert(key, spec).is_some() {
            return Err(Error::SlotConflict(format!("{at}: `{key}` given twice")));
        }
    }
    let has = |k: &str| slots.contains_key(k);
    let conflict = |a: &str, b: &str| Error::SlotConflict(format!("{at}: `{a}` excludes `{b}`"));
    if has("end_to_end") {
        if let Some(other) = slots.keys().find(|k| **k != "end_to_end") {
            return Err(conflict("end_to_end", other));
        }
    }
    if has("word_dst") {
        for other in ["nlu", "dst", "word_policy"] {
            if has(other) {
                return Err(conflict("word_dst", other));
            }
        }
    }
    if has("word_policy") {
        for other in ["policy", "nlg"] {
            if has(other) {
                return Err(conflict("word_policy", other));
            }
        }
    }
    let mut take = |k: &str| slots.shift_remove(k);
    let layout = if let Some(end_to_end) = take("end_to_end") {
        AgentLayoutSpec::EndToEnd { end_to_end }
    } else if let Some(word_dst) = take("word_dst") {
        let policy = take("policy").ok_or_else(|| Error::MissingSlot(format!("{at}: policy")))?;
        AgentLayoutSpec::WordDst { word_dst, policy, nlg: take("nlg") }
    } else if let Some(word_policy) = take("word_policy") {
        let dst = take("dst").ok_or_else(|| Error::MissingSlot(format!("{at}: dst")))?;
        AgentLayoutSpec::WordPolicy { nlu: take("nlu"), dst, word_policy }
    } else {
        let policy = take("policy")
            .ok_or_else(|| Error::MissingSlot(format!("{at}: policy, word_policy or end_to_end")))?;
        let dst = take("dst").ok_or_else(|| Error::MissingSlot(format!("{at}: dst or word_dst")))?;
        AgentLayoutSpec::Pipeline { nlu: take("nlu"), dst, policy, nlg: take("nlg") }
    };
    if let AgentLayoutSpec::Pipeline { nlg: Some(g), .. } | AgentLayoutSpec::WordDst { nlg: Some(g), .. } = &layout {
        if g.params.get("is_user") == Some(&Value::Bool(true)) {
            return Err(Error::Incompatible(format!("{at}: the system NLG must not be `is_user`")));
        }
    }
    Ok(AgentSpec { name, layout })
}

fn parse_env(v: Value, at: &str, registry: &Registry) -> Result<EnvConfig> {
    let Value::Object(mut m) = v else {
        return Err(Error::parse(at, "env must be an object"));
    };
    let name = match m.remove("name") {
        None => "env".to_string(),
        Some(Value::String(s)) => s,
        Some(_) => return Err(Error::parse(format!("{at}.name"), "expected a string")),
    };
    if m.contains_key("user") {
        return Err(Error::parse(format!("{at}.user"), "user settings belong in the policy slot's params"));
    }
    let nlu = m.remove("nlu").map(|v| parse_slot(v, "nlu", &format!("{at}.nlu"), registry)).transpose()?;
    let nlg_raw = m.remove("nlg").map(|v| match v {
        Value::Object(mut o) => {
            if !o.contains_key("is_user") && !o.get("params").is_some_and(|p| p.get("is_user").is_some()) {
                o.insert("is_user".into(), Value::Bool(true));
            }
            Value::Object(o)
        }
        other => other,
    });
    let mut nlg = nlg_raw.map(|v| parse_slot(v, "nlg", &format!("{at}.nlg"), registry)).transpose()?;
    let policy_raw = match (m.remove("policy"), m.remove("user_policy")) {
        (Some(_), Some(_)) => return Err(Error::SlotConflict(format!("{at}: `policy` and `user_policy`"))),
        (a, b) => a.or(b).unwrap_or_else(|| json!({"name": "UserPolicyAgenda"})),
    };
    let user_policy = parse_slot(policy_raw, "user_policy", &format!("{at}.policy"), registry)?;
    let explicit_kind = m.contains_key("kind");
    let mut spec: EnvSpec =
        serde_json::from_value(Value::Object(m)).map_err(|e| Error::parse(at, e.to_string()))?;
    let mut nlu = nlu;
    if !explicit_kind {
        spec.kind = match (nlu.is_some(), nlg.is_some()) {
            (true, true) => EnvKind::SimulatedText,
            (false, false) => EnvKind::SimulatedActs,
            _ => return Err(Error::Incompatible(format!("{at}: a text environment needs both nlu and nlg"))),
        };
    }
    match spec.kind.channel() {
        crate::env::Channel::Text => {
            nlu.get_or_insert_with(|| ComponentSpec::named("PatternNLU"));
            if nlg.is_none() {
                let mut c = ComponentSpec::named("TemplateNLG");
                c.params.insert("is_user".into(), Value::Bool(true));
                nlg = Some(c);
            }
        }
        crate::env::Channel::Acts => {
            if nlu.is_some() || nlg.is_some() {
                return Err(Error::Incompatible(format!("{at}: an act-level environment takes no nlu or nlg")));
            }
        }
    }
    if let Some(g) = &nlg {
        if g.params.get("is_user") != Some(&Value::Bool(true)) {
            return Err(Error::Incompatible(format!("{at}: the user-side NLG must be `is_user`")));
        }
    }
    spec.user = match registry.lookup(&user_policy.name)? {
        Factory::UserPolicy(build) => build(&user_policy.params)?,
        _ => unreachable!("slot kind checked in parse_slot"),
    };
    spec.validate()?;
    Ok(EnvConfig { name, nlu, user_policy, nlg, spec })
}

#[cfg(test)]
mod tests;
