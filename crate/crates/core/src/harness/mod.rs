//! Session, trial and experiment control with seeded determinism.
//!
//! A session runs every body of a fresh composition for a fixed number of
//! episodes. A trial runs `meta.sessions` sessions seeded `seed, seed + 1, ...`
//! and averages them. An experiment runs one trial per point of the search grid.

mod report;

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use report::{compare, emit_comparison, emit_experiment, emit_session, emit_trial, load_experiment, summarize};

use crate::config::{compose, Body, BodyEnv, ExperimentConfig, MetaSpec, Registry};
use crate::dialog::{ActType, Episode, Speaker};
use crate::domain::BOOKING_REF;
use crate::dst;
use crate::error::{Error, Result};
use crate::policy::Checkpoint;
use crate::world::World;

/// Metric names every report carries, in report order.
pub const METRICS: [&str; 6] = ["success_rate", "avg_return", "avg_turns", "book_rate", "joint_accuracy", "slot_accuracy"];

/// Seed of episode `index` in a session seeded with `seed`.
pub fn episode_seed(seed: u64, index: u64) -> u64 {
    use crate::config::body_seed;
    body_seed(seed.rotate_left(17) ^ 0x5eed, index as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: u64,
    pub seed: u64,
    pub success: bool,
    pub turns: usize,
    #[serde(rename = "return")]
    pub total_return: f64,
    /// Whether every requested booking got a reference; unset without bookings.
    pub booked: Option<bool>,
    /// Turns on which the agent exposed a belief state.
    pub tracked_turns: usize,
    pub joint_hits: usize,
    pub slot_agreement_sum: f64,
}

/// One body's results for one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyReport {
    pub body: usize,
    pub agent: String,
    pub agent_index: usize,
    pub env: String,
    pub env_index: usize,
    pub copy: usize,
    pub episodes: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub avg_return: f64,
    pub avg_turns: f64,
    /// Booked episodes over episodes whose goal asked for a booking.
    pub book_rate: f64,
    pub booking_episodes: u64,
    /// Per-turn agreement of the agent's belief with the oracle state, all slots at once.
    pub joint_accuracy: Option<f64>,
    /// Per-turn mean fraction of slots agreeing with the oracle state.
    pub slot_accuracy: Option<f64>,
    /// Success rate over consecutive windows of `meta.window` episodes.
    pub windows: Vec<f64>,
    #[serde(skip)]
    pub records: Vec<EpisodeRecord>,
    #[serde(skip)]
    pub transcripts: Vec<Episode>,
    #[serde(skip)]
    pub checkpoint: Option<Checkpoint>,
}

impl BodyReport {
    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "success_rate" => Some(self.success_rate),
            "avg_return" => Some(self.avg_return),
            "avg_turns" => Some(self.avg_turns),
            "book_rate" => Some(self.book_rate),
            "joint_accuracy" => self.joint_accuracy,
            "slot_accuracy" => self.slot_accuracy,
            _ => None,
        }
    }

    /// Success rate over episodes `[from, to)`.
    pub fn success_between(&self, from: usize, to: usize) -> f64 {
        let slice = &self.records[from.min(self.records.len())..to.min(self.records.len())];
        if slice.is_empty() {
            return 0.0;
        }
        slice.iter().filter(|r| r.success).count() as f64 / slice.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub session: usize,
    pub seed: u64,
    pub bodies: Vec<BodyReport>,
}

impl SessionReport {
    /// Mean of a metric over the bodies that report it.
    pub fn metric(&self, name: &str) -> Option<f64> {
        mean(self.bodies.iter().filter_map(|b| b.metric(name)))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        None
    } else {
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }
}

fn std_dev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let m = values.iter().sum::<f64>() / values.len() as f64;
    (values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Per-metric mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Stats {
    pub mean: IndexMap<String, f64>,
    pub std: IndexMap<String, f64>,
}

impl Stats {
    fn over<'a>(values: impl Fn(&str) -> Vec<f64> + 'a) -> Stats {
        let mut s = Stats::default();
        for m in METRICS {
            let v = values(m);
            if !v.is_empty() {
                s.mean.insert(m.to_string(), v.iter().sum::<f64>() / v.len() as f64);
                s.std.insert(m.to_string(), std_dev(&v));
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodySummary {
    pub agent: String,
    pub env: String,
    #[serde(flatten)]
    pub stats: Stats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial: usize,
    pub params: IndexMap<String, Value>,
    pub seeds: Vec<u64>,
    /// Over sessions, of each session's body-averaged metric.
    #[serde(flatten)]
    pub stats: Stats,
    /// Over sessions, per body position.
    pub bodies: Vec<BodySummary>,
    /// Set when a session failed; the sessions before it are kept.
    pub failure: Option<String>,
    pub sessions: Vec<SessionReport>,
}

impl TrialReport {
    pub fn objective(&self, name: &str) -> Option<f64> {
        if self.failure.is_some() {
            return None;
        }
        self.stats.mean.get(name).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub objective: String,
    pub search_space: IndexMap<String, Vec<Value>>,
    pub best_trial: Option<usize>,
    pub best_value: Option<f64>,
    pub trials: Vec<TrialReport>,
}

/// Oracle state, folded from the user's acts before channel noise.
struct Tracking {
    oracle: crate::dialog::BeliefState,
    tracked: usize,
    joint: usize,
    slot_sum: f64,
}

/// Runs one body for `episodes` episodes.
pub fn run_body(body: &mut Body, world: &World, meta: &MetaSpec, episodes: u64, seed: u64) -> Result<BodyReport> {
    let id = body_identity(body);
    let Body { agent, env, stats, .. } = body;
    let env = match env {
        BodyEnv::Simulated(e) => e,
        BodyEnv::Human(_) => {
            return Err(Error::Incompatible("human environments run through the chat service".into()));
        }
    };
    let trains = meta.train && agent.is_trainable();
    agent.set_training(trains);
    let schemas = &world.schemas;
    let mut records = Vec::with_capacity(episodes as usize);
    let mut transcripts = Vec::new();
    for i in 0..episodes {
        let es = episode_seed(seed, i);
        let mut turn = 0usize;
        let fail = |turn: usize| move |e: Error| Error::ComponentFailure { episode: i as usize, turn, source: Box::new(e) };
        let mut obs = env.reset(es).map_err(fail(0))?;
        agent.begin_episode(i as usize, episodes as usize);
        let mut t = Tracking { oracle: dst::init_state(schemas), tracked: 0, joint: 0, slot_sum: 0.0 };
        loop {
            t.oracle = dst::update(schemas, &t.oracle, env.true_user_acts()).map_err(fail(turn))?;
            let out = agent.respond(&obs.payload).map_err(fail(turn))?;
            if let Some(b) = agent.belief() {
                let s = dst::slot_agreement(schemas, b, &t.oracle);
                t.tracked += 1;
                t.slot_sum += s;
                if s == 1.0 {
                    t.joint += 1;
                }
            }
            obs = env.step(&out).map_err(fail(turn))?;
            agent.observe(obs.reward, obs.done).map_err(fail(turn))?;
            turn += 1;
            if obs.done {
                break;
            }
        }
        let ep = env.episode();
        let record = EpisodeRecord {
            episode: i,
            seed: es,
            success: ep.success,
            turns: ep.system_turns(),
            total_return: ep.total_return(),
            booked: booked(ep),
            tracked_turns: t.tracked,
            joint_hits: t.joint,
            slot_agreement_sum: t.slot_sum,
        };
        stats.episodes += 1;
        stats.successes += record.success as u64;
        stats.total_return += record.total_return;
        records.push(record);
        if meta.transcripts {
            transcripts.push(ep.clone());
        }
    }
    stats.done = true;
    let checkpoint = if agent.is_trainable() { agent.checkpoint() } else { None };
    Ok(summarize_body(id, records, transcripts, checkpoint, meta.window))
}

struct Identity {
    body: usize,
    agent: String,
    agent_index: usize,
    env: String,
    env_index: usize,
    copy: usize,
}

fn body_identity(body: &Body) -> Identity {
    Identity {
        body: body.index,
        agent: body.agent.name.clone(),
        agent_index: body.agent_index,
        env: body.env_name.clone(),
        env_index: body.env_index,
        copy: body.copy,
    }
}

fn booked(ep: &Episode) -> Option<bool> {
    let wanted: Vec<&String> = ep.goal.sections.iter().filter(|(_, s)| s.book.is_some()).map(|(d, _)| d).collect();
    if wanted.is_empty() {
        return None;
    }
    Some(wanted.iter().all(|d| {
        ep.turns.iter().filter(|t| t.speaker == Speaker::System).any(|t| {
            t.acts.iter().any(|a| a.act_type == ActType::Book && &a.domain == *d && a.slot == BOOKING_REF)
        })
    }))
}

fn summarize_body(
    id: Identity,
    records: Vec<EpisodeRecord>,
    transcripts: Vec<Episode>,
    checkpoint: Option<Checkpoint>,
    window: usize,
) -> BodyReport {
    let n = records.len() as f64;
    let successes = records.iter().filter(|r| r.success).count() as u64;
    let ratio = |x: f64| if n == 0.0 { 0.0 } else { x / n };
    let booking: Vec<bool> = records.iter().filter_map(|r| r.booked).collect();
    let tracked: usize = records.iter().map(|r| r.tracked_turns).sum();
    let per_turn = |x: f64| if tracked == 0 { None } else { Some(x / tracked as f64) };
    let windows = records
        .chunks(window.max(1))
        .map(|c| c.iter().filter(|r| r.success).count() as f64 / c.len() as f64)
        .collect();
    BodyReport {
        body: id.body,
        agent: id.agent,
        agent_index: id.agent_index,
        env: id.env,
        env_index: id.env_index,
        copy: id.copy,
        episodes: records.len() as u64,
        successes,
        success_rate: ratio(successes as f64),
        avg_return: ratio(records.iter().map(|r| r.total_return).sum()),
        avg_turns: ratio(records.iter().map(|r| r.turns as f64).sum()),
        book_rate: if booking.is_empty() {
            0.0
        } else {
            booking.iter().filter(|b| **b).count() as f64 / booking.len() as f64
        },
        booking_episodes: booking.len() as u64,
        joint_accuracy: per_turn(records.iter().map(|r| r.joint_hits as f64).sum()),
        slot_accuracy: per_turn(records.iter().map(|r| r.slot_agreement_sum).sum()),
        windows,
        records,
        transcripts,
        checkpoint,
    }
}

/// Composes `config` afresh and runs every body; `session` is the index within its trial.
pub fn run_session(config: &ExperimentConfig, session: usize, seed: u64) -> Result<SessionReport> {
    let mut comp = compose(config, seed)?;
    let mut bodies = Vec::with_capacity(comp.bodies.len());
    for body in &mut comp.bodies {
        let episodes = config.episodes_for(body.env_index);
        bodies.push(run_body(body, &comp.world, &config.meta, episodes, seed)?);
    }
    Ok(SessionReport { session, seed, bodies })
}

fn trains(config: &ExperimentConfig) -> Result<bool> {
    if !config.meta.train {
        return Ok(false);
    }
    let comp = compose(config, 0)?;
    Ok(comp.bodies.iter().any(|b| b.agent.is_trainable()))
}

/// Runs `meta.sessions` sessions seeded `meta.seed + i` and averages them.
pub fn run_trial(config: &ExperimentConfig, trial: usize, params: IndexMap<String, Value>) -> Result<TrialReport> {
    let n = config.meta.sessions;
    let master = config.meta.seed;
    let seeds: Vec<u64> = (0..n as u64).map(|i| master.wrapping_add(i)).collect();
    let run = |i: usize| run_session(config, i, seeds[i]).map_err(|e| Error::SessionFailure { session: i, source: Box::new(e) });
    // training sessions stay serialized
    let results: Vec<Result<SessionReport>> = if config.meta.parallel && !trains(config)? {
        (0..n).into_par_iter().map(run).collect()
    } else {
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let r = run(i);
            let failed = r.is_err();
            out.push(r);
            if failed {
                break;
            }
        }
        out
    };
    let mut sessions = Vec::with_capacity(n);
    let mut failure = None;
    for r in results {
        match r {
            Ok(s) => sessions.push(s),
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        }
    }
    Ok(aggregate(trial, params, seeds, sessions, failure))
}

/// Trial statistics from session reports in session order.
pub fn aggregate(
    trial: usize,
    params: IndexMap<String, Value>,
    seeds: Vec<u64>,
    sessions: Vec<SessionReport>,
    failure: Option<String>,
) -> TrialReport {
    let stats = Stats::over(|m| sessions.iter().filter_map(|s| s.metric(m)).collect());
    let n_bodies = sessions.first().map_or(0, |s| s.bodies.len());
    let bodies = (0..n_bodies)
        .map(|b| BodySummary {
            agent: sessions[0].bodies[b].agent.clone(),
            env: sessions[0].bodies[b].env.clone(),
            stats: Stats::over(|m| sessions.iter().filter_map(|s| s.bodies.get(b).and_then(|r| r.metric(m))).collect()),
        })
        .collect();
    TrialReport { trial, params, seeds, stats, bodies, failure, sessions }
}

/// Grid points of the search space, last dimension fastest.
pub fn grid(search: &IndexMap<String, Vec<Value>>) -> Result<Vec<IndexMap<String, Value>>> {
    if search.is_empty() || search.values().any(Vec::is_empty) {
        return Err(Error::EmptySearchSpace);
    }
    let mut points = vec![IndexMap::new()];
    for (key, values) in search {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.insert(key.clone(), v.clone());
                    q
                })
            })
            .collect();
    }
    Ok(points)
}

/// `config` with each JSON pointer of `point` overwritten.
pub fn apply_point(config: &ExperimentConfig, point: &IndexMap<String, Value>) -> Result<ExperimentConfig> {
    let mut body = config.body_value();
    for (ptr, v) in point {
        let slot = body
            .pointer_mut(ptr)
            .ok_or_else(|| Error::validation(format!("meta.search.{ptr}"), "pointer resolves to nothing"))?;
        *slot = v.clone();
    }
    let mut c = crate::config::parse_experiment(&config.name, body, &Registry::builtin())?;
    c.base_dir = config.base_dir.clone();
    Ok(c)
}

/// Index and value of the best completed trial; ties go to the lowest index.
pub fn best_trial(trials: &[TrialReport], objective: &str) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, t) in trials.iter().enumerate() {
        if let Some(v) = t.objective(objective) {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
    }
    best
}

/// One trial per grid point of `meta.search`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let search: IndexMap<String, Vec<Value>> =
        config.meta.search.iter().map(|(k, d)| (k.clone(), d.values())).collect();
    let points = grid(&search)?;
    let mut trials = Vec::with_capacity(points.len());
    for (k, point) in points.into_iter().enumerate() {
        let c = apply_point(config, &point)?;
        trials.push(run_trial(&c, k, point)?);
    }
    Ok(finish(config, search, trials))
}

fn finish(config: &ExperimentConfig, search_space: IndexMap<String, Vec<Value>>, trials: Vec<TrialReport>) -> ExperimentReport {
    let objective = config.meta.objective.clone();
    let best = best_trial(&trials, &objective);
    ExperimentReport {
        experiment: config.name.clone(),
        objective,
        search_space,
        best_trial: best.map(|b| b.0),
        best_value: best.map(|b| b.1),
        trials,
    }
}

/// An experiment when the config has a search space, otherwise a single trial.
pub fn run_config(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.meta.search.is_empty() {
        let trial = run_trial(config, 0, IndexMap::new())?;
        Ok(finish(config, IndexMap::new(), vec![trial]))
    } else {
        run_experiment(config)
    }
}

#[cfg(test)]
mod tests;
