use std::sync::Arc;

use super::*;
use crate::agent::Policy;
use crate::config::{compose_with, parse_config, parse_config_with, Factory};
use crate::dialog::{BeliefState, DialogActSet};

const RULE: &str = include_str!("../../examples/configs/rule_acts.json");

fn rule_config(episodes: u64, sessions: usize) -> ExperimentConfig {
    let mut c = parse_config(RULE).unwrap();
    c.meta.episodes = Some(episodes);
    c.meta.sessions = sessions;
    c
}

fn record(i: u64, success: bool) -> EpisodeRecord {
    EpisodeRecord {
        episode: i,
        seed: i,
        success,
        turns: 3,
        total_return: 0.0,
        booked: None,
        tracked_turns: 0,
        joint_hits: 0,
        slot_agreement_sum: 0.0,
    }
}

fn identity() -> Identity {
    Identity { body: 0, agent: "a".into(), agent_index: 0, env: "e".into(), env_index: 0, copy: 0 }
}

fn session_with_rate(i: usize, rate: f64) -> SessionReport {
    let mut b = summarize_body(identity(), vec![], vec![], None, 10);
    b.success_rate = rate;
    SessionReport { session: i, seed: i as u64, bodies: vec![b] }
}

#[test]
fn success_rate_is_a_ratio() {
    let records = (0..10).map(|i| record(i, i < 7)).collect();
    let b = summarize_body(identity(), records, vec![], None, 4);
    assert_eq!(b.success_rate, 0.7);
    assert_eq!(b.windows, vec![1.0, 0.75, 0.0]);
    assert_eq!(b.joint_accuracy, None);
}

#[test]
fn trial_means_are_session_means() {
    let t = aggregate(0, IndexMap::new(), vec![0, 1], vec![session_with_rate(0, 0.5), session_with_rate(1, 0.7)], None);
    assert_eq!(t.stats.mean["success_rate"], (0.5 + 0.7) / 2.0);
    assert_eq!(t.stats.mean["success_rate"], 0.6);
    assert!((t.stats.std["success_rate"] - 0.1).abs() < 1e-12);
    let one = aggregate(0, IndexMap::new(), vec![0], vec![session_with_rate(0, 0.3)], None);
    assert_eq!(one.stats.mean["success_rate"], 0.3);
    assert_eq!(one.stats.std["success_rate"], 0.0);
}

#[test]
fn trial_seeds_count_up_from_the_master_seed() {
    let mut c = rule_config(3, 4);
    c.meta.seed = 100;
    let t = run_trial(&c, 0, IndexMap::new()).unwrap();
    assert_eq!(t.seeds, vec![100, 101, 102, 103]);
    let seeds: Vec<u64> = t.sessions.iter().map(|s| s.seed).collect();
    assert_eq!(seeds, t.seeds);
}

#[test]
fn rule_closed_loop_succeeds() {
    let s = run_session(&rule_config(100, 1), 0, 3).unwrap();
    let b = &s.bodies[0];
    assert_eq!(b.episodes, 100);
    assert_eq!(b.success_rate, 1.0);
    assert_eq!(b.joint_accuracy, Some(1.0));
    assert!(b.avg_turns <= 40.0);
}

#[test]
fn parallel_and_serial_trials_agree() {
    let mut c = rule_config(20, 3);
    c.meta.transcripts = true;
    let par = run_trial(&c, 0, IndexMap::new()).unwrap();
    c.meta.parallel = false;
    let ser = run_trial(&c, 0, IndexMap::new()).unwrap();
    assert_eq!(par, ser);
}

#[test]
fn grid_size_and_order() {
    let mut s = IndexMap::new();
    s.insert("/a".to_string(), vec![json(1), json(2), json(3)]);
    s.insert("/b".to_string(), vec![json(0), json(1)]);
    let g = grid(&s).unwrap();
    assert_eq!(g.len(), 6);
    assert_eq!(g[1]["/a"], json(1));
    assert_eq!(g[1]["/b"], json(1));
    assert!(matches!(grid(&IndexMap::new()), Err(Error::EmptySearchSpace)));
    s.insert("/c".to_string(), vec![]);
    assert!(matches!(grid(&s), Err(Error::EmptySearchSpace)));
}

fn json(x: i64) -> Value {
    Value::from(x)
}

#[test]
fn best_trial_ties_go_low_and_failures_are_skipped() {
    let t = |k: usize, rate: f64| aggregate(k, IndexMap::new(), vec![0], vec![session_with_rate(0, rate)], None);
    let trials = vec![t(0, 0.5), t(1, 0.5), t(2, 0.5)];
    assert_eq!(best_trial(&trials, "success_rate"), Some((0, 0.5)));
    let mut trials = vec![t(0, 0.2), t(1, 0.9), t(2, 0.4)];
    assert_eq!(best_trial(&trials, "success_rate"), Some((1, 0.9)));
    trials[1].failure = Some("boom".into());
    assert_eq!(best_trial(&trials, "success_rate"), Some((2, 0.4)));
}

#[test]
fn experiment_applies_the_search_points() {
    let mut c = parse_config(include_str!("../../examples/configs/grid_search.json")).unwrap();
    c.meta.episodes = Some(5);
    let r = run_experiment(&c).unwrap();
    assert_eq!(r.trials.len(), 6);
    assert_eq!(r.trials[5].params["/env/0/noise_rate"], Value::from(0.2));
    let rescan = r
        .trials
        .iter()
        .map(|t| t.stats.mean["success_rate"])
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(r.best_value, Some(rescan));
    let first = r.trials.iter().position(|t| t.stats.mean["success_rate"] == rescan);
    assert_eq!(r.best_trial, first);
}

#[test]
fn emission_is_idempotent_and_row_counts_match() {
    let mut c = rule_config(12, 2);
    c.meta.transcripts = true;
    let r = run_config(&c).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = emit_experiment(dir.path(), &r).unwrap();
    let read = |p: &std::path::PathBuf| std::fs::read(p).unwrap();
    let first: Vec<Vec<u8>> = paths.iter().map(read).collect();
    let again = emit_experiment(dir.path(), &r).unwrap();
    assert_eq!(paths, again);
    assert_eq!(first, again.iter().map(read).collect::<Vec<_>>());

    let session = dir.path().join("rule_acts/trial_0/session_1");
    for f in ["report.json", "episodes.csv", "transcripts.jsonl", "meta.json"] {
        assert!(session.join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(session.join("episodes.csv")).unwrap();
    assert_eq!(csv.lines().count(), 12 + 1);
    let jsonl = std::fs::read_to_string(session.join("transcripts.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 12);
    let loaded = load_experiment(&dir.path().join("rule_acts")).unwrap();
    assert_eq!(loaded.trials[0].stats, r.trials[0].stats);
}

#[test]
fn human_bodies_do_not_run_in_the_harness() {
    let c = parse_config(include_str!("../../examples/configs/human_eval.json")).unwrap();
    assert!(matches!(run_session(&c, 0, 0), Err(Error::Incompatible(_))));
}

struct Broken;

impl Policy for Broken {
    fn decide(&mut self, _state: &BeliefState) -> Result<DialogActSet> {
        Err(Error::EmptyActSet)
    }
}

#[test]
fn component_errors_carry_their_location() {
    let mut registry = Registry::builtin();
    registry.register("Broken", Factory::Policy(Arc::new(|_| Ok(Box::new(Broken) as _)))).unwrap();
    let text = RULE.replace("\"RulePolicy\"", "\"Broken\"");
    let c = parse_config_with(&text, &registry).unwrap();
    let mut comp = compose_with(&c, &registry, 0).unwrap();
    let world = comp.world.clone();
    let err = run_body(&mut comp.bodies[0], &world, &c.meta, 3, 0).unwrap_err();
    assert!(matches!(err, Error::ComponentFailure { episode: 0, turn: 0, .. }));
}
