//! Report files.
//!
//! ```text
//! <root>/<experiment>/experiment.json, experiment.csv
//! <root>/<experiment>/trial_<k>/trial.json, sessions.csv
//! <root>/<experiment>/trial_<k>/session_<i>/report.json, episodes.csv, transcripts.jsonl, meta.json
//! ```
//!
//! Everything but `meta.json` is a pure function of the report. `meta.json`
//! holds the creation time and is written once.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::{ExperimentReport, SessionReport, TrialReport, METRICS};
use crate::error::{Error, Result};

fn write(path: &Path, bytes: &[u8]) -> Result<PathBuf> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    write(path, text.as_bytes())
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::validation("csv", e.to_string());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::validation("csv", e.to_string()))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes one session directory; returns the paths written.
pub fn emit_session(dir: &Path, report: &SessionReport) -> Result<Vec<PathBuf>> {
    let mut paths = vec![write_json(&dir.join("report.json"), report)?];

    let header: Vec<String> = [
        "body", "agent", "env", "episode", "seed", "success", "turns", "return", "booked", "tracked_turns",
        "joint_hits", "slot_agreement_sum",
    ]
    .map(String::from)
    .to_vec();
    let mut rows = Vec::new();
    let mut lines = String::new();
    for b in &report.bodies {
        for r in &b.records {
            rows.push(vec![
                b.body.to_string(),
                b.agent.clone(),
                b.env.clone(),
                r.episode.to_string(),
                r.seed.to_string(),
                r.success.to_string(),
                r.turns.to_string(),
                r.total_return.to_string(),
                r.booked.map(|x| x.to_string()).unwrap_or_default(),
                r.tracked_turns.to_string(),
                r.joint_hits.to_string(),
                r.slot_agreement_sum.to_string(),
            ]);
        }
        for (i, ep) in b.transcripts.iter().enumerate() {
            let line = json!({"body": b.body, "episode": i, "dialog": ep});
            lines.push_str(&line.to_string());
            lines.push('\n');
        }
        if let Some(ckpt) = &b.checkpoint {
            let path = dir.join(format!("policy_body{}.json", b.body));
            ckpt.save(&path)?;
            paths.push(path);
        }
    }
    paths.push(write(&dir.join("episodes.csv"), &csv_bytes(&header, &rows)?)?);
    paths.push(write(&dir.join("transcripts.jsonl"), lines.as_bytes())?);

    let meta = dir.join("meta.json");
    if !meta.exists() {
        let sidecar = json!({
            "created": chrono::Utc::now().to_rfc3339(),
            "host": std::env::var("HOSTNAME").unwrap_or_default(),
            "version": env!("CARGO_PKG_VERSION"),
        });
        write_json(&meta, &sidecar)?;
    }
    paths.push(meta);
    Ok(paths)
}

/// Writes a trial directory with its sessions.
pub fn emit_trial(dir: &Path, report: &TrialReport) -> Result<Vec<PathBuf>> {
    let mut paths = vec![write_json(&dir.join("trial.json"), report)?];
    let mut header = vec!["session".to_string(), "seed".to_string()];
    header.extend(METRICS.iter().map(|m| m.to_string()));
    let rows: Vec<Vec<String>> = report
        .sessions
        .iter()
        .map(|s| {
            let mut row = vec![s.session.to_string(), s.seed.to_string()];
            row.extend(METRICS.iter().map(|m| fmt_opt(s.metric(m))));
            row
        })
        .collect();
    paths.push(write(&dir.join("sessions.csv"), &csv_bytes(&header, &rows)?)?);
    for s in &report.sessions {
        paths.extend(emit_session(&dir.join(format!("session_{}", s.session)), s)?);
    }
    Ok(paths)
}

/// Writes `<root>/<experiment>/...`; re-emitting the same report rewrites identical bytes.
pub fn emit_experiment(root: &Path, report: &ExperimentReport) -> Result<Vec<PathBuf>> {
    let dir = root.join(&report.experiment);
    let mut paths = vec![write_json(&dir.join("experiment.json"), report)?];
    let keys: Vec<&String> = report.search_space.keys().collect();
    let mut header = vec!["trial".to_string()];
    header.extend(keys.iter().map(|k| k.to_string()));
    header.extend(METRICS.iter().map(|m| m.to_string()));
    header.push("failure".into());
    let rows: Vec<Vec<String>> = report
        .trials
        .iter()
        .map(|t| {
            let mut row = vec![t.trial.to_string()];
            row.extend(keys.iter().map(|k| t.params.get(*k).map(|v| v.to_string()).unwrap_or_default()));
            row.extend(METRICS.iter().map(|m| fmt_opt(t.stats.mean.get(*m).copied())));
            row.push(t.failure.clone().unwrap_or_default());
            row
        })
        .collect();
    paths.push(write(&dir.join("experiment.csv"), &csv_bytes(&header, &rows)?)?);
    for t in &report.trials {
        paths.extend(emit_trial(&dir.join(format!("trial_{}", t.trial)), t)?);
    }
    Ok(paths)
}

/// Reads `experiment.json` from an experiment directory.
pub fn load_experiment(dir: &Path) -> Result<ExperimentReport> {
    let path = dir.join("experiment.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::from_json(path.display(), e))
}

/// Plain-text table of trial means.
pub fn summarize(report: &ExperimentReport) -> String {
    let mut out = format!("experiment {} (objective {})\n", report.experiment, report.objective);
    out.push_str(&format!("{:<6}", "trial"));
    for m in METRICS {
        out.push_str(&format!(" {:>15}", m));
    }
    out.push('\n');
    for t in &report.trials {
        let mark = if Some(t.trial) == report.best_trial { "*" } else { " " };
        out.push_str(&format!("{:<5}{}", t.trial, mark));
        for m in METRICS {
            match t.stats.mean.get(m) {
                Some(v) => out.push_str(&format!(" {:>15.4}", v)),
                None => out.push_str(&format!(" {:>15}", "-")),
            }
        }
        if !t.params.is_empty() {
            let params: Vec<String> = t.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            out.push_str(&format!("  {}", params.join(" ")));
        }
        if let Some(f) = &t.failure {
            out.push_str(&format!("  FAILED: {f}"));
        }
        out.push('\n');
    }
    out
}

/// Side-by-side best-trial metrics of several labelled experiments, as CSV.
pub fn compare(runs: &[(&str, &ExperimentReport)]) -> Result<String> {
    let mut header = vec!["label".to_string(), "experiment".to_string(), "trial".to_string()];
    header.extend(METRICS.iter().map(|m| m.to_string()));
    let rows: Vec<Vec<String>> = runs
        .iter()
        .map(|(label, r)| {
            let k = r.best_trial.unwrap_or(0);
            let mut row = vec![label.to_string(), r.experiment.clone(), k.to_string()];
            let mean = r.trials.get(k).map(|t| &t.stats.mean);
            row.extend(METRICS.iter().map(|m| fmt_opt(mean.and_then(|s| s.get(*m).copied()))));
            row
        })
        .collect();
    let bytes = csv_bytes(&header, &rows)?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

/// Writes [`compare`] to `path`.
pub fn emit_comparison(path: &Path, runs: &[(&str, &ExperimentReport)]) -> Result<PathBuf> {
    write(path, compare(runs)?.as_bytes())
}
