//! Runs the same config twice, serially and in parallel, and compares the reports byte for byte.

use dialoglab::config::parse_config;
use dialoglab::harness::{emit_experiment, run_config};

fn main() -> anyhow::Result<()> {
    let mut config = parse_config(include_str!("configs/rule_acts.json"))?;
    config.meta.episodes = Some(200);
    config.meta.sessions = 4;
    config.meta.transcripts = true;

    let parallel = run_config(&config)?;
    config.meta.parallel = false;
    let serial = run_config(&config)?;

    let a = tempfile::tempdir()?;
    let b = tempfile::tempdir()?;
    let pa = emit_experiment(a.path(), &parallel)?;
    let pb = emit_experiment(b.path(), &serial)?;
    let mut same = 0;
    for (x, y) in pa.iter().zip(&pb) {
        if x.ends_with("meta.json") {
            continue;
        }
        if std::fs::read(x)? == std::fs::read(y)? {
            same += 1;
        } else {
            println!("differs: {}", x.strip_prefix(a.path())?.display());
        }
    }
    println!("{same} report files identical; trial seeds {:?}", parallel.trials[0].seeds);
    println!("success {:.3}", parallel.trials[0].stats.mean["success_rate"]);
    Ok(())
}
