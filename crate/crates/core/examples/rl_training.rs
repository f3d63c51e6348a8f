//! Trains a linear Q-learning policy against the act-level simulator and
//! prints the success rate per window.
//!
//! `cargo run --release --example rl_training -- [config] [seed]`

use dialoglab::config::load_config;
use dialoglab::harness::run_session;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/rl_qlearning.json").into());
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let config = load_config(&path)?;

    let start = std::time::Instant::now();
    let session = run_session(&config, 0, seed)?;
    let body = &session.bodies[0];
    let window = config.meta.window;
    for (i, rate) in body.windows.iter().enumerate().step_by(10) {
        println!("episodes {:>6}..{:<6} success {:.3}", i * window, (i + 1) * window, rate);
    }
    let n = body.episodes as usize;
    println!("first 200: {:.3}", body.success_between(0, 200));
    println!("last 2000: {:.3}", body.success_between(n.saturating_sub(2000), n));
    println!("{} episodes in {:.1?}", n, start.elapsed());
    Ok(())
}
