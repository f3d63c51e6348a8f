use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use dialoglab::config::{load_config, load_configs, ExperimentConfig};
use dialoglab::harness::{emit_experiment, load_experiment, run_config, summarize};
use dialoglab::service::{serve, ChatService, Rating};

#[derive(Parser)]
#[command(name = "dialoglab", version, about = "Config-driven task-oriented dialog experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its reports.
    Run {
        config: PathBuf,
        /// Overrides meta.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides meta.episodes for every env.
        #[arg(long)]
        episodes: Option<u64>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Print the trial table of a written experiment.
    Report { dir: PathBuf },
    /// Serve human-evaluation chat sessions over HTTP.
    Serve {
        /// A config file, or a directory of them.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "runs")]
        runs: PathBuf,
    },
    /// Chat with a config's agent in the terminal.
    Chat {
        config: PathBuf,
        #[arg(long, default_value = "runs")]
        runs: PathBuf,
    },
}

fn configs_at(path: &Path) -> anyhow::Result<Vec<ExperimentConfig>> {
    if !path.is_dir() {
        return Ok(load_configs(path)?);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let mut all = Vec::new();
    for f in files {
        all.extend(load_configs(&f).with_context(|| format!("loading {}", f.display()))?);
    }
    Ok(all)
}

fn chat(config: &Path, runs: PathBuf) -> anyhow::Result<()> {
    let rt = tokio::runtime::Runtime::new()?;
    let svc = ChatService::new(configs_at(config)?, runs)?;
    let Some(name) = svc.config_names().into_iter().next() else {
        bail!("no config in {} has a text-speaking agent", config.display());
    };
    let created = svc.create_session(&name)?;
    println!("{}\n", created.instructions);
    print!("system: {}\n> ", created.prompt);
    std::io::stdout().flush()?;
    let stdin = std::io::stdin();
    let mut lines = stdin.lock().lines();
    let mut done = false;
    for line in lines.by_ref() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = rt.block_on(svc.post_message(&created.id, line.trim()))?;
        println!("system: {}", reply.reply);
        if reply.done {
            done = true;
            break;
        }
        print!("> ");
        std::io::stdout().flush()?;
    }
    if !done {
        return Ok(());
    }
    print!("\nwas your task solved? [y/n] ");
    std::io::stdout().flush()?;
    let Some(answer) = lines.next().transpose()? else { return Ok(()) };
    print!("stars 1-5: ");
    std::io::stdout().flush()?;
    let Some(stars) = lines.next().transpose()? else { return Ok(()) };
    let rating = Rating {
        success: answer.trim().starts_with(['y', 'Y']),
        stars: stars.trim().parse().context("stars must be a number")?,
        comment: String::new(),
    };
    let closed = rt.block_on(svc.close_session(&created.id, rating))?;
    println!("saved {} (goal check: {})", closed.path.display(), if closed.auto_success { "success" } else { "failure" });
    Ok(())
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run { config, seed, episodes, out } => {
            let mut c = load_config(&config)?;
            if let Some(s) = seed {
                c.meta.seed = s;
            }
            if episodes.is_some() {
                c.meta.episodes = episodes;
            }
            let report = run_config(&c)?;
            emit_experiment(&out, &report)?;
            print!("{}", summarize(&report));
            println!("written to {}", out.join(&report.experiment).display());
        }
        Command::Report { dir } => {
            print!("{}", summarize(&load_experiment(&dir)?));
        }
        Command::Serve { config, port, runs } => {
            let svc = Arc::new(ChatService::new(configs_at(&config)?, runs)?);
            eprintln!("serving {:?} on http://127.0.0.1:{port}", svc.config_names());
            tokio::runtime::Runtime::new()?.block_on(serve(svc, port))?;
        }
        Command::Chat { config, runs } => chat(&config, runs)?,
    }
    Ok(())
}
