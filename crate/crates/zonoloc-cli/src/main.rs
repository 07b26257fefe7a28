//! Command-line front end: loads a scenario config, runs episodes or the
//! Monte Carlo campaign, and writes the record streams and summaries other
//! tooling plots or audits.
//!
//! Exit codes: 0 clean run with full containment, 1 containment breach or
//! aborted episode, 2 usage or config errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use zonoloc::sim::{
    benchmark_config, run_episode, run_monte_carlo, write_mc_outputs, write_run_log, McSummary,
    RunLog, SimConfig,
};

#[derive(Parser)]
#[command(name = "zonoloc", version, about = "Set-membership localization for chained agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario config (TOML). Omit to use the built-in benchmark.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for records and summaries.
    #[arg(long)]
    out: PathBuf,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo episode count override.
    #[arg(long)]
    runs: Option<usize>,
    /// Ring segmentation count override.
    #[arg(long)]
    sectors: Option<usize>,
    /// Step count override.
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single episode and write its per-step record stream.
    Simulate(RunArgs),
    /// Run the Monte Carlo campaign and write the summary and ratio table.
    Montecarlo(RunArgs),
    /// Small deterministic end-to-end run of the built-in benchmark:
    /// one episode stream plus a reduced campaign, for smoke tests and
    /// golden files.
    Demo {
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse a config and report the first problem, if any.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(args: &RunArgs) -> Result<SimConfig, String> {
    let mut cfg = match &args.config {
        Some(path) => SimConfig::load(path).map_err(|e| format!("{}: {}", path.display(), e))?,
        None => benchmark_config(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(runs) = args.runs {
        cfg.runs = runs;
    }
    if let Some(sectors) = args.sectors {
        cfg.sectors = sectors;
    }
    if let Some(steps) = args.steps {
        cfg.steps = steps;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn episode_ok(log: &RunLog) -> bool {
    log.containment_ok && log.aborted.is_none()
}

fn report_episode(log: &RunLog) {
    let total: usize = log.stats.iter().map(|s| s.steps).sum();
    let breaches: usize = log.stats.iter().map(|s| s.containment_breaches).sum();
    println!(
        "episode {}: {} agent-steps, {} containment breaches",
        log.run, total, breaches
    );
    if let Some(reason) = &log.aborted {
        println!("episode {} aborted: {}", log.run, reason);
    }
}

fn report_summary(summary: &McSummary) {
    println!(
        "{} runs x {} steps: containment breaches {}, aborted runs {}",
        summary.runs, summary.steps, summary.total_breaches, summary.aborted_runs
    );
    for row in &summary.agents {
        match row.mean_ratio {
            Some(r) => println!(
                "agent {}: containment {:.4}, size ratio vs baseline {:.4}",
                row.agent, row.containment_rate, r
            ),
            None => println!("agent {}: containment {:.4}", row.agent, row.containment_rate),
        }
    }
}

fn cmd_simulate(args: &RunArgs) -> Result<bool, String> {
    let cfg = load(args)?;
    let log = run_episode(&cfg, 0).map_err(|e| e.to_string())?;
    write_run_log(&log, &args.out.join("run.jsonl")).map_err(|e| e.to_string())?;
    let stats = serde_json::to_string_pretty(&log.stats).expect("stats serialize");
    std::fs::write(args.out.join("episode.json"), stats + "\n").map_err(|e| e.to_string())?;
    report_episode(&log);
    Ok(episode_ok(&log))
}

fn cmd_montecarlo(args: &RunArgs) -> Result<bool, String> {
    let cfg = load(args)?;
    let summary = run_monte_carlo(&cfg).map_err(|e| e.to_string())?;
    write_mc_outputs(&summary, &args.out).map_err(|e| e.to_string())?;
    report_summary(&summary);
    Ok(summary.all_contained())
}

fn cmd_demo(out: &Path) -> Result<bool, String> {
    let mut cfg = benchmark_config();
    cfg.steps = 8;
    cfg.runs = 2;
    cfg.burn_in = 2;
    let log = run_episode(&cfg, 0).map_err(|e| e.to_string())?;
    write_run_log(&log, &out.join("run.jsonl")).map_err(|e| e.to_string())?;
    let summary = run_monte_carlo(&cfg).map_err(|e| e.to_string())?;
    write_mc_outputs(&summary, out).map_err(|e| e.to_string())?;
    report_episode(&log);
    report_summary(&summary);
    Ok(episode_ok(&log) && summary.all_contained())
}

fn cmd_validate(path: &Path) -> Result<bool, String> {
    SimConfig::load(path).map_err(|e| format!("{}: {}", path.display(), e))?;
    println!("{}: ok", path.display());
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Montecarlo(args) => cmd_montecarlo(args),
        Command::Demo { out } => cmd_demo(out),
        Command::ValidateConfig { config } => cmd_validate(config),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {}", msg);
            ExitCode::from(2)
        }
    }
}
