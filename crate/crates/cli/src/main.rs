use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use heavywalk::harness::{self, WORKERS_ENV};
use heavywalk::presets::PRESETS;
use heavywalk::{ExperimentConfig, RunReport};

#[derive(Parser)]
#[command(name = "heavywalk", version, about = "Heavy-tailed random walk experiments")]
struct Cli {
    /// Worker threads; overrides the environment variable.
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config file.
    Run {
        config: PathBuf,
        /// Print the full report JSON instead of a summary.
        #[arg(long)]
        json: bool,
    },
    /// List the named acceptance presets.
    ListPresets,
    /// Run a named acceptance preset.
    Accept {
        preset: String,
        /// Write CSVs and report.json under this directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Print the preset's config JSON and exit without running it.
        #[arg(long)]
        show_config: bool,
    },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<bool> {
    let cli = Cli::parse();
    let workers = cli.workers.filter(|&n| n > 0).unwrap_or_else(harness::workers_from_env);
    match cli.command {
        Command::ListPresets => {
            for (name, about) in PRESETS {
                println!("{name:<22} {about}");
            }
            Ok(true)
        }
        Command::Run { config, json } => {
            let cfg = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let report = harness::run_with_workers(&cfg, workers)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print_summary(&report);
            }
            Ok(report.passed())
        }
        Command::Accept { preset, output_dir, show_config } => {
            let configs = heavywalk::preset(&preset)?;
            if show_config {
                for c in &configs {
                    println!("{}", serde_json::to_string_pretty(c)?);
                }
                return Ok(true);
            }
            let mut ok = true;
            for mut cfg in configs {
                if let Some(dir) = &output_dir {
                    cfg.output_dir = Some(if cfg.name == preset { dir.clone() } else { dir.join(&cfg.name) });
                }
                let report = harness::run_with_workers(&cfg, workers)?;
                print_summary(&report);
                ok &= report.passed();
            }
            Ok(ok)
        }
    }
}

fn print_summary(report: &RunReport) {
    let p = &report.payload;
    println!(
        "{}: {} ({}/{} replicas, {:.1}s on {} worker(s), config {})",
        p.name,
        if p.passed { "PASS" } else { "FAIL" },
        p.replicas_completed,
        p.replicas_requested,
        report.wall_clock_secs,
        report.workers,
        &p.config_hash[..12],
    );
    for c in &p.checks {
        println!("  {} {}: {}", if c.passed() { "ok  " } else { "FAIL" }, c.label, c.detail);
    }
    for a in &p.aborted {
        println!("  aborted replica {} (seed {}): {}", a.index, a.seed, a.reason);
    }
}
