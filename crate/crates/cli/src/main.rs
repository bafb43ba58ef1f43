//! `handsim` - run prosthetic-hand scenarios and batches.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use handsim_core::config::ConfigLayer;
use handsim_core::scenario::{load_scenario_with, scenario_files};
use handsim_core::{run, summarize_batch, trace};
use rayon::prelude::*;

#[derive(Parser, Debug)]
#[command(name = "handsim", version, about = "Deterministic prosthetic-hand grasp simulator")]
struct Cli {
    /// Global configuration overrides applied on top of every scenario.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run one scenario. Exits 0 if the grasp succeeded.
    Run {
        scenario: PathBuf,
        /// Override the scenario's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the per-tick CSV trace here.
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
        /// Write the JSON run summary here.
        #[arg(long, value_name = "PATH")]
        summary: Option<PathBuf>,
    },
    /// Run every `*.toml` scenario in a directory. Exits 0 if all succeeded.
    Batch {
        dir: PathBuf,
        /// Write the JSON batch report here.
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    let global = cli.config.as_deref().map(ConfigLayer::load).transpose()?;
    match cli.command {
        Cmd::Run {
            scenario,
            seed,
            trace,
            summary,
        } => run_one(&scenario, global.as_ref(), seed, trace.as_deref(), summary.as_deref()),
        Cmd::Batch { dir, report } => run_batch(&dir, global.as_ref(), report.as_deref()),
    }
}

fn run_one(
    path: &Path,
    global: Option<&ConfigLayer>,
    seed: Option<u64>,
    trace_path: Option<&Path>,
    summary_path: Option<&Path>,
) -> Result<bool> {
    let mut spec = load_scenario_with(path, global)?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let out = run(&spec);
    if let Some(p) = trace_path {
        let file = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
        trace::write_csv(&out.trace, std::io::BufWriter::new(file))
            .with_context(|| format!("writing {}", p.display()))?;
    }
    let json = out.summary.to_json();
    if let Some(p) = summary_path {
        fs::write(p, format!("{json}\n")).with_context(|| format!("writing {}", p.display()))?;
    }
    println!("{json}");
    Ok(out.summary.success)
}

fn run_batch(dir: &Path, global: Option<&ConfigLayer>, report_path: Option<&Path>) -> Result<bool> {
    let files = scenario_files(dir)?;
    if files.is_empty() {
        bail!("no scenario files (*.toml) in {}", dir.display());
    }
    let specs = files
        .iter()
        .map(|p| load_scenario_with(p, global))
        .collect::<Result<Vec<_>, _>>()?;
    let summaries: Vec<_> = specs.par_iter().map(|s| run(s).summary).collect();
    let report = summarize_batch(&summaries)?;
    print!("{}", report.render_table());
    if let Some(p) = report_path {
        fs::write(p, format!("{}\n", report.to_json())).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(report.all_passed())
}
