use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use qas_core::experiment::{
    emit_report, parse_cover, read_graph, run_timed, verify_cover, ExperimentConfig, ExperimentKind, ExperimentReport,
};

/// Environment variable that overrides every configured output directory.
const OUTPUT_ENV: &str = "QAS_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "qas", version, about = "Run randomized metric-space approximation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more experiment configs; independent configs run in parallel.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Run a built-in suite.
    Suite {
        #[command(subcommand)]
        suite: Suite,
    },
    /// Check that every cover piece keeps the distances of the whole graph.
    VerifyCover { graph: PathBuf, cover: PathBuf },
}

#[derive(Subcommand)]
enum Suite {
    Invariants {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random instances per check.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
}

fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    if let Some(dir) = std::env::var_os(OUTPUT_ENV) {
        return PathBuf::from(dir).join(format!("{}-{}", cfg.kind.name(), cfg.seed));
    }
    cfg.output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("qas-output").join(format!("{}-{}", cfg.kind.name(), cfg.seed)))
}

fn summarize(report: &ExperimentReport, dir: &Path) {
    println!("{} seed={} {}", report.kind.name(), report.seed, if report.pass { "PASS" } else { "FAIL" });
    for t in &report.thresholds {
        let op = if t.at_least { ">=" } else { "<=" };
        println!("  {:<5} {} = {:.6e} {op} {:.6e}", if t.pass { "ok" } else { "FAIL" }, t.name, t.value, t.limit);
    }
    println!("  report: {}", dir.display());
}

fn run_configs(configs: Vec<ExperimentConfig>) -> Result<bool> {
    let dirs: Vec<PathBuf> = configs.iter().map(output_dir).collect();
    for (i, d) in dirs.iter().enumerate() {
        if dirs[..i].contains(d) {
            bail!("two configs write to the same output directory {}", d.display());
        }
    }
    let results: Vec<_> = thread::scope(|s| {
        let handles: Vec<_> = configs.iter().map(|cfg| s.spawn(move || run_timed(cfg))).collect();
        handles.into_iter().map(|h| h.join().expect("experiment thread panicked")).collect()
    });
    let mut all_pass = true;
    for ((cfg, dir), result) in configs.iter().zip(&dirs).zip(results) {
        let (report, elapsed) = result.with_context(|| format!("{} (seed {})", cfg.kind.name(), cfg.seed))?;
        emit_report(&report, dir).with_context(|| format!("writing report to {}", dir.display()))?;
        eprintln!("{} seed={} wall time {:.3} s", cfg.kind.name(), cfg.seed, elapsed.as_secs_f64());
        summarize(&report, dir);
        all_pass &= report.pass;
    }
    Ok(all_pass)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { configs } => {
            let configs = configs
                .iter()
                .map(|p| ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display())))
                .collect::<Result<Vec<_>>>()?;
            run_configs(configs)
        }
        Command::Suite { suite: Suite::Invariants { seed, trials } } => {
            let mut cfg = ExperimentConfig::new(ExperimentKind::InvariantSuite, seed);
            cfg.n_points = Some(trials);
            run_configs(vec![cfg])
        }
        Command::VerifyCover { graph, cover } => {
            let (edges, n) = read_graph(&graph).with_context(|| format!("reading {}", graph.display()))?;
            let text = std::fs::read_to_string(&cover).with_context(|| format!("reading {}", cover.display()))?;
            let pieces = parse_cover(&text)?;
            match verify_cover(&edges, n, &pieces) {
                Ok(_) => {
                    println!("cover ok: {} pieces over {n} vertices", pieces.len());
                    Ok(true)
                }
                Err(e) => {
                    println!("cover invalid: {e}");
                    Ok(false)
                }
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
