//! The `skewgraph` command line.

pub mod config;
pub mod run;
pub mod svg;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

/// Default output directory when neither `--out` nor `output.dir` is given.
pub const DEFAULT_OUT: &str = "skewgraph-out";

#[derive(Parser, Debug)]
#[command(
    name = "skewgraph",
    version,
    about = "Step skew products over Markov shifts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed (overrides `seed`).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config and list every problem found.
    Validate { config: PathBuf },
    /// List the built-in systems.
    Presets,
}

fn read_config(path: &PathBuf, err: &mut dyn Write) -> Option<String> {
    match std::fs::read_to_string(path) {
        Ok(t) => Some(t),
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", path.display());
            None
        }
    }
}

fn report(findings: &[String], err: &mut dyn Write) {
    for f in findings {
        let _ = writeln!(err, "error: {f}");
    }
}

/// Runs a parsed command, writing to the given streams, and returns the
/// exit status.
pub fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match cli.command {
        Command::Presets => {
            for (name, description) in crate::zoo::PRESETS {
                let _ = writeln!(out, "{name:<22}{description}");
            }
            EXIT_OK
        }
        Command::Validate { config } => {
            let Some(text) = read_config(&config, err) else {
                return EXIT_VALIDATION;
            };
            let findings = config::validate(&text);
            if findings.is_empty() {
                let _ = writeln!(out, "ok");
                EXIT_OK
            } else {
                report(&findings, err);
                EXIT_VALIDATION
            }
        }
        Command::Run {
            config,
            out: out_dir,
            seed,
        } => {
            let Some(text) = read_config(&config, err) else {
                return EXIT_VALIDATION;
            };
            let resolved = match config::load(&text, seed) {
                Ok(r) => r,
                Err(findings) => {
                    report(&findings, err);
                    return EXIT_VALIDATION;
                }
            };
            let outcome = match run::execute(&resolved) {
                Ok(o) => o,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    return run::exit_code(&e);
                }
            };
            let dir = out_dir
                .or_else(|| resolved.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
            if let Err(e) = run::write_outputs(&resolved, &outcome, &dir) {
                let _ = writeln!(err, "error: cannot write outputs to {}: {e}", dir.display());
                return EXIT_VALIDATION;
            }
            let _ = writeln!(
                out,
                "{}",
                serde_json::to_string(&outcome.summary).expect("serialisable")
            );
            let _ = writeln!(out, "wrote {}", dir.display());
            match outcome.budget_failure {
                Some(reason) => {
                    let _ = writeln!(err, "error: {reason}");
                    EXIT_BUDGET
                }
                None => EXIT_OK,
            }
        }
    }
}

/// Caps the rayon pool at `SKEWGRAPH_THREADS` when set.
pub fn init_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("SKEWGRAPH_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("SKEWGRAPH_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}
