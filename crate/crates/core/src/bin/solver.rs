//! Command-line front end.
//!
//! Exit codes: 0 success, 1 solve failure, 2 configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kansa_core::bench::{self, config::OutputConfig, run::error_row, RunConfig, SweepConfig};
use kansa_core::error::Error;
use kansa_core::par::{self, Execution};

#[derive(Parser)]
#[command(name = "solver", about = "RBF collocation solver for nonlinear elliptic BVPs")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and print its metrics row.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Solve every `[[run]]` of a sweep file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check analytic derivatives of a catalog problem against finite differences.
    Validate {
        #[arg(long)]
        problem: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Regenerate the preset tables.
    Tables {
        #[arg(long)]
        out: PathBuf,
        /// Only the cheap presets.
        #[arg(long)]
        quick: bool,
    },
}

const OK: u8 = 0;
const SOLVE_FAILURE: u8 = 1;
const CONFIG_ERROR: u8 = 2;

fn code_for(e: &Error) -> u8 {
    if e.is_config() {
        CONFIG_ERROR
    } else {
        SOLVE_FAILURE
    }
}

fn base_dir(config: &Path) -> PathBuf {
    config.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn load<T>(path: &Path, f: impl Fn(&Path) -> kansa_core::error::Result<T>) -> Result<T, u8> {
    f(path).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        // An unreadable config file is a configuration problem too.
        CONFIG_ERROR
    })
}

fn write_outputs(out: &OutputConfig, base: &Path, csv: &str, trace: &str) -> Result<(), u8> {
    let write = |p: &Path, text: &str| {
        std::fs::write(base.join(p), text).map_err(|e| {
            eprintln!("error: cannot write {}: {e}", p.display());
            SOLVE_FAILURE
        })
    };
    if let Some(p) = &out.csv {
        write(p, csv)?;
    }
    if let Some(p) = &out.trace {
        write(p, trace)?;
    }
    Ok(())
}

fn cmd_run(path: &Path) -> Result<(), u8> {
    let cfg = load(path, RunConfig::load)?;
    let base = base_dir(path);
    let out = bench::run(&cfg, &base, Execution::best()).map_err(|e| {
        eprintln!("error: {e}");
        code_for(&e)
    })?;
    let csv = bench::to_csv(std::slice::from_ref(&out.row), true).map_err(|e| code_for(&e))?;
    print!("{csv}");
    write_outputs(&cfg.output, &base, &csv, &out.trace)?;
    if out.success {
        Ok(())
    } else {
        eprintln!("solver did not converge: {}", out.row.status);
        Err(SOLVE_FAILURE)
    }
}

fn cmd_sweep(path: &Path) -> Result<(), u8> {
    let cfg = load(path, SweepConfig::load)?;
    let base = base_dir(path);
    let mut rows = Vec::with_capacity(cfg.run.len());
    let mut failed = false;
    for (rc, res) in cfg.run.iter().zip(bench::sweep(&cfg.run, &base)) {
        match res {
            Ok(o) => {
                failed |= !o.success;
                if let Some(p) = &rc.output.trace {
                    write_outputs(&OutputConfig { csv: None, trace: Some(p.clone()) }, &base, "", &o.trace)?;
                }
                rows.push(o.row);
            }
            Err(e) => {
                eprintln!("error in run {}: {e}", rc.name);
                failed = true;
                rows.push(error_row(rc, &e));
            }
        }
    }
    let csv = bench::to_csv(&rows, true).map_err(|e| code_for(&e))?;
    match &cfg.csv {
        Some(p) => write_outputs(&OutputConfig { csv: Some(p.clone()), trace: None }, &base, &csv, "")?,
        None => print!("{csv}"),
    }
    if failed {
        Err(SOLVE_FAILURE)
    } else {
        Ok(())
    }
}

fn cmd_validate(problem: &str, seed: u64) -> Result<(), u8> {
    let rep = bench::validate(problem, seed).map_err(|e| {
        eprintln!("error: {e}");
        code_for(&e)
    })?;
    println!("{rep}");
    if rep.passed() {
        Ok(())
    } else {
        Err(SOLVE_FAILURE)
    }
}

fn cmd_tables(out: &Path, quick: bool) -> Result<(), u8> {
    let summary = bench::tables(out, quick).map_err(|e| {
        eprintln!("error: {e}");
        code_for(&e)
    })?;
    for f in &summary.files {
        println!("{}", out.join(f).display());
    }
    // Some presets are expected to fail (stagnating dogleg, diverging Newton).
    for f in &summary.failures {
        eprintln!("note: run {f} did not converge");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = par::with_thread_cap(|| match &cli.cmd {
        Command::Run { config } => cmd_run(config),
        Command::Sweep { config } => cmd_sweep(config),
        Command::Validate { problem, seed } => cmd_validate(problem, *seed),
        Command::Tables { out, quick } => cmd_tables(out, *quick),
    });
    ExitCode::from(res.err().unwrap_or(OK))
}
