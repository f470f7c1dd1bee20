//! Batch experiment runner for the stroboscopic averaging library.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure,
//! 4 cost-guard refusal.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use strobe::error::Error;

use config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "strobe",
    version,
    about = "High-order stroboscopic averaging for highly-oscillatory transport equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Configuration file (flat key = value; flags override it)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Problem name (const_eb_2d, elementary_rotation, vlasov_const_b_2d,
    /// vlasov_varying_b_2d, vlasov_3d, vlasov_3d_const_dir)
    #[arg(long)]
    problem: Option<String>,
    /// Truncation order: highest kept power of eps (0..=2)
    #[arg(long)]
    order: Option<usize>,
    /// Comma-separated epsilon list
    #[arg(long)]
    eps: Option<String>,
    /// Final time of the sweeps
    #[arg(long)]
    t_final: Option<f64>,
    /// Number of seeded evaluation points
    #[arg(long)]
    points: Option<usize>,
    /// Seed of the evaluation-point draws
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv or json
    #[arg(long)]
    format: Option<String>,
    /// Worker threads for point sweeps (0 = all cores)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Exact universal coefficient of an integer word
    Beta {
        /// The word, e.g. "1,-1"
        #[arg(long)]
        word: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Dump Fourier modes of the pulled-back field at points (JSON)
    Modes {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Dump assembled averaged fields at points (JSON)
    AvgFields {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Error sweep of the non-stiff solver against exact/reference
    Convergence {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Commutator-defect diagnostics over eps
    Defect {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Reconstruction table with phase diagnostics
    Reconstruct {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Assembled terms against the iterated-integral oracle (JSON)
    Oracle {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn resolve(common: &CommonArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &common.config {
        cfg.apply_file(path)?;
    }
    if let Some(p) = &common.problem {
        cfg.apply_pair("problem", p)?;
    }
    if let Some(o) = common.order {
        cfg.apply_pair("order", &o.to_string())?;
    }
    if let Some(e) = &common.eps {
        cfg.apply_pair("eps", e)?;
    }
    if let Some(t) = common.t_final {
        cfg.apply_pair("t_final", &format!("{t:.17e}"))?;
    }
    if let Some(n) = common.points {
        cfg.apply_pair("points", &n.to_string())?;
    }
    if let Some(s) = common.seed {
        cfg.apply_pair("seed", &s.to_string())?;
    }
    if let Some(w) = common.workers {
        cfg.apply_pair("workers", &w.to_string())?;
    }
    if let Some(fmt) = &common.format {
        cfg.apply_pair("format", fmt)?;
    }
    if let Some(out) = &common.out {
        cfg.out = Some(out.display().to_string());
    }
    Ok(cfg)
}

fn deliver(cfg: &ExperimentConfig, payload: String) -> Result<(), Error> {
    match &cfg.out {
        Some(path) => std::fs::write(path, payload)
            .map_err(|e| Error::usage(format!("cannot write {path}: {e}"))),
        None => {
            print!("{payload}");
            Ok(())
        }
    }
}

fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Beta { word, common } => {
            let cfg = resolve(common)?;
            deliver(&cfg, commands::cmd_beta(word, &cfg)?)
        }
        Command::Modes { common } => {
            let cfg = resolve(common)?;
            deliver(&cfg, commands::cmd_modes(&cfg)?)
        }
        Command::AvgFields { common } => {
            let cfg = resolve(common)?;
            deliver(&cfg, commands::cmd_fields(&cfg)?)
        }
        Command::Convergence { common } => {
            let cfg = resolve(common)?;
            deliver(&cfg, commands::cmd_convergence(&cfg)?)
        }
        Command::Defect { common } => {
            let cfg = resolve(common)?;
            deliver(&cfg, commands::cmd_defect(&cfg)?)
        }
        Command::Reconstruct { common } => {
            let cfg = resolve(common)?;
            deliver(&cfg, commands::cmd_reconstruct(&cfg)?)
        }
        Command::Oracle { common } => {
            let cfg = resolve(common)?;
            deliver(&cfg, commands::cmd_oracle(&cfg)?)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Usage(_) | Error::Domain(_) => ExitCode::from(2),
                Error::Numeric(_) => ExitCode::from(3),
                Error::CostGuard(_) => ExitCode::from(4),
            }
        }
    }
}
