//! `waveheat`: batch front end for the wave-heat network laboratory.
//!
//! Exit codes: 0 when every check of the subcommand passes, 1 when a check
//! fails or a computation errors, 2 on invalid input.

mod commands;
mod config;

use clap::{Parser, Subcommand, ValueEnum};
use commands::Report;
use config::{ConfigArgs, InitialKind, RunConfig, UsageError, VariantName};
use std::process::ExitCode;
use waveheat::checks::Mutation;

#[derive(Debug, Parser)]
#[command(
    name = "waveheat",
    version,
    about = "Transfer functions, resolvent scans and energy decay of a wave-heat network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate P₂(is), Re P₂(is), η, μ and μ/η over the s-window
    Transfer {
        #[command(flatten)]
        common: ConfigArgs,
    },
    /// Scan the discrete resolvent norm along the imaginary axis
    Resolvent {
        #[command(flatten)]
        common: ConfigArgs,
        #[arg(long, value_enum)]
        variant: Option<VariantName>,
        /// Lower end of the growth-fit window
        #[arg(long)]
        fit_min: Option<f64>,
        /// Upper end of the growth-fit window
        #[arg(long)]
        fit_max: Option<f64>,
    },
    /// Integrate the energy of one initial state in time
    Simulate {
        #[command(flatten)]
        common: ConfigArgs,
        #[arg(long, value_enum)]
        variant: Option<VariantName>,
        #[arg(long, value_enum)]
        initial: Option<InitialKind>,
        /// Add this multiple of the unit-energy constant node state
        #[arg(long, allow_negative_numbers = true)]
        offset: Option<f64>,
        /// Also compare raw and resolvent-smoothed data
        #[arg(long)]
        compare: bool,
    },
    /// Run the acceptance checks and write summary.json
    VerifyAll {
        #[command(flatten)]
        common: ConfigArgs,
        /// Comma-separated check ids, e.g. A1,A4
        #[arg(long, value_parser = config::parse_check_ids)]
        only: Option<CheckIds>,
        /// Inject a defect to confirm the checks notice it
        #[arg(long, value_enum, hide = true)]
        mutate: Option<MutationArg>,
    },
}

/// Alias so the derive sees one value per flag rather than a repeated list.
type CheckIds = Vec<String>;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MutationArg {
    FlipOutputSign,
}

impl From<MutationArg> for Mutation {
    fn from(m: MutationArg) -> Self {
        match m {
            MutationArg::FlipOutputSign => Mutation::FlipOutputSign,
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<Report> {
    match cli.command {
        Command::Transfer { common } => commands::cmd_transfer(common.load()?),
        Command::Resolvent {
            common,
            variant,
            fit_min,
            fit_max,
        } => {
            let mut cfg = common.load()?;
            if let Some(v) = variant {
                cfg.variant = v;
            }
            commands::cmd_resolvent(override_fit_window(cfg, fit_min, fit_max))
        }
        Command::Simulate {
            common,
            variant,
            initial,
            offset,
            compare,
        } => {
            let mut cfg = common.load()?;
            if let Some(v) = variant {
                cfg.variant = v;
            }
            if let Some(i) = initial {
                cfg.initial = i;
            }
            if let Some(o) = offset {
                cfg.offset = o;
            }
            cfg.compare |= compare;
            commands::cmd_simulate(cfg)
        }
        Command::VerifyAll { common, only, mutate } => {
            let mut cfg = common.load()?;
            if only.is_some() {
                cfg.checks = only;
            }
            commands::cmd_verify_all(cfg, mutate.map(Into::into))
        }
    }
}

fn override_fit_window(cfg: RunConfig, lo: Option<f64>, hi: Option<f64>) -> RunConfig {
    if lo.is_none() && hi.is_none() {
        return cfg;
    }
    let mut cfg = commands::resolvent_defaults(cfg);
    let [a, b] = cfg.fit_window.unwrap_or_else(|| commands::default_fit_window(&cfg));
    cfg.fit_window = Some([lo.unwrap_or(a), hi.unwrap_or(b)]);
    cfg
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            for (name, ok) in &report.checks {
                println!("{} {name}", if *ok { "PASS" } else { "FAIL" });
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
