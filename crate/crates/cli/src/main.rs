use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use dcaim_core::harness::{run_compare, run_golden, run_lemma1, run_schedule, RunConfig};
use dcaim_core::mac::SchemeKind;

/// Exit status when the worked-example checks fail.
const GOLDEN_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "dcaim", version, about = "Relay-assisted body area network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run DCAIM, OR and single-hop on one topology and write energy, SINR and schedule data
    Compare {
        #[command(flatten)]
        common: Common,
        /// Restrict to these schemes (dcaim, or-csma, single-hop); repeatable
        #[arg(long = "scheme", value_name = "NAME")]
        schemes: Vec<SchemeKind>,
        /// Also write one trace CSV per scheme
        #[arg(long)]
        traces: bool,
    },
    /// Monte Carlo outage and reuse of the original and probabilistic pinning
    Lemma1 {
        #[command(flatten)]
        common: Common,
    },
    /// Check the three-region worked example
    Golden {
        #[command(flatten)]
        common: Common,
    },
    /// Print the interference lists, sets and slot grid of a scenario
    Schedule {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file; the built-in reference scenario when omitted
    #[arg(long, value_name = "PATH")]
    scenario: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long, value_name = "N")]
    frames: Option<u64>,
    #[arg(long, value_name = "N")]
    trials: Option<u64>,
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Override a scenario key, e.g. --set topology.radio.shadowing_sigma_db=3
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn config(self) -> RunConfig {
        RunConfig {
            scenario_path: self.scenario,
            frames: self.frames,
            trials: self.trials,
            seed: self.seed,
            out_dir: self.out,
            overrides: self.overrides,
            ..RunConfig::default()
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Compare { common, schemes, traces } => {
            let cfg = RunConfig { schemes, traces, ..common.config() };
            let c = run_compare(&cfg).context("compare failed")?;
            print!("{}", c.summary());
            println!("wrote {}", cfg.out_dir.display());
        }
        Command::Lemma1 { common } => {
            let cfg = common.config();
            let r = run_lemma1(&cfg).context("lemma1 failed")?;
            println!("{r}");
            println!("wrote {}", cfg.out_dir.display());
        }
        Command::Golden { common } => {
            let cfg = common.config();
            let r = run_golden(&cfg).context("golden failed")?;
            print!("{r}");
            return Ok(r.passed());
        }
        Command::Schedule { common } => {
            let cfg = common.config();
            let r = run_schedule(&cfg).context("schedule failed")?;
            print!("{r}");
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(GOLDEN_FAILED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
