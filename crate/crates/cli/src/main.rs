//! `nn2flow`: convert, emit, bench, inspect and oracle-check subcommands.
//!
//! Exit codes: 0 success, 1 a checked property failed, 2 usage or I/O error.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{CommonArgs, CostFile};

#[derive(Debug, Parser)]
#[command(name = "nn2flow", version, about = "Compile quantized ReLU networks into early-exit logic flow programs")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the tree, verify leaves, extract IIS and write the plan.
    Convert {
        /// Also write the Farkas certificates of every proof.
        #[arg(long)]
        emit_certificates: bool,
        /// Print the plan JSON to stdout.
        #[arg(long)]
        emit_plan: bool,
    },
    /// Write the reference, hybrid and harness C sources.
    Emit(PlanArg),
    /// Compare modeled costs of the reference and hybrid programs.
    Bench {
        #[command(flatten)]
        plan: PlanArg,
        /// Benchmark on the full input grid instead of the inference CSV.
        #[arg(long)]
        grid: bool,
        /// Also write the per-sample report as JSON.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        cost: CostArgs,
    },
    /// Describe the model and, when present, its tree and plan.
    Inspect(PlanArg),
    /// Check equivalence, exit soundness and IIS irreducibility.
    OracleCheck {
        #[command(flatten)]
        plan: PlanArg,
        /// IIS report to verify (default: <out-dir>/<model>.iis.json when present).
        #[arg(long)]
        iis: Option<std::path::PathBuf>,
        /// Largest grid checked exhaustively.
        #[arg(long, default_value_t = nn2flow::feas::DEFAULT_BRUTE_FORCE_CAP)]
        cap: u128,
        /// Random inputs used above the cap.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Args)]
struct PlanArg {
    /// Plan file (default: <out-dir>/<model>.plan.json, converting first if missing).
    #[arg(long)]
    plan: Option<std::path::PathBuf>,
}

#[derive(Debug, Clone, Copy, Args)]
struct CostArgs {
    #[arg(long)]
    cost_mac: Option<u64>,
    #[arg(long)]
    cost_compare: Option<u64>,
    #[arg(long)]
    cost_branch: Option<u64>,
    #[arg(long)]
    cost_mask_test: Option<u64>,
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    use config::RunConfig;
    let resolve = |certs, plan, cost| RunConfig::resolve(&cli.common, certs, plan, cost);
    match cli.command {
        Command::Convert { emit_certificates, emit_plan } => {
            commands::convert(&resolve(emit_certificates, emit_plan, CostFile::default())?)
        }
        Command::Emit(p) => commands::emit(&resolve(false, false, CostFile::default())?, p.plan.as_deref()),
        Command::Bench { plan, grid, json, cost } => {
            let cost = CostFile {
                mac: cost.cost_mac,
                compare: cost.cost_compare,
                branch: cost.cost_branch,
                mask_test: cost.cost_mask_test,
            };
            commands::bench(&resolve(false, false, cost)?, plan.plan.as_deref(), grid, json)
        }
        Command::Inspect(p) => commands::inspect(&resolve(false, false, CostFile::default())?, p.plan.as_deref()),
        Command::OracleCheck { plan, iis, cap, samples, seed } => {
            let cfg = resolve(false, false, CostFile::default())?;
            let opts = nn2flow::oracle::OracleOptions { cap, samples, seed, bb_budget: cfg.bb_budget };
            commands::oracle_check(&cfg, plan.plan.as_deref(), iis.as_deref(), opts)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
