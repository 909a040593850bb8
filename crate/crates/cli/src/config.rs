//! Project config file plus command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use nn2flow::cost::CostModel;
use nn2flow::feas::DEFAULT_NODE_BUDGET;
use nn2flow::pipeline::DEFAULT_MAX_FLOWS;
use serde::Deserialize;

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Project config (JSON); relative paths inside it resolve against its directory.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Model file.
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Training CSV used to build the decision tree.
    #[arg(long, global = true)]
    pub train: Option<PathBuf>,
    /// Inference CSV used by bench.
    #[arg(long, global = true)]
    pub infer: Option<PathBuf>,
    /// Directory for generated artifacts.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// CSV files start with a header row.
    #[arg(long, global = true)]
    pub header: bool,
    /// LP solves allowed per feasibility query.
    #[arg(long, global = true)]
    pub bb_budget: Option<usize>,
    /// Maximum number of logic flows kept.
    #[arg(long, global = true)]
    pub max_flows: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    model: Option<PathBuf>,
    train: Option<PathBuf>,
    infer: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    bb_budget: Option<usize>,
    max_flows: Option<usize>,
    jobs: Option<usize>,
    header: Option<bool>,
    emit_certificates: Option<bool>,
    emit_plan: Option<bool>,
    cost: Option<CostFile>,
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostFile {
    pub mac: Option<u64>,
    pub compare: Option<u64>,
    pub branch: Option<u64>,
    pub mask_test: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: PathBuf,
    pub train: Option<PathBuf>,
    pub infer: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub header: bool,
    pub bb_budget: usize,
    pub max_flows: usize,
    pub jobs: usize,
    pub emit_certificates: bool,
    pub emit_plan: bool,
    pub cost: CostModel,
}

impl RunConfig {
    /// Merges the config file (if any) with flags; flags win.
    pub fn resolve(args: &CommonArgs, emit_certificates: bool, emit_plan: bool, cost: CostFile) -> Result<Self> {
        let (file, base) = match &args.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
                let file: ConfigFile =
                    serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
                (file, path.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (ConfigFile::default(), PathBuf::new()),
        };
        let rel = |p: Option<PathBuf>| p.map(|p| if p.is_absolute() { p } else { base.join(p) });
        let model = args.model.clone().or(rel(file.model)).context("no model given (use --model or a config file)")?;
        let defaults = file.cost.unwrap_or_default();
        let pick = |flag: Option<u64>, conf: Option<u64>| flag.or(conf).unwrap_or(1);
        let cost = CostModel::new(
            pick(cost.mac, defaults.mac),
            pick(cost.compare, defaults.compare),
            pick(cost.branch, defaults.branch),
            pick(cost.mask_test, defaults.mask_test),
        )?;
        let cfg = RunConfig {
            model,
            train: args.train.clone().or(rel(file.train)),
            infer: args.infer.clone().or(rel(file.infer)),
            out_dir: args.out_dir.clone().or(rel(file.out_dir)).unwrap_or_else(|| PathBuf::from(".")),
            header: args.header || file.header.unwrap_or(false),
            bb_budget: args.bb_budget.or(file.bb_budget).unwrap_or(DEFAULT_NODE_BUDGET),
            max_flows: args.max_flows.or(file.max_flows).unwrap_or(DEFAULT_MAX_FLOWS),
            jobs: args.jobs.or(file.jobs).unwrap_or(0),
            emit_certificates: emit_certificates || file.emit_certificates.unwrap_or(false),
            emit_plan: emit_plan || file.emit_plan.unwrap_or(false),
            cost,
        };
        if cfg.bb_budget == 0 {
            bail!("bb budget must be positive");
        }
        if cfg.max_flows == 0 {
            bail!("max flows must be positive");
        }
        Ok(cfg)
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}
