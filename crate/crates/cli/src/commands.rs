use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nn2flow::codegen::{emit_hybrid, emit_reference, emit_test_harness};
use nn2flow::cost::{bench as run_bench, compare, CostModel, CostReport};
use nn2flow::dataset::{load_csv, Dataset, Role};
use nn2flow::flow::ExecutionPlan;
use nn2flow::model::{load_model, QuantizedMLP};
use nn2flow::oracle::{oracle_check as run_oracle, OracleOptions};
use nn2flow::pipeline::{self, Conversion, ConvertOptions, IisReport};
use nn2flow::tree::build_tree;
use serde::Serialize;

use crate::config::RunConfig;

fn load_net(cfg: &RunConfig) -> Result<QuantizedMLP> {
    let text = fs::read_to_string(&cfg.model).with_context(|| format!("cannot read model {}", cfg.model.display()))?;
    load_model(&text).with_context(|| format!("invalid model {}", cfg.model.display()))
}

fn load_data(path: &Path, net: &QuantizedMLP, cfg: &RunConfig, role: Role) -> Result<Dataset> {
    load_csv(path, net, cfg.header, role).with_context(|| format!("dataset {}", path.display()))
}

fn pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    Ok(pool.install(f))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn plan_path(cfg: &RunConfig, net: &QuantizedMLP) -> PathBuf {
    cfg.artifact(&format!("{}.plan.json", net.name()))
}

fn run_convert(cfg: &RunConfig, net: &QuantizedMLP) -> Result<Conversion> {
    let train_path = cfg.train.as_ref().context("convert needs a training CSV (--train or config \"train\")")?;
    let train = load_data(train_path, net, cfg, Role::Train)?;
    let opts = ConvertOptions { bb_budget: cfg.bb_budget, max_flows: cfg.max_flows, jobs: cfg.jobs };
    let conv = pipeline::convert(net, &train, opts).map_err(|e| anyhow::anyhow!("{} stage failed: {e}", e.stage()))?;
    let name = net.name();
    write(&plan_path(cfg, net), &conv.plan.to_json())?;
    write(&cfg.artifact(&format!("{name}.iis.json")), &json(&conv.iis_report(net)))?;
    write(&cfg.artifact(&format!("{name}.tree.dot")), &conv.tree.to_dot(net))?;
    if cfg.emit_certificates {
        write(&cfg.artifact(&format!("{name}.certificates.json")), &json(&conv.certificates(net)))?;
    }
    for w in &conv.warnings {
        eprintln!("warning: {w}");
    }
    Ok(conv)
}

pub fn convert(cfg: &RunConfig) -> Result<bool> {
    let net = load_net(cfg)?;
    let conv = run_convert(cfg, &net)?;
    if cfg.emit_plan {
        eprintln!("{}", conv.summary());
        print!("{}", conv.plan.to_json());
    } else {
        println!("{}", conv.summary());
    }
    Ok(true)
}

/// Loads the plan, converting first when the default plan file is missing.
fn load_plan(cfg: &RunConfig, net: &QuantizedMLP, explicit: Option<&Path>) -> Result<ExecutionPlan> {
    let path = match explicit {
        Some(p) => p.to_path_buf(),
        None => {
            let p = plan_path(cfg, net);
            if !p.exists() {
                eprintln!("no plan at {}; running convert", p.display());
                return Ok(run_convert(cfg, net)?.plan);
            }
            p
        }
    };
    let text = fs::read_to_string(&path).with_context(|| format!("cannot read plan {}", path.display()))?;
    let plan = ExecutionPlan::from_json(&text).with_context(|| format!("invalid plan {}", path.display()))?;
    if plan.model_hash != net.hash() {
        bail!(
            "stale plan {}: built for model hash {}, current model hash is {}; re-run convert",
            path.display(),
            plan.model_hash,
            net.hash()
        );
    }
    Ok(plan)
}

pub fn emit(cfg: &RunConfig, plan: Option<&Path>) -> Result<bool> {
    let net = load_net(cfg)?;
    let plan = load_plan(cfg, &net, plan)?;
    let reference = emit_reference(&net);
    let hybrid = emit_hybrid(&net, &plan)?;
    for (file, text) in [
        (reference.file_name(net.name()), &reference.source),
        (hybrid.file_name(net.name()), &hybrid.source),
        (format!("{}_harness.c", net.name()), &emit_test_harness(&net)),
    ] {
        let path = cfg.artifact(&file);
        write(&path, text)?;
        println!("wrote {}", path.display());
    }
    Ok(true)
}

#[derive(Serialize)]
struct BenchDump<'a> {
    model_hash: String,
    plan_hash: String,
    cost_model: CostModel,
    comparison: &'a nn2flow::cost::Comparison,
    reference: &'a CostReport,
    hybrid: &'a CostReport,
}

pub fn bench(cfg: &RunConfig, plan: Option<&Path>, grid: bool, dump: bool) -> Result<bool> {
    let net = load_net(cfg)?;
    let plan = load_plan(cfg, &net, plan)?;
    let data = if grid {
        Dataset::grid(&net, Role::Infer)
    } else {
        let path = cfg.infer.as_ref().context("bench needs an inference CSV (--infer, config \"infer\" or --grid)")?;
        load_data(path, &net, cfg, Role::Infer)?
    };
    let (reference, hybrid) = pool(cfg.jobs, || run_bench(&net, &plan, &data, &cfg.cost))??;
    let cmp = compare(&reference, &hybrid)?;
    print!("{}", cmp.to_table());
    if dump {
        let path = cfg.artifact(&format!("{}.bench.json", net.name()));
        let d = BenchDump {
            model_hash: net.hash(),
            plan_hash: plan.hash(),
            cost_model: cfg.cost,
            comparison: &cmp,
            reference: &reference,
            hybrid: &hybrid,
        };
        write(&path, &json(&d))?;
        println!("wrote {}", path.display());
    }
    let same = reference.samples.iter().zip(&hybrid.samples).all(|(r, h)| r.class == h.class);
    if !same {
        eprintln!("hybrid and reference disagree on some samples");
    }
    Ok(same)
}

pub fn inspect(cfg: &RunConfig, plan: Option<&Path>) -> Result<bool> {
    let net = load_net(cfg)?;
    let widths: Vec<String> = std::iter::once(net.input_dim())
        .chain(net.layers().iter().map(|l| l.outputs()))
        .map(|w| w.to_string())
        .collect();
    let domain: Vec<String> = net.input_domain().iter().map(|i| format!("[{}, {}]", i.lo, i.hi)).collect();
    println!("model: {}", net.name());
    println!("hash: {}", net.hash());
    println!("layers: {}", widths.join(" -> "));
    println!("domain: {} ({} points)", domain.join(" x "), net.domain_size());
    for n in net.hidden_neurons() {
        println!("  {n} = {}", net.affine_text(n));
    }
    let counts = net.neuron_cost_counts();
    println!(
        "reference ops: {} MACs, {} ReLU compares, {} argmax compares",
        counts.total_macs(),
        counts.hidden_compares,
        counts.argmax_compares
    );
    if let Some(path) = &cfg.train {
        let tree = build_tree(&net, &load_data(path, &net, cfg, Role::Train)?)?;
        println!("tree: {} leaves", tree.leaves().len());
        for l in tree.summary() {
            println!("  leaf {} pattern {} classes {:?}", l.id, l.pattern, l.histogram);
        }
    }
    let path = plan.map(Path::to_path_buf).unwrap_or_else(|| plan_path(cfg, &net));
    if path.exists() {
        let plan = load_plan(cfg, &net, Some(&path))?;
        let prologue: Vec<String> = plan.prologue.iter().map(|n| n.to_string()).collect();
        println!("plan: {} flows, prologue [{}]", plan.flows.len(), prologue.join(", "));
        for pf in &plan.flows {
            let conds: Vec<String> = pf.flow.conditions.iter().map(|c| c.text(&net)).collect();
            println!("  flow {}: {} -> class {}", pf.flow.id, conds.join(" && "), pf.flow.output_class);
        }
    }
    Ok(true)
}

pub fn oracle_check(cfg: &RunConfig, plan: Option<&Path>, iis: Option<&Path>, opts: OracleOptions) -> Result<bool> {
    let net = load_net(cfg)?;
    let plan = load_plan(cfg, &net, plan)?;
    let iis_path = iis
        .map(Path::to_path_buf)
        .or_else(|| Some(cfg.artifact(&format!("{}.iis.json", net.name()))).filter(|p| p.exists()));
    let report: Option<IisReport> = match &iis_path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read IIS report {}", p.display()))?;
            Some(serde_json::from_str(&text).with_context(|| format!("invalid IIS report {}", p.display()))?)
        }
        None => None,
    };
    let result = pool(cfg.jobs, || run_oracle(&net, &plan, report.as_ref(), &opts))?;
    for note in &result.notes {
        println!("{note}");
    }
    for c in &result.checks {
        println!("{c}");
        if let (false, Some(x)) = (c.passed, &c.counterexample) {
            println!("  counterexample: {x:?}");
        }
    }
    println!("{}", if result.passed() { "oracle-check: pass" } else { "oracle-check: FAIL" });
    Ok(result.passed())
}
