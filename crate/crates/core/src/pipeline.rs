//! The convert pipeline: tree, leaf verdicts, IIS, flow selection, plan.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::feas::{FeasError, InfeasibilityProof, LeafCheck, RivalProof, Verifier, DEFAULT_NODE_BUDGET};
use crate::flow::{extract_flows, schedule, ExecutionPlan, FlowError, FlowSelection};
use crate::iis::{leaf_iis, per_rival_union, IisError, IisResult};
use crate::model::{NeuronId, Polarity, QuantizedMLP, SignConstraint};
use crate::tree::{build_tree, DecisionTree, LeafId, TreeError, Verdict};

pub const DEFAULT_MAX_FLOWS: usize = 16;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("tree: {0}")]
    Tree(#[from] TreeError),
    #[error("feas: leaf {leaf}: {source}")]
    Feas { leaf: LeafId, source: FeasError },
    #[error("iis: leaf {leaf}: {source}")]
    Iis { leaf: LeafId, source: IisError },
    #[error("flow: {0}")]
    Flow(#[from] FlowError),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl PipelineError {
    pub fn stage(&self) -> &'static str {
        match self {
            PipelineError::Tree(_) => "tree",
            PipelineError::Feas { .. } => "feas",
            PipelineError::Iis { .. } => "iis",
            PipelineError::Flow(_) => "flow",
            PipelineError::Pool(_) => "pool",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvertOptions {
    pub bb_budget: usize,
    pub max_flows: usize,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
}

impl Default for ConvertOptions {
    fn default() -> Self {
        Self { bb_budget: DEFAULT_NODE_BUDGET, max_flows: DEFAULT_MAX_FLOWS, jobs: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct LeafOutcome {
    pub leaf: LeafId,
    pub path: Vec<SignConstraint>,
    pub check: LeafCheck,
    pub iis: Vec<IisResult>,
}

#[derive(Debug, Clone)]
pub struct Conversion {
    pub tree: DecisionTree,
    pub leaves: Vec<LeafOutcome>,
    pub selection: FlowSelection,
    pub plan: ExecutionPlan,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub leaves: usize,
    pub constant: usize,
    pub flows: usize,
}

impl std::fmt::Display for Summary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "leaves: {}, constant: {}, flows: {}", self.leaves, self.constant, self.flows)
    }
}

fn analyse_leaf(verifier: &Verifier, tree: &DecisionTree, leaf: LeafId) -> Result<LeafOutcome, PipelineError> {
    let path = tree.path_sign_constraints(leaf)?;
    let hist = &tree.leaf(leaf)?.class_histogram;
    // most frequent observed class, lowest index on ties
    let class = crate::model::argmax(&hist.iter().map(|&n| n as i64).collect::<Vec<_>>());
    let check = verifier.check_constant_leaf(&path, class).map_err(|source| PipelineError::Feas { leaf, source })?;
    let iis = match check {
        LeafCheck::Constant { class, .. } => {
            leaf_iis(verifier, &path, class).map_err(|source| PipelineError::Iis { leaf, source })?
        }
        _ => vec![],
    };
    Ok(LeafOutcome { leaf, path, check, iis })
}

pub fn convert(net: &QuantizedMLP, train: &Dataset, opts: ConvertOptions) -> Result<Conversion, PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;
    pool.install(|| convert_in_pool(net, train, opts))
}

fn convert_in_pool(net: &QuantizedMLP, train: &Dataset, opts: ConvertOptions) -> Result<Conversion, PipelineError> {
    let mut warnings = Vec::new();
    if train.is_empty() {
        warnings.push("training set is empty; no leaves to verify".to_string());
    }
    let mut tree = build_tree(net, train)?;
    let verifier = Verifier::new(net, opts.bb_budget);
    let ids: Vec<LeafId> = tree.leaves().iter().map(|l| l.id).collect();
    // collect() keeps leaf order, so the result does not depend on scheduling
    let leaves: Vec<LeafOutcome> =
        ids.par_iter().map(|&id| analyse_leaf(&verifier, &tree, id)).collect::<Result<_, _>>()?;

    let mut iis = BTreeMap::new();
    for o in &leaves {
        let verdict = match &o.check {
            LeafCheck::Constant { class, .. } => Verdict::Constant(*class),
            LeafCheck::NotConstant { .. } => Verdict::NotConstant,
            LeafCheck::Unknown { rival } => {
                warnings.push(format!(
                    "leaf {}: node budget {} exhausted against class {rival}; treated as not constant",
                    o.leaf, opts.bb_budget
                ));
                Verdict::Unknown
            }
        };
        tree.set_verdict(o.leaf, verdict)?;
        if let LeafCheck::Constant { .. } = o.check {
            if let Some(r) = o.iis.iter().find(|r| !r.irreducible) {
                warnings.push(format!("leaf {}: IIS against class {} is irreducible only up to the node budget", o.leaf, r.rival_class));
            }
            iis.insert(o.leaf, o.iis.clone());
        }
    }
    let selection = extract_flows(&tree, &iis, opts.max_flows);
    let mut plan = schedule(net, &selection.flows)?;
    plan.selection_log = selection.log.clone();
    warnings.extend(plan.warnings.iter().cloned());
    if selection.flows.is_empty() {
        warnings.push("no flows selected; the hybrid program equals the reference".to_string());
    }
    Ok(Conversion { tree, leaves, selection, plan, warnings })
}

impl Conversion {
    pub fn summary(&self) -> Summary {
        Summary {
            leaves: self.tree.leaves().len(),
            constant: self.tree.leaves().iter().filter(|l| matches!(l.verdict, Verdict::Constant(_))).count(),
            flows: self.plan.flows.len(),
        }
    }

    pub fn iis_results(&self) -> impl Iterator<Item = (LeafId, &IisResult)> {
        self.leaves.iter().flat_map(|o| o.iis.iter().map(move |r| (o.leaf, r)))
    }

    pub fn iis_report(&self, net: &QuantizedMLP) -> IisReport {
        let condition = |s: &SignConstraint| Condition { neuron: s.neuron, polarity: s.polarity, text: s.text(net) };
        let leaves = self
            .leaves
            .iter()
            .filter_map(|o| match o.check {
                LeafCheck::Constant { class, .. } => Some(LeafIisReport {
                    leaf: o.leaf,
                    pattern: self.tree.leaves()[o.leaf].pattern.to_string(),
                    class,
                    path: o.path.iter().map(condition).collect(),
                    rivals: o
                        .iis
                        .iter()
                        .map(|r| RivalIis {
                            rival: r.rival_class,
                            kept: r.kept.iter().map(condition).collect(),
                            irreducible: r.irreducible,
                            certificate: format!("leaf{}/rival{}", o.leaf, r.rival_class),
                        })
                        .collect(),
                    union: per_rival_union(&o.iis).iter().map(condition).collect(),
                }),
                _ => None,
            })
            .collect();
        IisReport { model_name: net.name().to_string(), model_hash: net.hash(), leaves }
    }

    pub fn certificates(&self, net: &QuantizedMLP) -> Certificates {
        let leaves = self
            .leaves
            .iter()
            .filter_map(|o| match &o.check {
                LeafCheck::Constant { proofs, .. } => Some(LeafCertificates {
                    leaf: o.leaf,
                    constancy: proofs.clone(),
                    iis: o
                        .iis
                        .iter()
                        .filter_map(|r| {
                            r.certificate.clone().map(|proof| IisCertificate {
                                id: format!("leaf{}/rival{}", o.leaf, r.rival_class),
                                rival: r.rival_class,
                                proof,
                            })
                        })
                        .collect(),
                }),
                _ => None,
            })
            .collect();
        Certificates { model_hash: net.hash(), leaves }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub neuron: NeuronId,
    pub polarity: Polarity,
    pub text: String,
}

impl Condition {
    pub fn sign(&self) -> SignConstraint {
        SignConstraint::new(self.neuron, self.polarity)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RivalIis {
    pub rival: usize,
    pub kept: Vec<Condition>,
    pub irreducible: bool,
    pub certificate: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafIisReport {
    pub leaf: LeafId,
    pub pattern: String,
    pub class: usize,
    pub path: Vec<Condition>,
    pub rivals: Vec<RivalIis>,
    pub union: Vec<Condition>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IisReport {
    pub model_name: String,
    pub model_hash: String,
    pub leaves: Vec<LeafIisReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IisCertificate {
    pub id: String,
    pub rival: usize,
    pub proof: InfeasibilityProof,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafCertificates {
    pub leaf: LeafId,
    pub constancy: Vec<RivalProof>,
    pub iis: Vec<IisCertificate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificates {
    pub model_hash: String,
    pub leaves: Vec<LeafCertificates>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{parse_csv, Role};
    use crate::fixtures::{fixture_a, FIXTURE_A_TRAIN_CSV};

    #[test]
    fn fixture_a_converts_to_one_flow() {
        let net = fixture_a();
        let train = parse_csv(FIXTURE_A_TRAIN_CSV, &net, false, Role::Train).unwrap();
        let conv = convert(&net, &train, ConvertOptions::default()).unwrap();
        assert_eq!(conv.summary(), Summary { leaves: 3, constant: 2, flows: 1 });
        let flow = &conv.plan.flows[0].flow;
        assert_eq!(flow.conditions, vec![SignConstraint::inactive(0, 0)]);
        assert_eq!(flow.output_class, 1);
        assert_eq!(conv.plan.prologue, vec![NeuronId::new(0, 0)]);
        let report = conv.iis_report(&net);
        assert_eq!(report.leaves.len(), 2);
        assert_eq!(report.leaves[0].union[0].text, "2*x0 - 1 <= 0");
    }

    #[test]
    fn empty_training_set_gives_no_flows() {
        let net = fixture_a();
        let train = Dataset::new(vec![], Role::Train);
        let conv = convert(&net, &train, ConvertOptions::default()).unwrap();
        assert_eq!(conv.summary(), Summary { leaves: 0, constant: 0, flows: 0 });
        assert!(conv.warnings.iter().any(|w| w.contains("empty")));
    }

    #[test]
    fn job_count_does_not_change_the_plan() {
        let net = crate::fixtures::fixture_c();
        let train = Dataset::grid(&net, Role::Train);
        let one = convert(&net, &train, ConvertOptions { jobs: 1, ..Default::default() }).unwrap();
        let many = convert(&net, &train, ConvertOptions { jobs: 8, ..Default::default() }).unwrap();
        assert_eq!(one.plan.to_json(), many.plan.to_json());
        assert_eq!(
            serde_json::to_string(&one.iis_report(&net)).unwrap(),
            serde_json::to_string(&many.iis_report(&net)).unwrap()
        );
    }
}
