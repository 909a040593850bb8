//! Abstract operation-cost benchmark of the reference and hybrid programs.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::flow::{hybrid_eval, ExecutionPlan, ExitKind, Trace};
use crate::model::{ModelError, QuantizedMLP};

#[derive(Debug, Error)]
pub enum CostError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("cost weights must be positive integers ({0} is zero)")]
    ZeroWeight(&'static str),
    #[error("reports come from different datasets ({0} vs {1})")]
    MismatchedDatasets(String, String),
    #[error("sample {row}: {source}")]
    Sample { row: usize, source: ModelError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub mac: u64,
    pub compare: u64,
    pub branch: u64,
    pub mask_test: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self { mac: 1, compare: 1, branch: 1, mask_test: 1 }
    }
}

impl CostModel {
    pub fn new(mac: u64, compare: u64, branch: u64, mask_test: u64) -> Result<Self, CostError> {
        for (name, v) in [("mac", mac), ("compare", compare), ("branch", branch), ("mask_test", mask_test)] {
            if v == 0 {
                return Err(CostError::ZeroWeight(name));
            }
        }
        Ok(Self { mac, compare, branch, mask_test })
    }

    /// Cost per layer bucket (output layer last) followed by the checks bucket.
    pub fn buckets(&self, trace: &Trace) -> (Vec<u64>, u64) {
        let layers = trace.macs.iter().zip(&trace.compares).map(|(&m, &c)| m * self.mac + c * self.compare).collect();
        let checks = trace.mask_tests * self.mask_test + trace.branches * self.branch;
        (layers, checks)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleCost {
    pub class: usize,
    pub label: usize,
    pub exit: ExitKind,
    pub layers: Vec<u64>,
    pub checks: u64,
    pub total: u64,
}

impl SampleCost {
    /// Cost without the first hidden layer.
    pub fn later_layers(&self) -> u64 {
        self.total - self.layers[0]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    pub program: String,
    pub dataset_fingerprint: String,
    pub samples: Vec<SampleCost>,
}

impl CostReport {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn min(&self) -> u64 {
        self.samples.iter().map(|s| s.total).min().unwrap_or(0)
    }

    pub fn max(&self) -> u64 {
        self.samples.iter().map(|s| s.total).max().unwrap_or(0)
    }

    pub fn sum(&self) -> u64 {
        self.samples.iter().map(|s| s.total).sum()
    }

    pub fn avg(&self) -> f64 {
        self.sum() as f64 / self.len().max(1) as f64
    }

    pub fn later_layers_sum(&self) -> u64 {
        self.samples.iter().map(SampleCost::later_layers).sum()
    }

    /// Summed cost per layer, then the checks bucket.
    pub fn layer_totals(&self) -> (Vec<u64>, u64) {
        let width = self.samples.first().map_or(0, |s| s.layers.len());
        let mut layers = vec![0; width];
        let mut checks = 0;
        for s in &self.samples {
            layers.iter_mut().zip(&s.layers).for_each(|(a, b)| *a += b);
            checks += s.checks;
        }
        (layers, checks)
    }

    pub fn exits(&self) -> usize {
        self.samples.iter().filter(|s| matches!(s.exit, ExitKind::Flow(_))).count()
    }

    pub fn exit_fraction(&self) -> f64 {
        self.exits() as f64 / self.len().max(1) as f64
    }

    pub fn correct(&self) -> usize {
        self.samples.iter().filter(|s| s.class == s.label).count()
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.len().max(1) as f64
    }
}

fn report(
    net: &QuantizedMLP,
    plan: &ExecutionPlan,
    data: &Dataset,
    model: &CostModel,
    program: &str,
) -> Result<CostReport, CostError> {
    let samples = data
        .rows
        .par_iter()
        .enumerate()
        .map(|(row, s)| {
            let r = hybrid_eval(net, plan, &s.x).map_err(|source| CostError::Sample { row, source })?;
            let (layers, checks) = model.buckets(&r.trace);
            let total = layers.iter().sum::<u64>() + checks;
            Ok(SampleCost { class: r.class, label: s.label, exit: r.exit, layers, checks, total })
        })
        .collect::<Result<_, _>>()?;
    Ok(CostReport { program: program.to_string(), dataset_fingerprint: data.fingerprint(), samples })
}

/// Reference and hybrid reports over the same dataset. The reference is the
/// hybrid evaluator run with an empty plan.
pub fn bench(
    net: &QuantizedMLP,
    plan: &ExecutionPlan,
    data: &Dataset,
    model: &CostModel,
) -> Result<(CostReport, CostReport), CostError> {
    if data.is_empty() {
        return Err(CostError::EmptyDataset);
    }
    let reference = report(net, &ExecutionPlan::empty(net), data, model, "reference")?;
    let hybrid = report(net, plan, data, model, "hybrid")?;
    Ok((reference, hybrid))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub reference: f64,
    pub hybrid: f64,
    /// Positive means the hybrid is cheaper.
    pub percent: f64,
}

impl Delta {
    fn new(reference: f64, hybrid: f64) -> Self {
        let percent = if reference == 0.0 { 0.0 } else { (reference - hybrid) / reference * 100.0 };
        Self { reference, hybrid, percent }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub samples: usize,
    pub min: Delta,
    pub avg: Delta,
    pub max: Delta,
    /// Average cost with the first hidden layer left out of both programs.
    pub later_layers: Delta,
    pub exit_fraction: f64,
    pub reference_accuracy: f64,
    pub hybrid_accuracy: f64,
}

pub fn compare(reference: &CostReport, hybrid: &CostReport) -> Result<Comparison, CostError> {
    if reference.dataset_fingerprint != hybrid.dataset_fingerprint || reference.len() != hybrid.len() {
        return Err(CostError::MismatchedDatasets(
            reference.dataset_fingerprint.clone(),
            hybrid.dataset_fingerprint.clone(),
        ));
    }
    let n = reference.len().max(1) as f64;
    Ok(Comparison {
        samples: reference.len(),
        min: Delta::new(reference.min() as f64, hybrid.min() as f64),
        avg: Delta::new(reference.avg(), hybrid.avg()),
        max: Delta::new(reference.max() as f64, hybrid.max() as f64),
        later_layers: Delta::new(reference.later_layers_sum() as f64 / n, hybrid.later_layers_sum() as f64 / n),
        exit_fraction: hybrid.exit_fraction(),
        reference_accuracy: reference.accuracy(),
        hybrid_accuracy: hybrid.accuracy(),
    })
}

impl Comparison {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<14}{:>12}{:>12}{:>10}", "metric", "reference", "hybrid", "saving");
        for (name, d) in [("min", &self.min), ("avg", &self.avg), ("max", &self.max), ("layers 2+", &self.later_layers)] {
            let _ = writeln!(out, "{:<14}{:>12.2}{:>12.2}{:>9.1}%", name, d.reference, d.hybrid, d.percent);
        }
        let _ = writeln!(out, "{:<14}{:>34.1}%", "exit by tree", self.exit_fraction * 100.0);
        let _ = writeln!(
            out,
            "{:<14}{:>11.1}%{:>11.1}%",
            "accuracy",
            self.reference_accuracy * 100.0,
            self.hybrid_accuracy * 100.0
        );
        let _ = writeln!(out, "samples: {}", self.samples);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Role;
    use crate::fixtures::fixture_a;
    use crate::flow::{schedule, LogicFlow};
    use crate::model::SignConstraint;

    fn fixture_a_plan(net: &QuantizedMLP) -> ExecutionPlan {
        let f = LogicFlow {
            id: 0,
            conditions: vec![SignConstraint::inactive(0, 0)],
            output_class: 1,
            source_leaf: 0,
            merged_leaves: vec![],
        };
        schedule(net, &[f]).unwrap()
    }

    #[test]
    fn fixture_a_costs() {
        let net = fixture_a();
        let data = Dataset::grid(&net, Role::Infer);
        let (r, h) = bench(&net, &fixture_a_plan(&net), &data, &CostModel::default()).unwrap();
        // 8 MACs + 2 ReLU compares + 1 argmax compare
        assert!(r.samples.iter().all(|s| s.total == 11));
        // exit: 2 MACs, 1 ReLU, 1 mask test, 1 branch
        assert_eq!(h.min(), 5);
        // fallback: reference plus one mask test
        assert_eq!(h.max(), 12);
        assert_eq!(h.exits(), 8);
        assert_eq!(h.sum(), 8 * 5 + 56 * 12);
        let c = compare(&r, &h).unwrap();
        assert!(c.min.percent > 0.0);
        assert_eq!(c.exit_fraction, 0.125);
        assert_eq!(c.reference_accuracy, 1.0);
        assert_eq!(c.hybrid_accuracy, 1.0);
        assert!(c.max.percent < 0.0);
        assert!(c.to_table().contains("exit by tree"));
    }

    #[test]
    fn identical_reports_have_zero_deltas() {
        let net = fixture_a();
        let data = Dataset::grid(&net, Role::Infer);
        let (r, _) = bench(&net, &ExecutionPlan::empty(&net), &data, &CostModel::default()).unwrap();
        let c = compare(&r, &r).unwrap();
        for d in [c.min, c.avg, c.max, c.later_layers] {
            assert_eq!(d.percent, 0.0);
        }
    }

    #[test]
    fn weights_scale_buckets() {
        let net = fixture_a();
        let data = Dataset::grid(&net, Role::Infer);
        let model = CostModel::new(3, 2, 5, 7).unwrap();
        let (r, h) = bench(&net, &fixture_a_plan(&net), &data, &model).unwrap();
        assert_eq!(r.max(), 8 * 3 + 3 * 2);
        assert_eq!(h.min(), 2 * 3 + 2 + 5 + 7);
        let (layers, checks) = r.layer_totals();
        assert_eq!(layers, vec![64 * (4 * 3 + 2 * 2), 64 * (4 * 3 + 2)]);
        assert_eq!(checks, 0);
        assert!(CostModel::new(1, 0, 1, 1).is_err());
    }

    #[test]
    fn mismatched_and_empty_datasets_are_rejected() {
        let net = fixture_a();
        let plan = ExecutionPlan::empty(&net);
        assert!(matches!(
            bench(&net, &plan, &Dataset::new(vec![], Role::Infer), &CostModel::default()),
            Err(CostError::EmptyDataset)
        ));
        let all = Dataset::grid(&net, Role::Infer);
        let half = Dataset::new(all.rows[..32].to_vec(), Role::Infer);
        let (a, _) = bench(&net, &plan, &all, &CostModel::default()).unwrap();
        let (b, _) = bench(&net, &plan, &half, &CostModel::default()).unwrap();
        assert!(compare(&a, &b).is_err());
    }
}
