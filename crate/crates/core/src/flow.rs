//! Early-exit plans: which neurons to compute up front, which sign
//! conditions to track, and which flows may return before the full network.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::iis::{per_rival_union, IisResult};
use crate::model::{hex, ModelError, NeuronId, QuantizedMLP, SignConstraint};
use crate::tree::{DecisionTree, LeafId, Verdict};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FlowError {
    #[error("flow {flow} references {neuron}, which is not a hidden neuron of the network")]
    UnknownNeuron { flow: usize, neuron: NeuronId },
    #[error("plan was built for model {expected}, not {found}")]
    ModelMismatch { expected: String, found: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicFlow {
    pub id: usize,
    pub conditions: Vec<SignConstraint>,
    pub output_class: usize,
    pub source_leaf: LeafId,
    /// Other leaves whose condition set was identical.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub merged_leaves: Vec<LeafId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SelectionEvent {
    Merged { leaf: LeafId, into_leaf: LeafId },
    Subsumed { leaf: LeafId, by_leaf: LeafId },
    Truncated { leaf: LeafId },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowSelection {
    pub flows: Vec<LogicFlow>,
    pub log: Vec<SelectionEvent>,
}

/// One flow per constant leaf that has IIS results, then dedup, subsumption,
/// ordering by (condition count, leaf id) and truncation to `max_flows`.
pub fn extract_flows(tree: &DecisionTree, iis: &BTreeMap<LeafId, Vec<IisResult>>, max_flows: usize) -> FlowSelection {
    let mut candidates: Vec<(Vec<SignConstraint>, usize, LeafId)> = tree
        .leaves()
        .iter()
        .filter_map(|leaf| match leaf.verdict {
            Verdict::Constant(class) => iis.get(&leaf.id).map(|r| (per_rival_union(r), class, leaf.id)),
            _ => None,
        })
        .collect();
    candidates.sort_by_key(|c| (c.0.len(), c.2));

    let mut selection = FlowSelection::default();
    'next: for (conditions, class, leaf) in candidates {
        for kept in selection.flows.iter_mut().filter(|f| f.output_class == class) {
            if kept.conditions == conditions {
                kept.merged_leaves.push(leaf);
                selection.log.push(SelectionEvent::Merged { leaf, into_leaf: kept.source_leaf });
                continue 'next;
            }
            if kept.conditions.iter().all(|c| conditions.contains(c)) {
                selection.log.push(SelectionEvent::Subsumed { leaf, by_leaf: kept.source_leaf });
                continue 'next;
            }
        }
        if selection.flows.len() >= max_flows {
            selection.log.push(SelectionEvent::Truncated { leaf });
            continue;
        }
        let id = selection.flows.len();
        selection.flows.push(LogicFlow { id, conditions, output_class: class, source_leaf: leaf, merged_leaves: vec![] });
    }
    selection
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedFlow {
    #[serde(flatten)]
    pub flow: LogicFlow,
    /// Required slot bits, 32 slots per word.
    pub mask: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionPlan {
    pub model_name: String,
    pub model_hash: String,
    pub prologue: Vec<NeuronId>,
    /// Tracked (neuron, polarity) pairs; slot k is bit k%32 of word k/32.
    pub slots: Vec<SignConstraint>,
    pub flows: Vec<PlannedFlow>,
    #[serde(default)]
    pub selection_log: Vec<SelectionEvent>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl ExecutionPlan {
    /// A plan with no flows; evaluating it is the reference program.
    pub fn empty(net: &QuantizedMLP) -> Self {
        Self {
            model_name: net.name().to_string(),
            model_hash: net.hash(),
            prologue: vec![],
            slots: vec![],
            flows: vec![],
            selection_log: vec![],
            warnings: vec![],
        }
    }

    pub fn words(&self) -> usize {
        self.slots.len().div_ceil(32)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn hash(&self) -> String {
        hex(&Sha256::digest(serde_json::to_vec(self).expect("plan serializes")))
    }

    pub fn check_model(&self, net: &QuantizedMLP) -> Result<(), FlowError> {
        let found = net.hash();
        if self.model_hash != found {
            return Err(FlowError::ModelMismatch { expected: self.model_hash.clone(), found });
        }
        Ok(())
    }
}

/// Hidden neurons needed to evaluate `roots`: each neuron past the first
/// hidden layer pulls in the previous-layer neurons it has nonzero weights on.
pub fn layer_closure(net: &QuantizedMLP, roots: impl IntoIterator<Item = NeuronId>) -> BTreeSet<NeuronId> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<NeuronId> = roots.into_iter().collect();
    while let Some(n) = stack.pop() {
        if !seen.insert(n) || n.layer == 0 {
            continue;
        }
        let row = &net.layers()[n.layer].weights[n.index];
        stack.extend(row.iter().enumerate().filter(|(_, &w)| w != 0).map(|(j, _)| NeuronId::new(n.layer - 1, j)));
    }
    seen
}

pub fn schedule(net: &QuantizedMLP, flows: &[LogicFlow]) -> Result<ExecutionPlan, FlowError> {
    let hidden = net.hidden_count();
    let mut warnings = Vec::new();
    let mut all = BTreeSet::new();
    for f in flows {
        if let Some(c) = f.conditions.iter().find(|c| !net.contains_neuron(c.neuron)) {
            return Err(FlowError::UnknownNeuron { flow: f.id, neuron: c.neuron });
        }
        let closure = layer_closure(net, f.conditions.iter().map(|c| c.neuron));
        if hidden > 0 && closure.len() == hidden {
            warnings.push(format!("flow {} saves nothing: its conditions need every hidden neuron", f.id));
        }
        all.extend(closure);
    }
    let slots: Vec<SignConstraint> =
        flows.iter().flat_map(|f| f.conditions.iter().copied()).collect::<BTreeSet<_>>().into_iter().collect();
    let words = slots.len().div_ceil(32);
    let planned = flows
        .iter()
        .map(|f| {
            let mut mask = vec![0u32; words];
            for c in &f.conditions {
                let k = slots.binary_search(c).expect("slot exists");
                mask[k / 32] |= 1 << (k % 32);
            }
            PlannedFlow { flow: f.clone(), mask }
        })
        .collect();
    Ok(ExecutionPlan {
        model_name: net.name().to_string(),
        model_hash: net.hash(),
        prologue: all.into_iter().collect(),
        slots,
        flows: planned,
        selection_log: vec![],
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "flow", rename_all = "snake_case")]
pub enum ExitKind {
    Flow(usize),
    FullNetwork,
}

/// Operations actually executed by one evaluation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    /// Indexed by layer, output layer last.
    pub macs: Vec<u64>,
    /// ReLU compares per hidden layer; the output entry holds argmax compares.
    pub compares: Vec<u64>,
    pub mask_tests: u64,
    pub branches: u64,
    /// Hidden neurons whose dot product was evaluated, in execution order.
    pub computed: Vec<NeuronId>,
}

impl Trace {
    fn new(layers: usize) -> Self {
        Self { macs: vec![0; layers], compares: vec![0; layers], ..Default::default() }
    }

    pub fn total_macs(&self) -> u64 {
        self.macs.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HybridResult {
    pub class: usize,
    pub exit: ExitKind,
    pub trace: Trace,
}

struct State<'a> {
    net: &'a QuantizedMLP,
    x: &'a [i64],
    /// Pre-activations of hidden neurons, None until computed.
    z: Vec<Vec<Option<i64>>>,
    trace: Trace,
}

impl State<'_> {
    fn input(&self, layer: usize, j: usize) -> i64 {
        if layer == 0 {
            self.x[j]
        } else {
            // uncomputed inputs only ever meet zero weights
            self.z[layer - 1][j].unwrap_or(0).max(0)
        }
    }

    fn affine(&mut self, layer: usize, i: usize) -> i64 {
        let l = &self.net.layers()[layer];
        let mut acc = l.biases[i];
        for (j, &w) in l.weights[i].iter().enumerate() {
            debug_assert!(w == 0 || layer == 0 || self.z[layer - 1][j].is_some());
            acc += w * self.input(layer, j);
        }
        self.trace.macs[layer] += l.weights[i].len() as u64;
        acc
    }

    fn hidden(&mut self, n: NeuronId) -> i64 {
        if let Some(v) = self.z[n.layer][n.index] {
            return v;
        }
        let v = self.affine(n.layer, n.index);
        self.trace.compares[n.layer] += 1;
        self.trace.computed.push(n);
        self.z[n.layer][n.index] = Some(v);
        v
    }
}

/// Runs the hybrid program on `x`: prologue, slot bits, flow tests in plan
/// order, then the remaining network if no flow matched.
pub fn hybrid_eval(net: &QuantizedMLP, plan: &ExecutionPlan, x: &[i64]) -> Result<HybridResult, ModelError> {
    net.check_input(x)?;
    let layers = net.layers();
    let mut st = State {
        net,
        x,
        z: layers[..layers.len() - 1].iter().map(|l| vec![None; l.outputs()]).collect(),
        trace: Trace::new(layers.len()),
    };
    for &n in &plan.prologue {
        st.hidden(n);
    }
    // slot bits are a by-product of the prologue ReLU decisions
    let mut words = vec![0u32; plan.words()];
    for (k, s) in plan.slots.iter().enumerate() {
        let z = st.z[s.neuron.layer][s.neuron.index].expect("slot neurons are in the prologue");
        if s.polarity.holds(z) {
            words[k / 32] |= 1 << (k % 32);
        }
    }
    for pf in &plan.flows {
        st.trace.mask_tests += 1;
        if pf.mask.iter().zip(&words).all(|(&m, &w)| w & m == m) {
            st.trace.branches += 1;
            return Ok(HybridResult { class: pf.flow.output_class, exit: ExitKind::Flow(pf.flow.id), trace: st.trace });
        }
    }
    for n in net.hidden_neurons() {
        st.hidden(n);
    }
    let out = layers.len() - 1;
    let logits: Vec<i64> = (0..layers[out].outputs()).map(|i| st.affine(out, i)).collect();
    st.trace.compares[out] += logits.len().saturating_sub(1) as u64;
    Ok(HybridResult { class: crate::model::argmax(&logits), exit: ExitKind::FullNetwork, trace: st.trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{fixture_a, fixture_deep};
    use crate::tree::build_tree;
    use crate::dataset::{Dataset, Role, Sample};

    fn flow(id: usize, conditions: Vec<SignConstraint>, class: usize, leaf: LeafId) -> LogicFlow {
        LogicFlow { id, conditions, output_class: class, source_leaf: leaf, merged_leaves: vec![] }
    }

    fn iis(kept: Vec<SignConstraint>, leaf_class: usize) -> IisResult {
        IisResult { kept, rival_class: 1 - leaf_class, leaf_class, irreducible: true, certificate: None }
    }

    fn fixture_a_tree(rows: &[[i64; 2]]) -> DecisionTree {
        let net = fixture_a();
        let data = Dataset::new(rows.iter().map(|x| Sample { x: x.to_vec(), label: 0 }).collect(), Role::Train);
        build_tree(&net, &data).unwrap()
    }

    #[test]
    fn dedup_and_subsumption() {
        // leaves FF, FT, TT
        let mut tree = fixture_a_tree(&[[0, 0], [0, 5], [3, 3]]);
        for id in [0, 1] {
            tree.set_verdict(id, Verdict::Constant(1)).unwrap();
        }
        let h0 = SignConstraint::inactive(0, 0);
        let h1 = SignConstraint::active(0, 1);
        let results: BTreeMap<_, _> = [(0, vec![iis(vec![h0], 1)]), (1, vec![iis(vec![h0], 1)])].into();
        let sel = extract_flows(&tree, &results, 16);
        assert_eq!(sel.flows, vec![LogicFlow { merged_leaves: vec![1], ..flow(0, vec![h0], 1, 0) }]);
        assert_eq!(sel.log, vec![SelectionEvent::Merged { leaf: 1, into_leaf: 0 }]);

        let results: BTreeMap<_, _> = [(0, vec![iis(vec![h0, h1], 1)]), (1, vec![iis(vec![h0], 1)])].into();
        let sel = extract_flows(&tree, &results, 16);
        assert_eq!(sel.flows, vec![flow(0, vec![h0], 1, 1)]);
        assert_eq!(sel.log, vec![SelectionEvent::Subsumed { leaf: 0, by_leaf: 1 }]);

        let results: BTreeMap<_, _> = [(0, vec![iis(vec![h0, h1], 1)]), (1, vec![iis(vec![h1], 0)])].into();
        tree.set_verdict(1, Verdict::Constant(0)).unwrap();
        let sel = extract_flows(&tree, &results, 1);
        assert_eq!(sel.flows, vec![flow(0, vec![h1], 0, 1)]);
        assert_eq!(sel.log, vec![SelectionEvent::Truncated { leaf: 0 }]);
    }

    #[test]
    fn first_layer_conditions_need_no_closure() {
        let net = fixture_a();
        let plan = schedule(&net, &[flow(0, vec![SignConstraint::inactive(0, 0)], 1, 0)]).unwrap();
        assert_eq!(plan.prologue, vec![NeuronId::new(0, 0)]);
        assert_eq!(plan.slots, vec![SignConstraint::inactive(0, 0)]);
        assert_eq!(plan.flows[0].mask, vec![1]);
        assert!(plan.warnings.is_empty());
        assert_eq!(plan.model_hash, net.hash());
    }

    #[test]
    fn deep_conditions_pull_in_their_inputs() {
        let net = fixture_deep();
        let n = NeuronId::new(1, 0);
        let expected: BTreeSet<_> = std::iter::once(n)
            .chain(net.layers()[1].weights[0].iter().enumerate().filter(|(_, &w)| w != 0).map(|(j, _)| NeuronId::new(0, j)))
            .collect();
        let plan = schedule(&net, &[flow(0, vec![SignConstraint::active(1, 0)], 0, 0)]).unwrap();
        assert_eq!(plan.prologue, expected.into_iter().collect::<Vec<_>>());
        let bad = schedule(&net, &[flow(3, vec![SignConstraint::active(4, 0)], 0, 0)]);
        assert_eq!(bad, Err(FlowError::UnknownNeuron { flow: 3, neuron: NeuronId::new(4, 0) }));
    }

    #[test]
    fn whole_network_closure_warns() {
        let net = fixture_a();
        let plan = schedule(&net, &[flow(0, vec![SignConstraint::active(0, 0), SignConstraint::active(0, 1)], 0, 0)]).unwrap();
        assert_eq!(plan.warnings.len(), 1);
        assert!(plan.warnings[0].contains("saves nothing"));
    }

    #[test]
    fn fixture_a_early_exit_trace() {
        let net = fixture_a();
        let plan = schedule(&net, &[flow(0, vec![SignConstraint::inactive(0, 0)], 1, 0)]).unwrap();
        let r = hybrid_eval(&net, &plan, &[0, 5]).unwrap();
        assert_eq!((r.class, r.exit), (1, ExitKind::Flow(0)));
        assert_eq!(r.trace.total_macs(), 2);
        assert_eq!(r.trace.computed, vec![NeuronId::new(0, 0)]);

        let r = hybrid_eval(&net, &plan, &[3, 3]).unwrap();
        assert_eq!(r.exit, ExitKind::FullNetwork);
        assert_eq!(r.class, net.predict(&[3, 3]).unwrap());
        assert_eq!(r.trace.total_macs(), 8);

        let mut exits = 0;
        for x in net.grid() {
            let r = hybrid_eval(&net, &plan, &x).unwrap();
            assert_eq!(r.class, net.predict(&x).unwrap());
            let mut seen = r.trace.computed.clone();
            seen.sort();
            seen.dedup();
            assert_eq!(seen.len(), r.trace.computed.len(), "neuron computed twice at {x:?}");
            if let ExitKind::Flow(_) = r.exit {
                exits += 1;
                assert_eq!(x[0], 0);
            }
        }
        assert_eq!(exits, 8);
    }

    #[test]
    fn empty_plan_matches_predict_with_full_cost() {
        let net = fixture_deep();
        let plan = ExecutionPlan::empty(&net);
        let counts = net.neuron_cost_counts();
        for x in net.grid() {
            let r = hybrid_eval(&net, &plan, &x).unwrap();
            assert_eq!(r.class, net.predict(&x).unwrap());
            assert_eq!(r.trace.total_macs() as usize, counts.total_macs());
            assert_eq!(r.trace.mask_tests + r.trace.branches, 0);
        }
    }

    #[test]
    fn plan_json_round_trips() {
        let net = fixture_a();
        let plan = schedule(&net, &[flow(0, vec![SignConstraint::inactive(0, 0)], 1, 0)]).unwrap();
        let back = ExecutionPlan::from_json(&plan.to_json()).unwrap();
        assert_eq!(back, plan);
        assert_eq!(back.hash(), plan.hash());
        assert!(plan.check_model(&net).is_ok());
        assert!(plan.check_model(&fixture_deep()).is_err());
    }
}
