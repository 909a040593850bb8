//! Activation-pattern decision tree grown from training traces.
//!
//! Internal nodes are hidden-neuron sign decisions in canonical order; a
//! branch exists only if some training sample took it. The pattern→leaf map
//! is authoritative, the node structure is kept for export.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::model::{ActivationPattern, NeuronId, Polarity, QuantizedMLP, SignConstraint};

pub type LeafId = usize;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("unknown leaf {0}")]
    UnknownLeaf(LeafId),
    #[error("training sample {row}: {source}")]
    Sample { row: usize, source: crate::model::ModelError },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "class", rename_all = "snake_case")]
pub enum Verdict {
    Unverified,
    Constant(usize),
    NotConstant,
    /// Solver budget ran out; treated as not constant.
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Child {
    Node(usize),
    Leaf(LeafId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionNode {
    pub neuron: NeuronId,
    /// `[false branch, true branch]`
    pub children: [Option<Child>; 2],
    pub visits: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Leaf {
    pub id: LeafId,
    pub pattern: ActivationPattern,
    pub class_histogram: Vec<usize>,
    pub verdict: Verdict,
}

impl Leaf {
    pub fn samples(&self) -> usize {
        self.class_histogram.iter().sum()
    }

    /// The single observed class, if the histogram has exactly one nonzero bin.
    pub fn sole_class(&self) -> Option<usize> {
        let mut seen = self.class_histogram.iter().enumerate().filter(|(_, &n)| n > 0);
        match (seen.next(), seen.next()) {
            (Some((c, _)), None) => Some(c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DecisionTree {
    root: Option<Child>,
    nodes: Vec<DecisionNode>,
    leaves: Vec<Leaf>,
    by_pattern: BTreeMap<ActivationPattern, LeafId>,
    hidden: Vec<NeuronId>,
}

type Histograms = BTreeMap<ActivationPattern, Vec<usize>>;

fn merge(mut a: Histograms, b: Histograms) -> Histograms {
    for (pattern, hist) in b {
        match a.get_mut(&pattern) {
            Some(h) => h.iter_mut().zip(&hist).for_each(|(x, y)| *x += y),
            None => {
                a.insert(pattern, hist);
            }
        }
    }
    a
}

pub fn build_tree(net: &QuantizedMLP, train: &Dataset) -> Result<DecisionTree, TreeError> {
    let classes = net.class_count();
    let histograms = train
        .rows
        .par_iter()
        .enumerate()
        .map(|(row, s)| {
            let f = net.forward(&s.x).map_err(|source| TreeError::Sample { row, source })?;
            let mut hist = vec![0; classes];
            hist[f.class()] += 1;
            Ok(Histograms::from([(f.pattern, hist)]))
        })
        .try_reduce(Histograms::new, |a, b| Ok(merge(a, b)))?;
    Ok(DecisionTree::from_histograms(net, histograms))
}

impl DecisionTree {
    fn from_histograms(net: &QuantizedMLP, histograms: Histograms) -> Self {
        let hidden: Vec<NeuronId> = net.hidden_neurons().collect();
        // BTreeMap iteration is lexicographic, which fixes the leaf ids.
        let leaves: Vec<Leaf> = histograms
            .into_iter()
            .enumerate()
            .map(|(id, (pattern, class_histogram))| Leaf {
                id,
                pattern,
                class_histogram,
                verdict: Verdict::Unverified,
            })
            .collect();
        let by_pattern = leaves.iter().map(|l| (l.pattern.clone(), l.id)).collect();
        let mut tree = Self { root: None, nodes: Vec::new(), leaves, by_pattern, hidden };
        tree.grow();
        tree
    }

    fn grow(&mut self) {
        if self.hidden.is_empty() {
            self.root = self.leaves.first().map(|l| Child::Leaf(l.id));
            return;
        }
        self.nodes.push(DecisionNode { neuron: self.hidden[0], children: [None, None], visits: [0, 0] });
        self.root = Some(Child::Node(0));
        for leaf in &self.leaves {
            let count = leaf.samples();
            let mut node = 0;
            for (depth, &bit) in leaf.pattern.0.iter().enumerate() {
                let side = bit as usize;
                self.nodes[node].visits[side] += count;
                let next = if depth + 1 == self.hidden.len() {
                    Child::Leaf(leaf.id)
                } else {
                    match self.nodes[node].children[side] {
                        Some(child) => child,
                        None => {
                            self.nodes.push(DecisionNode {
                                neuron: self.hidden[depth + 1],
                                children: [None, None],
                                visits: [0, 0],
                            });
                            Child::Node(self.nodes.len() - 1)
                        }
                    }
                };
                self.nodes[node].children[side] = Some(next);
                if let Child::Node(n) = next {
                    node = n;
                }
            }
        }
    }

    pub fn root(&self) -> Option<Child> {
        self.root
    }

    pub fn nodes(&self) -> &[DecisionNode] {
        &self.nodes
    }

    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    pub fn leaf(&self, id: LeafId) -> Result<&Leaf, TreeError> {
        self.leaves.get(id).ok_or(TreeError::UnknownLeaf(id))
    }

    pub fn set_verdict(&mut self, id: LeafId, verdict: Verdict) -> Result<(), TreeError> {
        self.leaves.get_mut(id).ok_or(TreeError::UnknownLeaf(id))?.verdict = verdict;
        Ok(())
    }

    /// Sign conditions along the root-to-leaf path, in canonical order.
    pub fn path_sign_constraints(&self, id: LeafId) -> Result<Vec<SignConstraint>, TreeError> {
        let leaf = self.leaf(id)?;
        Ok(self
            .hidden
            .iter()
            .zip(&leaf.pattern.0)
            .map(|(&n, &bit)| SignConstraint::new(n, Polarity::from_active(bit)))
            .collect())
    }

    /// The leaf reached by `x`, or `None` if its pattern was never trained.
    pub fn leaf_of(&self, net: &QuantizedMLP, x: &[i64]) -> Option<LeafId> {
        let f = net.forward(x).ok()?;
        self.by_pattern.get(&f.pattern).copied()
    }

    /// Fraction of the full domain whose pattern has a leaf.
    pub fn coverage(&self, net: &QuantizedMLP) -> (u64, u64) {
        let mut hit = 0;
        let mut total = 0;
        for x in net.grid() {
            total += 1;
            if self.by_pattern.contains_key(&net.forward_unchecked(&x).pattern) {
                hit += 1;
            }
        }
        (hit, total)
    }

    pub fn to_dot(&self, net: &QuantizedMLP) -> String {
        let mut out = String::from("digraph tree {\n  node [fontname=\"monospace\"];\n");
        for (i, node) in self.nodes.iter().enumerate() {
            let label = SignConstraint::new(node.neuron, Polarity::Active).text(net);
            let _ = writeln!(out, "  n{i} [shape=box, label=\"{}\"];", label);
        }
        for leaf in &self.leaves {
            let verdict = match &leaf.verdict {
                Verdict::Constant(c) => format!("constant c{c}"),
                Verdict::NotConstant => "not constant".into(),
                Verdict::Unknown => "unknown".into(),
                Verdict::Unverified => "unverified".into(),
            };
            let _ = writeln!(
                out,
                "  l{} [shape=ellipse, label=\"L{} {}\\n{:?}\\n{}\"];",
                leaf.id, leaf.id, leaf.pattern, leaf.class_histogram, verdict
            );
        }
        let name = |c: Child| match c {
            Child::Node(n) => format!("n{n}"),
            Child::Leaf(l) => format!("l{l}"),
        };
        for (i, node) in self.nodes.iter().enumerate() {
            for (side, tag) in [(1, "T"), (0, "F")] {
                if let Some(c) = node.children[side] {
                    let _ = writeln!(out, "  n{i} -> {} [label=\"{tag} ({})\"];", name(c), node.visits[side]);
                }
            }
        }
        out.push_str("}\n");
        out
    }

    pub fn summary(&self) -> Vec<LeafSummary> {
        self.leaves
            .iter()
            .map(|l| LeafSummary {
                id: l.id,
                pattern: l.pattern.to_string(),
                histogram: l.class_histogram.clone(),
                verdict: l.verdict.clone(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeafSummary {
    pub id: LeafId,
    pub pattern: String,
    pub histogram: Vec<usize>,
    pub verdict: Verdict,
}
