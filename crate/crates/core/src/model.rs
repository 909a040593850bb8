//! Quantized fully-connected ReLU networks and their exact integer evaluation.
//!
//! Every hidden neuron is addressed by a [`NeuronId`]; the canonical neuron
//! order (layer-major, index-minor) is shared by the tree, the solver, the
//! flow planner and the code generator.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed model document: {0}")]
    Schema(String),
    #[error("non-integer value at {location}")]
    NonInteger { location: String },
    #[error("value at {location} does not fit in 32 bits: {value}")]
    OutOfRange { location: String, value: i64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("empty input domain for feature {feature}: [{lo}, {hi}]")]
    EmptyDomain { feature: usize, lo: i64, hi: i64 },
    #[error("neuron {neuron} may overflow a 64-bit accumulator (bound [{lo}, {hi}])")]
    Overflow { neuron: NeuronId, lo: i128, hi: i128 },
    #[error("input {value} for feature {feature} is outside [{lo}, {hi}]")]
    OutOfDomain { feature: usize, value: i64, lo: i64, hi: i64 },
}

/// Address of a neuron. Output neurons live in the last layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NeuronId {
    pub layer: usize,
    pub index: usize,
}

impl NeuronId {
    pub fn new(layer: usize, index: usize) -> Self {
        Self { layer, index }
    }
}

impl fmt::Display for NeuronId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h{}_{}", self.layer, self.index)
    }
}

/// Closed integer interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: i64,
    pub hi: i64,
}

impl Interval {
    pub fn new(lo: i64, hi: i64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, v: i64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn width(&self) -> u128 {
        (self.hi as i128 - self.lo as i128 + 1).max(0) as u128
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseLayer {
    /// Row-major, one row per output neuron.
    pub weights: Vec<Vec<i64>>,
    pub biases: Vec<i64>,
}

impl DenseLayer {
    pub fn inputs(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn outputs(&self) -> usize {
        self.biases.len()
    }

    fn neuron(&self, index: usize, input: &[i64]) -> i64 {
        self.weights[index]
            .iter()
            .zip(input)
            .fold(self.biases[index], |acc, (w, v)| acc + w * v)
    }
}

/// On/off state of every hidden neuron in canonical order; `true` means
/// the pre-activation is at least 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActivationPattern(pub Vec<bool>);

impl ActivationPattern {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.0[i]
    }
}

impl fmt::Display for ActivationPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "T" } else { "F" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Forward {
    pub logits: Vec<i64>,
    pub pattern: ActivationPattern,
    /// Hidden pre-activations in canonical order.
    pub preacts: Vec<i64>,
}

impl Forward {
    pub fn class(&self) -> usize {
        argmax(&self.logits)
    }
}

/// Argmax with ties broken toward the lower index.
pub fn argmax(logits: &[i64]) -> usize {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate().skip(1) {
        if v > logits[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OpCounts {
    pub macs_per_layer: Vec<usize>,
    pub hidden_compares: usize,
    pub argmax_compares: usize,
}

impl OpCounts {
    pub fn total_macs(&self) -> usize {
        self.macs_per_layer.iter().sum()
    }
}

/// On-disk model document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub name: String,
    pub input_dim: usize,
    pub input_domain: Vec<[serde_json::Number; 2]>,
    pub layers: Vec<LayerFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerFile {
    pub weights: Vec<Vec<serde_json::Number>>,
    pub biases: Vec<serde_json::Number>,
}

/// Validated integer network. Immutable once constructed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedMLP {
    name: String,
    input_dim: usize,
    input_domain: Vec<Interval>,
    layers: Vec<DenseLayer>,
    hidden_offsets: Vec<usize>,
}

pub fn load_model(document: &str) -> Result<QuantizedMLP, ModelError> {
    let file: ModelFile =
        serde_json::from_str(document).map_err(|e| ModelError::Schema(e.to_string()))?;
    QuantizedMLP::from_file(&file)
}

fn integer(n: &serde_json::Number, location: impl Fn() -> String) -> Result<i64, ModelError> {
    let value = n.as_i64().ok_or_else(|| ModelError::NonInteger { location: location() })?;
    if i32::try_from(value).is_err() {
        return Err(ModelError::OutOfRange { location: location(), value });
    }
    Ok(value)
}

impl QuantizedMLP {
    pub fn from_file(file: &ModelFile) -> Result<Self, ModelError> {
        let mut domain = Vec::with_capacity(file.input_domain.len());
        for (i, [lo, hi]) in file.input_domain.iter().enumerate() {
            let lo = integer(lo, || format!("input_domain[{i}][0]"))?;
            let hi = integer(hi, || format!("input_domain[{i}][1]"))?;
            domain.push(Interval::new(lo, hi));
        }
        let mut layers = Vec::with_capacity(file.layers.len());
        for (l, layer) in file.layers.iter().enumerate() {
            let weights = layer
                .weights
                .iter()
                .enumerate()
                .map(|(r, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(c, w)| integer(w, || format!("layers[{l}].weights[{r}][{c}]")))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            let biases = layer
                .biases
                .iter()
                .enumerate()
                .map(|(r, b)| integer(b, || format!("layers[{l}].biases[{r}]")))
                .collect::<Result<Vec<_>, _>>()?;
            layers.push(DenseLayer { weights, biases });
        }
        Self::new(file.name.clone(), file.input_dim, domain, layers)
    }

    pub fn new(
        name: impl Into<String>,
        input_dim: usize,
        input_domain: Vec<Interval>,
        layers: Vec<DenseLayer>,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        if name.is_empty() {
            return Err(ModelError::Schema("model name is empty".into()));
        }
        if input_domain.len() != input_dim {
            return Err(ModelError::Dimension(format!(
                "input_domain has {} entries, input_dim is {input_dim}",
                input_domain.len()
            )));
        }
        for (feature, iv) in input_domain.iter().enumerate() {
            if iv.lo > iv.hi {
                return Err(ModelError::EmptyDomain { feature, lo: iv.lo, hi: iv.hi });
            }
        }
        if layers.is_empty() {
            return Err(ModelError::Dimension("network has no layers".into()));
        }
        let mut width = input_dim;
        for (l, layer) in layers.iter().enumerate() {
            if layer.biases.is_empty() {
                return Err(ModelError::Dimension(format!("layer {l} has no neurons")));
            }
            if layer.weights.len() != layer.biases.len() {
                return Err(ModelError::Dimension(format!(
                    "layer {l} has {} weight rows but {} biases",
                    layer.weights.len(),
                    layer.biases.len()
                )));
            }
            for (r, row) in layer.weights.iter().enumerate() {
                if row.len() != width {
                    return Err(ModelError::Dimension(format!(
                        "layer {l} row {r} has {} inputs, expected {width}",
                        row.len()
                    )));
                }
            }
            width = layer.outputs();
        }
        let mut hidden_offsets = Vec::with_capacity(layers.len());
        let mut acc = 0;
        for layer in &layers[..layers.len() - 1] {
            hidden_offsets.push(acc);
            acc += layer.outputs();
        }
        hidden_offsets.push(acc);
        let net = Self { name, input_dim, input_domain, layers, hidden_offsets };
        net.check_accumulators()?;
        Ok(net)
    }

    /// Rejects networks whose pre-activations (or any partial sum) could
    /// leave the i64 range for some input in the declared domain.
    fn check_accumulators(&self) -> Result<(), ModelError> {
        let mut input: Vec<(i128, i128)> =
            self.input_domain.iter().map(|iv| (iv.lo as i128, iv.hi as i128)).collect();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut next = Vec::with_capacity(layer.outputs());
            for (i, row) in layer.weights.iter().enumerate() {
                let b = layer.biases[i] as i128;
                let (mut lo, mut hi) = (b, b);
                // Bound the running partial sum as well as the final value.
                let (mut worst_lo, mut worst_hi) = (b, b);
                for (w, &(a, z)) in row.iter().zip(&input) {
                    let w = *w as i128;
                    let (p, q) = (w * a, w * z);
                    lo += p.min(q);
                    hi += p.max(q);
                    worst_lo = worst_lo.min(lo);
                    worst_hi = worst_hi.max(hi);
                }
                if worst_lo < i64::MIN as i128 || worst_hi > i64::MAX as i128 {
                    return Err(ModelError::Overflow {
                        neuron: NeuronId::new(l, i),
                        lo: worst_lo,
                        hi: worst_hi,
                    });
                }
                next.push(if l == last { (lo, hi) } else { (lo.max(0), hi.max(0)) });
            }
            input = next;
        }
        Ok(())
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            name: self.name.clone(),
            input_dim: self.input_dim,
            input_domain: self.input_domain.iter().map(|iv| [iv.lo.into(), iv.hi.into()]).collect(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerFile {
                    weights: l
                        .weights
                        .iter()
                        .map(|row| row.iter().map(|&w| w.into()).collect())
                        .collect(),
                    biases: l.biases.iter().map(|&b| b.into()).collect(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("model serializes")
    }

    /// SHA-256 over the canonical compact JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.to_file()).expect("model serializes");
        hex(&Sha256::digest(bytes))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn input_domain(&self) -> &[Interval] {
        &self.input_domain
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn class_count(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::outputs)
    }

    pub fn hidden_layer_count(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn hidden_count(&self) -> usize {
        self.hidden_offsets[self.layers.len() - 1]
    }

    /// Hidden neurons in canonical order.
    pub fn hidden_neurons(&self) -> impl Iterator<Item = NeuronId> + '_ {
        self.layers[..self.layers.len() - 1]
            .iter()
            .enumerate()
            .flat_map(|(l, layer)| (0..layer.outputs()).map(move |i| NeuronId::new(l, i)))
    }

    /// Position of a hidden neuron in canonical order.
    pub fn hidden_position(&self, id: NeuronId) -> Option<usize> {
        (id.layer + 1 < self.layers.len() && id.index < self.layers[id.layer].outputs())
            .then(|| self.hidden_offsets[id.layer] + id.index)
    }

    pub fn hidden_at(&self, position: usize) -> NeuronId {
        let layer = self.hidden_offsets.partition_point(|&o| o <= position) - 1;
        NeuronId::new(layer, position - self.hidden_offsets[layer])
    }

    pub fn contains_neuron(&self, id: NeuronId) -> bool {
        id.layer < self.layers.len() && id.index < self.layers[id.layer].outputs()
    }

    pub fn check_input(&self, x: &[i64]) -> Result<(), ModelError> {
        if x.len() != self.input_dim {
            return Err(ModelError::Dimension(format!(
                "input has {} features, expected {}",
                x.len(),
                self.input_dim
            )));
        }
        for (feature, (&value, iv)) in x.iter().zip(&self.input_domain).enumerate() {
            if !iv.contains(value) {
                return Err(ModelError::OutOfDomain { feature, value, lo: iv.lo, hi: iv.hi });
            }
        }
        Ok(())
    }

    pub fn forward(&self, x: &[i64]) -> Result<Forward, ModelError> {
        self.check_input(x)?;
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[i64]) -> Forward {
        let hidden = self.hidden_count();
        let mut preacts = Vec::with_capacity(hidden);
        let mut bits = Vec::with_capacity(hidden);
        let mut input = x.to_vec();
        let last = self.layers.len() - 1;
        for layer in &self.layers[..last] {
            input = (0..layer.outputs())
                .map(|i| {
                    let z = layer.neuron(i, &input);
                    preacts.push(z);
                    bits.push(z >= 1);
                    z.max(0)
                })
                .collect();
        }
        let out = &self.layers[last];
        let logits = (0..out.outputs()).map(|i| out.neuron(i, &input)).collect();
        Forward { logits, pattern: ActivationPattern(bits), preacts }
    }

    pub fn predict(&self, x: &[i64]) -> Result<usize, ModelError> {
        Ok(self.forward(x)?.class())
    }

    /// Single-neuron pre-activation given the previous layer's activations.
    pub fn preact(&self, id: NeuronId, input: &[i64]) -> i64 {
        self.layers[id.layer].neuron(id.index, input)
    }

    pub fn neuron_cost_counts(&self) -> OpCounts {
        OpCounts {
            macs_per_layer: self.layers.iter().map(|l| l.outputs() * l.inputs()).collect(),
            hidden_compares: self.hidden_count(),
            argmax_compares: self.class_count().saturating_sub(1),
        }
    }

    pub fn domain_size(&self) -> u128 {
        self.input_domain.iter().map(Interval::width).product()
    }

    /// All inputs of the domain in lexicographic order (feature 0 most significant).
    pub fn grid(&self) -> InputGrid<'_> {
        InputGrid { domain: &self.input_domain, next: Some(self.input_domain.iter().map(|iv| iv.lo).collect()) }
    }

    /// Affine text of a neuron's pre-activation, e.g. `2*x0 - 1`.
    pub fn affine_text(&self, id: NeuronId) -> String {
        let layer = &self.layers[id.layer];
        let var = |k: usize| {
            if id.layer == 0 {
                format!("x{k}")
            } else {
                format!("relu({})", NeuronId::new(id.layer - 1, k))
            }
        };
        let mut out = String::new();
        for (k, &w) in layer.weights[id.index].iter().enumerate() {
            if w == 0 {
                continue;
            }
            let mag = w.unsigned_abs();
            let term = if mag == 1 { var(k) } else { format!("{mag}*{}", var(k)) };
            if out.is_empty() {
                if w < 0 {
                    out.push('-');
                }
            } else {
                out.push_str(if w < 0 { " - " } else { " + " });
            }
            out.push_str(&term);
        }
        let b = layer.biases[id.index];
        if out.is_empty() {
            out = b.to_string();
        } else if b != 0 {
            out.push_str(if b < 0 { " - " } else { " + " });
            out.push_str(&b.unsigned_abs().to_string());
        }
        out
    }
}

/// Which side of zero a pre-activation lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    /// `z <= 0`
    Inactive,
    /// `z >= 1`
    Active,
}

impl Polarity {
    pub fn from_active(active: bool) -> Self {
        if active {
            Polarity::Active
        } else {
            Polarity::Inactive
        }
    }

    pub fn holds(self, preact: i64) -> bool {
        match self {
            Polarity::Active => preact >= 1,
            Polarity::Inactive => preact <= 0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Polarity::Active => Polarity::Inactive,
            Polarity::Inactive => Polarity::Active,
        }
    }

    pub fn relation_text(self) -> &'static str {
        match self {
            Polarity::Active => ">= 1",
            Polarity::Inactive => "<= 0",
        }
    }
}

/// A hidden neuron's sign condition. Orders canonically by neuron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SignConstraint {
    pub neuron: NeuronId,
    pub polarity: Polarity,
}

impl SignConstraint {
    pub fn new(neuron: NeuronId, polarity: Polarity) -> Self {
        Self { neuron, polarity }
    }

    pub fn active(layer: usize, index: usize) -> Self {
        Self::new(NeuronId::new(layer, index), Polarity::Active)
    }

    pub fn inactive(layer: usize, index: usize) -> Self {
        Self::new(NeuronId::new(layer, index), Polarity::Inactive)
    }

    /// Does the forward pass satisfy this condition?
    pub fn holds(&self, net: &QuantizedMLP, forward: &Forward) -> bool {
        let pos = net.hidden_position(self.neuron).expect("sign constraint on a hidden neuron");
        self.polarity.holds(forward.preacts[pos])
    }

    /// e.g. `2*x0 - 1 >= 1`
    pub fn text(&self, net: &QuantizedMLP) -> String {
        format!("{} {}", net.affine_text(self.neuron), self.polarity.relation_text())
    }
}

impl fmt::Display for SignConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.neuron, self.polarity.relation_text())
    }
}

pub struct InputGrid<'a> {
    domain: &'a [Interval],
    next: Option<Vec<i64>>,
}

impl Iterator for InputGrid<'_> {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        for i in (0..succ.len()).rev() {
            if succ[i] < self.domain[i].hi {
                succ[i] += 1;
                self.next = Some(succ);
                return Some(current);
            }
            succ[i] = self.domain[i].lo;
        }
        Some(current)
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn loads_fixture_a_document() {
        let net = load_model(fixtures::FIXTURE_A_JSON).unwrap();
        assert_eq!(net.input_dim(), 2);
        assert_eq!(net.layers()[0].outputs(), 2);
        assert_eq!(net.class_count(), 2);
        assert_eq!(net.input_domain(), &[Interval::new(0, 7), Interval::new(0, 7)]);
        assert_eq!(net, fixtures::fixture_a());
    }

    #[test]
    fn rejects_inconsistent_shapes() {
        let doc = r#"{"name":"bad","input_dim":2,"input_domain":[[0,1],[0,1]],
            "layers":[{"weights":[[1,0],[0,1],[1,1]],"biases":[0,0,0]},
                      {"weights":[[1,0,0,0],[0,1,0,0]],"biases":[0,0]}]}"#;
        assert!(matches!(load_model(doc), Err(ModelError::Dimension(_))));
    }

    #[test]
    fn rejects_fractional_weight() {
        let doc = r#"{"name":"bad","input_dim":1,"input_domain":[[0,1]],
            "layers":[{"weights":[[1.5]],"biases":[0]}]}"#;
        match load_model(doc) {
            Err(ModelError::NonInteger { location }) => assert_eq!(location, "layers[0].weights[0][0]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_accumulator_overflow() {
        let doc = r#"{"name":"big","input_dim":2,"input_domain":[[0,2147483647],[0,2147483647]],
            "layers":[{"weights":[[2147483647,2147483647]],"biases":[0]},
                      {"weights":[[2147483647],[1]],"biases":[0,0]}]}"#;
        assert!(matches!(load_model(doc), Err(ModelError::Overflow { .. })));
    }

    #[test]
    fn rejects_empty_domain_and_schema_errors() {
        let doc = r#"{"name":"e","input_dim":1,"input_domain":[[3,2]],
            "layers":[{"weights":[[1]],"biases":[0]}]}"#;
        assert!(matches!(load_model(doc), Err(ModelError::EmptyDomain { feature: 0, .. })));
        assert!(matches!(load_model("{\"name\": 3}"), Err(ModelError::Schema(_))));
    }

    #[test]
    fn zero_network_outputs_biases() {
        let doc = r#"{"name":"zero","input_dim":2,"input_domain":[[0,0],[0,0]],
            "layers":[{"weights":[[0,0],[0,0]],"biases":[0,0]},
                      {"weights":[[0,0],[0,0]],"biases":[4,-2]}]}"#;
        let net = load_model(doc).unwrap();
        let f = net.forward(&[0, 0]).unwrap();
        assert_eq!(f.logits, vec![4, -2]);
        assert_eq!(f.class(), 0);
    }

    #[test]
    fn fixture_a_forward_matches_hand_arithmetic() {
        let net = fixtures::fixture_a();
        let f = net.forward(&[0, 1]).unwrap();
        assert_eq!(f.preacts, vec![-1, 1]);
        assert_eq!(f.pattern, ActivationPattern(vec![false, true]));
        assert_eq!(net.predict(&[0, 7]).unwrap(), 1);
    }

    #[test]
    fn fixture_a_x0_zero_always_class_one() {
        let net = fixtures::fixture_a();
        let mut seen = 0;
        for x in net.grid() {
            let f = net.forward(&x).unwrap();
            for (z, b) in f.preacts.iter().zip(&f.pattern.0) {
                assert_eq!(*b, *z >= 1);
            }
            if x[0] == 0 {
                assert_eq!(f.class(), 1, "x = {x:?}");
                seen += 1;
            }
        }
        assert_eq!(seen, 8);
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[3, 3]), 0);
        assert_eq!(argmax(&[-1, 5]), 1);
        assert_eq!(argmax(&[2, 7, 7]), 1);
    }

    #[test]
    fn out_of_domain_input_is_rejected() {
        let net = fixtures::fixture_a();
        assert!(matches!(net.forward(&[8, 0]), Err(ModelError::OutOfDomain { feature: 0, .. })));
        assert!(matches!(net.forward(&[1]), Err(ModelError::Dimension(_))));
    }

    #[test]
    fn cost_counts() {
        let net = fixtures::dense_zero("t", &[2, 3, 2]);
        let c = net.neuron_cost_counts();
        assert_eq!(c.macs_per_layer, vec![6, 6]);
        assert_eq!((c.hidden_compares, c.argmax_compares), (3, 1));
        assert_eq!(fixtures::dense_zero("m", &[25, 30, 2]).neuron_cost_counts().macs_per_layer, vec![750, 60]);
        assert_eq!(fixtures::dense_zero("o", &[10, 20, 2]).neuron_cost_counts().macs_per_layer, vec![200, 40]);
    }

    #[test]
    fn grid_is_lexicographic_and_complete() {
        let net = fixtures::fixture_a();
        let grid: Vec<_> = net.grid().collect();
        assert_eq!(grid.len(), 64);
        assert_eq!(grid[0], vec![0, 0]);
        assert_eq!(grid[1], vec![0, 1]);
        assert_eq!(grid[63], vec![7, 7]);
        assert_eq!(net.domain_size(), 64);
    }

    #[test]
    fn hidden_positions_round_trip() {
        let net = fixtures::fixture_c();
        for (pos, id) in net.hidden_neurons().enumerate() {
            assert_eq!(net.hidden_position(id), Some(pos));
            assert_eq!(net.hidden_at(pos), id);
        }
        assert_eq!(net.hidden_position(NeuronId::new(1, 0)), None);
    }

    #[test]
    fn affine_text_formats() {
        let net = fixtures::fixture_a();
        assert_eq!(net.affine_text(NeuronId::new(0, 0)), "2*x0 - 1");
        assert_eq!(net.affine_text(NeuronId::new(0, 1)), "3*x1 - 2");
        assert_eq!(net.affine_text(NeuronId::new(1, 1)), "-relu(h0_0) + relu(h0_1) + 1");
    }

    #[test]
    fn json_round_trip_preserves_hash() {
        let net = fixtures::fixture_c();
        let again = load_model(&net.to_json()).unwrap();
        assert_eq!(net, again);
        assert_eq!(net.hash(), again.hash());
    }
}
