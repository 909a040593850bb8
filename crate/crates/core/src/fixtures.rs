//! Small networks used by tests, examples and the acceptance suite.

use rand::Rng;

use crate::model::{load_model, DenseLayer, Interval, QuantizedMLP};

/// Two inputs in `[0,7]`, hidden `2*x0 - 1` and `3*x1 - 2`, outputs
/// `r0 - r1` and `-r0 + r1 + 1`.
pub const FIXTURE_A_JSON: &str = include_str!("../../../fixtures/fixture-a/model.json");
pub const FIXTURE_A_TRAIN_CSV: &str = include_str!("../../../fixtures/fixture-a/train.csv");

pub fn fixture_a() -> QuantizedMLP {
    load_model(FIXTURE_A_JSON).expect("fixture-a is valid")
}

/// Three classes, three hidden neurons.
pub fn fixture_c() -> QuantizedMLP {
    QuantizedMLP::new(
        "fixture_c",
        2,
        vec![Interval::new(0, 7); 2],
        vec![
            DenseLayer {
                weights: vec![vec![1, 0], vec![0, 1], vec![1, -1]],
                biases: vec![-3, -3, 0],
            },
            DenseLayer {
                weights: vec![vec![-1, -1, 0], vec![1, -1, 0], vec![-1, 1, 1]],
                biases: vec![4, 0, 0],
            },
        ],
    )
    .expect("fixture-c is valid")
}

/// Two hidden layers, so deeper sign conditions and prologue closure show up.
pub fn fixture_deep() -> QuantizedMLP {
    QuantizedMLP::new(
        "fixture_deep",
        2,
        vec![Interval::new(0, 5); 2],
        vec![
            DenseLayer { weights: vec![vec![1, -1], vec![-1, 2]], biases: vec![0, -1] },
            DenseLayer { weights: vec![vec![2, -1], vec![0, 1]], biases: vec![-2, -1] },
            DenseLayer { weights: vec![vec![1, -1], vec![-1, 1]], biases: vec![0, 0] },
        ],
    )
    .expect("fixture-deep is valid")
}

/// All-zero network of the given widths over the domain `[0,0]`.
pub fn dense_zero(name: &str, widths: &[usize]) -> QuantizedMLP {
    let layers = widths
        .windows(2)
        .map(|w| DenseLayer { weights: vec![vec![0; w[0]]; w[1]], biases: vec![0; w[1]] })
        .collect();
    QuantizedMLP::new(name, widths[0], vec![Interval::new(0, 0); widths[0]], layers)
        .expect("zero network is valid")
}

/// Bounds for [`random_network`].
#[derive(Debug, Clone, Copy)]
pub struct RandomNetSpec {
    pub max_inputs: usize,
    pub max_hidden: usize,
    pub max_classes: usize,
    pub max_domain_hi: i64,
    pub weight_range: i64,
    pub bias_range: i64,
    /// Allow splitting the hidden neurons across two layers.
    pub allow_deep: bool,
}

impl Default for RandomNetSpec {
    fn default() -> Self {
        Self {
            max_inputs: 3,
            max_hidden: 4,
            max_classes: 3,
            max_domain_hi: 7,
            weight_range: 3,
            bias_range: 4,
            allow_deep: true,
        }
    }
}

pub fn random_network<R: Rng>(rng: &mut R, spec: &RandomNetSpec, name: &str) -> QuantizedMLP {
    let inputs = rng.gen_range(1..=spec.max_inputs);
    let hidden = rng.gen_range(1..=spec.max_hidden);
    let classes = rng.gen_range(2..=spec.max_classes.max(2));
    let mut widths = vec![inputs];
    if spec.allow_deep && hidden >= 2 && rng.gen_bool(0.3) {
        let first = rng.gen_range(1..hidden);
        widths.extend([first, hidden - first]);
    } else {
        widths.push(hidden);
    }
    widths.push(classes);
    let domain = (0..inputs)
        .map(|_| {
            let lo = rng.gen_range(0..=spec.max_domain_hi / 2);
            Interval::new(lo, rng.gen_range(lo..=spec.max_domain_hi))
        })
        .collect();
    let layers = widths
        .windows(2)
        .map(|w| DenseLayer {
            weights: (0..w[1])
                .map(|_| (0..w[0]).map(|_| rng.gen_range(-spec.weight_range..=spec.weight_range)).collect())
                .collect(),
            biases: (0..w[1]).map(|_| rng.gen_range(-spec.bias_range..=spec.bias_range)).collect(),
        })
        .collect();
    QuantizedMLP::new(name, inputs, domain, layers).expect("random network is valid")
}

/// Random inputs drawn uniformly from the network's domain.
pub fn random_inputs<R: Rng>(rng: &mut R, net: &QuantizedMLP, count: usize) -> Vec<Vec<i64>> {
    (0..count)
        .map(|_| net.input_domain().iter().map(|iv| rng.gen_range(iv.lo..=iv.hi)).collect())
        .collect()
}
