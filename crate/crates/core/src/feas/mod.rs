//! Exact decision of leaf constancy.
//!
//! A leaf is constant when, for every rival class, the network encoding plus
//! the leaf's sign conditions plus "rival beats the leaf class" has no
//! integer solution. The encoding is the standard big-M model of ReLU with
//! one binary phase variable per hidden neuron; feasibility is decided by
//! depth-first branch and bound over an exact phase-I simplex.

mod bb;
pub mod field;
mod lp;
pub mod system;

use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bb::{bb_feasible, BbResult, Branch, InfeasibilityProof, ProofLeaf};
pub use field::{int, Rational};
pub use lp::{lp_feasible, FarkasCertificate, LpOutcome};
pub use system::{ConstraintError, ConstraintTag, LinearConstraint, Relation, VarBounds};

use crate::model::{Forward, Interval, NeuronId, Polarity, QuantizedMLP, SignConstraint};

pub const DEFAULT_NODE_BUDGET: usize = 10_000;
pub const DEFAULT_BRUTE_FORCE_CAP: u128 = 1_000_000;

#[derive(Debug, Error)]
pub enum FeasError {
    #[error("input domain has {size} points, above the enumeration cap of {cap}")]
    DomainTooLarge { size: u128, cap: u128 },
    #[error("sign constraint on {0}, which is not a hidden neuron")]
    NotHidden(NeuronId),
    #[error("class {0} does not exist")]
    UnknownClass(usize),
}

/// `winner` is predicted over `loser` under the lowest-index tie rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClassCompare {
    pub winner: usize,
    pub loser: usize,
}

impl ClassCompare {
    pub fn new(winner: usize, loser: usize) -> Self {
        Self { winner, loser }
    }

    /// Required integer margin `logit_winner - logit_loser >= margin`.
    pub fn margin(&self) -> i64 {
        if self.winner > self.loser {
            1
        } else {
            0
        }
    }

    pub fn holds(&self, logits: &[i64]) -> bool {
        logits[self.winner] - logits[self.loser] >= self.margin()
    }
}

impl fmt::Display for ClassCompare {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{} beats c{}", self.winner, self.loser)
    }
}

/// Extra conditions layered over the network encoding.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Query {
    pub signs: Vec<SignConstraint>,
    pub compare: Option<ClassCompare>,
}

impl Query {
    pub fn new(signs: Vec<SignConstraint>, compare: Option<ClassCompare>) -> Self {
        Self { signs, compare }
    }

    /// Does this concrete execution satisfy every condition?
    pub fn holds(&self, net: &QuantizedMLP, forward: &Forward) -> bool {
        self.signs.iter().all(|s| s.holds(net, forward))
            && self.compare.map_or(true, |c| c.holds(&forward.logits))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "witness", rename_all = "snake_case")]
pub enum FeasOutcome {
    Feasible(Vec<i64>),
    Infeasible,
    BudgetExceeded,
}

impl FeasOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FeasOutcome::Feasible(_))
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, FeasOutcome::Infeasible)
    }
}

/// Sound pre-activation bounds for every neuron, hidden and output, by layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeuronBounds(pub Vec<Vec<Interval>>);

impl NeuronBounds {
    pub fn get(&self, id: NeuronId) -> Interval {
        self.0[id.layer][id.index]
    }
}

/// Interval propagation layer by layer; ReLU clamps at zero between layers.
pub fn big_m_bounds(net: &QuantizedMLP) -> NeuronBounds {
    let mut input: Vec<(i128, i128)> =
        net.input_domain().iter().map(|iv| (iv.lo as i128, iv.hi as i128)).collect();
    let mut out = Vec::with_capacity(net.layers().len());
    for layer in net.layers() {
        let bounds: Vec<(i128, i128)> = layer
            .weights
            .iter()
            .zip(&layer.biases)
            .map(|(row, &b)| {
                row.iter().zip(&input).fold((b as i128, b as i128), |(lo, hi), (&w, &(a, z))| {
                    let (p, q) = (w as i128 * a, w as i128 * z);
                    (lo + p.min(q), hi + p.max(q))
                })
            })
            .collect();
        // load-time validation guarantees these fit
        out.push(bounds.iter().map(|&(lo, hi)| Interval::new(lo as i64, hi as i64)).collect());
        input = bounds.iter().map(|&(lo, hi)| (lo.max(0), hi.max(0))).collect();
    }
    NeuronBounds(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Input(usize),
    PreAct(NeuronId),
    PostAct(NeuronId),
    Phase(NeuronId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub kind: VarKind,
    pub bounds: VarBounds,
    pub integer: bool,
}

/// Variable indices of one neuron.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeuronVars {
    pub preact: usize,
    /// Hidden neurons only.
    pub post: Option<usize>,
    pub phase: Option<usize>,
}

/// Network encoding plus any query constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MipProblem {
    pub variables: Vec<Variable>,
    pub constraints: Vec<LinearConstraint>,
    pub neurons: Vec<Vec<NeuronVars>>,
    pub inputs: Vec<usize>,
}

impl MipProblem {
    pub fn bounds(&self) -> Vec<VarBounds> {
        self.variables.iter().map(|v| v.bounds.clone()).collect()
    }

    pub fn vars_of(&self, id: NeuronId) -> NeuronVars {
        self.neurons[id.layer][id.index]
    }

    /// Binary phase variables in canonical neuron order, then integer inputs.
    pub fn branching_order(&self) -> Vec<usize> {
        let phases = self.neurons.iter().flatten().filter_map(|n| n.phase);
        phases.chain(self.inputs.iter().copied()).collect()
    }

    pub fn count_tagged(&self, pred: impl Fn(&ConstraintTag) -> bool) -> usize {
        self.constraints.iter().filter(|c| pred(&c.tag)).count()
    }

    /// Adds the query's sign and class-compare constraints.
    pub fn with_query(&self, query: &Query) -> Result<MipProblem, FeasError> {
        let mut p = self.clone();
        for &sign in &query.signs {
            let nv = self.neuron_vars_checked(sign.neuron)?;
            if nv.phase.is_none() {
                return Err(FeasError::NotHidden(sign.neuron));
            }
            let (rel, rhs) = match sign.polarity {
                Polarity::Active => (Relation::Ge, 1),
                Polarity::Inactive => (Relation::Le, 0),
            };
            p.constraints.push(
                LinearConstraint::new([(nv.preact, int(1))], rel, int(rhs), ConstraintTag::PathSign { sign })
                    .expect("unit coefficient"),
            );
        }
        if let Some(cmp) = query.compare {
            let out = self.neurons.last().expect("network has an output layer");
            for class in [cmp.winner, cmp.loser] {
                if class >= out.len() {
                    return Err(FeasError::UnknownClass(class));
                }
            }
            if cmp.winner == cmp.loser {
                return Err(FeasError::UnknownClass(cmp.winner));
            }
            p.constraints.push(
                LinearConstraint::new(
                    [(out[cmp.winner].preact, int(1)), (out[cmp.loser].preact, int(-1))],
                    Relation::Ge,
                    int(cmp.margin()),
                    ConstraintTag::ClassCompare { compare: cmp },
                )
                .expect("distinct variables"),
            );
        }
        Ok(p)
    }

    fn neuron_vars_checked(&self, id: NeuronId) -> Result<NeuronVars, FeasError> {
        self.neurons
            .get(id.layer)
            .and_then(|l| l.get(id.index))
            .copied()
            .ok_or(FeasError::NotHidden(id))
    }

    /// The full variable assignment of a real execution on `x`.
    pub fn execution_point(&self, net: &QuantizedMLP, x: &[i64]) -> Vec<Rational> {
        let mut point = vec![int(0); self.variables.len()];
        for (&v, &xi) in self.inputs.iter().zip(x) {
            point[v] = int(xi);
        }
        let mut input = x.to_vec();
        for (l, vars) in self.neurons.iter().enumerate() {
            let mut next = Vec::with_capacity(vars.len());
            for (i, nv) in vars.iter().enumerate() {
                let z = net.preact(NeuronId::new(l, i), &input);
                point[nv.preact] = int(z);
                if let (Some(r), Some(d)) = (nv.post, nv.phase) {
                    point[r] = int(z.max(0));
                    point[d] = int((z >= 1) as i64);
                }
                next.push(z.max(0));
            }
            input = next;
        }
        point
    }
}

fn structural(terms: &[(usize, i64)], rel: Relation, rhs: i64) -> LinearConstraint {
    LinearConstraint::new(terms.iter().map(|&(v, a)| (v, int(a))), rel, int(rhs), ConstraintTag::Structural)
        .expect("structural constraint has a unit coefficient")
}

/// Big-M encoding of the whole network over its integer input box.
pub fn encode_network(net: &QuantizedMLP) -> MipProblem {
    let bounds = big_m_bounds(net);
    let mut variables = Vec::new();
    let mut constraints = Vec::new();
    let mut push = |kind, lower: Option<i64>, upper: Option<i64>, integer| {
        variables.push(Variable {
            kind,
            bounds: VarBounds::new(lower.map(int), upper.map(int)),
            integer,
        });
        variables.len() - 1
    };
    let inputs: Vec<usize> = net
        .input_domain()
        .iter()
        .enumerate()
        .map(|(i, iv)| push(VarKind::Input(i), Some(iv.lo), Some(iv.hi), true))
        .collect();
    let last = net.layers().len() - 1;
    let mut neurons = Vec::with_capacity(net.layers().len());
    for (l, layer) in net.layers().iter().enumerate() {
        let mut vars = Vec::with_capacity(layer.outputs());
        for i in 0..layer.outputs() {
            let id = NeuronId::new(l, i);
            let iv = bounds.get(id);
            let preact = push(VarKind::PreAct(id), Some(iv.lo), None, false);
            if l == last {
                vars.push(NeuronVars { preact, post: None, phase: None });
            } else {
                let post = push(VarKind::PostAct(id), Some(0), None, false);
                let phase = push(VarKind::Phase(id), Some(0), Some(1), true);
                vars.push(NeuronVars { preact, post: Some(post), phase: Some(phase) });
            }
        }
        neurons.push(vars);
    }

    for (l, layer) in net.layers().iter().enumerate() {
        let sources: Vec<usize> = if l == 0 {
            inputs.clone()
        } else {
            neurons[l - 1].iter().map(|n| n.post.expect("hidden neuron")).collect()
        };
        for (i, nv) in neurons[l].iter().enumerate() {
            // z - Σ w·src = b
            let mut terms = vec![(nv.preact, 1)];
            terms.extend(sources.iter().zip(&layer.weights[i]).map(|(&s, &w)| (s, -w)));
            constraints.push(structural(&terms, Relation::Eq, layer.biases[i]));
            let (Some(r), Some(d)) = (nv.post, nv.phase) else { continue };
            let iv = bounds.get(NeuronId::new(l, i));
            let (lo, hi) = (iv.lo, iv.hi);
            let z = nv.preact;
            // r >= z
            constraints.push(structural(&[(r, 1), (z, -1)], Relation::Ge, 0));
            // r <= z - lo·(1 - d)
            constraints.push(structural(&[(r, 1), (z, -1), (d, -lo)], Relation::Le, -lo));
            // r <= hi·d
            constraints.push(structural(&[(r, 1), (d, -hi)], Relation::Le, 0));
            // d = 1 ⟹ z >= 1:  z >= lo + (1 - lo)·d
            constraints.push(structural(&[(z, 1), (d, lo - 1)], Relation::Ge, lo));
            // d = 0 ⟹ z <= 0:  z <= hi·d
            constraints.push(structural(&[(z, 1), (d, -hi)], Relation::Le, 0));
            if hi < 1 {
                constraints.push(structural(&[(d, 1)], Relation::Le, 0));
            }
            if lo >= 1 {
                constraints.push(structural(&[(d, 1)], Relation::Ge, 1));
            }
        }
    }
    MipProblem { variables, constraints, neurons, inputs }
}

/// Exhaustive scan of the integer input grid in lexicographic order.
pub fn brute_force_feasible(net: &QuantizedMLP, query: &Query, cap: u128) -> Result<FeasOutcome, FeasError> {
    let size = net.domain_size();
    if size > cap {
        return Err(FeasError::DomainTooLarge { size, cap });
    }
    for s in &query.signs {
        if net.hidden_position(s.neuron).is_none() {
            return Err(FeasError::NotHidden(s.neuron));
        }
    }
    if let Some(c) = query.compare {
        if c.winner >= net.class_count() || c.loser >= net.class_count() || c.winner == c.loser {
            return Err(FeasError::UnknownClass(c.winner.max(c.loser)));
        }
    }
    Ok(net
        .grid()
        .find(|x| query.holds(net, &net.forward_unchecked(x)))
        .map_or(FeasOutcome::Infeasible, FeasOutcome::Feasible))
}

/// Encodes the network once and answers feasibility queries against it.
#[derive(Debug, Clone)]
pub struct Verifier<'a> {
    net: &'a QuantizedMLP,
    base: MipProblem,
    budget: usize,
}

impl<'a> Verifier<'a> {
    pub fn new(net: &'a QuantizedMLP, budget: usize) -> Self {
        Self { net, base: encode_network(net), budget }
    }

    pub fn net(&self) -> &'a QuantizedMLP {
        self.net
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn base(&self) -> &MipProblem {
        &self.base
    }

    pub fn solve(&self, query: &Query) -> Result<BbResult, FeasError> {
        let problem = self.base.with_query(query)?;
        Ok(bb_feasible(self.net, &problem, self.budget))
    }

    pub fn check_constant_leaf(&self, path: &[SignConstraint], leaf_class: usize) -> Result<LeafCheck, FeasError> {
        if leaf_class >= self.net.class_count() {
            return Err(FeasError::UnknownClass(leaf_class));
        }
        let mut proofs = Vec::new();
        let mut unknown = None;
        for rival in (0..self.net.class_count()).filter(|&c| c != leaf_class) {
            let query = Query::new(path.to_vec(), Some(ClassCompare::new(rival, leaf_class)));
            let result = self.solve(&query)?;
            match result.outcome {
                FeasOutcome::Feasible(witness) => return Ok(LeafCheck::NotConstant { witness, rival }),
                FeasOutcome::BudgetExceeded => {
                    unknown.get_or_insert(rival);
                }
                FeasOutcome::Infeasible => {
                    proofs.push(RivalProof { rival, nodes: result.nodes, proof: result.proof.expect("infeasible has proof") })
                }
            }
        }
        Ok(match unknown {
            Some(rival) => LeafCheck::Unknown { rival },
            None => LeafCheck::Constant { class: leaf_class, proofs },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RivalProof {
    pub rival: usize,
    pub nodes: usize,
    pub proof: InfeasibilityProof,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LeafCheck {
    Constant { class: usize, proofs: Vec<RivalProof> },
    NotConstant { witness: Vec<i64>, rival: usize },
    Unknown { rival: usize },
}

pub fn check_constant_leaf(
    net: &QuantizedMLP,
    path: &[SignConstraint],
    leaf_class: usize,
    budget: usize,
) -> Result<LeafCheck, FeasError> {
    Verifier::new(net, budget).check_constant_leaf(path, leaf_class)
}

pub(crate) fn rational_is_integer(r: &Rational) -> Option<i64> {
    use num_traits::ToPrimitive;
    r.is_integer().then(|| r.numer().to_i64()).flatten()
}

pub(crate) fn floor(r: &Rational) -> BigInt {
    r.floor().to_integer()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{fixture_a, fixture_c, fixture_deep, random_network, RandomNetSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fixture_a_bounds() {
        let b = big_m_bounds(&fixture_a());
        assert_eq!(b.get(NeuronId::new(0, 0)), Interval::new(-1, 13));
        assert_eq!(b.get(NeuronId::new(0, 1)), Interval::new(-2, 19));
        assert_eq!(b.get(NeuronId::new(1, 0)), Interval::new(-19, 13));
    }

    #[test]
    fn bounds_are_sound_on_grid() {
        for net in [fixture_a(), fixture_c(), fixture_deep()] {
            let b = big_m_bounds(&net);
            for x in net.grid() {
                let f = net.forward(&x).unwrap();
                for (pos, z) in f.preacts.iter().enumerate() {
                    assert!(b.get(net.hidden_at(pos)).contains(*z));
                }
                let out = net.layers().len() - 1;
                for (i, z) in f.logits.iter().enumerate() {
                    assert!(b.get(NeuronId::new(out, i)).contains(*z));
                }
            }
        }
    }

    #[test]
    fn fixture_a_encoding_shape() {
        let p = encode_network(&fixture_a());
        let phases = p.variables.iter().filter(|v| matches!(v.kind, VarKind::Phase(_))).count();
        assert_eq!(phases, 2);
        let eqs: Vec<_> = p.constraints.iter().filter(|c| c.relation == Relation::Eq).collect();
        assert_eq!(eqs.len(), 4, "2 hidden z equalities + 2 output equalities");
        for &v in &p.inputs {
            assert_eq!(p.variables[v].bounds, VarBounds::new(Some(int(0)), Some(int(7))));
        }
    }

    #[test]
    fn real_executions_satisfy_encoding() {
        for net in [fixture_a(), fixture_c(), fixture_deep()] {
            let p = encode_network(&net);
            for x in net.grid() {
                let point = p.execution_point(&net, &x);
                for c in &p.constraints {
                    assert!(c.satisfied_by(&point), "{x:?} violates {c}");
                }
                for (v, val) in p.variables.iter().zip(&point) {
                    assert!(v.bounds.contains(val));
                }
            }
        }
    }

    #[test]
    fn active_phase_with_negative_preact_is_rejected() {
        let net = fixture_a();
        let p = encode_network(&net);
        let mut point = p.execution_point(&net, &[0, 3]);
        let nv = p.vars_of(NeuronId::new(0, 0));
        assert_eq!(point[nv.preact], int(-1));
        point[nv.phase.unwrap()] = int(1);
        assert!(p.constraints.iter().any(|c| !c.satisfied_by(&point)));
    }

    #[test]
    fn lp_relaxation_of_fixture_is_feasible() {
        let p = encode_network(&fixture_a());
        assert!(lp_feasible(&p.bounds(), &p.constraints).is_feasible());
    }

    #[test]
    fn brute_force_examples() {
        let net = fixture_a();
        let q = Query::new(vec![SignConstraint::inactive(0, 0)], Some(ClassCompare::new(0, 1)));
        assert_eq!(brute_force_feasible(&net, &q, DEFAULT_BRUTE_FORCE_CAP).unwrap(), FeasOutcome::Infeasible);
        assert_eq!(
            brute_force_feasible(&net, &Query::default(), DEFAULT_BRUTE_FORCE_CAP).unwrap(),
            FeasOutcome::Feasible(vec![0, 0])
        );
        let wide = crate::model::QuantizedMLP::new(
            "wide",
            4,
            vec![Interval::new(0, 999); 4],
            vec![crate::model::DenseLayer { weights: vec![vec![1, 1, 1, 1]; 2], biases: vec![0, 0] }],
        )
        .unwrap();
        assert!(matches!(
            brute_force_feasible(&wide, &Query::default(), DEFAULT_BRUTE_FORCE_CAP),
            Err(FeasError::DomainTooLarge { .. })
        ));
    }

    #[test]
    fn bb_examples() {
        let net = fixture_a();
        let v = Verifier::new(&net, DEFAULT_NODE_BUDGET);
        let blocked = Query::new(vec![SignConstraint::inactive(0, 0)], Some(ClassCompare::new(0, 1)));
        let r = v.solve(&blocked).unwrap();
        assert_eq!(r.outcome, FeasOutcome::Infeasible);
        let proof = r.proof.unwrap();
        assert!(proof.verify(&v.base().with_query(&blocked).unwrap()));

        let active = Query::new(vec![SignConstraint::active(0, 0)], None);
        let FeasOutcome::Feasible(w) = v.solve(&active).unwrap().outcome else { panic!() };
        assert!(w[0] >= 1);

        // contradictory signs: relaxation itself is infeasible
        let contradiction = Query::new(
            vec![SignConstraint::active(0, 0), SignConstraint::new(NeuronId::new(0, 0), Polarity::Inactive)],
            None,
        );
        let r = v.solve(&contradiction).unwrap();
        assert_eq!((r.outcome, r.nodes), (FeasOutcome::Infeasible, 1));
    }

    #[test]
    fn leaf_checks_on_fixture_a() {
        let net = fixture_a();
        let v = Verifier::new(&net, DEFAULT_NODE_BUDGET);
        let ft = [SignConstraint::inactive(0, 0), SignConstraint::active(0, 1)];
        assert!(matches!(v.check_constant_leaf(&ft, 1).unwrap(), LeafCheck::Constant { class: 1, .. }));
        let tt = [SignConstraint::active(0, 0), SignConstraint::active(0, 1)];
        match v.check_constant_leaf(&tt, 1).unwrap() {
            LeafCheck::NotConstant { witness, rival } => {
                assert_eq!(rival, 0);
                let f = net.forward(&witness).unwrap();
                assert!(tt.iter().all(|s| s.holds(&net, &f)));
                assert_eq!(f.class(), 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tiny_budget_reports_unknown_and_bigger_budget_resolves() {
        let net = fixture_deep();
        let mut saw_unknown = false;
        for x in net.grid() {
            let f = net.forward(&x).unwrap();
            let path: Vec<_> = net
                .hidden_neurons()
                .zip(&f.pattern.0)
                .map(|(n, &b)| SignConstraint::new(n, Polarity::from_active(b)))
                .collect();
            let small = check_constant_leaf(&net, &path[..1], f.class(), 1).unwrap();
            let large = check_constant_leaf(&net, &path[..1], f.class(), DEFAULT_NODE_BUDGET).unwrap();
            assert!(!matches!(large, LeafCheck::Unknown { .. }));
            match small {
                LeafCheck::Unknown { .. } => saw_unknown = true,
                LeafCheck::Constant { .. } => assert!(matches!(large, LeafCheck::Constant { .. })),
                LeafCheck::NotConstant { .. } => assert!(matches!(large, LeafCheck::NotConstant { .. })),
            }
        }
        assert!(saw_unknown);
    }

    /// 200 random queries per network against the exhaustive oracle.
    #[test]
    fn bb_agrees_with_brute_force_on_random_networks() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for n in 0..4 {
            let net = random_network(&mut rng, &RandomNetSpec::default(), &format!("r{n}"));
            let v = Verifier::new(&net, DEFAULT_NODE_BUDGET);
            let hidden: Vec<_> = net.hidden_neurons().collect();
            for _ in 0..200 {
                let mut signs = Vec::new();
                for &h in &hidden {
                    if rng.gen_bool(0.5) {
                        signs.push(SignConstraint::new(h, Polarity::from_active(rng.gen_bool(0.5))));
                    }
                }
                let compare = rng.gen_bool(0.8).then(|| {
                    let w = rng.gen_range(0..net.class_count());
                    let l = (w + rng.gen_range(1..net.class_count())) % net.class_count();
                    ClassCompare::new(w, l)
                });
                let q = Query::new(signs, compare);
                let bb = v.solve(&q).unwrap().outcome;
                let brute = brute_force_feasible(&net, &q, DEFAULT_BRUTE_FORCE_CAP).unwrap();
                assert_eq!(bb.is_feasible(), brute.is_feasible(), "{q:?} on {net:?}");
                if let FeasOutcome::Feasible(w) = bb {
                    assert!(q.holds(&net, &net.forward(&w).unwrap()));
                }
            }
        }
    }
}
