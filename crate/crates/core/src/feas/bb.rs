//! Depth-first branch and bound over the exact LP relaxation.

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use super::field::int;
use super::lp::{lp_feasible, FarkasCertificate, LpOutcome};
use super::system::{ConstraintTag, VarBounds};
use super::{floor, rational_is_integer, FeasOutcome, MipProblem, Query, Rational};
use crate::model::QuantizedMLP;

/// One bound tightening: `var <= value` (down) or `var >= value` (up).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Branch {
    pub var: usize,
    pub up: bool,
    pub value: i64,
}

impl Branch {
    fn partner(&self) -> Branch {
        if self.up {
            Branch { var: self.var, up: false, value: self.value - 1 }
        } else {
            Branch { var: self.var, up: true, value: self.value + 1 }
        }
    }
}

/// A pruned node of the search tree with its Farkas certificate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofLeaf {
    pub branches: Vec<Branch>,
    pub certificate: FarkasCertificate,
}

/// Complete record of an infeasible search: the pruned leaves cover the
/// whole integer box and each one carries an LP infeasibility certificate.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfeasibilityProof {
    pub leaves: Vec<ProofLeaf>,
}

impl InfeasibilityProof {
    pub fn verify(&self, problem: &MipProblem) -> bool {
        let root = problem.bounds();
        let certs_ok = self.leaves.iter().all(|leaf| {
            apply(&root, &leaf.branches)
                .is_some_and(|b| leaf.certificate.verify(&b, &problem.constraints))
        });
        let refs: Vec<&[Branch]> = self.leaves.iter().map(|l| l.branches.as_slice()).collect();
        certs_ok && covers(&refs, 0, problem)
    }
}

/// The leaves sharing a prefix of length `depth` tile that node's box.
fn covers(leaves: &[&[Branch]], depth: usize, problem: &MipProblem) -> bool {
    if leaves.is_empty() {
        return false;
    }
    if leaves.iter().any(|l| l.len() == depth) {
        return leaves.len() == 1;
    }
    let first = leaves[0][depth];
    if !problem.variables.get(first.var).is_some_and(|v| v.integer) {
        return false;
    }
    let other = first.partner();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for &l in leaves {
        if l[depth] == first {
            a.push(l);
        } else if l[depth] == other {
            b.push(l);
        } else {
            return false;
        }
    }
    covers(&a, depth + 1, problem) && covers(&b, depth + 1, problem)
}

fn apply(root: &[VarBounds], branches: &[Branch]) -> Option<Vec<VarBounds>> {
    let mut bounds = root.to_vec();
    for br in branches {
        let b = bounds.get_mut(br.var)?;
        let v = int(br.value);
        if br.up {
            if b.lower.as_ref().map_or(true, |l| *l < v) {
                b.lower = Some(v);
            }
        } else if b.upper.as_ref().map_or(true, |u| *u > v) {
            b.upper = Some(v);
        }
    }
    Some(bounds)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BbResult {
    pub outcome: FeasOutcome,
    /// LP relaxations solved.
    pub nodes: usize,
    /// Present exactly when the outcome is `Infeasible`.
    pub proof: Option<InfeasibilityProof>,
}

/// The replayable part of a problem: its path-sign and class-compare rows.
pub(crate) fn query_of(problem: &MipProblem) -> Query {
    let mut q = Query::default();
    for c in &problem.constraints {
        match &c.tag {
            ConstraintTag::PathSign { sign } => q.signs.push(*sign),
            ConstraintTag::ClassCompare { compare } => q.compare = Some(*compare),
            _ => {}
        }
    }
    q
}

/// Most fractional variable in `order`; ties go to the earliest.
fn most_fractional(point: &[Rational], order: &[usize]) -> Option<(usize, Rational)> {
    let half = BigRational::new(1.into(), 2.into());
    let mut best: Option<(usize, Rational, Rational)> = None;
    for &v in order {
        let val = &point[v];
        if val.is_integer() {
            continue;
        }
        let dist = (val.fract().abs() - &half).abs();
        if best.as_ref().map_or(true, |(_, _, d)| dist < *d) {
            best = Some((v, val.clone(), dist));
        }
    }
    best.map(|(v, val, _)| (v, val))
}

/// Exact MIP feasibility. Branches on phase binaries first (canonical
/// neuron order), then on integer inputs; nearest rounding explored first.
pub fn bb_feasible(net: &QuantizedMLP, problem: &MipProblem, budget: usize) -> BbResult {
    let query = query_of(problem);
    let root = problem.bounds();
    let phases: Vec<usize> = problem.neurons.iter().flatten().filter_map(|n| n.phase).collect();
    let mut stack: Vec<Vec<Branch>> = vec![Vec::new()];
    let mut nodes = 0;
    let mut proof = InfeasibilityProof::default();
    while let Some(branches) = stack.pop() {
        if nodes >= budget {
            return BbResult { outcome: FeasOutcome::BudgetExceeded, nodes, proof: None };
        }
        nodes += 1;
        let bounds = apply(&root, &branches).expect("branch variables exist");
        let point = match lp_feasible(&bounds, &problem.constraints) {
            LpOutcome::Infeasible(certificate) => {
                proof.leaves.push(ProofLeaf { branches, certificate });
                continue;
            }
            LpOutcome::Feasible(point) => point,
        };
        let pick = most_fractional(&point, &phases).or_else(|| most_fractional(&point, &problem.inputs));
        match pick {
            None => {
                let x: Vec<i64> = problem
                    .inputs
                    .iter()
                    .map(|&v| rational_is_integer(&point[v]).expect("integral input"))
                    .collect();
                let f = net.forward(&x).expect("LP point respects the input box");
                assert!(query.holds(net, &f), "integral LP point {x:?} does not replay through the network");
                return BbResult { outcome: FeasOutcome::Feasible(x), nodes, proof: None };
            }
            Some((var, value)) => {
                let fl = floor(&value).to_i64().expect("bounded variable");
                let down = Branch { var, up: false, value: fl };
                let up = Branch { var, up: true, value: fl + 1 };
                let frac = &value - Rational::from_integer(floor(&value));
                let prefer_up = frac > BigRational::new(1.into(), 2.into());
                let (first, second) = if prefer_up { (up, down) } else { (down, up) };
                let mut later = branches.clone();
                later.push(second);
                let mut sooner = branches;
                sooner.push(first);
                stack.push(later);
                stack.push(sooner);
            }
        }
    }
    BbResult { outcome: FeasOutcome::Infeasible, nodes, proof: Some(proof) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feas::{encode_network, ClassCompare, Verifier, DEFAULT_NODE_BUDGET};
    use crate::fixtures::{fixture_c, fixture_deep};
    use crate::model::SignConstraint;

    #[test]
    fn proofs_verify_and_tampering_is_caught() {
        let net = fixture_c();
        let v = Verifier::new(&net, DEFAULT_NODE_BUDGET);
        let mut checked = 0;
        for winner in 0..3 {
            for loser in (0..3).filter(|&l| l != winner) {
                for signs in [vec![], vec![SignConstraint::inactive(0, 0)], vec![SignConstraint::inactive(0, 0), SignConstraint::inactive(0, 1)]] {
                    let q = Query::new(signs, Some(ClassCompare::new(winner, loser)));
                    let p = v.base().with_query(&q).unwrap();
                    let r = bb_feasible(&net, &p, DEFAULT_NODE_BUDGET);
                    if let Some(proof) = r.proof {
                        assert!(proof.verify(&p));
                        if proof.leaves.len() > 1 {
                            let mut dropped = proof.clone();
                            dropped.leaves.pop();
                            assert!(!dropped.verify(&p));
                        }
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn query_round_trips_through_tags() {
        let net = fixture_deep();
        let q = Query::new(vec![SignConstraint::active(1, 0)], Some(ClassCompare::new(1, 0)));
        let p = encode_network(&net).with_query(&q).unwrap();
        assert_eq!(query_of(&p), q);
    }
}
