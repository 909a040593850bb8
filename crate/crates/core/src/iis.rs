//! Irreducible infeasible subsystems of a constant leaf's sign conditions.
//!
//! Only sign conditions are candidates for removal; the network encoding
//! and the class comparison are hard. Because the encoding holds for every
//! real execution, any input meeting the kept signs predicts the leaf class.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feas::{ClassCompare, FeasError, FeasOutcome, InfeasibilityProof, Query, Verifier};
use crate::model::SignConstraint;

#[derive(Debug, Error)]
pub enum IisError {
    #[error("the full sign set does not block {compare}: witness {witness:?}")]
    NotInfeasible { compare: ClassCompare, witness: Vec<i64> },
    #[error("node budget exhausted before the full sign set was proven infeasible")]
    Budget,
    #[error(transparent)]
    Feas(#[from] FeasError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IisResult {
    pub kept: Vec<SignConstraint>,
    pub rival_class: usize,
    pub leaf_class: usize,
    /// False when some removal test ran out of budget and was kept conservatively.
    pub irreducible: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certificate: Option<InfeasibilityProof>,
}

impl IisResult {
    pub fn compare(&self) -> ClassCompare {
        ClassCompare::new(self.rival_class, self.leaf_class)
    }
}

/// Outcome of a single removal test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Test {
    Infeasible,
    Feasible,
    Budget,
}

/// Generic deletion filter. Candidates are tried from last to first; a
/// candidate is dropped when the rest stays infeasible. Returns the kept
/// candidates in their original order and whether every test was decided.
pub fn deletion_filter_by<C: Clone>(candidates: &[C], mut test: impl FnMut(&[C]) -> Test) -> (Vec<C>, bool) {
    let mut keep = vec![true; candidates.len()];
    let mut exact = true;
    for i in (0..candidates.len()).rev() {
        keep[i] = false;
        let trial: Vec<C> = candidates.iter().zip(&keep).filter(|(_, &k)| k).map(|(c, _)| c.clone()).collect();
        match test(&trial) {
            Test::Infeasible => {}
            Test::Feasible => keep[i] = true,
            Test::Budget => {
                keep[i] = true;
                exact = false;
            }
        }
    }
    let kept = candidates.iter().zip(&keep).filter(|(_, &k)| k).map(|(c, _)| c.clone()).collect();
    (kept, exact)
}

fn classify(outcome: &FeasOutcome) -> Test {
    match outcome {
        FeasOutcome::Infeasible => Test::Infeasible,
        FeasOutcome::Feasible(_) => Test::Feasible,
        FeasOutcome::BudgetExceeded => Test::Budget,
    }
}

/// Shrinks `path` to an IIS with respect to `compare` (rival beats leaf class).
pub fn deletion_filter(verifier: &Verifier, path: &[SignConstraint], compare: ClassCompare) -> Result<IisResult, IisError> {
    let full = verifier.solve(&Query::new(path.to_vec(), Some(compare)))?;
    match full.outcome {
        FeasOutcome::Infeasible => {}
        FeasOutcome::Feasible(witness) => return Err(IisError::NotInfeasible { compare, witness }),
        FeasOutcome::BudgetExceeded => return Err(IisError::Budget),
    }
    let mut failure = None;
    let (kept, irreducible) = deletion_filter_by(path, |trial| {
        match verifier.solve(&Query::new(trial.to_vec(), Some(compare))) {
            Ok(r) => classify(&r.outcome),
            Err(e) => {
                failure.get_or_insert(e);
                Test::Feasible
            }
        }
    });
    if let Some(e) = failure {
        return Err(e.into());
    }
    let certificate = verifier.solve(&Query::new(kept.clone(), Some(compare)))?.proof;
    Ok(IisResult { kept, rival_class: compare.winner, leaf_class: compare.loser, irreducible, certificate })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Irreducibility {
    Irreducible,
    /// The kept set does not block the rival.
    StillFeasible { witness: Vec<i64> },
    /// Removing this condition still leaves the system infeasible.
    Removable(SignConstraint),
    /// Some check ran out of budget.
    Undecided { at: Option<SignConstraint> },
}

impl Irreducibility {
    pub fn passed(&self) -> bool {
        matches!(self, Irreducibility::Irreducible)
    }
}

pub fn verify_irreducible(verifier: &Verifier, kept: &[SignConstraint], compare: ClassCompare) -> Result<Irreducibility, FeasError> {
    match verifier.solve(&Query::new(kept.to_vec(), Some(compare)))?.outcome {
        FeasOutcome::Infeasible => {}
        FeasOutcome::Feasible(witness) => return Ok(Irreducibility::StillFeasible { witness }),
        FeasOutcome::BudgetExceeded => return Ok(Irreducibility::Undecided { at: None }),
    }
    for (i, &c) in kept.iter().enumerate() {
        let mut rest = kept.to_vec();
        rest.remove(i);
        match verifier.solve(&Query::new(rest, Some(compare)))?.outcome {
            FeasOutcome::Feasible(_) => {}
            FeasOutcome::Infeasible => return Ok(Irreducibility::Removable(c)),
            FeasOutcome::BudgetExceeded => return Ok(Irreducibility::Undecided { at: Some(c) }),
        }
    }
    Ok(Irreducibility::Irreducible)
}

/// Sorted, deduplicated union of the per-rival kept sets.
pub fn per_rival_union(results: &[IisResult]) -> Vec<SignConstraint> {
    let mut all: Vec<SignConstraint> = results.iter().flat_map(|r| r.kept.iter().copied()).collect();
    all.sort();
    all.dedup();
    all
}

/// One IIS per rival class for a leaf already known to be constant.
pub fn leaf_iis(verifier: &Verifier, path: &[SignConstraint], leaf_class: usize) -> Result<Vec<IisResult>, IisError> {
    (0..verifier.net().class_count())
        .filter(|&c| c != leaf_class)
        .map(|rival| deletion_filter(verifier, path, ClassCompare::new(rival, leaf_class)))
        .collect()
}
