//! Linear constraint systems over exact rationals.

use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::field::{serde_rational, to_text, Rational};
use super::ClassCompare;
use crate::model::SignConstraint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl Relation {
    pub fn flipped(self) -> Self {
        match self {
            Relation::Le => Relation::Ge,
            Relation::Ge => Relation::Le,
            Relation::Eq => Relation::Eq,
        }
    }

    pub fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Eq => lhs == rhs,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintTag {
    Structural,
    PathSign { sign: SignConstraint },
    ClassCompare { compare: ClassCompare },
    Box,
    /// Generic soft constraint, used by tests of the IIS machinery.
    User { label: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConstraintError {
    #[error("constraint has no nonzero coefficient")]
    Empty,
    #[error("variable {var} appears twice")]
    Duplicate { var: usize },
}

/// `Σ coeff·var  (<=|>=|=)  rhs`, sparse, with sorted distinct variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearConstraint {
    terms: Vec<Term>,
    pub relation: Relation,
    #[serde(with = "serde_rational")]
    pub rhs: Rational,
    pub tag: ConstraintTag,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub var: usize,
    #[serde(with = "serde_rational")]
    pub coeff: Rational,
}

impl LinearConstraint {
    pub fn new(
        terms: impl IntoIterator<Item = (usize, Rational)>,
        relation: Relation,
        rhs: Rational,
        tag: ConstraintTag,
    ) -> Result<Self, ConstraintError> {
        let mut terms: Vec<Term> = terms
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(var, coeff)| Term { var, coeff })
            .collect();
        terms.sort_by_key(|t| t.var);
        if let Some(w) = terms.windows(2).find(|w| w[0].var == w[1].var) {
            return Err(ConstraintError::Duplicate { var: w[0].var });
        }
        if terms.is_empty() {
            return Err(ConstraintError::Empty);
        }
        Ok(Self { terms, relation, rhs, tag })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn lhs(&self, point: &[Rational]) -> Rational {
        self.terms.iter().map(|t| &t.coeff * &point[t.var]).sum()
    }

    pub fn satisfied_by(&self, point: &[Rational]) -> bool {
        self.relation.holds(&self.lhs(point), &self.rhs)
    }
}

impl fmt::Display for LinearConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{}*v{}", to_text(&t.coeff), t.var)?;
        }
        write!(f, " {} {}", self.relation, to_text(&self.rhs))
    }
}

/// Variable bounds; a missing lower bound makes the variable free below.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarBounds {
    #[serde(with = "opt_rational")]
    pub lower: Option<Rational>,
    #[serde(with = "opt_rational")]
    pub upper: Option<Rational>,
}

impl VarBounds {
    pub fn new(lower: Option<Rational>, upper: Option<Rational>) -> Self {
        Self { lower, upper }
    }

    pub fn free() -> Self {
        Self { lower: None, upper: None }
    }

    pub fn contains(&self, v: &Rational) -> bool {
        self.lower.as_ref().map_or(true, |l| v >= l) && self.upper.as_ref().map_or(true, |u| v <= u)
    }
}

mod opt_rational {
    use super::super::field::{from_text, to_text, Rational};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&to_text(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| from_text(&s).ok_or_else(|| D::Error::custom(format!("bad rational {s:?}"))))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feas::field::int;

    #[test]
    fn empty_constraint_is_rejected() {
        let tag = ConstraintTag::Structural;
        assert_eq!(
            LinearConstraint::new([(0, int(0))], Relation::Le, int(3), tag.clone()),
            Err(ConstraintError::Empty)
        );
        assert_eq!(
            LinearConstraint::new([(1, int(1)), (1, int(2))], Relation::Le, int(3), tag),
            Err(ConstraintError::Duplicate { var: 1 })
        );
    }

    #[test]
    fn evaluates_and_prints() {
        let c = LinearConstraint::new([(2, int(3)), (0, int(-1))], Relation::Ge, int(1), ConstraintTag::Structural)
            .unwrap();
        assert_eq!(c.to_string(), "-1*v0 + 3*v2 >= 1");
        assert!(c.satisfied_by(&[int(2), int(0), int(1)]));
        assert!(!c.satisfied_by(&[int(3), int(0), int(1)]));
    }
}
