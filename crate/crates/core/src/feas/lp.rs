//! Phase-I simplex over exact rationals with Bland's rule.
//!
//! Variables with a lower bound are shifted to be nonnegative; free
//! variables are split into a difference of two. Upper bounds become rows.
//! An infeasible system yields Farkas multipliers that can be checked
//! independently of the tableau.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::field::{self, serde_rational, serde_rational_vec, Rational, SmallRational};
use super::system::{LinearConstraint, Relation, VarBounds};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Feasible(Vec<Rational>),
    Infeasible(FarkasCertificate),
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LpOutcome::Feasible(_))
    }
}

/// Multipliers proving `{constraints, bounds}` has no solution.
///
/// `rows[i]` is nonpositive for `<=` rows and nonnegative for `>=` rows;
/// `upper[j]` multiplies the row `v_j <= upper_j` and is nonpositive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FarkasCertificate {
    #[serde(with = "serde_rational_vec")]
    pub rows: Vec<Rational>,
    #[serde(with = "serde_rational_vec")]
    pub upper: Vec<Rational>,
    /// Optimal phase-I objective, strictly positive.
    #[serde(with = "serde_rational")]
    pub phase_one_value: Rational,
}

impl FarkasCertificate {
    /// Checks the certificate against the system without any solver state.
    pub fn verify(&self, bounds: &[VarBounds], constraints: &[LinearConstraint]) -> bool {
        if self.rows.len() != constraints.len() || self.upper.len() != bounds.len() {
            return false;
        }
        if !self.phase_one_value.is_positive() {
            return false;
        }
        let mut combined = vec![Rational::zero(); bounds.len()];
        let mut rhs = Rational::zero();
        for (y, c) in self.rows.iter().zip(constraints) {
            let sign_ok = match c.relation {
                Relation::Le => !y.is_positive(),
                Relation::Ge => !y.is_negative(),
                Relation::Eq => true,
            };
            if !sign_ok {
                return false;
            }
            for t in c.terms() {
                if t.var >= bounds.len() {
                    return false;
                }
                combined[t.var] += y * &t.coeff;
            }
            rhs += y * &c.rhs;
        }
        for (j, (u, b)) in self.upper.iter().zip(bounds).enumerate() {
            if u.is_zero() {
                continue;
            }
            match &b.upper {
                Some(ub) if u.is_negative() => {
                    combined[j] += u;
                    rhs += u * ub;
                }
                _ => return false,
            }
        }
        // For every feasible v: combined·v >= rhs, while combined·v <= combined·lower.
        let mut at_lower = Rational::zero();
        for (g, b) in combined.iter().zip(bounds) {
            match &b.lower {
                Some(lb) if !g.is_positive() => at_lower += g * lb,
                None if g.is_zero() => {}
                _ => return false,
            }
        }
        rhs - at_lower == self.phase_one_value
    }
}

/// Decides feasibility of `constraints` under `bounds`. Total on well-formed input.
pub fn lp_feasible(bounds: &[VarBounds], constraints: &[LinearConstraint]) -> LpOutcome {
    solve::<SmallRational>(bounds, constraints)
        .or_else(|| solve::<Rational>(bounds, constraints))
        .expect("arbitrary-precision arithmetic does not overflow")
}

#[derive(Clone, Copy)]
enum Source {
    Constraint(usize),
    Upper(usize),
}

struct Row<F> {
    coeffs: Vec<F>,
    relation: Relation,
    rhs: F,
    negated: bool,
    source: Source,
}

struct Columns {
    /// `(positive column, negative column for free variables)`
    of_var: Vec<(usize, Option<usize>)>,
    count: usize,
}

fn build_rows<F: field::Field>(bounds: &[VarBounds], constraints: &[LinearConstraint], cols: &Columns) -> Option<Vec<Row<F>>> {
    let shift: Vec<Option<F>> = bounds
        .iter()
        .map(|b| b.lower.as_ref().map(F::from_rational))
        .map(|o| o.map_or(Some(None), |v| v.map(Some)))
        .collect::<Option<_>>()?;
    let mut rows = Vec::with_capacity(constraints.len() + bounds.len());
    for (i, c) in constraints.iter().enumerate() {
        let mut coeffs = vec![F::zero(); cols.count];
        let mut rhs = F::from_rational(&c.rhs)?;
        for t in c.terms() {
            let a = F::from_rational(&t.coeff)?;
            let (pos, neg) = cols.of_var[t.var];
            coeffs[pos] = coeffs[pos].add(&a)?;
            if let Some(neg) = neg {
                coeffs[neg] = coeffs[neg].sub(&a)?;
            }
            if let Some(lb) = &shift[t.var] {
                rhs = rhs.sub(&a.mul(lb)?)?;
            }
        }
        rows.push(Row { coeffs, relation: c.relation, rhs, negated: false, source: Source::Constraint(i) });
    }
    for (j, b) in bounds.iter().enumerate() {
        let Some(ub) = &b.upper else { continue };
        let mut coeffs = vec![F::zero(); cols.count];
        let (pos, neg) = cols.of_var[j];
        coeffs[pos] = F::one();
        if let Some(neg) = neg {
            coeffs[neg] = F::one().neg()?;
        }
        let mut rhs = F::from_rational(ub)?;
        if let Some(lb) = &shift[j] {
            rhs = rhs.sub(lb)?;
        }
        rows.push(Row { coeffs, relation: Relation::Le, rhs, negated: false, source: Source::Upper(j) });
    }
    for row in &mut rows {
        if row.rhs.is_negative() {
            for a in &mut row.coeffs {
                *a = a.neg()?;
            }
            row.rhs = row.rhs.neg()?;
            row.relation = row.relation.flipped();
            row.negated = true;
        }
    }
    Some(rows)
}

struct Tableau<F> {
    a: Vec<Vec<F>>,
    rhs: Vec<F>,
    reduced: Vec<F>,
    /// Phase-I objective value.
    value: F,
    basis: Vec<usize>,
}

impl<F: field::Field> Tableau<F> {
    fn pivot(&mut self, r: usize, e: usize) -> Option<()> {
        let p = self.a[r][e].clone();
        if p != F::one() {
            for v in &mut self.a[r] {
                if !v.is_zero() {
                    *v = v.div(&p)?;
                }
            }
            self.rhs[r] = self.rhs[r].div(&p)?;
        }
        let (pivot_row, pivot_rhs) = (self.a[r].clone(), self.rhs[r].clone());
        for i in 0..self.a.len() {
            if i == r || self.a[i][e].is_zero() {
                continue;
            }
            let f = self.a[i][e].clone();
            for (v, pv) in self.a[i].iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v = v.sub(&f.mul(pv)?)?;
                }
            }
            self.rhs[i] = self.rhs[i].sub(&f.mul(&pivot_rhs)?)?;
        }
        let f = self.reduced[e].clone();
        if !f.is_zero() {
            for (v, pv) in self.reduced.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v = v.sub(&f.mul(pv)?)?;
                }
            }
            self.value = self.value.add(&f.mul(&pivot_rhs)?)?;
        }
        self.basis[r] = e;
        Some(())
    }

    /// Bland's rule: lowest-index improving column, ratio ties to the lowest basic index.
    fn run(&mut self) -> Option<()> {
        loop {
            let Some(e) = self.reduced.iter().position(F::is_negative) else { return Some(()) };
            let mut best: Option<(usize, F)> = None;
            for i in 0..self.a.len() {
                if !self.a[i][e].is_positive() {
                    continue;
                }
                let ratio = self.rhs[i].div(&self.a[i][e])?;
                let better = match &best {
                    None => true,
                    Some((b, r)) => ratio < *r || (ratio == *r && self.basis[i] < self.basis[*b]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            let (r, _) = best.expect("phase-I objective is bounded below");
            self.pivot(r, e)?;
        }
    }
}

fn solve<F: field::Field>(bounds: &[VarBounds], constraints: &[LinearConstraint]) -> Option<LpOutcome> {
    let mut of_var = Vec::with_capacity(bounds.len());
    let mut count = 0;
    for b in bounds {
        if b.lower.is_some() {
            of_var.push((count, None));
            count += 1;
        } else {
            of_var.push((count, Some(count + 1)));
            count += 2;
        }
    }
    let cols = Columns { of_var, count };
    let rows = build_rows::<F>(bounds, constraints, &cols)?;

    let structural = cols.count;
    let mut aux = structural;
    // initial basic column of each row, and whether that column is artificial
    let mut initial = Vec::with_capacity(rows.len());
    let mut layout = Vec::with_capacity(rows.len());
    for row in &rows {
        match row.relation {
            Relation::Le => {
                layout.push((Some((aux, F::one())), None));
                initial.push((aux, false));
                aux += 1;
            }
            Relation::Ge => {
                layout.push((Some((aux, F::one().neg()?)), Some(aux + 1)));
                initial.push((aux + 1, true));
                aux += 2;
            }
            Relation::Eq => {
                layout.push((None, Some(aux)));
                initial.push((aux, true));
                aux += 1;
            }
        }
    }
    let width = aux;
    let mut cost = vec![F::zero(); width];
    let mut a = Vec::with_capacity(rows.len());
    let mut rhs = Vec::with_capacity(rows.len());
    for (row, (slack, art)) in rows.iter().zip(&layout) {
        let mut full = row.coeffs.clone();
        full.resize(width, F::zero());
        if let Some((col, v)) = slack {
            full[*col] = v.clone();
        }
        if let Some(col) = art {
            full[*col] = F::one();
            cost[*col] = F::one();
        }
        a.push(full);
        rhs.push(row.rhs.clone());
    }
    let mut reduced = cost.clone();
    let mut value = F::zero();
    for (i, &(_, artificial)) in initial.iter().enumerate() {
        if artificial {
            for (d, v) in reduced.iter_mut().zip(&a[i]) {
                if !v.is_zero() {
                    *d = d.sub(v)?;
                }
            }
            value = value.add(&rhs[i])?;
        }
    }
    let basis = initial.iter().map(|&(c, _)| c).collect();
    let mut t = Tableau { a, rhs, reduced, value, basis };
    t.run()?;

    if t.value.is_zero() {
        let mut col_value = vec![F::zero(); width];
        for (i, &b) in t.basis.iter().enumerate() {
            col_value[b] = t.rhs[i].clone();
        }
        let point = bounds
            .iter()
            .zip(&cols.of_var)
            .map(|(b, &(pos, neg))| {
                let mut v = col_value[pos].to_rational();
                if let Some(neg) = neg {
                    v -= col_value[neg].to_rational();
                }
                if let Some(lb) = &b.lower {
                    v += lb;
                }
                v
            })
            .collect();
        return Some(LpOutcome::Feasible(point));
    }

    let mut cert_rows = vec![Rational::zero(); constraints.len()];
    let mut cert_upper = vec![Rational::zero(); bounds.len()];
    for (row, &(col, _)) in rows.iter().zip(&initial) {
        let mut y = cost[col].sub(&t.reduced[col])?.to_rational();
        if row.negated {
            y = -y;
        }
        match row.source {
            Source::Constraint(k) => cert_rows[k] = y,
            Source::Upper(j) => cert_upper[j] = y,
        }
    }
    Some(LpOutcome::Infeasible(FarkasCertificate {
        rows: cert_rows,
        upper: cert_upper,
        phase_one_value: t.value.to_rational(),
    }))
}
