//! Exhaustive (or sampled) property checks of a plan against the network.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::feas::{brute_force_feasible, ClassCompare, FeasOutcome, Query, Verifier};
use crate::fixtures::random_inputs;
use crate::flow::{hybrid_eval, ExecutionPlan, ExitKind};
use crate::iis::{verify_irreducible, Irreducibility};
use crate::model::{QuantizedMLP, SignConstraint};
use crate::pipeline::IisReport;

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    /// Largest grid checked exhaustively.
    pub cap: u128,
    /// Random inputs used when the grid exceeds `cap`.
    pub samples: usize,
    pub seed: u64,
    pub bb_budget: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            cap: crate::feas::DEFAULT_BRUTE_FORCE_CAP,
            samples: 100_000,
            seed: 0,
            bb_budget: crate::feas::DEFAULT_NODE_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Vec<i64>>,
}

impl CheckOutcome {
    fn pass(name: &str, detail: String) -> Self {
        Self { name: name.into(), passed: true, detail, counterexample: None }
    }

    fn fail(name: &str, detail: String, x: Option<Vec<i64>>) -> Self {
        Self { name: name.into(), passed: false, detail, counterexample: x }
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleReport {
    pub exhaustive: bool,
    pub inputs: usize,
    pub notes: Vec<String>,
    pub checks: Vec<CheckOutcome>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn holds_all(net: &QuantizedMLP, conditions: &[SignConstraint], x: &[i64]) -> bool {
    let f = net.forward(x).expect("input in domain");
    conditions.iter().all(|c| c.holds(net, &f))
}

/// Runs equivalence and exit-soundness over the grid (or a seeded sample),
/// flow sufficiency when exhaustive, and IIS irreducibility for every
/// reported IIS.
pub fn oracle_check(net: &QuantizedMLP, plan: &ExecutionPlan, iis: Option<&IisReport>, opts: &OracleOptions) -> OracleReport {
    let mut notes = Vec::new();
    let mut checks = Vec::new();
    if plan.check_model(net).is_err() {
        checks.push(CheckOutcome::fail("model-hash", "plan was built for a different model".into(), None));
    }
    let exhaustive = net.domain_size() <= opts.cap;
    let inputs: Vec<Vec<i64>> = if exhaustive {
        net.grid().collect()
    } else {
        notes.push(format!(
            "domain too large, skipping exhaustive checks ({} points > cap {}); sampling {} inputs",
            net.domain_size(),
            opts.cap,
            opts.samples
        ));
        random_inputs(&mut ChaCha8Rng::seed_from_u64(opts.seed), net, opts.samples)
    };

    let mut mismatch = None;
    let mut unsound = None;
    let mut exits = 0;
    for x in &inputs {
        let want = net.predict(x).expect("input in domain");
        let got = hybrid_eval(net, plan, x).expect("input in domain");
        if got.class != want && mismatch.is_none() {
            mismatch = Some((x.clone(), got.class, want));
        }
        if let ExitKind::Flow(id) = got.exit {
            exits += 1;
            let flow = &plan.flows.iter().find(|f| f.flow.id == id).expect("exit names a planned flow").flow;
            if (!holds_all(net, &flow.conditions, x) || flow.output_class != want) && unsound.is_none() {
                unsound = Some((x.clone(), id, want));
            }
        }
    }
    checks.push(match mismatch {
        None => CheckOutcome::pass("equivalence", format!("{} inputs, hybrid class equals predict", inputs.len())),
        Some((x, got, want)) => {
            CheckOutcome::fail("equivalence", format!("x={x:?}: hybrid {got}, predict {want}"), Some(x))
        }
    });
    checks.push(match unsound {
        None => CheckOutcome::pass("exit-soundness", format!("{exits} flow exits checked")),
        Some((x, id, want)) => CheckOutcome::fail(
            "exit-soundness",
            format!("x={x:?} left through flow {id} but predict is {want} or a condition fails"),
            Some(x),
        ),
    });

    if exhaustive {
        let bad = plan.flows.iter().find_map(|pf| {
            let f = &pf.flow;
            inputs
                .iter()
                .find(|x| holds_all(net, &f.conditions, x) && net.predict(x).unwrap() != f.output_class)
                .map(|x| (f.id, x.clone()))
        });
        checks.push(match bad {
            None => CheckOutcome::pass("flow-sufficiency", format!("{} flows imply their class", plan.flows.len())),
            Some((id, x)) => CheckOutcome::fail(
                "flow-sufficiency",
                format!("x={x:?} meets flow {id} but predicts another class"),
                Some(x),
            ),
        });
    }

    if let Some(report) = iis {
        checks.push(irreducibility(net, report, exhaustive, opts));
    }
    OracleReport { exhaustive, inputs: inputs.len(), notes, checks }
}

fn irreducibility(net: &QuantizedMLP, report: &IisReport, exhaustive: bool, opts: &OracleOptions) -> CheckOutcome {
    const NAME: &str = "iis-irreducibility";
    if report.model_hash != net.hash() {
        return CheckOutcome::fail(NAME, "IIS report was built for a different model".into(), None);
    }
    let verifier = Verifier::new(net, opts.bb_budget);
    let mut count = 0;
    for leaf in &report.leaves {
        for r in &leaf.rivals {
            count += 1;
            let kept: Vec<SignConstraint> = r.kept.iter().map(|c| c.sign()).collect();
            let compare = ClassCompare::new(r.rival, leaf.class);
            let at = format!("leaf {} vs class {}", leaf.leaf, r.rival);
            match verify_irreducible(&verifier, &kept, compare) {
                Ok(Irreducibility::Irreducible) => {}
                Ok(other) => return CheckOutcome::fail(NAME, format!("{at}: {other:?}"), None),
                Err(e) => return CheckOutcome::fail(NAME, format!("{at}: {e}"), None),
            }
            if exhaustive {
                // independent confirmation by enumeration
                let feasible = |signs: Vec<SignConstraint>| {
                    matches!(
                        brute_force_feasible(net, &Query::new(signs, Some(compare)), opts.cap),
                        Ok(FeasOutcome::Feasible(_))
                    )
                };
                if feasible(kept.clone()) {
                    return CheckOutcome::fail(NAME, format!("{at}: enumeration finds the kept set feasible"), None);
                }
                for i in 0..kept.len() {
                    let mut rest = kept.clone();
                    let dropped = rest.remove(i);
                    if !feasible(rest) {
                        return CheckOutcome::fail(NAME, format!("{at}: {dropped} is removable"), None);
                    }
                }
            }
        }
    }
    CheckOutcome::pass(NAME, format!("{count} IIS verified"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{parse_csv, Role};
    use crate::fixtures::{fixture_a, FIXTURE_A_TRAIN_CSV};
    use crate::pipeline::{convert, ConvertOptions};

    #[test]
    fn fixture_a_passes_and_flipped_polarity_fails() {
        let net = fixture_a();
        let train = parse_csv(FIXTURE_A_TRAIN_CSV, &net, false, Role::Train).unwrap();
        let conv = convert(&net, &train, ConvertOptions::default()).unwrap();
        let report = conv.iis_report(&net);
        let ok = oracle_check(&net, &conv.plan, Some(&report), &OracleOptions::default());
        assert!(ok.passed(), "{:?}", ok.checks);
        assert!(ok.exhaustive);
        assert_eq!(ok.checks.len(), 4);

        let mut bad = conv.plan.clone();
        let c = &mut bad.flows[0].flow.conditions[0];
        c.polarity = c.polarity.flipped();
        bad.slots = bad.flows[0].flow.conditions.clone();
        let r = oracle_check(&net, &bad, None, &OracleOptions::default());
        assert!(!r.passed());
        let eq = r.checks.iter().find(|c| c.name == "equivalence").unwrap();
        let x = eq.counterexample.clone().unwrap();
        assert_ne!(hybrid_eval(&net, &bad, &x).unwrap().class, net.predict(&x).unwrap());
    }

    #[test]
    fn padded_iis_is_reported() {
        let net = fixture_a();
        let train = parse_csv(FIXTURE_A_TRAIN_CSV, &net, false, Role::Train).unwrap();
        let conv = convert(&net, &train, ConvertOptions::default()).unwrap();
        let mut report = conv.iis_report(&net);
        let extra = report.leaves[0].path.iter().find(|c| !report.leaves[0].rivals[0].kept.contains(c)).cloned();
        report.leaves[0].rivals[0].kept.extend(extra);
        let r = oracle_check(&net, &conv.plan, Some(&report), &OracleOptions::default());
        let c = r.checks.iter().find(|c| c.name == "iis-irreducibility").unwrap();
        assert!(!c.passed, "{c}");
    }

    #[test]
    fn oversized_domain_falls_back_to_sampling() {
        let net = fixture_a();
        let plan = ExecutionPlan::empty(&net);
        let opts = OracleOptions { cap: 10, samples: 50, ..Default::default() };
        let r = oracle_check(&net, &plan, None, &opts);
        assert!(!r.exhaustive);
        assert_eq!(r.inputs, 50);
        assert!(r.notes[0].starts_with("domain too large, skipping exhaustive checks"));
        assert!(r.passed());
    }
}
