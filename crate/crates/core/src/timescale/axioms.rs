use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::shift::{Direction, ShiftSystem};

const DIRS: [Direction; 2] = [Direction::Forward, Direction::Backward];

/// Outcome of one axiom over a sample.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomCheck {
    pub name: &'static str,
    /// Number of instances where the hypotheses held and the claim was tested.
    pub checked: usize,
    pub failures: usize,
    /// First failing `(s, t)` pair.
    pub counterexample: Option<(f64, f64)>,
}

impl AxiomCheck {
    fn new(name: &'static str) -> Self {
        AxiomCheck {
            name,
            checked: 0,
            failures: 0,
            counterexample: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn record(&mut self, ok: bool, pair: (f64, f64)) {
        self.checked += 1;
        if !ok {
            self.failures += 1;
            self.counterexample.get_or_insert(pair);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomReport {
    pub checks: Vec<AxiomCheck>,
    /// Sample pairs dropped because a coordinate is not a scale point.
    pub skipped_pairs: usize,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(AxiomCheck::passed)
    }

    pub fn get(&self, name: &str) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> impl Iterator<Item = &AxiomCheck> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

/// Deterministic sample: a lattice of index pairs spanning three periods
/// around `t0`, plus 64 pseudo-random pairs from a fixed seed.
pub fn default_sample(sys: &ShiftSystem) -> Vec<(f64, f64)> {
    sample_with_seed(sys, 0x5eed)
}

pub fn sample_with_seed(sys: &ShiftSystem, seed: u64) -> Vec<(f64, f64)> {
    let i0 = sys.t0_index();
    let p = sys
        .period()
        .and_then(|p| sys.scale().index_of(p))
        .map_or(4, |n| n - i0)
        .max(1);
    let span = (3 * p).max(12);
    let scale = sys.scale();
    let mut out = Vec::new();
    for si in i0..=i0 + span {
        for ti in i0 - span..=i0 + span {
            if let (Some(s), Some(t)) = (scale.point(si), scale.point(ti)) {
                out.push((s, t));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut added = 0;
    while added < 64 {
        let si = rng.gen_range(i0..=i0 + 2 * span);
        let ti = rng.gen_range(i0 - 2 * span..=i0 + 2 * span);
        if let (Some(s), Some(t)) = (scale.point(si), scale.point(ti)) {
            out.push((s, t));
            added += 1;
        }
    }
    out
}

/// Checks the shift axioms and the derived shift identities on `sample`.
///
/// All comparisons are exact, on scale indices. The composition axiom is
/// tested only when `(u, t)` also lies in the opposite domain, with `u`
/// drawn from the sampled first arguments.
pub fn verify_shift_axioms(sys: &ShiftSystem, sample: &[(f64, f64)]) -> AxiomReport {
    let scale = sys.scale();
    let i0 = sys.t0_index();
    let mut pairs = Vec::with_capacity(sample.len());
    let mut skipped = 0;
    for &(s, t) in sample {
        match (scale.index_of(s), scale.index_of(t)) {
            (Some(a), Some(b)) => pairs.push((a, b)),
            _ => skipped += 1,
        }
    }
    let us: Vec<i64> = pairs
        .iter()
        .map(|p| p.0)
        .filter(|&s| s >= i0)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .take(16)
        .collect();

    let pt = |n: i64| sys.point(n);
    let sh = |d: Direction, s: i64, t: i64| sys.shift_index(d, s, t);
    let next = |n: i64| scale.has_index(n + 1).then_some(n + 1);

    let mut p1 = AxiomCheck::new("P1");
    let mut p2 = AxiomCheck::new("P2");
    let mut p3 = AxiomCheck::new("P3");
    let mut p4 = AxiomCheck::new("P4");
    let mut p5 = AxiomCheck::new("P5");
    let mut l = [
        AxiomCheck::new("L1"),
        AxiomCheck::new("L2"),
        AxiomCheck::new("L3"),
        AxiomCheck::new("L4"),
        AxiomCheck::new("L5"),
        AxiomCheck::new("L6"),
        AxiomCheck::new("L7"),
        AxiomCheck::new("L8"),
        AxiomCheck::new("L9"),
        AxiomCheck::new("L10"),
    ];

    for &(s, t) in &pairs {
        let pair = (pt(s), pt(t));
        if s < i0 {
            continue;
        }
        for d in DIRS {
            // P1: strictly increasing in the second argument.
            if let Some(tn) = next(t) {
                if let (Some(a), Some(b)) = (sh(d, s, t), sh(d, s, tn)) {
                    p1.record(a < b, pair);
                }
            }
            // P2: monotone in the first argument, opposite senses.
            if let Some(sn) = next(s) {
                if let (Some(a), Some(b)) = (sh(d, s, t), sh(d, sn, t)) {
                    let ok = match d {
                        Direction::Forward => a < b,
                        Direction::Backward => a > b,
                    };
                    p2.record(ok, pair);
                }
            }
            // P4: δ∓(s, δ±(s, t)) = t.
            if let Some(a) = sh(d, s, t) {
                p4.record(sh(d.opposite(), s, a) == Some(t), pair);
            }
            // P5: δ∓(u, δ±(s, t)) = δ±(s, δ∓(u, t)).
            if let Some(a) = sh(d, s, t) {
                for &u in &us {
                    let (Some(lhs), Some(b)) = (sh(d.opposite(), u, a), sh(d.opposite(), u, t)) else {
                        continue;
                    };
                    p5.record(sh(d, s, b) == Some(lhs), pair);
                }
            }
        }
        // P3: δ₊(s, t0) = s and δ₊(t0, t) = t.
        p3.record(sh(Direction::Forward, s, i0) == Some(s), pair);
        p3.record(sh(Direction::Forward, i0, t) == Some(t), pair);

        // L1: δ₋(s, s) = t0.
        l[0].record(sh(Direction::Backward, s, s) == Some(i0), pair);
        // L2: δ₋(t0, t) = t.
        l[1].record(sh(Direction::Backward, i0, t) == Some(t), pair);
        // L3: δ₊(s, t) = u ⇔ δ₋(s, u) = t.
        if let Some(u) = sh(Direction::Forward, s, t) {
            l[2].record(sh(Direction::Backward, s, u) == Some(t), pair);
        }
        if let Some(v) = sh(Direction::Backward, s, t) {
            l[2].record(sh(Direction::Forward, s, v) == Some(t), pair);
        }
        if t >= i0 {
            if sh(Direction::Forward, s, t).is_some() {
                // L4: δ₊(t, δ₋(s, t0)) = δ₋(s, t).
                if let Some(a) = sh(Direction::Backward, s, i0) {
                    if let (Some(lhs), Some(rhs)) = (sh(Direction::Forward, t, a), sh(Direction::Backward, s, t)) {
                        l[3].record(lhs == rhs, pair);
                    }
                }
                // L5: δ₊(u, t) = δ₊(t, u).
                l[4].record(sh(Direction::Forward, s, t) == sh(Direction::Forward, t, s), pair);
                // L6: δ₊(s, t) ≥ t0.
                let a = sh(Direction::Forward, s, t).unwrap_or(i0);
                l[5].record(a >= i0, pair);
            }
            // L7: δ₋(s, t) ≥ t0 when t ≥ s.
            if t >= s {
                if let Some(a) = sh(Direction::Backward, s, t) {
                    l[6].record(a >= i0, pair);
                }
            }
        }
        // L8: the delta derivative of δ₊(s, ·) is positive.
        if let Some(tn) = next(t) {
            if let (Some(a), Some(b)) = (sh(Direction::Forward, s, t), sh(Direction::Forward, s, tn)) {
                let mu = pt(tn) - pt(t);
                l[7].record((pt(b) - pt(a)) / mu > 0.0, pair);
            }
        }
        // L9: δ₊(δ₋(u, s), δ₋(s, v)) = δ₋(u, v) with v = t ≥ s ≥ u.
        if t >= s {
            if let Some(b) = sh(Direction::Backward, s, t) {
                for &u in us.iter().filter(|&&u| u <= s) {
                    let Some(a) = sh(Direction::Backward, u, s) else { continue };
                    let rhs = sh(Direction::Backward, u, t);
                    l[8].record(sh(Direction::Forward, a, b) == rhs && rhs.is_some(), pair);
                }
            }
        }
        // L10: δ₋(s, t) = t0 forces s = t.
        if let Some(a) = sh(Direction::Backward, s, t) {
            l[9].record(a != i0 || s == t, pair);
        }
    }

    let mut checks = vec![p1, p2, p3, p4, p5];
    checks.extend(l);
    AxiomReport {
        checks,
        skipped_pairs: skipped,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodReport {
    pub period: f64,
    pub holds: bool,
    pub checked: usize,
    /// Why the check failed, when it did.
    pub reason: Option<String>,
    /// First sampled point violating a domain or commutation requirement.
    pub counterexample: Option<f64>,
}

/// Checks that `period` is a scale period: it lies after `t0`, every
/// sampled `t` has `(P, t)` in both domains, and shifting by `P` commutes
/// with `σ`.
pub fn verify_period(sys: &ShiftSystem, period: f64, sample: &[f64]) -> PeriodReport {
    let fail = |reason: String, cx: Option<f64>, checked| PeriodReport {
        period,
        holds: false,
        checked,
        reason: Some(reason),
        counterexample: cx,
    };
    let scale = sys.scale();
    let Some(p) = scale.index_of(period) else {
        return fail(format!("{period} is not a scale point"), None, 0);
    };
    if p <= sys.t0_index() {
        return fail(format!("{period} does not lie after t0 = {}", sys.t0()), None, 0);
    }
    let mut checked = 0;
    for &t in sample {
        let Some(ti) = scale.index_of(t) else {
            return fail(format!("sample point {t} is not a scale point"), Some(t), checked);
        };
        checked += 1;
        for d in DIRS {
            let Some(a) = sys.shift_index(d, p, ti) else {
                return fail(format!("({period}, {t}) is outside the {} domain", d.name()), Some(t), checked);
            };
            if !scale.has_index(ti + 1) {
                continue;
            }
            let commutes = sys.shift_index(d, p, ti + 1) == Some(a + 1) && scale.has_index(a + 1);
            if !commutes {
                return fail(format!("{} shift by {period} does not commute with sigma at {t}", d.name()), Some(t), checked);
            }
        }
    }
    PeriodReport {
        period,
        holds: true,
        checked,
        reason: None,
        counterexample: None,
    }
}

/// Sample for `verify_period`: all points within three periods of `t0`.
pub fn default_period_sample(sys: &ShiftSystem) -> Vec<f64> {
    let i0 = sys.t0_index();
    let p = sys
        .period()
        .and_then(|p| sys.scale().index_of(p))
        .map_or(4, |n| n - i0)
        .max(1);
    let span = (3 * p).max(12);
    (i0 - span..=i0 + span).filter_map(|n| sys.scale().point(n)).collect()
}
