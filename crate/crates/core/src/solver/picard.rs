use serde::Serialize;

use super::conditions::ConditionReport;
use super::operators::operator_h;
use super::problem::{NeutralProblem, PeriodicVectorFunction};
use crate::deltacalc::vec_norm;
use crate::error::{Error, Result};

/// Slack allowed on each observed step ratio over the contraction constant.
pub const RATIO_SLACK: f64 = 1e-6;
pub const DAMPING: f64 = 0.5;

#[derive(Clone, Copy, Debug)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Iterate even without a contraction certificate, using damping.
    pub force: bool,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            tol: 1e-12,
            max_iter: 10_000,
            force: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PicardDiagnostics {
    pub iterations: usize,
    pub step_norms: Vec<f64>,
    /// `‖Δx_{k+1}‖/‖Δx_k‖`, skipped once the previous step is at rounding level.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub contraction_constant: f64,
    pub ratios_within_bound: bool,
    pub damping: f64,
    pub solution_norm: f64,
}

#[derive(Clone, Debug)]
pub struct PicardOutcome {
    pub solution: PeriodicVectorFunction,
    pub diagnostics: PicardDiagnostics,
}

/// Iterates `x ← Hx` from `x0` until the step norm drops to `tol`.
pub fn solve_picard(
    p: &NeutralProblem,
    x0: &PeriodicVectorFunction,
    report: &ConditionReport,
    opts: &PicardOptions,
) -> Result<PicardOutcome> {
    if !report.contraction_ok && !opts.force {
        return Err(Error::NotContractive(report.contraction_constant));
    }
    let lambda = if report.contraction_ok { 1.0 } else { DAMPING };
    let mut x = x0.clone();
    let mut steps: Vec<f64> = Vec::new();
    let mut ratios = Vec::new();
    for k in 1..=opts.max_iter {
        let hx = operator_h(p, &x)?;
        let next = if lambda == 1.0 {
            hx
        } else {
            let vals = x.values().iter().zip(hx.values()).map(|(a, b)| a * (1.0 - lambda) + b * lambda).collect();
            x.map_values(vals)
        };
        let step = next.distance(&x);
        if !step.is_finite() {
            return Err(Error::Evaluation(format!("iterate {k} is not finite")));
        }
        if let Some(&prev) = steps.last() {
            let floor = 64.0 * f64::EPSILON * (1.0 + x.norm());
            if prev > floor {
                ratios.push(step / prev);
            }
        }
        steps.push(step);
        x = next;
        if step <= opts.tol {
            let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
            return Ok(PicardOutcome {
                diagnostics: PicardDiagnostics {
                    iterations: k,
                    max_ratio,
                    ratios_within_bound: max_ratio <= report.contraction_constant + RATIO_SLACK,
                    ratios,
                    step_norms: steps,
                    contraction_constant: report.contraction_constant,
                    damping: lambda,
                    solution_norm: x.norm(),
                },
                solution: x,
            });
        }
    }
    Err(Error::MaxIterations {
        iterations: opts.max_iter,
        last_step: steps.last().copied().unwrap_or(f64::NAN),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Residuals {
    /// `max |x(t) − (Hx)(t)|`.
    pub integral: f64,
    /// `max |xᵟ − A x − [Q(t, x(δ₋(s,t)))]ᵟ − G(t, x, x(δ₋(s,t)))|`.
    pub differential: f64,
    /// `max |x(δ₊ᵀ(t)) − x(t)|`.
    pub periodicity: f64,
}

/// Residuals of `x` against the integral and the differential form.
pub fn verify_solution(p: &NeutralProblem, x: &PeriodicVectorFunction) -> Result<Residuals> {
    let sys = p.system();
    let per = sys.index(p.period())?;
    let hx = operator_h(p, x)?;
    let integral = x.distance(&hx);
    let (mut differential, mut periodicity) = (0.0f64, 0.0f64);
    for (i, n) in p.ws.window.clone().enumerate() {
        let t = sys.point(n);
        let ts = sys.point(n + 1);
        let mu = ts - t;
        let xt = &x.values()[i];
        let xs = x.evaluate_index(n + 1)?;
        let ud = x.evaluate_index(p.delayed_index(n)?)?;
        let usd = x.evaluate_index(p.delayed_index(n + 1)?)?;
        let dq = (p.q(ts, &usd)? - p.q(t, &ud)?) / mu;
        let res = (&xs - xt) / mu - p.a().eval_index(n)? * xt - dq - p.g(t, xt, &ud)?;
        differential = differential.max(vec_norm(&res));
        let far = sys.plus_index(per, n).ok_or(Error::OutOfDomain { op: "forward", s: p.period(), t })?;
        periodicity = periodicity.max(vec_norm(&(x.evaluate_index(far)? - xt)));
    }
    Ok(Residuals {
        integral,
        differential,
        periodicity,
    })
}
