use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::problem::{NeutralProblem, PeriodicVectorFunction};
use crate::deltacalc::mat_norm;
use crate::error::{Error, Result};
use crate::floquet::transition_table;

fn critical(p: &NeutralProblem) -> Error {
    let one = nalgebra::Complex::new(1.0, 0.0);
    let rep = p.spectral();
    let closest = rep
        .spectrum
        .iter()
        .map(|&[re, im]| nalgebra::Complex::new(re, im))
        .min_by(|a, b| (a - one).norm().total_cmp(&(b - one).norm()))
        .unwrap_or(one);
    Error::Critical {
        re: closest.re,
        im: closest.im,
        tol: rep.tolerance,
    }
}

fn check_input(p: &NeutralProblem, x: &PeriodicVectorFunction) -> Result<()> {
    let len = (p.ws.window.end - p.ws.window.start) as usize;
    if x.values().len() != len || x.values().iter().any(|v| v.len() != p.dim()) {
        return Err(Error::invariant(
            "periodic function",
            format!("expected {len} window values of dimension {}", p.dim()),
        ));
    }
    Ok(())
}

/// `(Bx)(t) = Q(t, x(δ₋(s, t)))` on the window.
pub fn operator_b(p: &NeutralProblem, x: &PeriodicVectorFunction) -> Result<PeriodicVectorFunction> {
    check_input(p, x)?;
    let vals = x.values();
    let out = p.ws.ext[..vals.len()]
        .iter()
        .map(|e| p.q(e.t, &vals[e.delayed]))
        .collect::<Result<Vec<_>>>()?;
    Ok(x.map_values(out))
}

/// `(Cx)(t) = Φ(t,t0)(M⁻¹ − I)⁻¹ Σ_{u ∈ [t, δ₊ᵀ(t))} Φ⁻¹(σ(u),t0)[A(u)Q(u, x(δ₋(s,u))) + G(u, x(u), x(δ₋(s,u)))]μ(u)`.
pub fn operator_c(p: &NeutralProblem, x: &PeriodicVectorFunction) -> Result<PeriodicVectorFunction> {
    check_input(p, x)?;
    let kernel = p.ws.kernel.as_ref().ok_or_else(|| critical(p))?;
    let vals = x.values();
    // prefix[j] = sum of the weighted integrand over the first j points of ext
    let mut prefix = Vec::with_capacity(p.ws.ext.len() + 1);
    let mut acc = DVector::zeros(p.dim());
    prefix.push(acc.clone());
    for e in &p.ws.ext {
        let xd = &vals[e.delayed];
        let f = &e.a * p.q(e.t, xd)? + p.g(e.t, &vals[e.pos], xd)?;
        acc += &e.weight * f;
        prefix.push(acc.clone());
    }
    let out = kernel
        .iter()
        .zip(&p.ws.ranges)
        .map(|(k, r)| k * (&prefix[r.end] - &prefix[r.start]))
        .collect();
    Ok(x.map_values(out))
}

pub fn operator_h(p: &NeutralProblem, x: &PeriodicVectorFunction) -> Result<PeriodicVectorFunction> {
    let b = operator_b(p, x)?;
    let c = operator_c(p, x)?;
    let out = b.values().iter().zip(c.values()).map(|(u, v)| u + v).collect();
    Ok(x.map_values(out))
}

/// `(Bψ)(t) + (Cφ)(t)`, the map whose ball invariance the existence theorem asks for.
pub fn operator_b_plus_c(
    p: &NeutralProblem,
    psi: &PeriodicVectorFunction,
    phi: &PeriodicVectorFunction,
) -> Result<PeriodicVectorFunction> {
    let b = operator_b(p, psi)?;
    let c = operator_c(p, phi)?;
    let out = b.values().iter().zip(c.values()).map(|(u, v)| u + v).collect();
    Ok(psi.map_values(out))
}

#[derive(Clone, Debug, Serialize)]
pub struct RReport {
    pub r: f64,
    /// Point `t` and integration point `u` attaining the maximum.
    pub argmax: [f64; 2],
    /// Largest `|Φ(δ₊ᵀ(t),t0) − Φ(t,t0)M|` over the closed window, relative
    /// to `max(1, |Φ(δ₊ᵀ(t),t0)|)`.
    pub shift_invariance_residual: f64,
}

/// The maximum over `t ∈ [t0, δ₊ᵀ(t0)]` and `u ∈ [t, δ₊ᵀ(t)]` of
/// `|Φ(t,t0)(M⁻¹ − I)⁻¹Φ⁻¹(σ(u),t0)|`.
pub fn compute_r(p: &NeutralProblem) -> Result<RReport> {
    let sys = p.system();
    let ws = &p.ws;
    let kernel = ws.kernel.as_ref().ok_or_else(|| critical(p))?;
    let per = sys.index(p.period())?;
    let (w0, w1) = (ws.window.start, ws.window.end);
    let out = |n: i64| Error::OutOfDomain { op: "forward", s: p.period(), t: sys.point(n) };
    let last = sys.plus_index(per, w1).ok_or_else(|| out(w1))?;
    let phi = transition_table(p.a(), w0, last + 1)?;
    let inv = phi
        .iter()
        .enumerate()
        .map(|(k, m)| m.clone().try_inverse().ok_or(Error::NotRegressive(sys.point(w0 + k as i64))))
        .collect::<Result<Vec<_>>>()?;
    let minv = ws.monodromy.clone().try_inverse().ok_or(Error::SingularMonodromy)?;
    let dim = p.dim();
    let mid = (minv - DMatrix::identity(dim, dim)).try_inverse().ok_or_else(|| critical(p))?;
    let mut best = (f64::NEG_INFINITY, [0.0, 0.0]);
    let mut residual = 0.0f64;
    for n in w0..=w1 {
        let k = if n < w1 {
            kernel[(n - w0) as usize].clone()
        } else {
            &phi[(n - w0) as usize] * &mid
        };
        let hi = sys.plus_index(per, n).ok_or_else(|| out(n))?;
        let shifted = &phi[(hi - w0) as usize];
        let periodic = &phi[(n - w0) as usize] * &ws.monodromy;
        residual = residual.max(mat_norm(&(shifted - periodic)) / mat_norm(shifted).max(1.0));
        for u in n..=hi {
            let v = mat_norm(&(&k * &inv[(u + 1 - w0) as usize]));
            if v > best.0 {
                best = (v, [sys.point(n), sys.point(u)]);
            }
        }
    }
    Ok(RReport {
        r: best.0,
        argmax: best.1,
        shift_invariance_residual: residual,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NormReport {
    pub norm: f64,
    pub per_window: Vec<f64>,
    /// No later window exceeds the first.
    pub first_window_attains: bool,
}

/// `max |A(t)|` over the first `horizon` windows, with the per-window maxima.
pub fn sup_norm_a(p: &NeutralProblem, horizon: usize) -> Result<NormReport> {
    if horizon == 0 {
        return Err(Error::invariant("horizon", "at least one window is required"));
    }
    let sys = p.system();
    let per = sys.index(p.period())?;
    let mut start = p.ws.window.start;
    let mut per_window = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let end = sys.plus_index(per, start).ok_or(Error::OutOfDomain {
            op: "forward",
            s: p.period(),
            t: sys.point(start),
        })?;
        let mut m = 0.0f64;
        for n in start..end {
            m = m.max(mat_norm(&p.a().eval_index(n)?));
        }
        per_window.push(m);
        start = end;
    }
    let norm = per_window.iter().copied().fold(0.0, f64::max);
    Ok(NormReport {
        norm,
        first_window_attains: per_window.iter().all(|&m| m <= per_window[0]),
        per_window,
    })
}
