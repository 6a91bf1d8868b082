use serde::Serialize;

use crate::error::{Error, Result};
use crate::timescale::ShiftSystem;

/// The pieces of `Θ(t)` for one point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThetaParts {
    pub t: f64,
    /// `m(t)`: the least `k` with `δ₊^{(k)}(T, t0) ≥ t`.
    pub m: u64,
    /// Sum of the centred increments over the first `m` orbit steps.
    pub sum: f64,
    /// Correction `G(t)`, zero on the orbit of `t0`.
    pub g: f64,
    pub in_orbit: bool,
    pub theta: f64,
}

const MAX_ORBIT_STEPS: u64 = 1 << 24;

/// Evaluates `Θ(t)` with every increment measured from `t0`:
///
/// `Θ(t) = Σ_{j=1}^{m(t)} [δ₋(p_{j−1}, p_j) − t0] + G(t)`, with `p_j` the
/// orbit `δ₊^{(j)}(T, t0)` and `G(t) = −[δ₋(t, p_{m(t)}) − t0]` off the orbit.
///
/// Centring makes `Θ(t) = t − t0` on every additive lattice, whatever `t0`.
pub fn theta_parts(sys: &ShiftSystem, period: f64, t: f64) -> Result<ThetaParts> {
    let p = sys.index(period)?;
    let it = sys.index(t)?;
    theta_parts_index(sys, p, it)
}

pub(crate) fn theta_parts_index(sys: &ShiftSystem, period: i64, it: i64) -> Result<ThetaParts> {
    let i0 = sys.t0_index();
    let t0 = sys.t0();
    let t = sys.point(it);
    if it < i0 {
        return Err(Error::OutOfDomain { op: "theta", s: sys.point(period), t });
    }
    let out = |s: i64, u: i64| Error::OutOfDomain {
        op: "theta",
        s: sys.point(s),
        t: sys.point(u),
    };
    let mut prev = i0;
    let mut m = 0u64;
    let mut sum = 0.0;
    while prev < it {
        let next = sys.plus_index(period, prev).ok_or_else(|| out(period, prev))?;
        let inc = sys.minus_index(prev, next).ok_or_else(|| out(prev, next))?;
        sum += sys.point(inc) - t0;
        prev = next;
        m += 1;
        if m > MAX_ORBIT_STEPS {
            return Err(out(period, it));
        }
    }
    let in_orbit = prev == it;
    let g = if in_orbit {
        0.0
    } else {
        let back = sys.minus_index(it, prev).ok_or_else(|| out(it, prev))?;
        -(sys.point(back) - t0)
    };
    Ok(ThetaParts {
        t,
        m,
        sum,
        g,
        in_orbit,
        theta: sum + g,
    })
}

pub fn theta(sys: &ShiftSystem, period: f64, t: f64) -> Result<f64> {
    Ok(theta_parts(sys, period, t)?.theta)
}

pub fn m_of(sys: &ShiftSystem, period: f64, t: f64) -> Result<u64> {
    Ok(theta_parts(sys, period, t)?.m)
}

pub fn g_of(sys: &ShiftSystem, period: f64, t: f64) -> Result<f64> {
    Ok(theta_parts(sys, period, t)?.g)
}

/// `Θ(δ₊ᵀ(t0))`, the growth of `Θ` over one period.
pub fn theta_normalizer(sys: &ShiftSystem, period: f64) -> Result<f64> {
    let end = sys.shift_plus(period, sys.t0())?;
    theta(sys, period, end)
}
