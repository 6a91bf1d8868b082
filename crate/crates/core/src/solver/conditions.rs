use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::operators::{compute_r, sup_norm_a};
use super::problem::{Lipschitz, NeutralProblem};
use crate::deltacalc::vec_norm;
use crate::error::{Error, Result};

/// Multiplier applied to the observed difference ratios.
pub const LIPSCHITZ_SAFETY: f64 = 1.2;
pub const DEFAULT_HORIZON: usize = 4;
pub const DEFAULT_LIPSCHITZ_SAMPLES: usize = 256;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LipschitzEstimate {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    /// Largest observed ratios before the safety factor.
    pub observed: [f64; 3],
    pub safety: f64,
    /// Always false: sampled ratios only bound the constants from below.
    pub rigorous: bool,
}

/// Samples difference ratios of `Q` and `G` at random window points and
/// random states with components in `[-j, j]`.
pub fn estimate_lipschitz(p: &NeutralProblem, j: f64, samples: usize, seed: u64) -> Result<LipschitzEstimate> {
    if !(j > 0.0) {
        return Err(Error::invariant("lipschitz radius", format!("J must be positive, got {j}")));
    }
    let window = p.window();
    let n = p.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| DVector::from_fn(n, |_, _| rng.gen_range(-j..=j));
    let ratio = |num: DVector<f64>, den: f64| if den > 0.0 { vec_norm(&num) / den } else { 0.0 };
    let mut obs = [0.0f64; 3];
    for _ in 0..samples {
        let t = window[rng.gen_range(0..window.len())];
        let (x, y, u, v) = (draw(&mut rng), draw(&mut rng), draw(&mut rng), draw(&mut rng));
        obs[0] = obs[0].max(ratio(p.q(t, &u)? - p.q(t, &v)?, vec_norm(&(&u - &v))));
        obs[1] = obs[1].max(ratio(p.g(t, &x, &u)? - p.g(t, &y, &u)?, vec_norm(&(&x - &y))));
        obs[2] = obs[2].max(ratio(p.g(t, &x, &u)? - p.g(t, &x, &v)?, vec_norm(&(&u - &v))));
    }
    Ok(LipschitzEstimate {
        e1: obs[0] * LIPSCHITZ_SAFETY,
        e2: obs[1] * LIPSCHITZ_SAFETY,
        e3: obs[2] * LIPSCHITZ_SAFETY,
        observed: obs,
        safety: LIPSCHITZ_SAFETY,
        rigorous: false,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct ConditionOptions {
    pub horizon: usize,
    /// Radius used when the Lipschitz constants must be estimated.
    pub j: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for ConditionOptions {
    fn default() -> Self {
        ConditionOptions {
            horizon: DEFAULT_HORIZON,
            j: 1.0,
            samples: DEFAULT_LIPSCHITZ_SAMPLES,
            seed: 0x11b5,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub r: f64,
    pub norm_a: f64,
    pub norm_a_per_window: Vec<f64>,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub alpha: f64,
    pub beta: f64,
    pub window_length: f64,
    /// `r·w·(‖A‖E1 + E2 + E3)`.
    pub n_bound: f64,
    pub contraction_constant: f64,
    /// Least admissible ball radius, `None` when no radius works.
    pub jmin: Option<f64>,
    pub shift_invariance_residual: f64,
    /// `max |Qᵟ(t,0) + G(t,0,0)|` over the window.
    pub forcing: f64,
    pub noncritical: bool,
    pub nontrivial: bool,
    pub krasnoselskii_ok: bool,
    pub contraction_ok: bool,
    pub lipschitz_estimated: bool,
    pub norm_a_first_window_attains: bool,
}

impl ConditionReport {
    /// Whether `J` satisfies `E1·J + α + r·w·(‖A‖(E1·J + α) + (E2 + E3)J + β) ≤ J`.
    pub fn ball_inequality_holds(&self, j: f64) -> bool {
        let w = self.r * self.window_length;
        let lhs = self.e1 * j + self.alpha + w * (self.norm_a * (self.e1 * j + self.alpha) + (self.e2 + self.e3) * j + self.beta);
        lhs <= j * (1.0 + 1e-12)
    }
}

/// Fills every field of the report. Declared constants are used when
/// passed or stored on the problem; otherwise they are estimated.
pub fn check_conditions(
    p: &NeutralProblem,
    lipschitz: Option<Lipschitz>,
    opts: &ConditionOptions,
) -> Result<ConditionReport> {
    let r = compute_r(p)?;
    let na = sup_norm_a(p, opts.horizon)?;
    let (lip, estimated) = match lipschitz.or(p.lipschitz()) {
        Some(l) => (l, false),
        None => {
            let est = estimate_lipschitz(p, opts.j, opts.samples, opts.seed)?;
            (Lipschitz { e1: est.e1, e2: est.e2, e3: est.e3 }, true)
        }
    };
    let sys = p.system();
    let per = sys.index(p.period())?;
    let zero = DVector::zeros(p.dim());
    let (mut alpha, mut beta) = (0.0f64, 0.0f64);
    let mut start = sys.t0_index();
    for _ in 0..opts.horizon {
        let end = sys.plus_index(per, start).ok_or(Error::OutOfDomain {
            op: "forward",
            s: p.period(),
            t: sys.point(start),
        })?;
        for n in start..end {
            let t = sys.point(n);
            alpha = alpha.max(vec_norm(&p.q(t, &zero)?));
            beta = beta.max(vec_norm(&p.g(t, &zero, &zero)?));
        }
        start = end;
    }
    let w = p.window_length();
    let n_bound = r.r * w * (na.norm * lip.e1 + lip.e2 + lip.e3);
    let contraction_constant = lip.e1 + n_bound;
    let denom = 1.0 - contraction_constant;
    let jmin = (denom > 0.0).then(|| (alpha + r.r * w * (na.norm * alpha + beta)) / denom);
    let rep = p.assumptions();
    Ok(ConditionReport {
        r: r.r,
        norm_a: na.norm,
        norm_a_per_window: na.per_window,
        e1: lip.e1,
        e2: lip.e2,
        e3: lip.e3,
        alpha,
        beta,
        window_length: w,
        n_bound,
        contraction_constant,
        jmin,
        shift_invariance_residual: r.shift_invariance_residual,
        forcing: rep.forcing,
        noncritical: true,
        nontrivial: rep.nontrivial,
        krasnoselskii_ok: jmin.is_some() && lip.e1 < 1.0,
        contraction_ok: contraction_constant < 1.0,
        lipschitz_estimated: estimated,
        norm_a_first_window_attains: na.first_window_attains,
    })
}
