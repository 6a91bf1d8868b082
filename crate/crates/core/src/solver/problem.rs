use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::deltacalc::{vec_norm, Extension, GridFunction};
use crate::error::{Error, Result};
use crate::floquet::{spectral_report, transition_table, MatrixFunction, SpectralReport, SPECTRAL_TOL};
use crate::timescale::{Direction, ShiftSystem};

/// `Q(t, u)`, with `u` the delayed state.
pub type QFn = Arc<dyn Fn(f64, &DVector<f64>) -> Result<DVector<f64>> + Send + Sync>;
/// `G(t, x, u)`, with `x` the current and `u` the delayed state.
pub type GFn = Arc<dyn Fn(f64, &DVector<f64>, &DVector<f64>) -> Result<DVector<f64>> + Send + Sync>;

/// Tolerance of the sampled periodicity checks run at construction.
pub const ASSUMPTION_TOL: f64 = 1e-10;
/// Number of random shift-periodic states used by those checks.
const ASSUMPTION_SAMPLES: usize = 8;

/// A vector function periodic in shifts, stored by its window values.
#[derive(Clone, Debug)]
pub struct PeriodicVectorFunction {
    sys: ShiftSystem,
    period: f64,
    period_index: i64,
    start: i64,
    values: Vec<DVector<f64>>,
}

impl PeriodicVectorFunction {
    pub fn from_values(sys: &ShiftSystem, period: f64, values: Vec<DVector<f64>>) -> Result<Self> {
        let w = sys.window_indices(period)?;
        if values.len() as i64 != w.end - w.start {
            return Err(Error::invariant(
                "periodic function",
                format!("window has {} points but {} values were given", w.end - w.start, values.len()),
            ));
        }
        Ok(PeriodicVectorFunction {
            sys: sys.clone(),
            period,
            period_index: sys.index(period)?,
            start: w.start,
            values,
        })
    }

    pub fn from_fn(sys: &ShiftSystem, period: f64, f: impl Fn(f64) -> DVector<f64>) -> Result<Self> {
        let values = sys.window(period)?.into_iter().map(f).collect();
        Self::from_values(sys, period, values)
    }

    pub fn zeros(sys: &ShiftSystem, period: f64, dim: usize) -> Result<Self> {
        Self::from_fn(sys, period, |_| DVector::zeros(dim))
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn window_points(&self) -> Vec<f64> {
        (0..self.values.len()).map(|k| self.sys.point(self.start + k as i64)).collect()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn evaluate(&self, t: f64) -> Result<DVector<f64>> {
        self.evaluate_index(self.sys.index(t)?)
    }

    pub(crate) fn evaluate_index(&self, n: i64) -> Result<DVector<f64>> {
        let (hat, _) = self.sys.canonical_index(self.period_index, n).ok_or(Error::OutOfDomain {
            op: "window reduction",
            s: self.period,
            t: self.sys.point(n),
        })?;
        Ok(self.values[(hat - self.start) as usize].clone())
    }

    /// `max |x(t)|` over the closed window; equal to the max over the
    /// half-open window because `x(δ₊ᵀ(t0)) = x(t0)`.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(vec_norm).fold(0.0, f64::max)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| vec_norm(&(a - b)))
            .fold(0.0, f64::max)
    }

    pub fn to_grid(&self) -> Result<GridFunction<DVector<f64>>> {
        GridFunction::from_window(&self.sys, self.period, self.values.clone(), Extension::Periodic)
    }

    pub(crate) fn map_values(&self, values: Vec<DVector<f64>>) -> Self {
        PeriodicVectorFunction { values, ..self.clone() }
    }
}

/// Declared Lipschitz constants of `Q` and `G`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lipschitz {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
}

/// Results of the checks run when a problem is built.
#[derive(Clone, Debug, Serialize)]
pub struct AssumptionReport {
    /// Largest relative defect of the Δ-periodicity of `A`.
    pub a_defect: f64,
    /// Largest defect of the periodicity of `Q` along sampled states.
    pub q_defect: f64,
    /// Largest defect of the Δ-periodicity of `G` along sampled states.
    pub g_defect: f64,
    /// `max_t |Qᵟ(t, 0) + G(t, 0, 0)|` over the window.
    pub forcing: f64,
    /// Whether the zero state fails to solve the system.
    pub nontrivial: bool,
}

/// One point of the integration range used by the integral operator.
#[derive(Clone, Debug)]
pub(crate) struct ExtPoint {
    pub t: f64,
    pub a: DMatrix<f64>,
    /// `Φ⁻¹(σ(u), t0)·μ(u)`.
    pub weight: DMatrix<f64>,
    /// Window position of `u`.
    pub pos: usize,
    /// Window position of `δ₋(s, u)`.
    pub delayed: usize,
}

/// Precomputed data for the operators over one window.
#[derive(Clone, Debug)]
pub(crate) struct Workspace {
    pub window: std::ops::Range<i64>,
    pub ext: Vec<ExtPoint>,
    pub monodromy: DMatrix<f64>,
    pub spectral: SpectralReport,
    /// `Φ(t_i, t0)(M⁻¹ − I)⁻¹`, absent when the system is critical.
    pub kernel: Option<Vec<DMatrix<f64>>>,
    /// Range of `ext` positions integrated for each window point.
    pub ranges: Vec<std::ops::Range<usize>>,
}

/// The neutral delay system `xᵟ = A x + [Q(t, x(δ₋(s,t)))]ᵟ + G(t, x, x(δ₋(s,t)))`
/// with its periodicity data.
#[derive(Clone)]
pub struct NeutralProblem {
    sys: ShiftSystem,
    dim: usize,
    a: MatrixFunction,
    q: QFn,
    g: GFn,
    delay: f64,
    period: f64,
    lipschitz: Option<Lipschitz>,
    assumptions: AssumptionReport,
    pub(crate) ws: Arc<Workspace>,
}

impl fmt::Debug for NeutralProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NeutralProblem")
            .field("sys", &self.sys)
            .field("dim", &self.dim)
            .field("delay", &self.delay)
            .field("period", &self.period)
            .field("lipschitz", &self.lipschitz)
            .field("assumptions", &self.assumptions)
            .finish()
    }
}

impl NeutralProblem {
    /// Builds the problem and runs the structural checks: function period,
    /// delay compatibility, regressivity, and the sampled periodicity of
    /// `A`, `Q` and `G`. Nontriviality is recorded, not enforced.
    pub fn new(a: MatrixFunction, q: QFn, g: GFn, delay: f64, period: f64) -> Result<Self> {
        let sys = a.system().clone();
        let dim = a.dim();
        let p = sys.index(period)?;
        if p <= sys.t0_index() {
            return Err(Error::invariant(
                "function period",
                format!("function period {period} must lie after t0 = {}", sys.t0()),
            ));
        }
        if let Some(sp) = sys.period() {
            if p < sys.index(sp)? {
                return Err(Error::invariant(
                    "function period below scale period",
                    format!("T = {period} is smaller than the scale period P = {sp}"),
                ));
            }
        }
        let delay_ok = sys.scale().index_of(delay).is_some_and(|d| d >= sys.t0_index());
        if !delay_ok {
            return Err(Error::invariant(
                "delay compatibility",
                format!("delay {delay} must be a scale point not before t0 = {}", sys.t0()),
            ));
        }
        let ws = build_workspace(&sys, &a, delay, period)?;
        let mut problem = NeutralProblem {
            sys,
            dim,
            a,
            q,
            g,
            delay,
            period,
            lipschitz: None,
            assumptions: AssumptionReport {
                a_defect: 0.0,
                q_defect: 0.0,
                g_defect: 0.0,
                forcing: 0.0,
                nontrivial: false,
            },
            ws: Arc::new(ws),
        };
        problem.assumptions = problem.check_assumptions()?;
        let rep = &problem.assumptions;
        if rep.a_defect > ASSUMPTION_TOL {
            return Err(Error::invariant("A delta-periodicity", format!("defect {:e}", rep.a_defect)));
        }
        if rep.q_defect > ASSUMPTION_TOL {
            return Err(Error::invariant("Q periodicity", format!("defect {:e}", rep.q_defect)));
        }
        if rep.g_defect > ASSUMPTION_TOL {
            return Err(Error::invariant("G delta-periodicity", format!("defect {:e}", rep.g_defect)));
        }
        Ok(problem)
    }

    pub fn with_lipschitz(mut self, e1: f64, e2: f64, e3: f64) -> Self {
        self.lipschitz = Some(Lipschitz { e1, e2, e3 });
        self
    }

    pub fn system(&self) -> &ShiftSystem {
        &self.sys
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn a(&self) -> &MatrixFunction {
        &self.a
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn lipschitz(&self) -> Option<Lipschitz> {
        self.lipschitz
    }

    pub fn assumptions(&self) -> &AssumptionReport {
        &self.assumptions
    }

    pub fn monodromy(&self) -> &DMatrix<f64> {
        &self.ws.monodromy
    }

    pub fn spectral(&self) -> &SpectralReport {
        &self.ws.spectral
    }

    pub fn window(&self) -> Vec<f64> {
        self.ws.window.clone().map(|n| self.sys.point(n)).collect()
    }

    /// `δ₊ᵀ(t0) − t0`.
    pub fn window_length(&self) -> f64 {
        self.sys.point(self.ws.window.end) - self.sys.t0()
    }

    pub fn q(&self, t: f64, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len((self.q)(t, u)?, "Q")
    }

    pub fn g(&self, t: f64, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len((self.g)(t, x, u)?, "G")
    }

    fn check_len(&self, v: DVector<f64>, what: &str) -> Result<DVector<f64>> {
        if v.len() != self.dim {
            return Err(Error::invariant(
                "dimension",
                format!("{what} returned {} components, expected {}", v.len(), self.dim),
            ));
        }
        Ok(v)
    }

    pub fn zero_state(&self) -> PeriodicVectorFunction {
        PeriodicVectorFunction::zeros(&self.sys, self.period, self.dim).expect("window validated at construction")
    }

    pub(crate) fn delayed_index(&self, n: i64) -> Result<i64> {
        let s = self.sys.index(self.delay)?;
        self.sys.minus_index(s, n).ok_or_else(|| {
            Error::invariant(
                "delay compatibility",
                format!("delta_-({}, {}) is not a scale point", self.delay, self.sys.point(n)),
            )
        })
    }

    /// A random shift-periodic state with components uniform in `[-j, j]`.
    pub fn random_state(&self, rng: &mut impl Rng, j: f64) -> PeriodicVectorFunction {
        let len = (self.ws.window.end - self.ws.window.start) as usize;
        let values = (0..len)
            .map(|_| DVector::from_fn(self.dim, |_, _| rng.gen_range(-j..=j)))
            .collect();
        self.zero_state().map_values(values)
    }

    fn check_assumptions(&self) -> Result<AssumptionReport> {
        let sys = &self.sys;
        let p = sys.index(self.period)?;
        let a_defect = self.a.delta_periodicity_defect(self.period)?;
        let mut rng = ChaCha8Rng::seed_from_u64(0xa55e);
        let mut states = vec![self.zero_state()];
        states.extend((0..ASSUMPTION_SAMPLES).map(|_| self.random_state(&mut rng, 1.0)));
        let (mut q_defect, mut g_defect) = (0.0f64, 0.0f64);
        for x in &states {
            for n in self.ws.window.clone() {
                let t = sys.point(n);
                let xt = x.evaluate_index(n)?;
                let xd = x.evaluate_index(self.delayed_index(n)?)?;
                let q0 = self.q(t, &xd)?;
                let g0 = self.g(t, &xt, &xd)?;
                for d in [Direction::Forward, Direction::Backward] {
                    let out = || Error::OutOfDomain { op: d.name(), s: self.period, t };
                    let m = sys.shift_index(d, p, n).ok_or_else(out)?;
                    let m1 = sys.shift_index(d, p, n + 1).ok_or_else(out)?;
                    let mu = sys.scale().mu_index(n).ok_or(Error::NoSuccessor(t))?;
                    let w = (sys.point(m1) - sys.point(m)) / mu;
                    let tm = sys.point(m);
                    let xm = x.evaluate_index(m)?;
                    let xmd = x.evaluate_index(self.delayed_index(m)?)?;
                    let q1 = self.q(tm, &xmd)?;
                    let g1 = self.g(tm, &xm, &xmd)? * w;
                    q_defect = q_defect.max(vec_norm(&(q1 - &q0)) / vec_norm(&q0).max(1.0));
                    g_defect = g_defect.max(vec_norm(&(g1 - &g0)) / vec_norm(&g0).max(1.0));
                }
            }
        }
        let zero = DVector::zeros(self.dim);
        let mut forcing = 0.0f64;
        for n in self.ws.window.clone() {
            let t = sys.point(n);
            let mu = sys.scale().mu_index(n).ok_or(Error::NoSuccessor(t))?;
            let dq = (self.q(sys.point(n + 1), &zero)? - self.q(t, &zero)?) / mu;
            forcing = forcing.max(vec_norm(&(dq + self.g(t, &zero, &zero)?)));
        }
        Ok(AssumptionReport {
            a_defect,
            q_defect,
            g_defect,
            forcing,
            nontrivial: forcing > 0.0,
        })
    }
}

fn build_workspace(sys: &ShiftSystem, a: &MatrixFunction, delay: f64, period: f64) -> Result<Workspace> {
    let p = sys.index(period)?;
    let s = sys.index(delay)?;
    let window = sys.window_indices(period)?;
    let shift_out = |n: i64| Error::OutOfDomain { op: "forward", s: period, t: sys.point(n) };
    let mut ranges_abs = Vec::new();
    let mut ext_end = window.end;
    for n in window.clone() {
        let hi = sys.plus_index(p, n).ok_or_else(|| shift_out(n))?;
        ext_end = ext_end.max(hi);
        ranges_abs.push(n..hi);
    }
    let phi = transition_table(a, window.start, ext_end)?;
    let monodromy = phi[(window.end - window.start) as usize].clone();
    let spectral = spectral_report(&monodromy, SPECTRAL_TOL)?;
    let position = |n: i64| -> Result<usize> {
        let (hat, _) = sys.canonical_index(p, n).ok_or_else(|| shift_out(n))?;
        Ok((hat - window.start) as usize)
    };
    let mut ext = Vec::new();
    for n in window.start..ext_end {
        let t = sys.point(n);
        let mu = sys.scale().mu_index(n).ok_or(Error::NoSuccessor(t))?;
        let next = &phi[(n + 1 - window.start) as usize];
        let inv = next.clone().try_inverse().ok_or(Error::NotRegressive(t))?;
        let d = sys.minus_index(s, n).ok_or_else(|| {
            Error::invariant("delay compatibility", format!("delta_-({delay}, {t}) is not a scale point"))
        })?;
        ext.push(ExtPoint {
            t,
            a: a.eval_index(n)?,
            weight: inv * mu,
            pos: position(n)?,
            delayed: position(d)?,
        });
    }
    let dim = a.dim();
    let kernel = if spectral.critical {
        None
    } else {
        let minv = monodromy.clone().try_inverse().ok_or(Error::SingularMonodromy)?;
        let mid = (minv - DMatrix::identity(dim, dim)).try_inverse();
        mid.map(|mid| {
            window
                .clone()
                .map(|n| &phi[(n - window.start) as usize] * &mid)
                .collect()
        })
    };
    let ranges = ranges_abs
        .into_iter()
        .map(|r| (r.start - window.start) as usize..(r.end - window.start) as usize)
        .collect();
    Ok(Workspace {
        window,
        ext,
        monodromy,
        spectral,
        kernel,
        ranges,
    })
}
