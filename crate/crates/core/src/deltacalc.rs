//! Delta derivatives, exact delta integrals on isolated scales and the two
//! periodicity predicates for functions.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::timescale::{Direction, ShiftSystem};

/// Default absolute tolerance of the periodicity predicates.
pub const PERIODICITY_TOL: f64 = 1e-10;

/// Values a grid function can take.
pub trait GridValue: Clone + fmt::Debug {
    fn zero_like(&self) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn scale(&self, c: f64) -> Self;
    /// Max-absolute-component norm for vectors, max row sum for matrices.
    fn norm(&self) -> f64;
}

impl GridValue for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl GridValue for DVector<f64> {
    fn zero_like(&self) -> Self {
        DVector::zeros(self.len())
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
    fn norm(&self) -> f64 {
        vec_norm(self)
    }
}

impl GridValue for DMatrix<f64> {
    fn zero_like(&self) -> Self {
        DMatrix::zeros(self.nrows(), self.ncols())
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
    fn norm(&self) -> f64 {
        mat_norm(self)
    }
}

/// `max_i |x_i|`.
pub fn vec_norm(x: &DVector<f64>) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Max row sum, the operator norm induced by [`vec_norm`].
pub fn mat_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// How window values extend to the rest of the scale.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extension {
    /// `f(δ±ᵀ(t)) = f(t)`.
    Periodic,
    /// `f(δ±ᵀ(t))·δ±^{ΔT}(t) = f(t)`.
    DeltaPeriodic,
    /// No extension; evaluation outside the window is an error.
    Finite,
}

#[derive(Clone)]
enum Source<V> {
    Window { values: Vec<V>, rule: Extension },
    Total(Arc<dyn Fn(f64) -> V + Send + Sync>),
}

/// A function on the isolated part of a scale with a declared function
/// period `T`.
#[derive(Clone)]
pub struct GridFunction<V> {
    sys: ShiftSystem,
    period: f64,
    period_index: i64,
    window: std::ops::Range<i64>,
    source: Source<V>,
}

impl<V: fmt::Debug> fmt::Debug for GridFunction<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("GridFunction");
        d.field("period", &self.period);
        match &self.source {
            Source::Window { values, rule } => d.field("values", values).field("rule", rule),
            Source::Total(_) => d.field("values", &"<closure>"),
        };
        d.finish()
    }
}

impl<V: GridValue> GridFunction<V> {
    /// Function given by its values on the window `[t0, δ₊ᵀ(t0))`.
    pub fn from_window(sys: &ShiftSystem, period: f64, values: Vec<V>, rule: Extension) -> Result<Self> {
        let window = sys.window_indices(period)?;
        if values.len() as i64 != window.end - window.start {
            return Err(Error::invariant(
                "grid function",
                format!(
                    "window has {} points but {} values were given",
                    window.end - window.start,
                    values.len()
                ),
            ));
        }
        Ok(GridFunction {
            sys: sys.clone(),
            period,
            period_index: sys.index(period)?,
            window,
            source: Source::Window { values, rule },
        })
    }

    /// Samples `f` on the window and extends by `rule`.
    pub fn sample(sys: &ShiftSystem, period: f64, rule: Extension, f: impl Fn(f64) -> V) -> Result<Self> {
        let values = sys.window(period)?.into_iter().map(f).collect();
        Self::from_window(sys, period, values, rule)
    }

    /// Function defined everywhere by a closure.
    pub fn total(sys: &ShiftSystem, period: f64, f: impl Fn(f64) -> V + Send + Sync + 'static) -> Result<Self> {
        Ok(GridFunction {
            sys: sys.clone(),
            period,
            period_index: sys.index(period)?,
            window: sys.window_indices(period)?,
            source: Source::Total(Arc::new(f)),
        })
    }

    pub fn system(&self) -> &ShiftSystem {
        &self.sys
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn window_points(&self) -> Vec<f64> {
        self.window.clone().map(|n| self.sys.point(n)).collect()
    }

    pub fn evaluate(&self, t: f64) -> Result<V> {
        self.evaluate_index(self.sys.index(t)?)
    }

    pub(crate) fn evaluate_index(&self, n: i64) -> Result<V> {
        let (values, rule) = match &self.source {
            Source::Total(f) => return Ok(f(self.sys.point(n))),
            Source::Window { values, rule } => (values, *rule),
        };
        if self.window.contains(&n) {
            return Ok(values[(n - self.window.start) as usize].clone());
        }
        let out = || Error::OutOfDomain {
            op: "window reduction",
            s: self.period,
            t: self.sys.point(n),
        };
        if rule == Extension::Finite {
            return Err(out());
        }
        let (hat, k) = self.sys.canonical_index(self.period_index, n).ok_or_else(out)?;
        let base = &values[(hat - self.window.start) as usize];
        if rule == Extension::Periodic {
            return Ok(base.clone());
        }
        // f(δ₊ᵀ(t)) = f(t) / δ₊^{ΔT}(t), applied k times from the window.
        let mut factor = 1.0;
        let mut cur = hat;
        if k > 0 {
            for _ in 0..k {
                factor /= shift_derivative_index(&self.sys, Direction::Forward, self.period_index, cur).ok_or_else(out)?;
                cur = self.sys.plus_index(self.period_index, cur).ok_or_else(out)?;
            }
        } else {
            for _ in 0..-k {
                cur = self.sys.minus_index(self.period_index, cur).ok_or_else(out)?;
                factor *= shift_derivative_index(&self.sys, Direction::Forward, self.period_index, cur).ok_or_else(out)?;
            }
        }
        Ok(base.scale(factor))
    }
}

fn shift_derivative_index(sys: &ShiftSystem, dir: Direction, period: i64, t: i64) -> Option<f64> {
    let a = sys.shift_index(dir, period, t)?;
    let b = sys.shift_index(dir, period, t + 1)?;
    let mu = sys.scale().point(t + 1)? - sys.point(t);
    Some((sys.point(b) - sys.point(a)) / mu)
}

/// `δ₊^{ΔT}(t) = (δ₊ᵀ(σ(t)) − δ₊ᵀ(t)) / μ(t)`.
pub fn delta_shift_derivative(sys: &ShiftSystem, period: f64, t: f64) -> Result<f64> {
    delta_shift_derivative_dir(sys, Direction::Forward, period, t)
}

/// Delta derivative of `t ↦ δ±(T, t)`.
pub fn delta_shift_derivative_dir(sys: &ShiftSystem, dir: Direction, period: f64, t: f64) -> Result<f64> {
    let p = sys.index(period)?;
    let n = sys.index(t)?;
    shift_derivative_index(sys, dir, p, n).ok_or(Error::OutOfDomain {
        op: dir.name(),
        s: period,
        t,
    })
}

/// `(f(σ(t)) − f(t)) / μ(t)`.
pub fn delta_derivative<V: GridValue>(f: &GridFunction<V>, t: f64) -> Result<V> {
    let n = f.sys.index(t)?;
    let mu = f.sys.scale().mu_index(n).ok_or(Error::NoSuccessor(t))?;
    let a = f.evaluate_index(n)?;
    let b = f.evaluate_index(n + 1)?;
    Ok(b.sub(&a).scale(1.0 / mu))
}

/// `Σ_{τ ∈ [a, b)} f(τ)·μ(τ)`.
pub fn delta_integral<V: GridValue>(f: &GridFunction<V>, a: f64, b: f64) -> Result<V> {
    let ia = f.sys.index(a)?;
    let ib = f.sys.index(b)?;
    if ib < ia {
        return Err(Error::OutOfDomain { op: "delta integral", s: a, t: b });
    }
    let first = f.evaluate_index(ia)?;
    let mut acc = first.zero_like();
    for n in ia..ib {
        let mu = f.sys.scale().mu_index(n).ok_or(Error::NoSuccessor(f.sys.point(n)))?;
        let v = if n == ia { first.clone() } else { f.evaluate_index(n)? };
        acc = acc.add(&v.scale(mu));
    }
    Ok(acc)
}

/// Window points and two periods on either side, where defined.
pub fn period_sample(sys: &ShiftSystem, period: f64) -> Result<Vec<f64>> {
    let p = sys.index(period)?;
    let w = sys.window_indices(period)?;
    let lo = sys.iterate_index(p, w.start, -2).unwrap_or(w.start);
    let hi = sys.iterate_index(p, w.start, 3).unwrap_or(w.end);
    Ok((lo..hi).filter_map(|n| sys.scale().point(n)).collect())
}

/// Whether `f(δ±ᵀ(t)) = f(t)` within `tol` at every sampled `t`.
pub fn is_periodic_in_shifts<V: GridValue>(f: &GridFunction<V>, period: f64, sample: &[f64], tol: f64) -> bool {
    check_shift_identity(f, period, sample, tol, false)
}

/// Whether `f(δ±ᵀ(t))·δ±^{ΔT}(t) = f(t)` within `tol` at every sampled `t`.
pub fn is_delta_periodic_in_shifts<V: GridValue>(
    f: &GridFunction<V>,
    period: f64,
    sample: &[f64],
    tol: f64,
) -> bool {
    check_shift_identity(f, period, sample, tol, true)
}

fn check_shift_identity<V: GridValue>(f: &GridFunction<V>, period: f64, sample: &[f64], tol: f64, weighted: bool) -> bool {
    let sys = &f.sys;
    let Ok(p) = sys.index(period) else { return false };
    sample.iter().all(|&t| {
        let Ok(n) = sys.index(t) else { return false };
        let Ok(ft) = f.evaluate_index(n) else { return false };
        [Direction::Forward, Direction::Backward].into_iter().all(|d| {
            let Some(m) = sys.shift_index(d, p, n) else { return false };
            let Ok(fm) = f.evaluate_index(m) else { return false };
            let w = if weighted {
                match shift_derivative_index(sys, d, p, n) {
                    Some(w) => w,
                    None => return false,
                }
            } else {
                1.0
            };
            fm.scale(w).sub(&ft).norm() <= tol
        })
    })
}
