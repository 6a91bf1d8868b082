use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::deltacalc::{mat_norm, GridFunction};
use crate::error::{Error, Result};
use crate::timescale::{Direction, ShiftSystem};

type MatrixEval = Arc<dyn Fn(f64) -> Result<DMatrix<f64>> + Send + Sync>;

/// A real matrix-valued function on a shift system.
#[derive(Clone)]
pub struct MatrixFunction {
    sys: ShiftSystem,
    dim: usize,
    eval: MatrixEval,
    delta_period: Option<f64>,
}

impl fmt::Debug for MatrixFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixFunction")
            .field("dim", &self.dim)
            .field("delta_period", &self.delta_period)
            .finish()
    }
}

impl MatrixFunction {
    pub fn new(sys: &ShiftSystem, dim: usize, f: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        Self::fallible(sys, dim, move |t| Ok(f(t)))
    }

    /// Evaluator that may fail, e.g. when it comes from a parsed expression.
    pub fn fallible(
        sys: &ShiftSystem,
        dim: usize,
        f: impl Fn(f64) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    ) -> Self {
        MatrixFunction {
            sys: sys.clone(),
            dim,
            eval: Arc::new(f),
            delta_period: None,
        }
    }

    pub fn from_grid(f: GridFunction<DMatrix<f64>>, dim: usize) -> Self {
        let sys = f.system().clone();
        Self::fallible(&sys, dim, move |t| f.evaluate(t))
    }

    pub fn constant(sys: &ShiftSystem, a: DMatrix<f64>) -> Self {
        let dim = a.nrows();
        Self::new(sys, dim, move |_| a.clone())
    }

    /// Declares the function Δ-periodic in shifts with period `T`.
    pub fn with_delta_period(mut self, period: f64) -> Self {
        self.delta_period = Some(period);
        self
    }

    pub fn system(&self) -> &ShiftSystem {
        &self.sys
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delta_period(&self) -> Option<f64> {
        self.delta_period
    }

    pub fn eval(&self, t: f64) -> Result<DMatrix<f64>> {
        let a = (self.eval)(t)?;
        if a.nrows() != self.dim || a.ncols() != self.dim {
            return Err(Error::invariant(
                "matrix dimension",
                format!("expected {0}x{0}, got {1}x{2} at t = {t}", self.dim, a.nrows(), a.ncols()),
            ));
        }
        Ok(a)
    }

    pub(crate) fn eval_index(&self, n: i64) -> Result<DMatrix<f64>> {
        self.eval(self.sys.point(n))
    }

    /// Largest violation of `A(δ±ᵀ(t))·δ±^{ΔT}(t) = A(t)` over the window,
    /// relative to `max(1, |A(t)|)`.
    pub fn delta_periodicity_defect(&self, period: f64) -> Result<f64> {
        let sys = &self.sys;
        let p = sys.index(period)?;
        let mut worst: f64 = 0.0;
        for n in sys.window_indices(period)? {
            let a = self.eval_index(n)?;
            for d in [Direction::Forward, Direction::Backward] {
                let out = || Error::OutOfDomain { op: d.name(), s: period, t: sys.point(n) };
                let m = sys.shift_index(d, p, n).ok_or_else(out)?;
                let m1 = sys.shift_index(d, p, n + 1).ok_or_else(out)?;
                let mu = sys.scale().mu_index(n).ok_or(Error::NoSuccessor(sys.point(n)))?;
                let w = (sys.point(m1) - sys.point(m)) / mu;
                let b = self.eval_index(m)? * w;
                worst = worst.max(mat_norm(&(b - &a)) / mat_norm(&a).max(1.0));
            }
        }
        Ok(worst)
    }
}

/// `I + μ(τ)A(τ)` for the point with index `n`, with a regressivity check.
pub(crate) fn step_factor(a: &MatrixFunction, n: i64) -> Result<DMatrix<f64>> {
    let sys = a.system();
    let tau = sys.point(n);
    let mu = sys.scale().mu_index(n).ok_or(Error::NoSuccessor(tau))?;
    let f = DMatrix::identity(a.dim(), a.dim()) + a.eval_index(n)? * mu;
    if is_singular(&f) {
        return Err(Error::NotRegressive(tau));
    }
    Ok(f)
}

/// Singular to working precision: `|det|` is negligible against the
/// Hadamard bound (product of row lengths).
pub(crate) fn is_singular(m: &DMatrix<f64>) -> bool {
    let bound: f64 = m.row_iter().map(|r| r.norm()).product();
    !(m.determinant().abs() > 1e-13 * bound)
}

/// Ordered product `Π (I + μ(τ)A(τ))` over `[t0, t)`, later factors on the
/// left. For `t < t0` the inverse of the forward product is returned.
pub fn transition_matrix(a: &MatrixFunction, t: f64, t0: f64) -> Result<DMatrix<f64>> {
    let sys = a.system();
    let it = sys.index(t)?;
    let i0 = sys.index(t0)?;
    if it >= i0 {
        return transition_indices(a, i0, it);
    }
    let fwd = transition_indices(a, it, i0)?;
    fwd.try_inverse().ok_or(Error::NotRegressive(t))
}

pub(crate) fn transition_indices(a: &MatrixFunction, from: i64, to: i64) -> Result<DMatrix<f64>> {
    let mut phi = DMatrix::identity(a.dim(), a.dim());
    for n in from..to {
        phi = step_factor(a, n)? * phi;
    }
    Ok(phi)
}

/// The transition matrix `Φ(t_k, t_from)` for every `k` in `from..=to`.
pub(crate) fn transition_table(a: &MatrixFunction, from: i64, to: i64) -> Result<Vec<DMatrix<f64>>> {
    let mut out = Vec::with_capacity((to - from + 1).max(1) as usize);
    let mut phi = DMatrix::identity(a.dim(), a.dim());
    out.push(phi.clone());
    for n in from..to {
        phi = step_factor(a, n)? * phi;
        out.push(phi.clone());
    }
    Ok(out)
}

/// The series `I + ∫A + ∫A∫A + …` truncated after `order` iterated
/// integrals, each integral an exact delta sum.
pub fn peano_baker(a: &MatrixFunction, t: f64, t0: f64, order: usize) -> Result<DMatrix<f64>> {
    let sys = a.system();
    let it = sys.index(t)?;
    let i0 = sys.index(t0)?;
    if it < i0 {
        return Err(Error::OutOfDomain { op: "peano-baker", s: t0, t });
    }
    let steps = (it - i0) as usize;
    let n = a.dim();
    let weighted: Vec<DMatrix<f64>> = (i0..it)
        .map(|k| {
            let mu = sys.scale().mu_index(k).ok_or(Error::NoSuccessor(sys.point(k)))?;
            Ok(a.eval_index(k)? * mu)
        })
        .collect::<Result<_>>()?;
    // term[j] holds the current iterated integral evaluated at the j-th point.
    let mut term = vec![DMatrix::identity(n, n); steps + 1];
    let mut total = DMatrix::identity(n, n);
    for _ in 0..order {
        let mut next = Vec::with_capacity(steps + 1);
        let mut acc = DMatrix::zeros(n, n);
        next.push(acc.clone());
        for j in 0..steps {
            acc += &weighted[j] * &term[j];
            next.push(acc.clone());
        }
        term = next;
        total += &term[steps];
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deltacalc::Extension;

    fn example_a() -> MatrixFunction {
        let sys = ShiftSystem::power(2.0).unwrap();
        MatrixFunction::new(&sys, 2, |t| DMatrix::identity(2, 2) / t).with_delta_period(2.0)
    }

    #[test]
    fn monodromy_of_reciprocal_system() {
        let a = example_a();
        let end = a.system().shift_plus(2.0, 1.0).unwrap();
        assert_eq!(transition_matrix(&a, end, 1.0).unwrap(), DMatrix::identity(2, 2) * 2.0);
        assert_eq!(transition_matrix(&a, 1.0, 1.0).unwrap(), DMatrix::identity(2, 2));
        assert_eq!(transition_matrix(&a, 16.0, 1.0).unwrap(), DMatrix::identity(2, 2) * 16.0);
        assert_eq!(transition_matrix(&a, 0.25, 1.0).unwrap(), DMatrix::identity(2, 2) * 0.25);
        assert!(a.delta_periodicity_defect(2.0).unwrap() < 1e-15);
    }

    #[test]
    fn constant_matrix_power() {
        let z = ShiftSystem::integers(0);
        let c = DMatrix::from_row_slice(2, 2, &[0.1, -0.3, 0.2, 0.05]);
        let a = MatrixFunction::constant(&z, c.clone());
        let step = DMatrix::identity(2, 2) + c;
        let mut want = DMatrix::identity(2, 2);
        for k in 0..7 {
            assert_eq!(transition_matrix(&a, k as f64, 0.0).unwrap(), want);
            want = &step * want;
        }
    }

    #[test]
    fn cocycle_and_backward() {
        let g = ShiftSystem::geometric(3.0).unwrap();
        let a = MatrixFunction::new(&g, 2, |t| DMatrix::from_row_slice(2, 2, &[0.2 / t, 1.0 / t, -0.4 / t, 0.1 / t]));
        let (t0, u, t) = (1.0, 9.0, 243.0);
        let full = transition_matrix(&a, t, t0).unwrap();
        let split = transition_matrix(&a, t, u).unwrap() * transition_matrix(&a, u, t0).unwrap();
        assert!(mat_norm(&(&full - split)) <= 1e-14 * mat_norm(&full));
        // Dyadic data keeps every product exact, so regrouping changes nothing.
        let z = ShiftSystem::integers(0);
        let d = MatrixFunction::new(&z, 2, |t| {
            DMatrix::from_row_slice(2, 2, &[0.25, if t as i64 % 2 == 0 { 0.5 } else { -0.125 }, 0.0, -0.5])
        });
        let whole = transition_matrix(&d, 9.0, 0.0).unwrap();
        let parts = transition_matrix(&d, 9.0, 4.0).unwrap() * transition_matrix(&d, 4.0, 0.0).unwrap();
        assert_eq!(whole, parts);
        let back = transition_matrix(&a, t0, t).unwrap();
        assert!(mat_norm(&(back * &full - DMatrix::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn not_regressive_names_point() {
        let z = ShiftSystem::integers(0);
        let a = MatrixFunction::new(&z, 1, |t| DMatrix::from_element(1, 1, if t == 2.0 { -1.0 } else { 0.5 }));
        assert_eq!(transition_matrix(&a, 5.0, 0.0), Err(Error::NotRegressive(2.0)));
    }

    #[test]
    fn peano_baker_examples() {
        let a = example_a();
        assert_eq!(peano_baker(&a, 4.0, 1.0, 0).unwrap(), DMatrix::identity(2, 2));
        assert_eq!(peano_baker(&a, 2.0, 1.0, 1).unwrap(), transition_matrix(&a, 2.0, 1.0).unwrap());
        let pb = peano_baker(&a, 4.0, 1.0, 2).unwrap();
        assert!(mat_norm(&(pb - transition_matrix(&a, 4.0, 1.0).unwrap())) < 1e-14);
    }

    #[test]
    fn from_grid_delta_periodic() {
        let sys = ShiftSystem::power(2.0).unwrap();
        let vals = vec![DMatrix::from_element(1, 1, 0.5), DMatrix::from_element(1, 1, -0.25)];
        let g = GridFunction::from_window(&sys, 4.0, vals, Extension::DeltaPeriodic).unwrap();
        let a = MatrixFunction::from_grid(g, 1).with_delta_period(4.0);
        assert!(a.delta_periodicity_defect(4.0).unwrap() < 1e-15);
    }
}
