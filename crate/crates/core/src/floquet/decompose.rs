use nalgebra::DMatrix;
use serde::Serialize;

use super::matfun::{self, cnorm, to_complex, CMatrix, C64};
use super::theta::{theta_normalizer, theta_parts_index};
use super::transition::{transition_indices, MatrixFunction};
use crate::error::{Error, Result};
use crate::timescale::ShiftSystem;

/// Default tolerance for deciding that an eigenvalue equals 1.
pub const SPECTRAL_TOL: f64 = 1e-8;

/// The matrix `R` built from a monodromy matrix: values are functions of
/// `M`, so all of them commute.
#[derive(Clone, Debug)]
pub struct FloquetExponent {
    sys: ShiftSystem,
    period: f64,
    period_index: i64,
    log_m: CMatrix,
    normalizer: f64,
}

impl FloquetExponent {
    pub fn new(m: &DMatrix<f64>, sys: &ShiftSystem, period: f64) -> Result<Self> {
        let log_m = matfun::logm(&to_complex(m))?;
        let normalizer = theta_normalizer(sys, period)?;
        if !(normalizer > 0.0) {
            return Err(Error::invariant(
                "function period",
                format!("theta does not grow over one period of {period}"),
            ));
        }
        Ok(FloquetExponent {
            sys: sys.clone(),
            period,
            period_index: sys.index(period)?,
            log_m,
            normalizer,
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn log_monodromy(&self) -> &CMatrix {
        &self.log_m
    }

    /// `Θ(δ₊ᵀ(t0))`, the divisor of the exponent.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// `[Θ(σ(t)) − Θ(t)] / Θ(δ₊ᵀ(t0))`.
    pub fn exponent(&self, t: f64) -> Result<f64> {
        self.exponent_index(self.sys.index(t)?)
    }

    fn exponent_index(&self, n: i64) -> Result<f64> {
        let a = theta_parts_index(&self.sys, self.period_index, n)?.theta;
        let b = theta_parts_index(&self.sys, self.period_index, n + 1)?.theta;
        Ok((b - a) / self.normalizer)
    }

    /// `R(t) = (M^{x(t)} − I) / μ(t)`.
    pub fn at(&self, t: f64) -> Result<CMatrix> {
        self.at_index(self.sys.index(t)?)
    }

    pub(crate) fn at_index(&self, n: i64) -> Result<CMatrix> {
        let x = self.exponent_index(n)?;
        let mu = self.sys.scale().mu_index(n).ok_or(Error::NoSuccessor(self.sys.point(n)))?;
        let dim = self.log_m.nrows();
        Ok((matfun::power_from_log(&self.log_m, x) - CMatrix::identity(dim, dim)) / C64::new(mu, 0.0))
    }
}

/// `R(t)` for the monodromy matrix `M`; see [`FloquetExponent`].
pub fn solve_r(m: &DMatrix<f64>, sys: &ShiftSystem, period: f64, t: f64) -> Result<CMatrix> {
    FloquetExponent::new(m, sys, period)?.at(t)
}

/// Ordered product `Π (I + μ(τ)R(τ))` over `[t0, t)`; inverse for `t < t0`.
pub fn exp_r(sys: &ShiftSystem, r: impl Fn(f64) -> Result<CMatrix>, t: f64, t0: f64) -> Result<CMatrix> {
    let it = sys.index(t)?;
    let i0 = sys.index(t0)?;
    let (lo, hi) = if it >= i0 { (i0, it) } else { (it, i0) };
    let mut acc: Option<CMatrix> = None;
    for n in lo..hi {
        let tau = sys.point(n);
        let rv = r(tau)?;
        let dim = rv.nrows();
        let mu = sys.scale().mu_index(n).ok_or(Error::NoSuccessor(tau))?;
        let f = CMatrix::identity(dim, dim) + rv * C64::new(mu, 0.0);
        if f.determinant().norm() == 0.0 {
            return Err(Error::NotRegressive(tau));
        }
        acc = Some(match acc {
            Some(p) => f * p,
            None => f,
        });
    }
    let Some(prod) = acc else {
        // Empty product; the dimension comes from R at t0.
        let dim = r(t0)?.nrows();
        return Ok(CMatrix::identity(dim, dim));
    };
    if it >= i0 {
        Ok(prod)
    } else {
        prod.try_inverse().ok_or(Error::NotRegressive(t))
    }
}

/// Monodromy matrix, exponent `R` and periodic factor `L` over one window.
#[derive(Clone, Debug)]
pub struct FloquetData {
    pub period: f64,
    pub t0: f64,
    pub monodromy: DMatrix<f64>,
    pub spectrum: Vec<C64>,
    pub exponent: FloquetExponent,
    pub window: Vec<f64>,
    /// `R(t)` at the window points.
    pub r: Vec<CMatrix>,
    /// `e_R(t, t0)` at the window points.
    pub e_r: Vec<CMatrix>,
    /// `L(t) = Φ(t, t0)·e_R(t, t0)⁻¹` at the window points.
    pub l: Vec<CMatrix>,
    /// `‖e_R(δ₊ᵀ(t0), t0) − M‖`.
    pub monodromy_residual: f64,
    a: MatrixFunction,
}

impl FloquetData {
    /// `e_R(t, t0)` for any `t` on the scale.
    pub fn e_r_at(&self, t: f64) -> Result<CMatrix> {
        exp_r(self.a.system(), |tau| self.exponent.at(tau), t, self.t0)
    }

    /// `L(t)` for any `t ≥ t0`; also valid before `t0` when the backward
    /// products exist.
    pub fn l_at(&self, t: f64) -> Result<CMatrix> {
        let phi = to_complex(&super::transition::transition_matrix(&self.a, t, self.t0)?);
        let e = self.e_r_at(t)?;
        let inv = e.try_inverse().ok_or(Error::NotRegressive(t))?;
        Ok(phi * inv)
    }
}

/// Builds the Floquet factorization `Φ(t, t0) = L(t)·e_R(t, t0)`.
pub fn floquet_decompose(a: &MatrixFunction, period: f64) -> Result<FloquetData> {
    let sys = a.system();
    let window = sys.window_indices(period)?;
    let phis = super::transition::transition_table(a, window.start, window.end)?;
    let monodromy = phis.last().cloned().expect("table has at least one entry");
    let spectrum = matfun::eigenvalues(&monodromy)?;
    let exponent = FloquetExponent::new(&monodromy, sys, period)?;
    let dim = a.dim();
    let mut r = Vec::new();
    let mut e_r = Vec::new();
    let mut l = Vec::new();
    let mut acc = CMatrix::identity(dim, dim);
    for (k, n) in window.clone().enumerate() {
        let rv = exponent.at_index(n)?;
        let inv = acc.clone().try_inverse().ok_or(Error::NotRegressive(sys.point(n)))?;
        l.push(to_complex(&phis[k]) * inv);
        e_r.push(acc.clone());
        let mu = sys.scale().mu_index(n).ok_or(Error::NoSuccessor(sys.point(n)))?;
        acc = (CMatrix::identity(dim, dim) + &rv * C64::new(mu, 0.0)) * acc;
        r.push(rv);
    }
    let monodromy_residual = cnorm(&(acc - to_complex(&monodromy)));
    Ok(FloquetData {
        period,
        t0: sys.t0(),
        monodromy,
        spectrum,
        exponent,
        window: window.map(|n| sys.point(n)).collect(),
        r,
        e_r,
        l,
        monodromy_residual,
        a: a.clone(),
    })
}

/// Spectrum of the monodromy matrix and the eigenvalue-1 decision.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub monodromy: Vec<Vec<f64>>,
    /// Eigenvalues as `[re, im]` pairs.
    pub spectrum: Vec<[f64; 2]>,
    pub distance_to_one: f64,
    pub tolerance: f64,
    /// Some eigenvalue lies within `tolerance` of 1.
    pub critical: bool,
}

pub fn monodromy(a: &MatrixFunction, period: f64) -> Result<DMatrix<f64>> {
    let w = a.system().window_indices(period)?;
    transition_indices(a, w.start, w.end)
}

pub fn periodic_solution_exists_homogeneous(a: &MatrixFunction, period: f64) -> Result<SpectralReport> {
    periodic_solution_exists_homogeneous_tol(a, period, SPECTRAL_TOL)
}

pub fn periodic_solution_exists_homogeneous_tol(a: &MatrixFunction, period: f64, tol: f64) -> Result<SpectralReport> {
    let m = monodromy(a, period)?;
    spectral_report(&m, tol)
}

pub fn spectral_report(m: &DMatrix<f64>, tol: f64) -> Result<SpectralReport> {
    let ev = matfun::eigenvalues(m)?;
    let distance_to_one = ev.iter().map(|l| (l - C64::new(1.0, 0.0)).norm()).fold(f64::INFINITY, f64::min);
    Ok(SpectralReport {
        monodromy: m.row_iter().map(|r| r.iter().copied().collect()).collect(),
        spectrum: ev.iter().map(|l| [l.re, l.im]).collect(),
        distance_to_one,
        tolerance: tol,
        critical: distance_to_one <= tol,
    })
}

/// True when the homogeneous system has no nonzero periodic solution.
pub fn noncritical_check(a: &MatrixFunction, period: f64) -> Result<bool> {
    Ok(!periodic_solution_exists_homogeneous(a, period)?.critical)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::transition::transition_matrix;

    fn example_a() -> MatrixFunction {
        let sys = ShiftSystem::power(2.0).unwrap();
        MatrixFunction::new(&sys, 2, |t| DMatrix::identity(2, 2) / t).with_delta_period(2.0)
    }

    #[test]
    fn r_examples() {
        let sys = ShiftSystem::power(2.0).unwrap();
        let id = DMatrix::identity(2, 2);
        let r = solve_r(&id, &sys, 2.0, 4.0).unwrap();
        assert_eq!(cnorm(&r), 0.0);
        let m = &id * 2.0;
        for t in [1.0, 2.0, 8.0] {
            let r = solve_r(&m, &sys, 2.0, t).unwrap();
            assert!(cnorm(&(r - to_complex(&id) / C64::new(t, 0.0))) < 1e-14);
        }
        let q = 3.0;
        let g = ShiftSystem::geometric(q).unwrap();
        let mm = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.0, 1.5]);
        let ex = FloquetExponent::new(&mm, &g, q).unwrap();
        for t in [1.0, 3.0, 27.0] {
            assert!((ex.exponent(t).unwrap() - 1.0).abs() < 1e-15);
            let want = to_complex(&(&mm - &id)) / C64::new((q - 1.0) * t, 0.0);
            assert!(cnorm(&(ex.at(t).unwrap() - want)) < 1e-12);
        }
    }

    #[test]
    fn exp_r_single_step_and_period() {
        let sys = ShiftSystem::power(2.0).unwrap();
        let mm = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 0.5, 2.0]);
        let ex = FloquetExponent::new(&mm, &sys, 4.0).unwrap();
        let step = exp_r(&sys, |t| ex.at(t), 2.0, 1.0).unwrap();
        let x = ex.exponent(1.0).unwrap();
        let want = matfun::powm(&to_complex(&mm), x).unwrap();
        assert!(cnorm(&(step - want)) < 1e-12);
        let full = exp_r(&sys, |t| ex.at(t), 4.0, 1.0).unwrap();
        assert!(cnorm(&(full - to_complex(&mm))) < 1e-12);
        let none = exp_r(&sys, |_| Ok(CMatrix::zeros(2, 2)), 64.0, 1.0).unwrap();
        assert_eq!(none, CMatrix::identity(2, 2));
    }

    #[test]
    fn example_decomposition() {
        let data = floquet_decompose(&example_a(), 2.0).unwrap();
        assert_eq!(data.monodromy, DMatrix::identity(2, 2) * 2.0);
        for l in &data.l {
            assert!(cnorm(&(l - CMatrix::identity(2, 2))) < 1e-14);
        }
        for t in [2.0, 4.0, 32.0] {
            assert!(cnorm(&(data.l_at(t).unwrap() - CMatrix::identity(2, 2))) < 1e-12);
        }
        assert!(data.monodromy_residual < 1e-14);
        assert!(noncritical_check(&example_a(), 2.0).unwrap());
    }

    #[test]
    fn zero_system() {
        let sys = ShiftSystem::geometric(2.0).unwrap();
        let a = MatrixFunction::constant(&sys, DMatrix::zeros(2, 2));
        let data = floquet_decompose(&a, 4.0).unwrap();
        assert_eq!(data.monodromy, DMatrix::identity(2, 2));
        assert!(data.r.iter().all(|r| cnorm(r) == 0.0));
        assert!(data.l.iter().all(|l| *l == CMatrix::identity(2, 2)));
        assert!(!noncritical_check(&a, 4.0).unwrap());
    }

    #[test]
    fn alternating_scalar_is_critical() {
        let z = ShiftSystem::integers(0);
        let a = MatrixFunction::constant(&z, DMatrix::from_element(1, 1, -2.0));
        let rep = periodic_solution_exists_homogeneous(&a, 2.0).unwrap();
        assert!(rep.critical);
        assert_eq!(rep.monodromy, vec![vec![1.0]]);
        let phi = transition_matrix(&a, 2.0, 0.0).unwrap();
        assert_eq!(phi[(0, 0)], 1.0);
    }

    #[test]
    fn decomposition_on_nonuniform_window() {
        let sys = ShiftSystem::power(2.0).unwrap();
        let a = MatrixFunction::new(&sys, 2, |t| {
            let k = (t.log2().round() as i64).rem_euclid(2);
            let base = if k == 0 {
                DMatrix::from_row_slice(2, 2, &[0.3, 0.1, -0.2, 0.4])
            } else {
                DMatrix::from_row_slice(2, 2, &[0.1, -0.3, 0.25, 0.2])
            };
            // μ(t) = t on powers of two; keep μA periodic.
            base / t
        })
        .with_delta_period(4.0);
        assert!(a.delta_periodicity_defect(4.0).unwrap() < 1e-14);
        let data = floquet_decompose(&a, 4.0).unwrap();
        for (k, &t) in data.window.iter().enumerate() {
            let phi = to_complex(&transition_matrix(&a, t, 1.0).unwrap());
            assert!(cnorm(&(phi - &data.l[k] * &data.e_r[k])) < 1e-12);
            let shifted = sys.shift_plus(4.0, t).unwrap();
            assert!(cnorm(&(data.l_at(shifted).unwrap() - &data.l[k])) < 1e-12);
        }
    }
}
