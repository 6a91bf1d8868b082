//! Complex matrix functions: principal logarithm, exponential and real
//! powers, via a complex Schur factorization.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Eigenvalues smaller than this (relative to the matrix norm) count as zero.
const SINGULAR_REL: f64 = 1e-14;
/// Relative imaginary part below which an eigenvalue counts as real.
const REAL_AXIS_REL: f64 = 1e-13;
/// Eigenvector matrices with a condition number above this are not used.
const MAX_EIGVEC_COND: f64 = 1e8;

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| C64::new(v, 0.0))
}

/// Max row sum of moduli.
pub fn cnorm(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest imaginary part in modulus.
pub fn max_imag(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.im.abs()))
}

pub fn real_part(m: &CMatrix) -> DMatrix<f64> {
    m.map(|v| v.re)
}

/// Complex Schur factorization `M = Q·T·Qᴴ` with `T` upper triangular.
#[derive(Clone, Debug)]
pub struct ComplexSchur {
    pub q: CMatrix,
    pub t: CMatrix,
}

impl ComplexSchur {
    pub fn new(m: &CMatrix) -> Result<Self> {
        let n = m.nrows();
        let schur = m
            .clone()
            .try_schur(f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Evaluation("Schur factorization did not converge".into()))?;
        let (q, mut t) = schur.unpack();
        // The factorization is triangular up to rounding below the diagonal.
        for j in 0..n {
            for i in j + 1..n {
                t[(i, j)] = C64::new(0.0, 0.0);
            }
        }
        Ok(ComplexSchur { q, t })
    }

    pub fn eigenvalues(&self) -> Vec<C64> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }

    fn reassemble(&self, f_t: &CMatrix) -> CMatrix {
        &self.q * f_t * self.q.adjoint()
    }
}

/// Eigenvalues of a real matrix, sorted by real then imaginary part.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<C64>> {
    let mut ev = ComplexSchur::new(&to_complex(m))?.eigenvalues();
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(ev)
}

fn check_log_spectrum(ev: &[C64], scale: f64) -> Result<()> {
    for &l in ev {
        if l.norm() <= SINGULAR_REL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::SingularMonodromy);
        }
        if l.re < 0.0 && l.im.abs() <= REAL_AXIS_REL * l.norm() {
            return Err(Error::LogBranch { re: l.re, im: l.im });
        }
    }
    Ok(())
}

/// Principal square root of an upper triangular matrix.
fn sqrt_triangular(t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    let mut u = CMatrix::zeros(n, n);
    for j in 0..n {
        u[(j, j)] = t[(j, j)].sqrt();
        for i in (0..j).rev() {
            let mut s = t[(i, j)];
            for k in i + 1..j {
                s -= u[(i, k)] * u[(k, j)];
            }
            u[(i, j)] = s / (u[(i, i)] + u[(j, j)]);
        }
    }
    u
}

/// `log(I + X)` by its Taylor series, for `‖X‖` small.
fn log1p_series(x: &CMatrix) -> CMatrix {
    let n = x.nrows();
    let mut acc = CMatrix::zeros(n, n);
    let mut pow = x.clone();
    for k in 1..200 {
        let term = &pow / C64::new(k as f64, 0.0);
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        acc += term.clone() * C64::new(sign, 0.0);
        if cnorm(&term) <= 1e-18 * cnorm(&acc).max(1e-300) {
            break;
        }
        pow = &pow * x;
    }
    acc
}

/// Principal logarithm of an upper triangular matrix by inverse scaling
/// and squaring.
fn log_triangular(t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    let id = CMatrix::identity(n, n);
    let mut r = t.clone();
    let mut k = 0;
    while cnorm(&(&r - &id)) > 0.1 && k < 64 {
        r = sqrt_triangular(&r);
        k += 1;
    }
    log1p_series(&(&r - &id)) * C64::new(2f64.powi(k), 0.0)
}

/// Principal logarithm via the Schur form.
pub fn logm_schur(m: &CMatrix) -> Result<CMatrix> {
    let s = ComplexSchur::new(m)?;
    check_log_spectrum(&s.eigenvalues(), cnorm(m))?;
    Ok(s.reassemble(&log_triangular(&s.t)))
}

/// Eigenvectors of an upper triangular matrix with distinct diagonal, by
/// back substitution. `None` when two eigenvalues (nearly) coincide.
fn triangular_eigenvectors(t: &CMatrix) -> Option<CMatrix> {
    let n = t.nrows();
    let scale = cnorm(t).max(f64::MIN_POSITIVE);
    let mut v = CMatrix::zeros(n, n);
    for j in 0..n {
        let l = t[(j, j)];
        v[(j, j)] = C64::new(1.0, 0.0);
        for i in (0..j).rev() {
            let mut s = C64::new(0.0, 0.0);
            for k in i + 1..=j {
                s += t[(i, k)] * v[(k, j)];
            }
            let d = t[(i, i)] - l;
            if d.norm() <= 1e-10 * scale {
                if s.norm() <= 1e-12 * scale {
                    continue;
                }
                return None;
            }
            v[(i, j)] = -s / d;
        }
        let nrm = v.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.column_mut(j).unscale_mut(nrm);
    }
    Some(v)
}

/// Diagonalization `M = V·diag(λ)·V⁻¹`, when `V` is well conditioned.
pub struct EigenDecomposition {
    pub values: Vec<C64>,
    pub vectors: CMatrix,
    pub inverse: CMatrix,
}

impl EigenDecomposition {
    pub fn new(m: &CMatrix) -> Result<Option<Self>> {
        let s = ComplexSchur::new(m)?;
        let Some(vt) = triangular_eigenvectors(&s.t) else {
            return Ok(None);
        };
        let vectors = &s.q * vt;
        let Some(inverse) = vectors.clone().try_inverse() else {
            return Ok(None);
        };
        if cnorm(&vectors) * cnorm(&inverse) > MAX_EIGVEC_COND {
            return Ok(None);
        }
        Ok(Some(EigenDecomposition {
            values: s.eigenvalues(),
            vectors,
            inverse,
        }))
    }

    pub fn apply(&self, f: impl Fn(C64) -> C64) -> CMatrix {
        let n = self.values.len();
        let mut d = CMatrix::zeros(n, n);
        for (i, &l) in self.values.iter().enumerate() {
            d[(i, i)] = f(l);
        }
        &self.vectors * d * &self.inverse
    }
}

/// Principal logarithm via diagonalization; `Ok(None)` if the matrix is
/// not (well-conditioned) diagonalizable.
pub fn logm_eigen(m: &CMatrix) -> Result<Option<CMatrix>> {
    let Some(e) = EigenDecomposition::new(m)? else {
        return Ok(None);
    };
    check_log_spectrum(&e.values, cnorm(m))?;
    Ok(Some(e.apply(|l| l.ln())))
}

/// Principal logarithm: eigendecomposition when available, Schur otherwise.
pub fn logm(m: &CMatrix) -> Result<CMatrix> {
    match logm_eigen(m)? {
        Some(l) => Ok(l),
        None => logm_schur(m),
    }
}

/// Matrix exponential by scaling and squaring with a Taylor kernel.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let nrm = cnorm(a);
    let s = if nrm > 0.5 { (nrm / 0.5).log2().ceil() as i32 } else { 0 };
    let x = a / C64::new(2f64.powi(s), 0.0);
    let mut acc = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for k in 1..60 {
        term = &term * &x / C64::new(k as f64, 0.0);
        acc += &term;
        if cnorm(&term) <= 1e-18 * cnorm(&acc) {
            break;
        }
    }
    for _ in 0..s {
        acc = &acc * &acc;
    }
    acc
}

/// `exp(x·log M)`, given the principal logarithm of `M`.
pub fn power_from_log(log_m: &CMatrix, x: f64) -> CMatrix {
    expm(&(log_m * C64::new(x, 0.0)))
}

/// Real power `M^x` through the principal logarithm.
pub fn powm(m: &CMatrix, x: f64) -> Result<CMatrix> {
    Ok(power_from_log(&logm(m)?, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_positive_spectrum(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| rng.gen_range(0.2..5.0)));
        loop {
            let v = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            if let Some(vi) = v.clone().try_inverse() {
                if v.norm() * vi.norm() < 50.0 {
                    return &v * d * vi;
                }
            }
        }
    }

    #[test]
    fn schur_is_triangular_and_reconstructs() {
        let m = to_complex(&DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 2.0, 1.0, 0.0, 0.5, 0.3, 0.2, 1.0]));
        let s = ComplexSchur::new(&m).unwrap();
        assert!(cnorm(&(s.reassemble(&s.t) - &m)) < 1e-13);
    }

    #[test]
    fn log_exp_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=4 {
            for _ in 0..10 {
                let m = to_complex(&random_positive_spectrum(&mut rng, n));
                let l = logm(&m).unwrap();
                assert!(cnorm(&(expm(&l) - &m)) <= 1e-10 * cnorm(&m));
            }
        }
    }

    #[test]
    fn schur_and_eigen_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=3 {
            for _ in 0..10 {
                let m = to_complex(&random_positive_spectrum(&mut rng, n));
                let a = logm_schur(&m).unwrap();
                let b = logm_eigen(&m).unwrap().expect("diagonalizable");
                assert!(cnorm(&(&a - &b)) < 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn defective_matrix_uses_schur() {
        let m = to_complex(&DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]));
        assert!(logm_eigen(&m).unwrap().is_none());
        let l = logm(&m).unwrap();
        // log [[a,1],[0,a]] = [[ln a, 1/a],[0, ln a]]
        assert!((l[(0, 0)].re - 2f64.ln()).abs() < 1e-14);
        assert!((l[(0, 1)].re - 0.5).abs() < 1e-14);
        assert!(l[(1, 0)].norm() < 1e-14);
    }

    #[test]
    fn rotation_has_complex_log() {
        let th: f64 = 0.7;
        let m = to_complex(&DMatrix::from_row_slice(2, 2, &[th.cos(), -th.sin(), th.sin(), th.cos()]));
        let l = logm(&m).unwrap();
        assert!((l[(1, 0)].re - th).abs() < 1e-13 && max_imag(&l) < 1e-13);
    }

    #[test]
    fn branch_and_singular_errors() {
        let neg = to_complex(&DMatrix::from_diagonal_element(2, 2, -1.0));
        assert!(matches!(logm(&neg), Err(Error::LogBranch { .. })));
        let sing = to_complex(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]));
        assert_eq!(logm(&sing), Err(Error::SingularMonodromy));
    }

    #[test]
    fn fractional_powers_compose() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = to_complex(&random_positive_spectrum(&mut rng, 3));
        let h = powm(&m, 0.5).unwrap();
        assert!(cnorm(&(&h * &h - &m)) < 1e-10 * cnorm(&m));
        assert!(cnorm(&(powm(&m, 1.0).unwrap() - &m)) < 1e-11 * cnorm(&m));
        let id = CMatrix::identity(3, 3);
        assert!(cnorm(&(powm(&id, 0.3).unwrap() - &id)) == 0.0);
    }
}
