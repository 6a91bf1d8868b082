use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Relative tolerance used when matching a real value to a scale point.
pub const POINT_REL_TOL: f64 = 1e-12;

/// Custom scales also match a value lying within this fraction of the
/// distance to the nearest neighbouring point.
pub const CUSTOM_GAP_TOL: f64 = 1e-6;

pub(crate) fn same_point(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= POINT_REL_TOL * a.abs().max(b.abs())
}

/// Index-to-point map supplied by the caller for scales outside the catalog.
///
/// The map must be strictly increasing on `[lower, upper]` (either bound may
/// be open-ended). Inversion is done by bracketing search, so the map only
/// needs to be finite on its index range.
#[derive(Clone)]
pub struct CustomScale {
    name: String,
    point: Arc<dyn Fn(i64) -> f64 + Send + Sync>,
    lower: Option<i64>,
    upper: Option<i64>,
}

impl CustomScale {
    pub fn new(
        name: impl Into<String>,
        lower: Option<i64>,
        upper: Option<i64>,
        point: impl Fn(i64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        CustomScale {
            name: name.into(),
            point: Arc::new(point),
            lower,
            upper,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    fn index_of(&self, t: f64) -> Option<i64> {
        if !t.is_finite() {
            return None;
        }
        let p = |n: i64| (self.point)(n);
        // Bracket t between two indices, then bisect.
        let mut lo = self.lower.unwrap_or(i64::MIN / 4).max(-(1 << 40));
        let mut hi = self.upper.unwrap_or(i64::MAX / 4).min(1 << 40);
        let start = 0i64.clamp(lo, hi);
        let mut step = 1i64;
        if p(start) <= t {
            let mut a = start;
            loop {
                let b = (a + step).min(hi);
                if p(b) >= t || b == hi {
                    lo = a;
                    hi = b;
                    break;
                }
                a = b;
                step = step.saturating_mul(2);
            }
        } else {
            let mut b = start;
            loop {
                let a = (b - step).max(lo);
                if p(a) <= t || a == lo {
                    lo = a;
                    hi = b;
                    break;
                }
                b = a;
                step = step.saturating_mul(2);
            }
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if p(mid) <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        [lo, hi].into_iter().find(|&n| {
            let v = p(n);
            if same_point(v, t) {
                return true;
            }
            // Near an accumulation point the caller's maps cannot hit a
            // point to 1e-12 relative; accept anything much closer to it
            // than to its neighbours.
            let gap = [n - 1, n + 1]
                .into_iter()
                .filter(|&m| self.lower.is_none_or(|l| m >= l) && self.upper.is_none_or(|u| m <= u))
                .map(|m| (p(m) - v).abs())
                .fold(f64::INFINITY, f64::min);
            (v - t).abs() <= CUSTOM_GAP_TOL * gap
        })
    }
}

impl fmt::Debug for CustomScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomScale")
            .field("name", &self.name)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .finish()
    }
}

/// An isolated time scale whose points are addressed by an integer index.
///
/// Only the isolated part `T*` is represented; accumulation points such as
/// the `0` of `q^Z ∪ {0}` are not addressable.
#[derive(Clone, Debug)]
pub enum IsolatedTimeScale {
    /// `{offset + n·step : n ∈ Z}`.
    IntegerLattice { step: f64, offset: f64 },
    /// `{q^n : n ∈ Z}`, q > 1.
    Geometric { q: f64 },
    /// `{√n : n ∈ N}`.
    SquareRoot,
    /// `{±n² : n ∈ Z}`, indexed by the signed root.
    SignedSquares,
    /// `{b^n : n ∈ Z}`, b > 1. Same point set as `Geometric`, kept separate
    /// because problem files name it differently.
    Power { base: f64 },
    Custom(CustomScale),
}

impl IsolatedTimeScale {
    pub fn integers() -> Self {
        IsolatedTimeScale::IntegerLattice {
            step: 1.0,
            offset: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            IsolatedTimeScale::IntegerLattice { step, offset } => {
                if !(step > 0.0 && step.is_finite() && offset.is_finite()) {
                    return Err(Error::invariant(
                        "time scale",
                        format!("lattice needs a finite step > 0, got step={step}, offset={offset}"),
                    ));
                }
            }
            IsolatedTimeScale::Geometric { q: r } | IsolatedTimeScale::Power { base: r } => {
                if !(r > 1.0 && r.is_finite()) {
                    return Err(Error::invariant(
                        "time scale",
                        format!("geometric ratio must exceed 1, got {r}"),
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn kind_name(&self) -> &str {
        match self {
            IsolatedTimeScale::IntegerLattice { .. } => "integer",
            IsolatedTimeScale::Geometric { .. } => "geometric",
            IsolatedTimeScale::SquareRoot => "sqrt",
            IsolatedTimeScale::SignedSquares => "signed-squares",
            IsolatedTimeScale::Power { .. } => "power",
            IsolatedTimeScale::Custom(c) => c.name(),
        }
    }

    /// Inclusive index bounds; `None` means unbounded on that side.
    pub fn index_bounds(&self) -> (Option<i64>, Option<i64>) {
        match self {
            IsolatedTimeScale::SquareRoot => (Some(0), None),
            IsolatedTimeScale::Custom(c) => (c.lower, c.upper),
            _ => (None, None),
        }
    }

    pub fn has_index(&self, n: i64) -> bool {
        let (lo, hi) = self.index_bounds();
        lo.is_none_or(|l| n >= l) && hi.is_none_or(|h| n <= h)
    }

    /// Point with index `n`, or `None` outside the index range.
    pub fn point(&self, n: i64) -> Option<f64> {
        if !self.has_index(n) {
            return None;
        }
        Some(self.point_unchecked(n))
    }

    fn point_unchecked(&self, n: i64) -> f64 {
        match self {
            IsolatedTimeScale::IntegerLattice { step, offset } => offset + n as f64 * step,
            IsolatedTimeScale::Geometric { q: r } | IsolatedTimeScale::Power { base: r } => {
                int_power(*r, n)
            }
            IsolatedTimeScale::SquareRoot => (n as f64).sqrt(),
            IsolatedTimeScale::SignedSquares => {
                let m = n as f64;
                m.signum() * m * m
            }
            IsolatedTimeScale::Custom(c) => (c.point)(n),
        }
    }

    /// Index of `t`, or `None` when `t` is not a point of the scale.
    pub fn index_of(&self, t: f64) -> Option<i64> {
        if !t.is_finite() {
            return None;
        }
        let guess = match self {
            IsolatedTimeScale::IntegerLattice { step, offset } => ((t - offset) / step).round(),
            IsolatedTimeScale::Geometric { q: r } | IsolatedTimeScale::Power { base: r } => {
                if t <= 0.0 {
                    return None;
                }
                (t.ln() / r.ln()).round()
            }
            IsolatedTimeScale::SquareRoot => {
                if t < 0.0 {
                    return None;
                }
                (t * t).round()
            }
            IsolatedTimeScale::SignedSquares => t.signum() * t.abs().sqrt().round(),
            IsolatedTimeScale::Custom(c) => return c.index_of(t),
        };
        if guess.abs() > 9.0e15 {
            return None;
        }
        let n = guess as i64;
        [n, n - 1, n + 1]
            .into_iter()
            .find(|&k| self.point(k).is_some_and(|p| same_point(p, t)))
    }

    pub fn contains(&self, t: f64) -> bool {
        self.index_of(t).is_some()
    }

    pub(crate) fn require_index(&self, t: f64) -> Result<i64> {
        self.index_of(t).ok_or(Error::NotInScale(t))
    }

    /// Forward jump: the least scale point strictly greater than `t`.
    pub fn sigma(&self, t: f64) -> Result<f64> {
        let n = self.require_index(t)?;
        self.point(n + 1).ok_or(Error::NoSuccessor(t))
    }

    /// Backward jump, `None` at the scale minimum.
    pub fn rho(&self, t: f64) -> Result<Option<f64>> {
        let n = self.require_index(t)?;
        Ok(self.point(n - 1))
    }

    /// Graininess `σ(t) − t`.
    pub fn mu(&self, t: f64) -> Result<f64> {
        Ok(self.sigma(t)? - t)
    }

    pub(crate) fn mu_index(&self, n: i64) -> Option<f64> {
        Some(self.point(n + 1)? - self.point(n)?)
    }

    /// Scale points in the half-open interval `[a, b)`.
    pub fn points_in(&self, a: f64, b: f64) -> Result<Vec<f64>> {
        let ia = self.require_index(a)?;
        let ib = self.require_index(b)?;
        Ok((ia..ib).filter_map(|n| self.point(n)).collect())
    }
}

/// `r^n` for integer `n`, exact for dyadic powers of two.
fn int_power(r: f64, n: i64) -> f64 {
    if let Ok(k) = i32::try_from(n) {
        r.powi(k)
    } else {
        r.powf(n as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_examples() {
        let two = IsolatedTimeScale::Power { base: 2.0 };
        assert_eq!(two.sigma(2.0).unwrap(), 4.0);
        assert_eq!(IsolatedTimeScale::integers().sigma(7.0).unwrap(), 8.0);
        let root = IsolatedTimeScale::SquareRoot;
        assert_eq!(root.sigma(3f64.sqrt()).unwrap(), 2.0);
    }

    #[test]
    fn mu_examples() {
        assert_eq!(IsolatedTimeScale::Power { base: 2.0 }.mu(2.0).unwrap(), 2.0);
        assert_eq!(IsolatedTimeScale::Geometric { q: 3.0 }.mu(9.0).unwrap(), 18.0);
        for t in [-5.0, 0.0, 11.0] {
            assert_eq!(IsolatedTimeScale::integers().mu(t).unwrap(), 1.0);
        }
    }

    #[test]
    fn membership_errors() {
        let two = IsolatedTimeScale::Power { base: 2.0 };
        assert_eq!(two.sigma(3.0), Err(Error::NotInScale(3.0)));
        assert_eq!(two.sigma(0.0), Err(Error::NotInScale(0.0)));
        assert!(IsolatedTimeScale::SquareRoot.index_of(-1.0).is_none());
        let bounded = IsolatedTimeScale::Custom(CustomScale::new("finite", Some(0), Some(3), |n| n as f64));
        assert_eq!(bounded.sigma(3.0), Err(Error::NoSuccessor(3.0)));
        assert_eq!(bounded.sigma(2.0).unwrap(), 3.0);
    }

    #[test]
    fn signed_squares_indexing() {
        let s = IsolatedTimeScale::SignedSquares;
        assert_eq!(s.point(-3), Some(-9.0));
        assert_eq!(s.index_of(-9.0), Some(-3));
        assert_eq!(s.index_of(16.0), Some(4));
        assert_eq!(s.sigma(-1.0).unwrap(), 0.0);
        assert_eq!(s.index_of(2.0), None);
    }

    #[test]
    fn custom_inversion_finds_points_on_both_sides() {
        let q: f64 = 3.0;
        let t4 = CustomScale::new("t4", None, None, move |n| 1.0 / (1.0 + q.powi(-(n as i32))));
        let scale = IsolatedTimeScale::Custom(t4);
        for n in -12..=12 {
            let p = scale.point(n).unwrap();
            assert_eq!(scale.index_of(p), Some(n), "index {n}");
        }
        assert_eq!(scale.index_of(0.3), None);
    }

    #[test]
    fn rho_inverts_sigma() {
        let scales = [
            IsolatedTimeScale::integers(),
            IsolatedTimeScale::Geometric { q: 3.0 },
            IsolatedTimeScale::SquareRoot,
            IsolatedTimeScale::SignedSquares,
        ];
        for s in &scales {
            for n in 1..20 {
                let t = s.point(n).unwrap();
                let up = s.sigma(t).unwrap();
                assert_eq!(s.rho(up).unwrap(), Some(t));
                assert!(s.mu(t).unwrap() > 0.0);
            }
        }
        assert_eq!(IsolatedTimeScale::SquareRoot.rho(0.0).unwrap(), None);
    }
}
