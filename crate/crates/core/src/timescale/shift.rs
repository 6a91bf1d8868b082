use std::fmt;
use std::sync::Arc;

use super::scale::{CustomScale, IsolatedTimeScale};
use crate::error::{Error, Result};

/// A caller-supplied shift map `(s, t) ↦ δ(s, t)`; `None` marks `(s, t)`
/// as outside the domain.
pub type ShiftFn = Arc<dyn Fn(f64, f64) -> Option<f64> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn opposite(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }

    pub(crate) fn name(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        }
    }
}

#[derive(Clone)]
enum ShiftMaps {
    /// `idx δ±(s, t) = idx t ± (idx s − idx t0)`. Every catalog scale's
    /// closed-form shifts reduce to this on indices.
    IndexAdditive,
    Custom { plus: ShiftFn, minus: ShiftFn },
}

/// Forward/backward shift operators with an initial point on an isolated
/// scale, optionally declared periodic in shifts with period `P`.
#[derive(Clone)]
pub struct ShiftSystem {
    scale: IsolatedTimeScale,
    t0: f64,
    t0_index: i64,
    period: Option<f64>,
    maps: ShiftMaps,
}

impl fmt::Debug for ShiftSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ShiftSystem")
            .field("scale", &self.scale)
            .field("t0", &self.t0)
            .field("period", &self.period)
            .field(
                "maps",
                &match self.maps {
                    ShiftMaps::IndexAdditive => "index-additive",
                    ShiftMaps::Custom { .. } => "custom",
                },
            )
            .finish()
    }
}

impl ShiftSystem {
    /// Shift system with the catalog (index-additive) shifts of `scale`.
    pub fn new(scale: IsolatedTimeScale, t0: f64, period: Option<f64>) -> Result<Self> {
        Self::build(scale, t0, period, ShiftMaps::IndexAdditive)
    }

    /// Shift system with caller-supplied maps.
    pub fn with_maps(
        scale: IsolatedTimeScale,
        t0: f64,
        period: Option<f64>,
        plus: ShiftFn,
        minus: ShiftFn,
    ) -> Result<Self> {
        Self::build(scale, t0, period, ShiftMaps::Custom { plus, minus })
    }

    fn build(scale: IsolatedTimeScale, t0: f64, period: Option<f64>, maps: ShiftMaps) -> Result<Self> {
        scale.validate()?;
        let t0_index = scale.require_index(t0)?;
        let t0 = scale.point(t0_index).unwrap_or(t0);
        let period = match period {
            Some(p) => {
                let n = scale.require_index(p)?;
                if n <= t0_index {
                    return Err(Error::invariant(
                        "scale period",
                        format!("period {p} must lie strictly after t0 = {t0}"),
                    ));
                }
                scale.point(n)
            }
            None => None,
        };
        Ok(ShiftSystem {
            scale,
            t0,
            t0_index,
            period,
            maps,
        })
    }

    /// `Z` with initial point `t0` and period `t0 + 1`.
    pub fn integers(t0: i64) -> Self {
        Self::new(IsolatedTimeScale::integers(), t0 as f64, Some(t0 as f64 + 1.0))
            .expect("integer lattice is valid")
    }

    /// `q^Z` with `t0 = 1` and period `q`.
    pub fn geometric(q: f64) -> Result<Self> {
        Self::new(IsolatedTimeScale::Geometric { q }, 1.0, Some(q))
    }

    /// `{b^n}` with `t0 = 1` and period `b`.
    pub fn power(base: f64) -> Result<Self> {
        Self::new(IsolatedTimeScale::Power { base }, 1.0, Some(base))
    }

    /// `N^{1/2}` with `t0 = 0`; not periodic in shifts.
    pub fn square_root() -> Self {
        Self::new(IsolatedTimeScale::SquareRoot, 0.0, None).expect("sqrt lattice is valid")
    }

    /// `{±n²}` with `t0 = 0` and period 1.
    pub fn signed_squares() -> Self {
        Self::new(IsolatedTimeScale::SignedSquares, 0.0, Some(1.0)).expect("signed squares are valid")
    }

    /// The bounded scale `{q^n/(1+q^n)}` with its logit shifts, `t0 = 1/2`
    /// and period `q/(1+q)`. Built as a custom scale with closed-form maps.
    pub fn logistic(q: f64) -> Result<Self> {
        if !(q > 1.0 && q.is_finite()) {
            return Err(Error::invariant("time scale", format!("logistic scale needs q > 1, got {q}")));
        }
        let ln_q = q.ln();
        let scale = IsolatedTimeScale::Custom(CustomScale::new("logistic", None, None, move |n| {
            logistic(n as f64 * ln_q)
        }));
        let logit = |x: f64| (x / (1.0 - x)).ln();
        let unit = |x: f64| x > 0.0 && x < 1.0;
        let plus: ShiftFn = Arc::new(move |s, t| {
            (unit(s) && unit(t)).then(|| logistic(logit(t) + logit(s)))
        });
        let minus: ShiftFn = Arc::new(move |s, t| {
            (unit(s) && unit(t)).then(|| logistic(logit(t) - logit(s)))
        });
        Self::with_maps(scale, 0.5, Some(q / (1.0 + q)), plus, minus)
    }

    pub fn scale(&self) -> &IsolatedTimeScale {
        &self.scale
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t0_index(&self) -> i64 {
        self.t0_index
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn is_index_additive(&self) -> bool {
        matches!(self.maps, ShiftMaps::IndexAdditive)
    }

    /// Shift on indices; `None` when `(s, t)` is outside the domain.
    pub(crate) fn shift_index(&self, dir: Direction, s: i64, t: i64) -> Option<i64> {
        if s < self.t0_index || !self.scale.has_index(s) || !self.scale.has_index(t) {
            return None;
        }
        match &self.maps {
            ShiftMaps::IndexAdditive => {
                let off = s - self.t0_index;
                let n = match dir {
                    Direction::Forward => t.checked_add(off)?,
                    Direction::Backward => t.checked_sub(off)?,
                };
                self.scale.has_index(n).then_some(n)
            }
            ShiftMaps::Custom { plus, minus } => {
                let sv = self.scale.point(s)?;
                let tv = self.scale.point(t)?;
                let f = match dir {
                    Direction::Forward => plus,
                    Direction::Backward => minus,
                };
                self.scale.index_of(f(sv, tv)?)
            }
        }
    }

    pub(crate) fn plus_index(&self, s: i64, t: i64) -> Option<i64> {
        self.shift_index(Direction::Forward, s, t)
    }

    pub(crate) fn minus_index(&self, s: i64, t: i64) -> Option<i64> {
        self.shift_index(Direction::Backward, s, t)
    }

    pub(crate) fn point(&self, n: i64) -> f64 {
        self.scale.point(n).expect("index inside scale range")
    }

    pub(crate) fn index(&self, t: f64) -> Result<i64> {
        self.scale.require_index(t)
    }

    pub fn shift(&self, dir: Direction, s: f64, t: f64) -> Result<f64> {
        let out = Error::OutOfDomain { op: dir.name(), s, t };
        let (Some(si), Some(ti)) = (self.scale.index_of(s), self.scale.index_of(t)) else {
            return Err(out);
        };
        self.shift_index(dir, si, ti).map(|n| self.point(n)).ok_or(out)
    }

    /// `δ₊(s, t)`.
    pub fn shift_plus(&self, s: f64, t: f64) -> Result<f64> {
        self.shift(Direction::Forward, s, t)
    }

    /// `δ₋(s, t)`.
    pub fn shift_minus(&self, s: f64, t: f64) -> Result<f64> {
        self.shift(Direction::Backward, s, t)
    }

    pub fn sigma(&self, t: f64) -> Result<f64> {
        self.scale.sigma(t)
    }

    pub fn mu(&self, t: f64) -> Result<f64> {
        self.scale.mu(t)
    }

    /// Applies `δ₊(T, ·)` `k` times (`k ≥ 0`) or `δ₋(T, ·)` `|k|` times.
    pub fn iterate_shift(&self, period: f64, t: f64, k: i64) -> Result<f64> {
        let pi = self.index(period)?;
        let mut ti = self.index(t)?;
        let dir = if k >= 0 { Direction::Forward } else { Direction::Backward };
        for _ in 0..k.unsigned_abs() {
            ti = self
                .shift_index(dir, pi, ti)
                .ok_or(Error::OutOfDomain { op: dir.name(), s: period, t: self.point(ti) })?;
        }
        Ok(self.point(ti))
    }

    pub(crate) fn iterate_index(&self, period: i64, t: i64, k: i64) -> Option<i64> {
        let dir = if k >= 0 { Direction::Forward } else { Direction::Backward };
        (0..k.unsigned_abs()).try_fold(t, |acc, _| self.shift_index(dir, period, acc))
    }

    /// Reduces `t` into the fundamental window `[t0, δ₊(T, t0))`.
    ///
    /// Returns `(t̂, k)` with `t = δ₊^(k)(T, t̂)`.
    pub fn canonicalize(&self, period: f64, t: f64) -> Result<(f64, i64)> {
        let pi = self.index(period)?;
        let ti = self.index(t)?;
        let (n, k) = self.canonical_index(pi, ti).ok_or(Error::OutOfDomain {
            op: "window reduction",
            s: period,
            t,
        })?;
        Ok((self.point(n), k))
    }

    pub(crate) fn canonical_index(&self, period: i64, t: i64) -> Option<(i64, i64)> {
        let start = self.t0_index;
        let end = self.plus_index(period, start)?;
        if end <= start {
            return None;
        }
        if self.is_index_additive() {
            let width = end - start;
            let k = (t - start).div_euclid(width);
            return Some((t - k * width, k));
        }
        const MAX_WINDINGS: i64 = 1 << 20;
        let (mut n, mut k) = (t, 0i64);
        while n >= end {
            n = self.minus_index(period, n)?;
            k += 1;
            if k > MAX_WINDINGS {
                return None;
            }
        }
        while n < start {
            n = self.plus_index(period, n)?;
            k -= 1;
            if -k > MAX_WINDINGS {
                return None;
            }
        }
        Some((n, k))
    }

    /// Points of the window `[t0, δ₊(T, t0))`.
    pub fn window(&self, period: f64) -> Result<Vec<f64>> {
        Ok(self.window_indices(period)?.map(|n| self.point(n)).collect())
    }

    pub(crate) fn window_indices(&self, period: f64) -> Result<std::ops::Range<i64>> {
        let pi = self.index(period)?;
        if pi <= self.t0_index {
            return Err(Error::invariant(
                "function period",
                format!("period {period} must lie strictly after t0 = {}", self.t0),
            ));
        }
        let end = self.plus_index(pi, self.t0_index).ok_or(Error::OutOfDomain {
            op: "forward",
            s: period,
            t: self.t0,
        })?;
        Ok(self.t0_index..end)
    }

    /// The shift value from the closed-form tables, evaluated in floating
    /// point. Used to cross-check the exact index arithmetic; `None` for
    /// custom scales or when the formula is undefined.
    pub fn closed_form_shift(&self, dir: Direction, s: f64, t: f64) -> Option<f64> {
        let sign = match dir {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        };
        let t0 = self.t0;
        match self.scale {
            IsolatedTimeScale::IntegerLattice { .. } => Some(t + sign * (s - t0)),
            IsolatedTimeScale::Geometric { .. } | IsolatedTimeScale::Power { .. } => {
                Some(t * (s / t0).powf(sign))
            }
            IsolatedTimeScale::SquareRoot => {
                let sq = t * t + sign * (s * s - t0 * t0);
                (sq >= -1e-9).then(|| sq.max(0.0).sqrt())
            }
            IsolatedTimeScale::SignedSquares if t0 == 0.0 => {
                let rs = s.sqrt();
                Some(if t > 0.0 {
                    let r = t.sqrt() + sign * rs;
                    r.signum() * r * r
                } else if t == 0.0 {
                    sign * s
                } else {
                    let r = (-t).sqrt() - sign * rs;
                    -r.signum() * r * r
                })
            }
            _ => None,
        }
    }
}

pub(crate) fn logistic(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (1.0 + e)
    }
}
