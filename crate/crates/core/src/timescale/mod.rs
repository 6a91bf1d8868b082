//! Isolated time scales, shift operators and the axiom checker.

mod axioms;
mod scale;
mod shift;

pub use axioms::{
    default_period_sample, default_sample, sample_with_seed, verify_period, verify_shift_axioms, AxiomCheck,
    AxiomReport, PeriodReport,
};
pub use scale::{CustomScale, IsolatedTimeScale, CUSTOM_GAP_TOL, POINT_REL_TOL};
pub use shift::{Direction, ShiftFn, ShiftSystem};
