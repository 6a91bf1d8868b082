//! Periodic solutions of neutral delay systems on isolated time scales:
//! the integral operator `H = B + C`, its hypothesis checks and the Picard
//! solver.

mod conditions;
mod operators;
mod picard;
mod problem;

pub use conditions::{
    check_conditions, estimate_lipschitz, ConditionOptions, ConditionReport, LipschitzEstimate, DEFAULT_HORIZON,
    DEFAULT_LIPSCHITZ_SAMPLES, LIPSCHITZ_SAFETY,
};
pub use operators::{
    compute_r, operator_b, operator_b_plus_c, operator_c, operator_h, sup_norm_a, NormReport, RReport,
};
pub use picard::{
    solve_picard, verify_solution, PicardDiagnostics, PicardOptions, PicardOutcome, Residuals, DAMPING, RATIO_SLACK,
};
pub use problem::{
    AssumptionReport, GFn, Lipschitz, NeutralProblem, PeriodicVectorFunction, QFn, ASSUMPTION_TOL,
};
