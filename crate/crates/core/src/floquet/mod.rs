//! Transition matrices, the Θ construction, the Floquet exponent `R` and
//! the spectral periodicity criteria.

mod decompose;
pub mod matfun;
mod theta;
mod transition;

pub use decompose::{
    exp_r, floquet_decompose, monodromy, noncritical_check, periodic_solution_exists_homogeneous,
    periodic_solution_exists_homogeneous_tol, solve_r, spectral_report, FloquetData, FloquetExponent,
    SpectralReport, SPECTRAL_TOL,
};
pub use theta::{g_of, m_of, theta, theta_normalizer, theta_parts, ThetaParts};
pub(crate) use transition::transition_table;
pub use transition::{peano_baker, transition_matrix, MatrixFunction};
