pub mod cli;
pub mod deltacalc;
pub mod error;
pub mod floquet;
pub mod solver;
pub mod timescale;

pub use error::{Error, Result};
