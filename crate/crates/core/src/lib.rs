//! Random noble means substitutions over the two-letter alphabet `{a, b}`.
//!
//! The deterministic rules `a -> a^i b a^(m-i)`, `b -> a` (one rule per
//! branch `0 <= i <= m`) share the substitution matrix `[[m, 1], [1, 0]]`
//! whose leading eigenvalue is the noble mean `lambda_m = (m + sqrt(m^2+4))/2`.
//! The random variant picks a branch per letter, independently, with choosing
//! probabilities `p_0, ..., p_m`.
//!
//! The crate covers, in order of the module list below:
//!
//! * exact arithmetic in `Z[lambda_m]` and the conjugation (star) map
//!   ([`algebra`]),
//! * deterministic and random substitution engines plus exact/legal word
//!   enumeration ([`words`]),
//! * topological entropy of the random hull, by closed series and by direct
//!   counting ([`entropy`]),
//! * induced substitutions on legal `ell`-words and Perron-Frobenius word
//!   frequencies ([`induced`]),
//! * geometric realisation as point sets, cut-and-project windows and model
//!   sets ([`geometry`]),
//! * the diffraction measure: pure-point amplitudes, moment recursions, the
//!   absolutely continuous density `phi`, and Monte Carlo cross-validation
//!   ([`diffraction`]).
//!
//! The `rnms` binary exposes all of it behind reproducible, file-based
//! subcommands; see [`cli`].

pub mod algebra;
pub mod cli;
pub mod diffraction;
pub mod entropy;
pub mod geometry;
pub mod induced;
pub mod words;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("branch index {branch} out of range for m = {m}")]
    BranchOutOfRange { m: u32, branch: u32 },

    #[error("invalid probability vector: {0}")]
    InvalidProbVector(String),

    #[error("enumeration would exceed cap of {cap} items")]
    CapExceeded { cap: usize },

    #[error("word `{0}` is not legal")]
    IllegalWord(String),

    #[error("seed {seed} is not a legal two-letter seed for branch i = {branch}")]
    IllegalSeed { branch: u32, seed: &'static str },

    #[error("power iteration did not converge within {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("phase-precision fault: the two routes for Psi_{n} disagree by {disagreement:.3e} at k = {k}")]
    PhaseFault { n: u32, k: f64, disagreement: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
