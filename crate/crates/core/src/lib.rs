//! Joint pilot and precoder design for spatially correlated MIMO channels.
//!
//! Every utility here depends on the pilot Gram `P` and transmit covariance
//! `Q` only through the effective SNR `S`. The crate exposes the marginal
//! problems (precoder for fixed pilots, pilots for a fixed precoder), the
//! Pareto border of achievable SNR profiles, and alternating joint solvers
//! with and without pooling of pilot and data energy.

pub mod channel;
pub mod experiment;
pub mod hermitian;
pub mod joint;
pub mod oracle;
pub mod pareto;
pub mod pilot;
pub mod precoder;
pub mod instances;
mod solver;
pub mod utility;

pub use channel::{AllocationPair, ChannelCovariance, EffectiveSnr, GramMatrix, SystemConfig};
pub use hermitian::{CMat, EigenProfile, HermitianMatrix, C64};
pub use utility::{Utility, UtilityKind, UtilitySpec, UtilityValue};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("singular input: {0}")]
    Singular(String),
    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("non-differentiable point: {0}")]
    NonDifferentiable(String),
    #[error("denominator {0:e} outside the invertible region")]
    Denominator(f64),
    #[error("unsupported: {0}")]
    Unsupported(String),
}
