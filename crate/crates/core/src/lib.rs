//! Random-matrix laboratory for eigenvector decorrelation.
//!
//! Samples GOE and generalized Wigner matrices, evolves them under the
//! stationary matrix Ornstein-Uhlenbeck process, its Poisson-driven block
//! variant and block resampling, and measures how fast eigenvectors forget
//! their starting point. Alongside the experiments sit exact eigenvalue
//! derivative formulas and Monte Carlo checks of the variance identities that
//! tie eigenvalue fluctuations to eigenvector overlaps.

pub mod cli;
pub mod dynamics;
pub mod eigen;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod identities;
pub mod matrix;
pub mod montecarlo;
pub mod oracle;
pub mod parallel;
pub mod partition;
pub mod paths;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use eigen::{eigh, eigvalsh, operator_norm, Spectrum};
pub use ensemble::{sample_generalized_wigner, sample_goe, Ensemble, EntryLaw, VarianceProfile};
pub use error::{Error, Result};
pub use matrix::{Position, SymmetricMatrix};
pub use partition::{band_partition, entries_partition, sample_union, AdmissiblePartition, Block, UnionSet};
pub use rng::SeedStream;
pub use stats::MCEstimate;

/// Crate version and the git revision it was built from.
pub fn version_string() -> String {
    format!("eigenchaos {} (build {})", env!("CARGO_PKG_VERSION"), env!("EIGENCHAOS_BUILD_HASH"))
}
