//! Moment-generating-function solution of Wright-Fisher random drift for
//! two and `K + 1` alleles, together with the finite-population
//! master-equation and Monte Carlo oracles used to check it.
//!
//! The numerical core is generic over [`Scalar`]; the aliases below fix the
//! three precisions used in practice.

pub mod error;
pub mod linalg;
pub mod master;
pub mod montecarlo;
pub mod multi_index;
pub mod scalar;
pub mod spectral2;
pub mod spectral_k;

pub use error::{Error, Result};
pub use multi_index::{graded_enumerate, MultiIndex, SimplexGrid};
pub use scalar::{BigFloat, Rational, Scalar};

/// High-precision scalar used for large truncation orders. Adequate for
/// triangular solves up to order ≈ 900.
pub type Hp = BigFloat<2048>;

/// Largest truncation order supported by [`Hp`].
pub const HP_MAX_ORDER: usize = 900;

pub type EigenTable2F64 = spectral2::EigenTable2<f64>;
pub type EigenTable2Hp = spectral2::EigenTable2<Hp>;
pub type EigenTable2Exact = spectral2::EigenTable2<Rational>;
pub type SpectralSolution2F64 = spectral2::SpectralSolution2<f64>;
pub type SpectralSolution2Hp = spectral2::SpectralSolution2<Hp>;
pub type SpectralSolution2Exact = spectral2::SpectralSolution2<Rational>;

pub type EigenTableKF64 = spectral_k::EigenTableK<f64>;
pub type EigenTableKExact = spectral_k::EigenTableK<Rational>;
pub type SpectralSolutionKF64 = spectral_k::SpectralSolutionK<f64>;
pub type SpectralSolutionKExact = spectral_k::SpectralSolutionK<Rational>;
