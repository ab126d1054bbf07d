//! Non-Hermitian Anderson (Hatano–Nelson) model on a ring: transfer
//! matrices, the trace `Δ_n`, band structure, complex spectra and their flow
//! in the non-Hermiticity parameter, and checkers for the localization
//! bounds that govern when eigenvalues stay real.
//!
//! Kernels are generic over the real scalar (`f64` or [`DoubleDouble`]);
//! the aliases below fix the two supported precisions.

pub mod bands;
pub mod discriminant;
pub mod error;
pub mod numerics;
pub mod potential;
pub mod spectrum;
pub mod transfer;
pub mod verify;

pub use error::{Error, Result};
pub use numerics::{DoubleDouble, Precision, Scalar, ScaledReal};
pub use potential::{DistributionSpec, PotentialSample};

pub type BandStructure64 = bands::BandStructure<f64>;
pub type BandStructureDD = bands::BandStructure<DoubleDouble>;
pub type SpectrumResult64 = spectrum::SpectrumResult<f64>;
pub type SpectrumResultDD = spectrum::SpectrumResult<DoubleDouble>;
pub type SpectrumFlow64 = spectrum::SpectrumFlow<f64>;
pub type SpectrumFlowDD = spectrum::SpectrumFlow<DoubleDouble>;
pub type ScaledMatrix64 = transfer::ScaledMatrix2<f64>;
pub type ScaledMatrixDD = transfer::ScaledMatrix2<DoubleDouble>;
