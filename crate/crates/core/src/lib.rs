//! Oversampled Fourier phase retrieval.
//!
//! The object `x` is a real `side × side` image. Its Fourier amplitude is
//! measured on a grid oversampled by an integer factor per dimension, which
//! is the same as measuring the unitary DFT of the zero-padded, scaled
//! object `O x` (see [`grid::OversamplingMap`]).
//!
//! Solvers:
//!
//! * classical projection methods: HIO, HPR, ER and OSS,
//! * PnP-ADMM and prRED baselines,
//! * RED-ITA-F and RED-ITA-S, ADMM schemes that combine the HIO splitting
//!   with a regularization-by-denoising prior.
//!
//! [`sim`] synthesizes shot-noise measurements, [`eval`] scores
//! reconstructions modulo the trivial ambiguities and [`harness`] drives
//! reproducible experiments.

pub mod denoise;
pub mod error;
pub mod eval;
pub mod fourier;
pub mod grid;
pub mod harness;
pub mod red;
pub mod sim;
pub mod solvers;

pub use error::{Error, Result};
pub use num::Complex64;

mod num {
    pub use rustfft::num_complex::Complex64;
}
