//! Finite-section laboratory for multilinear Schur multipliers of divided
//! differences.
//!
//! The crate builds, at finite matrix scale, the constructive objects behind
//! Schatten-class estimates of divided-difference Schur multipliers:
//!
//! * [`funcs`] — scalar functions with analytic derivatives, confluent divided
//!   differences of arbitrary order, and stars-and-bars composition
//!   enumeration;
//! * [`schatten`] — Schatten p-(quasi)norms, Hölder combinations, and block
//!   pinching on finite kernel matrices;
//! * [`schur`] — discrete multilinear Schur multipliers, smooth cutoff
//!   symbols, the inductive symbol decomposition, and a certified
//!   lower-bound optimizer for multiplier norms;
//! * [`torus`] — Fourier series on the circle, monomial divided-difference
//!   expansions, U-twisted multiple operator integrals, and Cayley transfer;
//! * [`wavelet`] — Daubechies wavelets via the cascade algorithm, wavelet
//!   coefficients and layers, homogeneous Besov norms, and the
//!   polynomial-corrected decomposition;
//! * [`runner`] / [`config`] / [`report`] — a deterministic experiment
//!   runner with JSON/CSV report emission.
//!
//! Everything works on uniform grids over `[0, L)`; all reported multiplier
//! norms are certified lower bounds indexed by `(N, range)`. The Fourier
//! convention is `ghat(xi) = ∫ g(t) e^{-2πi t xi} dt` throughout.

pub mod config;
pub mod error;
pub mod funcs;
pub mod report;
pub mod runner;
pub mod schatten;
pub mod schur;
pub mod torus;
pub mod util;
pub mod wavelet;

pub use error::{Error, Result};
