//! Numerical laboratory for four-dimensional curvature algebra, integral
//! conformal invariants and the normalized Ricci flow on symmetric metrics
//! of the 4-sphere.
//!
//! The crate is organised bottom-up:
//!
//! * [`algebra`]: pointwise curvature algebra in an orthonormal frame
//!   (Kulkarni–Nomizu product, Weyl/trace-free Ricci/scalar split, the
//!   self-dual/anti-self-dual Weyl blocks, σ_k of the Schouten tensor).
//! * [`frame`]: curvature of the diagonal cohomogeneity-one ansatz
//!   `φ²dx² + A₁²σ₁² + A₂²σ₂² + A₃²σ₃²` from its radial jets.
//! * [`ansatz`]: squashed and conformal profiles, radial derivatives,
//!   quadrature over S⁴, profile text format.
//! * [`radial`]: radial derivatives (spectral or 4th-order), quadrature.
//! * [`oracle`]: slow coordinate finite-difference curvature oracle.
//! * [`flow`]: normalized and unnormalized Ricci flow of profiles.
//! * [`functionals`]: integral invariants, bounds and monitors.

#![allow(clippy::needless_range_loop)]

pub mod algebra;
pub mod ansatz;
pub mod error;
pub mod flow;
pub mod frame;
pub mod functionals;
pub mod oracle;
pub mod radial;

pub use error::{Error, Result};
