//! Reconstruction of impenetrable sound-hard obstacles from multi-frequency
//! far-field data.
//!
//! The pipeline has two phases:
//!
//! 1. Interior Neumann eigenvalues are read off the spikes of the linear
//!    sampling indicator `k ↦ ‖g_{z,k}‖`, and for each detected eigenvalue a
//!    Herglotz kernel approximating the eigenfunction is recovered from a
//!    constrained quadratic minimization ([`lsm`], [`eigenmodes`]).
//! 2. A regularized Newton iteration moves a starlike boundary until the
//!    normal derivative of the recovered resonant modes vanishes on it. The
//!    Fréchet derivative of the boundary trace is available in closed form,
//!    so no forward scattering problem is solved during the iteration
//!    ([`newton`]).
//!
//! Synthetic data come from a 2D Nyström boundary-integral solver and from
//! analytic disc/ball series ([`forward`], [`dataset`]).

pub mod dataset;
pub mod eigenmodes;
mod error;
pub mod forward;
pub mod geometry;
pub mod lsm;
pub mod newton;
pub mod numerics;

pub use error::{Error, Result};
pub use num_complex::Complex64;
