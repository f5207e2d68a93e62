//! Special functions, quadrature rules and regularized dense linear algebra
//! shared by the rest of the crate.
//!
//! Everything here is a pure function of its inputs.

mod bessel;
mod legendre;
mod linalg;
mod quadrature;
mod roots;

pub use bessel::{
    bessel_j, bessel_j_prime, bessel_j_seq, bessel_y, bessel_y_prime, bessel_y_seq,
    cylinder_j01_y01, hankel1, hankel1_prime, spherical_hankel1, spherical_hankel1_prime,
    spherical_j, spherical_j_prime, spherical_j_seq, spherical_y, spherical_y_seq,
};
pub use legendre::{associated_legendre, legendre_p_seq, LegendreTable};
pub use linalg::{
    fix_phase, min_generalized_eigenpair, min_generalized_eigenpair_truncated, tikhonov_solve,
    GeneralizedEigenpair, TikhonovSvd,
};
pub use quadrature::{
    circle_rule, fibonacci_sphere, gauss_legendre, sphere_rule, GridStructure, QuadratureRule,
};
pub use roots::{derivative_zero, BesselFamily};

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Dense complex matrix used for far-field data and all boundary operators.
pub type ComplexMatrix = DMatrix<Complex64>;

/// Largest modulus among complex entries (0 for an empty input).
pub fn max_abs<'a, I: IntoIterator<Item = &'a Complex64>>(values: I) -> f64 {
    values.into_iter().map(|c| c.norm()).fold(0.0, f64::max)
}
