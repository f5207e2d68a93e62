//! Boundary representations: closed-form benchmark curves and surfaces,
//! starlike radial shapes with trigonometric / spherical-harmonic radius
//! functions, boundary frames (normals, Jacobians) and the radial
//! perturbation basis driven by the Newton iteration.

mod benchmark;
mod fit;
mod frame;
mod radial;
mod serialize;

pub use benchmark::{make_benchmark_shape, Benchmark, BenchmarkCurve, BenchmarkSurface};
pub use fit::{fit_radial, fit_radial_3d, hausdorff_distance, hausdorff_distance_3d, RadialFit};
pub use frame::{frame_2d, frame_3d, BoundaryFrame2D, BoundaryFrame3D};
pub use radial::{
    perturbation_basis, perturbation_basis_3d, spherical_basis_values, Perturbation,
    Perturbation3D, PerturbationValue2D, PerturbationValue3D, RadialShape2D, SphericalShape3D,
    STARLIKE_SAMPLES,
};
pub(crate) use radial::sh_label;
pub use serialize::ShapeDocument;

use nalgebra::{Vector2, Vector3};

/// A smooth closed curve `z(t)`, `t ∈ [0, 2π)`, traversed counterclockwise.
pub trait Curve2D: Send + Sync {
    fn point(&self, t: f64) -> Vector2<f64>;
    fn d1(&self, t: f64) -> Vector2<f64>;
    fn d2(&self, t: f64) -> Vector2<f64>;
}

/// A closed surface `z(θ, φ)` with `θ ∈ [0, π]`, `φ ∈ [0, 2π)`, oriented so
/// that `z_θ × z_φ` points outward.
pub trait Surface3D: Send + Sync {
    fn point(&self, theta: f64, phi: f64) -> Vector3<f64>;
    fn d_theta(&self, theta: f64, phi: f64) -> Vector3<f64>;
    fn d_phi(&self, theta: f64, phi: f64) -> Vector3<f64>;
}

/// Unit radial direction `(cos φ, sin φ)` and its derivative.
pub(crate) fn radial2(phi: f64) -> (Vector2<f64>, Vector2<f64>) {
    let (s, c) = phi.sin_cos();
    (Vector2::new(c, s), Vector2::new(-s, c))
}

/// Unit radial direction `x̂(θ, φ)` and its θ- and φ-derivatives.
pub(crate) fn radial3(theta: f64, phi: f64) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    (
        Vector3::new(st * cp, st * sp, ct),
        Vector3::new(ct * cp, ct * sp, -st),
        Vector3::new(-st * sp, st * cp, 0.0),
    )
}
