use nalgebra::{Vector2, Vector3};

use super::{Curve2D, Surface3D};
use crate::{Error, Result};

const DEGENERATE: f64 = 1e-12;

/// Point, tangent, outward unit normal and line element of a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFrame2D {
    pub z: Vector2<f64>,
    pub z_phi: Vector2<f64>,
    pub normal: Vector2<f64>,
    pub jacobian: f64,
}

/// Point, coordinate tangents, outward unit normal and area element of a
/// surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFrame3D {
    pub z: Vector3<f64>,
    pub z_theta: Vector3<f64>,
    pub z_phi: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub jacobian: f64,
}

/// `ν = z_φ^⊥ / |z_φ|` with `(a, b)^⊥ = (b, −a)`.
pub fn frame_2d<C: Curve2D + ?Sized>(curve: &C, phi: f64) -> Result<BoundaryFrame2D> {
    let z_phi = curve.d1(phi);
    let jacobian = z_phi.norm();
    if !(jacobian >= DEGENERATE) {
        return Err(Error::DegenerateFrame(format!("|z_phi| = {jacobian:e} at phi = {phi}")));
    }
    Ok(BoundaryFrame2D {
        z: curve.point(phi),
        z_phi,
        normal: Vector2::new(z_phi.y, -z_phi.x) / jacobian,
        jacobian,
    })
}

pub fn frame_3d<S: Surface3D + ?Sized>(surface: &S, theta: f64, phi: f64) -> Result<BoundaryFrame3D> {
    let z_theta = surface.d_theta(theta, phi);
    let z_phi = surface.d_phi(theta, phi);
    let cross = z_theta.cross(&z_phi);
    let jacobian = cross.norm();
    if !(jacobian >= DEGENERATE) {
        return Err(Error::DegenerateFrame(format!(
            "surface jacobian {jacobian:e} at (theta, phi) = ({theta}, {phi})"
        )));
    }
    Ok(BoundaryFrame3D {
        z: surface.point(theta, phi),
        z_theta,
        z_phi,
        normal: cross / jacobian,
        jacobian,
    })
}
