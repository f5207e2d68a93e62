use std::f64::consts::PI;

use nalgebra::{Vector2, Vector3};

use super::{radial2, radial3, Curve2D, Surface3D};
use crate::numerics::LegendreTable;
use crate::{Error, Result};

/// Number of equispaced samples used by the 2D starlike validity check.
pub const STARLIKE_SAMPLES: usize = 512;

/// Starlike curve `z(φ) = c + r(φ)(cos φ, sin φ)` with
/// `r(φ) = a0 + Σ_{j=1}^{N} (a_j cos jφ + b_j sin jφ)`.
///
/// Coefficients are stored interleaved: `[a0, a1, b1, a2, b2, …]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialShape2D {
    center: [f64; 2],
    coeffs: Vec<f64>,
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("shape coefficients"))
    }
}

impl RadialShape2D {
    pub fn new(center: [f64; 2], coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.len() % 2 == 0 {
            return Err(Error::InvalidInput(format!(
                "2D coefficient count must be 2N+1, got {}",
                coeffs.len()
            )));
        }
        check_finite(&coeffs)?;
        check_finite(&center)?;
        let shape = Self { center, coeffs };
        shape.check_starlike()?;
        Ok(shape)
    }

    /// Circle of radius `r` about `center`, represented at order `order`.
    pub fn circle(center: [f64; 2], r: f64, order: usize) -> Result<Self> {
        let mut c = vec![0.0; 2 * order + 1];
        c[0] = r;
        Self::new(center, c)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() / 2
    }

    pub fn center(&self) -> [f64; 2] {
        self.center
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// `(r, r', r'')` at `phi`.
    pub fn radius_derivatives(&self, phi: f64) -> (f64, f64, f64) {
        let (mut r, mut dr, mut ddr) = (self.coeffs[0], 0.0, 0.0);
        for j in 1..=self.order() {
            let (a, b) = (self.coeffs[2 * j - 1], self.coeffs[2 * j]);
            let jf = j as f64;
            let (s, c) = (jf * phi).sin_cos();
            r += a * c + b * s;
            dr += jf * (b * c - a * s);
            ddr -= jf * jf * (a * c + b * s);
        }
        (r, dr, ddr)
    }

    pub fn radius(&self, phi: f64) -> f64 {
        self.radius_derivatives(phi).0
    }

    fn check_starlike(&self) -> Result<()> {
        for i in 0..STARLIKE_SAMPLES {
            let phi = 2.0 * PI * i as f64 / STARLIKE_SAMPLES as f64;
            let r = self.radius(phi);
            if !(r > 0.0) {
                return Err(Error::NotStarlike(format!("r({phi:.6}) = {r:e}")));
            }
        }
        Ok(())
    }

    /// Adds `increment` to the coefficient vector.
    pub fn apply_update(&self, increment: &[f64]) -> Result<Self> {
        if increment.len() != self.coeffs.len() {
            return Err(Error::DimensionMismatch(format!(
                "increment has {} entries, shape has {}",
                increment.len(),
                self.coeffs.len()
            )));
        }
        let coeffs = self.coeffs.iter().zip(increment).map(|(a, b)| a + b).collect();
        Self::new(self.center, coeffs)
    }

    pub fn perturbation(&self, index: usize) -> Result<Perturbation> {
        Perturbation::new(self.order(), index)
    }

    /// Boundary samples at `n` equispaced parameter values.
    pub fn samples(&self, n: usize) -> Vec<Vector2<f64>> {
        (0..n).map(|i| self.point(2.0 * PI * i as f64 / n as f64)).collect()
    }
}

impl Curve2D for RadialShape2D {
    fn point(&self, phi: f64) -> Vector2<f64> {
        let (er, _) = radial2(phi);
        Vector2::new(self.center[0], self.center[1]) + self.radius(phi) * er
    }

    fn d1(&self, phi: f64) -> Vector2<f64> {
        let (er, ep) = radial2(phi);
        let (r, dr, _) = self.radius_derivatives(phi);
        dr * er + r * ep
    }

    fn d2(&self, phi: f64) -> Vector2<f64> {
        let (er, ep) = radial2(phi);
        let (r, dr, ddr) = self.radius_derivatives(phi);
        (ddr - r) * er + 2.0 * dr * ep
    }
}

/// Radial shift `h(φ) = q_j(φ)(cos φ, sin φ)` for one trigonometric basis
/// function `q_j ∈ {1, cos φ, sin φ, cos 2φ, …}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Perturbation {
    pub index: usize,
    pub order: usize,
}

/// Values of one perturbation at a parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationValue2D {
    pub h: Vector2<f64>,
    pub h_phi: Vector2<f64>,
    /// `(∂h²/∂φ, −∂h¹/∂φ)`.
    pub h_phi_perp: Vector2<f64>,
}

impl Perturbation {
    pub fn new(order: usize, index: usize) -> Result<Self> {
        if index > 2 * order {
            return Err(Error::IndexOutOfRange { index, limit: 2 * order + 1 });
        }
        Ok(Self { index, order })
    }

    /// `(q, q')` at `phi`.
    pub fn scalar(&self, phi: f64) -> (f64, f64) {
        if self.index == 0 {
            return (1.0, 0.0);
        }
        let j = ((self.index + 1) / 2) as f64;
        let (s, c) = (j * phi).sin_cos();
        if self.index % 2 == 1 {
            (c, -j * s)
        } else {
            (s, j * c)
        }
    }

    pub fn eval(&self, phi: f64) -> PerturbationValue2D {
        let (q, dq) = self.scalar(phi);
        let (er, ep) = radial2(phi);
        let h_phi = dq * er + q * ep;
        PerturbationValue2D {
            h: q * er,
            h_phi,
            h_phi_perp: Vector2::new(h_phi.y, -h_phi.x),
        }
    }
}

/// All `2N+1` perturbations of an order-`N` radial curve.
pub fn perturbation_basis(order: usize) -> Vec<Perturbation> {
    (0..=2 * order).map(|index| Perturbation { index, order }).collect()
}

/// Starlike surface `z(θ, φ) = c + r(θ, φ) x̂(θ, φ)` with
/// `r = Σ_{ℓ ≤ N} Σ_{s ≤ ℓ} (a_ℓ^s cos sφ + b_ℓ^s sin sφ) P_ℓ^s(cos θ)`.
///
/// Storage per degree ℓ: `a_ℓ^0, a_ℓ^1, b_ℓ^1, …, a_ℓ^ℓ, b_ℓ^ℓ`, so the
/// coefficient count is `(N+1)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalShape3D {
    center: [f64; 3],
    order: usize,
    coeffs: Vec<f64>,
}

/// Position of `a_ℓ^s` (`sine = false`) or `b_ℓ^s` in the coefficient vector.
pub(crate) fn sh_index(l: usize, s: usize, sine: bool) -> usize {
    if s == 0 {
        l * l
    } else {
        l * l + 2 * s - 1 + sine as usize
    }
}

/// Inverse of [`sh_index`].
pub(crate) fn sh_label(index: usize) -> (usize, usize, bool) {
    let l = (index as f64).sqrt() as usize;
    let l = if (l + 1) * (l + 1) <= index { l + 1 } else if l * l > index { l - 1 } else { l };
    let r = index - l * l;
    if r == 0 {
        (l, 0, false)
    } else {
        (l, r.div_ceil(2), r % 2 == 0)
    }
}

/// `(q, q_θ, q_φ)` for every real spherical-harmonic basis function up to
/// `order`, in coefficient order.
pub fn spherical_basis_values(order: usize, theta: f64, phi: f64) -> Vec<(f64, f64, f64)> {
    let table = LegendreTable::new(order, theta);
    let mut out = Vec::with_capacity((order + 1) * (order + 1));
    for l in 0..=order {
        out.push((table.value(l, 0), table.dtheta(l, 0), 0.0));
        for s in 1..=l {
            let sf = s as f64;
            let (sn, cs) = (sf * phi).sin_cos();
            let (p, dp) = (table.value(l, s), table.dtheta(l, s));
            out.push((p * cs, dp * cs, -sf * p * sn));
            out.push((p * sn, dp * sn, sf * p * cs));
        }
    }
    out
}

impl SphericalShape3D {
    pub fn new(center: [f64; 3], order: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != (order + 1) * (order + 1) {
            return Err(Error::InvalidInput(format!(
                "3D coefficient count must be (N+1)^2 = {}, got {}",
                (order + 1) * (order + 1),
                coeffs.len()
            )));
        }
        check_finite(&coeffs)?;
        check_finite(&center)?;
        let shape = Self { center, order, coeffs };
        shape.check_starlike()?;
        Ok(shape)
    }

    pub fn sphere(center: [f64; 3], r: f64, order: usize) -> Result<Self> {
        let mut c = vec![0.0; (order + 1) * (order + 1)];
        c[0] = r;
        Self::new(center, order, c)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn center(&self) -> [f64; 3] {
        self.center
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// The coefficient `a_ℓ^s` or `b_ℓ^s`.
    pub fn coefficient(&self, l: usize, s: usize, sine: bool) -> Result<f64> {
        if s > l || l > self.order || (s == 0 && sine) {
            return Err(Error::IndexOutOfRange {
                index: sh_index(l, s, sine),
                limit: self.coeffs.len(),
            });
        }
        Ok(self.coeffs[sh_index(l, s, sine)])
    }

    /// `(r, r_θ, r_φ)` at `(θ, φ)`.
    pub fn radius_derivatives(&self, theta: f64, phi: f64) -> (f64, f64, f64) {
        spherical_basis_values(self.order, theta, phi)
            .iter()
            .zip(&self.coeffs)
            .fold((0.0, 0.0, 0.0), |acc, (q, c)| {
                (acc.0 + c * q.0, acc.1 + c * q.1, acc.2 + c * q.2)
            })
    }

    pub fn radius(&self, theta: f64, phi: f64) -> f64 {
        self.radius_derivatives(theta, phi).0
    }

    fn check_starlike(&self) -> Result<()> {
        let (nt, np) = (32, 64);
        for i in 0..=nt {
            let theta = PI * i as f64 / nt as f64;
            for j in 0..np {
                let phi = 2.0 * PI * j as f64 / np as f64;
                let r = self.radius(theta, phi);
                if !(r > 0.0) {
                    return Err(Error::NotStarlike(format!(
                        "r({theta:.4}, {phi:.4}) = {r:e}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn apply_update(&self, increment: &[f64]) -> Result<Self> {
        if increment.len() != self.coeffs.len() {
            return Err(Error::DimensionMismatch(format!(
                "increment has {} entries, shape has {}",
                increment.len(),
                self.coeffs.len()
            )));
        }
        let coeffs = self.coeffs.iter().zip(increment).map(|(a, b)| a + b).collect();
        Self::new(self.center, self.order, coeffs)
    }

    pub fn perturbation(&self, index: usize) -> Result<Perturbation3D> {
        Perturbation3D::new(self.order, index)
    }
}

impl Surface3D for SphericalShape3D {
    fn point(&self, theta: f64, phi: f64) -> Vector3<f64> {
        let (er, _, _) = radial3(theta, phi);
        Vector3::from(self.center) + self.radius(theta, phi) * er
    }

    fn d_theta(&self, theta: f64, phi: f64) -> Vector3<f64> {
        let (er, et, _) = radial3(theta, phi);
        let (r, rt, _) = self.radius_derivatives(theta, phi);
        rt * er + r * et
    }

    fn d_phi(&self, theta: f64, phi: f64) -> Vector3<f64> {
        let (er, _, ep) = radial3(theta, phi);
        let (r, _, rp) = self.radius_derivatives(theta, phi);
        rp * er + r * ep
    }
}

/// Radial shift `h = q(θ, φ) x̂(θ, φ)` for one real spherical-harmonic
/// basis function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Perturbation3D {
    pub index: usize,
    pub order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationValue3D {
    pub h: Vector3<f64>,
    pub h_theta: Vector3<f64>,
    pub h_phi: Vector3<f64>,
}

impl Perturbation3D {
    pub fn new(order: usize, index: usize) -> Result<Self> {
        let limit = (order + 1) * (order + 1);
        if index >= limit {
            return Err(Error::IndexOutOfRange { index, limit });
        }
        Ok(Self { index, order })
    }

    /// `(ℓ, s, is_sine)` of the basis function.
    pub fn label(&self) -> (usize, usize, bool) {
        sh_label(self.index)
    }

    pub fn eval(&self, theta: f64, phi: f64) -> PerturbationValue3D {
        let (l, s, sine) = self.label();
        let table = LegendreTable::new(l, theta);
        let sf = s as f64;
        let (sn, cs) = (sf * phi).sin_cos();
        let (p, dp) = (table.value(l, s), table.dtheta(l, s));
        let (q, qt, qp) = if sine {
            (p * sn, dp * sn, sf * p * cs)
        } else {
            (p * cs, dp * cs, -sf * p * sn)
        };
        lift_3d(q, qt, qp, theta, phi)
    }
}

/// Vector shift and its parameter derivatives from a scalar radial field.
pub(crate) fn lift_3d(q: f64, qt: f64, qp: f64, theta: f64, phi: f64) -> PerturbationValue3D {
    let (er, et, ep) = radial3(theta, phi);
    PerturbationValue3D {
        h: q * er,
        h_theta: qt * er + q * et,
        h_phi: qp * er + q * ep,
    }
}

pub fn perturbation_basis_3d(order: usize) -> Vec<Perturbation3D> {
    (0..(order + 1) * (order + 1))
        .map(|index| Perturbation3D { index, order })
        .collect()
}
