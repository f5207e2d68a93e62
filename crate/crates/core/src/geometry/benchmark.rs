use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::{radial2, radial3, Curve2D, Surface3D};
use crate::{Error, Result};

/// Closed-form benchmark curves, evaluated exactly (no Fourier truncation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum BenchmarkCurve {
    /// Circle of the given radius about `center`.
    Disc { radius: f64, center: [f64; 2] },
    /// `(2 + 0.3 cos 3φ)(cos φ, sin φ)`.
    Pear,
    /// `(cos φ + 0.65 cos 2φ − 0.65, 1.5 sin φ)`.
    Kite,
}

/// Closed-form benchmark surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum BenchmarkSurface {
    Sphere { radius: f64 },
    /// `(3 sin t cos τ, 3 sin t sin τ, 6 cos t)`.
    Ellipsoid,
    /// Concave body of revolution `(1.5 sin t cos τ, 1.5 sin t sin τ,
    /// 0.2 − cos t − 0.65 cos 2t)`, evaluated with `t ↦ π − t` so that
    /// `z_θ × z_φ` is outward.
    Kite3d,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Benchmark {
    Curve(BenchmarkCurve),
    Surface(BenchmarkSurface),
}

/// Parses `disc[:R]`, `pear`, `kite`, `ball[:R]` / `sphere[:R]`,
/// `ellipsoid` or `kite3d`.
pub fn make_benchmark_shape(name: &str) -> Result<Benchmark> {
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    let radius = |default: f64| -> Result<f64> {
        let r = match arg {
            Some(a) => a
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("bad radius in shape '{name}'")))?,
            None => default,
        };
        if r > 0.0 && r.is_finite() {
            Ok(r)
        } else {
            Err(Error::InvalidInput(format!("radius must be positive in '{name}'")))
        }
    };
    let no_arg = || -> Result<()> {
        match arg {
            None => Ok(()),
            Some(_) => Err(Error::InvalidInput(format!("shape '{head}' takes no parameter"))),
        }
    };
    match head {
        "disc" | "circle" => Ok(Benchmark::Curve(BenchmarkCurve::Disc {
            radius: radius(1.0)?,
            center: [0.0, 0.0],
        })),
        "pear" => no_arg().map(|_| Benchmark::Curve(BenchmarkCurve::Pear)),
        "kite" => no_arg().map(|_| Benchmark::Curve(BenchmarkCurve::Kite)),
        "ball" | "sphere" => Ok(Benchmark::Surface(BenchmarkSurface::Sphere {
            radius: radius(1.0)?,
        })),
        "ellipsoid" => no_arg().map(|_| Benchmark::Surface(BenchmarkSurface::Ellipsoid)),
        "kite3d" => no_arg().map(|_| Benchmark::Surface(BenchmarkSurface::Kite3d)),
        _ => Err(Error::UnsupportedShape(name.to_string())),
    }
}

impl Curve2D for BenchmarkCurve {
    fn point(&self, t: f64) -> Vector2<f64> {
        let (c, s) = (t.cos(), t.sin());
        match *self {
            BenchmarkCurve::Disc { radius, center } => {
                Vector2::new(center[0] + radius * c, center[1] + radius * s)
            }
            BenchmarkCurve::Pear => (2.0 + 0.3 * (3.0 * t).cos()) * Vector2::new(c, s),
            BenchmarkCurve::Kite => {
                Vector2::new(c + 0.65 * (2.0 * t).cos() - 0.65, 1.5 * s)
            }
        }
    }

    fn d1(&self, t: f64) -> Vector2<f64> {
        let (c, s) = (t.cos(), t.sin());
        match *self {
            BenchmarkCurve::Disc { radius, .. } => radius * Vector2::new(-s, c),
            BenchmarkCurve::Pear => {
                let (er, ep) = radial2(t);
                let r = 2.0 + 0.3 * (3.0 * t).cos();
                let dr = -0.9 * (3.0 * t).sin();
                dr * er + r * ep
            }
            BenchmarkCurve::Kite => Vector2::new(-s - 1.3 * (2.0 * t).sin(), 1.5 * c),
        }
    }

    fn d2(&self, t: f64) -> Vector2<f64> {
        let (c, s) = (t.cos(), t.sin());
        match *self {
            BenchmarkCurve::Disc { radius, .. } => radius * Vector2::new(-c, -s),
            BenchmarkCurve::Pear => {
                let (er, ep) = radial2(t);
                let r = 2.0 + 0.3 * (3.0 * t).cos();
                let dr = -0.9 * (3.0 * t).sin();
                let ddr = -2.7 * (3.0 * t).cos();
                (ddr - r) * er + 2.0 * dr * ep
            }
            BenchmarkCurve::Kite => Vector2::new(-c - 2.6 * (2.0 * t).cos(), -1.5 * s),
        }
    }
}

impl Surface3D for BenchmarkSurface {
    fn point(&self, theta: f64, phi: f64) -> Vector3<f64> {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        match *self {
            BenchmarkSurface::Sphere { radius } => radius * radial3(theta, phi).0,
            BenchmarkSurface::Ellipsoid => Vector3::new(3.0 * st * cp, 3.0 * st * sp, 6.0 * ct),
            BenchmarkSurface::Kite3d => Vector3::new(
                1.5 * st * cp,
                1.5 * st * sp,
                0.2 + ct - 0.65 * (2.0 * theta).cos(),
            ),
        }
    }

    fn d_theta(&self, theta: f64, phi: f64) -> Vector3<f64> {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        match *self {
            BenchmarkSurface::Sphere { radius } => radius * radial3(theta, phi).1,
            BenchmarkSurface::Ellipsoid => Vector3::new(3.0 * ct * cp, 3.0 * ct * sp, -6.0 * st),
            BenchmarkSurface::Kite3d => Vector3::new(
                1.5 * ct * cp,
                1.5 * ct * sp,
                -st + 1.3 * (2.0 * theta).sin(),
            ),
        }
    }

    fn d_phi(&self, theta: f64, phi: f64) -> Vector3<f64> {
        let st = theta.sin();
        let (sp, cp) = phi.sin_cos();
        match *self {
            BenchmarkSurface::Sphere { radius } => radius * radial3(theta, phi).2,
            BenchmarkSurface::Ellipsoid => Vector3::new(-3.0 * st * sp, 3.0 * st * cp, 0.0),
            BenchmarkSurface::Kite3d => Vector3::new(-1.5 * st * sp, 1.5 * st * cp, 0.0),
        }
    }
}
