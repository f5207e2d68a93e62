use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Vector2, Vector3};

use super::{radial::spherical_basis_values, Curve2D, RadialShape2D, SphericalShape3D, Surface3D};
use crate::numerics::TikhonovSvd;
use crate::{Error, Result};

/// A least-squares radial fit and its maximum radial misfit over the samples.
#[derive(Debug, Clone)]
pub struct RadialFit<S> {
    pub shape: S,
    pub residual: f64,
}

fn least_squares(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    TikhonovSvd::new(&a)?.solve(&b, 0.0)
}

/// Fits `r(φ)` of order `order` about `center` to `samples` points of a
/// curve, where φ is the polar angle of each sample seen from `center`.
///
/// The polar angle must increase monotonically along the curve through
/// exactly one turn; otherwise the curve is not starlike about `center`.
pub fn fit_radial<C: Curve2D + ?Sized>(
    curve: &C,
    order: usize,
    center: [f64; 2],
    samples: usize,
) -> Result<RadialFit<RadialShape2D>> {
    if samples < 2 * order + 1 {
        return Err(Error::InvalidInput(format!(
            "{samples} samples cannot determine {} coefficients",
            2 * order + 1
        )));
    }
    let c = Vector2::new(center[0], center[1]);
    let mut polar = Vec::with_capacity(samples);
    let mut unwrapped = 0.0;
    let mut prev: Option<f64> = None;
    for i in 0..samples {
        let t = 2.0 * PI * i as f64 / samples as f64;
        let d = curve.point(t) - c;
        let rho = d.norm();
        if !(rho > 0.0) {
            return Err(Error::NotStarlike(format!("sample {i} coincides with the center")));
        }
        let ang = d.y.atan2(d.x);
        if let Some(p) = prev {
            let mut step = ang - p;
            step -= 2.0 * PI * (step / (2.0 * PI)).round();
            if !(step > 0.0) {
                return Err(Error::NotStarlike(format!(
                    "polar angle is not increasing at sample {i}"
                )));
            }
            unwrapped += step;
        }
        prev = Some(ang);
        polar.push((ang, rho));
    }
    let close = {
        let mut step = polar[0].0 - prev.unwrap_or(0.0);
        step -= 2.0 * PI * (step / (2.0 * PI)).round();
        step
    };
    if !(close > 0.0) || ((unwrapped + close) - 2.0 * PI).abs() > 1e-6 {
        return Err(Error::NotStarlike("curve does not wind once around the center".into()));
    }
    let ncoef = 2 * order + 1;
    let a = DMatrix::from_fn(samples, ncoef, |i, j| {
        let phi = polar[i].0;
        if j == 0 {
            1.0
        } else {
            let m = ((j + 1) / 2) as f64;
            if j % 2 == 1 {
                (m * phi).cos()
            } else {
                (m * phi).sin()
            }
        }
    });
    let b = DVector::from_fn(samples, |i, _| polar[i].1);
    let x = least_squares(a.clone(), b.clone())?;
    let residual = (&a * &x - &b).amax();
    let shape = RadialShape2D::new(center, x.iter().copied().collect())?;
    Ok(RadialFit { shape, residual })
}

/// 3D analogue of [`fit_radial`] over an `n_theta × n_phi` parameter grid
/// (interior θ-midpoints).
pub fn fit_radial_3d<S: Surface3D + ?Sized>(
    surface: &S,
    order: usize,
    center: [f64; 3],
    n_theta: usize,
    n_phi: usize,
) -> Result<RadialFit<SphericalShape3D>> {
    let ncoef = (order + 1) * (order + 1);
    if n_theta * n_phi < ncoef {
        return Err(Error::InvalidInput("too few samples for the requested order".into()));
    }
    let c = Vector3::from(center);
    let mut rows = Vec::with_capacity(n_theta * n_phi);
    let mut rhs = Vec::with_capacity(n_theta * n_phi);
    for i in 0..n_theta {
        let t = PI * (i as f64 + 0.5) / n_theta as f64;
        for j in 0..n_phi {
            let p = 2.0 * PI * j as f64 / n_phi as f64;
            let d = surface.point(t, p) - c;
            let rho = d.norm();
            if !(rho > 0.0) {
                return Err(Error::NotStarlike("sample coincides with the center".into()));
            }
            let theta = (d.z / rho).clamp(-1.0, 1.0).acos();
            let phi = d.y.atan2(d.x);
            rows.push(spherical_basis_values(order, theta, phi));
            rhs.push(rho);
        }
    }
    let a = DMatrix::from_fn(rows.len(), ncoef, |i, j| rows[i][j].0);
    let b = DVector::from_vec(rhs);
    let x = least_squares(a.clone(), b.clone())?;
    let residual = (&a * &x - &b).amax();
    let shape = SphericalShape3D::new(center, order, x.iter().copied().collect())?;
    Ok(RadialFit { shape, residual })
}

fn directed<P: Fn(usize, usize) -> f64>(na: usize, nb: usize, dist: P) -> f64 {
    (0..na)
        .map(|i| (0..nb).map(|j| dist(i, j)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Symmetric discrete Hausdorff distance between two curves sampled at
/// `samples` equispaced parameter values each.
pub fn hausdorff_distance<A: Curve2D + ?Sized, B: Curve2D + ?Sized>(
    a: &A,
    b: &B,
    samples: usize,
) -> f64 {
    let pts = |c: &dyn Fn(f64) -> Vector2<f64>| -> Vec<Vector2<f64>> {
        (0..samples).map(|i| c(2.0 * PI * i as f64 / samples as f64)).collect()
    };
    let pa = pts(&|t| a.point(t));
    let pb = pts(&|t| b.point(t));
    let d = |i: usize, j: usize| (pa[i] - pb[j]).norm();
    directed(pa.len(), pb.len(), d).max(directed(pb.len(), pa.len(), |i, j| d(j, i)))
}

/// Symmetric discrete Hausdorff distance between two surfaces sampled on an
/// `n_theta × n_phi` grid (θ-midpoints plus both poles).
pub fn hausdorff_distance_3d<A: Surface3D + ?Sized, B: Surface3D + ?Sized>(
    a: &A,
    b: &B,
    n_theta: usize,
    n_phi: usize,
) -> f64 {
    let pts = |s: &dyn Fn(f64, f64) -> Vector3<f64>| -> Vec<Vector3<f64>> {
        let mut v = vec![s(0.0, 0.0), s(PI, 0.0)];
        for i in 0..n_theta {
            let t = PI * (i as f64 + 0.5) / n_theta as f64;
            for j in 0..n_phi {
                v.push(s(t, 2.0 * PI * j as f64 / n_phi as f64));
            }
        }
        v
    };
    let pa = pts(&|t, p| a.point(t, p));
    let pb = pts(&|t, p| b.point(t, p));
    let d = |i: usize, j: usize| (pa[i] - pb[j]).norm();
    directed(pa.len(), pb.len(), d).max(directed(pb.len(), pa.len(), |i, j| d(j, i)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BenchmarkCurve, BenchmarkSurface};

    /// Plain DFT projection of `r(φ)` sampled at `n` equispaced angles.
    fn dft_projection(r: impl Fn(f64) -> f64, order: usize, n: usize) -> Vec<f64> {
        let mut c = vec![0.0; 2 * order + 1];
        for i in 0..n {
            let phi = 2.0 * PI * i as f64 / n as f64;
            let v = r(phi);
            c[0] += v / n as f64;
            for j in 1..=order {
                let jf = j as f64;
                c[2 * j - 1] += 2.0 * v * (jf * phi).cos() / n as f64;
                c[2 * j] += 2.0 * v * (jf * phi).sin() / n as f64;
            }
        }
        c
    }

    #[test]
    fn circle_fit() {
        let disc = BenchmarkCurve::Disc { radius: 2.0, center: [0.0, 0.0] };
        let fit = fit_radial(&disc, 6, [0.0, 0.0], 256).unwrap();
        let c = fit.shape.coefficients();
        assert!((c[0] - 2.0).abs() < 1e-12);
        assert!(c[1..].iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn pear_fit_and_projection() {
        let fit = fit_radial(&BenchmarkCurve::Pear, 20, [0.0, 0.0], 512).unwrap();
        let c = fit.shape.coefficients();
        assert!((c[0] - 2.0).abs() < 1e-12);
        assert!((c[5] - 0.3).abs() < 1e-12);
        for (i, x) in c.iter().enumerate() {
            if i != 0 && i != 5 {
                assert!(x.abs() < 1e-12, "coefficient {i} = {x}");
            }
        }
        let proj = dft_projection(|p| 2.0 + 0.3 * (3.0 * p).cos(), 20, 512);
        let shape = RadialShape2D::new([0.0, 0.0], proj).unwrap();
        let err = (0..512)
            .map(|i| {
                let phi = 2.0 * PI * i as f64 / 512.0;
                (shape.radius(phi) - (2.0 + 0.3 * (3.0 * phi).cos())).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-10);
        assert!(hausdorff_distance(&BenchmarkCurve::Pear, &shape, 512) < 1e-9);
    }

    #[test]
    fn kite_fit_about_offset_center() {
        let kite = BenchmarkCurve::Kite;
        let center = [-0.4, 0.0];
        let fit = fit_radial(&kite, 20, center, 2048).unwrap();
        // Dense normal-equations oracle on the same polar samples.
        let samples: Vec<(f64, f64)> = (0..2048)
            .map(|i| {
                let d = kite.point(2.0 * PI * i as f64 / 2048.0) - Vector2::new(center[0], center[1]);
                (d.y.atan2(d.x), d.norm())
            })
            .collect();
        let basis = |phi: f64, j: usize| {
            let m = ((j + 1) / 2) as f64;
            match j {
                0 => 1.0,
                _ if j % 2 == 1 => (m * phi).cos(),
                _ => (m * phi).sin(),
            }
        };
        let a = DMatrix::from_fn(2048, 41, |i, j| basis(samples[i].0, j));
        let b = DVector::from_fn(2048, |i, _| samples[i].1);
        let oracle = (a.transpose() * &a).lu().solve(&(a.transpose() * &b)).unwrap();
        let got = DVector::from_column_slice(fit.shape.coefficients());
        assert!((&got - &oracle).amax() < 1e-8);
        let res = (&a * &oracle - &b).amax();
        assert!((fit.residual - res).abs() < 1e-8);
        let finer = fit_radial(&kite, 40, center, 2048).unwrap();
        assert!(finer.residual < fit.residual);
        assert!(fit_radial(&kite, 20, [3.0, 0.0], 512).is_err());
    }

    #[test]
    fn concentric_circles() {
        let a = BenchmarkCurve::Disc { radius: 1.0, center: [0.0, 0.0] };
        let b = BenchmarkCurve::Disc { radius: 1.2, center: [0.0, 0.0] };
        assert!((hausdorff_distance(&a, &b, 1024) - 0.2).abs() < 1e-3);
        assert_eq!(hausdorff_distance(&a, &a, 512), 0.0);
        assert_eq!(hausdorff_distance(&BenchmarkCurve::Pear, &BenchmarkCurve::Pear, 300), 0.0);
    }

    #[test]
    fn ellipsoid_fit_3d() {
        let s = BenchmarkSurface::Sphere { radius: 1.5 };
        let fit = fit_radial_3d(&s, 4, [0.0; 3], 20, 40).unwrap();
        assert!((fit.shape.coefficients()[0] - 1.5).abs() < 1e-12);
        assert!(fit.shape.coefficients()[1..].iter().all(|x| x.abs() < 1e-12));
        let e4 = fit_radial_3d(&BenchmarkSurface::Ellipsoid, 4, [0.0; 3], 24, 48).unwrap();
        let e12 = fit_radial_3d(&BenchmarkSurface::Ellipsoid, 12, [0.0; 3], 24, 48).unwrap();
        assert!(e12.residual < 1e-2 * e4.residual.max(1e-300) * 10.0);
        // The ellipsoid is even in z and rotationally symmetric: odd ℓ and s > 0 vanish.
        for (i, c) in e12.shape.coefficients().iter().enumerate() {
            let (l, s, _) = crate::geometry::radial::sh_label(i);
            if l % 2 == 1 || s > 0 {
                assert!(c.abs() < 1e-6, "coefficient {i} = {c}");
            }
        }
        let a = BenchmarkSurface::Sphere { radius: 1.0 };
        let b = BenchmarkSurface::Sphere { radius: 1.3 };
        assert!((hausdorff_distance_3d(&a, &b, 16, 32) - 0.3).abs() < 1e-12);
    }
}
