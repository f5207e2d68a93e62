use std::f64::consts::PI;

use nalgebra::{Vector2, Vector3};
use num_complex::Complex64;

use super::BoundaryCondition;
use crate::numerics::{bessel_j_seq, bessel_y_seq, legendre_p_seq, spherical_j_seq, spherical_y_seq, ComplexMatrix};
use crate::{Error, Result};

fn check_args(radius: f64, k: f64, n_terms: usize) -> Result<()> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidInput(format!("wavenumber must be positive, got {k}")));
    }
    if (n_terms as f64) < k * radius + 20.0 {
        return Err(Error::InvalidInput(format!(
            "{n_terms} terms are too few for kR = {}",
            k * radius
        )));
    }
    Ok(())
}

/// `(f_n, f_n')` for `n = 0..=nmax` from a sequence reaching `nmax + 1`,
/// cylindrical recurrence `f_n' = (f_{n−1} − f_{n+1})/2`, `f_0' = −f_1`.
fn cyl_with_derivative(f: &[f64], nmax: usize) -> Vec<(f64, f64)> {
    (0..=nmax)
        .map(|n| {
            let d = if n == 0 { -f[1] } else { 0.5 * (f[n - 1] - f[n + 1]) };
            (f[n], d)
        })
        .collect()
}

/// Disc coefficients `a_n`, `n = 0..=n_terms`.
fn disc_coefficients(bc: BoundaryCondition, kr: f64, n_terms: usize) -> Result<Vec<Complex64>> {
    let j = cyl_with_derivative(&bessel_j_seq(n_terms + 1, kr), n_terms);
    let y = cyl_with_derivative(&bessel_y_seq(n_terms + 1, kr)?, n_terms);
    Ok(j
        .iter()
        .zip(&y)
        .map(|(&(jn, jd), &(yn, yd))| {
            let (num, den) = match bc {
                BoundaryCondition::SoundHard => (jd, Complex64::new(jd, yd)),
                BoundaryCondition::SoundSoft => (jn, Complex64::new(jn, yn)),
            };
            if den.is_finite() {
                -num / den
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect())
}

fn angle_between(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    (b.x * a.y - b.y * a.x).atan2(a.dot(b))
}

/// Sound-hard far-field matrix `U(i,j) = u∞(x̂_i, d_j)` of a centered disc.
pub fn disc_series(
    radius: f64,
    k: f64,
    obs: &[Vector2<f64>],
    inc: &[Vector2<f64>],
    n_terms: usize,
) -> Result<ComplexMatrix> {
    disc_series_with(BoundaryCondition::SoundHard, radius, k, obs, inc, n_terms)
}

pub fn disc_series_with(
    bc: BoundaryCondition,
    radius: f64,
    k: f64,
    obs: &[Vector2<f64>],
    inc: &[Vector2<f64>],
    n_terms: usize,
) -> Result<ComplexMatrix> {
    check_args(radius, k, n_terms)?;
    let a = disc_coefficients(bc, k * radius, n_terms)?;
    let pref = (2.0 / (PI * k)).sqrt() * Complex64::from_polar(1.0, -PI / 4.0);
    Ok(ComplexMatrix::from_fn(obs.len(), inc.len(), |i, j| {
        let delta = angle_between(&inc[j], &obs[i]);
        let mut s = a[0];
        for (n, an) in a.iter().enumerate().skip(1) {
            s += 2.0 * an * (n as f64 * delta).cos();
        }
        pref * s
    }))
}

/// `∂u^s/∂ν` on the boundary of a centered disc at the points
/// `radius·(cos θ, sin θ)`, incident direction `d`.
pub fn disc_normal_trace(
    bc: BoundaryCondition,
    radius: f64,
    k: f64,
    d: &Vector2<f64>,
    thetas: &[f64],
    n_terms: usize,
) -> Result<Vec<Complex64>> {
    check_args(radius, k, n_terms)?;
    let kr = k * radius;
    let a = disc_coefficients(bc, kr, n_terms)?;
    let j = cyl_with_derivative(&bessel_j_seq(n_terms + 1, kr), n_terms);
    let y = cyl_with_derivative(&bessel_y_seq(n_terms + 1, kr)?, n_terms);
    let theta_d = d.y.atan2(d.x);
    let i = Complex64::i();
    Ok(thetas
        .iter()
        .map(|&t| {
            let delta = t - theta_d;
            let mut s = Complex64::new(0.0, 0.0);
            for n in 0..=n_terms {
                let hd = Complex64::new(j[n].1, y[n].1);
                if !hd.is_finite() {
                    continue;
                }
                let term = k * a[n] * hd * i.powu(n as u32);
                s += if n == 0 { term } else { 2.0 * term * (n as f64 * delta).cos() };
            }
            s
        })
        .collect())
}

/// Sound-hard far-field matrix of a centered ball.
pub fn ball_series(
    radius: f64,
    k: f64,
    obs: &[Vector3<f64>],
    inc: &[Vector3<f64>],
    n_terms: usize,
) -> Result<ComplexMatrix> {
    check_args(radius, k, n_terms)?;
    let kr = k * radius;
    let jn = spherical_j_seq(n_terms + 1, kr);
    let yn = spherical_y_seq(n_terms + 1, kr)?;
    let deriv = |f: &[f64], n: usize| {
        if n == 0 {
            -f[1]
        } else {
            (n as f64 * f[n - 1] - (n + 1) as f64 * f[n + 1]) / (2 * n + 1) as f64
        }
    };
    let coef: Vec<Complex64> = (0..=n_terms)
        .map(|n| {
            let hd = Complex64::new(deriv(&jn, n), deriv(&yn, n));
            if hd.is_finite() {
                -((2 * n + 1) as f64) * deriv(&jn, n) / hd
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let pref = Complex64::new(0.0, -1.0 / k);
    Ok(ComplexMatrix::from_fn(obs.len(), inc.len(), |i, j| {
        let t = obs[i].dot(&inc[j]).clamp(-1.0, 1.0);
        let p = legendre_p_seq(n_terms, t);
        pref * coef.iter().zip(&p).map(|(c, p)| c * p).sum::<Complex64>()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::max_abs;

    fn circle_dirs(n: usize) -> Vec<Vector2<f64>> {
        (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                Vector2::new(t.cos(), t.sin())
            })
            .collect()
    }

    #[test]
    fn disc_rotation_invariance_and_reciprocity() {
        let dirs = circle_dirs(24);
        let u = disc_series(1.0, 2.5, &dirs, &dirs, 40).unwrap();
        for i in 0..24 {
            for j in 0..24 {
                assert!((u[(i, j)] - u[((i + 1) % 24, (j + 1) % 24)]).norm() < 1e-13);
                // −d and −x̂ are the directions half a turn away.
                assert!((u[(i, j)] - u[((j + 12) % 24, (i + 12) % 24)]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn disc_truncation_is_converged() {
        let dirs = circle_dirs(16);
        let a = disc_series(1.0, 4.0, &dirs, &dirs, 30).unwrap();
        let b = disc_series(1.0, 4.0, &dirs, &dirs, 40).unwrap();
        assert!(max_abs(&(a - b)) < 1e-13);
        assert!(disc_series(1.0, 4.0, &dirs, &dirs, 20).is_err());
    }

    #[test]
    fn disc_optical_theorem() {
        // Energy balance for an impenetrable obstacle:
        // ‖u∞‖²_{L²(S¹)} = −√(8π/k) Re(e^{iπ/4} u∞(d,d)).
        let k = 1.7;
        let obs = circle_dirs(256);
        let d = [Vector2::new(1.0, 0.0)];
        for bc in [BoundaryCondition::SoundHard, BoundaryCondition::SoundSoft] {
            let u = disc_series_with(bc, 1.3, k, &obs, &d, 40).unwrap();
            let energy: f64 = u.iter().map(|c| c.norm_sqr()).sum::<f64>() * 2.0 * PI / 256.0;
            let forward = u[(0, 0)] * Complex64::from_polar(1.0, PI / 4.0);
            let rhs = -(8.0 * PI / k).sqrt() * forward.re;
            assert!((energy - rhs).abs() < 1e-12 * energy, "{bc:?}");
        }
    }

    fn fib(n: usize) -> Vec<Vector3<f64>> {
        crate::numerics::fibonacci_sphere(n)
            .unwrap()
            .nodes
            .iter()
            .map(|p| Vector3::from(*p))
            .collect()
    }

    #[test]
    fn ball_symmetries() {
        let dirs = fib(40);
        let u = ball_series(1.0, 2.0, &dirs, &dirs, 30).unwrap();
        let neg: Vec<Vector3<f64>> = dirs.iter().map(|d| -d).collect();
        let v = ball_series(1.0, 2.0, &neg, &neg, 30).unwrap();
        for i in 0..40 {
            for j in 0..40 {
                assert!((u[(i, j)] - v[(j, i)]).norm() < 1e-13);
            }
        }
        // Two pairs with the same x̂·d.
        let a = Vector3::new(0.0, 0.0, 1.0);
        let b = Vector3::new(0.6, 0.0, 0.8);
        let c = Vector3::new(0.0, 0.6, 0.8);
        let e = Vector3::new(0.0, 0.0, 1.0);
        let u1 = ball_series(1.0, 2.0, &[a], &[b], 30).unwrap();
        let u2 = ball_series(1.0, 2.0, &[c], &[e], 30).unwrap();
        assert!((u1[(0, 0)] - u2[(0, 0)]).norm() < 1e-13);
        let w = ball_series(1.0, 2.0, &dirs, &dirs, 40).unwrap();
        assert!(max_abs(&(&u - w)) < 1e-13);
    }

    #[test]
    fn ball_optical_theorem() {
        // ‖u∞‖²_{L²(S²)} = (4π/k) Im u∞(d,d).
        let k = 1.9;
        let rule = crate::numerics::sphere_rule(40, 80).unwrap();
        let obs: Vec<Vector3<f64>> = rule.nodes.iter().map(|p| Vector3::from(*p)).collect();
        let d = [Vector3::new(0.0, 0.0, 1.0)];
        let u = ball_series(1.2, k, &obs, &d, 40).unwrap();
        let energy: f64 = u.iter().zip(&rule.weights).map(|(c, w)| c.norm_sqr() * w).sum();
        let fwd = ball_series(1.2, k, &d, &d, 40).unwrap()[(0, 0)];
        assert!((energy - 4.0 * PI / k * fwd.im).abs() < 1e-10 * energy);
    }
}
