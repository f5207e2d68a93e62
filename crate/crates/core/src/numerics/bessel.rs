//! Cylindrical and spherical Bessel functions of integer order for real
//! arguments.
//!
//! J_n is obtained from Miller's backward recurrence normalized with
//! `J_0 + 2 Σ J_2k = 1`; Y_0 and Y_1 follow from the Neumann series over the
//! same J values and Y_n from the (stable) forward recurrence. Spherical
//! functions use the analogous recurrences with the closed forms of order 0
//! and 1 as anchors.

use std::f64::consts::{FRAC_2_PI, PI};

use num_complex::Complex64;

use crate::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const RESCALE_LIMIT: f64 = 1e250;

fn miller_start(nmax: usize, x: f64) -> usize {
    let m = (nmax as f64).max(x);
    let start = (m + 30.0 + 10.0 * m.sqrt()).ceil() as usize;
    start + start % 2
}

/// Unnormalized backward recurrence values `f[0..=start]` for J, then
/// normalized so they equal J_0..J_start.
fn miller_j(start: usize, x: f64) -> Vec<f64> {
    let mut f = vec![0.0; start + 2];
    f[start + 1] = 0.0;
    f[start] = 1e-300;
    for k in (1..=start).rev() {
        f[k - 1] = 2.0 * k as f64 / x * f[k] - f[k + 1];
        if f[k - 1].abs() > RESCALE_LIMIT {
            for v in f.iter_mut().skip(k - 1) {
                *v /= RESCALE_LIMIT;
            }
        }
    }
    let mut norm = f[0];
    let mut k = 2;
    while k <= start {
        norm += 2.0 * f[k];
        k += 2;
    }
    f.truncate(start + 1);
    for v in f.iter_mut() {
        *v /= norm;
    }
    f
}

/// J_0(x), ..., J_nmax(x). Negative arguments use J_n(−x) = (−1)^n J_n(x).
pub fn bessel_j_seq(nmax: usize, x: f64) -> Vec<f64> {
    if x == 0.0 {
        let mut out = vec![0.0; nmax + 1];
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let mut j = miller_j(miller_start(nmax, ax), ax);
    j.truncate(nmax + 1);
    if x < 0.0 {
        for (n, v) in j.iter_mut().enumerate() {
            if n % 2 == 1 {
                *v = -*v;
            }
        }
    }
    j
}

fn y01_from_j(j: &[f64], x: f64) -> (f64, f64) {
    let lg = (0.5 * x).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut k = 1;
    while 2 * k + 1 < j.len() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s0 += sign * j[2 * k] / k as f64;
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
        k += 1;
    }
    let y0 = FRAC_2_PI * lg * j[0] - 2.0 * FRAC_2_PI * s0;
    let y1 = FRAC_2_PI * lg * j[1] - FRAC_2_PI * j[0] / x + FRAC_2_PI * s1;
    (y0, y1)
}

/// `(J_0, J_1, Y_0, Y_1)` at `x > 0` in one recurrence pass; the hot path of
/// the Nyström assembly.
pub fn cylinder_j01_y01(x: f64) -> (f64, f64, f64, f64) {
    let j = miller_j(miller_start(1, x), x);
    let (y0, y1) = y01_from_j(&j, x);
    (j[0], j[1], y0, y1)
}

/// Y_0(x), ..., Y_nmax(x) for `x > 0`.
pub fn bessel_y_seq(nmax: usize, x: f64) -> Result<Vec<f64>> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("Y_n requires x > 0, got {x}")));
    }
    let j = miller_j(miller_start(1, x), x);
    let (y0, y1) = y01_from_j(&j, x);
    let mut y = Vec::with_capacity(nmax + 2);
    y.push(y0);
    y.push(y1);
    for n in 1..nmax {
        let next = 2.0 * n as f64 / x * y[n] - y[n - 1];
        y.push(next);
    }
    y.truncate(nmax + 1);
    Ok(y)
}

pub fn bessel_j(n: usize, x: f64) -> f64 {
    bessel_j_seq(n, x)[n]
}

pub fn bessel_y(n: usize, x: f64) -> Result<f64> {
    Ok(bessel_y_seq(n, x)?[n])
}

pub fn bessel_j_prime(n: usize, x: f64) -> f64 {
    let j = bessel_j_seq(n + 1, x);
    if n == 0 {
        -j[1]
    } else {
        0.5 * (j[n - 1] - j[n + 1])
    }
}

pub fn bessel_y_prime(n: usize, x: f64) -> Result<f64> {
    let y = bessel_y_seq(n + 1, x)?;
    Ok(if n == 0 { -y[1] } else { 0.5 * (y[n - 1] - y[n + 1]) })
}

/// Hankel function of the first kind H¹_n = J_n + iY_n.
pub fn hankel1(n: usize, x: f64) -> Result<Complex64> {
    Ok(Complex64::new(bessel_j(n, x), bessel_y(n, x)?))
}

pub fn hankel1_prime(n: usize, x: f64) -> Result<Complex64> {
    Ok(Complex64::new(bessel_j_prime(n, x), bessel_y_prime(n, x)?))
}

/// Spherical Bessel functions j_0(x), ..., j_nmax(x) for `x ≥ 0`.
pub fn spherical_j_seq(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let x = x.abs();
    let start = miller_start(nmax, x);
    let mut f = vec![0.0; start + 2];
    f[start] = 1e-300;
    for n in (1..=start).rev() {
        f[n - 1] = (2 * n + 1) as f64 / x * f[n] - f[n + 1];
        if f[n - 1].abs() > RESCALE_LIMIT {
            for v in f.iter_mut().skip(n - 1) {
                *v /= RESCALE_LIMIT;
            }
        }
    }
    let (j0, j1) = if x < 0.1 {
        let x2 = x * x;
        (
            1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0)),
            x / 3.0 * (1.0 - x2 / 10.0 * (1.0 - x2 / 28.0 * (1.0 - x2 / 54.0))),
        )
    } else {
        let (s, c) = x.sin_cos();
        (s / x, s / (x * x) - c / x)
    };
    let scale = if j0.abs() >= j1.abs() { j0 / f[0] } else { j1 / f[1] };
    for (o, v) in out.iter_mut().zip(f.iter()) {
        *o = v * scale;
    }
    out
}

/// Spherical Bessel functions of the second kind y_0..y_nmax for `x > 0`.
pub fn spherical_y_seq(nmax: usize, x: f64) -> Result<Vec<f64>> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("y_n requires x > 0, got {x}")));
    }
    let (s, c) = x.sin_cos();
    let mut y = Vec::with_capacity(nmax + 2);
    y.push(-c / x);
    y.push(-c / (x * x) - s / x);
    for n in 1..nmax {
        let next = (2 * n + 1) as f64 / x * y[n] - y[n - 1];
        y.push(next);
    }
    y.truncate(nmax + 1);
    Ok(y)
}

pub fn spherical_j(n: usize, x: f64) -> f64 {
    spherical_j_seq(n, x)[n]
}

pub fn spherical_y(n: usize, x: f64) -> Result<f64> {
    Ok(spherical_y_seq(n, x)?[n])
}

fn spherical_derivative(n: usize, f: &[f64]) -> f64 {
    if n == 0 {
        -f[1]
    } else {
        (n as f64 * f[n - 1] - (n + 1) as f64 * f[n + 1]) / (2 * n + 1) as f64
    }
}

pub fn spherical_j_prime(n: usize, x: f64) -> f64 {
    spherical_derivative(n, &spherical_j_seq(n + 1, x))
}

/// Spherical Hankel function h¹_n = j_n + i y_n.
pub fn spherical_hankel1(n: usize, x: f64) -> Result<Complex64> {
    Ok(Complex64::new(spherical_j(n, x), spherical_y(n, x)?))
}

pub fn spherical_hankel1_prime(n: usize, x: f64) -> Result<Complex64> {
    let y = spherical_y_seq(n + 1, x)?;
    Ok(Complex64::new(
        spherical_j_prime(n, x),
        spherical_derivative(n, &y),
    ))
}

#[allow(dead_code)]
pub(crate) fn wronskian_cylindrical(x: f64) -> f64 {
    2.0 / (PI * x)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from scipy.special (jv, yv, spherical_jn, spherical_yn).
    const TABLE: &[(usize, f64, f64, f64)] = &[
        (0, 1.0, 0.7651976865579666, 0.088256964215677),
        (1, 1.0, 0.44005058574493355, -0.7812128213002889),
        (0, 10.0, -0.24593576445134832, 0.05567116728359934),
        (5, 3.7, 0.09948541700833392, -0.9790650682335416),
        (20, 15.0, 0.007360234079223488, -3.30873309247376),
        (3, 60.0, -0.040396711521655165, -0.09482271816300825),
        (45, 80.0, -0.08881157567435777, 0.04166486852199816),
    ];

    #[test]
    fn matches_reference_values() {
        for &(n, x, jw, yw) in TABLE {
            let j = bessel_j(n, x);
            let y = bessel_y(n, x).unwrap();
            assert!((j - jw).abs() < 1e-13 * jw.abs().max(1.0), "J_{n}({x}) = {j}, want {jw}");
            assert!((y - yw).abs() < 1e-12 * yw.abs().max(1.0), "Y_{n}({x}) = {y}, want {yw}");
        }
    }

    #[test]
    fn j0_at_origin_is_one() {
        assert_eq!(bessel_j(0, 0.0), 1.0);
        assert_eq!(bessel_j(3, 0.0), 0.0);
    }

    #[test]
    fn y_rejects_origin() {
        assert!(matches!(bessel_y(0, 0.0), Err(Error::Domain(_))));
        assert!(hankel1(2, 0.0).is_err());
        assert!(spherical_hankel1(1, 0.0).is_err());
    }

    #[test]
    fn wronskian_n2_x17() {
        let x = 1.7;
        let w = bessel_j(2, x) * bessel_y_prime(2, x).unwrap()
            - bessel_j_prime(2, x) * bessel_y(2, x).unwrap();
        assert!((w - wronskian_cylindrical(x)).abs() < 1e-12);
    }

    #[test]
    fn wronskian_over_wide_range() {
        for &x in &[0.05, 0.4, 1.0, 3.3, 8.0, 17.5, 42.0, 99.0] {
            for n in [0usize, 1, 4, 11, 30] {
                let j = bessel_j_seq(n + 1, x);
                let y = bessel_y_seq(n + 1, x).unwrap();
                let w = j[n + 1] * y[n] - j[n] * y[n + 1];
                let want = wronskian_cylindrical(x);
                assert!(
                    ((w - want) / want).abs() < 1e-11,
                    "n={n} x={x}: {w} vs {want}"
                );
            }
        }
    }

    #[test]
    fn spherical_closed_forms() {
        let x = std::f64::consts::FRAC_PI_2;
        assert!((spherical_j(0, x) - 2.0 / PI).abs() < 1e-15);
        let x = 1.3;
        assert!((spherical_j_prime(0, x) + spherical_j(1, x)).abs() < 1e-12);
        let x: f64 = 2.9;
        let (s, c) = x.sin_cos();
        let j2 = (3.0 / (x * x) - 1.0) * s / x - 3.0 * c / (x * x);
        assert!((spherical_j(2, x) - j2).abs() < 1e-14);
        let y2 = (-3.0 / (x * x) + 1.0) * c / x - 3.0 * s / (x * x);
        assert!((spherical_y(2, x).unwrap() - y2).abs() < 1e-14);
    }

    #[test]
    fn spherical_wronskian() {
        for &x in &[0.02, 0.7, 3.14159, 9.0, 40.0] {
            for n in [0usize, 1, 3, 10, 25] {
                let j = spherical_j_seq(n + 1, x);
                let y = spherical_y_seq(n + 1, x).unwrap();
                // j_n y_{n-1} - j_{n-1} y_n = 1/x² written with n+1.
                let w = j[n + 1] * y[n] - j[n] * y[n + 1];
                let want = 1.0 / (x * x);
                assert!(((w - want) / want).abs() < 1e-10, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn spherical_small_argument() {
        let x = 1e-3;
        assert!((spherical_j(1, x) - (x / 3.0 - x * x * x / 30.0)).abs() < 1e-15);
        assert!((spherical_j_prime(1, 0.0) - 1.0 / 3.0).abs() < 1e-15);
    }
}
