//! Unnormalized associated Legendre functions without the Condon–Shortley
//! phase: `P_l^s(t) = (1 − t²)^{s/2} dˢ/dtˢ P_l(t)`.

use crate::{Error, Result};

/// All `P_l^s(cos θ)` for `0 ≤ s ≤ l ≤ order` together with their θ-derivatives.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    order: usize,
    values: Vec<f64>,
    dtheta: Vec<f64>,
}

fn idx(l: usize, s: usize) -> usize {
    l * (l + 1) / 2 + s
}

impl LegendreTable {
    pub fn new(order: usize, theta: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let n = idx(order, order) + 1;
        let mut values = vec![0.0; n];
        // Diagonal P_s^s = (2s − 1)!! sin^s θ.
        let mut diag = 1.0;
        for s in 0..=order {
            if s > 0 {
                diag *= (2 * s - 1) as f64 * st;
            }
            values[idx(s, s)] = diag;
            if s < order {
                values[idx(s + 1, s)] = ct * (2 * s + 1) as f64 * diag;
            }
            for l in (s + 2)..=order {
                values[idx(l, s)] = ((2 * l - 1) as f64 * ct * values[idx(l - 1, s)]
                    - (l + s - 1) as f64 * values[idx(l - 2, s)])
                    / (l - s) as f64;
            }
        }
        let mut dtheta = vec![0.0; n];
        for l in 0..=order {
            for s in 0..=l {
                let up = if s < l { values[idx(l, s + 1)] } else { 0.0 };
                dtheta[idx(l, s)] = if s == 0 {
                    -up
                } else {
                    0.5 * ((l + s) as f64 * (l - s + 1) as f64 * values[idx(l, s - 1)] - up)
                };
            }
        }
        Self {
            order,
            values,
            dtheta,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self, l: usize, s: usize) -> f64 {
        self.values[idx(l, s)]
    }

    /// d/dθ of `P_l^s(cos θ)`.
    pub fn dtheta(&self, l: usize, s: usize) -> f64 {
        self.dtheta[idx(l, s)]
    }
}

/// `P_l^s(t)` for `t ∈ [−1, 1]`.
pub fn associated_legendre(l: usize, s: usize, t: f64) -> Result<f64> {
    if s > l {
        return Err(Error::IndexOutOfRange { index: s, limit: l });
    }
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("Legendre argument {t} outside [-1, 1]")));
    }
    Ok(LegendreTable::new(l, t.acos()).value(l, s))
}

/// Ordinary Legendre polynomials P_0(t), ..., P_nmax(t).
pub fn legendre_p_seq(nmax: usize, t: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(nmax + 1);
    p.push(1.0);
    if nmax >= 1 {
        p.push(t);
    }
    for n in 1..nmax {
        let next = ((2 * n + 1) as f64 * t * p[n] - n as f64 * p[n - 1]) / (n + 1) as f64;
        p.push(next);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::gauss_legendre;

    #[test]
    fn low_order_values() {
        assert_eq!(associated_legendre(0, 0, 0.4).unwrap(), 1.0);
        for t in [-1.0, 0.0, 0.5] {
            assert!((associated_legendre(1, 0, t).unwrap() - t).abs() < 1e-15);
        }
        let t: f64 = 0.3;
        let st = (1.0 - t * t).sqrt();
        assert!((associated_legendre(2, 1, t).unwrap() - 3.0 * t * st).abs() < 1e-14);
        assert!((associated_legendre(2, 2, t).unwrap() - 3.0 * st * st).abs() < 1e-14);
        let p3 = 0.5 * (5.0 * t * t * t - 3.0 * t);
        assert!((associated_legendre(3, 0, t).unwrap() - p3).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_indices() {
        assert!(associated_legendre(1, 2, 0.0).is_err());
        assert!(associated_legendre(2, 1, 1.5).is_err());
    }

    #[test]
    fn orthogonality_p21_p31() {
        let (x, w) = gauss_legendre(40);
        let s: f64 = x
            .iter()
            .zip(&w)
            .map(|(&t, &wi)| {
                wi * associated_legendre(2, 1, t).unwrap() * associated_legendre(3, 1, t).unwrap()
            })
            .sum();
        assert!(s.abs() < 1e-10);
    }

    #[test]
    fn theta_derivative_matches_finite_difference() {
        let order = 9;
        let theta = 1.1;
        let step = 1e-6;
        let t0 = LegendreTable::new(order, theta);
        let tp = LegendreTable::new(order, theta + step);
        let tm = LegendreTable::new(order, theta - step);
        for l in 0..=order {
            for s in 0..=l {
                let fd = (tp.value(l, s) - tm.value(l, s)) / (2.0 * step);
                let scale = t0.value(l, s).abs().max(t0.dtheta(l, s).abs()).max(1.0);
                assert!((fd - t0.dtheta(l, s)).abs() < 1e-7 * scale, "l={l} s={s}");
            }
        }
    }
}
