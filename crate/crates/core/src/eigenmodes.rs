//! Herglotz kernels approximating interior Neumann eigenfunctions.
//!
//! A kernel `g` on the incident-direction grid defines the entire Helmholtz
//! solution `v(x) = ∫ e^{ik x·d} g(d) ds(d)`, evaluated with the stored
//! quadrature. [`recover_kernel`] picks the `g` with the smallest penalized
//! far-field response among all kernels with `‖v‖_{L²(B)} = 1`.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::numerics::{
    bessel_j, derivative_zero, gauss_legendre, min_generalized_eigenpair_truncated, spherical_j,
    BesselFamily, ComplexMatrix, GridStructure, LegendreTable, QuadratureRule,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeRecoveryConfig {
    /// Weight of the `‖∇g‖²` penalty.
    pub beta: f64,
    /// Radius of the origin-centred ball carrying the normalization.
    pub ball_radius: f64,
    /// Gram eigenvalues below `eps_floor · λ_max` are discarded.
    pub eps_floor: f64,
}

impl Default for ModeRecoveryConfig {
    fn default() -> Self {
        Self {
            beta: 1e-2,
            ball_radius: 3.0,
            eps_floor: 1e-12,
        }
    }
}

impl ModeRecoveryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidInput(format!("beta must be >= 0, got {}", self.beta)));
        }
        if !(self.ball_radius > 0.0) || !self.ball_radius.is_finite() {
            return Err(Error::InvalidInput(format!(
                "ball radius must be > 0, got {}",
                self.ball_radius
            )));
        }
        if !(self.eps_floor >= 0.0 && self.eps_floor < 1.0) {
            return Err(Error::InvalidInput(format!(
                "eps floor must lie in [0, 1), got {}",
                self.eps_floor
            )));
        }
        Ok(())
    }
}

fn gram_entry(k: f64, rho: f64, radius: f64, dim: usize) -> f64 {
    let a = k * rho * radius;
    if dim == 2 {
        let j1_over_a = if a < 1e-8 { 0.5 - a * a / 16.0 } else { bessel_j(1, a) / a };
        2.0 * PI * radius * radius * j1_over_a
    } else if a < 1e-4 {
        4.0 * PI * radius.powi(3) / 3.0 * (1.0 - a * a / 10.0)
    } else {
        4.0 * PI * radius.powi(3) * spherical_j(1, a) / a
    }
}

/// `M(i, j) = w_i w_j ∫_B e^{ik x·(d_j − d_i)} dx`, so that `g* M g` is
/// `‖v_g‖²_{L²(B)}` for the ball `B` of the given radius about the origin.
pub fn gram_ball(k: f64, dirs: &QuadratureRule, radius: f64) -> Result<DMatrix<f64>> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput(format!("ball radius must be > 0, got {radius}")));
    }
    if !(k > 0.0) {
        return Err(Error::InvalidInput(format!("wavenumber must be > 0, got {k}")));
    }
    let n = dirs.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let di = dirs.nodes[i];
        for j in 0..=i {
            let dj = dirs.nodes[j];
            let rho = ((di[0] - dj[0]).powi(2) + (di[1] - dj[1]).powi(2) + (di[2] - dj[2]).powi(2)).sqrt();
            let v = dirs.weights[i] * dirs.weights[j] * gram_entry(k, rho, radius, dirs.dim);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("Gram matrix"));
    }
    let min_diag = m.diagonal().min();
    if !(min_diag > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(m)
}

/// Spectral derivative matrix on `n` equispaced periodic nodes.
fn periodic_diff(n: usize) -> DMatrix<f64> {
    let h = 2.0 * PI / n as f64;
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            return 0.0;
        }
        let sign = if (i + n - j) % 2 == 0 { 1.0 } else { -1.0 };
        let x = 0.5 * h * (i as f64 - j as f64);
        if n % 2 == 0 {
            0.5 * sign / x.tan()
        } else {
            0.5 * sign / x.sin()
        }
    })
}

/// Quadratic form `D` with `g* D g ≈ ‖∇g‖²` on the direction sphere.
///
/// Uniform circle grids use spectral differentiation; tensor sphere grids use
/// second-order finite differences for `∂_θ` (reflecting through the poles)
/// and `∂_φ / sin θ`.
pub fn penalty_matrix(dirs: &QuadratureRule) -> Result<DMatrix<f64>> {
    match &dirs.structure {
        GridStructure::Circle { n } => {
            let d = periodic_diff(*n);
            let w = DMatrix::from_diagonal(&DVector::from_column_slice(&dirs.weights));
            Ok(d.transpose() * w * d)
        }
        GridStructure::Tensor { thetas, n_phi } => penalty_tensor(thetas, *n_phi, &dirs.weights),
        GridStructure::Unstructured => Err(Error::InvalidInput(
            "gradient penalty needs a uniform circle or tensor sphere grid".into(),
        )),
    }
}

fn penalty_tensor(thetas: &[f64], n_phi: usize, weights: &[f64]) -> Result<DMatrix<f64>> {
    let nt = thetas.len();
    if nt < 2 || n_phi < 4 || n_phi % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "tensor penalty needs >= 2 polar rows and an even azimuth count >= 4, got {nt}x{n_phi}"
        )));
    }
    let n = nt * n_phi;
    let idx = |t: usize, q: usize| t * n_phi + q % n_phi;
    let half = n_phi / 2;
    let mut dt = DMatrix::zeros(n, n);
    let mut dp = DMatrix::zeros(n, n);
    let dphi = 2.0 * PI / n_phi as f64;
    for t in 0..nt {
        let st = thetas[t].sin();
        // Neighbours in θ; across a pole the row continues at φ + π.
        let (tm, cm, qm_shift) = if t == 0 { (-thetas[0], 0, half) } else { (thetas[t - 1], t - 1, 0) };
        let (tp, cp, qp_shift) = if t + 1 == nt {
            (2.0 * PI - thetas[t], t, half)
        } else {
            (thetas[t + 1], t + 1, 0)
        };
        let h1 = thetas[t] - tm;
        let h2 = tp - thetas[t];
        let (cmw, c0w, cpw) = (-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2)));
        for q in 0..n_phi {
            let row = idx(t, q);
            dt[(row, idx(cm, q + qm_shift))] += cmw;
            dt[(row, row)] += c0w;
            dt[(row, idx(cp, q + qp_shift))] += cpw;
            dp[(row, idx(t, q + 1))] += 0.5 / (dphi * st);
            dp[(row, idx(t, q + n_phi - 1))] -= 0.5 / (dphi * st);
        }
    }
    let w = DMatrix::from_diagonal(&DVector::from_column_slice(weights));
    Ok(dt.transpose() * &w * dt + dp.transpose() * &w * dp)
}

/// A Herglotz kernel together with the data it was recovered from.
#[derive(Debug, Clone, PartialEq)]
pub struct HerglotzKernel {
    pub k: f64,
    pub dim: usize,
    pub directions: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub values: Vec<Complex64>,
    pub beta: f64,
    pub ball_radius: f64,
    /// Minimal generalized eigenvalue of the recovery problem.
    pub objective: f64,
    /// `‖F g‖_{L²}` at unit `‖v‖_{L²(B)}`.
    pub far_field_residual: f64,
    /// Fraction of `‖v‖²_{L²(D)}` in an analytic eigenspace, when known.
    pub capture: Option<f64>,
}

/// Value, gradient and Hessian of a Herglotz wave at one point. In 2D the
/// third components are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HerglotzJet {
    pub value: Complex64,
    pub grad: Vector3<Complex64>,
    pub hess: Matrix3<Complex64>,
}

fn pad(x: &[f64]) -> [f64; 3] {
    let mut p = [0.0; 3];
    for (a, b) in p.iter_mut().zip(x) {
        *a = *b;
    }
    p
}

impl HerglotzKernel {
    /// Builds a kernel from raw values on a direction rule; objective and
    /// residual are left at zero.
    pub fn from_values(k: f64, dirs: &QuadratureRule, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != dirs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} kernel values for {} directions",
                values.len(),
                dirs.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("Herglotz kernel"));
        }
        Ok(Self {
            k,
            dim: dirs.dim,
            directions: dirs.nodes.clone(),
            weights: dirs.weights.clone(),
            values,
            beta: 0.0,
            ball_radius: ModeRecoveryConfig::default().ball_radius,
            objective: 0.0,
            far_field_residual: 0.0,
            capture: None,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.values)
    }

    pub fn rule(&self) -> QuadratureRule {
        QuadratureRule {
            dim: self.dim,
            nodes: self.directions.clone(),
            weights: self.weights.clone(),
            structure: GridStructure::Unstructured,
        }
    }

    fn terms(&self, x: &[f64]) -> impl Iterator<Item = ([f64; 3], Complex64)> + '_ {
        let p = pad(x);
        let k = self.k;
        self.directions
            .iter()
            .zip(&self.weights)
            .zip(&self.values)
            .map(move |((d, w), g)| {
                let phase = k * (p[0] * d[0] + p[1] * d[1] + p[2] * d[2]);
                (*d, Complex64::from_polar(*w, phase) * g)
            })
    }

    pub fn value(&self, x: &[f64]) -> Complex64 {
        self.terms(x).map(|(_, t)| t).sum()
    }

    pub fn grad(&self, x: &[f64]) -> Vector3<Complex64> {
        let mut s = Vector3::zeros();
        for (d, t) in self.terms(x) {
            for a in 0..3 {
                s[a] += t * d[a];
            }
        }
        s * Complex64::new(0.0, self.k)
    }

    pub fn hess(&self, x: &[f64]) -> Matrix3<Complex64> {
        self.jet(x).hess
    }

    pub fn jet(&self, x: &[f64]) -> HerglotzJet {
        let mut value = Complex64::new(0.0, 0.0);
        let mut g = Vector3::zeros();
        let mut h = Matrix3::zeros();
        for (d, t) in self.terms(x) {
            value += t;
            for a in 0..3 {
                g[a] += t * d[a];
                for b in 0..3 {
                    h[(a, b)] += t * (d[a] * d[b]);
                }
            }
        }
        HerglotzJet {
            value,
            grad: g * Complex64::new(0.0, self.k),
            hess: h * Complex64::new(-self.k * self.k, 0.0),
        }
    }

    /// `g* M g` with the Gram matrix of the stored ball radius.
    pub fn ball_norm_sq(&self) -> Result<f64> {
        let m = gram_ball(self.k, &self.rule(), self.ball_radius)?;
        let g = self.vector();
        Ok((g.adjoint() * m.map(|v| Complex64::new(v, 0.0)) * &g)[(0, 0)].re)
    }

    pub fn to_document(&self) -> KernelDocument {
        KernelDocument {
            k: self.k,
            dimension: self.dim,
            directions: self.directions.iter().map(|d| d[..self.dim].to_vec()).collect(),
            weights: self.weights.clone(),
            re: self.values.iter().map(|v| v.re).collect(),
            im: self.values.iter().map(|v| v.im).collect(),
            beta: self.beta,
            ball_radius: self.ball_radius,
            objective: self.objective,
            far_field_residual: self.far_field_residual,
            capture: self.capture,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<KernelDocument>(text)?.into_kernel()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk form of a [`HerglotzKernel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDocument {
    pub k: f64,
    pub dimension: usize,
    pub directions: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub beta: f64,
    #[serde(rename = "R_B")]
    pub ball_radius: f64,
    #[serde(default)]
    pub objective: f64,
    #[serde(default)]
    pub far_field_residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capture: Option<f64>,
}

impl KernelDocument {
    pub fn into_kernel(self) -> Result<HerglotzKernel> {
        let n = self.weights.len();
        if !(self.dimension == 2 || self.dimension == 3) {
            return Err(Error::InvalidInput(format!("dimension must be 2 or 3, got {}", self.dimension)));
        }
        if self.directions.len() != n || self.re.len() != n || self.im.len() != n {
            return Err(Error::DimensionMismatch("kernel arrays have different lengths".into()));
        }
        if self.directions.iter().any(|d| d.len() != self.dimension) {
            return Err(Error::DimensionMismatch("direction length differs from dimension".into()));
        }
        let values: Vec<Complex64> = self.re.iter().zip(&self.im).map(|(a, b)| Complex64::new(*a, *b)).collect();
        if !values.iter().all(|v| v.is_finite()) || !(self.k > 0.0) {
            return Err(Error::NonFinite("kernel document"));
        }
        Ok(HerglotzKernel {
            k: self.k,
            dim: self.dimension,
            directions: self.directions.iter().map(|d| pad(d)).collect(),
            weights: self.weights,
            values,
            beta: self.beta,
            ball_radius: self.ball_radius,
            objective: self.objective,
            far_field_residual: self.far_field_residual,
            capture: self.capture,
        })
    }
}

/// Minimizes `‖F g‖² + β ‖∇g‖²` over `‖v_g‖_{L²(B)} = 1`, where `F` is the
/// far-field matrix `u` (observation × incidence) at wavenumber `k`.
pub fn recover_kernel(
    u: &ComplexMatrix,
    k: f64,
    obs: &QuadratureRule,
    inc: &QuadratureRule,
    config: &ModeRecoveryConfig,
) -> Result<HerglotzKernel> {
    config.validate()?;
    if u.nrows() != obs.len() || u.ncols() != inc.len() {
        return Err(Error::DimensionMismatch(format!(
            "far-field matrix is {}x{}, grids have {} and {} directions",
            u.nrows(),
            u.ncols(),
            obs.len(),
            inc.len()
        )));
    }
    let mut f = u.clone();
    for (j, w) in inc.weights.iter().enumerate() {
        f.column_mut(j).scale_mut(*w);
    }
    let mut wf = f.clone();
    for (i, w) in obs.weights.iter().enumerate() {
        wf.row_mut(i).scale_mut(*w);
    }
    let fwf = f.ad_mul(&wf);
    let penalty = if config.beta > 0.0 {
        penalty_matrix(inc)?.map(|v| Complex64::new(config.beta * v, 0.0))
    } else {
        ComplexMatrix::zeros(inc.len(), inc.len())
    };
    let a = fwf.clone() + penalty;
    let m = gram_ball(k, inc, config.ball_radius)?.map(|v| Complex64::new(v, 0.0));
    let pair = min_generalized_eigenpair_truncated(&a, &m, config.eps_floor)?;
    let g = pair.vector;
    let residual = (g.adjoint() * &fwf * &g)[(0, 0)].re.max(0.0).sqrt();
    let mut kernel = HerglotzKernel::from_values(k, inc, g.iter().copied().collect())?;
    kernel.beta = config.beta;
    kernel.ball_radius = config.ball_radius;
    kernel.objective = pair.value;
    kernel.far_field_residual = residual;
    Ok(kernel)
}

/// Nearest Neumann eigenvalue of the origin-centred disc or ball of radius
/// `radius` to `k`, as `(order n, eigenvalue)`.
pub fn nearest_ball_eigenvalue(dim: usize, radius: f64, k: f64) -> Result<(usize, f64)> {
    let family = if dim == 2 { BesselFamily::Cylindrical } else { BesselFamily::Spherical };
    let mut best = (0, f64::INFINITY);
    for n in 0..=16 {
        for idx in 1..=6 {
            let z = derivative_zero(family, n, idx)? / radius;
            if (z - k).abs() < (best.1 - k).abs() {
                best = (n, z);
            }
            if z > k + 2.0 {
                break;
            }
        }
    }
    Ok(best)
}

/// Fraction of `‖v‖²_{L²(D)}` lying in the order-`n` Neumann eigenspace of
/// the disc or ball `D` of radius `radius` about the origin, using `J_n(kr)`
/// (or `j_n(kr)`) times all angular harmonics of degree `n`.
pub fn ball_eigenspace_capture(kernel: &HerglotzKernel, radius: f64, order: usize) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput(format!("radius must be > 0, got {radius}")));
    }
    let k = kernel.k;
    let (rs, rw) = gauss_legendre(40);
    let mut points = Vec::new();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let n_basis = if kernel.dim == 2 {
        if order == 0 { 1 } else { 2 }
    } else {
        2 * order + 1
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    if kernel.dim == 2 {
        let nt = 4 * order + 64;
        for (x, w) in rs.iter().zip(&rw) {
            let r = 0.5 * radius * (x + 1.0);
            let radial = bessel_j(order, k * r);
            for q in 0..nt {
                let t = 2.0 * PI * q as f64 / nt as f64;
                let wt = 0.5 * radius * w * r * 2.0 * PI / nt as f64;
                points.push(([r * t.cos(), r * t.sin(), 0.0], wt));
                let mut row = vec![radial * (order as f64 * t).cos()];
                if order > 0 {
                    row.push(radial * (order as f64 * t).sin());
                }
                rows.push(row);
            }
        }
    } else {
        let (cs, cw) = gauss_legendre(order + 24);
        let np = 2 * order + 48;
        for (x, w) in rs.iter().zip(&rw) {
            let r = 0.5 * radius * (x + 1.0);
            let radial = spherical_j(order, k * r);
            for (c, wc) in cs.iter().zip(&cw) {
                let theta = c.acos();
                let table = LegendreTable::new(order, theta);
                let st = theta.sin();
                for q in 0..np {
                    let phi = 2.0 * PI * q as f64 / np as f64;
                    let wt = 0.5 * radius * w * r * r * wc * 2.0 * PI / np as f64;
                    points.push(([r * st * phi.cos(), r * st * phi.sin(), r * c], wt));
                    let mut row = vec![radial * table.value(order, 0)];
                    for s in 1..=order {
                        let p = radial * table.value(order, s);
                        row.push(p * (s as f64 * phi).cos());
                        row.push(p * (s as f64 * phi).sin());
                    }
                    rows.push(row);
                }
            }
        }
    }
    for b in 0..n_basis {
        basis.push(rows.iter().map(|r| r[b]).collect());
    }
    let v: Vec<Complex64> = points.iter().map(|(p, _)| kernel.value(p)).collect();
    let total: f64 = v.iter().zip(&points).map(|(v, (_, w))| w * v.norm_sqr()).sum();
    if !(total > 0.0) {
        return Err(Error::SolveFailed("Herglotz wave vanishes on the domain".into()));
    }
    let gram = DMatrix::from_fn(n_basis, n_basis, |a, b| {
        points.iter().enumerate().map(|(i, (_, w))| w * basis[a][i] * basis[b][i]).sum::<f64>()
    });
    let proj = DVector::from_fn(n_basis, |a, _| {
        points
            .iter()
            .enumerate()
            .map(|(i, (_, w))| v[i] * (w * basis[a][i]))
            .sum::<Complex64>()
    });
    let chol = gram.cholesky().ok_or(Error::NotPositiveDefinite)?;
    let (re, im) = (proj.map(|c| c.re), proj.map(|c| c.im));
    let captured = re.dot(&chol.solve(&re)) + im.dot(&chol.solve(&im));
    Ok(captured / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::disc_series;
    use crate::numerics::{circle_rule, sphere_rule};
    use nalgebra::Vector2;
    use proptest::prelude::*;

    fn polar_oracle_2d(k: f64, xi: [f64; 2], radius: f64) -> Complex64 {
        let (x, w) = gauss_legendre(60);
        let nt = 256;
        let mut s = Complex64::new(0.0, 0.0);
        for (xr, wr) in x.iter().zip(&w) {
            let r = 0.5 * radius * (xr + 1.0);
            for q in 0..nt {
                let t = 2.0 * PI * q as f64 / nt as f64;
                let phase = k * r * (t.cos() * xi[0] + t.sin() * xi[1]);
                s += Complex64::from_polar(0.5 * radius * wr * r * 2.0 * PI / nt as f64, phase);
            }
        }
        s
    }

    #[test]
    fn gram_diagonal_is_the_area() {
        let r = circle_rule(16).unwrap();
        let m = gram_ball(2.0, &r, 3.0).unwrap();
        let w = r.weights[0];
        assert!((m[(0, 0)] / (w * w) - 9.0 * PI).abs() < 1e-12);
        assert!((m.clone() - m.transpose()).abs().max() == 0.0);
    }

    #[test]
    fn gram_matches_volume_quadrature_2d() {
        let r = circle_rule(8).unwrap();
        let m = gram_ball(2.0, &r, 3.0).unwrap();
        let (i, j) = (0, 3);
        let xi = [r.nodes[i][0] - r.nodes[j][0], r.nodes[i][1] - r.nodes[j][1]];
        let oracle = polar_oracle_2d(2.0, xi, 3.0);
        let entry = m[(i, j)] / (r.weights[i] * r.weights[j]);
        assert!(oracle.im.abs() < 1e-10);
        assert!((entry - oracle.re).abs() <= 1e-8 * oracle.re.abs(), "{entry} {oracle}");
    }

    #[test]
    fn gram_matches_volume_quadrature_3d() {
        let r = sphere_rule(3, 6).unwrap();
        let m = gram_ball(1.7, &r, 2.0).unwrap();
        let (i, j) = (1, 10);
        let xi: Vec<f64> = (0..3).map(|a| r.nodes[i][a] - r.nodes[j][a]).collect();
        let (x, w) = gauss_legendre(50);
        let (c, wc) = gauss_legendre(50);
        let np = 100;
        let mut s = Complex64::new(0.0, 0.0);
        for (xr, wr) in x.iter().zip(&w) {
            let rr = xr + 1.0;
            for (ct, wt) in c.iter().zip(&wc) {
                let st = (1.0 - ct * ct).sqrt();
                for q in 0..np {
                    let p = 2.0 * PI * q as f64 / np as f64;
                    let y = [rr * st * p.cos(), rr * st * p.sin(), rr * ct];
                    let phase = 1.7 * (y[0] * xi[0] + y[1] * xi[1] + y[2] * xi[2]);
                    s += Complex64::from_polar(wr * rr * rr * wt * 2.0 * PI / np as f64, phase);
                }
            }
        }
        let entry = m[(i, j)] / (r.weights[i] * r.weights[j]);
        assert!((entry - s.re).abs() <= 1e-8 * s.re.abs(), "{entry} {s}");
        let diag = m[(0, 0)] / (r.weights[0] * r.weights[0]);
        assert!((diag - 4.0 * PI * 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn gram_rejects_bad_radius() {
        let r = circle_rule(8).unwrap();
        assert!(gram_ball(1.0, &r, 0.0).is_err());
        assert!(gram_ball(1.0, &r, -1.0).is_err());
    }

    #[test]
    fn penalty_examples_on_the_circle() {
        let r = circle_rule(64).unwrap();
        let d = penalty_matrix(&r).unwrap().map(|v| Complex64::new(v, 0.0));
        let c = DVector::from_element(64, Complex64::new(0.7, -0.2));
        assert!((c.adjoint() * &d * &c)[(0, 0)].norm() < 1e-12);
        let e = DVector::from_fn(64, |j, _| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / 64.0));
        let q = (e.adjoint() * &d * &e)[(0, 0)];
        assert!((q.re - 2.0 * PI).abs() < 1e-10 && q.im.abs() < 1e-10);
        let ev = nalgebra::SymmetricEigen::new(penalty_matrix(&r).unwrap()).eigenvalues;
        assert!(ev.min() >= -1e-12);
    }

    #[test]
    fn penalty_on_the_sphere() {
        let r = sphere_rule(12, 24).unwrap();
        let d = penalty_matrix(&r).unwrap();
        let ones = DVector::from_element(r.len(), 1.0);
        assert!((ones.transpose() * &d * &ones)[(0, 0)].abs() < 1e-10);
        // ∫ |∇_S z|² = ∫ sin² θ = 8π/3.
        let z = DVector::from_fn(r.len(), |i, _| r.nodes[i][2]);
        let q = (z.transpose() * &d * &z)[(0, 0)];
        assert!((q - 8.0 * PI / 3.0).abs() < 0.05 * 8.0 * PI / 3.0, "{q}");
        let finer = sphere_rule(24, 48).unwrap();
        let df = penalty_matrix(&finer).unwrap();
        let zf = DVector::from_fn(finer.len(), |i, _| finer.nodes[i][2]);
        let qf = (zf.transpose() * &df * &zf)[(0, 0)];
        assert!((qf - 8.0 * PI / 3.0).abs() < (q - 8.0 * PI / 3.0).abs());
        let ev = nalgebra::SymmetricEigen::new(d).eigenvalues;
        assert!(ev.min() >= -1e-10 * ev.max());
    }

    #[test]
    fn penalty_needs_structure() {
        let r = crate::numerics::fibonacci_sphere(20).unwrap();
        assert!(penalty_matrix(&r).is_err());
    }

    fn ones_kernel(k: f64, n: usize) -> HerglotzKernel {
        let r = circle_rule(n).unwrap();
        HerglotzKernel::from_values(k, &r, vec![Complex64::new(1.0, 0.0); n]).unwrap()
    }

    #[test]
    fn constant_kernel_is_a_bessel_function() {
        let g = ones_kernel(2.0, 64);
        for &rad in &[0.0, 0.7, 1.9] {
            let x = [rad * 0.6, rad * 0.8];
            let v = g.value(&x);
            assert!((v - 2.0 * PI * bessel_j(0, 2.0 * rad)).norm() < 1e-10);
        }
        assert!(g.grad(&[0.0, 0.0]).iter().all(|c| c.norm() < 1e-13));
        let h = g.hess(&[0.0, 0.0]);
        for a in 0..2 {
            for b in 0..2 {
                let expect = if a == b { -4.0 * PI } else { 0.0 };
                assert!((h[(a, b)] - expect).norm() < 1e-12);
            }
        }
    }

    fn random_kernel(seed: u64, dim: usize) -> HerglotzKernel {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let r = if dim == 2 { circle_rule(24).unwrap() } else { sphere_rule(5, 10).unwrap() };
        let vals = (0..r.len())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        HerglotzKernel::from_values(rng.random_range(0.5..4.0), &r, vals).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn helmholtz_identity(seed in any::<u64>(), dim in 2usize..4, x in prop::array::uniform3(-2.0f64..2.0)) {
            let g = random_kernel(seed, dim);
            let jet = g.jet(&x[..dim]);
            let scale: f64 = g.values.iter().zip(&g.weights).map(|(v, w)| v.norm() * w).sum::<f64>() * g.k * g.k;
            let lhs = jet.hess.trace() + jet.value * (g.k * g.k);
            prop_assert!(lhs.norm() <= 1e-12 * scale, "{}", lhs.norm() / scale);
            for a in 0..3 {
                for b in 0..3 {
                    prop_assert_eq!(jet.hess[(a, b)], jet.hess[(b, a)]);
                }
            }
        }

        #[test]
        fn derivatives_match_finite_differences(seed in any::<u64>(), dim in 2usize..4, x in prop::array::uniform3(-1.5f64..1.5)) {
            let g = random_kernel(seed, dim);
            let p = &x[..dim];
            let h = 1e-6;
            let jet = g.jet(p);
            let gscale = jet.grad.iter().map(|c| c.norm()).fold(0.0, f64::max).max(g.value(p).norm()).max(1.0);
            let hscale = jet.hess.iter().map(|c| c.norm()).fold(0.0, f64::max).max(gscale);
            for a in 0..dim {
                let mut xp = p.to_vec();
                let mut xm = p.to_vec();
                xp[a] += h;
                xm[a] -= h;
                let fd = (g.value(&xp) - g.value(&xm)) / (2.0 * h);
                prop_assert!((fd - jet.grad[a]).norm() <= 1e-8 * gscale);
                let gp = g.grad(&xp);
                let gm = g.grad(&xm);
                for b in 0..dim {
                    let fd = (gp[b] - gm[b]) / (2.0 * h);
                    prop_assert!((fd - jet.hess[(a, b)]).norm() <= 1e-8 * hscale);
                }
            }
        }
    }

    fn disc_matrix(k: f64, n: usize) -> (ComplexMatrix, QuadratureRule) {
        let r = circle_rule(n).unwrap();
        let pts: Vec<Vector2<f64>> = (0..n).map(|i| r.node2(i)).collect();
        let nt = (k + 30.0) as usize;
        (disc_series(1.0, k, &pts, &pts, nt).unwrap(), r)
    }

    fn recover_disc(k: f64, config: &ModeRecoveryConfig) -> HerglotzKernel {
        let (u, r) = disc_matrix(k, 64);
        recover_kernel(&u, k, &r, &r, config).unwrap()
    }

    #[test]
    fn disc_mode_is_recovered() {
        let cfg = ModeRecoveryConfig::default();
        let at = recover_disc(1.841184, &cfg);
        let off = recover_disc(2.45, &cfg);
        assert!(at.far_field_residual < off.far_field_residual / 20.0, "{} {}", at.far_field_residual, off.far_field_residual);
        let cap = ball_eigenspace_capture(&at, 1.0, 1).unwrap();
        assert!(cap >= 0.95, "capture {cap}");
        assert!((at.ball_norm_sq().unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn objective_dips_at_eigenvalues() {
        let cfg = ModeRecoveryConfig::default();
        for (eig, mid) in [(1.841184, 2.447711), (3.054237, 3.442972), (3.831706, 4.016448)] {
            let a = recover_disc(eig, &cfg).objective;
            let b = recover_disc(mid, &cfg).objective;
            assert!(a < b, "{eig}: {a} vs {b}");
        }
    }

    #[test]
    fn huge_penalty_selects_constants() {
        let cfg = ModeRecoveryConfig { beta: 1e6, ..Default::default() };
        let g = recover_disc(1.841184, &cfg).vector();
        let ones = DVector::from_element(g.len(), Complex64::new(1.0, 0.0));
        let cos = (ones.dotc(&g)).norm() / (ones.norm() * g.norm());
        assert!(cos.min(1.0).acos() < 0.1, "{}", cos.acos());
    }

    #[test]
    fn relabeling_the_grid_relabels_the_kernel() {
        let k = 3.831706;
        let cfg = ModeRecoveryConfig::default();
        let (u, r) = disc_matrix(k, 64);
        let a = recover_kernel(&u, k, &r, &r, &cfg).unwrap().vector();
        let s = 11;
        let mut rot = r.clone();
        rot.nodes.rotate_left(s);
        rot.weights.rotate_left(s);
        rot.structure = GridStructure::Circle { n: 64 };
        let ur = ComplexMatrix::from_fn(64, 64, |i, j| u[((i + s) % 64, (j + s) % 64)]);
        let b = recover_kernel(&ur, k, &rot, &rot, &cfg).unwrap().vector();
        let back = DVector::from_fn(64, |i, _| b[(i + 64 - s) % 64]);
        let overlap = a.dotc(&back).norm() / (a.norm() * back.norm());
        assert!((1.0 - overlap).abs() < 1e-8, "{overlap}");
        assert!((a.norm() - back.norm()).abs() < 1e-8 * a.norm());
    }

    #[test]
    fn exact_eigenfunction_kernel_is_captured() {
        // g(d) = cos(angle d) generates 2πi J_1(k|x|) cos θ.
        let r = circle_rule(64).unwrap();
        let vals = r.nodes.iter().map(|d| Complex64::new(d[0], 0.0)).collect();
        let g = HerglotzKernel::from_values(1.841184, &r, vals).unwrap();
        assert!((ball_eigenspace_capture(&g, 1.0, 1).unwrap() - 1.0).abs() < 1e-10);
        assert!(ball_eigenspace_capture(&g, 1.0, 2).unwrap() < 1e-10);
        let x = [0.3, 0.4];
        let expect = Complex64::new(0.0, 2.0 * PI * bessel_j(1, 1.841184 * 0.5) * 0.6);
        assert!((g.value(&x) - expect).norm() < 1e-12);
    }

    #[test]
    fn ball_capture_for_a_spherical_harmonic_kernel() {
        // g(d) = d_z generates 4πi j_1(k|x|) cos θ.
        let r = sphere_rule(8, 16).unwrap();
        let vals = r.nodes.iter().map(|d| Complex64::new(d[2], 0.0)).collect();
        let g = HerglotzKernel::from_values(2.081576, &r, vals).unwrap();
        assert!((ball_eigenspace_capture(&g, 1.0, 1).unwrap() - 1.0).abs() < 1e-10);
        let x = [0.1, -0.2, 0.3];
        let rr: f64 = (0.01f64 + 0.04 + 0.09).sqrt();
        let expect = Complex64::new(0.0, 4.0 * PI * spherical_j(1, 2.081576 * rr) * 0.3 / rr);
        assert!((g.value(&x) - expect).norm() < 1e-12);
    }

    #[test]
    fn nearest_eigenvalue_lookup() {
        assert_eq!(nearest_ball_eigenvalue(2, 1.0, 1.85).unwrap().0, 1);
        assert_eq!(nearest_ball_eigenvalue(2, 1.0, 3.8).unwrap().0, 0);
        assert_eq!(nearest_ball_eigenvalue(3, 1.0, 2.08).unwrap().0, 1);
        let (n, z) = nearest_ball_eigenvalue(2, 2.0, 1.841184 / 2.0).unwrap();
        assert_eq!(n, 1);
        assert!((z - 0.920592).abs() < 1e-6);
    }

    #[test]
    fn kernel_json_round_trip() {
        let mut g = random_kernel(5, 3);
        g.beta = 0.01;
        g.capture = Some(0.97);
        let back = HerglotzKernel::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(back, g);
        let text = g.to_json().unwrap();
        assert!(text.contains("\"R_B\""));
        let bad = text.replace("\"dimension\": 3", "\"dimension\": 4");
        assert!(HerglotzKernel::from_json(&bad).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ModeRecoveryConfig { ball_radius: 0.0, ..Default::default() }.validate().is_err());
        assert!(ModeRecoveryConfig { beta: -1.0, ..Default::default() }.validate().is_err());
        assert!(ModeRecoveryConfig::default().validate().is_ok());
    }
}
