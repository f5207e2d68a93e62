//! Quadrature rules on S¹ and S².

use std::f64::consts::PI;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How the nodes of a rule are laid out; structured grids admit
/// finite-difference surface gradients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridStructure {
    /// `n` equispaced angles `2πj/n` on the circle.
    Circle { n: usize },
    /// Row-major tensor grid, θ outer and φ inner, φ equispaced from 0.
    Tensor { thetas: Vec<f64>, n_phi: usize },
    Unstructured,
}

/// Nodes on `S^{m-1}` (2D nodes carry a zero third coordinate) with positive
/// weights summing to the measure of the sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub dim: usize,
    pub nodes: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub structure: GridStructure,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node2(&self, i: usize) -> Vector2<f64> {
        let n = self.nodes[i];
        Vector2::new(n[0], n[1])
    }

    pub fn node3(&self, i: usize) -> Vector3<f64> {
        Vector3::from(self.nodes[i])
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Integrates `f` over the sphere with this rule.
    pub fn integrate<F: Fn([f64; 3]) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&n, &w)| w * f(n))
            .sum()
    }
}

/// Uniform trapezoid rule on S¹: nodes at angles `2πj/n`, weights `2π/n`.
pub fn circle_rule(n: usize) -> Result<QuadratureRule> {
    if n < 4 {
        return Err(Error::InvalidInput(format!("circle rule needs n >= 4, got {n}")));
    }
    let nodes = (0..n)
        .map(|j| {
            let phi = 2.0 * PI * j as f64 / n as f64;
            [phi.cos(), phi.sin(), 0.0]
        })
        .collect();
    Ok(QuadratureRule {
        dim: 2,
        nodes,
        weights: vec![2.0 * PI / n as f64; n],
        structure: GridStructure::Circle { n },
    })
}

/// Gauss–Legendre nodes and weights on [−1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Gauss–Legendre in `cos θ` times uniform φ on S². Nodes are ordered with θ
/// ascending (outer) and φ = 2πq/n_phi (inner).
pub fn sphere_rule(n_theta: usize, n_phi: usize) -> Result<QuadratureRule> {
    if n_theta < 2 || n_phi < 4 {
        return Err(Error::InvalidInput(format!(
            "sphere rule needs n_theta >= 2 and n_phi >= 4, got {n_theta}x{n_phi}"
        )));
    }
    let (t, wt) = gauss_legendre(n_theta);
    // θ ascending means cos θ descending.
    let thetas: Vec<f64> = t.iter().rev().map(|c| c.acos()).collect();
    let wts: Vec<f64> = wt.iter().rev().copied().collect();
    let dphi = 2.0 * PI / n_phi as f64;
    let mut nodes = Vec::with_capacity(n_theta * n_phi);
    let mut weights = Vec::with_capacity(n_theta * n_phi);
    for (theta, w) in thetas.iter().zip(&wts) {
        let (st, ct) = theta.sin_cos();
        for q in 0..n_phi {
            let phi = dphi * q as f64;
            nodes.push([st * phi.cos(), st * phi.sin(), ct]);
            weights.push(w * dphi);
        }
    }
    Ok(QuadratureRule {
        dim: 3,
        nodes,
        weights,
        structure: GridStructure::Tensor { thetas, n_phi },
    })
}

/// `n` pseudo-uniform points on S² along a Fibonacci spiral, equal weights.
pub fn fibonacci_sphere(n: usize) -> Result<QuadratureRule> {
    if n < 4 {
        return Err(Error::InvalidInput(format!("fibonacci sphere needs n >= 4, got {n}")));
    }
    let golden = PI * (3.0 - 5f64.sqrt());
    let nodes = (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            [rho * phi.cos(), rho * phi.sin(), z]
        })
        .collect();
    Ok(QuadratureRule {
        dim: 3,
        nodes,
        weights: vec![4.0 * PI / n as f64; n],
        structure: GridStructure::Unstructured,
    })
}
