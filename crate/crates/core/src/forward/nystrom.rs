use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Dyn, Vector2, LU};
use num_complex::Complex64;
use rayon::prelude::*;

use super::BoundaryCondition;
use crate::geometry::Curve2D;
use crate::numerics::{cylinder_j01_y01, ComplexMatrix};
use crate::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// One plane-wave scattering problem on a curve.
#[derive(Clone)]
pub struct ScatteringProblem {
    pub curve: Arc<dyn Curve2D>,
    pub k: f64,
    pub condition: BoundaryCondition,
    pub direction: Vector2<f64>,
}

/// Factored combined-field boundary operator for one curve and wavenumber.
///
/// Sound-hard problems are solved for the total field on the boundary with
/// a Burton–Miller combination of the hypersingular and double-layer
/// equations; sound-soft problems for the total normal derivative with the
/// adjoint double layer coupled to the single layer. Both are uniquely
/// solvable for every `k > 0` when the coupling `η ≠ 0`.
pub struct NystromSolver {
    curve: Arc<dyn Curve2D>,
    k: f64,
    eta: f64,
    condition: BoundaryCondition,
    t: Vec<f64>,
    nodes: Vec<Vector2<f64>>,
    tangents: Vec<Vector2<f64>>,
    lu: LU<Complex64, Dyn, Dyn>,
    /// Hypersingular operator, kept for sound-hard normal traces.
    hypersingular: Option<ComplexMatrix>,
}

/// Kress weights `R_j^{(n)}(t_i)` for the logarithmic quadrature, indexed by
/// `|i − j| mod 2n`.
fn log_weights(n: usize) -> Vec<f64> {
    let nf = n as f64;
    (0..2 * n)
        .map(|d| {
            let s = PI * d as f64 / nf;
            let mut acc = 0.0;
            for m in 1..n {
                acc += (m as f64 * s).cos() / m as f64;
            }
            -2.0 * PI / nf * acc - PI / (nf * nf) * (nf * s).cos()
        })
        .collect()
}

/// Trigonometric differentiation matrix on `2n` equispaced nodes.
fn diff_matrix(n: usize) -> ComplexMatrix {
    let nn = 2 * n;
    ComplexMatrix::from_fn(nn, nn, |i, j| {
        if i == j {
            Complex64::new(0.0, 0.0)
        } else {
            let s = PI * (i as f64 - j as f64) / n as f64;
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            Complex64::new(0.5 * sign / (0.5 * s).tan(), 0.0)
        }
    })
}

struct Operators {
    /// Single layer without the line element: `∫ Φ φ dτ`.
    s_plain: ComplexMatrix,
    s: ComplexMatrix,
    s_nn: ComplexMatrix,
    k_dl: ComplexMatrix,
    k_adj: ComplexMatrix,
}

fn assemble(k: f64, n: usize, x: &[Vector2<f64>], dx: &[Vector2<f64>], ddx: &[Vector2<f64>]) -> Operators {
    let nn = 2 * n;
    let rw = log_weights(n);
    let h = PI / n as f64;
    let speed: Vec<f64> = dx.iter().map(|v| v.norm()).collect();
    let normal: Vec<Vector2<f64>> = dx.iter().map(|v| Vector2::new(v.y, -v.x)).collect();
    let zero = Complex64::new(0.0, 0.0);
    let mut s_plain = ComplexMatrix::from_element(nn, nn, zero);
    let mut k_dl = ComplexMatrix::from_element(nn, nn, zero);
    let mut k_adj = ComplexMatrix::from_element(nn, nn, zero);
    let inv4pi = 1.0 / (4.0 * PI);
    for i in 0..nn {
        let curv = (dx[i].y * ddx[i].x - dx[i].x * ddx[i].y) / (4.0 * PI * speed[i] * speed[i]);
        let phi2_diag = Complex64::new(
            -EULER_GAMMA / (2.0 * PI) - (0.5 * k * speed[i]).ln() / (2.0 * PI),
            0.25,
        );
        s_plain[(i, i)] = rw[0] * (-inv4pi) + h * phi2_diag;
        k_dl[(i, i)] = Complex64::new(h * curv, 0.0);
        k_adj[(i, i)] = Complex64::new(h * curv, 0.0);
        for j in (i + 1)..nn {
            let diff = x[i] - x[j];
            let r = diff.norm();
            let (j0, j1, y0, y1) = cylinder_j01_y01(k * r);
            let s = PI * (i as f64 - j as f64) / n as f64;
            let logterm = (4.0 * (0.5 * s).sin().powi(2)).ln();
            let rwij = rw[j - i];

            let phi = Complex64::new(-0.25 * y0, 0.25 * j0);
            let phi1 = -inv4pi * j0;
            let phi2 = phi - phi1 * logterm;
            let sv = rwij * phi1 + h * phi2;
            s_plain[(i, j)] = sv;
            s_plain[(j, i)] = sv;

            // (ik/4) H1(kr)/r and its logarithmic part.
            let kern = Complex64::new(-0.25 * k * y1, 0.25 * k * j1) / r;
            let kern1 = -k * inv4pi * j1 / r;
            // Double layer: N = ν̃(τ)·(x(t) − x(τ)).
            for &(a, b) in &[(i, j), (j, i)] {
                let d_ab = x[a] - x[b];
                let nd = normal[b].dot(&d_ab);
                let l = kern * nd;
                let l1 = kern1 * nd;
                k_dl[(a, b)] = rwij * l1 + h * (l - l1 * logterm);
                let na = -normal[a].dot(&d_ab) * speed[b] / speed[a];
                let l = kern * na;
                let l1 = kern1 * na;
                k_adj[(a, b)] = rwij * l1 + h * (l - l1 * logterm);
            }
        }
    }
    let mut s = s_plain.clone();
    let mut s_nn = s_plain.clone();
    for j in 0..nn {
        for i in 0..nn {
            s[(i, j)] *= speed[j];
            let nij = normal[i].dot(&normal[j]) / speed[i];
            s_nn[(i, j)] *= nij;
        }
    }
    Operators { s_plain, s, s_nn, k_dl, k_adj }
}

impl NystromSolver {
    /// Uses the coupling `η = k`.
    pub fn new(curve: Arc<dyn Curve2D>, k: f64, condition: BoundaryCondition, n_quad: usize) -> Result<Self> {
        Self::with_coupling(curve, k, condition, n_quad, k)
    }

    pub fn with_coupling(
        curve: Arc<dyn Curve2D>,
        k: f64,
        condition: BoundaryCondition,
        n_quad: usize,
        eta: f64,
    ) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidInput(format!("wavenumber must be positive, got {k}")));
        }
        if n_quad < 64 || n_quad % 2 != 0 {
            return Err(Error::InvalidInput(format!("n_quad must be even and >= 64, got {n_quad}")));
        }
        if !(eta != 0.0 && eta.is_finite()) {
            return Err(Error::InvalidInput("coupling parameter must be nonzero".into()));
        }
        let n = n_quad / 2;
        let t: Vec<f64> = (0..n_quad).map(|j| PI * j as f64 / n as f64).collect();
        let x: Vec<Vector2<f64>> = t.iter().map(|&s| curve.point(s)).collect();
        let dx: Vec<Vector2<f64>> = t.iter().map(|&s| curve.d1(s)).collect();
        let ddx: Vec<Vector2<f64>> = t.iter().map(|&s| curve.d2(s)).collect();
        let scale = x.iter().map(|p| p.norm()).fold(1.0, f64::max);
        for (p, v) in x.iter().chain(&dx).chain(&ddx).zip(0..) {
            if !(p.x.is_finite() && p.y.is_finite()) {
                return Err(Error::NonFinite(if v < n_quad { "curve point" } else { "curve derivative" }));
            }
        }
        if dx.iter().any(|v| v.norm() < 1e-12 * scale) {
            return Err(Error::DegenerateFrame("curve has a vanishing tangent".into()));
        }
        let ops = assemble(k, n, &x, &dx, &ddx);
        let ieta = Complex64::new(0.0, eta);
        let half = Complex64::new(0.5, 0.0);
        let (system, hypersingular) = match condition {
            BoundaryCondition::SoundHard => {
                let d = diff_matrix(n);
                let mut t_op = &d * &ops.s_plain * &d;
                for i in 0..n_quad {
                    let inv = 1.0 / dx[i].norm();
                    for j in 0..n_quad {
                        t_op[(i, j)] = t_op[(i, j)] * inv + k * k * ops.s_nn[(i, j)];
                    }
                }
                let mut a = -&ops.k_dl * ieta;
                a += &t_op;
                for i in 0..n_quad {
                    a[(i, i)] += ieta * half;
                }
                (a, Some(t_op))
            }
            BoundaryCondition::SoundSoft => {
                let mut a = ops.k_adj - ops.s * ieta;
                for i in 0..n_quad {
                    a[(i, i)] += half;
                }
                (a, None)
            }
        };
        if system.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("boundary operator"));
        }
        Ok(Self {
            curve,
            k,
            eta,
            condition,
            t,
            nodes: x,
            tangents: dx,
            lu: system.lu(),
            hypersingular,
        })
    }

    pub fn wavenumber(&self) -> f64 {
        self.k
    }

    pub fn coupling(&self) -> f64 {
        self.eta
    }

    pub fn condition(&self) -> BoundaryCondition {
        self.condition
    }

    pub fn n_quad(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Vector2<f64>] {
        &self.nodes
    }

    pub fn parameters(&self) -> &[f64] {
        &self.t
    }

    /// Boundary right-hand side for a plane wave `e^{ik x·d}`.
    fn rhs(&self, d: &Vector2<f64>) -> Vec<Complex64> {
        let ik = Complex64::new(0.0, self.k);
        let ieta = Complex64::new(0.0, self.eta);
        self.nodes
            .iter()
            .zip(&self.tangents)
            .map(|(x, dx)| {
                let ui = (ik * x.dot(d)).exp();
                let nu = Vector2::new(dx.y, -dx.x) / dx.norm();
                let dui = ik * nu.dot(d) * ui;
                match self.condition {
                    BoundaryCondition::SoundHard => -dui + ieta * ui,
                    BoundaryCondition::SoundSoft => dui - ieta * ui,
                }
            })
            .collect()
    }

    /// Boundary densities for several incident directions, one column each.
    pub fn densities(&self, inc: &[Vector2<f64>]) -> Result<ComplexMatrix> {
        for d in inc {
            if ((d.norm() - 1.0).abs()) > 1e-12 {
                return Err(Error::InvalidInput("incident directions must be unit vectors".into()));
            }
        }
        let nq = self.n_quad();
        let mut b = ComplexMatrix::zeros(nq, inc.len());
        for (j, d) in inc.iter().enumerate() {
            b.set_column(j, &nalgebra::DVector::from_vec(self.rhs(d)));
        }
        let x = self
            .lu
            .solve(&b)
            .ok_or_else(|| Error::SolveFailed("singular boundary operator".into()))?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolveFailed("non-finite boundary density".into()));
        }
        Ok(x)
    }

    /// Far-field weights: `u∞(x̂_i) = Σ_j E(i,j) density_j`.
    fn far_field_weights(&self, obs: &[Vector2<f64>]) -> ComplexMatrix {
        let n = self.n_quad() / 2;
        let k = self.k;
        let gamma = Complex64::from_polar(1.0, PI / 4.0) / (8.0 * PI * k).sqrt();
        let h = PI / n as f64;
        ComplexMatrix::from_fn(obs.len(), self.n_quad(), |i, j| {
            let xh = obs[i];
            let y = self.nodes[j];
            let dy = self.tangents[j];
            let phase = Complex64::from_polar(1.0, -k * xh.dot(&y));
            match self.condition {
                BoundaryCondition::SoundHard => {
                    let nt = Vector2::new(dy.y, -dy.x);
                    gamma * h * Complex64::new(0.0, -k) * xh.dot(&nt) * phase
                }
                BoundaryCondition::SoundSoft => -gamma * h * dy.norm() * phase,
            }
        })
    }

    /// `U(i,j) = u∞(x̂_i, d_j)`; incident directions are solved in parallel
    /// chunks against the shared factorization.
    pub fn far_field_matrix(&self, obs: &[Vector2<f64>], inc: &[Vector2<f64>]) -> Result<ComplexMatrix> {
        let e = self.far_field_weights(obs);
        let chunk = 16;
        let blocks: Vec<Result<ComplexMatrix>> = inc
            .par_chunks(chunk)
            .map(|dirs| Ok(&e * self.densities(dirs)?))
            .collect();
        let mut u = ComplexMatrix::zeros(obs.len(), inc.len());
        for (b, block) in blocks.into_iter().enumerate() {
            let block = block?;
            u.columns_mut(b * chunk, block.ncols()).copy_from(&block);
        }
        Ok(u)
    }

    /// Nearest curve parameter of a boundary point.
    fn locate(&self, p: &Vector2<f64>) -> Result<f64> {
        let (mut best, mut dist) = (0, f64::INFINITY);
        for (j, x) in self.nodes.iter().enumerate() {
            let d = (x - p).norm();
            if d < dist {
                best = j;
                dist = d;
            }
        }
        let mut t = self.t[best];
        for _ in 0..50 {
            let z = self.curve.point(t) - p;
            let d1 = self.curve.d1(t);
            let g = z.dot(&d1);
            let dg = d1.norm_squared() + z.dot(&self.curve.d2(t));
            if dg <= 0.0 {
                break;
            }
            let step = g / dg;
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let dist = (self.curve.point(t) - p).norm();
        if dist > 1e-10 {
            return Err(Error::NotOnBoundary(dist));
        }
        Ok(t.rem_euclid(2.0 * PI))
    }

    /// Trigonometric interpolation of nodal values at parameter `t`.
    fn interpolate(&self, values: &[Complex64], t: f64) -> Complex64 {
        let nn = values.len();
        let n = nn / 2;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, v) in values.iter().enumerate() {
            let s = t - self.t[j];
            let mut kern = 1.0 + (n as f64 * s).cos();
            for m in 1..n {
                kern += 2.0 * (m as f64 * s).cos();
            }
            acc += v * kern;
        }
        acc / nn as f64
    }
}

/// Solution of one scattering problem.
pub struct FarFieldEvaluator {
    solver: Arc<NystromSolver>,
    direction: Vector2<f64>,
    density: Vec<Complex64>,
}

impl FarFieldEvaluator {
    pub fn new(solver: Arc<NystromSolver>, direction: Vector2<f64>) -> Result<Self> {
        let density = solver.densities(&[direction])?.column(0).iter().copied().collect();
        Ok(Self { solver, direction, density })
    }

    pub fn solver(&self) -> &NystromSolver {
        &self.solver
    }

    pub fn direction(&self) -> Vector2<f64> {
        self.direction
    }

    /// Boundary density at the quadrature nodes: the total field for
    /// sound-hard problems, its normal derivative for sound-soft ones.
    pub fn density(&self) -> &[Complex64] {
        &self.density
    }

    pub fn far_field(&self, xhat: &Vector2<f64>) -> Complex64 {
        let e = self.solver.far_field_weights(std::slice::from_ref(xhat));
        e.row(0).iter().zip(&self.density).map(|(a, b)| a * b).sum()
    }

    pub fn far_field_many(&self, obs: &[Vector2<f64>]) -> Vec<Complex64> {
        obs.iter().map(|x| self.far_field(x)).collect()
    }

    /// `∂u^s/∂ν` at the quadrature nodes.
    fn nodal_trace(&self) -> Vec<Complex64> {
        let s = &self.solver;
        let ik = Complex64::new(0.0, s.k);
        match &s.hypersingular {
            Some(t) => {
                let u = nalgebra::DVector::from_column_slice(&self.density);
                (t * u).iter().copied().collect()
            }
            None => s
                .nodes
                .iter()
                .zip(&s.tangents)
                .zip(&self.density)
                .map(|((x, dx), psi)| {
                    let nu = Vector2::new(dx.y, -dx.x) / dx.norm();
                    psi - ik * nu.dot(&self.direction) * (ik * x.dot(&self.direction)).exp()
                })
                .collect(),
        }
    }
}

/// Plane-wave scattering solve with the default coupling `η = k`.
pub fn solve_2d(problem: &ScatteringProblem, n_quad: usize) -> Result<FarFieldEvaluator> {
    if ((problem.direction.norm() - 1.0).abs()) > 1e-12 {
        return Err(Error::InvalidInput("incident direction must be a unit vector".into()));
    }
    let solver = NystromSolver::new(problem.curve.clone(), problem.k, problem.condition, n_quad)?;
    FarFieldEvaluator::new(Arc::new(solver), problem.direction)
}

/// Neumann trace `∂u^s/∂ν` of the scattered field at boundary points.
pub fn scattered_normal_trace(ev: &FarFieldEvaluator, points: &[Vector2<f64>]) -> Result<Vec<Complex64>> {
    let nodal = ev.nodal_trace();
    points
        .iter()
        .map(|p| {
            let t = ev.solver.locate(p)?;
            Ok(ev.solver.interpolate(&nodal, t))
        })
        .collect()
}
