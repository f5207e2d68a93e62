//! Regularized Newton iteration on the boundary trace `G(z) = ν·∇v` of a
//! recovered Herglotz mode.
//!
//! The unknown boundary is a starlike radial shape. Each step linearizes `G`
//! with the closed-form shape derivative, stacks real and imaginary parts
//! over all supplied modes, and solves a Tikhonov-regularized least-squares
//! problem for the coefficient increment. No forward solve is involved.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, Vector2, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigenmodes::{HerglotzJet, HerglotzKernel};
use crate::geometry::{
    frame_2d, frame_3d, perturbation_basis, perturbation_basis_3d, sh_label, BoundaryFrame2D,
    BoundaryFrame3D, Curve2D, PerturbationValue2D, PerturbationValue3D, RadialShape2D,
    ShapeDocument, SphericalShape3D, Surface3D,
};
use crate::numerics::TikhonovSvd;
use crate::{Error, Result};

/// Polar angles closer than this to a pole are rejected.
pub const POLE_MARGIN: f64 = 1e-3;

/// Starlike unknown of the iteration.
#[derive(Debug, Clone, PartialEq)]
pub enum StarlikeShape {
    Curve(RadialShape2D),
    Surface(SphericalShape3D),
}

impl From<RadialShape2D> for StarlikeShape {
    fn from(s: RadialShape2D) -> Self {
        StarlikeShape::Curve(s)
    }
}

impl From<SphericalShape3D> for StarlikeShape {
    fn from(s: SphericalShape3D) -> Self {
        StarlikeShape::Surface(s)
    }
}

impl StarlikeShape {
    pub fn dim(&self) -> usize {
        match self {
            StarlikeShape::Curve(_) => 2,
            StarlikeShape::Surface(_) => 3,
        }
    }

    pub fn order(&self) -> usize {
        match self {
            StarlikeShape::Curve(s) => s.order(),
            StarlikeShape::Surface(s) => s.order(),
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        match self {
            StarlikeShape::Curve(s) => s.coefficients(),
            StarlikeShape::Surface(s) => s.coefficients(),
        }
    }

    pub fn apply_update(&self, h: &[f64]) -> Result<Self> {
        Ok(match self {
            StarlikeShape::Curve(s) => StarlikeShape::Curve(s.apply_update(h)?),
            StarlikeShape::Surface(s) => StarlikeShape::Surface(s.apply_update(h)?),
        })
    }

    /// The same shape expressed with `order` (must not drop nonzero terms).
    pub fn with_order(&self, order: usize) -> Result<Self> {
        let count = match self {
            StarlikeShape::Curve(_) => 2 * order + 1,
            StarlikeShape::Surface(_) => (order + 1) * (order + 1),
        };
        let c = self.coefficients();
        if c.iter().skip(count).any(|v| *v != 0.0) {
            return Err(Error::InvalidInput(format!(
                "cannot lower the order to {order} without dropping coefficients"
            )));
        }
        let mut coeffs = c.to_vec();
        coeffs.resize(count, 0.0);
        Ok(match self {
            StarlikeShape::Curve(s) => StarlikeShape::Curve(RadialShape2D::new(s.center(), coeffs)?),
            StarlikeShape::Surface(s) => {
                StarlikeShape::Surface(SphericalShape3D::new(s.center(), order, coeffs)?)
            }
        })
    }

    /// `‖Σ h_j q_j‖` in `L²(S¹)` or `L²(S²)`, from the coefficients.
    pub fn update_norm(&self, h: &[f64]) -> f64 {
        match self {
            StarlikeShape::Curve(_) => update_norm_2d(h),
            StarlikeShape::Surface(_) => update_norm_3d(h),
        }
    }

    pub fn document(&self) -> ShapeDocument {
        match self {
            StarlikeShape::Curve(s) => s.into(),
            StarlikeShape::Surface(s) => s.into(),
        }
    }

    pub fn from_document(doc: &ShapeDocument) -> Result<Self> {
        match doc.kind.as_str() {
            "radial2d" => Ok(StarlikeShape::Curve(doc.to_radial_2d()?)),
            _ => Ok(StarlikeShape::Surface(doc.to_spherical_3d()?)),
        }
    }
}

/// `L²(0, 2π)` norm of `h_0 + Σ h_{2j−1} cos jφ + h_{2j} sin jφ`.
pub fn update_norm_2d(h: &[f64]) -> f64 {
    let mut s = 0.0;
    for (i, v) in h.iter().enumerate() {
        s += if i == 0 { 2.0 * PI } else { PI } * v * v;
    }
    s.sqrt()
}

/// `L²(S²)` norm of `Σ h_i P_ℓ^s(cos θ){cos, sin}(sφ)` with unnormalized
/// associated Legendre functions.
pub fn update_norm_3d(h: &[f64]) -> f64 {
    let mut s = 0.0;
    for (i, v) in h.iter().enumerate() {
        let (l, m, _) = sh_label(i);
        let ratio: f64 = ((l - m + 1)..=(l + m)).map(|x| x as f64).product();
        let azimuth = if m == 0 { 2.0 * PI } else { PI };
        s += azimuth * 2.0 / (2 * l + 1) as f64 * ratio * v * v;
    }
    s.sqrt()
}

/// Where the boundary condition is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Collocation {
    /// `n` angles `2πi/n`.
    Circle { n: usize },
    /// θ midpoints `π(i + ½)/n_theta` times φ = `2πj/n_phi`; no poles.
    Tensor { n_theta: usize, n_phi: usize },
}

impl Collocation {
    pub fn default_2d() -> Self {
        Collocation::Circle { n: 64 }
    }

    pub fn default_3d() -> Self {
        Collocation::Tensor { n_theta: 15, n_phi: 30 }
    }

    pub fn dim(&self) -> usize {
        match self {
            Collocation::Circle { .. } => 2,
            Collocation::Tensor { .. } => 3,
        }
    }

    /// Parameters `[φ, 0]` (2D) or `[θ, φ]` (3D).
    pub fn params(&self) -> Vec<[f64; 2]> {
        match *self {
            Collocation::Circle { n } => (0..n).map(|i| [2.0 * PI * i as f64 / n as f64, 0.0]).collect(),
            Collocation::Tensor { n_theta, n_phi } => {
                let mut v = Vec::with_capacity(n_theta * n_phi);
                for i in 0..n_theta {
                    let t = PI * (i as f64 + 0.5) / n_theta as f64;
                    for j in 0..n_phi {
                        v.push([t, 2.0 * PI * j as f64 / n_phi as f64]);
                    }
                }
                v
            }
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            Collocation::Circle { n } => n,
            Collocation::Tensor { n_theta, n_phi } => n_theta * n_phi,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `G(z)` at the collocation parameters for one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryResidual {
    pub params: Vec<[f64; 2]>,
    pub values: Vec<Complex64>,
    pub k: f64,
}

impl BoundaryResidual {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

fn jet2(mode: &HerglotzKernel, z: &Vector2<f64>) -> HerglotzJet {
    mode.jet(&[z.x, z.y])
}

fn jet3(mode: &HerglotzKernel, z: &Vector3<f64>) -> HerglotzJet {
    mode.jet(&[z.x, z.y, z.z])
}

fn normal_trace(normal: &[f64], grad: &Vector3<Complex64>) -> Complex64 {
    normal.iter().zip(grad.iter()).map(|(n, g)| g * *n).sum()
}

fn check_mode(mode: &HerglotzKernel, dim: usize) -> Result<()> {
    if mode.dim != dim {
        return Err(Error::DimensionMismatch(format!(
            "{}D mode used on a {dim}D boundary",
            mode.dim
        )));
    }
    Ok(())
}

fn check_pole(theta: f64) -> Result<()> {
    if theta < POLE_MARGIN || theta > PI - POLE_MARGIN {
        return Err(Error::DegenerateFrame(format!("theta = {theta} is too close to a pole")));
    }
    Ok(())
}

/// `G_i = ν(z(φ_i))·∇v(z(φ_i))` on any parametrized curve.
pub fn residual_2d<C: Curve2D + ?Sized>(curve: &C, mode: &HerglotzKernel, phis: &[f64]) -> Result<BoundaryResidual> {
    check_mode(mode, 2)?;
    let values = phis
        .iter()
        .map(|&phi| {
            let f = frame_2d(curve, phi)?;
            Ok(normal_trace(f.normal.as_slice(), &jet2(mode, &f.z).grad))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryResidual {
        params: phis.iter().map(|p| [*p, 0.0]).collect(),
        values,
        k: mode.k,
    })
}

/// `G_i = ν·∇v` at `(θ_i, φ_i)` on any parametrized surface.
pub fn residual_3d<S: Surface3D + ?Sized>(
    surface: &S,
    mode: &HerglotzKernel,
    params: &[[f64; 2]],
) -> Result<BoundaryResidual> {
    check_mode(mode, 3)?;
    let values = params
        .iter()
        .map(|&[t, p]| {
            check_pole(t)?;
            let f = frame_3d(surface, t, p)?;
            Ok(normal_trace(f.normal.as_slice(), &jet3(mode, &f.z).grad))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryResidual {
        params: params.to_vec(),
        values,
        k: mode.k,
    })
}

pub fn residual(shape: &StarlikeShape, mode: &HerglotzKernel, params: &[[f64; 2]]) -> Result<BoundaryResidual> {
    match shape {
        StarlikeShape::Curve(c) => {
            let phis: Vec<f64> = params.iter().map(|p| p[0]).collect();
            residual_2d(c, mode, &phis)
        }
        StarlikeShape::Surface(s) => residual_3d(s, mode, params),
    }
}

/// Shape derivative of `G` at one boundary point, from the frame and the
/// Herglotz jet there.
pub fn frechet_2d_at(frame: &BoundaryFrame2D, jet: &HerglotzJet, h: &PerturbationValue2D) -> Complex64 {
    let n = frame.normal;
    let dn = (h.h_phi_perp - n * n.dot(&h.h_phi_perp)) / frame.jacobian;
    let grad = jet.grad;
    let term1 = grad[0] * dn.x + grad[1] * dn.y;
    let hh = [h.h.x, h.h.y];
    let mut term2 = Complex64::new(0.0, 0.0);
    for a in 0..2 {
        for b in 0..2 {
            term2 += jet.hess[(a, b)] * (n[a] * hh[b]);
        }
    }
    term1 + term2
}

pub fn frechet_3d_at(frame: &BoundaryFrame3D, jet: &HerglotzJet, h: &PerturbationValue3D) -> Complex64 {
    let n = frame.normal;
    let dc = h.h_theta.cross(&frame.z_phi) + frame.z_theta.cross(&h.h_phi);
    let dn = (dc - n * n.dot(&dc)) / frame.jacobian;
    let mut out = Complex64::new(0.0, 0.0);
    for a in 0..3 {
        out += jet.grad[a] * dn[a];
        for b in 0..3 {
            out += jet.hess[(a, b)] * (n[a] * h.h[b]);
        }
    }
    out
}

/// `G'(z)h` at parameter `phi`.
pub fn frechet_2d<C: Curve2D + ?Sized>(
    curve: &C,
    mode: &HerglotzKernel,
    h: &PerturbationValue2D,
    phi: f64,
) -> Result<Complex64> {
    check_mode(mode, 2)?;
    let f = frame_2d(curve, phi)?;
    Ok(frechet_2d_at(&f, &jet2(mode, &f.z), h))
}

/// `G'(z)h` at parameters `(theta, phi)`.
pub fn frechet_3d<S: Surface3D + ?Sized>(
    surface: &S,
    mode: &HerglotzKernel,
    h: &PerturbationValue3D,
    theta: f64,
    phi: f64,
) -> Result<Complex64> {
    check_mode(mode, 3)?;
    check_pole(theta)?;
    let f = frame_3d(surface, theta, phi)?;
    Ok(frechet_3d_at(&f, &jet3(mode, &f.z), h))
}

/// Complex residual values and Jacobian rows (one per collocation point,
/// one column per shape coefficient) for a single mode.
fn linearize(shape: &StarlikeShape, mode: &HerglotzKernel, params: &[[f64; 2]]) -> Result<(Vec<Complex64>, Vec<Vec<Complex64>>)> {
    check_mode(mode, shape.dim())?;
    let rows: Vec<Result<(Complex64, Vec<Complex64>)>> = params
        .par_iter()
        .map(|&[a, b]| match shape {
            StarlikeShape::Curve(c) => {
                let f = frame_2d(c, a)?;
                let jet = jet2(mode, &f.z);
                let g = normal_trace(f.normal.as_slice(), &jet.grad);
                let row = perturbation_basis(c.order())
                    .iter()
                    .map(|p| frechet_2d_at(&f, &jet, &p.eval(a)))
                    .collect();
                Ok((g, row))
            }
            StarlikeShape::Surface(s) => {
                check_pole(a)?;
                let f = frame_3d(s, a, b)?;
                let jet = jet3(mode, &f.z);
                let g = normal_trace(f.normal.as_slice(), &jet.grad);
                let row = perturbation_basis_3d(s.order())
                    .iter()
                    .map(|p| frechet_3d_at(&f, &jet, &p.eval(a, b)))
                    .collect();
                Ok((g, row))
            }
        })
        .collect();
    let mut g = Vec::with_capacity(params.len());
    let mut jac = Vec::with_capacity(params.len());
    for r in rows {
        let (v, row) = r?;
        g.push(v);
        jac.push(row);
    }
    Ok((g, jac))
}

/// Real-stacked residual and Jacobian over several modes.
///
/// Block `ℓ` holds `Re G` for every collocation point followed by `Im G`,
/// multiplied by `scales[ℓ]`.
pub fn assemble(
    shape: &StarlikeShape,
    modes: &[HerglotzKernel],
    params: &[[f64; 2]],
    scales: &[f64],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if modes.is_empty() {
        return Err(Error::InvalidInput("at least one mode is required".into()));
    }
    if scales.len() != modes.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scales for {} modes",
            scales.len(),
            modes.len()
        )));
    }
    let n = params.len();
    let nc = shape.coefficients().len();
    let mut f = DVector::zeros(2 * n * modes.len());
    let mut jac = DMatrix::zeros(2 * n * modes.len(), nc);
    for (l, (mode, scale)) in modes.iter().zip(scales).enumerate() {
        let (g, rows) = linearize(shape, mode, params)?;
        let base = 2 * n * l;
        for i in 0..n {
            f[base + i] = scale * g[i].re;
            f[base + n + i] = scale * g[i].im;
            for j in 0..nc {
                jac[(base + i, j)] = scale * rows[i][j].re;
                jac[(base + n + i, j)] = scale * rows[i][j].im;
            }
        }
    }
    if !f.iter().chain(jac.iter()).all(|v| v.is_finite()) {
        return Err(Error::NonFinite("Newton system"));
    }
    Ok((f, jac))
}

/// `h = −(αI + JᵀJ)⁻¹ Jᵀ F` and the updated shape.
pub fn step(shape: &StarlikeShape, f: &DVector<f64>, jac: &DMatrix<f64>, alpha: f64) -> Result<(StarlikeShape, Vec<f64>)> {
    let h = newton_increment(f, jac, alpha)?;
    Ok((shape.apply_update(&h)?, h))
}

fn newton_increment(f: &DVector<f64>, jac: &DMatrix<f64>, alpha: f64) -> Result<Vec<f64>> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidInput(format!("alpha must be > 0, got {alpha}")));
    }
    let h = TikhonovSvd::new(jac)?.solve(f, alpha)?;
    Ok(h.iter().map(|v| -v).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    pub alpha: f64,
    pub max_iter: usize,
    /// Stop once the `L²` norm of the radial update drops below this.
    pub tol: f64,
    pub collocation: Collocation,
    /// Radial basis order `N_z`.
    pub order: usize,
    /// Halvings tried before a non-starlike update counts as divergence.
    pub max_halvings: usize,
}

impl NewtonConfig {
    pub fn default_2d() -> Self {
        Self {
            alpha: 1e-5,
            max_iter: 50,
            tol: 1e-5,
            collocation: Collocation::default_2d(),
            order: 20,
            max_halvings: 5,
        }
    }

    pub fn default_3d() -> Self {
        Self {
            alpha: 1e-4,
            max_iter: 50,
            tol: 1e-4,
            collocation: Collocation::default_3d(),
            order: 8,
            max_halvings: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidInput(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance must be > 0, got {}", self.tol)));
        }
        if self.collocation.is_empty() {
            return Err(Error::InvalidInput("no collocation points".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIter,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub coefficients: Vec<f64>,
    /// `‖G‖` over all modes and collocation points after the update.
    pub residual_norm: f64,
    pub update_norm: f64,
    /// Number of times the increment was halved.
    pub halvings: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionTrace {
    pub dimension: usize,
    pub wavenumbers: Vec<f64>,
    pub config: NewtonConfig,
    pub initial_coefficients: Vec<f64>,
    pub initial_residual: f64,
    pub iterations: Vec<IterationRecord>,
    pub termination: Termination,
    #[serde(skip)]
    pub final_shape: Option<StarlikeShape>,
}

impl ReconstructionTrace {
    pub fn final_shape(&self) -> &StarlikeShape {
        self.final_shape.as_ref().expect("trace carries its final shape")
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes `trace.json` and `shape_final.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("trace.json"), self.to_json()?)?;
        self.final_shape().document().write(dir.join("shape_final.json"))
    }
}

fn stacked_residual_norm(shape: &StarlikeShape, modes: &[HerglotzKernel], params: &[[f64; 2]]) -> Result<(f64, Vec<f64>)> {
    let mut per = Vec::with_capacity(modes.len());
    for m in modes {
        per.push(residual(shape, m, params)?.norm());
    }
    Ok((per.iter().map(|v| v * v).sum::<f64>().sqrt(), per))
}

/// Runs the regularized Newton iteration from `initial`.
///
/// With several modes each frequency block is divided by its residual norm
/// at the initial shape. Non-starlike updates are halved up to
/// `max_halvings` times; after that the trace ends as diverged.
pub fn reconstruct(modes: &[HerglotzKernel], initial: &StarlikeShape, config: &NewtonConfig) -> Result<ReconstructionTrace> {
    config.validate()?;
    if modes.is_empty() {
        return Err(Error::InvalidInput("at least one mode is required".into()));
    }
    let dim = initial.dim();
    if config.collocation.dim() != dim {
        return Err(Error::DimensionMismatch("collocation grid and shape dimensions differ".into()));
    }
    for m in modes {
        check_mode(m, dim)?;
    }
    let params = config.collocation.params();
    let mut shape = initial.with_order(config.order)?;
    let (initial_residual, per) = stacked_residual_norm(&shape, modes, &params)?;
    let scales: Vec<f64> = if modes.len() == 1 {
        vec![1.0]
    } else {
        per.iter().map(|r| if *r > 0.0 { 1.0 / r } else { 1.0 }).collect()
    };
    let mut trace = ReconstructionTrace {
        dimension: dim,
        wavenumbers: modes.iter().map(|m| m.k).collect(),
        config: config.clone(),
        initial_coefficients: shape.coefficients().to_vec(),
        initial_residual,
        iterations: Vec::new(),
        termination: Termination::MaxIter,
        final_shape: None,
    };
    for it in 1..=config.max_iter {
        let start = Instant::now();
        let (f, jac) = match assemble(&shape, modes, &params, &scales) {
            Ok(s) => s,
            Err(Error::DegenerateFrame(_)) | Err(Error::NonFinite(_)) => {
                trace.termination = Termination::Diverged;
                break;
            }
            Err(e) => return Err(e),
        };
        let h = match newton_increment(&f, &jac, config.alpha) {
            Ok(h) => h,
            Err(Error::NonFinite(_)) | Err(Error::SolveFailed(_)) => {
                trace.termination = Termination::Diverged;
                break;
            }
            Err(e) => return Err(e),
        };
        let mut scale = 1.0;
        let mut next = None;
        let mut halvings = 0;
        for attempt in 0..=config.max_halvings {
            let hs: Vec<f64> = h.iter().map(|v| v * scale).collect();
            match shape.apply_update(&hs) {
                Ok(s) => {
                    next = Some((s, hs));
                    halvings = attempt;
                    break;
                }
                Err(Error::NotStarlike(_)) => scale *= 0.5,
                Err(e) => return Err(e),
            }
        }
        let Some((new_shape, applied)) = next else {
            trace.termination = Termination::Diverged;
            break;
        };
        shape = new_shape;
        let update_norm = shape.update_norm(&applied);
        let residual_norm = match stacked_residual_norm(&shape, modes, &params) {
            Ok((r, _)) => r,
            Err(Error::DegenerateFrame(_)) => f64::NAN,
            Err(e) => return Err(e),
        };
        trace.iterations.push(IterationRecord {
            iteration: it,
            coefficients: shape.coefficients().to_vec(),
            residual_norm,
            update_norm,
            halvings,
            seconds: start.elapsed().as_secs_f64(),
        });
        if !update_norm.is_finite() || !residual_norm.is_finite() {
            trace.termination = Termination::Diverged;
            break;
        }
        if halvings == 0 && update_norm < config.tol {
            trace.termination = Termination::Converged;
            break;
        }
    }
    trace.final_shape = Some(shape);
    Ok(trace)
}
