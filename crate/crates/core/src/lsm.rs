//! Linear sampling: regularized far-field equations per wavenumber, the
//! indicator curve `k ↦ ‖g_{z,k}‖`, and eigenvalue peak detection.

use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{synthesize, FarFieldDataset};
use crate::geometry::Benchmark;
use crate::numerics::{ComplexMatrix, QuadratureRule, TikhonovSvd};
use crate::{Error, Result};

/// `Φ∞(x̂_i, z, k) = e^{−ik x̂_i·z}`.
pub fn test_rhs(z: &[f64], k: f64, obs: &QuadratureRule) -> Result<DVector<Complex64>> {
    let z = probe3(z, obs.dim)?;
    Ok(DVector::from_fn(obs.len(), |i, _| {
        let x = obs.nodes[i];
        Complex64::from_polar(1.0, -k * (x[0] * z[0] + x[1] * z[1] + x[2] * z[2]))
    }))
}

fn probe3(z: &[f64], dim: usize) -> Result<[f64; 3]> {
    if z.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "probe point has {} coordinates, data is {dim}D",
            z.len()
        )));
    }
    if z.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("probe point"));
    }
    let mut p = [0.0; 3];
    p[..dim].copy_from_slice(z);
    Ok(p)
}

/// How the Tikhonov parameter is chosen for each slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum EpsRule {
    /// `eps = ρ σ₁²` with `σ₁` the largest singular value of the weighted
    /// operator.
    Relative { rho: f64 },
    Fixed { eps: f64 },
}

impl EpsRule {
    /// `ρ = max(1e−6, δ²/100)`.
    pub fn for_noise(delta: f64) -> Self {
        EpsRule::Relative { rho: (0.01 * delta * delta).max(1e-6) }
    }

    fn eps(&self, sigma1: f64) -> Result<f64> {
        let eps = match *self {
            EpsRule::Relative { rho } => rho * sigma1 * sigma1,
            EpsRule::Fixed { eps } => eps,
        };
        if eps > 0.0 && eps.is_finite() {
            Ok(eps)
        } else {
            Err(Error::InvalidInput(format!("regularization parameter must be > 0, got {eps}")))
        }
    }
}

/// The quadrature discretization `(F g)_i = Σ_j U(i,j) w_j g_j`, factored
/// in weighted form `diag(√w_obs) U diag(√w_inc)` so that Euclidean norms of
/// the weighted quantities are discrete `L²` norms on the sphere.
pub struct DiscreteFarFieldOperator {
    pub k: f64,
    sqrt_wo: Vec<f64>,
    sqrt_wi: Vec<f64>,
    factor: TikhonovSvd<Complex64>,
}

impl DiscreteFarFieldOperator {
    pub fn new(u: &ComplexMatrix, k: f64, obs: &QuadratureRule, inc: &QuadratureRule) -> Result<Self> {
        if u.nrows() != obs.len() || u.ncols() != inc.len() {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, grids are {}x{}",
                u.nrows(),
                u.ncols(),
                obs.len(),
                inc.len()
            )));
        }
        let sqrt_wo: Vec<f64> = obs.weights.iter().map(|w| w.sqrt()).collect();
        let sqrt_wi: Vec<f64> = inc.weights.iter().map(|w| w.sqrt()).collect();
        let a = ComplexMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)] * (sqrt_wo[i] * sqrt_wi[j]));
        let factor = TikhonovSvd::new(&a)?;
        if !(factor.largest_singular_value() > 0.0) {
            return Err(Error::SolveFailed("far-field operator is identically zero".into()));
        }
        Ok(Self { k, sqrt_wo, sqrt_wi, factor })
    }

    pub fn largest_singular_value(&self) -> f64 {
        self.factor.largest_singular_value()
    }

    /// Kernel `g` minimizing `‖F g − rhs‖² + eps‖g‖²` in the weighted norms,
    /// and the `eps` used.
    pub fn solve(&self, rhs: &DVector<Complex64>, rule: EpsRule) -> Result<(DVector<Complex64>, f64)> {
        let eps = rule.eps(self.largest_singular_value())?;
        let b = DVector::from_fn(rhs.len(), |i, _| rhs[i] * self.sqrt_wo.get(i).copied().unwrap_or(0.0));
        let h = self.factor.solve(&b, eps)?;
        Ok((DVector::from_fn(h.len(), |j, _| h[j] / self.sqrt_wi[j]), eps))
    }

    /// `‖g‖_{L²}` for the probe `z`.
    pub fn indicator(&self, z: &[f64], obs: &QuadratureRule, rule: EpsRule) -> Result<f64> {
        let rhs = test_rhs(z, self.k, obs)?;
        let (g, _) = self.solve(&rhs, rule)?;
        Ok(g.iter().zip(&self.sqrt_wi).map(|(g, s)| (g * s).norm_sqr()).sum::<f64>().sqrt())
    }
}

/// Single-slice convenience wrapper around [`DiscreteFarFieldOperator`].
pub fn solve_kernel(
    u: &ComplexMatrix,
    k: f64,
    obs: &QuadratureRule,
    inc: &QuadratureRule,
    z: &[f64],
    rule: EpsRule,
) -> Result<(DVector<Complex64>, f64)> {
    let op = DiscreteFarFieldOperator::new(u, k, obs, inc)?;
    op.solve(&test_rhs(z, k, obs)?, rule)
}

/// Indicator samples `(k_s, ‖g_{z,k_s}‖)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorCurve {
    pub probe: Vec<f64>,
    pub rule: EpsRule,
    pub k: Vec<f64>,
    pub indicator: Vec<f64>,
}

impl IndicatorCurve {
    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    /// Writes `k,indicator` rows with 17 significant digits.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "k,indicator")?;
        for (k, v) in self.k.iter().zip(&self.indicator) {
            writeln!(f, "{k:.16e},{v:.16e}")?;
        }
        f.flush()?;
        Ok(())
    }
}

/// Indicator curve over every slice of `data`, computed in parallel.
pub fn sweep(data: &FarFieldDataset, z: &[f64], rule: EpsRule) -> Result<IndicatorCurve> {
    probe3(z, data.config.dim)?;
    let ks = data.config.wavenumbers();
    let indicator = ks
        .par_iter()
        .zip(data.matrices.par_iter())
        .map(|(&k, u)| {
            DiscreteFarFieldOperator::new(u, k, &data.observation, &data.incident)?
                .indicator(z, &data.observation, rule)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IndicatorCurve { probe: z.to_vec(), rule, k: ks, indicator })
}

/// A detected indicator peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueEstimate {
    pub k: f64,
    /// Indicator value at the peak.
    pub height: f64,
    /// Peak height divided by the sliding-window median around it.
    pub prominence: f64,
    /// Half width (in `k`) at half height above the window median.
    pub half_width: f64,
    /// Spacing of the `k` grid the peak was located on.
    pub dk: f64,
}

pub const DEFAULT_WINDOW: usize = 31;
pub const DEFAULT_PROMINENCE: f64 = 3.0;

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Strict interior local maxima whose ratio to the median of a centered
/// `window`-sample neighbourhood is at least `min_prominence_ratio`.
/// Maxima closer than `window / 4` samples to a higher accepted one are
/// merged into it. Sorted by `k`.
pub fn detect_peaks(curve: &IndicatorCurve, min_prominence_ratio: f64, window: usize) -> Result<Vec<EigenvalueEstimate>> {
    let n = curve.len();
    if window < 5 || n < window {
        return Err(Error::InvalidInput(format!(
            "need curve length ({n}) >= window ({window}) >= 5"
        )));
    }
    let y = &curve.indicator;
    let dk = if n > 1 { (curve.k[n - 1] - curve.k[0]) / (n - 1) as f64 } else { 0.0 };
    let mut cands: Vec<(usize, f64, f64)> = Vec::new();
    for i in 1..n - 1 {
        if !(y[i] > y[i - 1] && y[i] >= y[i + 1]) {
            continue;
        }
        let lo = i.saturating_sub(window / 2).min(n - window);
        let mut w: Vec<f64> = y[lo..lo + window].to_vec();
        let med = median(&mut w);
        if med > 0.0 && y[i] / med >= min_prominence_ratio {
            cands.push((i, y[i], med));
        }
    }
    let merge = (window / 4).max(1);
    let mut order: Vec<usize> = (0..cands.len()).collect();
    order.sort_by(|&a, &b| cands[b].1.total_cmp(&cands[a].1));
    let mut kept: Vec<(usize, f64, f64)> = Vec::new();
    for c in order.into_iter().map(|o| cands[o]) {
        if kept.iter().all(|k| k.0.abs_diff(c.0) > merge) {
            kept.push(c);
        }
    }
    kept.sort_by_key(|c| c.0);
    Ok(kept
        .into_iter()
        .map(|(i, h, med)| {
            let half = 0.5 * (h + med);
            let cross = |step: isize| -> f64 {
                let mut j = i as isize;
                while j + step >= 0 && ((j + step) as usize) < n && y[(j + step) as usize] > half {
                    j += step;
                }
                let next = j + step;
                if next < 0 || next as usize >= n {
                    return (j - i as isize).abs() as f64;
                }
                let (a, b) = (y[j as usize], y[next as usize]);
                (j - i as isize).abs() as f64 + (a - half) / (a - b)
            };
            EigenvalueEstimate {
                k: curve.k[i],
                height: h,
                prominence: h / med,
                half_width: 0.5 * (cross(-1) + cross(1)) * dk,
                dk,
            }
        })
        .collect())
}

/// Something that can evaluate the indicator at an arbitrary wavenumber.
pub trait IndicatorSource: Sync {
    fn indicator_at(&self, k: f64) -> Result<f64>;
}

/// Indicator values computed from freshly synthesized clean data.
pub struct SyntheticIndicator {
    pub shape: Benchmark,
    pub observation: QuadratureRule,
    pub incident: QuadratureRule,
    pub n_quad: usize,
    pub probe: Vec<f64>,
    pub rule: EpsRule,
}

impl IndicatorSource for SyntheticIndicator {
    fn indicator_at(&self, k: f64) -> Result<f64> {
        let u = synthesize(&self.shape, k, &self.observation, &self.incident, self.n_quad)?;
        DiscreteFarFieldOperator::new(&u, k, &self.observation, &self.incident)?
            .indicator(&self.probe, &self.observation, self.rule)
    }
}

/// Re-samples the indicator on `[k* − 2Δk, k* + 2Δk]` with spacing
/// `Δk/factor` and returns the arg-max. Without a source only `factor = 1`
/// is possible.
pub fn refine(source: Option<&dyn IndicatorSource>, estimate: &EigenvalueEstimate, factor: usize) -> Result<EigenvalueEstimate> {
    if factor == 0 {
        return Err(Error::InvalidInput("refinement factor must be >= 1".into()));
    }
    if factor == 1 {
        return Ok(*estimate);
    }
    let source = source.ok_or_else(|| {
        Error::Capability("refining beyond the data grid needs a data generator".into())
    })?;
    let dk = estimate.dk / factor as f64;
    let n = 4 * factor + 1;
    let ks: Vec<f64> = (0..n).map(|i| estimate.k - 2.0 * estimate.dk + i as f64 * dk).collect();
    let vals = ks
        .par_iter()
        .map(|&k| source.indicator_at(k))
        .collect::<Result<Vec<_>>>()?;
    let (best, &h) = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    Ok(EigenvalueEstimate {
        k: ks[best],
        height: h,
        prominence: estimate.prominence * h / estimate.height,
        half_width: estimate.half_width,
        dk,
    })
}
