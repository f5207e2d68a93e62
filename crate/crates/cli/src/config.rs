//! Option groups shared by the command line and the TOML config file.
//!
//! Every group field is optional; a value given as a flag wins over the
//! same key in the config file, which wins over the built-in default.

use std::path::Path;

use clap::Args;
use serde::Deserialize;

use crate::Failure;

macro_rules! overlay {
    ($t:ident { $($f:ident),* $(,)? }) => {
        impl $t {
            /// Field-wise `self.or(file)`.
            pub fn overlay(self, file: $t) -> $t {
                $t { $($f: self.$f.or(file.$f)),* }
            }
        }
    };
}

/// Measurement setup for `synth` and `pipeline`.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DataOpts {
    /// disc[:R] | pear | kite | ball[:R]
    #[arg(long)]
    pub shape: Option<String>,
    #[arg(long)]
    pub kmin: Option<f64>,
    #[arg(long)]
    pub kmax: Option<f64>,
    #[arg(long)]
    pub numk: Option<usize>,
    #[arg(long)]
    pub numobs: Option<usize>,
    /// In 3D this must be 2n² (n polar by 2n azimuthal directions).
    #[arg(long)]
    pub numinc: Option<usize>,
    /// Relative noise level δ.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Nyström nodes per boundary solve (2D).
    #[arg(long)]
    pub nquad: Option<usize>,
}
overlay!(DataOpts { shape, kmin, kmax, numk, numobs, numinc, noise, seed, nquad });

/// Indicator sweep and peak detection.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SweepOpts {
    /// Sampling point inside the obstacle, `x,y` or `x,y,z`.
    #[arg(long, allow_hyphen_values = true)]
    pub probe: Option<String>,
    /// Tikhonov parameter relative to σ₁²; defaults to max(1e-6, δ²/100).
    #[arg(long)]
    pub eps_rho: Option<f64>,
    /// Median window (samples) for peak prominence.
    #[arg(long)]
    pub window: Option<usize>,
    /// Minimum peak height over the window median.
    #[arg(long)]
    pub prominence: Option<f64>,
}
overlay!(SweepOpts { probe, eps_rho, window, prominence });

/// Herglotz kernel recovery.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ModeOpts {
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub ball_radius: Option<f64>,
    /// Side of the square field grid written for plotting (0 disables it).
    #[arg(long)]
    pub grid: Option<usize>,
}
overlay!(ModeOpts { beta, ball_radius, grid });

/// Newton iteration.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct NewtonOpts {
    /// circle:R[,cx,cy] | sphere:R[,cx,cy,cz] | path to a shape JSON file
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub maxiter: Option<usize>,
    /// `n` (2D) or `n_theta x n_phi`, e.g. `15x30` (3D).
    #[arg(long)]
    pub colloc: Option<String>,
}
overlay!(NewtonOpts { init, order, alpha, tol, maxiter, colloc });

/// Pipeline-only settings.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct PipelineOpts {
    /// Number of most prominent peaks to turn into modes (0 stops after the sweep).
    #[arg(long)]
    pub num_eigs: Option<usize>,
}
overlay!(PipelineOpts { num_eigs });

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub data: DataOpts,
    #[serde(default)]
    pub sweep: SweepOpts,
    #[serde(default)]
    pub mode: ModeOpts,
    #[serde(default)]
    pub newton: NewtonOpts,
    #[serde(default)]
    pub pipeline: PipelineOpts,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::validation(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::validation(format!("config {}: {e}", path.display())))
    }
}

pub fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Failure::validation(format!("{what}: cannot parse '{p}' as a number")))
        })
        .collect()
}

/// Resolved `DataOpts`, dimension-dependent defaults filled in.
#[derive(Debug, Clone)]
pub struct DataConfig {
    pub shape: String,
    pub measurement: resonant::dataset::MeasurementConfig,
}

impl DataOpts {
    pub fn resolve(&self) -> Result<DataConfig, Failure> {
        let shape = self.shape.clone().ok_or_else(|| Failure::validation("--shape is required"))?;
        let dim = match resonant::geometry::make_benchmark_shape(&shape).map_err(Failure::from)? {
            resonant::geometry::Benchmark::Curve(_) => 2,
            resonant::geometry::Benchmark::Surface(_) => 3,
        };
        let base = resonant::dataset::MeasurementConfig::default();
        let measurement = resonant::dataset::MeasurementConfig {
            dim,
            num_obs: self.numobs.unwrap_or(if dim == 2 { 64 } else { 500 }),
            num_inc: self.numinc.unwrap_or(if dim == 2 { 64 } else { 450 }),
            num_k: self.numk.unwrap_or(base.num_k),
            k_min: self.kmin.unwrap_or(base.k_min),
            k_max: self.kmax.unwrap_or(base.k_max),
            noise: self.noise.unwrap_or(0.0),
            seed: self.seed.unwrap_or(0),
            n_quad: self.nquad.unwrap_or(base.n_quad),
        };
        measurement.validate().map_err(Failure::from)?;
        Ok(DataConfig { shape, measurement })
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub probe: Vec<f64>,
    pub eps_rho: Option<f64>,
    pub window: usize,
    pub prominence: f64,
}

impl SweepOpts {
    pub fn resolve(&self) -> Result<SweepConfig, Failure> {
        let probe = self.probe.as_deref().ok_or_else(|| Failure::validation("--probe is required"))?;
        let probe = parse_list(probe, "--probe")?;
        if let Some(r) = self.eps_rho {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Failure::validation(format!("--eps-rho must be > 0, got {r}")));
            }
        }
        let prominence = self.prominence.unwrap_or(resonant::lsm::DEFAULT_PROMINENCE);
        if !(prominence > 0.0) {
            return Err(Failure::validation(format!("--prominence must be > 0, got {prominence}")));
        }
        Ok(SweepConfig {
            probe,
            eps_rho: self.eps_rho,
            window: self.window.unwrap_or(resonant::lsm::DEFAULT_WINDOW),
            prominence,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ModeConfig {
    pub recovery: resonant::eigenmodes::ModeRecoveryConfig,
    pub grid: usize,
}

impl ModeOpts {
    pub fn resolve(&self) -> Result<ModeConfig, Failure> {
        let mut recovery = resonant::eigenmodes::ModeRecoveryConfig::default();
        if let Some(b) = self.beta {
            recovery.beta = b;
        }
        if let Some(r) = self.ball_radius {
            recovery.ball_radius = r;
        }
        recovery.validate().map_err(Failure::from)?;
        Ok(ModeConfig { recovery, grid: self.grid.unwrap_or(101) })
    }
}

impl NewtonOpts {
    pub fn resolve(&self, dim: usize) -> Result<resonant::newton::NewtonConfig, Failure> {
        use resonant::newton::{Collocation, NewtonConfig};
        let mut c = if dim == 2 { NewtonConfig::default_2d() } else { NewtonConfig::default_3d() };
        if let Some(v) = self.order {
            c.order = v;
        }
        if let Some(v) = self.alpha {
            c.alpha = v;
        }
        if let Some(v) = self.tol {
            c.tol = v;
        }
        if let Some(v) = self.maxiter {
            c.max_iter = v;
        }
        if let Some(s) = &self.colloc {
            let bad = || Failure::validation(format!("--colloc: cannot parse '{s}'"));
            c.collocation = if dim == 2 {
                Collocation::Circle { n: s.trim().parse().map_err(|_| bad())? }
            } else {
                let (a, b) = s.split_once('x').ok_or_else(bad)?;
                Collocation::Tensor {
                    n_theta: a.trim().parse().map_err(|_| bad())?,
                    n_phi: b.trim().parse().map_err(|_| bad())?,
                }
            };
        }
        c.validate().map_err(Failure::from)?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_override_defaults() {
        let file: ConfigFile = toml::from_str("[newton]\nalpha = 1e-3\ntol = 1e-6\n").unwrap();
        let flags = NewtonOpts { alpha: Some(1e-2), ..Default::default() };
        let c = flags.overlay(file.newton).resolve(2).unwrap();
        assert_eq!(c.alpha, 1e-2);
        assert_eq!(c.tol, 1e-6);
        assert_eq!(c.order, 20);
        assert_eq!(NewtonOpts::default().resolve(3).unwrap().order, 8);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<ConfigFile>("[newton]\nalfa = 1.0\n").is_err());
        assert!(toml::from_str::<ConfigFile>("[solver]\n").is_err());
    }

    #[test]
    fn dimension_defaults_follow_the_shape() {
        let d = DataOpts { shape: Some("ball:1".into()), numk: Some(3), ..Default::default() };
        let c = d.resolve().unwrap();
        assert_eq!((c.measurement.dim, c.measurement.num_obs, c.measurement.num_inc), (3, 500, 450));
        assert!(DataOpts::default().resolve().is_err());
    }

    #[test]
    fn collocation_strings() {
        let o = NewtonOpts { colloc: Some("10x20".into()), ..Default::default() };
        assert_eq!(o.resolve(3).unwrap().collocation.len(), 200);
        let o = NewtonOpts { colloc: Some("ten".into()), ..Default::default() };
        assert!(o.resolve(2).is_err());
        assert_eq!(parse_list("1, -2.5", "x").unwrap(), vec![1.0, -2.5]);
    }
}
