//! Multi-frequency far-field datasets: synthesis, the relative noise model,
//! and a bit-exact on-disk format.
//!
//! A dataset directory holds `manifest.json` and one `U_<s>.bin` per
//! wavenumber (`s = 1..=L`). Each binary file is the `M×N` matrix in
//! row-major order (row = observation direction), every entry written as
//! two little-endian binary64 values `Re, Im`.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{Vector2, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::forward::{ball_series, BoundaryCondition, NystromSolver};
use crate::geometry::{make_benchmark_shape, Benchmark, BenchmarkSurface, Curve2D};
use crate::numerics::{circle_rule, fibonacci_sphere, sphere_rule, ComplexMatrix, QuadratureRule};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Measurement setup shared by every slice of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementConfig {
    /// Space dimension, 2 or 3.
    pub dim: usize,
    /// Number of observation directions `M`.
    pub num_obs: usize,
    /// Number of incident directions `N`. In 3D this must be `2n²`; the
    /// incident grid is then `n` Gauss–Legendre polar angles by `2n`
    /// equispaced azimuths.
    pub num_inc: usize,
    /// Number of wavenumbers `L`.
    pub num_k: usize,
    pub k_min: f64,
    pub k_max: f64,
    /// Relative noise level `δ`.
    pub noise: f64,
    pub seed: u64,
    /// Nyström nodes per boundary solve (2D only).
    #[serde(default = "default_n_quad")]
    pub n_quad: usize,
}

fn default_n_quad() -> usize {
    128
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            num_obs: 64,
            num_inc: 64,
            num_k: 600,
            k_min: 1.2,
            k_max: 3.2,
            noise: 0.0,
            seed: 0,
            n_quad: default_n_quad(),
        }
    }
}

impl MeasurementConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.dim != 2 && self.dim != 3 {
            return bad(format!("dimension must be 2 or 3, got {}", self.dim));
        }
        if self.num_obs < 4 || self.num_inc < 4 {
            return bad("at least 4 observation and incident directions are required".into());
        }
        if self.num_k < 1 {
            return bad("at least one wavenumber is required".into());
        }
        if !(self.k_min > 0.0 && self.k_min.is_finite() && self.k_max.is_finite()) {
            return bad(format!("k_min must be positive, got {}", self.k_min));
        }
        if self.num_k > 1 && !(self.k_max > self.k_min) {
            return bad("k_max must exceed k_min".into());
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise level must be >= 0, got {}", self.noise));
        }
        if self.dim == 2 && (self.n_quad < 64 || self.n_quad % 2 != 0) {
            return bad(format!("n_quad must be even and >= 64, got {}", self.n_quad));
        }
        if self.dim == 3 {
            self.incident_tensor_shape()?;
        }
        Ok(())
    }

    fn incident_tensor_shape(&self) -> Result<(usize, usize)> {
        let n = ((self.num_inc as f64 / 2.0).sqrt()).round() as usize;
        if n < 2 || 2 * n * n != self.num_inc {
            return Err(Error::InvalidInput(format!(
                "3D incident count must be 2n² (n θ-nodes × 2n φ-nodes), got {}",
                self.num_inc
            )));
        }
        Ok((n, 2 * n))
    }

    /// `k_s = k_min + (s−1)(k_max − k_min)/(L−1)` for `s = 1..=L`.
    pub fn wavenumber(&self, s: usize) -> Result<f64> {
        if s == 0 || s > self.num_k {
            return Err(Error::IndexOutOfRange { index: s, limit: self.num_k });
        }
        if self.num_k == 1 {
            return Ok(self.k_min);
        }
        Ok(self.k_min + (s - 1) as f64 * (self.k_max - self.k_min) / (self.num_k - 1) as f64)
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (1..=self.num_k).map(|s| self.wavenumber(s).expect("in range")).collect()
    }

    pub fn observation_rule(&self) -> Result<QuadratureRule> {
        match self.dim {
            2 => circle_rule(self.num_obs),
            _ => fibonacci_sphere(self.num_obs),
        }
    }

    pub fn incident_rule(&self) -> Result<QuadratureRule> {
        match self.dim {
            2 => circle_rule(self.num_inc),
            _ => {
                let (nt, np) = self.incident_tensor_shape()?;
                sphere_rule(nt, np)
            }
        }
    }
}

/// Far-field matrices `U^δ_s` for all wavenumbers plus the grids they live on.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldDataset {
    pub config: MeasurementConfig,
    /// Name of the generating shape (provenance only).
    pub shape: String,
    pub observation: QuadratureRule,
    pub incident: QuadratureRule,
    pub matrices: Vec<ComplexMatrix>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    version: u32,
    config: MeasurementConfig,
    shape: String,
    wavenumbers: Vec<f64>,
    observation: QuadratureRule,
    incident: QuadratureRule,
}

/// splitmix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Noise stream for wavenumber index `s` (1-based); independent of `L`.
pub fn noise_stream(seed: u64, s: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(s as u64)))
}

/// `U + δ‖U‖_F (R₁ + iR₂)/‖R₁ + iR₂‖_F` with `R₁, R₂` uniform on `[−1, 1]`,
/// drawn row-major, real part before imaginary part.
pub fn add_noise<R: Rng>(u: &ComplexMatrix, delta: f64, rng: &mut R) -> Result<ComplexMatrix> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput(format!("noise level must be >= 0, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(u.clone());
    }
    let (m, n) = u.shape();
    let mut r = ComplexMatrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let re = rng.random_range(-1.0..=1.0);
            let im = rng.random_range(-1.0..=1.0);
            r[(i, j)] = Complex64::new(re, im);
        }
    }
    let un = u.norm();
    let rn = r.norm();
    if un == 0.0 || rn == 0.0 {
        return Ok(u.clone());
    }
    Ok(u + r * Complex64::new(delta * un / rn, 0.0))
}

fn directions2(rule: &QuadratureRule) -> Vec<Vector2<f64>> {
    (0..rule.len()).map(|i| rule.node2(i)).collect()
}

fn directions3(rule: &QuadratureRule) -> Vec<Vector3<f64>> {
    (0..rule.len()).map(|i| rule.node3(i)).collect()
}

/// Clean far-field matrix of `shape` at wavenumber `k` on the given grids.
pub fn synthesize(shape: &Benchmark, k: f64, obs: &QuadratureRule, inc: &QuadratureRule, n_quad: usize) -> Result<ComplexMatrix> {
    match shape {
        Benchmark::Curve(c) => {
            if obs.dim != 2 || inc.dim != 2 {
                return Err(Error::DimensionMismatch("2D shape needs 2D direction grids".into()));
            }
            let curve: Arc<dyn Curve2D> = Arc::new(*c);
            let solver = NystromSolver::new(curve, k, BoundaryCondition::SoundHard, n_quad)?;
            solver.far_field_matrix(&directions2(obs), &directions2(inc))
        }
        Benchmark::Surface(BenchmarkSurface::Sphere { radius }) => {
            if obs.dim != 3 || inc.dim != 3 {
                return Err(Error::DimensionMismatch("3D shape needs 3D direction grids".into()));
            }
            let n_terms = (k * radius).ceil() as usize + 25;
            ball_series(*radius, k, &directions3(obs), &directions3(inc), n_terms)
        }
        Benchmark::Surface(s) => Err(Error::UnsupportedShape(format!(
            "3D data can only be synthesized for balls, not {s:?}"
        ))),
    }
}

impl FarFieldDataset {
    /// Synthesizes all slices (in parallel over wavenumbers) and applies
    /// noise with an independent stream per wavenumber index.
    pub fn generate(shape_name: &str, config: &MeasurementConfig) -> Result<Self> {
        config.validate()?;
        let shape = make_benchmark_shape(shape_name)?;
        let shape_dim = match shape {
            Benchmark::Curve(_) => 2,
            Benchmark::Surface(_) => 3,
        };
        if shape_dim != config.dim {
            return Err(Error::DimensionMismatch(format!(
                "shape '{shape_name}' is {shape_dim}D but the configuration is {}D",
                config.dim
            )));
        }
        let observation = config.observation_rule()?;
        let incident = config.incident_rule()?;
        let matrices = (1..=config.num_k)
            .into_par_iter()
            .map(|s| {
                let k = config.wavenumber(s)?;
                let clean = synthesize(&shape, k, &observation, &incident, config.n_quad)?;
                add_noise(&clean, config.noise, &mut noise_stream(config.seed, s))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config: config.clone(),
            shape: shape_name.to_string(),
            observation,
            incident,
            matrices,
        })
    }

    /// A copy of this clean dataset with noise level `delta` applied using
    /// the same per-wavenumber streams as [`FarFieldDataset::generate`].
    pub fn with_noise(&self, delta: f64, seed: u64) -> Result<Self> {
        if self.config.noise != 0.0 {
            return Err(Error::InvalidInput("noise can only be added to clean data".into()));
        }
        let matrices = self
            .matrices
            .par_iter()
            .enumerate()
            .map(|(i, u)| add_noise(u, delta, &mut noise_stream(seed, i + 1)))
            .collect::<Result<Vec<_>>>()?;
        let mut config = self.config.clone();
        config.noise = delta;
        config.seed = seed;
        Ok(Self { config, matrices, ..self.clone() })
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// `(k_s, U^δ_s)` for `s = 1..=L`.
    pub fn slice(&self, s: usize) -> Result<(f64, &ComplexMatrix)> {
        let k = self.config.wavenumber(s)?;
        Ok((k, &self.matrices[s - 1]))
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let manifest = Manifest {
            version: FORMAT_VERSION,
            config: self.config.clone(),
            shape: self.shape.clone(),
            wavenumbers: self.config.wavenumbers(),
            observation: self.observation.clone(),
            incident: self.incident.clone(),
        };
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        for (i, u) in self.matrices.iter().enumerate() {
            let mut bytes = Vec::with_capacity(u.len() * 16);
            for r in 0..u.nrows() {
                for c in 0..u.ncols() {
                    bytes.extend_from_slice(&u[(r, c)].re.to_le_bytes());
                    bytes.extend_from_slice(&u[(r, c)].im.to_le_bytes());
                }
            }
            fs::write(dir.join(format!("U_{}.bin", i + 1)), bytes)?;
        }
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        if manifest.version != FORMAT_VERSION {
            return Err(Error::VersionMismatch { found: manifest.version, expected: FORMAT_VERSION });
        }
        let config = manifest.config;
        config.validate()?;
        let (m, n) = (config.num_obs, config.num_inc);
        if manifest.observation.len() != m || manifest.incident.len() != n {
            return Err(Error::DimensionMismatch("direction lists disagree with M, N".into()));
        }
        let mut matrices = Vec::with_capacity(config.num_k);
        for s in 1..=config.num_k {
            let bytes = fs::read(dir.join(format!("U_{s}.bin")))?;
            if bytes.len() != m * n * 16 {
                return Err(Error::DimensionMismatch(format!(
                    "U_{s}.bin holds {} bytes, expected {} for a {m}x{n} matrix",
                    bytes.len(),
                    m * n * 16
                )));
            }
            let f = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
            let u = ComplexMatrix::from_fn(m, n, |r, c| {
                let o = 16 * (r * n + c);
                Complex64::new(f(o), f(o + 8))
            });
            if u.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("far-field matrix"));
            }
            matrices.push(u);
        }
        Ok(Self {
            config,
            shape: manifest.shape,
            observation: manifest.observation,
            incident: manifest.incident,
            matrices,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small_config() -> MeasurementConfig {
        MeasurementConfig {
            num_obs: 16,
            num_inc: 16,
            num_k: 4,
            k_min: 1.0,
            k_max: 2.5,
            noise: 0.02,
            seed: 42,
            n_quad: 64,
            ..Default::default()
        }
    }

    #[test]
    fn zero_noise_and_zero_matrix() {
        let mut rng = noise_stream(1, 1);
        let u = ComplexMatrix::from_fn(3, 3, |i, j| Complex64::new(i as f64, j as f64));
        assert_eq!(add_noise(&u, 0.0, &mut rng).unwrap(), u);
        let z = ComplexMatrix::zeros(4, 4);
        assert_eq!(add_noise(&z, 0.1, &mut rng).unwrap(), z);
        assert!(add_noise(&u, -0.1, &mut rng).is_err());
    }

    #[test]
    fn relative_noise_is_exact_every_draw() {
        let u = ComplexMatrix::from_fn(8, 8, |i, j| Complex64::new((i + 2 * j) as f64 - 3.5, (i * j) as f64 * 0.1));
        let mut rng = noise_stream(9, 3);
        for _ in 0..200 {
            let v = add_noise(&u, 0.01, &mut rng).unwrap();
            assert!(((&v - &u).norm() / u.norm() - 0.01).abs() < 1e-12);
        }
    }

    #[test]
    fn wavenumber_grid() {
        let c = MeasurementConfig { num_k: 5, k_min: 1.0, k_max: 2.0, ..Default::default() };
        assert_eq!(c.wavenumber(1).unwrap(), 1.0);
        assert_eq!(c.wavenumber(3).unwrap(), 1.0 + 2.0 * (2.0 - 1.0) / 4.0);
        assert_eq!(c.wavenumber(5).unwrap(), 2.0);
        assert!(c.wavenumber(0).is_err() && c.wavenumber(6).is_err());
        let one = MeasurementConfig { num_k: 1, k_min: 1.7, k_max: 1.7, ..Default::default() };
        assert_eq!(one.wavenumbers(), vec![1.7]);
    }

    #[test]
    fn config_validation() {
        let ok = MeasurementConfig::default();
        assert!(ok.validate().is_ok());
        assert!(MeasurementConfig { num_obs: 3, ..ok.clone() }.validate().is_err());
        assert!(MeasurementConfig { k_min: 0.0, ..ok.clone() }.validate().is_err());
        assert!(MeasurementConfig { noise: -1.0, ..ok.clone() }.validate().is_err());
        assert!(MeasurementConfig { dim: 3, num_inc: 450, num_obs: 500, ..ok.clone() }.validate().is_ok());
        assert!(MeasurementConfig { dim: 3, num_inc: 400, ..ok }.validate().is_err());
    }

    #[test]
    fn generation_checks_shape_support() {
        let c = MeasurementConfig { dim: 3, num_obs: 20, num_inc: 8, num_k: 1, k_min: 1.0, k_max: 1.0, ..Default::default() };
        assert!(matches!(FarFieldDataset::generate("ellipsoid", &c), Err(Error::UnsupportedShape(_))));
        assert!(matches!(FarFieldDataset::generate("pear", &c), Err(Error::DimensionMismatch(_))));
        assert!(matches!(FarFieldDataset::generate("blob", &c), Err(Error::UnsupportedShape(_))));
        let ball = FarFieldDataset::generate("ball:1", &c).unwrap();
        assert_eq!(ball.matrices[0].shape(), (20, 8));
    }

    #[test]
    fn generation_is_deterministic_and_noise_matches_clean_data() {
        let c = small_config();
        let a = FarFieldDataset::generate("kite", &c).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| FarFieldDataset::generate("kite", &c)).unwrap();
        assert_eq!(a, b);
        let clean = FarFieldDataset::generate("kite", &MeasurementConfig { noise: 0.0, ..c.clone() }).unwrap();
        assert_eq!(clean.with_noise(0.02, 42).unwrap(), a);
        for (u, v) in a.matrices.iter().zip(&clean.matrices) {
            assert!(((u - v).norm() / v.norm() - 0.02).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_streams_do_not_depend_on_l() {
        let c = small_config();
        let short = MeasurementConfig { num_k: 2, k_max: 1.5, ..c.clone() };
        let a = FarFieldDataset::generate("disc:1", &short).unwrap();
        let b = FarFieldDataset::generate("disc:1", &MeasurementConfig { num_k: 3, k_max: 2.0, ..c }).unwrap();
        // Same k at s = 1 and s = 2 in both datasets.
        assert_eq!(a.matrices[0], b.matrices[0]);
        assert_eq!(a.matrices[1], b.matrices[1]);
    }

    #[test]
    fn save_load_round_trip_and_corruption() {
        let d = FarFieldDataset::generate("pear", &small_config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        d.save(dir.path()).unwrap();
        let e = FarFieldDataset::load(dir.path()).unwrap();
        assert_eq!(d, e);
        let (k, u) = e.slice(3).unwrap();
        assert_eq!(k, 1.0 + 2.0 * (2.5 - 1.0) / 3.0);
        assert_eq!(u, &d.matrices[2]);

        let dir2 = tempfile::tempdir().unwrap();
        e.save(dir2.path()).unwrap();
        for s in 1..=4 {
            let name = format!("U_{s}.bin");
            assert_eq!(fs::read(dir.path().join(&name)).unwrap(), fs::read(dir2.path().join(&name)).unwrap());
        }
        assert_eq!(
            fs::read(dir.path().join("manifest.json")).unwrap(),
            fs::read(dir2.path().join("manifest.json")).unwrap()
        );

        let f = dir.path().join("U_2.bin");
        let bytes = fs::read(&f).unwrap();
        fs::write(&f, &bytes[..bytes.len() - 16]).unwrap();
        assert!(matches!(FarFieldDataset::load(dir.path()), Err(Error::DimensionMismatch(_))));

        let text = fs::read_to_string(dir2.path().join("manifest.json")).unwrap();
        let text = text.replacen("\"version\": 1", "\"version\": 99", 1);
        fs::write(dir2.path().join("manifest.json"), text).unwrap();
        assert!(matches!(
            FarFieldDataset::load(dir2.path()),
            Err(Error::VersionMismatch { found: 99, expected: 1 })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn noise_norm_identity(seed in any::<u64>(), delta in 0.0f64..0.5) {
            let u = ComplexMatrix::from_fn(6, 5, |i, j| Complex64::new((i as f64).sin() + 1.0, j as f64));
            let v = add_noise(&u, delta, &mut noise_stream(seed, 1)).unwrap();
            prop_assert!(((&v - &u).norm() - delta * u.norm()).abs() <= 1e-12 * u.norm());
        }
    }
}
