use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use resonant::dataset::FarFieldDataset;
use resonant::eigenmodes::{ball_eigenspace_capture, nearest_ball_eigenvalue, recover_kernel, HerglotzKernel};
use resonant::geometry::{
    make_benchmark_shape, Benchmark, BenchmarkCurve, BenchmarkSurface, RadialShape2D, ShapeDocument,
    SphericalShape3D,
};
use resonant::lsm::{detect_peaks, EigenvalueEstimate, EpsRule, IndicatorCurve};
use resonant::newton::{reconstruct as run_newton, StarlikeShape};

use crate::config::{parse_list, DataConfig, ModeConfig, NewtonOpts, PipelineOpts, SweepOpts};
use crate::{Failure, EXIT_NOT_CONVERGED};

fn io(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::validation(format!("{}: {e}", path.display()))
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(io(dir))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::validation(e.to_string()))?;
    fs::write(path, text).map_err(io(path))
}

fn load_dataset(dir: &Path) -> Result<FarFieldDataset, Failure> {
    FarFieldDataset::load(dir).map_err(|e| Failure::from(e).in_stage(&format!("load {}", dir.display())))
}

pub fn synth(cfg: &DataConfig, out: &Path) -> Result<(), Failure> {
    let m = &cfg.measurement;
    let data = FarFieldDataset::generate(&cfg.shape, m)?;
    data.save(out).map_err(|e| Failure::validation(format!("{}: {e}", out.display())))?;
    println!(
        "{}: {} slices of {}x{} far-field data, k in [{}, {}], noise {}, seed {} -> {}",
        cfg.shape,
        m.num_k,
        m.num_obs,
        m.num_inc,
        m.k_min,
        m.k_max,
        m.noise,
        m.seed,
        out.display()
    );
    Ok(())
}

/// Contents of `eigs.json`.
#[derive(Debug, Serialize)]
struct SweepReport<'a> {
    probe: &'a [f64],
    rule: EpsRule,
    window: usize,
    prominence: f64,
    eigenvalues: &'a [EigenvalueEstimate],
}

fn sweep_dataset(data: &FarFieldDataset, opts: &SweepOpts, out: &Path) -> Result<(IndicatorCurve, Vec<EigenvalueEstimate>), Failure> {
    let cfg = opts.resolve()?;
    let rule = match cfg.eps_rho {
        Some(rho) => EpsRule::Relative { rho },
        None => EpsRule::for_noise(data.config.noise),
    };
    // Beyond this radius the far-field grid cannot resolve the sampling point.
    let reach = if data.config.dim == 2 {
        data.config.num_obs as f64 / 2.0
    } else {
        (data.config.num_obs as f64).sqrt()
    } / data.config.k_max;
    let dist = cfg.probe.iter().map(|c| c * c).sum::<f64>().sqrt();
    if dist > reach {
        eprintln!("warning: probe point at distance {dist} is far outside any resolvable obstacle (~{reach:.3})");
    }
    let curve = resonant::lsm::sweep(data, &cfg.probe, rule)?;
    let peaks = detect_peaks(&curve, cfg.prominence, cfg.window)?;
    create_dir(out)?;
    let csv = out.join("sweep.csv");
    curve.write_csv(&csv).map_err(|e| Failure::validation(format!("{}: {e}", csv.display())))?;
    write_json(
        &out.join("eigs.json"),
        &SweepReport { probe: &cfg.probe, rule, window: cfg.window, prominence: cfg.prominence, eigenvalues: &peaks },
    )?;
    let ks: Vec<String> = peaks.iter().map(|p| format!("{:.4}", p.k)).collect();
    println!("{} eigenvalue(s) detected: [{}]", peaks.len(), ks.join(", "));
    Ok((curve, peaks))
}

pub fn sweep(data: &Path, opts: &SweepOpts, out: &Path) -> Result<Vec<EigenvalueEstimate>, Failure> {
    let data = load_dataset(data)?;
    sweep_dataset(&data, opts, out).map(|(_, p)| p)
}

/// 1-based slice index nearest to `k`, or an error when `k` lies outside
/// the sampled band by more than half a grid step.
fn slice_for(data: &FarFieldDataset, k: f64) -> Result<usize, Failure> {
    let c = &data.config;
    let (lo, hi) = (c.k_min, if c.num_k > 1 { c.k_max } else { c.k_min });
    let half = if c.num_k > 1 { 0.5 * (hi - lo) / (c.num_k - 1) as f64 } else { 0.0 };
    let slack = half + 1e-12 * hi.abs().max(1.0);
    if !(k >= lo - slack && k <= hi + slack) {
        return Err(Failure::validation(format!("k = {k} is outside the dataset range [{lo}, {hi}]")));
    }
    if c.num_k == 1 {
        return Ok(1);
    }
    let s = ((k - lo) / (2.0 * half)).round() as usize + 1;
    Ok(s.clamp(1, c.num_k))
}

/// Eigenspace capture when the data come from an origin-centred disc or ball.
fn ball_capture(data: &FarFieldDataset, kernel: &HerglotzKernel) -> Result<Option<f64>, Failure> {
    let radius = match make_benchmark_shape(&data.shape) {
        Ok(Benchmark::Curve(BenchmarkCurve::Disc { radius, center: [0.0, 0.0] })) => radius,
        Ok(Benchmark::Surface(BenchmarkSurface::Sphere { radius })) => radius,
        _ => return Ok(None),
    };
    let (order, _) = nearest_ball_eigenvalue(kernel.dim, radius, kernel.k)?;
    Ok(Some(ball_eigenspace_capture(kernel, radius, order)?))
}

fn write_field(path: &Path, kernel: &HerglotzKernel, n: usize, half: f64) -> Result<(), Failure> {
    let file = fs::File::create(path).map_err(io(path))?;
    let mut f = std::io::BufWriter::new(file);
    let coord = |i: usize| if n == 1 { 0.0 } else { -half + 2.0 * half * i as f64 / (n - 1) as f64 };
    let mut text = String::from("x,y,Re,Im,Abs\n");
    for iy in 0..n {
        for ix in 0..n {
            let (x, y) = (coord(ix), coord(iy));
            let v = if kernel.dim == 2 { kernel.value(&[x, y]) } else { kernel.value(&[x, y, 0.0]) };
            text += &format!("{x:.16e},{y:.16e},{:.16e},{:.16e},{:.16e}\n", v.re, v.im, v.norm());
        }
    }
    f.write_all(text.as_bytes()).and_then(|_| f.flush()).map_err(io(path))
}

fn recover_modes(
    data: &FarFieldDataset,
    ks: &[f64],
    cfg: &ModeConfig,
    out: &Path,
    field_name: impl Fn(usize) -> String,
) -> Result<Vec<PathBuf>, Failure> {
    if ks.is_empty() {
        return Err(Failure::validation("at least one wavenumber is required"));
    }
    let slices = ks.iter().map(|&k| slice_for(data, k)).collect::<Result<Vec<_>, _>>()?;
    create_dir(out)?;
    let mut paths = Vec::new();
    for (i, (&k, &s)) in ks.iter().zip(&slices).enumerate() {
        let (ks, u) = data.slice(s)?;
        if (ks - k).abs() > 1e-12 * k.abs().max(1.0) {
            println!("mode {}: k = {k} taken from the nearest data slice k = {ks}", i + 1);
        }
        let mut kernel = recover_kernel(u, ks, &data.observation, &data.incident, &cfg.recovery)?;
        kernel.capture = ball_capture(data, &kernel)?;
        let path = out.join(format!("mode_{}.json", i + 1));
        kernel.write(&path).map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
        if cfg.grid > 0 {
            write_field(&out.join(field_name(i + 1)), &kernel, cfg.grid, cfg.recovery.ball_radius)?;
        }
        let capture = kernel.capture.map(|c| format!(", eigenspace capture {c:.4}")).unwrap_or_default();
        println!(
            "mode {} at k = {ks}: far-field residual {:.3e}{capture} -> {}",
            i + 1,
            kernel.far_field_residual,
            path.display()
        );
        paths.push(path);
    }
    Ok(paths)
}

pub fn eigfun(data: &Path, ks: &[f64], cfg: &ModeConfig, out: &Path) -> Result<Vec<PathBuf>, Failure> {
    let data = load_dataset(data)?;
    let single = ks.len() == 1;
    recover_modes(&data, ks, cfg, out, |i| if single { "field.csv".into() } else { format!("field_{i}.csv") })
}

fn parse_init(text: &str, dim: usize, order: usize) -> Result<StarlikeShape, Failure> {
    let bad = |m: &str| Failure::validation(format!("--init '{text}': {m}"));
    if let Some(rest) = text.strip_prefix("circle:") {
        if dim != 2 {
            return Err(bad("circle initial guess for 3D modes"));
        }
        let v = parse_list(rest, "--init")?;
        let center = match v.len() {
            1 => [0.0, 0.0],
            3 => [v[1], v[2]],
            _ => return Err(bad("expected circle:R or circle:R,cx,cy")),
        };
        return Ok(RadialShape2D::circle(center, v[0], order)?.into());
    }
    if let Some(rest) = text.strip_prefix("sphere:") {
        if dim != 3 {
            return Err(bad("sphere initial guess for 2D modes"));
        }
        let v = parse_list(rest, "--init")?;
        let center = match v.len() {
            1 => [0.0, 0.0, 0.0],
            4 => [v[1], v[2], v[3]],
            _ => return Err(bad("expected sphere:R or sphere:R,cx,cy,cz")),
        };
        return Ok(SphericalShape3D::sphere(center, v[0], order)?.into());
    }
    let doc = ShapeDocument::read(text).map_err(|e| bad(&e.to_string()))?;
    let shape = StarlikeShape::from_document(&doc)?;
    if shape.dim() != dim {
        return Err(bad("shape dimension differs from the modes"));
    }
    Ok(shape)
}

pub fn reconstruct(modes: &[PathBuf], opts: &NewtonOpts, out: &Path) -> Result<(), Failure> {
    let kernels = modes
        .iter()
        .map(|p| HerglotzKernel::read(p).map_err(|e| Failure::validation(format!("{}: {e}", p.display()))))
        .collect::<Result<Vec<_>, _>>()?;
    reconstruct_kernels(&kernels, opts, out)
}

fn reconstruct_kernels(kernels: &[HerglotzKernel], opts: &NewtonOpts, out: &Path) -> Result<(), Failure> {
    let dim = kernels.first().ok_or_else(|| Failure::validation("--modes is empty"))?.dim;
    if kernels.iter().any(|m| m.dim != dim) {
        return Err(Failure::validation("mode files mix 2D and 3D kernels"));
    }
    let cfg = opts.resolve(dim)?;
    let init = opts.init.as_deref().ok_or_else(|| Failure::validation("--init is required"))?;
    let initial = parse_init(init, dim, cfg.order)?;
    let trace = run_newton(kernels, &initial, &cfg)?;
    create_dir(out)?;
    trace.write(out).map_err(|e| Failure::validation(format!("{}: {e}", out.display())))?;
    let last = trace.iterations.last();
    println!(
        "{:?} after {} iteration(s): residual {:.3e}, last update {:.3e} -> {}",
        trace.termination,
        trace.iterations.len(),
        last.map_or(trace.initial_residual, |r| r.residual_norm),
        last.map_or(0.0, |r| r.update_norm),
        out.display()
    );
    if trace.converged() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_NOT_CONVERGED,
            message: format!("reconstruction did not converge ({:?})", trace.termination),
        })
    }
}

/// Indices of the `n` most prominent peaks, returned in increasing `k`.
fn most_prominent(peaks: &[EigenvalueEstimate], n: usize) -> Vec<f64> {
    let mut order: Vec<&EigenvalueEstimate> = peaks.iter().collect();
    order.sort_by(|a, b| b.prominence.total_cmp(&a.prominence));
    let mut ks: Vec<f64> = order.into_iter().take(n).map(|p| p.k).collect();
    ks.sort_by(f64::total_cmp);
    ks
}

pub fn pipeline(
    data: Option<&Path>,
    synth_opts: &crate::config::DataOpts,
    sweep_opts: &SweepOpts,
    mode_opts: &crate::config::ModeOpts,
    newton_opts: &NewtonOpts,
    pipeline_opts: &PipelineOpts,
    out: &Path,
) -> Result<(), Failure> {
    let mode_cfg = mode_opts.resolve().map_err(|f| f.in_stage("eigfun"))?;
    let num_eigs = pipeline_opts.num_eigs.unwrap_or(4);
    create_dir(out)?;
    let dataset = match data {
        Some(dir) => load_dataset(dir)?,
        None => {
            let cfg = synth_opts.resolve().map_err(|f| f.in_stage("synth"))?;
            let dir = out.join("data");
            synth(&cfg, &dir).map_err(|f| f.in_stage("synth"))?;
            load_dataset(&dir)?
        }
    };
    let (_, peaks) = sweep_dataset(&dataset, sweep_opts, out).map_err(|f| f.in_stage("sweep"))?;
    if num_eigs == 0 {
        println!("--num-eigs 0: stopping after the sweep, no reconstruction requested");
        return Ok(());
    }
    if peaks.is_empty() {
        return Err(Failure::numerical("no eigenvalues detected").in_stage("sweep"));
    }
    if peaks.len() < num_eigs {
        eprintln!("warning: {num_eigs} eigenvalue(s) requested, only {} detected", peaks.len());
    }
    let ks = most_prominent(&peaks, num_eigs);
    let paths = recover_modes(&dataset, &ks, &mode_cfg, out, |i| format!("field_{i}.csv"))
        .map_err(|f| f.in_stage("eigfun"))?;
    let kernels = paths
        .iter()
        .map(|p| HerglotzKernel::read(p).map_err(|e| Failure::from(e).in_stage("eigfun")))
        .collect::<Result<Vec<_>, _>>()?;
    reconstruct_kernels(&kernels, newton_opts, out).map_err(|f| f.in_stage("reconstruct"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn peak(k: f64, prominence: f64) -> EigenvalueEstimate {
        EigenvalueEstimate { k, height: 1.0, prominence, half_width: 0.0, dk: 0.01 }
    }

    #[test]
    fn selects_most_prominent_in_k_order() {
        let p = [peak(1.0, 5.0), peak(2.0, 9.0), peak(3.0, 4.0), peak(4.0, 7.0)];
        assert_eq!(most_prominent(&p, 2), vec![2.0, 4.0]);
        assert_eq!(most_prominent(&p, 10).len(), 4);
        assert!(most_prominent(&p, 0).is_empty());
    }

    #[test]
    fn init_specs() {
        let s = parse_init("circle:1.5,0.1,-0.2", 2, 4).unwrap();
        assert_eq!(s.coefficients()[0], 1.5);
        assert_eq!(s.document().center, vec![0.1, -0.2]);
        assert!(parse_init("circle:1,2", 2, 4).is_err());
        assert!(parse_init("sphere:1", 2, 4).is_err());
        assert_eq!(parse_init("sphere:1.2", 3, 2).unwrap().dim(), 3);
        assert!(parse_init("/no/such/shape.json", 2, 4).is_err());
    }
}
