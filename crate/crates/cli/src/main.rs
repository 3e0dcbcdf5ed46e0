//! `stepmap` command line.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 domain failure. `certify`
//! maps its verdict directly: 0 univalent, 1 inconclusive, 2 not univalent.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C;
use serde::Serialize;

use stepmap::boundary::{map_spec_from_json, polygon_from_step};
use stepmap::harmonic::{coefficients_csv, fourier_coefficients, grid_csv, polar_grid, HarmonicStepMap};
use stepmap::pipeline::{catalog, run_pipeline, t_dilate, PipelineConfig, RecordStatus, CATALOG};
use stepmap::poles::{coalescing_family, default_radii};
use stepmap::render::{render_svg, RenderKind, RenderSpec};
use stepmap::report::to_json;
use stepmap::univalence::{certify, CertifyConfig};
use stepmap::{PlaneMap, StepFunction, Verdict};

#[derive(Parser)]
#[command(name = "stepmap", version, about = "Harmonic maps with step-function boundary values")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a step map on a polar grid, as CSV.
    Eval(EvalArgs),
    /// Fourier coefficients of the boundary function, as CSV.
    Coeffs(CoeffsArgs),
    /// Certify univalence of a step map.
    Certify(CertifyArgs),
    /// Approximate a catalog target by normalized step maps.
    Approx(ApproxArgs),
    /// Pole orders along a family of coalescing jumps.
    Poles(PolesArgs),
    /// Render a step map as SVG.
    Render(RenderArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// Map spec JSON.
    #[arg(long)]
    map: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    radius: f64,
    #[arg(long, default_value_t = 10)]
    rings: usize,
    #[arg(long, default_value_t = 32)]
    spokes: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CoeffsArgs {
    #[arg(long)]
    map: PathBuf,
    /// Largest |k| exported.
    #[arg(long, default_value_t = 64)]
    kmax: i64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    map: PathBuf,
    /// Comma-separated test radii.
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.9, 0.99])]
    radii: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ApproxArgs {
    #[arg(long, default_value = "koebe_harmonic")]
    target: String,
    #[arg(long, default_value_t = 0.9)]
    t: f64,
    /// Comma-separated, strictly increasing step counts.
    #[arg(long, value_delimiter = ',', default_values_t = [8, 16, 32, 64])]
    n: Vec<usize>,
    #[arg(long, default_value_t = 0.99)]
    rho: f64,
    /// Blaschke degree for the dilatation comparison (default n - 2).
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long, default_value_t = 2000)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Record wall-clock seconds per n (output is then not reproducible).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for one polygon-overlay SVG per n.
    #[arg(long)]
    svg_dir: Option<PathBuf>,
}

#[derive(Args)]
struct PolesArgs {
    /// Map spec JSON of the base step function.
    #[arg(long)]
    family: PathBuf,
    /// Comma-separated consecutive jump indices to pull together.
    #[arg(long, value_delimiter = ',', required = true)]
    merge: Vec<usize>,
    /// Comma-separated decreasing spacings.
    #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.1, 0.05, 0.025])]
    deltas: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Order-versus-delta CSV; printed to stdout when absent.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    BoundaryImage,
    CircleImages,
    PolygonOverlay,
    ErrorHeatmap,
}

impl From<What> for RenderKind {
    fn from(w: What) -> Self {
        match w {
            What::BoundaryImage => RenderKind::BoundaryImage,
            What::CircleImages => RenderKind::CircleImages,
            What::PolygonOverlay => RenderKind::PolygonOverlay,
            What::ErrorHeatmap => RenderKind::ErrorHeatmap,
        }
    }
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long, value_enum, default_value = "circle-images")]
    what: What,
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 0.75, 0.9])]
    radii: Vec<f64>,
    #[arg(long, default_value_t = 512)]
    resolution: u32,
    /// Catalog target compared against in error heatmaps.
    #[arg(long, default_value = "polygon_identity")]
    reference: String,
    /// Dilation applied to the reference target.
    #[arg(long, default_value_t = 0.9)]
    t: f64,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(anyhow::Error),
    Domain(anyhow::Error),
}

type Outcome = Result<ExitCode, Failure>;

fn usage<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Usage(e.into())
}

fn domain<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Domain(e.into())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(usage)
}

fn load_map(path: &Path) -> Result<StepFunction, Failure> {
    let text = read(path)?;
    map_spec_from_json(&text)
        .map(|n| n.step)
        .with_context(|| format!("map spec {}", path.display()))
        .map_err(domain)
}

/// Writes to `path`, or to stdout when absent.
fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text)
            .with_context(|| format!("writing {}", p.display()))
            .map_err(usage),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn eval(a: EvalArgs) -> Outcome {
    if !(a.radius > 0.0 && a.radius < 1.0) || a.rings < 2 || a.spokes == 0 {
        return Err(usage(anyhow!("need 0 < radius < 1, rings >= 2, spokes >= 1")));
    }
    let map = HarmonicStepMap::new(&load_map(&a.map)?);
    let pts = polar_grid(a.radius, a.rings, a.spokes);
    let vals: Vec<C> = pts.iter().map(|&z| map.eval(z)).collect();
    emit(a.out.as_deref(), &grid_csv(&pts, &vals))?;
    Ok(ExitCode::SUCCESS)
}

fn coeffs(a: CoeffsArgs) -> Outcome {
    if a.kmax < 0 {
        return Err(usage(anyhow!("kmax must be nonnegative")));
    }
    let sf = load_map(&a.map)?;
    emit(a.out.as_deref(), &coefficients_csv(&fourier_coefficients(&sf, -a.kmax..=a.kmax)))?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct CertifyReportConfig<'a> {
    map: &'a Path,
    #[serde(flatten)]
    certify: &'a CertifyConfig,
}

fn certify_cmd(a: CertifyArgs) -> Outcome {
    if a.radii.is_empty() || a.radii.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return Err(usage(anyhow!("radii must lie in (0, 1)")));
    }
    let map = HarmonicStepMap::new(&load_map(&a.map)?);
    let config = CertifyConfig {
        radii: a.radii,
        ..CertifyConfig::default()
    };
    let cert = certify(&map, &config);
    let rc = CertifyReportConfig {
        map: &a.map,
        certify: &config,
    };
    emit(a.out.as_deref(), &to_json("certify", &rc, &cert))?;
    Ok(match cert.verdict {
        Verdict::Univalent => ExitCode::SUCCESS,
        Verdict::Inconclusive => ExitCode::from(1),
        Verdict::NotUnivalent => ExitCode::from(2),
    })
}

fn approx(a: ApproxArgs) -> Outcome {
    if !CATALOG.contains(&a.target.as_str()) {
        return Err(usage(anyhow!("unknown target {:?}; choose one of {CATALOG:?}", a.target)));
    }
    let config = PipelineConfig {
        target: a.target,
        t: a.t,
        n_schedule: a.n,
        rho: a.rho,
        blaschke_degree: a.degree,
        budget: a.budget,
        seed: a.seed,
        timing: a.timing,
        ..PipelineConfig::default()
    };
    config.validate().map_err(usage)?;
    let report = run_pipeline(&config).map_err(domain)?;
    emit(a.out.as_deref(), &to_json("approx", &config, &report))?;
    if let Some(dir) = a.svg_dir {
        fs::create_dir_all(&dir)
            .with_context(|| format!("creating {}", dir.display()))
            .map_err(usage)?;
        let spec = RenderSpec {
            what: RenderKind::PolygonOverlay,
            radii: vec![0.5, 0.9],
            resolution: 512,
        };
        for r in &report.records {
            let map = HarmonicStepMap::new(&r.fitted);
            let svg = render_svg(&map, &spec, Some(&r.polygon), None).map_err(domain)?;
            emit(Some(&dir.join(format!("overlay_n{}.svg", r.n))), &svg)?;
        }
    }
    let failed = report.records.iter().any(|r| r.status == RecordStatus::FitFailed);
    Ok(if failed { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

#[derive(Serialize)]
struct PolesReportConfig<'a> {
    family: &'a Path,
    merge: &'a [usize],
    deltas: &'a [f64],
    radii: &'a [f64],
}

fn poles(a: PolesArgs) -> Outcome {
    let base = load_map(&a.family)?;
    let radii = default_radii();
    let fam = coalescing_family(&base, &a.merge, &a.deltas, &radii).map_err(domain)?;
    let config = PolesReportConfig {
        family: &a.family,
        merge: &a.merge,
        deltas: &a.deltas,
        radii: &radii,
    };
    if let Some(out) = &a.out {
        emit(Some(out), &to_json("poles", &config, &fam))?;
    }
    emit(a.csv.as_deref(), &fam.to_csv())?;
    Ok(ExitCode::SUCCESS)
}

fn render(a: RenderArgs) -> Outcome {
    let sf = load_map(&a.map)?;
    let map = HarmonicStepMap::new(&sf);
    let spec = RenderSpec {
        what: a.what.into(),
        radii: a.radii,
        resolution: a.resolution,
    };
    spec.validate().map_err(usage)?;
    let polygon = match a.what {
        What::PolygonOverlay => Some(polygon_from_step(&sf).map_err(domain)?.vertices().to_vec()),
        _ => None,
    };
    let reference = match a.what {
        What::ErrorHeatmap => Some(t_dilate(&catalog(&a.reference).map_err(usage)?, a.t).map_err(usage)?),
        _ => None,
    };
    let svg = render_svg(
        &map,
        &spec,
        polygon.as_deref(),
        reference.as_ref().map(|r| r as &dyn PlaneMap),
    )
    .map_err(domain)?;
    emit(Some(&a.out), &svg)?;
    Ok(ExitCode::SUCCESS)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("STEPMAP_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| usage(anyhow!("STEPMAP_THREADS must be a nonnegative integer, got {v:?}")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(usage)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Eval(a) => eval(a),
        Command::Coeffs(a) => coeffs(a),
        Command::Certify(a) => certify_cmd(a),
        Command::Approx(a) => approx(a),
        Command::Poles(a) => poles(a),
        Command::Render(a) => render(a),
    });
    match result {
        Ok(code) => code,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
