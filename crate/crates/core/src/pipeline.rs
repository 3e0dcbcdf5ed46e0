//! Step-map approximation of normalized univalent harmonic targets.
//!
//! For each step count `n` the pipeline dilates the target (`f_t(z) = F(tz)/t`),
//! inscribes an `n`-gon in the image of the unit circle, fits the jump angles of
//! a step function carrying the polygon's vertices, certifies the fit and
//! renormalizes it. Errors are measured on the compact disks `|z| <= 0.25, 0.5, 0.75`.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blaschke::{blaschke_truncation, Analytic, BlaschkeError, PowerSeries};
use crate::boundary::{BoundaryError, JordanPolygon, Orientation, StepFunction};
use crate::harmonic::{decompose, HarmonicError, HarmonicStepMap, RationalFunction};
use crate::math::{cis, horner, series_derivative, series_div, TAU};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::univalence::{certify, CertifyConfig, UnivalenceCertificate, Verdict};
use crate::PlaneMap;

/// Length of the Taylor series kept for catalog targets.
pub const TARGET_SERIES_LEN: usize = 1024;
/// Boundary values are read at this radius.
pub const BOUNDARY_RADIUS: f64 = 1.0 - 1e-6;
/// Radius of the compact disk the fit objective is measured on.
pub const FIT_RADIUS: f64 = 0.75;
/// Radii of the compact disks reported in each record.
pub const REPORT_RADII: [f64; 3] = [0.25, 0.5, 0.75];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("t = {0} must lie in (0, 1]")]
    InvalidT(f64),
    #[error("dilatation reaches modulus {0} >= 1")]
    NotContracting(f64),
    #[error("target is not normalized: {0}")]
    NotNormalized(String),
    #[error("|h'(0)| = |g'(0)|: the normalization is degenerate")]
    DegenerateNormalization,
    #[error("unknown target {0:?}")]
    UnknownTarget(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Harmonic(#[from] HarmonicError),
    #[error(transparent)]
    Blaschke(#[from] BlaschkeError),
    #[error("fit for n = {} did not produce a univalent map", .0.n)]
    FitFailed(Box<FitOutcome>),
}

/// A normalized harmonic map `h + conj(g)` given by Taylor series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetMap {
    pub name: String,
    pub h: Vec<C>,
    pub g: Vec<C>,
}

impl TargetMap {
    /// Checks `h(0) = g(0) = 0`, `h'(0) = 1`, `g'(0) = 0` to 1e-12.
    pub fn new(name: &str, h: Vec<C>, g: Vec<C>) -> Result<Self, PipelineError> {
        let at = |s: &[C], k: usize| s.get(k).copied().unwrap_or_default();
        let checks = [
            ("h(0)", at(&h, 0), C::new(0.0, 0.0)),
            ("g(0)", at(&g, 0), C::new(0.0, 0.0)),
            ("h'(0)", at(&h, 1), C::new(1.0, 0.0)),
            ("g'(0)", at(&g, 1), C::new(0.0, 0.0)),
        ];
        for (label, got, want) in checks {
            if (got - want).norm() > 1e-12 {
                return Err(PipelineError::NotNormalized(format!("{label} = {got}")));
            }
        }
        Ok(Self {
            name: name.to_string(),
            h,
            g,
        })
    }

    pub fn h_at(&self, z: C) -> C {
        horner(&self.h, z)
    }

    pub fn g_at(&self, z: C) -> C {
        horner(&self.g, z)
    }

    /// Dilatation `g'/h'` as a power series.
    pub fn dilatation(&self) -> PowerSeries {
        let len = self.h.len().max(self.g.len()) - 1;
        PowerSeries(series_div(&series_derivative(&self.g), &series_derivative(&self.h), len))
    }
}

impl PlaneMap for TargetMap {
    fn eval(&self, z: C) -> C {
        self.h_at(z) + self.g_at(z).conj()
    }
}

/// Applies `w ↦ (conj(a1)(w - a0) - conj(b1) conj(w - a0)) / (|a1|² - |b1|²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub a0: C,
    pub a1: C,
    pub b1: C,
}

impl Normalization {
    pub fn new(a0: C, a1: C, b1: C) -> Result<Self, PipelineError> {
        if (a1.norm_sqr() - b1.norm_sqr()).abs() <= 1e-14 {
            return Err(PipelineError::DegenerateNormalization);
        }
        Ok(Self { a0, a1, b1 })
    }

    pub fn denominator(&self) -> f64 {
        self.a1.norm_sqr() - self.b1.norm_sqr()
    }

    pub fn apply(&self, w: C) -> C {
        let d = w - self.a0;
        (self.a1.conj() * d - self.b1.conj() * d.conj()) / self.denominator()
    }
}

/// Solves `h - g = phi`, `g' = a h'` by series integration, then normalizes.
pub fn shear_construct<P, A>(name: &str, phi: &P, a: &A, len: usize) -> Result<TargetMap, PipelineError>
where
    P: Analytic + ?Sized,
    A: Analytic + ?Sized,
{
    let sup = (0..2048)
        .map(|j| a.eval(cis(TAU * j as f64 / 2048.0) * BOUNDARY_RADIUS).norm())
        .fold(0.0, f64::max);
    if !(sup < 1.0) {
        return Err(PipelineError::NotContracting(sup));
    }
    let p = phi.taylor(len);
    let av = a.taylor(len);
    let one_minus_a: Vec<C> = av
        .iter()
        .enumerate()
        .map(|(k, &c)| if k == 0 { C::new(1.0, 0.0) - c } else { -c })
        .collect();
    let hp = series_div(&series_derivative(&p), &one_minus_a, len - 1);
    let gp = crate::math::series_mul(&av, &hp, len - 1);
    let integrate = |d: &[C]| {
        let mut out = vec![C::new(0.0, 0.0); len];
        for (k, &c) in d.iter().enumerate() {
            out[k + 1] = c / (k + 1) as f64;
        }
        out
    };
    let h = integrate(&hp);
    let g = integrate(&gp);
    let norm = Normalization::new(C::new(0.0, 0.0), h[1], g[1])?;
    let d = norm.denominator();
    let nh: Vec<C> = h
        .iter()
        .zip(&g)
        .map(|(&hk, &gk)| (norm.a1.conj() * hk - norm.b1.conj() * gk) / d)
        .collect();
    let ng: Vec<C> = h
        .iter()
        .zip(&g)
        .map(|(&hk, &gk)| (norm.a1 * gk - norm.b1 * hk) / d)
        .collect();
    TargetMap::new(name, nh, ng)
}

fn koebe_series(len: usize) -> PowerSeries {
    PowerSeries((0..len).map(|k| C::new(k as f64, 0.0)).collect())
}

pub const CATALOG: [&str; 3] = ["koebe_harmonic", "analytic_koebe", "polygon_identity"];

/// Built-in targets: the harmonic Koebe map (shear of `z/(1-z)²` with
/// dilatation `z`), the analytic Koebe map and the identity.
pub fn catalog(name: &str) -> Result<TargetMap, PipelineError> {
    let len = TARGET_SERIES_LEN;
    match name {
        "koebe_harmonic" => shear_construct(
            name,
            &koebe_series(len),
            &PowerSeries(vec![C::new(0.0, 0.0), C::new(1.0, 0.0)]),
            len,
        ),
        "analytic_koebe" => shear_construct(name, &koebe_series(len), &PowerSeries(vec![]), len),
        "polygon_identity" => TargetMap::new(name, vec![C::new(0.0, 0.0), C::new(1.0, 0.0)], vec![]),
        other => Err(PipelineError::UnknownTarget(other.to_string())),
    }
}

/// `z ↦ F(tz)/t`.
pub fn t_dilate(f: &TargetMap, t: f64) -> Result<TargetMap, PipelineError> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(PipelineError::InvalidT(t));
    }
    let scale = |s: &[C]| -> Vec<C> {
        s.iter()
            .enumerate()
            .map(|(k, &c)| if k == 0 { c / t } else { c * t.powi(k as i32 - 1) })
            .collect()
    };
    Ok(TargetMap {
        name: f.name.clone(),
        h: scale(&f.h),
        g: scale(&f.g),
    })
}

/// A polygon inscribed in a target boundary, with the angles it came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InscribedPolygon {
    pub polygon: JordanPolygon,
    /// Source angle of each vertex, ascending in `[0, 2π)`.
    pub vertex_angles: Vec<f64>,
    /// Starting jump angles: `initial_jumps[j]` opens the arc carrying vertex `j`.
    pub initial_jumps: Vec<f64>,
    pub normalization_angles: [f64; 3],
}

impl InscribedPolygon {
    /// The polygon of a step function, with its own jumps as the starting point.
    pub fn from_step(sf: &StepFunction, normalization_angles: [f64; 3]) -> Result<Self, PipelineError> {
        let polygon = crate::boundary::polygon_from_step(sf)?;
        let jumps = sf.jump_angles();
        let lengths = sf.arc_lengths();
        Ok(Self {
            polygon,
            vertex_angles: jumps.iter().zip(&lengths).map(|(t, l)| t + 0.5 * l).collect(),
            initial_jumps: jumps,
            normalization_angles,
        })
    }
}

/// Spreads `n` angles over the circle so the three normalization angles are
/// among them; the others go to the gaps by largest remainder, equally spaced.
pub fn polygon_angles(n: usize, normalization_angles: [f64; 3]) -> Result<Vec<f64>, PipelineError> {
    if n < 3 {
        return Err(BoundaryError::NotAPolygon(format!("{n} vertices")).into());
    }
    let z = normalization_angles.map(|a| a.rem_euclid(TAU));
    let mut sorted = z;
    sorted.sort_by(f64::total_cmp);
    if sorted != z || z[0] == z[1] || z[1] == z[2] {
        return Err(PipelineError::InvalidConfig(
            "normalization angles must be strictly increasing within one turn".into(),
        ));
    }
    let gaps = [z[1] - z[0], z[2] - z[1], z[0] + TAU - z[2]];
    let extra = n - 3;
    let quotas: Vec<f64> = gaps.iter().map(|g| extra as f64 * g / TAU).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| (quotas[b] - quotas[b].floor()).total_cmp(&(quotas[a] - quotas[a].floor())).then(a.cmp(&b)));
    let missing = extra - counts.iter().sum::<usize>();
    for &i in order.iter().take(missing) {
        counts[i] += 1;
    }
    let mut angles = Vec::with_capacity(n);
    for i in 0..3 {
        angles.push(z[i]);
        for k in 1..=counts[i] {
            angles.push(z[i] + gaps[i] * k as f64 / (counts[i] + 1) as f64);
        }
    }
    Ok(angles.into_iter().map(|a| a.rem_euclid(TAU)).collect())
}

pub fn inscribe_polygon(
    f_t: &TargetMap,
    n: usize,
    normalization_angles: [f64; 3],
) -> Result<InscribedPolygon, PipelineError> {
    let mut angles = polygon_angles(n, normalization_angles)?;
    angles.sort_by(f64::total_cmp);
    let vertices: Vec<C> = angles.iter().map(|&a| f_t.eval(cis(a) * BOUNDARY_RADIUS)).collect();
    let polygon = JordanPolygon::new(vertices)?;
    let initial_jumps = (0..n)
        .map(|j| {
            let prev = if j == 0 { angles[n - 1] - TAU } else { angles[j - 1] };
            (0.5 * (prev + angles[j])).rem_euclid(TAU)
        })
        .collect();
    Ok(InscribedPolygon {
        polygon,
        vertex_angles: angles,
        initial_jumps,
        normalization_angles,
    })
}

/// Source points for the fit objective: 12 rings × 48 spokes on `|z| <= 0.75`, plus 0.
pub fn objective_grid() -> Vec<C> {
    crate::harmonic::polar_grid(FIT_RADIUS, 12, 48)
}

/// `max |f - g|` over radii `radius·i/63` (i = 0..63) times 256 angles.
pub fn sup_error<F: PlaneMap + ?Sized, G: PlaneMap + ?Sized>(f: &F, g: &G, radius: f64) -> f64 {
    sup_error_grid(f, g, radius, 64, 256)
}

pub fn sup_error_grid<F, G>(f: &F, g: &G, radius: f64, rings: usize, spokes: usize) -> f64
where
    F: PlaneMap + ?Sized,
    G: PlaneMap + ?Sized,
{
    (0..rings)
        .into_par_iter()
        .map(|i| {
            let r = radius * i as f64 / (rings - 1) as f64;
            (0..spokes)
                .map(|j| {
                    let z = cis(TAU * j as f64 / spokes as f64) * r;
                    (f.eval(z) - g.eval(z)).norm()
                })
                .fold(0.0, f64::max)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub budget: usize,
    pub seed: u64,
    /// Truncation degree used for the returned map's power series.
    pub truncation: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            budget: 2000,
            seed: 0,
            truncation: crate::harmonic::DEFAULT_TRUNCATION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitOutcome {
    pub n: usize,
    pub step: StepFunction,
    pub certificate: UnivalenceCertificate,
    /// Sup error on the objective grid before and after the search.
    pub initial_objective: f64,
    pub final_objective: f64,
    pub three_point_penalty: f64,
    pub evaluations: usize,
    /// Sup on `|z| <= 0.5` of the distance between the fitted dilatation and the
    /// Blaschke truncation of the reference dilatation (when one is supplied).
    pub dilatation_distance: Option<f64>,
}

struct FitProblem {
    values: Vec<C>,
    grid: Vec<C>,
    target_on_grid: Vec<C>,
    targets_at_norm: [(f64, C); 3],
}

impl FitProblem {
    fn angles(&self, x: &[f64]) -> Vec<f64> {
        let n = self.values.len();
        let logits: Vec<f64> = x[1..].iter().copied().chain(std::iter::once(0.0)).collect();
        let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
        let total: f64 = w.iter().sum();
        let mut out = Vec::with_capacity(n);
        let mut t = x[0];
        for wk in w.iter().take(n) {
            out.push(t);
            t += TAU * wk / total;
        }
        out
    }

    fn sup_error(&self, jumps: &[f64]) -> f64 {
        self.grid
            .iter()
            .zip(&self.target_on_grid)
            .map(|(&z, &w)| (crate::harmonic::poisson_eval_raw(jumps, &self.values, z) - w).norm())
            .fold(0.0, f64::max)
    }

    fn penalty(&self, jumps: &[f64]) -> f64 {
        self.targets_at_norm
            .iter()
            .map(|&(alpha, w)| (value_on(jumps, &self.values, alpha) - w).norm())
            .sum()
    }

    fn violation(&self, jumps: &[f64]) -> f64 {
        let poles: Vec<C> = jumps.iter().map(|&t| cis(t)).collect();
        let n = self.values.len();
        let res: Vec<C> = (0..n)
            .map(|j| C::new(0.0, 1.0 / TAU) * (self.values[j] - self.values[(j + n - 1) % n]))
            .collect();
        RationalFunction::simple(&poles, &res)
            .zeros()
            .iter()
            .map(|z| (1.0 - z.norm()).max(0.0))
            .sum()
    }
}

fn value_on(jumps: &[f64], values: &[C], alpha: f64) -> C {
    let base = jumps[0];
    let t = base + (alpha - base).rem_euclid(TAU);
    let j = jumps.iter().rposition(|&s| s <= t).unwrap_or(jumps.len() - 1);
    values[j]
}

/// Fits the jump angles of a step function with the polygon's vertices as values.
///
/// Parameters are an offset plus `n - 1` logits (the last logit is pinned at 0);
/// arc lengths are the softmax of the logits times `2π`, so they stay positive
/// and sum to one turn. The objective is the sup error against `target` on
/// [`objective_grid`], plus the three-point penalty, plus a barrier that grows
/// with the depth of any zero of `h'` inside the disk.
pub fn fit_step_map<T: PlaneMap + ?Sized>(
    target: &T,
    inscribed: &InscribedPolygon,
    config: &FitConfig,
    reference_dilatation: Option<(&dyn Analytic, usize)>,
) -> Result<FitOutcome, PipelineError> {
    if inscribed.polygon.orientation() != Orientation::Positive {
        return Err(PipelineError::InvalidConfig("polygon must be positively oriented".into()));
    }
    let values = inscribed.polygon.vertices().to_vec();
    let n = values.len();
    let grid = objective_grid();
    let target_on_grid = grid.iter().map(|&z| target.eval(z)).collect();
    let targets_at_norm = inscribed
        .normalization_angles
        .map(|a| (a, target.eval(cis(a) * BOUNDARY_RADIUS)));
    let problem = FitProblem {
        values,
        grid,
        target_on_grid,
        targets_at_norm,
    };

    let j0 = &inscribed.initial_jumps;
    let lengths: Vec<f64> = (0..n)
        .map(|j| {
            let next = if j + 1 < n { j0[j + 1] } else { j0[0] + TAU };
            (next - j0[j]).rem_euclid(TAU)
        })
        .collect();
    let mut x0 = vec![j0[0]];
    x0.extend(lengths[..n - 1].iter().map(|l| (l / lengths[n - 1]).ln()));

    let e0 = problem.sup_error(&problem.angles(&x0));
    let p0 = problem.penalty(&problem.angles(&x0));
    let weight = 10.0 * (e0 + p0) + 1.0;
    let objective = |x: &[f64]| {
        let jumps = problem.angles(x);
        let base = problem.sup_error(&jumps) + problem.penalty(&jumps);
        let v = problem.violation(&jumps);
        if v > 0.0 {
            base + weight * (1.0 + v)
        } else {
            base
        }
    };
    let initial_objective = objective(&x0);
    let opts = NelderMeadOptions {
        max_evals: config.budget,
        f_tol: 1e-12,
        initial_step: 0.05,
        seed: Some(config.seed),
    };
    let best = if initial_objective == 0.0 {
        crate::optim::Minimum {
            x: x0.clone(),
            value: 0.0,
            evals: 1,
            converged: true,
        }
    } else {
        nelder_mead(objective, &x0, &opts)
    };
    let jumps = problem.angles(&best.x);
    let raw: Vec<(f64, C)> = jumps.iter().zip(&problem.values).map(|(&t, &v)| (t, v)).collect();
    let step = StepFunction::new(&raw)?;
    let map = decompose(&step, config.truncation)?;
    let certificate = certify(&map, &CertifyConfig::default());

    let dilatation_distance = match reference_dilatation {
        Some((reference, degree)) => {
            let b = blaschke_truncation(reference, degree)?;
            let a = crate::harmonic::dilatation(&map)?;
            let fa = |z: C| a.eval(z);
            let fb = |z: C| b.eval(z);
            Some(sup_error(&fa, &fb, 0.5))
        }
        None => None,
    };

    let outcome = FitOutcome {
        n,
        final_objective: problem.sup_error(&jumps),
        three_point_penalty: problem.penalty(&jumps),
        initial_objective: e0,
        evaluations: best.evals,
        step,
        certificate,
        dilatation_distance,
    };
    if outcome.certificate.verdict != Verdict::Univalent {
        return Err(PipelineError::FitFailed(Box::new(outcome)));
    }
    Ok(outcome)
}

/// Renormalizes `f` so that `f(0) = 0`, `f_z(0) = 1`, `f_zbar(0) = 0`.
///
/// The real-affine map commutes with the Poisson extension, so it is applied to
/// the arc values and the result decomposed again.
pub fn normalize(f: &HarmonicStepMap) -> Result<(HarmonicStepMap, Normalization), PipelineError> {
    let zero = C::new(0.0, 0.0);
    let (a0, a1, b1) = (f.constant_term, f.hprime_at(zero), f.gprime_at(zero));
    // residuals below the rounding floor of the jump sums carry no information;
    // renormalizing would only shuffle the last bits of the values
    let floor = 16.0 * f64::EPSILON * f.source.jumps().iter().map(|d| d.norm()).sum::<f64>().max(1.0);
    if a0.norm() <= floor && (a1 - 1.0).norm() <= floor && b1.norm() <= floor {
        return Ok((f.clone(), Normalization::new(zero, C::new(1.0, 0.0), zero)?));
    }
    let norm = Normalization::new(a0, a1, b1)?;
    let step = f.source.map_values(|w| norm.apply(w));
    Ok((decompose(&step, f.truncation())?, norm))
}

/// `(f(0), h'(0), g'(0))` of a step map.
pub fn normalization_residuals(f: &HarmonicStepMap) -> (C, C, C) {
    let zero = C::new(0.0, 0.0);
    (f.constant_term, f.hprime_at(zero), f.gprime_at(zero))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub target: String,
    pub t: f64,
    pub n_schedule: Vec<usize>,
    pub rho: f64,
    /// Blaschke degree for the dilatation comparison; `None` means `n - 2`.
    pub blaschke_degree: Option<usize>,
    pub normalization_angles: [f64; 3],
    pub budget: usize,
    pub seed: u64,
    /// Record wall-clock time per record (breaks byte-identical output).
    pub timing: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            target: "koebe_harmonic".into(),
            t: 0.9,
            n_schedule: vec![8, 16, 32, 64],
            rho: 0.99,
            blaschke_degree: None,
            normalization_angles: [0.0, 0.5 * PI, PI],
            budget: 2000,
            seed: 0,
            timing: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.t > 0.0 && self.t < 1.0) {
            return Err(PipelineError::InvalidT(self.t));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(BlaschkeError::InvalidRho(self.rho).into());
        }
        if self.n_schedule.is_empty() || self.n_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PipelineError::InvalidConfig("n schedule must be strictly increasing".into()));
        }
        if self.n_schedule[0] < 3 {
            return Err(BoundaryError::NotAPolygon(format!("{} vertices", self.n_schedule[0])).into());
        }
        polygon_angles(3, self.normalization_angles)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Accepted,
    FitFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineRecord {
    pub n: usize,
    pub status: RecordStatus,
    pub polygon: Vec<C>,
    pub fitted: StepFunction,
    pub normalized: StepFunction,
    pub certificate: UnivalenceCertificate,
    pub normalization: Normalization,
    /// `(f(0), h'(0), g'(0))` of the normalized map; ideally `(0, 1, 0)`.
    pub normalized_residuals: (C, C, C),
    /// Sup errors of the fitted map against `f_t` on `REPORT_RADII`.
    pub fit_errors: [f64; 3],
    /// Sup errors of the normalized map against `f_t` on `REPORT_RADII`.
    pub normalized_errors: [f64; 3],
    pub initial_objective: f64,
    pub final_objective: f64,
    pub evaluations: usize,
    pub blaschke_degree: usize,
    pub dilatation_distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub config: PipelineConfig,
    pub records: Vec<PipelineRecord>,
}

fn record_for(f_t: &TargetMap, config: &PipelineConfig, n: usize) -> Result<PipelineRecord, PipelineError> {
    let start = Instant::now();
    let inscribed = inscribe_polygon(f_t, n, config.normalization_angles)?;
    let degree = config.blaschke_degree.unwrap_or(n - 2);
    let reference = crate::blaschke::dilate_rho(f_t.dilatation(), config.rho)?;
    let fit_config = FitConfig {
        budget: config.budget,
        seed: config.seed.wrapping_add(n as u64),
        ..FitConfig::default()
    };
    let (outcome, status) = match fit_step_map(f_t, &inscribed, &fit_config, Some((&reference, degree))) {
        Ok(o) => (o, RecordStatus::Accepted),
        Err(PipelineError::FitFailed(o)) => (*o, RecordStatus::FitFailed),
        Err(e) => return Err(e),
    };
    let fitted = decompose(&outcome.step, fit_config.truncation)?;
    let (normalized, normalization) = normalize(&fitted)?;
    let errs = |m: &HarmonicStepMap| REPORT_RADII.map(|r| sup_error(m, f_t, r));
    Ok(PipelineRecord {
        n,
        status,
        polygon: inscribed.polygon.vertices().to_vec(),
        fit_errors: errs(&fitted),
        normalized_errors: errs(&normalized),
        normalized_residuals: normalization_residuals(&normalized),
        fitted: outcome.step,
        normalized: normalized.source.clone(),
        certificate: outcome.certificate,
        normalization,
        initial_objective: outcome.initial_objective,
        final_objective: outcome.final_objective,
        evaluations: outcome.evaluations,
        blaschke_degree: degree,
        dilatation_distance: outcome.dilatation_distance,
        seconds: config.timing.then(|| start.elapsed().as_secs_f64()),
    })
}

/// Runs every `n` in the schedule (in parallel) against the dilated target.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    config.validate()?;
    let target = catalog(&config.target)?;
    let f_t = t_dilate(&target, config.t)?;
    let records = config
        .n_schedule
        .par_iter()
        .map(|&n| record_for(&f_t, config, n))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PipelineReport {
        config: config.clone(),
        records,
    })
}
