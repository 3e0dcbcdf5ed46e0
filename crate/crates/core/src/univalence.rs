//! Numerical univalence certificates: argument-principle windings on nested
//! circles, a dilatation bound, a Jacobian sign check and a collision search.
//!
//! A certificate is evidence, not proof. `Univalent` means every test passed;
//! `NotUnivalent` is only issued with an explicit pair of points sharing an image.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harmonic::{dilatation, HarmonicStepMap};
use crate::math::{cis, TAU};
use crate::PlaneMap;

/// Closest approach of the curve to the winding centre.
pub const ON_CURVE_TOL: f64 = 1e-9;
/// Minimum number of initial samples of a winding query.
pub const MIN_SAMPLES: usize = 64;
/// Maximum bisection depth per initial interval.
pub const MAX_DEPTH: u32 = 40;
/// Witness pairs must have images this close ...
pub const WITNESS_IMAGE_TOL: f64 = 1e-10;
/// ... and sources at least this far apart.
pub const WITNESS_SOURCE_SEP: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnivalenceError {
    #[error("image curve passes within 1e-9 of the winding centre {0}")]
    OnCurve(C),
    #[error("winding queries need at least {MIN_SAMPLES} samples")]
    TooFewSamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindingQuery {
    pub center: C,
    pub radius: f64,
    pub samples: usize,
}

impl WindingQuery {
    pub fn new(center: C, radius: f64) -> Self {
        Self {
            center,
            radius,
            samples: 256,
        }
    }

    pub fn run<M: PlaneMap + ?Sized>(&self, map: &M) -> Result<i64, UnivalenceError> {
        if self.samples < MIN_SAMPLES {
            return Err(UnivalenceError::TooFewSamples);
        }
        let c = self.center;
        let at = |t: f64| -> Result<C, UnivalenceError> {
            let w = map.eval(cis(t) * self.radius) - c;
            if !(w.norm() >= ON_CURVE_TOL) {
                return Err(UnivalenceError::OnCurve(c));
            }
            Ok(w)
        };
        let n = self.samples;
        let mut total = 0.0;
        let mut w0 = at(0.0)?;
        let first = w0;
        for j in 0..n {
            let t0 = TAU * j as f64 / n as f64;
            let t1 = TAU * (j + 1) as f64 / n as f64;
            let w1 = if j + 1 == n { first } else { at(t1)? };
            total += arg_increment(&at, t0, t1, w0, w1, 0)?;
            w0 = w1;
        }
        Ok((total / TAU).round() as i64)
    }
}

fn arg_increment<F>(at: &F, t0: f64, t1: f64, w0: C, w1: C, depth: u32) -> Result<f64, UnivalenceError>
where
    F: Fn(f64) -> Result<C, UnivalenceError>,
{
    let inc = (w1 / w0).arg();
    if inc.abs() < FRAC_PI_2 {
        return Ok(inc);
    }
    if depth >= MAX_DEPTH {
        // the curve turns through more than π/2 on an interval of width ~1e-12:
        // it passes (numerically) through the centre
        return Err(UnivalenceError::OnCurve(C::new(f64::NAN, f64::NAN)));
    }
    let tm = 0.5 * (t0 + t1);
    let wm = at(tm)?;
    Ok(arg_increment(at, t0, tm, w0, wm, depth + 1)? + arg_increment(at, tm, t1, wm, w1, depth + 1)?)
}

/// Winding number of `map(|z| = radius)` about `around`.
pub fn winding_number<M: PlaneMap + ?Sized>(map: &M, radius: f64, around: C) -> Result<i64, UnivalenceError> {
    WindingQuery::new(around, radius).run(map).map_err(|e| match e {
        UnivalenceError::OnCurve(_) => UnivalenceError::OnCurve(around),
        other => other,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Univalent,
    NotUnivalent,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapOrientation {
    Preserving,
    Reversing,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub radii: Vec<f64>,
    /// Side of the square probe grid (points outside the circle are dropped).
    pub probe_grid: usize,
    /// Side of the square grid used for the Jacobian sign check.
    pub orientation_grid: usize,
    /// Side of the source grid used for the collision search.
    pub collision_grid: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            radii: vec![0.5, 0.9, 0.99],
            probe_grid: 11,
            orientation_grid: 41,
            collision_grid: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnivalenceCertificate {
    pub verdict: Verdict,
    pub radii_tested: Vec<f64>,
    /// Per radius: 1 when every probe winds once, otherwise the first offending value.
    pub winding_numbers: Vec<i64>,
    pub probes_per_radius: Vec<usize>,
    /// Probes whose winding could not be computed (curve through the probe).
    pub on_curve_probes: usize,
    pub dilatation_sup: f64,
    pub orientation: MapOrientation,
    /// Zeros of `h'` inside the largest tested circle.
    pub hprime_zeros_inside: i64,
    pub witnesses: Option<(C, C)>,
    pub degenerate: bool,
}

impl UnivalenceCertificate {
    fn degenerate(config: &CertifyConfig) -> Self {
        Self {
            verdict: Verdict::Inconclusive,
            radii_tested: config.radii.clone(),
            winding_numbers: Vec::new(),
            probes_per_radius: Vec::new(),
            on_curve_probes: 0,
            dilatation_sup: f64::NAN,
            orientation: MapOrientation::Mixed,
            hprime_zeros_inside: 0,
            witnesses: None,
            degenerate: true,
        }
    }
}

fn square_grid(side: usize, half_width: f64, radius: f64) -> Vec<C> {
    let mut pts = Vec::with_capacity(side * side);
    for i in 0..side {
        for j in 0..side {
            let s = |k: usize| {
                if side == 1 {
                    0.0
                } else {
                    -half_width + 2.0 * half_width * k as f64 / (side - 1) as f64
                }
            };
            let z = C::new(s(j), s(i));
            if z.norm() <= radius {
                pts.push(z);
            }
        }
    }
    pts
}

pub fn certify(map: &HarmonicStepMap, config: &CertifyConfig) -> UnivalenceCertificate {
    if map.step_count() < 2 {
        return UnivalenceCertificate::degenerate(config);
    }
    let Ok(a) = dilatation(map) else {
        return UnivalenceCertificate::degenerate(config);
    };
    let rmax = config.radii.iter().copied().fold(0.0, f64::max);

    let dilatation_sup = config
        .radii
        .iter()
        .map(|&r| {
            (0..4096)
                .map(|j| a.eval(cis(TAU * j as f64 / 4096.0) * r).norm())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);

    let jac: Vec<f64> = square_grid(config.orientation_grid, rmax, rmax)
        .into_par_iter()
        .map(|z| map.jacobian(z))
        .collect();
    let hp = |z: C| map.hprime_at(z);
    let hprime_zeros_inside = winding_number(&hp, rmax, C::new(0.0, 0.0)).unwrap_or(-1);
    let orientation = if jac.iter().all(|&j| j > 0.0) && hprime_zeros_inside == 0 {
        MapOrientation::Preserving
    } else if jac.iter().all(|&j| j < 0.0) {
        MapOrientation::Reversing
    } else {
        MapOrientation::Mixed
    };

    let mut winding_numbers = Vec::new();
    let mut probes_per_radius = Vec::new();
    let mut on_curve_probes = 0;
    for &r in &config.radii {
        let probes: Vec<C> = square_grid(config.probe_grid, 0.95 * r, 0.95 * r)
            .into_iter()
            .map(|z| map.eval(z))
            .collect();
        let results: Vec<Result<i64, UnivalenceError>> = probes
            .par_iter()
            .map(|&w| winding_number(map, r, w))
            .collect();
        on_curve_probes += results.iter().filter(|r| r.is_err()).count();
        let offending = results.iter().filter_map(|r| r.as_ref().ok()).find(|&&w| w != 1);
        winding_numbers.push(offending.copied().unwrap_or(1));
        probes_per_radius.push(probes.len());
    }

    let windings_ok = on_curve_probes == 0 && winding_numbers.iter().all(|&w| w == 1);
    let mut witnesses = None;
    let verdict = if windings_ok && dilatation_sup < 1.0 && orientation == MapOrientation::Preserving {
        Verdict::Univalent
    } else {
        witnesses = collision_search(map, rmax, config.collision_grid);
        if witnesses.is_some() {
            Verdict::NotUnivalent
        } else {
            Verdict::Inconclusive
        }
    };

    UnivalenceCertificate {
        verdict,
        radii_tested: config.radii.clone(),
        winding_numbers,
        probes_per_radius,
        on_curve_probes,
        dilatation_sup,
        orientation,
        hprime_zeros_inside,
        witnesses,
        degenerate: false,
    }
}

/// Looks for `p ≠ q` in `|z| <= radius` with `f(p) = f(q)`.
///
/// Source grid points are hashed by image cell; pairs landing in the same or
/// neighbouring cells while far apart in the source are refined by Newton's
/// method on `q ↦ f(q) - f(p)` using the real-linear differential
/// `x ↦ h'(q) x + conj(g'(q) x)`.
pub fn collision_search(map: &HarmonicStepMap, radius: f64, side: usize) -> Option<(C, C)> {
    let src = square_grid(side, radius, radius);
    let img: Vec<C> = src.par_iter().map(|&z| map.eval(z)).collect();
    let (mut lo, mut hi) = (C::new(f64::INFINITY, f64::INFINITY), C::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for w in &img {
        lo = C::new(lo.re.min(w.re), lo.im.min(w.im));
        hi = C::new(hi.re.max(w.re), hi.im.max(w.im));
    }
    let extent = (hi.re - lo.re).max(hi.im - lo.im);
    if !(extent > 0.0) {
        return None;
    }
    let cell = extent / side as f64;
    let key = |w: C| (((w.re - lo.re) / cell) as i64, ((w.im - lo.im) / cell) as i64);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, &w) in img.iter().enumerate() {
        buckets.entry(key(w)).or_default().push(i);
    }
    let step = 2.0 * radius / (side.max(2) - 1) as f64;
    let mut candidates = Vec::new();
    for (i, &w) in img.iter().enumerate() {
        let (kx, ky) = key(w);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = buckets.get(&(kx + dx, ky + dy)) {
                    for &j in list {
                        if j > i && (src[i] - src[j]).norm() > 1.5 * step {
                            candidates.push(((img[i] - img[j]).norm(), i, j));
                        }
                    }
                }
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    candidates.truncate(4000);
    candidates
        .par_iter()
        .map(|&(_, i, j)| {
            refine_pair(map, src[i], src[j])
                .or_else(|| refine_pair(map, src[j], src[i]))
                .or_else(|| refine_joint(map, src[i], src[j]))
        })
        .find_first(|r| r.is_some())
        .flatten()
}

fn refine_pair(map: &HarmonicStepMap, p: C, q0: C) -> Option<(C, C)> {
    let target = map.eval(p);
    let mut q = q0;
    let mut res = (map.eval(q) - target).norm();
    for _ in 0..80 {
        if res <= 0.1 * WITNESS_IMAGE_TOL {
            break;
        }
        let y = map.eval(q) - target;
        let a = map.hprime_at(q);
        let b = map.gprime_at(q).conj();
        let det = a.norm_sqr() - b.norm_sqr();
        if det.abs() < 1e-300 {
            return None;
        }
        let x = (a.conj() * y - b * y.conj()) / det;
        let mut x = if x.norm() > 0.05 { x / x.norm() * 0.05 } else { x };
        // backtrack until the residual drops
        let mut moved = false;
        for _ in 0..30 {
            let cand = q - x;
            if cand.norm() < 1.0 - 1e-9 {
                let r = (map.eval(cand) - target).norm();
                if r < res {
                    q = cand;
                    res = r;
                    moved = true;
                    break;
                }
            }
            x *= 0.5;
        }
        if !moved {
            return None;
        }
    }
    let ok = q.norm() < 1.0 && res <= WITNESS_IMAGE_TOL && (p - q).norm() >= WITNESS_SOURCE_SEP;
    ok.then_some((p, q))
}

/// Real 2×2 differential of the map at `z`, columns `∂x f` and `∂y f`.
fn differential(map: &HarmonicStepMap, z: C) -> [C; 2] {
    let a = map.hprime_at(z);
    let b = map.gprime_at(z).conj();
    [a + b, C::i() * (a - b)]
}

/// Gauss–Newton on `(p, q) ↦ f(p) - f(q)` with the minimum-norm step. Catches
/// maps that collapse a curve, where Newton on one point slides back onto the other.
fn refine_joint(map: &HarmonicStepMap, p0: C, q0: C) -> Option<(C, C)> {
    let (mut p, mut q) = (p0, q0);
    let mut r = map.eval(p) - map.eval(q);
    for _ in 0..80 {
        if r.norm() <= 0.1 * WITNESS_IMAGE_TOL {
            break;
        }
        let [px, py] = differential(map, p);
        let [qx, qy] = differential(map, q);
        let cols = [px, py, -qx, -qy];
        // J Jᵀ as a symmetric 2×2 matrix
        let (mut m11, mut m12, mut m22) = (0.0, 0.0, 0.0);
        for c in &cols {
            m11 += c.re * c.re;
            m12 += c.re * c.im;
            m22 += c.im * c.im;
        }
        let det = m11 * m22 - m12 * m12;
        if !(det.abs() > 1e-300) {
            return None;
        }
        let u = C::new((m22 * r.re - m12 * r.im) / det, (m11 * r.im - m12 * r.re) / det);
        let d: Vec<f64> = cols.iter().map(|c| c.re * u.re + c.im * u.im).collect();
        let mut dp = C::new(d[0], d[1]);
        let mut dq = C::new(d[2], d[3]);
        let len = (dp.norm_sqr() + dq.norm_sqr()).sqrt();
        if len > 0.05 {
            dp *= 0.05 / len;
            dq *= 0.05 / len;
        }
        let mut moved = false;
        for _ in 0..30 {
            let (cp, cq) = (p - dp, q - dq);
            if cp.norm() < 1.0 - 1e-9 && cq.norm() < 1.0 - 1e-9 {
                let cr = map.eval(cp) - map.eval(cq);
                if cr.norm() < r.norm() {
                    (p, q, r) = (cp, cq, cr);
                    moved = true;
                    break;
                }
            }
            dp *= 0.5;
            dq *= 0.5;
        }
        if !moved {
            return None;
        }
    }
    let ok = r.norm() <= WITNESS_IMAGE_TOL && (p - q).norm() >= WITNESS_SOURCE_SEP;
    ok.then_some((p, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::StepFunction;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn winding_examples() {
        let id = |z: C| z;
        assert_eq!(winding_number(&id, 0.5, c(0.0, 0.0)), Ok(1));
        assert_eq!(winding_number(&id, 0.5, c(2.0, 0.0)), Ok(0));
        let sq = |z: C| z * z;
        assert_eq!(winding_number(&sq, 0.5, c(0.01, 0.0)), Ok(2));
        assert!(matches!(winding_number(&id, 0.5, c(0.5, 0.0)), Err(UnivalenceError::OnCurve(_))));
        assert_eq!(
            WindingQuery { center: c(0.0, 0.0), radius: 0.5, samples: 10 }.run(&id),
            Err(UnivalenceError::TooFewSamples)
        );

        let pent = HarmonicStepMap::new(&StepFunction::regular_polygon(5));
        let centre = pent.eval(c(0.0, 0.0));
        assert_eq!(winding_number(&pent, 0.99, centre), Ok(1));
    }

    #[test]
    fn square_is_univalent() {
        let m = HarmonicStepMap::new(&StepFunction::regular_polygon(4));
        let cert = certify(&m, &CertifyConfig::default());
        assert_eq!(cert.verdict, Verdict::Univalent);
        assert!(cert.winding_numbers.iter().all(|&w| w == 1));
        // |a(z)| = |z|² on the largest circle
        assert!((cert.dilatation_sup - 0.99f64.powi(2)).abs() < 1e-9);
        assert_eq!(cert.orientation, MapOrientation::Preserving);
        assert_eq!(cert, certify(&m, &CertifyConfig::default()));
    }

    #[test]
    fn crossing_polygon_has_witness() {
        let sf = StepFunction::equal_arcs(&[c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)], 0.0).unwrap();
        let m = HarmonicStepMap::new(&sf);
        let cert = certify(&m, &CertifyConfig::default());
        assert_eq!(cert.verdict, Verdict::NotUnivalent);
        let (p, q) = cert.witnesses.unwrap();
        assert!((m.eval(p) - m.eval(q)).norm() <= WITNESS_IMAGE_TOL);
        assert!((p - q).norm() >= WITNESS_SOURCE_SEP);
    }

    #[test]
    fn constant_is_degenerate() {
        let m = HarmonicStepMap::new(&StepFunction::new(&[(0.0, c(1.0, 2.0))]).unwrap());
        let cert = certify(&m, &CertifyConfig::default());
        assert_eq!(cert.verdict, Verdict::Inconclusive);
        assert!(cert.degenerate);
    }

    #[test]
    fn contracting_dilatation_preserves_orientation() {
        for n in 3..=7 {
            let m = HarmonicStepMap::new(&StepFunction::regular_polygon(n));
            let cert = certify(&m, &CertifyConfig::default());
            assert!(cert.dilatation_sup < 1.0);
            assert_eq!(cert.orientation, MapOrientation::Preserving);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn winding_affine_invariant(ar in 0.2..3.0f64, at in 0.0..TAU, br in -2.0..2.0f64, bi in -2.0..2.0f64,
                                    pr in 0.0..0.8f64, pt in 0.0..TAU) {
            let m = HarmonicStepMap::new(&StepFunction::regular_polygon(5));
            let alpha = C::from_polar(ar, at);
            let beta = c(br, bi);
            let probe = m.eval(C::from_polar(pr, pt));
            let moved = |z: C| alpha * m.eval(z) + beta;
            let w0 = winding_number(&m, 0.9, probe).unwrap();
            let w1 = winding_number(&moved, 0.9, alpha * probe + beta).unwrap();
            prop_assert_eq!(w0, 1);
            prop_assert_eq!(w0, w1);
        }
    }
}
