//! Poisson extension of a step function and its analytic decomposition.
//!
//! For a step function with arc values `c_j` and jumps `Δ_j = c_j - c_{j-1}` at
//! `ζ_j = e^{iθ_j}`, the extension is `f = c0 + h + conj(g)` with
//!
//! ```text
//! c_k  = (1 / 2πik) Σ_j Δ_j e^{-ikθ_j}            (k ≠ 0)
//! h'(z) = Σ_j (iΔ_j / 2π)        / (z - ζ_j)
//! g'(z) = Σ_j (i conj(Δ_j) / 2π) / (z - ζ_j)
//! ```
//!
//! The residue convention is pinned by a test against the term-by-term
//! derivative of the truncated series.

use std::f64::consts::PI;

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blaschke::Analytic;
use crate::boundary::StepFunction;
use crate::math::{aberth, cis, TAU};
use crate::PlaneMap;

/// Default truncation degree of the `h`/`g` power series.
pub const DEFAULT_TRUNCATION: usize = 512;
/// Closest approach to the unit circle accepted by the checked evaluator.
pub const BOUNDARY_MARGIN: f64 = 1e-12;
/// Circle samples used for the dilatation sup estimate.
pub const SUP_SAMPLES: usize = 4096;
/// Radius of the sup-estimate circle.
pub const SUP_RADIUS: f64 = 1.0 - 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarmonicError {
    #[error("|z| = {0} is within 1e-12 of the unit circle; use boundary values instead")]
    NearBoundary(f64),
    #[error("analytic part h' vanishes identically")]
    DegenerateAnalyticPart,
    #[error("truncation degree must be at least 1")]
    InvalidTruncation,
}

/// Harmonic measure of the arc `[a, b]` (with `0 < b - a <= 2π`) seen from `z`.
///
/// The angle subtended by the chord is taken on the branch centred at
/// `L/2 + π/2`, which keeps the measure inside `[0, 1]` without cut jumps.
#[inline]
pub(crate) fn arc_measure(a: f64, b: f64, z: C) -> f64 {
    let len = b - a;
    if len >= TAU {
        return 1.0;
    }
    if z == C::new(0.0, 0.0) {
        return len / TAU;
    }
    let ratio = (cis(b) - z) / (cis(a) - z);
    let mut psi = ratio.im.atan2(ratio.re);
    let centre = 0.5 * len + 0.5 * PI;
    psi += TAU * ((centre - psi) / TAU).round();
    (psi / PI - len / TAU).clamp(0.0, 1.0)
}

/// Poisson extension of the step function with arc starts `jumps` (ascending,
/// spanning less than one turn) and values `values`.
pub(crate) fn poisson_eval_raw(jumps: &[f64], values: &[C], z: C) -> C {
    let n = jumps.len();
    if n == 1 {
        return values[0];
    }
    let mut acc = C::new(0.0, 0.0);
    for j in 0..n {
        let a = jumps[j];
        let b = if j + 1 < n { jumps[j + 1] } else { jumps[0] + TAU };
        acc += values[j] * arc_measure(a, b, z);
    }
    acc
}

/// Per-arc harmonic measures at `z`; they lie in `[0, 1]` and sum to one.
pub fn harmonic_measures(sf: &StepFunction, z: C) -> Vec<f64> {
    let th = sf.jump_angles();
    let n = th.len();
    (0..n)
        .map(|j| {
            let b = if j + 1 < n { th[j + 1] } else { th[0] + TAU };
            if n == 1 {
                1.0
            } else {
                arc_measure(th[j], b, z)
            }
        })
        .collect()
}

/// Exact value of the Poisson integral of `sf` at an interior point.
pub fn eval_poisson_extension(sf: &StepFunction, z: C) -> Result<C, HarmonicError> {
    if z.norm() > 1.0 - BOUNDARY_MARGIN {
        return Err(HarmonicError::NearBoundary(z.norm()));
    }
    let values: Vec<C> = sf.values().collect();
    Ok(poisson_eval_raw(&sf.jump_angles(), &values, z))
}

/// Fourier coefficient `c_k = (1/2π) ∫ φ(t) e^{-ikt} dt` by the jump formula.
pub fn fourier_coefficient(sf: &StepFunction, k: i64) -> C {
    if k == 0 {
        return sf
            .values()
            .zip(sf.arc_lengths())
            .map(|(v, l)| v * l)
            .sum::<C>()
            / TAU;
    }
    if sf.step_count() == 1 {
        return C::new(0.0, 0.0);
    }
    let kf = k as f64;
    let sum: C = sf
        .jumps()
        .iter()
        .zip(sf.jump_angles())
        .map(|(&d, t)| d * cis(-kf * t))
        .sum();
    sum / C::new(0.0, TAU * kf)
}

/// Coefficients for every `k` in `ks`, in iteration order.
pub fn fourier_coefficients<I: IntoIterator<Item = i64>>(sf: &StepFunction, ks: I) -> Vec<(i64, C)> {
    ks.into_iter().map(|k| (k, fourier_coefficient(sf, k))).collect()
}

/// A pole with its principal-part coefficients: `Σ_m coefficients[m] / (z - pole)^{m+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleTerm {
    pub pole: C,
    pub coefficients: Vec<C>,
}

impl PoleTerm {
    pub fn order(&self) -> usize {
        self.coefficients.len()
    }
}

/// A rational function in partial-fraction form plus a polynomial part.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RationalFunction {
    pub terms: Vec<PoleTerm>,
    pub polynomial: Vec<C>,
}

impl RationalFunction {
    /// Simple poles with the given residues.
    pub fn simple(poles: &[C], residues: &[C]) -> Self {
        Self {
            terms: poles
                .iter()
                .zip(residues)
                .map(|(&pole, &r)| PoleTerm {
                    pole,
                    coefficients: vec![r],
                })
                .collect(),
            polynomial: Vec::new(),
        }
    }

    pub fn eval(&self, z: C) -> C {
        let mut acc = crate::math::horner(&self.polynomial, z);
        for t in &self.terms {
            let w = (z - t.pole).inv();
            let mut p = w;
            for &c in &t.coefficients {
                acc += c * p;
                p *= w;
            }
        }
        acc
    }

    pub fn derivative_eval(&self, z: C) -> C {
        let dp = crate::math::series_derivative(&self.polynomial);
        let mut acc = crate::math::horner(&dp, z);
        for t in &self.terms {
            let w = (z - t.pole).inv();
            let mut p = w * w;
            for (m, &c) in t.coefficients.iter().enumerate() {
                acc -= c * p * (m + 1) as f64;
                p *= w;
            }
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.coefficients.iter().all(|c| *c == C::new(0.0, 0.0)))
            && self.polynomial.iter().all(|c| *c == C::new(0.0, 0.0))
    }

    /// Total pole count with multiplicity (degree of the reduced denominator).
    pub fn order(&self) -> usize {
        self.terms.iter().map(PoleTerm::order).sum()
    }

    pub fn max_pole_order(&self) -> usize {
        self.terms.iter().map(PoleTerm::order).max().unwrap_or(0)
    }

    /// Zeros of a function with only simple poles and no polynomial part.
    ///
    /// The numerator `N(z) = R(z) Π (z - ζ_j)` has degree `n - 1 - p`, where `p`
    /// counts the leading vanishing moments `Σ r_j ζ_j^m`; its zeros are found
    /// by Aberth iteration using only partial-fraction evaluations.
    pub fn zeros(&self) -> Vec<C> {
        assert!(
            self.max_pole_order() <= 1 && self.polynomial.is_empty(),
            "zeros() needs simple poles only"
        );
        let n = self.terms.len();
        if n == 0 {
            return Vec::new();
        }
        let scale: f64 = self.terms.iter().map(|t| t.coefficients[0].norm()).sum();
        if scale == 0.0 {
            return Vec::new();
        }
        let mut p = None;
        for m in 0..n {
            let s: C = self
                .terms
                .iter()
                .map(|t| t.coefficients[0] * t.pole.powu(m as u32))
                .sum();
            if s.norm() > 1e-12 * scale {
                p = Some(m);
                break;
            }
        }
        let Some(p) = p else {
            return Vec::new();
        };
        let degree = n - 1 - p;
        aberth(degree, 1.5, |z| {
            let mut val = C::new(0.0, 0.0);
            let mut der = C::new(0.0, 0.0);
            let mut poles = C::new(0.0, 0.0);
            for t in &self.terms {
                let w = (z - t.pole).inv();
                val += t.coefficients[0] * w;
                der -= t.coefficients[0] * w * w;
                poles += w;
            }
            der / val + poles
        })
    }
}

/// Poisson extension of a step function with its analytic data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicStepMap {
    pub source: StepFunction,
    /// `f(0)`, the arc-length weighted mean of the boundary values.
    pub constant_term: C,
    /// Taylor coefficients of `h`; index `k` multiplies `z^k`, index 0 is zero.
    pub h_series: Vec<C>,
    /// Taylor coefficients of `g`, so that `f = c0 + h + conj(g)`.
    pub g_series: Vec<C>,
    pub hprime: RationalFunction,
    pub gprime: RationalFunction,
}

/// Split the extension of `sf` into `c0 + h + conj(g)`, truncating series at `degree`.
pub fn decompose(sf: &StepFunction, degree: usize) -> Result<HarmonicStepMap, HarmonicError> {
    if degree == 0 {
        return Err(HarmonicError::InvalidTruncation);
    }
    let constant_term = fourier_coefficient(sf, 0);
    let mut h_series = vec![C::new(0.0, 0.0); degree + 1];
    let mut g_series = vec![C::new(0.0, 0.0); degree + 1];
    for k in 1..=degree as i64 {
        h_series[k as usize] = fourier_coefficient(sf, k);
        g_series[k as usize] = fourier_coefficient(sf, -k).conj();
    }
    let (hprime, gprime) = derivative_parts(sf);
    Ok(HarmonicStepMap {
        source: sf.clone(),
        constant_term,
        h_series,
        g_series,
        hprime,
        gprime,
    })
}

/// Closed-form `h'` and `g'` of the extension of `sf`.
pub(crate) fn derivative_parts(sf: &StepFunction) -> (RationalFunction, RationalFunction) {
    if sf.step_count() == 1 {
        return (RationalFunction::default(), RationalFunction::default());
    }
    let poles: Vec<C> = sf.jump_angles().into_iter().map(cis).collect();
    let jumps = sf.jumps();
    let hres: Vec<C> = jumps.iter().map(|d| C::new(0.0, 1.0) * d / TAU).collect();
    let gres: Vec<C> = jumps.iter().map(|d| C::new(0.0, 1.0) * d.conj() / TAU).collect();
    (
        RationalFunction::simple(&poles, &hres),
        RationalFunction::simple(&poles, &gres),
    )
}

impl HarmonicStepMap {
    pub fn new(sf: &StepFunction) -> Self {
        decompose(sf, DEFAULT_TRUNCATION).expect("default truncation is positive")
    }

    pub fn truncation(&self) -> usize {
        self.h_series.len() - 1
    }

    pub fn step_count(&self) -> usize {
        self.source.step_count()
    }

    /// Closed-form value at an interior point.
    pub fn eval_checked(&self, z: C) -> Result<C, HarmonicError> {
        eval_poisson_extension(&self.source, z)
    }

    /// `c0 + h + conj(g)` from the truncated series.
    pub fn eval_series(&self, z: C) -> C {
        self.constant_term
            + crate::math::horner(&self.h_series, z)
            + crate::math::horner(&self.g_series, z).conj()
    }

    /// `h(z) = (i/2π) Σ Δ_j Log(1 - z conj(ζ_j))`.
    pub fn h(&self, z: C) -> C {
        self.log_sum(z, false)
    }

    /// `g(z) = (i/2π) Σ conj(Δ_j) Log(1 - z conj(ζ_j))`.
    pub fn g(&self, z: C) -> C {
        self.log_sum(z, true)
    }

    fn log_sum(&self, z: C, conj: bool) -> C {
        if self.step_count() == 1 {
            return C::new(0.0, 0.0);
        }
        let mut acc = C::new(0.0, 0.0);
        for (d, t) in self.source.jumps().iter().zip(self.source.jump_angles()) {
            let d = if conj { d.conj() } else { *d };
            acc += d * (C::new(1.0, 0.0) - z * cis(-t)).ln();
        }
        acc * C::new(0.0, 1.0 / TAU)
    }

    pub fn hprime_at(&self, z: C) -> C {
        self.hprime.eval(z)
    }

    pub fn gprime_at(&self, z: C) -> C {
        self.gprime.eval(z)
    }

    /// Term-by-term derivative of the truncated `h` series.
    pub fn hprime_series(&self, z: C) -> C {
        crate::math::horner(&crate::math::series_derivative(&self.h_series), z)
    }

    pub fn gprime_series(&self, z: C) -> C {
        crate::math::horner(&crate::math::series_derivative(&self.g_series), z)
    }

    /// Jacobian `|h'|² - |g'|²` at `z`.
    pub fn jacobian(&self, z: C) -> f64 {
        self.hprime.eval(z).norm_sqr() - self.gprime.eval(z).norm_sqr()
    }
}

impl PlaneMap for HarmonicStepMap {
    fn eval(&self, z: C) -> C {
        let values: Vec<C> = self.source.values().collect();
        poisson_eval_raw(&self.source.jump_angles(), &values, z)
    }
}

/// The analytic dilatation `a = g'/h'` of a harmonic map.
///
/// Both derivatives share their unit-circle poles, so the ratio is kept as the
/// pair of partial-fraction forms; the common poles cancel on evaluation and
/// the reduced zeros and poles are available through [`Dilatation::zeros`]
/// and [`Dilatation::poles`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dilatation {
    pub numerator: RationalFunction,
    pub denominator: RationalFunction,
    /// Max of `|a|` over [`SUP_SAMPLES`] points on `|z| = 1 - 1e-6`.
    pub sup_bound_estimate: f64,
    /// Set when the estimate reaches 1 (the map is not strictly sense-preserving).
    pub reaches_one: bool,
}

impl Dilatation {
    pub fn from_parts(hprime: RationalFunction, gprime: RationalFunction) -> Result<Self, HarmonicError> {
        if hprime.is_zero() {
            return Err(HarmonicError::DegenerateAnalyticPart);
        }
        let mut d = Dilatation {
            numerator: gprime,
            denominator: hprime,
            sup_bound_estimate: 0.0,
            reaches_one: false,
        };
        let sup = (0..SUP_SAMPLES)
            .map(|j| d.eval(cis(TAU * j as f64 / SUP_SAMPLES as f64) * SUP_RADIUS).norm())
            .fold(0.0, f64::max);
        d.sup_bound_estimate = sup;
        d.reaches_one = sup >= 1.0;
        Ok(d)
    }

    pub fn eval(&self, z: C) -> C {
        self.numerator.eval(z) / self.denominator.eval(z)
    }

    /// Zeros of `g'`, the zeros of the reduced ratio.
    pub fn zeros(&self) -> Vec<C> {
        self.numerator.zeros()
    }

    /// Zeros of `h'`, the poles of the reduced ratio.
    pub fn poles(&self) -> Vec<C> {
        self.denominator.zeros()
    }

    /// Poles of the reduced ratio inside the open unit disk.
    pub fn poles_in_disk(&self) -> Vec<C> {
        self.poles().into_iter().filter(|p| p.norm() < 1.0).collect()
    }
}

impl Analytic for Dilatation {
    fn eval(&self, z: C) -> C {
        Dilatation::eval(self, z)
    }
}

pub fn dilatation(map: &HarmonicStepMap) -> Result<Dilatation, HarmonicError> {
    Dilatation::from_parts(map.hprime.clone(), map.gprime.clone())
}

/// CSV rows `k,re,im` for the given coefficients.
pub fn coefficients_csv(coeffs: &[(i64, C)]) -> String {
    let mut out = String::from("k,re,im\n");
    for (k, c) in coeffs {
        out.push_str(&format!("{k},{},{}\n", c.re, c.im));
    }
    out
}

/// CSV rows `re_z,im_z,re_f,im_f` for an evaluation grid.
pub fn grid_csv(points: &[C], values: &[C]) -> String {
    let mut out = String::from("re_z,im_z,re_f,im_f\n");
    for (z, w) in points.iter().zip(values) {
        out.push_str(&format!("{},{},{},{}\n", z.re, z.im, w.re, w.im));
    }
    out
}

/// Deterministic polar grid: `rings` radii `radius * i / rings` (i = 1..=rings)
/// times `spokes` angles, plus the centre.
pub fn polar_grid(radius: f64, rings: usize, spokes: usize) -> Vec<C> {
    let mut pts = vec![C::new(0.0, 0.0)];
    for i in 1..=rings {
        let r = radius * i as f64 / rings as f64;
        for j in 0..spokes {
            pts.push(cis(TAU * j as f64 / spokes as f64) * r);
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn triangle() -> StepFunction {
        StepFunction::equal_arcs(&[c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)], 0.0).unwrap()
    }

    fn five_step() -> StepFunction {
        StepFunction::new(&[
            (0.3, c(1.0, 0.2)),
            (1.1, c(0.1, 1.3)),
            (2.9, c(-0.9, 0.4)),
            (4.0, c(-0.6, -1.0)),
            (5.2, c(0.7, -0.8)),
        ])
        .unwrap()
    }

    #[test]
    fn constants_are_reproduced() {
        let sf = StepFunction::new(&[(0.0, c(2.0, 3.0))]).unwrap();
        for z in [c(0.0, 0.0), c(0.5, -0.3), c(-0.9, 0.1)] {
            assert_eq!(eval_poisson_extension(&sf, z).unwrap(), c(2.0, 3.0));
        }
    }

    #[test]
    fn centre_value_is_mean() {
        let v = eval_poisson_extension(&triangle(), c(0.0, 0.0)).unwrap();
        assert!((v - c(0.0, 1.0 / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn near_boundary_rejected() {
        let err = eval_poisson_extension(&triangle(), c(1.0 - 1e-13, 0.0)).unwrap_err();
        assert!(matches!(err, HarmonicError::NearBoundary(_)));
    }

    #[test]
    fn fourier_examples() {
        let constant = StepFunction::new(&[(1.0, c(0.5, -2.0))]).unwrap();
        assert_eq!(fourier_coefficient(&constant, 0), c(0.5, -2.0));
        assert_eq!(fourier_coefficient(&constant, 3), c(0.0, 0.0));

        let halves = StepFunction::equal_arcs(&[c(1.0, 0.0), c(-1.0, 0.0)], 0.0).unwrap();
        for k in [2i64, 4, -2, 6] {
            assert!(fourier_coefficient(&halves, k).norm() < 1e-15);
        }
        // hand integration: c_1 = (1/2π)(∫_0^π e^{-it} - ∫_π^{2π} e^{-it}) = -2i/π
        let c1 = fourier_coefficient(&halves, 1);
        assert!((c1 - c(0.0, -2.0 / PI)).norm() < 1e-15);
        assert!((c1.norm() - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn constant_decomposes_to_zero() {
        let sf = StepFunction::new(&[(0.0, c(1.0, 1.0))]).unwrap();
        let m = decompose(&sf, 16).unwrap();
        assert!(m.h_series.iter().chain(&m.g_series).all(|c| c.norm() == 0.0));
        assert!(m.hprime.is_zero() && m.gprime.is_zero());
        assert_eq!(dilatation(&m), Err(HarmonicError::DegenerateAnalyticPart));
    }

    #[test]
    fn residue_convention_matches_series_derivative() {
        let m = decompose(&five_step(), 512).unwrap();
        for j in 0..64 {
            let z = cis(TAU * j as f64 / 64.0) * 0.5;
            assert!((m.hprime_at(z) - m.hprime_series(z)).norm() < 1e-10);
            assert!((m.gprime_at(z) - m.gprime_series(z)).norm() < 1e-10);
        }
    }

    #[test]
    fn log_forms_match_series() {
        let m = decompose(&five_step(), 512).unwrap();
        let z = c(0.31, -0.42);
        let hs = crate::math::horner(&m.h_series, z);
        let gs = crate::math::horner(&m.g_series, z);
        assert!((m.h(z) - hs).norm() < 1e-12);
        assert!((m.g(z) - gs).norm() < 1e-12);
        assert!((m.eval_series(z) - m.eval(z)).norm() < 1e-12);
    }

    #[test]
    fn triangle_poles_at_cube_roots() {
        let m = HarmonicStepMap::new(&triangle());
        assert_eq!(m.hprime.terms.len(), 3);
        assert_eq!(m.hprime.max_pole_order(), 1);
        for (j, t) in m.hprime.terms.iter().enumerate() {
            assert!((t.pole - cis(TAU * j as f64 / 3.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn regular_polygon_dilatation_is_monomial() {
        for n in 3..=8 {
            let m = HarmonicStepMap::new(&StepFunction::regular_polygon(n));
            let a = dilatation(&m).unwrap();
            let w = cis(TAU / n as f64);
            // a(z) = (1 - ω)/(1 - conj ω) z^{n-2}
            let lambda = (C::new(1.0, 0.0) - w) / (C::new(1.0, 0.0) - w.conj());
            for z in [c(0.3, 0.1), c(-0.5, 0.6), c(0.0, -0.8)] {
                assert!((a.eval(z) - lambda * z.powu(n as u32 - 2)).norm() < 1e-12);
            }
            assert!(a.sup_bound_estimate < 1.0 && !a.reaches_one);
            assert!(a.poles_in_disk().is_empty());
        }
    }

    #[test]
    fn analytic_only_data_has_zero_dilatation() {
        let hp = RationalFunction::simple(&[c(2.0, 0.0)], &[c(1.0, 0.0)]);
        let a = Dilatation::from_parts(hp, RationalFunction::default()).unwrap();
        assert_eq!(a.eval(c(0.2, 0.3)), c(0.0, 0.0));
        assert_eq!(a.sup_bound_estimate, 0.0);
    }

    #[test]
    fn reversed_square_flags_sup() {
        let sf = StepFunction::equal_arcs(&[c(1.0, 0.0), c(0.0, -1.0), c(-1.0, 0.0), c(0.0, 1.0)], 0.0)
            .unwrap();
        let a = dilatation(&HarmonicStepMap::new(&sf)).unwrap();
        assert!(a.reaches_one && a.sup_bound_estimate >= 1.0);
        let sampled = (0..256)
            .map(|j| {
                let z = cis(TAU * j as f64 / 256.0) * 0.5;
                a.eval(z).norm()
            })
            .fold(0.0, f64::max);
        assert!(sampled > 1.0);
    }

    #[test]
    fn zeros_of_partial_fractions() {
        // 1/(z-1) - 1/(z+1) = 2/(z²-1): no zeros; 1/(z-1) + 1/(z+1) = 2z/(z²-1): zero at 0
        let r = RationalFunction::simple(&[c(1.0, 0.0), c(-1.0, 0.0)], &[c(1.0, 0.0), c(-1.0, 0.0)]);
        assert!(r.zeros().is_empty());
        let r = RationalFunction::simple(&[c(1.0, 0.0), c(-1.0, 0.0)], &[c(1.0, 0.0), c(1.0, 0.0)]);
        let z = r.zeros();
        assert_eq!(z.len(), 1);
        assert!(z[0].norm() < 1e-14);
    }

    #[test]
    fn rational_derivative() {
        let r = RationalFunction {
            terms: vec![PoleTerm {
                pole: c(1.0, 0.5),
                coefficients: vec![c(1.0, 0.0), c(0.5, -0.5), c(0.0, 2.0)],
            }],
            polynomial: vec![c(1.0, 0.0), c(0.0, 1.0), c(0.3, 0.0)],
        };
        let z = c(0.2, -0.1);
        let hstep = 1e-6;
        let fd = (r.eval(z + hstep) - r.eval(z - hstep)) / (2.0 * hstep);
        assert!((fd - r.derivative_eval(z)).norm() < 1e-7);
        assert_eq!(r.order(), 3);
    }

    fn arb_step() -> impl Strategy<Value = StepFunction> {
        prop::collection::vec((0.0..TAU, -2.0..2.0f64, -2.0..2.0f64), 2..10).prop_filter_map(
            "valid",
            |v| {
                let raw: Vec<(f64, C)> = v.into_iter().map(|(t, a, b)| (t, C::new(a, b))).collect();
                StepFunction::new(&raw).ok()
            },
        )
    }

    fn arb_point() -> impl Strategy<Value = C> {
        (0.0..0.98f64, 0.0..TAU).prop_map(|(r, t)| cis(t) * r)
    }

    proptest! {
        #[test]
        fn measures_partition_unity(sf in arb_step(), z in arb_point()) {
            let m = harmonic_measures(&sf, z);
            prop_assert!(m.iter().all(|&w| (0.0..=1.0).contains(&w)));
            prop_assert!((m.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn extension_is_linear(a in arb_step(), b in arb_step(), z in arb_point(),
                               alpha in -2.0..2.0f64, beta in -2.0..2.0f64) {
            // common refinement: all jump angles of both functions
            let mut cuts: Vec<f64> = a.jump_angles().into_iter().chain(b.jump_angles()).collect();
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let raw: Vec<(f64, C)> = cuts
                .iter()
                .map(|&t| (t, a.value_at(t) * alpha + b.value_at(t) * beta))
                .collect();
            let mixed = StepFunction::new(&raw).unwrap();
            let lhs = eval_poisson_extension(&mixed, z).unwrap();
            let rhs = eval_poisson_extension(&a, z).unwrap() * alpha
                + eval_poisson_extension(&b, z).unwrap() * beta;
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        }

        #[test]
        fn conjugation_symmetry(sf in arb_step(), z in arb_point()) {
            let conj_sf = sf.map_values(|v| v.conj());
            let lhs = eval_poisson_extension(&conj_sf, z).unwrap();
            prop_assert!((lhs - eval_poisson_extension(&sf, z).unwrap().conj()).norm() <= 1e-12);
            // reflected data t ↦ conj(φ(-t)): the arc [θ_j, θ_{j+1}) becomes (-θ_{j+1}, -θ_j]
            let th = sf.jump_angles();
            let n = th.len();
            let raw: Vec<(f64, C)> = sf
                .values()
                .enumerate()
                .map(|(j, v)| (-th[(j + 1) % n], v.conj()))
                .collect();
            let reflected = StepFunction::new(&raw).unwrap();
            let lhs = eval_poisson_extension(&reflected, z.conj()).unwrap();
            prop_assert!((lhs - eval_poisson_extension(&sf, z).unwrap().conj()).norm() <= 1e-12);
        }
    }
}
