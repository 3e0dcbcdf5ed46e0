//! Local probes at boundary points: pole orders, the angular expansion
//! `w ≈ 2 e^{iφ1} cos(kφ - φ0) / r^k`, coalescing jump families and the
//! boundary modulus of the dilatation.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::StepFunction;
use crate::harmonic::{decompose, HarmonicStepMap, DEFAULT_TRUNCATION};
use crate::math::{cis, line_fit, TAU};
use crate::pipeline::normalize;
use crate::univalence::{certify, CertifyConfig, Verdict};
use crate::PlaneMap;

/// Relative residual above which an expansion fit is flagged.
pub const POOR_FIT_RESIDUAL: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolesError {
    #[error("non-finite evaluation at {0}")]
    EvalFailure(C),
    #[error("expansion fit is poor (relative residual {:.3e})", .0.fit_residual)]
    PoorFit(Box<ExpansionFit>),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Geometric radii from 1e-2 down to 1e-5, 16 points.
pub fn default_radii() -> Vec<f64> {
    (0..16).map(|i| 1e-2 * 10f64.powf(-3.0 * i as f64 / 15.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleOrder {
    /// Slope of `log|h'|` against `log r` along the inward radius.
    pub slope: f64,
    /// Order of the pole of `h'`, `-slope`.
    pub hprime_order: f64,
    /// Order of the pole of `h`, `-slope - 1`.
    pub order: f64,
    pub r_squared: f64,
}

/// Least-squares growth rate of `hprime` along `ζ(1 - r)`.
pub fn pole_order_fit<F: PlaneMap + ?Sized>(hprime: &F, zeta: C, radii: &[f64]) -> Result<PoleOrder, PolesError> {
    if radii.len() < 2 || radii.iter().any(|&r| !(r >= 1e-6 && r < 1.0)) {
        return Err(PolesError::InvalidInput("need at least two radii in [1e-6, 1)".into()));
    }
    let mut xs = Vec::with_capacity(radii.len());
    let mut ys = Vec::with_capacity(radii.len());
    for &r in radii {
        let z = zeta * (1.0 - r);
        let v = hprime.eval(z).norm();
        if !v.is_finite() || v == 0.0 {
            return Err(PolesError::EvalFailure(z));
        }
        xs.push(r.ln());
        ys.push(v.ln());
    }
    let (slope, _, r_squared) = line_fit(&xs, &ys);
    Ok(PoleOrder {
        slope,
        hprime_order: -slope,
        order: -slope - 1.0,
        r_squared,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFit {
    pub k_estimate: f64,
    /// Phase inside the cosine, in `[-π/2, π/2)`.
    pub phi0: f64,
    /// Direction of the image oscillation, in `[0, 2π)`.
    pub phi1: f64,
    /// `r^k` times the fitted coefficient, so `2` for exact data of the model.
    pub amplitude: f64,
    /// Residual norm relative to the norm of the fitted leading term.
    pub fit_residual: f64,
    pub radius: f64,
}

/// Angles `φ` for which `ζ(1 + r e^{iφ})` lies inside the disk.
pub fn arc_angles(r: f64, samples: usize) -> Vec<f64> {
    let lo = FRAC_PI_2 + (0.5 * r).asin();
    let hi = 3.0 * FRAC_PI_2 - (0.5 * r).asin();
    (0..samples)
        .map(|j| lo + (hi - lo) * (j as f64 + 0.5) / samples as f64)
        .collect()
}

struct LinearFit {
    u: C,
    v: C,
    residual: f64,
}

/// Complex least squares for `w ≈ u cos kφ + v sin kφ + c`.
fn linear_fit(k: f64, phis: &[f64], w: &[C]) -> LinearFit {
    // normal equations with a real 3×3 Gram matrix, solved per complex right-hand side
    let cols: Vec<[f64; 3]> = phis.iter().map(|&p| [(k * p).cos(), (k * p).sin(), 1.0]).collect();
    let mut g = [[0.0; 3]; 3];
    let mut b = [C::new(0.0, 0.0); 3];
    for (col, &wi) in cols.iter().zip(w) {
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] += col[i] * col[j];
            }
            b[i] += wi * col[i];
        }
    }
    let x = solve3(g, b);
    let residual = cols
        .iter()
        .zip(w)
        .map(|(col, &wi)| (wi - x[0] * col[0] - x[1] * col[1] - x[2] * col[2]).norm_sqr())
        .sum::<f64>()
        .sqrt();
    LinearFit {
        u: x[0],
        v: x[1],
        residual,
    }
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [C; 3]) -> [C; 3] {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        if d.abs() < 1e-300 {
            continue;
        }
        for row in col + 1..3 {
            let f = a[row][col] / d;
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] = b[row] - b[col] * f;
        }
    }
    let mut x = [C::new(0.0, 0.0); 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc -= x[k] * a[row][k];
        }
        x[row] = if a[row][row].abs() < 1e-300 { C::new(0.0, 0.0) } else { acc / a[row][row] };
    }
    x
}

/// Dominant angular frequency of the samples (zero-padded FFT, mean removed).
fn fft_frequency_seed(phis: &[f64], w: &[C]) -> f64 {
    let n = w.len();
    let pad = (8 * n).next_power_of_two();
    let mean: C = w.iter().sum::<C>() / n as f64;
    let mut buf: Vec<C> = w.iter().map(|&x| x - mean).collect();
    buf.resize(pad, C::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(pad).process(&mut buf);
    let (best, _) = buf[..pad / 2]
        .iter()
        .enumerate()
        .skip(1)
        .fold((0, 0.0), |acc, (i, c)| if c.norm() > acc.1 { (i, c.norm()) } else { acc });
    let dphi = phis[1] - phis[0];
    TAU * best as f64 / (pad as f64 * dphi)
}

fn golden<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - gr * (b - a);
    let mut d = a + gr * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Fits `2 e^{iφ1} cos(kφ - φ0) / r^k` (plus a constant) to `f` on the arc
/// `|z - ζ| = r` inside the disk, where `z = ζ(1 + r e^{iφ})`.
///
/// `k` is chosen by variable projection: a global scan plus seeds from an FFT
/// of the samples and the radial growth of `|f|`, refined by golden section.
pub fn expansion_fit<F: PlaneMap + ?Sized>(f: &F, zeta: C, r: f64, samples: usize) -> Result<ExpansionFit, PolesError> {
    if !(r > 0.0 && r < 1.0) || samples < 16 {
        return Err(PolesError::InvalidInput("need 0 < r < 1 and at least 16 samples".into()));
    }
    let phis = arc_angles(r, samples);
    let w: Vec<C> = phis.iter().map(|&p| f.eval(zeta * (C::new(1.0, 0.0) + cis(p) * r))).collect();
    if let Some(p) = phis.iter().zip(&w).find(|(_, v)| !v.is_finite()) {
        return Err(PolesError::EvalFailure(zeta * (C::new(1.0, 0.0) + cis(*p.0) * r)));
    }
    let cost = |k: f64| linear_fit(k, &phis, &w).residual;

    let mut seeds = vec![fft_frequency_seed(&phis, &w)];
    let mean_abs = |rr: f64| {
        arc_angles(rr, samples)
            .iter()
            .map(|&p| f.eval(zeta * (C::new(1.0, 0.0) + cis(p) * rr)).norm())
            .sum::<f64>()
    };
    let (m1, m2) = (mean_abs(r), mean_abs(0.5 * r));
    if m1 > 0.0 && m2 > 0.0 {
        seeds.push((m2 / m1).log2());
    }
    let mut best_k = 0.05;
    let mut best = f64::INFINITY;
    let scan = (1..=320).map(|i| 0.05 * i as f64);
    for k in scan.chain(seeds.into_iter().filter(|s| s.is_finite() && *s > 0.0 && *s < 32.0)) {
        let c = cost(k);
        if c < best {
            best = c;
            best_k = k;
        }
    }
    let k = golden(cost, (best_k - 0.05).max(1e-3), best_k + 0.05, 80);
    let fit = linear_fit(k, &phis, &w);

    // u = A e^{iφ1} cos φ0, v = A e^{iφ1} sin φ0: φ1 is the common axis of u and v
    let mut axis = 0.5 * (fit.u * fit.u + fit.v * fit.v).arg();
    let (mut ur, mut vr) = ((fit.u * cis(-axis)).re, (fit.v * cis(-axis)).re);
    if ur < 0.0 || (ur == 0.0 && vr > 0.0) {
        axis += PI;
        ur = -ur;
        vr = -vr;
    }
    let big_a = ur.hypot(vr);
    let mut phi0 = vr.atan2(ur);
    if phi0 >= FRAC_PI_2 {
        phi0 -= PI;
    }
    let leading = (phis.len() as f64 * 0.5).sqrt() * big_a;
    let out = ExpansionFit {
        k_estimate: k,
        phi0,
        phi1: axis.rem_euclid(TAU),
        amplitude: big_a * r.powf(k),
        fit_residual: if leading > 0.0 { fit.residual / leading } else { f64::INFINITY },
        radius: r,
    };
    let scale = w.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if !(out.fit_residual <= POOR_FIT_RESIDUAL) || big_a <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(PolesError::PoorFit(Box::new(out)));
    }
    Ok(out)
}

/// `|g'/h'|` along `ζ(1 - r)`.
pub fn boundary_ratio_probe<H, G>(hprime: &H, gprime: &G, zeta: C, radii: &[f64]) -> Result<Vec<f64>, PolesError>
where
    H: PlaneMap + ?Sized,
    G: PlaneMap + ?Sized,
{
    radii
        .iter()
        .map(|&r| {
            let z = zeta * (1.0 - r);
            let h = hprime.eval(z);
            if h == C::new(0.0, 0.0) || !h.is_finite() {
                return Err(PolesError::EvalFailure(z));
            }
            Ok((gprime.eval(z) / h).norm())
        })
        .collect()
}

pub fn map_boundary_ratio(map: &HarmonicStepMap, zeta: C, radii: &[f64]) -> Result<Vec<f64>, PolesError> {
    let hp = |z: C| map.hprime_at(z);
    let gp = |z: C| map.gprime_at(z);
    boundary_ratio_probe(&hp, &gp, zeta, radii)
}

/// Pole order of `h'` at every jump point of `map`.
pub fn jump_orders(map: &HarmonicStepMap, radii: &[f64]) -> Result<Vec<PoleOrder>, PolesError> {
    let hp = |z: C| map.hprime_at(z);
    map.source
        .jump_angles()
        .par_iter()
        .map(|&t| pole_order_fit(&hp, cis(t), radii))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyMember {
    pub delta: f64,
    pub step: StepFunction,
    pub verdict: Verdict,
    pub probe_angle: f64,
    pub order: PoleOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoalescingFamily {
    pub base: StepFunction,
    /// Consecutive jump indices pulled together.
    pub merge: Vec<usize>,
    pub deltas: Vec<f64>,
    pub members: Vec<FamilyMember>,
    /// Set when some member failed certification; later deltas were skipped.
    pub truncated: bool,
    pub truncated_at: Option<f64>,
}

impl CoalescingFamily {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delta,verdict,hprime_order,h_order,r_squared\n");
        for m in &self.members {
            let verdict = match m.verdict {
                Verdict::Univalent => "univalent",
                Verdict::NotUnivalent => "not_univalent",
                Verdict::Inconclusive => "inconclusive",
            };
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                m.delta, verdict, m.order.hprime_order, m.order.order, m.order.r_squared
            ));
        }
        out
    }
}

/// The step function `base` with the jumps `merge` (consecutive, cyclic) spaced
/// `delta` apart, symmetrically about their circular mean.
pub fn coalesced(base: &StepFunction, merge: &[usize], delta: f64) -> Result<(StepFunction, f64), PolesError> {
    let n = base.step_count();
    if merge.len() < 2 || merge.iter().any(|&i| i >= n) {
        return Err(PolesError::InvalidInput(format!("merge indices {merge:?} for {n} jumps")));
    }
    if merge.windows(2).any(|w| w[1] != (w[0] + 1) % n) {
        return Err(PolesError::InvalidInput("merge indices must be consecutive".into()));
    }
    let th = base.jump_angles();
    let first = th[merge[0]];
    let unwrapped: Vec<f64> = merge.iter().map(|&i| first + (th[i] - first).rem_euclid(TAU)).collect();
    let centre = unwrapped.iter().sum::<f64>() / merge.len() as f64;
    let span = delta * (merge.len() - 1) as f64;
    let before = th[(merge[0] + n - 1) % n];
    let after = th[(merge[merge.len() - 1] + 1) % n];
    let room_lo = (centre - before).rem_euclid(TAU);
    let room_hi = (after - centre).rem_euclid(TAU);
    if merge.len() < n && (0.5 * span >= room_lo || 0.5 * span >= room_hi) || !(delta > 0.0) {
        return Err(PolesError::InvalidInput(format!("delta {delta} collides with neighbouring jumps")));
    }
    let mut raw = base.to_raw();
    for (m, &i) in merge.iter().enumerate() {
        raw[i].0 = (centre - 0.5 * span + delta * m as f64).rem_euclid(TAU);
    }
    let sf = StepFunction::new(&raw).map_err(|e| PolesError::InvalidInput(e.to_string()))?;
    Ok((sf, centre.rem_euclid(TAU)))
}

pub fn coalescing_family(
    base: &StepFunction,
    merge: &[usize],
    deltas: &[f64],
    radii: &[f64],
) -> Result<CoalescingFamily, PolesError> {
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(PolesError::InvalidInput("delta schedule must be decreasing".into()));
    }
    let mut members = Vec::new();
    let mut truncated_at = None;
    for &delta in deltas {
        let (sf, probe) = coalesced(base, merge, delta)?;
        let map = decompose(&sf, DEFAULT_TRUNCATION).map_err(|e| PolesError::InvalidInput(e.to_string()))?;
        let Ok((normalized, _)) = normalize(&map) else {
            truncated_at = Some(delta);
            break;
        };
        let cert = certify(&normalized, &CertifyConfig::default());
        let hp = |z: C| normalized.hprime_at(z);
        let order = pole_order_fit(&hp, cis(probe), radii)?;
        let verdict = cert.verdict;
        members.push(FamilyMember {
            delta,
            step: normalized.source.clone(),
            verdict,
            probe_angle: probe,
            order,
        });
        if verdict != Verdict::Univalent {
            truncated_at = Some(delta);
            break;
        }
    }
    Ok(CoalescingFamily {
        base: base.clone(),
        merge: merge.to_vec(),
        deltas: deltas.to_vec(),
        members,
        truncated: truncated_at.is_some(),
        truncated_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn default_radii_schedule() {
        let r = default_radii();
        assert_eq!(r.len(), 16);
        assert!((r[0] - 1e-2).abs() < 1e-18 && (r[15] - 1e-5).abs() < 1e-18);
        assert!(r.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn pure_power_laws() {
        for m in 1..=5 {
            let f = move |z: C| (z - 1.0).powi(-(m + 1));
            let o = pole_order_fit(&f, c(1.0, 0.0), &default_radii()).unwrap();
            assert!((o.order - m as f64).abs() < 0.01, "m={m} got {}", o.order);
        }
        let f = |z: C| (z - 1.0).powi(-2);
        let o = pole_order_fit(&f, c(1.0, 0.0), &default_radii()).unwrap();
        assert!((o.slope + 2.0).abs() < 1e-9);
    }

    #[test]
    fn perturbed_power_law() {
        let f = |z: C| (z - 1.0).powi(-3) + (z + 1.0).inv();
        let o = pole_order_fit(&f, c(1.0, 0.0), &default_radii()).unwrap();
        assert!((o.order - 2.0).abs() < 0.05);
    }

    #[test]
    fn order_fit_rejects_bad_input() {
        let f = |_z: C| c(f64::NAN, 0.0);
        assert!(matches!(pole_order_fit(&f, c(1.0, 0.0), &default_radii()), Err(PolesError::EvalFailure(_))));
        let g = |z: C| z;
        assert!(pole_order_fit(&g, c(1.0, 0.0), &[1e-7, 1e-8]).is_err());
    }

    fn model(k: f64, phi0: f64, phi1: f64, zeta: C) -> impl Fn(C) -> C + Sync {
        move |z: C| {
            let local = z / zeta - 1.0;
            let (r, phi) = (local.norm(), local.arg().rem_euclid(TAU));
            cis(phi1) * 2.0 * (k * phi - phi0).cos() / r.powf(k)
        }
    }

    #[test]
    fn synthetic_expansion() {
        let f = model(4.0, 0.3, 0.0, c(1.0, 0.0));
        let fit = expansion_fit(&f, c(1.0, 0.0), 1e-2, 256).unwrap();
        assert!((fit.k_estimate - 4.0).abs() < 0.05, "{fit:?}");
        assert!((fit.phi0 - 0.3).abs() < 0.01, "{fit:?}");
        assert!((fit.amplitude - 2.0).abs() < 1e-6);
    }

    #[test]
    fn contaminated_expansion() {
        let base = model(4.0, 0.3, 0.0, c(1.0, 0.0));
        let f = move |z: C| {
            let r = (z - 1.0).norm();
            base(z) + c(0.7, -0.4) / (r * r)
        };
        let fit = expansion_fit(&f, c(1.0, 0.0), 1e-3, 256).unwrap();
        assert!((fit.k_estimate - 4.0).abs() < 0.1);
    }

    #[test]
    fn odd_order_expansion() {
        let zeta = cis(1.1);
        let f = model(3.0, -0.4, 0.8, zeta);
        let fit = expansion_fit(&f, zeta, 1e-2, 256).unwrap();
        assert!((fit.k_estimate - 3.0).abs() < 0.05 && (fit.phi0 + 0.4).abs() < 0.01);
        assert!((fit.phi1 - 0.8).abs() < 0.01);
    }

    #[test]
    fn constant_is_poor_fit() {
        let f = |_z: C| c(1.0, 1.0);
        assert!(matches!(expansion_fit(&f, c(1.0, 0.0), 1e-2, 128), Err(PolesError::PoorFit(_))));
    }

    #[test]
    fn hexagon_jumps_are_simple() {
        let m = HarmonicStepMap::new(&StepFunction::regular_polygon(6));
        for o in jump_orders(&m, &default_radii()).unwrap() {
            assert!((o.hprime_order - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn hexagon_family() {
        let base = StepFunction::regular_polygon(6);
        let fam = coalescing_family(&base, &[1, 2], &[0.2, 0.1, 0.05, 0.025], &default_radii()).unwrap();
        assert!(!fam.members.is_empty());
        for m in fam.members.iter().filter(|m| m.verdict == Verdict::Univalent) {
            assert!(m.order.order <= 3.05 && m.order.hprime_order <= 3.05);
        }
        let csv = fam.to_csv();
        assert!(csv.starts_with("delta,"));
        assert!(coalesced(&base, &[1, 3], 0.1).is_err());
        assert!(coalesced(&base, &[1, 2], 4.0).is_err());
    }

    #[test]
    fn ratio_probes() {
        let m = HarmonicStepMap::new(&StepFunction::regular_polygon(5));
        let r = map_boundary_ratio(&m, c(1.0, 0.0), &[1e-3]).unwrap();
        assert!((r[0] - 1.0).abs() < 0.02);
        let hp = |_z: C| c(1.0, 0.0);
        let gp = |z: C| z * 0.5;
        let r = boundary_ratio_probe(&hp, &gp, c(1.0, 0.0), &[1e-2, 1e-4, 1e-6]).unwrap();
        assert!((r[2] - 0.5).abs() < 1e-5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn rotation_equivariance(psi in 0.0..TAU) {
            let zeta = c(1.0, 0.0);
            let f = model(4.0, 0.3, 0.5, zeta);
            let g = |z: C| cis(psi) * f(z);
            let a = expansion_fit(&f, zeta, 1e-2, 256).unwrap();
            let b = expansion_fit(&g, zeta, 1e-2, 256).unwrap();
            prop_assert!((a.k_estimate - b.k_estimate).abs() < 1e-6);
            prop_assert!((a.phi0 - b.phi0).abs() < 1e-6);
            let d = (b.phi1 - a.phi1 - psi).rem_euclid(TAU);
            prop_assert!(d.min(TAU - d) < 1e-6);
        }
    }
}
