//! Small numeric kernels shared across modules: truncated power series,
//! polynomial helpers, simultaneous root finding and line fits.

use std::f64::consts::PI;

use num_complex::Complex64 as C;

pub(crate) const TAU: f64 = 2.0 * PI;

pub(crate) fn cis(theta: f64) -> C {
    C::from_polar(1.0, theta)
}

/// Horner evaluation of `sum coeffs[k] z^k`.
pub(crate) fn horner(coeffs: &[C], z: C) -> C {
    coeffs.iter().rev().fold(C::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Coefficients of the derivative series.
pub(crate) fn series_derivative(coeffs: &[C]) -> Vec<C> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

/// Product of two series truncated to `len` terms.
pub(crate) fn series_mul(a: &[C], b: &[C], len: usize) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); len];
    for (i, &ai) in a.iter().enumerate().take(len) {
        if ai == C::new(0.0, 0.0) {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(len - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Quotient `a / b` of two series truncated to `len` terms; requires `b[0] != 0`.
pub(crate) fn series_div(a: &[C], b: &[C], len: usize) -> Vec<C> {
    let b0 = b[0];
    let mut out = vec![C::new(0.0, 0.0); len];
    for k in 0..len {
        let mut acc = a.get(k).copied().unwrap_or_default();
        for j in 1..=k.min(b.len().saturating_sub(1)) {
            acc -= b[j] * out[k - j];
        }
        out[k] = acc / b0;
    }
    out
}

/// Taylor coefficients `0..count` of an analytic function by trapezoidal
/// quadrature on the circle `|z| = radius` with `samples` nodes.
pub(crate) fn circle_taylor<F: Fn(C) -> C>(f: F, count: usize, radius: f64, samples: usize) -> Vec<C> {
    let values: Vec<C> = (0..samples)
        .map(|j| f(cis(TAU * j as f64 / samples as f64) * radius))
        .collect();
    (0..count)
        .map(|k| {
            let mut acc = C::new(0.0, 0.0);
            for (j, &v) in values.iter().enumerate() {
                // reduce the index first so the twiddle angle stays small
                let idx = (j * k) % samples;
                acc += v * cis(-TAU * idx as f64 / samples as f64);
            }
            acc / samples as f64 / radius.powi(k as i32)
        })
        .collect()
}

#[cfg(test)]
/// Polynomial (ascending coefficients) with the given roots, scaled by `lead`.
pub(crate) fn poly_from_roots(roots: &[C], lead: C) -> Vec<C> {
    let mut p = vec![lead];
    for &r in roots {
        let mut next = vec![C::new(0.0, 0.0); p.len() + 1];
        for (k, &c) in p.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= c * r;
        }
        p = next;
    }
    p
}

/// Aberth–Ehrlich simultaneous iteration for the `degree` zeros of a function
/// `N` described through its logarithmic derivative `N'/N`.
///
/// Initial guesses sit on a slightly rotated circle of radius `radius`.
pub(crate) fn aberth<F>(degree: usize, radius: f64, log_derivative: F) -> Vec<C>
where
    F: Fn(C) -> C,
{
    if degree == 0 {
        return Vec::new();
    }
    let mut roots: Vec<C> = (0..degree)
        .map(|k| cis(TAU * k as f64 / degree as f64 + 0.4) * radius)
        .collect();
    let max_iter = 400;
    for _ in 0..max_iter {
        let mut largest_step: f64 = 0.0;
        for k in 0..degree {
            let zk = roots[k];
            let ld = log_derivative(zk);
            if !ld.is_finite() || ld == C::new(0.0, 0.0) {
                continue;
            }
            let newton = ld.inv();
            let repulsion: C = roots
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != k)
                .map(|(_, &zi)| (zk - zi).inv())
                .sum();
            let step = newton / (C::new(1.0, 0.0) - newton * repulsion);
            if step.is_finite() {
                roots[k] = zk - step;
                largest_step = largest_step.max(step.norm() / (1.0 + zk.norm()));
            }
        }
        if largest_step < 1e-15 {
            break;
        }
    }
    roots
}

/// Least-squares line `y = slope * x + intercept`; returns `(slope, intercept, r_squared)`.
pub(crate) fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, intercept, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_division_inverts_multiplication() {
        let a = vec![C::new(1.0, 0.5), C::new(-0.3, 0.2), C::new(0.1, 0.0)];
        let b = vec![C::new(2.0, 0.0), C::new(0.0, 1.0)];
        let prod = series_mul(&a, &b, 6);
        let back = series_div(&prod, &b, 6);
        for k in 0..6 {
            let want = a.get(k).copied().unwrap_or_default();
            assert!((back[k] - want).norm() < 1e-14);
        }
    }

    #[test]
    fn aberth_recovers_polynomial_roots() {
        let roots = [C::new(0.5, 0.1), C::new(-0.7, 0.3), C::new(2.0, -1.0), C::new(0.0, -0.4)];
        let p = poly_from_roots(&roots, C::new(1.5, 0.0));
        let dp = series_derivative(&p);
        let found = aberth(4, 1.0, |z| horner(&dp, z) / horner(&p, z));
        for r in roots {
            let best = found.iter().map(|f| (f - r).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-12, "root {r} missed by {best}");
        }
    }

    #[test]
    fn circle_quadrature_extracts_taylor_coefficients() {
        let coeffs = circle_taylor(|z| (C::new(1.0, 0.0) - z * 0.5).inv(), 8, 0.5, 4096);
        for (k, c) in coeffs.iter().enumerate() {
            assert!((c - C::new(0.5f64.powi(k as i32), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn line_fit_exact() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| -2.0 * x + 1.0).collect();
        let (s, b, r2) = line_fit(&xs, &ys);
        assert!((s + 2.0).abs() < 1e-14 && (b - 1.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }
}
