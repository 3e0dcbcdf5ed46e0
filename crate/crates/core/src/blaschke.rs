//! Finite Blaschke products and the Schur algorithm.
//!
//! Factor normalization: the factor with zero `α ≠ 0` is
//! `(|α|/α)(α - z)/(1 - conj(α) z)`, and the factor with zero `0` is `z`.

use std::ops::Mul;

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{aberth, circle_taylor, horner, series_derivative, series_div, cis, TAU};

/// Radius of the circle used to extract Taylor coefficients from evaluators.
pub const TAYLOR_RADIUS: f64 = 0.5;
/// Number of quadrature nodes on that circle.
pub const TAYLOR_SAMPLES: usize = 4096;
/// Slack allowed above modulus one before a Schur parameter is rejected.
pub const SELF_MAP_SLACK: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlaschkeError {
    #[error("Schur parameter {index} has modulus {modulus} > 1: not a self-map of the disk")]
    NotASelfMap { index: usize, modulus: f64 },
    #[error("dilation radius {0} must lie in (0, 1)")]
    InvalidRho(f64),
    #[error("invalid Blaschke data: {0}")]
    Invalid(String),
}

/// A function analytic on a neighbourhood of the closed disk `|z| <= 1/2`.
pub trait Analytic: Sync {
    fn eval(&self, z: C) -> C;

    /// Taylor coefficients `0..count`; the default uses circle quadrature.
    fn taylor(&self, count: usize) -> Vec<C> {
        circle_taylor(|z| self.eval(z), count, TAYLOR_RADIUS, TAYLOR_SAMPLES)
    }
}

impl<T: Analytic + ?Sized> Analytic for &T {
    fn eval(&self, z: C) -> C {
        (**self).eval(z)
    }
    fn taylor(&self, count: usize) -> Vec<C> {
        (**self).taylor(count)
    }
}

/// Wraps a plain closure as an [`Analytic`] handle.
pub struct FnAnalytic<F>(pub F);

impl<F: Fn(C) -> C + Sync> Analytic for FnAnalytic<F> {
    fn eval(&self, z: C) -> C {
        (self.0)(z)
    }
}

/// A polynomial, with exact Taylor coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSeries(pub Vec<C>);

impl Analytic for PowerSeries {
    fn eval(&self, z: C) -> C {
        horner(&self.0, z)
    }
    fn taylor(&self, count: usize) -> Vec<C> {
        (0..count)
            .map(|k| self.0.get(k).copied().unwrap_or_default())
            .collect()
    }
}

/// Möbius factor with zero at `alpha` under the project normalization.
pub fn mobius_factor(alpha: C, z: C) -> C {
    if alpha == C::new(0.0, 0.0) {
        z
    } else {
        (alpha.norm() / alpha) * (alpha - z) / (C::new(1.0, 0.0) - alpha.conj() * z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteBlaschke {
    zeros: Vec<C>,
    factor: C,
}

impl FiniteBlaschke {
    pub fn new(zeros: Vec<C>, factor: C) -> Result<Self, BlaschkeError> {
        if let Some(z) = zeros.iter().find(|z| !(z.norm() < 1.0)) {
            return Err(BlaschkeError::Invalid(format!("zero {z} is not inside the unit disk")));
        }
        if !((factor.norm() - 1.0).abs() <= 1e-12) {
            return Err(BlaschkeError::Invalid(format!("factor {factor} is not unimodular")));
        }
        Ok(Self { zeros, factor })
    }

    pub fn identity() -> Self {
        Self {
            zeros: vec![C::new(0.0, 0.0)],
            factor: C::new(1.0, 0.0),
        }
    }

    pub fn constant(u: C) -> Result<Self, BlaschkeError> {
        Self::new(Vec::new(), u)
    }

    pub fn zeros(&self) -> &[C] {
        &self.zeros
    }

    pub fn factor(&self) -> C {
        self.factor
    }

    pub fn degree(&self) -> usize {
        self.zeros.len()
    }

    pub fn eval(&self, z: C) -> C {
        self.zeros
            .iter()
            .fold(self.factor, |acc, &a| acc * mobius_factor(a, z))
    }

    /// Numerator and denominator polynomials (ascending coefficients).
    fn polynomials(&self) -> (Vec<C>, Vec<C>) {
        let one = C::new(1.0, 0.0);
        let mut p = vec![self.factor];
        let mut q = vec![one];
        for &a in &self.zeros {
            let (num, den) = if a == C::new(0.0, 0.0) {
                (vec![C::new(0.0, 0.0), one], vec![one])
            } else {
                let s = a.norm() / a;
                (vec![s * a, -s], vec![one, -a.conj()])
            };
            p = poly_mul(&p, &num);
            q = poly_mul(&q, &den);
        }
        (p, q)
    }

    /// Schur parameters `γ_0 … γ_m`; the last one is unimodular.
    ///
    /// Runs the recursion on the exact numerator/denominator pair, so no
    /// quadrature error enters.
    pub fn schur_parameters(&self) -> SchurDecomposition {
        let (mut p, mut q) = self.polynomials();
        let mut params = Vec::with_capacity(self.degree() + 1);
        for _ in 0..self.degree() {
            let gamma = p[0] / q[0];
            params.push(gamma);
            let num: Vec<C> = (1..p.len().max(q.len()))
                .map(|k| p.get(k).copied().unwrap_or_default() - gamma * q.get(k).copied().unwrap_or_default())
                .collect();
            let den: Vec<C> = (0..p.len().max(q.len()))
                .map(|k| q.get(k).copied().unwrap_or_default() - gamma.conj() * p.get(k).copied().unwrap_or_default())
                .collect();
            p = num;
            q = den;
        }
        let last = p[0] / q[0];
        params.push(last / last.norm());
        SchurDecomposition {
            params,
            terminated: true,
        }
    }

    /// Rebuilds the product from Schur parameters whose last entry is unimodular.
    pub fn from_schur(params: &[C]) -> Result<Self, BlaschkeError> {
        let Some((&last, head)) = params.split_last() else {
            return Err(BlaschkeError::Invalid("empty Schur sequence".into()));
        };
        if (last.norm() - 1.0).abs() > 1e-12 {
            return Err(BlaschkeError::Invalid("final Schur parameter must be unimodular".into()));
        }
        if let Some((i, g)) = head.iter().enumerate().find(|(_, g)| !(g.norm() < 1.0)) {
            return Err(BlaschkeError::NotASelfMap {
                index: i,
                modulus: g.norm(),
            });
        }
        // f_j = (γ_j + z f_{j+1}) / (1 + conj(γ_j) z f_{j+1}) with f_{j+1} = P/Q
        let mut p = vec![last];
        let mut q = vec![C::new(1.0, 0.0)];
        for &g in head.iter().rev() {
            let len = p.len().max(q.len()) + 1;
            let mut np = vec![C::new(0.0, 0.0); len];
            let mut nq = vec![C::new(0.0, 0.0); len];
            for (k, &c) in q.iter().enumerate() {
                np[k] += g * c;
                nq[k] += c;
            }
            for (k, &c) in p.iter().enumerate() {
                np[k + 1] += c;
                nq[k + 1] += g.conj() * c;
            }
            p = np;
            q = nq;
        }
        let m = head.len();
        let p = &p[..=m];
        let dp = series_derivative(p);
        let zeros: Vec<C> = aberth(m, 0.5, |z| horner(&dp, z) / horner(p, z))
            .into_iter()
            .map(|z| if z.norm() >= 1.0 { z / z.norm() * (1.0 - 1e-16) } else { z })
            .collect();
        let one = C::new(1.0, 0.0);
        let target = horner(p, one) / horner(&q, one);
        let base = zeros.iter().fold(one, |acc, &a| acc * mobius_factor(a, one));
        let factor = target / base;
        Ok(Self {
            zeros,
            factor: factor / factor.norm(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, BlaschkeError> {
        let raw: FiniteBlaschke =
            serde_json::from_str(text).map_err(|e| BlaschkeError::Invalid(e.to_string()))?;
        Self::new(raw.zeros, raw.factor)
    }
}

fn poly_mul(a: &[C], b: &[C]) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

impl Analytic for FiniteBlaschke {
    fn eval(&self, z: C) -> C {
        FiniteBlaschke::eval(self, z)
    }
}

impl Mul for &FiniteBlaschke {
    type Output = FiniteBlaschke;
    fn mul(self, rhs: &FiniteBlaschke) -> FiniteBlaschke {
        let mut zeros = self.zeros.clone();
        zeros.extend_from_slice(&rhs.zeros);
        let f = self.factor * rhs.factor;
        FiniteBlaschke {
            zeros,
            factor: f / f.norm(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchurDecomposition {
    pub params: Vec<C>,
    /// Set when a unimodular parameter ended the sequence.
    pub terminated: bool,
}

impl SchurDecomposition {
    /// Degree of the source when it is a finite Blaschke product.
    pub fn degree(&self) -> Option<usize> {
        self.terminated.then(|| self.params.len() - 1)
    }

    /// Evaluates the continued-fraction form; requires a terminated sequence.
    pub fn eval(&self, z: C) -> Option<C> {
        let (&last, head) = self.params.split_last()?;
        if !self.terminated {
            return None;
        }
        let one = C::new(1.0, 0.0);
        Some(head.iter().rev().fold(last, |f, &g| (g + z * f) / (one + g.conj() * z * f)))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,re,im,modulus\n");
        for (j, g) in self.params.iter().enumerate() {
            out.push_str(&format!("{j},{},{},{}\n", g.re, g.im, g.norm()));
        }
        out
    }
}

/// The first `m` Schur parameters of `a`, stopping early at a unimodular one.
pub fn schur_parameters<A: Analytic + ?Sized>(a: &A, m: usize) -> Result<SchurDecomposition, BlaschkeError> {
    let mut f = a.taylor(m);
    let mut params = Vec::with_capacity(m);
    let one = C::new(1.0, 0.0);
    for j in 0..m {
        let gamma = f[0];
        let modulus = gamma.norm();
        if modulus > 1.0 + SELF_MAP_SLACK {
            return Err(BlaschkeError::NotASelfMap { index: j, modulus });
        }
        if modulus >= 1.0 - SELF_MAP_SLACK {
            params.push(gamma / modulus);
            return Ok(SchurDecomposition {
                params,
                terminated: true,
            });
        }
        params.push(gamma);
        if j + 1 == m {
            break;
        }
        let mut num = f.clone();
        num[0] = C::new(0.0, 0.0);
        let den: Vec<C> = f
            .iter()
            .enumerate()
            .map(|(k, &c)| if k == 0 { one } else { C::new(0.0, 0.0) } - gamma.conj() * c)
            .collect();
        let q = series_div(&num, &den, f.len());
        f = q[1..].to_vec();
    }
    Ok(SchurDecomposition {
        params,
        terminated: false,
    })
}

/// Degree-`m` Blaschke product sharing the first `m` Taylor coefficients with `a`.
///
/// The `m`-th Schur remainder is replaced by the unit constant carrying the
/// phase of `γ_m` (or by 1 when `γ_m = 0`). If the recursion terminates
/// earlier, `a` is itself a Blaschke product and is returned exactly.
pub fn blaschke_truncation<A: Analytic + ?Sized>(a: &A, m: usize) -> Result<FiniteBlaschke, BlaschkeError> {
    let dec = schur_parameters(a, m + 1)?;
    let mut params = dec.params;
    if !dec.terminated {
        let g = params[m];
        params[m] = if g.norm() == 0.0 { C::new(1.0, 0.0) } else { g / g.norm() };
    }
    FiniteBlaschke::from_schur(&params)
}

/// `z ↦ inner(ρ z)`.
#[derive(Debug, Clone)]
pub struct Dilated<A> {
    pub inner: A,
    pub rho: f64,
    /// Set when `inner` is a unimodular constant, so dilation leaves the sup at 1.
    pub constant_unimodular: bool,
}

impl<A: Analytic> Analytic for Dilated<A> {
    fn eval(&self, z: C) -> C {
        self.inner.eval(z * self.rho)
    }
    fn taylor(&self, count: usize) -> Vec<C> {
        self.inner
            .taylor(count)
            .into_iter()
            .enumerate()
            .map(|(k, c)| c * self.rho.powi(k as i32))
            .collect()
    }
}

pub fn dilate_rho<A: Analytic>(inner: A, rho: f64) -> Result<Dilated<A>, BlaschkeError> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(BlaschkeError::InvalidRho(rho));
    }
    let t = inner.taylor(8);
    let scale = t.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let flat = t[1..].iter().all(|c| c.norm() <= 1e-12 * scale.max(1.0));
    let constant_unimodular = flat && (t[0].norm() - 1.0).abs() <= 1e-10;
    Ok(Dilated {
        inner,
        rho,
        constant_unimodular,
    })
}

/// Max of `|f|` over `samples` equispaced points of the circle `|z| = radius`.
pub fn circle_sup<A: Analytic + ?Sized>(f: &A, radius: f64, samples: usize) -> f64 {
    (0..samples)
        .map(|j| f.eval(cis(TAU * j as f64 / samples as f64) * radius).norm())
        .fold(0.0, f64::max)
}
