//! The real first-order system satisfied by a harmonic map with dilatation `a`:
//!
//! ```text
//!  u_x = a11 v_x + a12 v_y
//! -u_y = a21 v_x + a22 v_y
//! ```
//!
//! Convention: the dilatation is defined by `conj(f_zbar) = a f_z`. For
//! `f = h + conj(g)` this gives `a = g'/h'`; the more common second Beltrami
//! coefficient `ω` with `f_zbar = ω conj(f_z)` is the same function.

use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::blaschke::Analytic;
use crate::math::line_fit;
use crate::PlaneMap;

/// Default finite-difference spacings.
pub const DEFAULT_SPACINGS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
/// Residuals are only evaluated inside this radius.
pub const RESIDUAL_RADIUS: f64 = 0.8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EllipticError {
    #[error("|a| = {0} is not below 1")]
    NotContracting(f64),
    #[error("a = 1 makes the coefficient denominators vanish")]
    SingularDenominator,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemCoefficients {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

pub fn system_coefficients(a: C) -> Result<SystemCoefficients, EllipticError> {
    if a == C::new(1.0, 0.0) {
        return Err(EllipticError::SingularDenominator);
    }
    if !(a.norm() < 1.0) {
        return Err(EllipticError::NotContracting(a.norm()));
    }
    Ok(coefficients_unchecked(a))
}

fn coefficients_unchecked(a: C) -> SystemCoefficients {
    let (a1, a2) = (a.re, a.im);
    let d = a2 * a2 + (1.0 - a1) * (1.0 - a1);
    SystemCoefficients {
        a11: 2.0 * a2 / -d,
        a12: (a1 * a1 - 1.0 + a2 * a2) / -d,
        a21: (-a2 * a2 + 1.0 - a1 * a1) / d,
        a22: 2.0 * a2 / d,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipticity {
    pub margin: f64,
    pub a12_positive: bool,
}

impl Ellipticity {
    pub fn holds(&self) -> bool {
        self.margin > 0.0 && self.a12_positive
    }
}

pub fn ellipticity_margin(c: &SystemCoefficients) -> Ellipticity {
    Ellipticity {
        margin: 4.0 * c.a12 * c.a21 - (c.a11 + c.a22).powi(2),
        a12_positive: c.a12 > 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualLevel {
    pub grid_spacing: f64,
    pub max_residual_eq1: f64,
    pub max_residual_eq2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub levels: Vec<ResidualLevel>,
    /// Slope of `log(max residual)` against `log(spacing)`; absent when the
    /// residuals sit at roundoff level and carry no trend.
    pub convergence_slope: Option<f64>,
    pub slope_r2: Option<f64>,
    pub points: usize,
}

/// Sample points of a square lattice of step `1/10` clipped to `|z| <= 0.8`.
pub fn residual_grid() -> Vec<C> {
    let mut pts = Vec::new();
    for i in -8..=8 {
        for j in -8..=8 {
            let z = C::new(i as f64 / 10.0, j as f64 / 10.0);
            if z.norm() <= RESIDUAL_RADIUS + 1e-12 {
                pts.push(z);
            }
        }
    }
    pts
}

/// Plug central differences of `map` into the system with coefficients from `a(z)`.
pub fn system_residual<M, A>(map: &M, a: &A, spacings: &[f64]) -> Result<ResidualReport, EllipticError>
where
    M: PlaneMap + ?Sized,
    A: Analytic + ?Sized,
{
    let grid = residual_grid();
    let coeffs: Vec<SystemCoefficients> = grid
        .iter()
        .map(|&z| system_coefficients(a.eval(z)))
        .collect::<Result<_, _>>()?;
    let mut levels = Vec::with_capacity(spacings.len());
    for &h in spacings {
        let per_point: Vec<(f64, f64)> = grid
            .par_iter()
            .zip(&coeffs)
            .map(|(&z, c)| {
                let dx = (map.eval(z + h) - map.eval(z - h)) / (2.0 * h);
                let dy = (map.eval(z + C::new(0.0, h)) - map.eval(z - C::new(0.0, h))) / (2.0 * h);
                let (ux, vx, uy, vy) = (dx.re, dx.im, dy.re, dy.im);
                let r1 = (ux - c.a11 * vx - c.a12 * vy).abs();
                let r2 = (-uy - c.a21 * vx - c.a22 * vy).abs();
                (r1, r2)
            })
            .collect();
        levels.push(ResidualLevel {
            grid_spacing: h,
            max_residual_eq1: per_point.iter().map(|p| p.0).fold(0.0, f64::max),
            max_residual_eq2: per_point.iter().map(|p| p.1).fold(0.0, f64::max),
        });
    }
    let worst: Vec<f64> = levels
        .iter()
        .map(|l| l.max_residual_eq1.max(l.max_residual_eq2))
        .collect();
    let (convergence_slope, slope_r2) = if levels.len() >= 2 && worst.iter().all(|&r| r > 1e-11) {
        let xs: Vec<f64> = levels.iter().map(|l| l.grid_spacing.ln()).collect();
        let ys: Vec<f64> = worst.iter().map(|r| r.ln()).collect();
        let (s, _, r2) = line_fit(&xs, &ys);
        (Some(s), Some(r2))
    } else {
        (None, None)
    };
    Ok(ResidualReport {
        levels,
        convergence_slope,
        slope_r2,
        points: grid.len(),
    })
}
