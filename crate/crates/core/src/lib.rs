//! Univalent harmonic mappings generated by step functions on the unit circle.
//!
//! A map in this crate is the Poisson extension `f = c0 + h + conj(g)` of a
//! piecewise-constant boundary function. The modules cover:
//!
//! - [`boundary`]: step functions, target polygons and their variation.
//! - [`harmonic`]: closed-form evaluation, Fourier data, `h'`/`g'` as rational
//!   functions and the analytic dilatation `g'/h'`.
//! - [`blaschke`]: finite Blaschke products and the Schur algorithm.
//! - [`univalence`]: winding-number certificates.
//! - [`elliptic`]: the first-order elliptic system attached to a dilatation.
//! - [`pipeline`]: step-map approximation of normalized target maps.
//! - [`poles`]: pole-order and local-expansion probes at boundary points.
//! - [`render`]: deterministic SVG output.

pub mod blaschke;
pub mod boundary;
pub mod elliptic;
pub mod harmonic;
pub mod optim;
pub mod pipeline;
pub mod poles;
pub mod render;
pub mod report;
pub mod univalence;

mod math;

pub use num_complex::Complex64;

pub use blaschke::{Analytic, FiniteBlaschke, SchurDecomposition};
pub use boundary::{JordanPolygon, Orientation, StepFunction, VariationReport};
pub use harmonic::{Dilatation, HarmonicStepMap, RationalFunction};
pub use pipeline::{PipelineConfig, PipelineReport, TargetMap};
pub use univalence::{UnivalenceCertificate, Verdict};

/// A complex-valued map of the plane (or of the unit disk) that can be sampled pointwise.
pub trait PlaneMap: Sync {
    fn eval(&self, z: Complex64) -> Complex64;
}

impl<F> PlaneMap for F
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    fn eval(&self, z: Complex64) -> Complex64 {
        self(z)
    }
}

/// Crate version, embedded in every JSON report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
