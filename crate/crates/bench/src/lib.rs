//! Shared fixtures for the benchmarks.

use num_complex::Complex64 as C;
use stepmap::StepFunction;

/// An `n`-step map with uneven arcs and values on a slightly squashed circle.
pub fn uneven_polygon(n: usize) -> StepFunction {
    let raw: Vec<(f64, C)> = (0..n)
        .map(|j| {
            let t = std::f64::consts::TAU * j as f64 / n as f64;
            let jitter = 0.3 * (3.0 * t).sin() / n as f64;
            (t + jitter, C::new(t.cos(), 0.8 * t.sin()))
        })
        .collect();
    StepFunction::new(&raw).expect("fixture is valid")
}

/// Points on a polar grid of radius `r`, the centre excluded.
pub fn sample_points(r: f64, rings: usize, spokes: usize) -> Vec<C> {
    (1..=rings)
        .flat_map(|i| {
            (0..spokes).map(move |j| C::from_polar(r * i as f64 / rings as f64, std::f64::consts::TAU * j as f64 / spokes as f64))
        })
        .collect()
}
