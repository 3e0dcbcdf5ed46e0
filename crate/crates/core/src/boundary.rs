//! Step functions on the unit circle and the Jordan polygons they target.

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::TAU;

/// Endpoint tolerance for the polygon simplicity test.
pub const SEGMENT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundaryError {
    #[error("empty step-function input")]
    EmptyInput,
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("not a polygon: {0}")]
    NotAPolygon(String),
    #[error("vertex cycle is not simple: edges {0} and {1} meet")]
    NotSimple(usize, usize),
    #[error("malformed map spec: {0}")]
    Format(String),
}

/// One arc of a step function: the value taken from `theta` up to the next arc's start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub theta: f64,
    pub value: C,
}

/// A piecewise-constant function on the unit circle.
///
/// Arc starts are sorted in `[0, 2π)`; the last arc wraps around to the first.
/// Construct through [`validate_step_function`] or [`StepFunction::new`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepFunction {
    arcs: Vec<Arc>,
}

/// Result of normalizing raw arc data: the step function plus the merge bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub step: StepFunction,
    /// Number of arcs in the raw input, before equal neighbours were merged.
    pub raw_steps: usize,
}

impl Normalized {
    pub fn merged_steps(&self) -> usize {
        self.step.step_count()
    }

    /// True when equal adjacent values were merged (a degenerate partition).
    pub fn degenerate(&self) -> bool {
        self.raw_steps != self.step.step_count()
    }
}

/// Sort, reduce and merge raw `(angle, value)` pairs into a [`StepFunction`].
pub fn validate_step_function(raw: &[(f64, C)]) -> Result<Normalized, BoundaryError> {
    if raw.is_empty() {
        return Err(BoundaryError::EmptyInput);
    }
    let mut arcs = Vec::with_capacity(raw.len());
    for &(theta, value) in raw {
        if !theta.is_finite() || !value.is_finite() {
            return Err(BoundaryError::InvalidPartition(format!(
                "non-finite entry ({theta}, {value})"
            )));
        }
        let mut t = theta.rem_euclid(TAU);
        if t >= TAU {
            t = 0.0;
        }
        arcs.push(Arc { theta: t, value });
    }
    arcs.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    if let Some(w) = arcs.windows(2).find(|w| w[0].theta == w[1].theta) {
        return Err(BoundaryError::InvalidPartition(format!(
            "duplicate angle {}",
            w[0].theta
        )));
    }
    let raw_steps = arcs.len();

    let mut merged: Vec<Arc> = Vec::with_capacity(arcs.len());
    for arc in arcs {
        match merged.last() {
            Some(prev) if prev.value == arc.value => {}
            _ => merged.push(arc),
        }
    }
    // the last arc runs into the first one
    if merged.len() > 1 && merged[0].value == merged[merged.len() - 1].value {
        merged.remove(0);
    }
    Ok(Normalized {
        step: StepFunction { arcs: merged },
        raw_steps,
    })
}

impl StepFunction {
    /// Build from raw pairs, discarding the merge bookkeeping.
    pub fn new(raw: &[(f64, C)]) -> Result<Self, BoundaryError> {
        validate_step_function(raw).map(|n| n.step)
    }

    /// `values[j]` on `n` equal arcs starting at angle `offset`.
    pub fn equal_arcs(values: &[C], offset: f64) -> Result<Self, BoundaryError> {
        let n = values.len();
        let raw: Vec<(f64, C)> = values
            .iter()
            .enumerate()
            .map(|(j, &v)| (offset + TAU * j as f64 / n as f64, v))
            .collect();
        Self::new(&raw)
    }

    /// The regular `n`-gon map: vertex `e^{2πij/n}` on the arc starting at `2πj/n`.
    pub fn regular_polygon(n: usize) -> Self {
        let values: Vec<C> = (0..n)
            .map(|j| C::from_polar(1.0, TAU * j as f64 / n as f64))
            .collect();
        Self::equal_arcs(&values, 0.0).expect("regular polygon data is valid")
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn step_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn values(&self) -> impl Iterator<Item = C> + '_ {
        self.arcs.iter().map(|a| a.value)
    }

    /// Jump angles (the arc starts).
    pub fn jump_angles(&self) -> Vec<f64> {
        self.arcs.iter().map(|a| a.theta).collect()
    }

    /// Jump at each arc start: value after minus value before.
    pub fn jumps(&self) -> Vec<C> {
        let n = self.arcs.len();
        (0..n)
            .map(|j| self.arcs[j].value - self.arcs[(j + n - 1) % n].value)
            .collect()
    }

    /// Arc lengths in radians; they sum to 2π.
    pub fn arc_lengths(&self) -> Vec<f64> {
        let n = self.arcs.len();
        (0..n)
            .map(|j| {
                if n == 1 {
                    TAU
                } else if j + 1 < n {
                    self.arcs[j + 1].theta - self.arcs[j].theta
                } else {
                    self.arcs[0].theta + TAU - self.arcs[j].theta
                }
            })
            .collect()
    }

    /// Boundary value at angle `theta` (the arc containing it).
    pub fn value_at(&self, theta: f64) -> C {
        let t = theta.rem_euclid(TAU);
        match self.arcs.iter().rposition(|a| a.theta <= t) {
            Some(j) => self.arcs[j].value,
            None => self.arcs[self.arcs.len() - 1].value,
        }
    }

    /// Raw pairs, suitable for feeding back into [`validate_step_function`].
    pub fn to_raw(&self) -> Vec<(f64, C)> {
        self.arcs.iter().map(|a| (a.theta, a.value)).collect()
    }

    /// Apply `f` to every arc value (not re-validated for merges).
    pub fn map_values<F: Fn(C) -> C>(&self, f: F) -> StepFunction {
        StepFunction {
            arcs: self
                .arcs
                .iter()
                .map(|a| Arc {
                    theta: a.theta,
                    value: f(a.value),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Positive,
    Negative,
}

/// A simple closed polygon. Collinear vertices are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JordanPolygon {
    vertices: Vec<C>,
    orientation: Orientation,
}

impl JordanPolygon {
    /// Validate simplicity and compute the orientation from the signed area.
    pub fn new(vertices: Vec<C>) -> Result<Self, BoundaryError> {
        let n = vertices.len();
        if n < 3 {
            return Err(BoundaryError::NotAPolygon(format!("{n} vertices")));
        }
        for j in 0..n {
            if vertices[j] == vertices[(j + 1) % n] {
                return Err(BoundaryError::NotAPolygon(format!(
                    "consecutive vertices {j} and {} coincide",
                    (j + 1) % n
                )));
            }
        }
        let mut distinct: Vec<C> = Vec::new();
        for v in &vertices {
            if !distinct.contains(v) {
                distinct.push(*v);
            }
        }
        if distinct.len() < 3 {
            return Err(BoundaryError::NotAPolygon(format!(
                "{} distinct vertices",
                distinct.len()
            )));
        }
        check_simple(&vertices)?;
        let area = signed_area(&vertices);
        if area == 0.0 {
            return Err(BoundaryError::NotSimple(0, 0));
        }
        let orientation = if area > 0.0 {
            Orientation::Positive
        } else {
            Orientation::Negative
        };
        Ok(Self {
            vertices,
            orientation,
        })
    }

    pub fn vertices(&self) -> &[C] {
        &self.vertices
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    /// Even-odd point-in-polygon test; points within `tol` of an edge count as inside.
    pub fn contains(&self, p: C, tol: f64) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        for j in 0..n {
            let a = self.vertices[j];
            let b = self.vertices[(j + 1) % n];
            if point_segment_distance(p, a, b) <= tol {
                return true;
            }
            if (a.im > p.im) != (b.im > p.im) {
                let x = a.re + (p.im - a.im) * (b.re - a.re) / (b.im - a.im);
                if p.re < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Largest distance from any point of `other`'s edges (sampled) to this polygon's boundary.
    pub fn hausdorff_to(&self, other: &JordanPolygon, per_edge: usize) -> f64 {
        let one_side = |p: &JordanPolygon, q: &JordanPolygon| {
            let n = p.vertices.len();
            let mut worst: f64 = 0.0;
            for j in 0..n {
                let a = p.vertices[j];
                let b = p.vertices[(j + 1) % n];
                for s in 0..per_edge {
                    let pt = a + (b - a) * (s as f64 / per_edge as f64);
                    worst = worst.max(q.boundary_distance(pt));
                }
            }
            worst
        };
        one_side(self, other).max(one_side(other, self))
    }

    pub fn boundary_distance(&self, p: C) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|j| point_segment_distance(p, self.vertices[j], self.vertices[(j + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Polygon whose vertices are the arc values in arc order.
pub fn polygon_from_step(sf: &StepFunction) -> Result<JordanPolygon, BoundaryError> {
    JordanPolygon::new(sf.values().collect())
}

fn signed_area(v: &[C]) -> f64 {
    let n = v.len();
    0.5 * (0..n)
        .map(|j| {
            let a = v[j];
            let b = v[(j + 1) % n];
            a.re * b.im - a.im * b.re
        })
        .sum::<f64>()
}

fn cross(a: C, b: C) -> f64 {
    a.re * b.im - a.im * b.re
}

pub(crate) fn point_segment_distance(p: C, a: C, b: C) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

fn segments_meet(p1: C, p2: C, q1: C, q2: C, tol: f64) -> bool {
    let d1 = cross(p2 - p1, q1 - p1);
    let d2 = cross(p2 - p1, q2 - p1);
    let d3 = cross(q2 - q1, p1 - q1);
    let d4 = cross(q2 - q1, p2 - q1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    point_segment_distance(q1, p1, p2) <= tol
        || point_segment_distance(q2, p1, p2) <= tol
        || point_segment_distance(p1, q1, q2) <= tol
        || point_segment_distance(p2, q1, q2) <= tol
}

fn check_simple(v: &[C]) -> Result<(), BoundaryError> {
    let n = v.len();
    let scale = v.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let tol = SEGMENT_TOLERANCE * scale;
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        for j in (i + 1)..n {
            let (c, d) = (v[j], v[(j + 1) % n]);
            let adjacent_after = j == i + 1;
            let adjacent_before = (j + 1) % n == i;
            if adjacent_after {
                // edges a-b and b-d share b: they may only touch there
                if point_segment_distance(d, a, b) <= tol || point_segment_distance(a, b, d) <= tol {
                    return Err(BoundaryError::NotSimple(i, j));
                }
            } else if adjacent_before {
                // edges c-a and a-b share a
                if point_segment_distance(c, a, b) <= tol || point_segment_distance(b, c, a) <= tol {
                    return Err(BoundaryError::NotSimple(i, j));
                }
            } else if segments_meet(a, b, c, d, tol) {
                return Err(BoundaryError::NotSimple(i, j));
            }
        }
    }
    Ok(())
}

/// Jump sizes and their sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationReport {
    pub total_variation: f64,
    pub jump_magnitudes: Vec<f64>,
}

pub fn total_variation(sf: &StepFunction) -> VariationReport {
    let jump_magnitudes: Vec<f64> = if sf.step_count() == 1 {
        Vec::new()
    } else {
        sf.jumps().iter().map(|d| d.norm()).collect()
    };
    VariationReport {
        total_variation: jump_magnitudes.iter().sum(),
        jump_magnitudes,
    }
}

// --- map-spec JSON --------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct MapSpecFile {
    arcs: Vec<MapSpecArc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MapSpecArc {
    theta: f64,
    value: [f64; 2],
}

/// Parse `{"arcs":[{"theta": t, "value": [re, im]}, ...]}`.
pub fn map_spec_from_json(text: &str) -> Result<Normalized, BoundaryError> {
    let file: MapSpecFile =
        serde_json::from_str(text).map_err(|e| BoundaryError::Format(e.to_string()))?;
    let raw: Vec<(f64, C)> = file
        .arcs
        .iter()
        .map(|a| (a.theta, C::new(a.value[0], a.value[1])))
        .collect();
    validate_step_function(&raw)
}

pub fn map_spec_to_json(sf: &StepFunction) -> String {
    let file = MapSpecFile {
        arcs: sf
            .arcs
            .iter()
            .map(|a| MapSpecArc {
                theta: a.theta,
                value: [a.value.re, a.value.im],
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("map spec serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn single_arc_is_constant() {
        let n = validate_step_function(&[(0.0, c(1.0, 0.0))]).unwrap();
        assert_eq!(n.step.step_count(), 1);
        assert!(!n.degenerate());
    }

    #[test]
    fn three_arcs_already_normalized() {
        let raw = [
            (0.0, c(1.0, 0.0)),
            (TAU / 3.0, c(0.0, 1.0)),
            (2.0 * TAU / 3.0, c(-1.0, 0.0)),
        ];
        let n = validate_step_function(&raw).unwrap();
        assert_eq!(n.step.step_count(), 3);
        assert_eq!(n.step.to_raw(), raw.to_vec());
    }

    #[test]
    fn equal_neighbours_merge() {
        let raw = [(0.0, c(1.0, 0.0)), (1.0, c(1.0, 0.0)), (2.0, c(0.0, 1.0))];
        let n = validate_step_function(&raw).unwrap();
        assert_eq!(n.raw_steps, 3);
        assert_eq!(n.merged_steps(), 2);
        assert!(n.degenerate());
        assert_eq!(n.step.arcs()[0].theta, 0.0);
        assert_eq!(n.step.arcs()[1].theta, 2.0);
    }

    #[test]
    fn wraparound_merge() {
        let raw = [(0.0, c(1.0, 0.0)), (1.0, c(0.0, 1.0)), (2.0, c(1.0, 0.0))];
        let n = validate_step_function(&raw).unwrap();
        assert_eq!(n.merged_steps(), 2);
        assert_eq!(n.step.arcs()[0].theta, 1.0);
        assert_eq!(n.step.arcs()[1].theta, 2.0);
    }

    #[test]
    fn errors() {
        assert_eq!(validate_step_function(&[]), Err(BoundaryError::EmptyInput));
        let dup = [(0.5, c(1.0, 0.0)), (0.5 + TAU, c(0.0, 1.0))];
        assert!(matches!(
            validate_step_function(&dup),
            Err(BoundaryError::InvalidPartition(_))
        ));
    }

    #[test]
    fn angles_are_reduced_and_sorted() {
        let raw = [(-1.0, c(1.0, 0.0)), (7.0, c(0.0, 1.0)), (3.0, c(-1.0, 0.0))];
        let sf = StepFunction::new(&raw).unwrap();
        let th = sf.jump_angles();
        assert!(th.windows(2).all(|w| w[0] < w[1]));
        assert!(th.iter().all(|&t| (0.0..TAU).contains(&t)));
    }

    #[test]
    fn square_is_positive() {
        let sf = StepFunction::regular_polygon(4);
        let p = polygon_from_step(&sf).unwrap();
        assert_eq!(p.orientation(), Orientation::Positive);
        assert!((p.signed_area() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn crossing_quadrilateral_is_not_simple() {
        let sf = StepFunction::equal_arcs(&[c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)], 0.0)
            .unwrap();
        assert!(matches!(polygon_from_step(&sf), Err(BoundaryError::NotSimple(_, _))));
    }

    #[test]
    fn triangle_and_degenerate_cases() {
        let tri = StepFunction::equal_arcs(&[c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)], 0.0).unwrap();
        assert_eq!(polygon_from_step(&tri).unwrap().orientation(), Orientation::Positive);
        let two = StepFunction::equal_arcs(&[c(1.0, 0.0), c(0.0, 1.0)], 0.0).unwrap();
        assert!(matches!(polygon_from_step(&two), Err(BoundaryError::NotAPolygon(_))));
        let back = StepFunction::equal_arcs(&[c(1.0, 0.0), c(0.0, 1.0), c(1.0, 0.0), c(0.0, 1.0)], 0.0)
            .unwrap();
        assert!(matches!(polygon_from_step(&back), Err(BoundaryError::NotAPolygon(_))));
    }

    #[test]
    fn collinear_vertices_are_allowed() {
        let verts = vec![c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(2.0, 1.0), c(0.0, 1.0)];
        let p = JordanPolygon::new(verts).unwrap();
        assert_eq!(p.orientation(), Orientation::Positive);
        let flat = vec![c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)];
        assert!(JordanPolygon::new(flat).is_err());
    }

    #[test]
    fn variation_examples() {
        let constant = StepFunction::new(&[(0.0, c(2.0, 1.0))]).unwrap();
        assert_eq!(total_variation(&constant).total_variation, 0.0);

        let halves = StepFunction::equal_arcs(&[c(1.0, 0.0), c(-1.0, 0.0)], 0.0).unwrap();
        let rep = total_variation(&halves);
        assert_eq!(rep.jump_magnitudes, vec![2.0, 2.0]);
        assert_eq!(rep.total_variation, 4.0);

        let roots = StepFunction::regular_polygon(3);
        // |1 - ω| = √3 for a primitive cube root ω
        assert!((total_variation(&roots).total_variation - 3.0 * 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn map_spec_round_trip_is_bit_exact() {
        let sf = StepFunction::new(&[
            (0.1, c(0.1 + 0.2, 1.0 / 3.0)),
            (2.0, c(-1e-300, 7.5e10)),
            (4.0, c(std::f64::consts::E, -0.0)),
        ])
        .unwrap();
        let text = map_spec_to_json(&sf);
        let back = map_spec_from_json(&text).unwrap().step;
        for (a, b) in sf.arcs().iter().zip(back.arcs()) {
            assert_eq!(a.theta.to_bits(), b.theta.to_bits());
            assert_eq!(a.value.re.to_bits(), b.value.re.to_bits());
            assert_eq!(a.value.im.to_bits(), b.value.im.to_bits());
        }
    }

    fn arb_step() -> impl Strategy<Value = Vec<(f64, C)>> {
        prop::collection::vec((0.0..TAU, -2.0..2.0f64, -2.0..2.0f64), 1..12)
            .prop_map(|v| v.into_iter().map(|(t, a, b)| (t, C::new(a, b))).collect())
    }

    proptest! {
        #[test]
        fn validation_is_idempotent(raw in arb_step()) {
            if let Ok(n) = validate_step_function(&raw) {
                let again = validate_step_function(&n.step.to_raw()).unwrap();
                prop_assert_eq!(&again.step, &n.step);
                prop_assert!(!again.degenerate());
            }
        }

        #[test]
        fn regular_polygons_are_positive(n in 3usize..40) {
            let p = polygon_from_step(&StepFunction::regular_polygon(n)).unwrap();
            prop_assert_eq!(p.orientation(), Orientation::Positive);
            prop_assert!(p.signed_area() > 0.0);
        }

        #[test]
        fn variation_is_rotation_invariant(raw in arb_step(), shift in 0usize..12) {
            if let Ok(n) = validate_step_function(&raw) {
                let arcs = n.step.to_raw();
                let k = shift % arcs.len();
                // relabel cyclically by rotating the circle so arc k starts at 0
                let t0 = arcs[k].0;
                let rotated: Vec<(f64, C)> = arcs.iter().map(|&(t, v)| (t - t0, v)).collect();
                let r = StepFunction::new(&rotated).unwrap();
                let a = total_variation(&n.step).total_variation;
                let b = total_variation(&r).total_variation;
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
            }
        }
    }
}
