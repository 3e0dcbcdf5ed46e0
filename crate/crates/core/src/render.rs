//! Deterministic SVG output: images of circles and radii, boundary images,
//! polygon overlays and error heatmaps. Coordinates are rounded to 6 decimals.

use std::fmt::Write as _;

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{cis, TAU};
use crate::PlaneMap;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("resolution {0} is below 64")]
    Resolution(u32),
    #[error("radius {0} is outside (0, 1)")]
    Radius(f64),
    #[error("{0} needs {1}")]
    Missing(&'static str, &'static str),
    #[error("nothing finite to draw")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderKind {
    BoundaryImage,
    CircleImages,
    PolygonOverlay,
    ErrorHeatmap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderSpec {
    pub what: RenderKind,
    pub radii: Vec<f64>,
    pub resolution: u32,
}

impl RenderSpec {
    pub fn validate(&self) -> Result<(), RenderError> {
        if self.resolution < 64 {
            return Err(RenderError::Resolution(self.resolution));
        }
        if let Some(&r) = self.radii.iter().find(|&&r| !(r > 0.0 && r < 1.0)) {
            return Err(RenderError::Radius(r));
        }
        Ok(())
    }
}

/// Samples per curve.
pub const CURVE_SAMPLES: usize = 1024;
/// Radius standing in for the unit circle.
pub const BOUNDARY_RADIUS: f64 = 1.0 - 1e-6;

/// Image of the circle `|z| = radius` at `samples` equispaced angles.
pub fn sample_curve<M: PlaneMap + ?Sized>(map: &M, radius: f64, samples: usize) -> Vec<C> {
    (0..samples)
        .map(|j| map.eval(cis(TAU * j as f64 / samples as f64) * radius))
        .collect()
}

fn sample_spoke<M: PlaneMap + ?Sized>(map: &M, angle: f64, max_radius: f64, samples: usize) -> Vec<C> {
    (0..=samples)
        .map(|j| map.eval(cis(angle) * (max_radius * j as f64 / samples as f64)))
        .collect()
}

fn fmt6(x: f64) -> String {
    let s = format!("{:.6}", x);
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

struct Canvas {
    paths: Vec<(Vec<C>, bool, &'static str, &'static str)>,
    cells: Vec<(C, f64, String)>,
}

impl Canvas {
    fn finish(self, resolution: u32) -> Result<String, RenderError> {
        let mut lo = C::new(f64::INFINITY, f64::INFINITY);
        let mut hi = C::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut grow = |p: C| {
            if p.is_finite() {
                lo = C::new(lo.re.min(p.re), lo.im.min(p.im));
                hi = C::new(hi.re.max(p.re), hi.im.max(p.im));
            }
        };
        for (pts, ..) in &self.paths {
            pts.iter().for_each(|&p| grow(p));
        }
        for (c, s, _) in &self.cells {
            grow(*c - C::new(*s, *s) * 0.5);
            grow(*c + C::new(*s, *s) * 0.5);
        }
        if !lo.re.is_finite() {
            return Err(RenderError::Empty);
        }
        let w = (hi.re - lo.re).max(1e-12);
        let h = (hi.im - lo.im).max(1e-12);
        let margin = 0.05 * w.max(h);
        let (x0, y0) = (lo.re - margin, -hi.im - margin);
        let (vw, vh) = (w + 2.0 * margin, h + 2.0 * margin);
        let stroke = 0.002 * vw.max(vh);

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{resolution}" height="{resolution}" viewBox="{} {} {} {}">"#,
            fmt6(x0),
            fmt6(y0),
            fmt6(vw),
            fmt6(vh)
        );
        for (c, s, colour) in &self.cells {
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{colour}"/>"#,
                fmt6(c.re - 0.5 * s),
                fmt6(-c.im - 0.5 * s),
                fmt6(*s),
                fmt6(*s)
            );
        }
        for (pts, closed, colour, class) in &self.paths {
            let mut d = String::new();
            let mut pen_up = true;
            for p in pts {
                if !p.is_finite() {
                    pen_up = true;
                    continue;
                }
                d.push_str(if pen_up { "M" } else { " L" });
                let _ = write!(d, "{} {}", fmt6(p.re), fmt6(-p.im));
                pen_up = false;
            }
            if *closed {
                d.push_str(" Z");
            }
            let _ = writeln!(
                out,
                r#"<path class="{class}" d="{d}" fill="none" stroke="{colour}" stroke-width="{}"/>"#,
                fmt6(stroke)
            );
        }
        out.push_str("</svg>\n");
        Ok(out)
    }
}

/// Renders `map` according to `spec`. `polygon` is required for
/// [`RenderKind::PolygonOverlay`] and `reference` for [`RenderKind::ErrorHeatmap`].
pub fn render_svg<M: PlaneMap + ?Sized>(
    map: &M,
    spec: &RenderSpec,
    polygon: Option<&[C]>,
    reference: Option<&dyn PlaneMap>,
) -> Result<String, RenderError> {
    spec.validate()?;
    let mut canvas = Canvas {
        paths: Vec::new(),
        cells: Vec::new(),
    };
    match spec.what {
        RenderKind::CircleImages => {
            for &r in &spec.radii {
                canvas.paths.push((sample_curve(map, r, CURVE_SAMPLES), true, "#1f4e79", "circle"));
            }
            let rmax = spec.radii.iter().copied().fold(0.0, f64::max);
            for k in 0..12 {
                let spoke = sample_spoke(map, TAU * k as f64 / 12.0, rmax, 128);
                canvas.paths.push((spoke, false, "#9a9a9a", "radius"));
            }
        }
        RenderKind::BoundaryImage => {
            canvas.paths.push((sample_curve(map, BOUNDARY_RADIUS, 4 * CURVE_SAMPLES), true, "#1f4e79", "boundary"));
        }
        RenderKind::PolygonOverlay => {
            let poly = polygon.ok_or(RenderError::Missing("polygon_overlay", "a polygon"))?;
            canvas.paths.push((poly.to_vec(), true, "#b03a2e", "polygon"));
            canvas.paths.push((sample_curve(map, BOUNDARY_RADIUS, 4 * CURVE_SAMPLES), true, "#1f4e79", "boundary"));
            for &r in &spec.radii {
                canvas.paths.push((sample_curve(map, r, CURVE_SAMPLES), true, "#7f8c8d", "circle"));
            }
        }
        RenderKind::ErrorHeatmap => {
            let reference = reference.ok_or(RenderError::Missing("error_heatmap", "a reference map"))?;
            let rmax = spec.radii.iter().copied().fold(0.0, f64::max);
            let side = (spec.resolution / 8).max(8) as usize;
            let cell = 2.0 * rmax / side as f64;
            let mut errs = Vec::new();
            for i in 0..side {
                for j in 0..side {
                    let z = C::new(-rmax + (j as f64 + 0.5) * cell, -rmax + (i as f64 + 0.5) * cell);
                    if z.norm() <= rmax {
                        errs.push((z, (map.eval(z) - reference.eval(z)).norm()));
                    }
                }
            }
            let top = errs.iter().map(|e| e.1).fold(0.0, f64::max);
            for (z, e) in errs {
                let level = if top > 0.0 { (255.0 * (1.0 - e / top)).round() as u8 } else { 255 };
                canvas.cells.push((z, cell, format!("rgb(255,{level},{level})")));
            }
            canvas.paths.push((sample_curve(&|z: C| z, rmax, CURVE_SAMPLES), true, "#1f4e79", "domain"));
        }
    }
    canvas.finish(spec.resolution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{polygon_from_step, StepFunction};
    use crate::harmonic::HarmonicStepMap;

    fn spec(what: RenderKind, radii: &[f64]) -> RenderSpec {
        RenderSpec {
            what,
            radii: radii.to_vec(),
            resolution: 256,
        }
    }

    #[test]
    fn identity_circles() {
        let id = |z: C| z;
        let svg = render_svg(&id, &spec(RenderKind::CircleImages, &[0.5, 0.9]), None, None).unwrap();
        assert_eq!(svg.matches(r#"class="circle""#).count(), 2);
        assert!(svg.contains("M0.500000 0.000000"));
        assert!(svg.contains("M0.900000 0.000000"));
    }

    #[test]
    fn pentagon_inside_polygon() {
        let sf = StepFunction::regular_polygon(5);
        let m = HarmonicStepMap::new(&sf);
        let poly = polygon_from_step(&sf).unwrap();
        let svg = render_svg(&m, &spec(RenderKind::PolygonOverlay, &[0.5]), Some(poly.vertices()), None).unwrap();
        assert!(svg.contains(r#"class="polygon""#));
        for p in sample_curve(&m, BOUNDARY_RADIUS, 4096) {
            assert!(poly.contains(p, 1e-6));
        }
    }

    #[test]
    fn byte_identical() {
        let m = HarmonicStepMap::new(&StepFunction::regular_polygon(7));
        let s = spec(RenderKind::CircleImages, &[0.3, 0.6, 0.95]);
        assert_eq!(render_svg(&m, &s, None, None).unwrap(), render_svg(&m, &s, None, None).unwrap());
        let id = |z: C| z;
        let h = spec(RenderKind::ErrorHeatmap, &[0.8]);
        let a = render_svg(&m, &h, None, Some(&id)).unwrap();
        assert_eq!(a, render_svg(&m, &h, None, Some(&id)).unwrap());
        assert!(a.contains("<rect"));
    }

    #[test]
    fn rejects_bad_specs() {
        let id = |z: C| z;
        let mut s = spec(RenderKind::CircleImages, &[0.5]);
        s.resolution = 32;
        assert_eq!(render_svg(&id, &s, None, None), Err(RenderError::Resolution(32)));
        assert!(render_svg(&id, &spec(RenderKind::CircleImages, &[1.2]), None, None).is_err());
        assert!(render_svg(&id, &spec(RenderKind::PolygonOverlay, &[0.5]), None, None).is_err());
    }
}
