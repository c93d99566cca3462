//! Deterministic SVG 1.1 figures: point sets as dots, stripe bands as
//! shaded strips perpendicular to the band direction, violations as
//! highlighted dots. Coordinates are formatted to four decimals and the
//! output carries no timestamps, so bytes depend on content alone.

use crate::patternspace::PointSet;
use crate::stripe::{StripeCertificate, StripeSpec};
use std::fmt::Write as _;

const WIDTH: f64 = 800.0;
const MARGIN: f64 = 28.0;
const BAND_FILL: &str = "#a6bddb";
const DOT_FILL: &str = "#252525";
const BAD_FILL: &str = "#d7301f";

fn fmt(v: f64) -> String {
    // Normalize negative zero so formatting is a pure function of value.
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.4}")
}

struct Frame {
    lo: Vec<f64>,
    scale: f64,
    height: f64,
    baseline: f64,
    dim: usize,
}

impl Frame {
    fn for_set(set: &PointSet) -> Frame {
        let r = set.region();
        let dim = set.dim();
        let span = r.span();
        let usable = WIDTH - 2.0 * MARGIN;
        let scale = usable / span[0].max(1e-9);
        let height = if dim == 1 {
            160.0
        } else {
            2.0 * MARGIN + span[1].max(1e-9) * scale
        };
        Frame { lo: r.lo.clone(), scale, height, baseline: height / 2.0, dim }
    }

    fn x(&self, p: &[f64]) -> f64 {
        MARGIN + (p[0] - self.lo[0]) * self.scale
    }

    fn y(&self, p: &[f64]) -> f64 {
        if self.dim == 1 {
            self.baseline
        } else {
            self.height - MARGIN - (p[1] - self.lo[1]) * self.scale
        }
    }
}

fn open_svg(out: &mut String, height: f64) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        fmt(WIDTH),
        fmt(height),
        fmt(WIDTH),
        fmt(height)
    );
    let _ = writeln!(
        out,
        r##"<rect x="0" y="0" width="{}" height="{}" fill="#ffffff"/>"##,
        fmt(WIDTH),
        fmt(height)
    );
}

fn dots(out: &mut String, set: &PointSet, f: &Frame, radius: f64, fill: &str) {
    for i in 0..set.len() {
        let p = set.approx_point(i);
        let _ = writeln!(
            out,
            r#"<circle cx="{}" cy="{}" r="{}" fill="{}"/>"#,
            fmt(f.x(p)),
            fmt(f.y(p)),
            fmt(radius),
            fill
        );
    }
}

/// Plain scatter of a point set (1D sets on a middle baseline).
pub fn pointset_svg(set: &PointSet) -> String {
    let f = Frame::for_set(set);
    let mut out = String::new();
    open_svg(&mut out, f.height);
    dots(&mut out, set, &f, 2.5, DOT_FILL);
    out.push_str("</svg>\n");
    out
}

/// Figure-style stripe plot: shaded periodic bands for the certificate's
/// spec anchored at `b`, all points as dots, violating pairs highlighted.
pub fn stripe_svg(set: &PointSet, cert: &StripeCertificate, b: &[f64]) -> String {
    let f = Frame::for_set(set);
    let spec = &cert.spec;
    let mut out = String::new();
    open_svg(&mut out, f.height);
    bands(&mut out, set, spec, b, &f);
    dots(&mut out, set, &f, 2.5, DOT_FILL);
    for v in &cert.violations {
        let _ = writeln!(
            out,
            r#"<circle cx="{}" cy="{}" r="{}" fill="{}"/>"#,
            fmt(f.x(&v.y)),
            fmt(f.y(&v.y)),
            fmt(3.5),
            BAD_FILL
        );
    }
    out.push_str("</svg>\n");
    out
}

fn bands(out: &mut String, set: &PointSet, spec: &StripeSpec, b: &[f64], f: &Frame) {
    // Range of band indices touched by the region: project its corners
    // onto the stripe direction.
    let r = set.region();
    let dim = f.dim;
    let mut umin = f64::INFINITY;
    let mut umax = f64::NEG_INFINITY;
    for corner in 0..(1usize << dim) {
        let u: f64 = (0..dim)
            .map(|i| {
                let c = if corner >> i & 1 == 1 { r.hi[i] } else { r.lo[i] };
                (c - b[i]) * spec.a[i]
            })
            .sum();
        umin = umin.min(u);
        umax = umax.max(u);
    }
    let k_lo = ((umin - spec.l2) / spec.l1).floor() as i64;
    let k_hi = ((umax + spec.l2) / spec.l1).ceil() as i64;

    if dim == 1 {
        let sgn = spec.a[0].signum();
        for k in k_lo..=k_hi {
            let c = b[0] + sgn * k as f64 * spec.l1;
            let x0 = f.x(&[c - spec.l2]);
            let x1 = f.x(&[c + spec.l2]);
            let w = (x1 - x0).max(0.75);
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}" fill-opacity="0.6"/>"#,
                fmt(x0),
                fmt(MARGIN),
                fmt(w),
                fmt(f.height - 2.0 * MARGIN),
                BAND_FILL
            );
        }
    } else {
        // Screen direction of a (y axis flips); strips are axis-aligned in
        // a frame rotated so a points along +x.
        let theta = (-spec.a[1]).atan2(spec.a[0]).to_degrees();
        let big = WIDTH + f.height;
        let _ = writeln!(
            out,
            r#"<g transform="translate({} {}) rotate({})">"#,
            fmt(f.x(b)),
            fmt(f.y(b)),
            fmt(theta)
        );
        for k in k_lo..=k_hi {
            let x0 = (k as f64 * spec.l1 - spec.l2) * f.scale;
            let w = (2.0 * spec.l2 * f.scale).max(0.75);
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}" fill-opacity="0.6"/>"#,
                fmt(x0),
                fmt(-big),
                fmt(w),
                fmt(2.0 * big),
                BAND_FILL
            );
        }
        out.push_str("</g>\n");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patternspace::{default_anchors, Region};
    use crate::stripe::stripe_verify;

    #[test]
    fn scatter_is_deterministic_and_complete() {
        let set = PointSet::integer_lattice(-5, 5);
        let a = pointset_svg(&set);
        let b = pointset_svg(&set);
        assert_eq!(a, b);
        assert_eq!(a.matches("<circle").count(), 11);
        assert!(a.starts_with("<?xml"));
        assert!(a.ends_with("</svg>\n"));
    }

    #[test]
    fn stripe_figure_shades_bands_and_marks_violations() {
        let set = PointSet::integer_lattice(-10, 10);
        let spec = StripeSpec::new(vec![1.0], std::f64::consts::SQRT_2, 0.1, 1.5).unwrap();
        let anchors = default_anchors(&set, 1.5, 0);
        let cert = stripe_verify(&set, &spec, &anchors, 40.0).unwrap();
        assert!(!cert.holds());
        let svg = stripe_svg(&set, &cert, &[0.0]);
        // Bands cover [-10 - L2, 10 + L2]: fifteen rects plus background.
        assert!(svg.matches("<rect").count() >= 10);
        assert!(svg.contains(BAD_FILL));
        assert_eq!(svg, stripe_svg(&set, &cert, &[0.0]));
    }

    #[test]
    fn two_dimensional_bands_rotate_with_the_direction() {
        let region = Region::new(vec![-3.0, -3.0], vec![3.0, 3.0], 0.0).unwrap();
        let pts: Vec<Vec<f64>> =
            (-3..=3).flat_map(|i| (-3..=3).map(move |j| vec![i as f64, j as f64])).collect();
        let set = PointSet::float_mode(1e-9, pts, region).unwrap();
        let inv = 1.0 / 2.0f64.sqrt();
        let spec = StripeSpec::new(vec![inv, inv], 1.0, 0.2, 1.0).unwrap();
        let anchors = default_anchors(&set, 1.0, 0);
        let cert = stripe_verify(&set, &spec, &anchors, 10.0).unwrap();
        let svg = stripe_svg(&set, &cert, &[0.0, 0.0]);
        assert!(svg.contains("rotate(-45.0000)"));
        assert_eq!(svg.matches("<circle").count(), 49 + cert.violations.len());
    }
}
