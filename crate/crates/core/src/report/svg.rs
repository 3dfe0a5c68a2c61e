//! SVG picture of a real line arrangement: the lines, its bounded chambers
//! and the critical points of the master function.

use std::fmt::Write;

use crate::arrangement::Arrangement;
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::master::chambers::{enumerate_chambers, vertex_bounding_box};
use crate::master::CriticalPoint;

const CANVAS: f64 = 640.0;
const MARGIN: f64 = 20.0;

type Point = [f64; 2];

struct View {
    lo: Point,
    hi: Point,
    scale: f64,
}

impl View {
    fn to_canvas(&self, p: Point) -> Point {
        [
            MARGIN + (p[0] - self.lo[0]) * self.scale,
            MARGIN + (self.hi[1] - p[1]) * self.scale,
        ]
    }

    fn corners(&self) -> Vec<Point> {
        vec![
            [self.lo[0], self.lo[1]],
            [self.hi[0], self.lo[1]],
            [self.hi[0], self.hi[1]],
            [self.lo[0], self.hi[1]],
        ]
    }
}

/// Sutherland-Hodgman clip of a convex polygon to `a . x + c >= 0`.
fn clip(poly: &[Point], a: Point, c: f64) -> Vec<Point> {
    let f = |p: &Point| a[0] * p[0] + a[1] * p[1] + c;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for (i, p) in poly.iter().enumerate() {
        let q = &poly[(i + 1) % poly.len()];
        let (fp, fq) = (f(p), f(q));
        if fp >= 0.0 {
            out.push(*p);
        }
        if fp * fq < 0.0 {
            let t = fp / (fp - fq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

/// The part of `a . x + c = 0` inside the view box.
fn segment(view: &View, a: Point, c: f64) -> Option<(Point, Point)> {
    let corners = view.corners();
    let f = |p: &Point| a[0] * p[0] + a[1] * p[1] + c;
    let mut hits = Vec::new();
    for (i, p) in corners.iter().enumerate() {
        let q = &corners[(i + 1) % 4];
        let (fp, fq) = (f(p), f(q));
        if fp == 0.0 {
            hits.push(*p);
        } else if fp * fq < 0.0 {
            let t = fp / (fp - fq);
            hits.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    match hits.as_slice() {
        [p, q, ..] => Some((*p, *q)),
        _ => None,
    }
}

fn path(view: &View, poly: &[Point]) -> String {
    let mut d = String::new();
    for (i, p) in poly.iter().enumerate() {
        let [x, y] = view.to_canvas(*p);
        let _ = write!(d, "{}{x:.2},{y:.2} ", if i == 0 { "M" } else { "L" });
    }
    d.push('Z');
    d
}

/// Renders a real arrangement in `C^2` with the given critical points
/// (real parts are drawn). Bounded chambers are shaded when the arrangement
/// is essential.
pub fn render_svg(arr: &Arrangement, lat: &Lattice, points: &[CriticalPoint]) -> Result<String> {
    if arr.dim() != 2 || !arr.is_real() {
        return Err(Error::InvalidArgument(
            "SVG output needs a real arrangement in C^2".into(),
        ));
    }
    let (mut lo, mut hi) = vertex_bounding_box(lat);
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p.location[k].re - 1.0);
            hi[k] = hi[k].max(p.location[k].re + 1.0);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let view = View {
        lo: [lo[0], lo[1]],
        hi: [hi[0], hi[1]],
        scale: (CANVAS - 2.0 * MARGIN) / span,
    };
    let width = 2.0 * MARGIN + (hi[0] - lo[0]) * view.scale;
    let height = 2.0 * MARGIN + (hi[1] - lo[1]) * view.scale;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.2} {height:.2}">"#
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);

    let real = |i: usize| {
        let h = &arr.hyperplanes()[i];
        ([h.linear()[0].re, h.linear()[1].re], h.offset().re)
    };
    if lat.is_essential() {
        let _ = writeln!(s, r#"<g id="chambers">"#);
        for ch in enumerate_chambers(arr, lat)?.iter().filter(|c| c.bounded) {
            let mut poly = view.corners();
            for (i, &sign) in ch.signs.iter().enumerate() {
                let (a, c) = real(i);
                let sg = sign as f64;
                poly = clip(&poly, [sg * a[0], sg * a[1]], sg * c);
            }
            if poly.len() >= 3 {
                let _ = writeln!(
                    s,
                    r##"<path d="{}" fill="#cfe3f7" stroke="none"><title>chamber {}</title></path>"##,
                    path(&view, &poly),
                    ch.tag()
                );
            }
        }
        let _ = writeln!(s, "</g>");
    }

    let _ = writeln!(s, r##"<g id="lines" stroke="#1f3b57" stroke-width="1.5">"##);
    for i in 0..arr.len() {
        let (a, c) = real(i);
        if let Some((p, q)) = segment(&view, a, c) {
            let [x1, y1] = view.to_canvas(p);
            let [x2, y2] = view.to_canvas(q);
            let _ = writeln!(
                s,
                r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}"><title>H{i}</title></line>"#
            );
        }
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r##"<g id="critical" fill="#c0392b">"##);
    for p in points {
        let [x, y] = view.to_canvas([p.location[0].re, p.location[1].re]);
        let _ = writeln!(
            s,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="4"><title>signature ({}, {}), residual {:.1e}</title></circle>"#,
            p.hessian_signature.0, p.hessian_signature.1, p.residual
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}
