//! Geodesics in the Poincare disk. The view is centred at a section base:
//! everything is drawn relative to it, so the base sits at the origin.

use num_complex::Complex64;
use orbitpair::psl2::{cayley, ProjMatrix};
use std::fmt::Write;

const SIZE: f64 = 640.0;
const RADIUS: f64 = 300.0;

pub struct Layer {
    pub color: &'static str,
    pub width: f64,
    /// Frames relative to the base; each spans one geodesic.
    pub frames: Vec<ProjMatrix>,
}

pub const PALETTE: [&str; 6] = ["#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2"];

fn screen(w: Complex64) -> (f64, f64) {
    (SIZE / 2.0 + RADIUS * w.re, SIZE / 2.0 - RADIUS * w.im)
}

/// Boundary point of the disk for a boundary point of the upper half
/// plane given projectively as `num / den`.
fn boundary(num: f64, den: f64) -> Complex64 {
    if den.abs() < 1e-300 || (num / den).abs() > 1e12 {
        Complex64::new(1.0, 0.0)
    } else {
        cayley(Complex64::new(num / den, 0.0))
    }
}

/// Endpoints `g(0)` and `g(oo)` of the geodesic through the frame `g`.
fn endpoints(g: &ProjMatrix) -> (Complex64, Complex64) {
    (boundary(g.m12(), g.m22()), boundary(g.m11(), g.m21()))
}

fn arc(p: Complex64, q: Complex64) -> String {
    let (px, py) = screen(p);
    let (qx, qy) = screen(q);
    let denom = 1.0 + (p * q.conj()).re;
    if denom.abs() < 1e-9 || (p + q).norm() < 1e-9 {
        return format!("M {px:.3} {py:.3} L {qx:.3} {qy:.3}");
    }
    let center = (p + q) / denom;
    let r = (center - p).norm();
    // The arc inside the disk passes through the point of the circle
    // nearest the origin.
    let mid = center - center / center.norm() * r;
    let cross = |a: Complex64, b: Complex64| a.re * b.im - a.im * b.re;
    let ccw = cross(p - center, mid - center) > 0.0;
    let sweep = u8::from(ccw);
    format!("M {px:.3} {py:.3} A {rr:.3} {rr:.3} 0 0 {sweep} {qx:.3} {qy:.3}", rr = r * RADIUS)
}

/// SVG with the boundary circle, one path per geodesic, and the
/// encounter region (hyperbolic radius `region`) around the base.
pub fn render(title: &str, layers: &[Layer], points: &[ProjMatrix], region: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#);
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(s, r##"<circle cx="{c}" cy="{c}" r="{RADIUS}" fill="#fafafa" stroke="#333" stroke-width="1.5"/>"##, c = SIZE / 2.0);
    let disk_r = (region / 2.0).tanh() * RADIUS;
    let _ = writeln!(s, r##"<circle cx="{c}" cy="{c}" r="{disk_r:.3}" fill="#ffe08a" fill-opacity="0.6" stroke="#c90"/>"##, c = SIZE / 2.0);
    for layer in layers {
        let _ = writeln!(s, r#"<g fill="none" stroke="{}" stroke-width="{}">"#, layer.color, layer.width);
        for f in &layer.frames {
            let (p, q) = endpoints(f);
            let _ = writeln!(s, r#"<path d="{}"/>"#, arc(p, q));
        }
        let _ = writeln!(s, "</g>");
    }
    for p in points {
        let z = p.apply(Complex64::new(0.0, 1.0));
        let (x, y) = screen(cayley(z));
        let _ = writeln!(s, r##"<circle cx="{x:.3}" cy="{y:.3}" r="2.5" fill="#000"/>"##);
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
