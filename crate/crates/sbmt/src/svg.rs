//! SVG renderings of meshes, scalar fields and angle histograms.

use std::fmt::Write as _;

use crate::geom::{min_angle_deg, Aabb};
use crate::mesh::HalfEdgeMesh;
use crate::quality::Histogram;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ColorBy {
    #[default]
    None,
    /// Intersection class of the base face each triangle came from.
    Class,
    /// Minimum interior angle.
    Angle,
}

impl std::str::FromStr for ColorBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(ColorBy::None),
            "class" => Ok(ColorBy::Class),
            "angle" => Ok(ColorBy::Angle),
            _ => Err(format!("unknown colouring `{s}` (expected none, class or angle)")),
        }
    }
}

/// Piecewise-linear blue to yellow ramp over `t` in `[0, 1]`.
pub fn ramp(t: f64) -> String {
    const STOPS: [[f64; 3]; 5] = [
        [68.0, 1.0, 84.0],
        [59.0, 82.0, 139.0],
        [33.0, 145.0, 140.0],
        [94.0, 201.0, 98.0],
        [253.0, 231.0, 37.0],
    ];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let c: Vec<u8> = (0..3).map(|k| (STOPS[i][k] + f * (STOPS[i + 1][k] - STOPS[i][k])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn class_color(class: Option<(u8, u8)>) -> &'static str {
    match class {
        None => "#f2f2f2",
        Some((0, _)) => "#8dd3c7",
        Some((1, 1)) => "#ffffb3",
        Some((1, 2)) => "#bebada",
        Some((2, 2)) => "#fb8072",
        Some((1, 3)) => "#80b1d3",
        Some((2, 3)) => "#fdb462",
        Some(_) => "#b3de69",
    }
}

struct Frame {
    bbox: Aabb,
    scale: f64,
}

impl Frame {
    fn new(mesh: &HalfEdgeMesh, width: f64) -> Self {
        let bbox = Aabb::from_points(mesh.vertices().iter().copied());
        let w = (bbox.max.x - bbox.min.x).max(1e-12);
        Self { bbox, scale: width / w }
    }

    fn size(&self) -> (f64, f64) {
        ((self.bbox.max.x - self.bbox.min.x) * self.scale, (self.bbox.max.y - self.bbox.min.y) * self.scale)
    }

    fn polygon(&self, mesh: &HalfEdgeMesh, f: usize) -> String {
        let pts: Vec<String> = mesh
            .face_points(f)
            .iter()
            .map(|p| format!("{:.3},{:.3}", (p.x - self.bbox.min.x) * self.scale, (p.y - self.bbox.min.y) * self.scale))
            .collect();
        pts.join(" ")
    }
}

fn open(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.3} {h:.3}">"#);
}

/// The mesh in image orientation (y down), `width` pixels wide. `face_class`
/// is only read when colouring by class.
pub fn render_mesh(mesh: &HalfEdgeMesh, face_class: Option<&[Option<(u8, u8)>]>, color_by: ColorBy, width: f64) -> String {
    let fr = Frame::new(mesh, width);
    let (w, h) = fr.size();
    let mut out = String::new();
    open(&mut out, w, h);
    let stroke = (0.02 * fr.scale).clamp(0.1, 1.0);
    let _ = writeln!(out, r##"<g stroke="#333" stroke-width="{stroke:.3}" stroke-linejoin="round">"##);
    for f in 0..mesh.num_faces() {
        let fill = match color_by {
            ColorBy::None => "#ffffff".to_string(),
            ColorBy::Class => class_color(face_class.and_then(|c| c.get(f).copied().flatten())).to_string(),
            ColorBy::Angle => ramp(min_angle_deg(mesh.face_points(f)) / 60.0),
        };
        let _ = writeln!(out, r#"<polygon points="{}" fill="{fill}"/>"#, fr.polygon(mesh, f));
    }
    out.push_str("</g>\n</svg>\n");
    out
}

/// Faces filled by the mean of their vertex values, mapped linearly from
/// `[lo, hi]` onto the colour ramp.
pub fn render_field(mesh: &HalfEdgeMesh, values: &[f64], lo: f64, hi: f64, width: f64) -> String {
    let fr = Frame::new(mesh, width);
    let (w, h) = fr.size();
    let mut out = String::new();
    open(&mut out, w, h);
    out.push_str("<g stroke=\"none\">\n");
    let span = (hi - lo).max(1e-300);
    for f in 0..mesh.num_faces() {
        let v = mesh.faces()[f].iter().map(|&i| values[i as usize]).sum::<f64>() / 3.0;
        let c = ramp((v - lo) / span);
        let _ = writeln!(out, r#"<polygon points="{}" fill="{c}" stroke="{c}" stroke-width="0.2"/>"#, fr.polygon(mesh, f));
    }
    out.push_str("</g>\n</svg>\n");
    out
}

/// Bars of raw counts and a line of the smoothed series, both on a log scale.
pub fn histogram_svg(h: &Histogram) -> String {
    let (w, ht, pad) = (640.0, 360.0, 40.0);
    let top = h.raw.iter().copied().max().unwrap_or(1).max(1) as f64;
    let ymax = (top + 1.0).log10().max(1e-9);
    let bar_w = (w - 2.0 * pad) / h.raw.len() as f64;
    let y = |v: f64| ht - pad - (v + 1.0).log10() / ymax * (ht - 2.0 * pad);
    let mut out = String::new();
    open(&mut out, w, ht);
    out.push_str("<g fill=\"#9ecae1\" stroke=\"#3182bd\" stroke-width=\"0.5\">\n");
    for (i, &c) in h.raw.iter().enumerate() {
        let x = pad + i as f64 * bar_w;
        let y0 = y(c as f64);
        let _ = writeln!(out, r#"<rect x="{x:.2}" y="{y0:.2}" width="{bar_w:.2}" height="{:.2}"/>"#, ht - pad - y0);
    }
    out.push_str("</g>\n");
    let pts: Vec<String> =
        h.smoothed.iter().enumerate().map(|(i, &s)| format!("{:.2},{:.2}", pad + (i as f64 + 0.5) * bar_w, y(s))).collect();
    let _ = writeln!(out, r##"<polyline points="{}" fill="none" stroke="#de2d26" stroke-width="1.5"/>"##, pts.join(" "));
    let _ = writeln!(out, r##"<line x1="{pad}" y1="{0}" x2="{1}" y2="{0}" stroke="#000"/>"##, ht - pad, w - pad);
    for (i, c) in h.centers.iter().enumerate().step_by(5) {
        let x = pad + (i as f64 + 0.5) * bar_w;
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{c:.0}°</text>"#, ht - pad + 15.0);
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">minimum angle (log count)</text>"#, w / 2.0, ht - 8.0);
    out.push_str("</svg>\n");
    out
}
