//! Top-down SVG of one BEV frame: forward is up, left is left.

use std::fmt::Write;

use crate::camera::GroundPoint;
use crate::io::formats::{BevFrame, BoxRecord};
use crate::synth::EgoFootprint;

#[derive(Debug, Clone, PartialEq)]
pub struct SvgStyle {
    pub pixels_per_metre: f64,
    /// Canvas edge in metres; the canvas is square.
    pub extent: f64,
    /// Ground point drawn at the canvas center.
    pub focus: GroundPoint,
    pub ego: EgoFootprint,
}

impl Default for SvgStyle {
    fn default() -> Self {
        let ego = EgoFootprint::default();
        Self {
            pixels_per_metre: 40.0,
            extent: 20.0,
            focus: GroundPoint::new(0.5 * (ego.x_min + ego.x_max), 0.0),
            ego,
        }
    }
}

impl SvgStyle {
    fn size(&self) -> f64 {
        self.extent * self.pixels_per_metre
    }

    fn screen(&self, p: GroundPoint) -> (f64, f64) {
        let half = 0.5 * self.size();
        (half - (p.y - self.focus.y) * self.pixels_per_metre, half - (p.x - self.focus.x) * self.pixels_per_metre)
    }

    fn points(&self, ps: &[GroundPoint]) -> String {
        ps.iter()
            .map(|p| {
                let (x, y) = self.screen(*p);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn gp(v: [f64; 2]) -> GroundPoint {
    GroundPoint::new(v[0], v[1])
}

fn draw_target(out: &mut String, b: &BoxRecord, style: &SvgStyle) {
    let (a, bb, c, d) = (gp(b.a), gp(b.b), gp(b.c), gp(b.d));
    let center = gp(b.center);
    // A, B, D, C walks the outline
    let _ = writeln!(out, r#"  <polygon class="target" points="{}"/>"#, style.points(&[a, bb, d, c]));
    let front = a.midpoint(&c);
    let fwd = front - center;
    let len = fwd.norm();
    let dir = if len > 0.0 { fwd * (1.0 / len) } else { GroundPoint::new(1.0, 0.0) };
    let side = GroundPoint::new(-dir.y, dir.x);
    let tip = center + fwd * 0.9;
    let head = 0.35;
    let wing = |s: f64| tip - dir * head + side * (s * 0.2);
    let _ = writeln!(
        out,
        r#"  <path class="heading" d="M {} L {} M {} L {} L {}"/>"#,
        style.points(&[center]),
        style.points(&[tip]),
        style.points(&[wing(1.0)]),
        style.points(&[tip]),
        style.points(&[wing(-1.0)]),
    );
    let (lx, ly) = style.screen(center);
    let _ = writeln!(out, r#"  <text class="label" x="{lx:.2}" y="{ly:.2}">{} {}</text>"#, b.obj_id, b.type_name);
}

/// Deterministic SVG for one frame.
pub fn render_svg(frame: &BevFrame, style: &SvgStyle) -> String {
    let size = style.size();
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size:.2}" height="{size:.2}" viewBox="0 0 {size:.2} {size:.2}">"#
    );
    let _ = writeln!(out, "  <title>frame {}</title>", frame.frame_id);
    out.push_str(concat!(
        "  <style>\n",
        "    .target { fill: #4a90d9; fill-opacity: 0.35; stroke: #1f4e8c; stroke-width: 2; }\n",
        "    .heading { fill: none; stroke: #c0392b; stroke-width: 2; }\n",
        "    .ego { fill: #555555; fill-opacity: 0.5; stroke: #222222; stroke-width: 2; }\n",
        "    .label { font: 12px monospace; fill: #111111; text-anchor: middle; }\n",
        "  </style>\n",
    ));
    let _ = writeln!(out, r##"  <rect width="{size:.2}" height="{size:.2}" fill="#ffffff"/>"##);
    let ego = style.ego.polygon();
    let _ = writeln!(out, r#"  <polygon class="ego" points="{}"/>"#, style.points(&ego));
    let (ox, oy) = style.screen(GroundPoint::ORIGIN);
    let _ = writeln!(out, r##"  <circle class="origin" cx="{ox:.2}" cy="{oy:.2}" r="4.00" fill="#222222"/>"##);
    for b in &frame.boxes {
        draw_target(&mut out, b, style);
    }
    out.push_str("</svg>\n");
    out
}

/// Plain-text listing of one frame.
pub fn render_text(frame: &BevFrame) -> String {
    let mut out = format!("frame {}: {} vehicles\n", frame.frame_id, frame.boxes.len());
    for b in &frame.boxes {
        let _ = writeln!(
            out,
            "  id {:>4} {:<8} center ({:>8.3}, {:>8.3}) heading {:>8.2} deg",
            b.obj_id, b.type_name, b.center[0], b.center[1], b.heading_deg
        );
    }
    for u in &frame.unresolved {
        let _ = writeln!(out, "  id {:>4} unresolved: {}", u.obj_id, u.reason);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bev::{corners_from_pose, PoseCase, PoseEstimate};
    use crate::vehicle::TypeCatalog;

    fn single_box() -> BevFrame {
        let spec = TypeCatalog::default().lookup_type_attrs("car").unwrap().clone();
        let pose = PoseEstimate { center: GroundPoint::new(1.0, -1.0), heading: 0.0, case_used: PoseCase::TwoWheels, side: None };
        BevFrame { frame_id: 0, boxes: vec![BoxRecord::from_box(&corners_from_pose(&pose, &spec, 7))], unresolved: vec![] }
    }

    #[test]
    fn one_box_one_arrow() {
        let svg = render_svg(&single_box(), &SvgStyle::default());
        assert_eq!(svg.matches("<polygon class=\"target\"").count(), 1);
        assert_eq!(svg.matches("<path class=\"heading\"").count(), 1);
        assert!(svg.contains(">7 car</text>"));
    }

    #[test]
    fn empty_frame_has_only_the_ego() {
        let svg = render_svg(&BevFrame { frame_id: 3, boxes: vec![], unresolved: vec![] }, &SvgStyle::default());
        assert_eq!(svg.matches("<polygon").count(), 1);
        assert!(svg.contains("class=\"ego\""));
    }

    #[test]
    fn forward_is_up() {
        let style = SvgStyle::default();
        let (_, y_near) = style.screen(GroundPoint::new(0.0, 0.0));
        let (_, y_far) = style.screen(GroundPoint::new(5.0, 0.0));
        assert!(y_far < y_near);
        let (x_left, _) = style.screen(GroundPoint::new(0.0, 2.0));
        let (x_mid, _) = style.screen(GroundPoint::new(0.0, 0.0));
        assert!(x_left < x_mid);
    }

    #[test]
    fn output_is_stable() {
        let a = render_svg(&single_box(), &SvgStyle::default());
        let b = render_svg(&single_box(), &SvgStyle::default());
        assert_eq!(a, b);
    }
}
