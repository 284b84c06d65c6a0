//! Top-down (x, z) trajectory overlays as SVG, plus the plotted positions
//! as CSV.

use std::fmt::Write as _;

use crate::eval::Trajectory;

const SIZE_PX: f64 = 800.0;
const MARGIN_PX: f64 = 40.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// One `<polyline>` per trajectory, sharing a common equal-aspect frame.
/// North is +z.
pub fn render_svg(trajectories: &[(String, Trajectory)]) -> String {
    let points = trajectories.iter().flat_map(|(_, t)| t.positions());
    let (mut x0, mut x1, mut z0, mut z1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        z0 = z0.min(p.z);
        z1 = z1.max(p.z);
    }
    if !x0.is_finite() {
        (x0, x1, z0, z1) = (0.0, 1.0, 0.0, 1.0);
    }
    let span = (x1 - x0).max(z1 - z0).max(1e-9);
    let k = (SIZE_PX - 2.0 * MARGIN_PX) / span;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE_PX}" height="{SIZE_PX}" viewBox="0 0 {SIZE_PX} {SIZE_PX}">"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, (name, traj)) in trajectories.iter().enumerate() {
        let coords: Vec<String> = traj
            .positions()
            .iter()
            .map(|p| format!("{:.3},{:.3}", MARGIN_PX + (p.x - x0) * k, SIZE_PX - MARGIN_PX - (p.z - z0) * k))
            .collect();
        let color = COLORS[i % COLORS.len()];
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, coords.join(" "));
        let _ = writeln!(svg, r#"<text x="{MARGIN_PX}" y="{}" fill="{color}" font-family="sans-serif" font-size="14">{}</text>"#, 20.0 + 16.0 * i as f64, escape(name));
    }
    svg.push_str("</svg>\n");
    svg
}

/// `trajectory,frame,x,y,z` rows with positions in shortest round-trip form.
pub fn positions_csv(trajectories: &[(String, Trajectory)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["trajectory", "frame", "x", "y", "z"]).expect("in-memory write");
    for (name, traj) in trajectories {
        for (i, p) in traj.positions().iter().enumerate() {
            w.write_record([name.clone(), i.to_string(), p.x.to_string(), p.y.to_string(), p.z.to_string()]).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 names")
}
