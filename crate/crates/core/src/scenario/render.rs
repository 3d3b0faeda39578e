use std::fmt::Write;

use super::{FrameArtifacts, Scenario};
use crate::raster::GroundRaster;

const PX_PER_M: f64 = 4.0;
const ORU_SHADES: [&str; 5] = ["#fde0c5", "#facba6", "#f8b58b", "#f59e72", "#f2855d"];
const EGO_SHADES: [&str; 5] = ["#d0e4f5", "#a9cbe9", "#7fb0dc", "#5593cc", "#2c73b8"];
const HIGHLIGHT: &str = "#2ca25f";

struct Canvas {
    x0: f64,
    y_top: f64,
    out: String,
}

impl Canvas {
    fn mask(&mut self, m: &GroundRaster, fill: &str, layer: &str) {
        let spec = m.spec();
        let d = spec.resolution;
        let _ = writeln!(self.out, r#"<g id="{layer}" fill="{fill}" stroke="none">"#);
        for run in m.row_runs() {
            let x = spec.origin_x + run.c0 as f64 * d - self.x0;
            let y = self.y_top - (spec.origin_y + (run.row + 1) as f64 * d);
            let w = (run.c1 - run.c0) as f64 * d;
            let _ = writeln!(
                self.out,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{d:.2}"/>"#
            );
        }
        self.out.push_str("</g>\n");
    }

    fn point(&self, p: [f64; 2]) -> (f64, f64) {
        (p[0] - self.x0, self.y_top - p[1])
    }
}

/// Future-step indices drawn as layers, farthest first so nearer steps sit
/// on top.
fn layer_steps(last: usize) -> Vec<usize> {
    let mut ks: Vec<usize> = (0..=4).map(|i| last * (4 - i) / 4).collect();
    ks.dedup();
    ks
}

/// SVG of one analyzed frame: gray prohibited ground, white permitted
/// ground, ORU occupied areas in orange and ego drivable areas in blue
/// (lighter = farther in the future), and the drivable area at the horizon
/// in green when there is one.
pub fn render_frame(scenario: &Scenario, art: &FrameArtifacts) -> String {
    let spec = art.spec;
    let ext = spec.extent();
    let (w, h) = (ext.max[0] - ext.min[0], ext.max[1] - ext.min[1]);
    let mut c = Canvas {
        x0: ext.min[0],
        y_top: ext.max[1],
        out: String::new(),
    };
    let _ = writeln!(
        c.out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {w:.2} {h:.2}">"#,
        w * PX_PER_M,
        h * PX_PER_M
    );
    let _ = writeln!(c.out, "<title>{} t={:.2}s</title>", scenario.name, art.t);
    let _ = writeln!(
        c.out,
        r##"<rect id="prohibited" x="0" y="0" width="{w:.2}" height="{h:.2}" fill="#9e9e9e"/>"##
    );
    c.mask(&art.layers.permitted, "#ffffff", "permitted");

    for lane in &scenario.roadgraph.lanes {
        let pts: Vec<String> = lane
            .centerline
            .iter()
            .map(|p| {
                let (x, y) = c.point([p.x, p.y]);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            c.out,
            r##"<polyline points="{}" fill="none" stroke="#cccccc" stroke-width="0.15" stroke-dasharray="1,1"/>"##,
            pts.join(" ")
        );
    }

    let last = art.layers.drivable.len() - 1;
    let steps = layer_steps(last);
    for (i, &k) in steps.iter().enumerate() {
        c.mask(&art.oru_union(k), ORU_SHADES[i], &format!("oru_tau{k}"));
    }
    for (i, &k) in steps.iter().enumerate() {
        let m = &art.layers.drivable[k].occupied_mask;
        c.mask(m, EGO_SHADES[i], &format!("ego_tau{k}"));
    }
    let at_h = art.drivable_at_horizon();
    if !at_h.is_empty() {
        c.mask(at_h, HIGHLIGHT, "drivable_at_horizon");
    }

    let status = if art.result.frame_violation {
        format!(
            "frame violation, generalized TTC {:.1} s",
            art.result.generalized_ttc
        )
    } else {
        "drivable area at horizon".to_string()
    };
    let legend = [
        ("#ffffff", "permitted"),
        ("#9e9e9e", "prohibited"),
        (ORU_SHADES[4], "ORU occupied (light = later)"),
        (EGO_SHADES[4], "ego drivable (light = later)"),
        (HIGHLIGHT, status.as_str()),
    ];
    c.out
        .push_str(r#"<g id="legend" font-family="sans-serif" font-size="2">"#);
    c.out.push('\n');
    for (i, (fill, label)) in legend.iter().enumerate() {
        let y = 1.0 + i as f64 * 2.6;
        let _ = writeln!(
            c.out,
            r##"<rect x="1" y="{y:.2}" width="2" height="2" fill="{fill}" stroke="#000000" stroke-width="0.1"/><text x="3.6" y="{:.2}">{label}</text>"##,
            y + 1.7
        );
    }
    c.out.push_str("</g>\n</svg>\n");
    c.out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_steps_cover_range() {
        assert_eq!(layer_steps(40), vec![40, 30, 20, 10, 0]);
        assert_eq!(layer_steps(2), vec![2, 1, 0]);
    }
}
