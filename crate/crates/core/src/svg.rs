//! Minimal hand-written SVG charts for reports.

use std::fmt::Write;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Diverging map: +1 red, 0 white, -1 blue.
pub fn diverging_color(r: f64) -> (u8, u8, u8) {
    let r = r.clamp(-1.0, 1.0);
    let fade = |t: f64| (255.0 * (1.0 - t)).round() as u8;
    if r >= 0.0 {
        (255, fade(r), fade(r))
    } else {
        (fade(-r), fade(-r), 255)
    }
}

/// Square heatmap with one `<rect>` per matrix cell and no other rectangles.
pub fn heatmap(labels: &[String], matrix: &[Vec<f64>]) -> String {
    const CELL: usize = 28;
    const MARGIN: usize = 160;
    let f = labels.len();
    let size = MARGIN + f * CELL + 20;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" font-family="sans-serif" font-size="10">"#
    );
    for (i, row) in matrix.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let (r, g, b) = diverging_color(v);
            let _ = writeln!(
                out,
                r##"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="#{r:02x}{g:02x}{b:02x}"><title>{} / {}: {v:.3}</title></rect>"##,
                MARGIN + j * CELL,
                MARGIN + i * CELL,
                escape(&labels[i]),
                escape(&labels[j]),
            );
        }
    }
    for (i, name) in labels.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            MARGIN - 4,
            MARGIN + i * CELL + CELL / 2 + 3,
            escape(name)
        );
        let x = MARGIN + i * CELL + CELL / 2;
        let _ = writeln!(
            out,
            r#"<text x="{x}" y="{}" transform="rotate(-60 {x} {})">{}</text>"#,
            MARGIN - 4,
            MARGIN - 4,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

pub struct Series<'a> {
    pub name: &'a str,
    pub color: &'a str,
    pub values: Vec<f64>,
}

/// Side-by-side line panels, one per `(title, series)` entry.
pub fn line_panels(panels: &[(&str, Vec<Series<'_>>)]) -> String {
    const W: f64 = 420.0;
    const H: f64 = 280.0;
    const PAD: f64 = 40.0;
    let total_w = W * panels.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{H}" font-family="sans-serif" font-size="11">"#
    );
    for (p, (title, series)) in panels.iter().enumerate() {
        let x0 = p as f64 * W;
        let all = series.iter().flat_map(|s| s.values.iter().copied()).filter(|v| v.is_finite());
        let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (lo.min(0.0), lo.max(0.0) + 1.0) };
        let n = series.iter().map(|s| s.values.len()).max().unwrap_or(0).max(2);
        let px = |i: usize| x0 + PAD + (W - 2.0 * PAD) * i as f64 / (n - 1) as f64;
        let py = |v: f64| H - PAD - (H - 2.0 * PAD) * (v - lo) / (hi - lo);

        let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#, x0 + W / 2.0, escape(title));
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="black" points="{},{} {},{} {},{}"/>"#,
            x0 + PAD,
            PAD,
            x0 + PAD,
            H - PAD,
            x0 + W - PAD,
            H - PAD
        );
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{hi:.3}</text>"#, x0 + PAD - 3.0, PAD + 4.0);
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{lo:.3}</text>"#, x0 + PAD - 3.0, H - PAD);
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">epoch</text>"#, x0 + W / 2.0, H - 10.0);
        for (k, s) in series.iter().enumerate() {
            let points: Vec<String> = s
                .values
                .iter()
                .enumerate()
                .filter(|(_, v)| v.is_finite())
                .map(|(i, &v)| format!("{:.2},{:.2}", px(i), py(v)))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                s.color,
                points.join(" ")
            );
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" fill="{}">{}</text>"#,
                x0 + W - PAD - 90.0,
                PAD + 14.0 * (k as f64 + 1.0),
                s.color,
                escape(s.name)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn color_map_endpoints() {
        assert_eq!(diverging_color(1.0), (255, 0, 0));
        assert_eq!(diverging_color(0.0), (255, 255, 255));
        assert_eq!(diverging_color(-1.0), (0, 0, 255));
    }

    #[test]
    fn heatmap_cell_count_and_red_diagonal() {
        let labels: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let m = vec![vec![1.0, 0.2, -0.4], vec![0.2, 1.0, 0.0], vec![-0.4, 0.0, 1.0]];
        let svg = heatmap(&labels, &m);
        assert_eq!(svg.matches("<rect").count(), 9);
        assert_eq!(svg.matches("fill=\"#ff0000\"").count(), 3);
    }

    #[test]
    fn line_panels_render_every_series() {
        let svg = line_panels(&[(
            "accuracy",
            vec![
                Series { name: "train", color: "blue", values: vec![0.5, 0.7, 0.9] },
                Series { name: "val", color: "orange", values: vec![0.4, 0.6, 0.95] },
            ],
        )]);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("stroke-width=\"1.5\"").count(), 2);
    }
}
