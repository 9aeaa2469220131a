//! Minimal, dependency-free SVG bar charts for spectra and error profiles.

use std::fmt::Write;
use std::path::Path;

use anyhow::Result;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_B: f64 = 50.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_R: f64 = 20.0;

struct Canvas {
    body: String,
}

impl Canvas {
    fn new() -> Self {
        let mut body = String::new();
        let _ = write!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}"><rect width="100%" height="100%" fill="white"/>"#
        );
        Self { body }
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, color: &str) {
        let _ = write!(
            self.body,
            r#"<rect x="{x:.1}" y="{y:.1}" width="{w:.1}" height="{h:.1}" fill="{color}"/>"#
        );
    }

    fn text(&mut self, x: f64, y: f64, size: f64, anchor: &str, s: &str) {
        let _ = write!(
            self.body,
            r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="{size}" text-anchor="{anchor}">{s}</text>"#
        );
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64) {
        let _ = write!(
            self.body,
            r#"<line x1="{x1:.1}" y1="{y1:.1}" x2="{x2:.1}" y2="{y2:.1}" stroke="black" stroke-width="1"/>"#
        );
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>");
        self.body
    }
}

/// Grouped log-scale bars per harmonic order; one group per series.
/// Values at or below `floor` are not drawn.
pub fn bar_chart_log(
    path: &Path,
    title: &str,
    y_label: &str,
    orders: &[u32],
    series: &[(&str, Vec<f64>)],
    floor: f64,
) -> Result<()> {
    let mut c = Canvas::new();
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;

    let max_v = series
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .fold(floor, f64::max);
    let top = max_v.log10().ceil();
    let bottom = floor.log10();
    let decades = (top - bottom).max(1.0);

    let y_of = |v: f64| {
        let clamped = v.max(floor);
        MARGIN_T + plot_h * (1.0 - (clamped.log10() - bottom) / decades)
    };

    // Axes and decade grid.
    c.line(MARGIN_L, MARGIN_T, MARGIN_L, MARGIN_T + plot_h);
    c.line(MARGIN_L, MARGIN_T + plot_h, MARGIN_L + plot_w, MARGIN_T + plot_h);
    let mut d = bottom;
    while d <= top + 0.01 {
        let y = y_of(10f64.powf(d));
        c.line(MARGIN_L - 4.0, y, MARGIN_L, y);
        c.text(MARGIN_L - 8.0, y + 4.0, 11.0, "end", &format!("1e{}", d as i32));
        d += 1.0;
    }
    c.text(14.0, MARGIN_T + plot_h / 2.0, 12.0, "middle", y_label);
    c.text(WIDTH / 2.0, 18.0, 14.0, "middle", title);

    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let group_w = plot_w / orders.len() as f64;
    let bar_w = (group_w * 0.8) / series.len() as f64;

    for (gi, &h) in orders.iter().enumerate() {
        let x0 = MARGIN_L + gi as f64 * group_w + group_w * 0.1;
        for (si, (_, vals)) in series.iter().enumerate() {
            let v = vals[gi];
            if v > floor {
                let y = y_of(v);
                c.rect(
                    x0 + si as f64 * bar_w,
                    y,
                    bar_w.max(1.0),
                    MARGIN_T + plot_h - y,
                    colors[si % colors.len()],
                );
            }
        }
        if h % 2 == 1 || orders.len() <= 13 {
            c.text(
                x0 + group_w * 0.4,
                MARGIN_T + plot_h + 16.0,
                10.0,
                "middle",
                &h.to_string(),
            );
        }
    }
    c.text(
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 12.0,
        12.0,
        "middle",
        "harmonic order",
    );

    // Legend.
    for (si, (name, _)) in series.iter().enumerate() {
        let x = MARGIN_L + plot_w - 140.0;
        let y = MARGIN_T + 14.0 * si as f64 + 6.0;
        c.rect(x, y - 8.0, 10.0, 10.0, colors[si % colors.len()]);
        c.text(x + 16.0, y, 11.0, "start", name);
    }

    std::fs::write(path, c.finish())?;
    Ok(())
}
