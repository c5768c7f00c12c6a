//! Minimal hand-written SVG charts.

use std::collections::BTreeSet;
use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 55.0;

const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub series: String,
    pub x: f64,
    pub x_sd: f64,
    pub y: f64,
    pub y_sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatCell {
    pub alpha: f64,
    pub p_acc_min: f64,
    pub value: f64,
}

fn header(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Mean L2 against mean simulation count (log axis), with ±1 sd bars.
pub fn scatter(points: &[ScatterPoint]) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let xs_lo = points.iter().map(|p| (p.x - p.x_sd).max(p.x * 0.5)).fold(f64::INFINITY, f64::min);
    let xs_hi = points.iter().map(|p| p.x + p.x_sd).fold(0.0, f64::max);
    let (lx0, lx1) = log_range(xs_lo.max(1.0), xs_hi.max(1.0));
    let y_hi = points.iter().map(|p| p.y + p.y_sd).fold(0.0, f64::max) * 1.1;
    let y_hi = if y_hi > 0.0 { y_hi } else { 1.0 };
    let px = |x: f64| LEFT + (x.max(1.0).log10() - lx0) / (lx1 - lx0) * plot_w;
    let py = |y: f64| TOP + plot_h - (y / y_hi) * plot_h;

    let mut out = String::new();
    header(&mut out);
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for decade in (lx0 as i32)..=(lx1 as i32) {
        let x = px(10f64.powi(decade));
        let _ = writeln!(
            out,
            r##"<line x1="{x:.1}" y1="{}" x2="{x:.1}" y2="{TOP}" stroke="#ddd"/><text x="{x:.1}" y="{}" text-anchor="middle">1e{decade}</text>"##,
            TOP + plot_h,
            TOP + plot_h + 16.0
        );
    }
    for k in 0..=5 {
        let v = y_hi * k as f64 / 5.0;
        let y = py(v);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.3}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">number of simulations</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate(16,{}) rotate(-90)" text-anchor="middle">L2 distance</text>"#,
        TOP + plot_h / 2.0
    );

    let series: Vec<String> = points
        .iter()
        .map(|p| p.series.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    for p in points {
        let k = series.iter().position(|s| *s == p.series).unwrap_or(0);
        let color = PALETTE[k % PALETTE.len()];
        let (cx, cy) = (px(p.x), py(p.y));
        let _ = writeln!(
            out,
            r#"<g stroke="{color}"><line x1="{:.1}" y1="{cy:.1}" x2="{:.1}" y2="{cy:.1}"/><line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}"/></g><circle cx="{cx:.1}" cy="{cy:.1}" r="3.5" fill="{color}"/>"#,
            px((p.x - p.x_sd).max(1.0)),
            px(p.x + p.x_sd),
            py((p.y - p.y_sd).max(0.0)),
            py(p.y + p.y_sd),
        );
    }
    for (k, s) in series.iter().enumerate() {
        let y = TOP + 14.0 + 20.0 * k as f64;
        let x = WIDTH - RIGHT + 16.0;
        let _ = writeln!(
            out,
            r#"<circle cx="{x}" cy="{y}" r="4" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            PALETTE[k % PALETTE.len()],
            x + 10.0,
            y + 4.0,
            escape(s)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn log_range(lo: f64, hi: f64) -> (f64, f64) {
    let a = lo.log10().floor();
    let b = hi.log10().ceil();
    if b > a {
        (a, b)
    } else {
        (a, a + 1.0)
    }
}

fn lerp_color(t: f64) -> String {
    // Dark blue to yellow through teal.
    let stops = [(68.0, 1.0, 84.0), (33.0, 145.0, 140.0), (253.0, 231.0, 37.0)];
    let t = t.clamp(0.0, 1.0) * 2.0;
    let i = (t.floor() as usize).min(1);
    let f = t - i as f64;
    let (a, b) = (stops[i], stops[i + 1]);
    format!(
        "rgb({},{},{})",
        (a.0 + (b.0 - a.0) * f).round(),
        (a.1 + (b.1 - a.1) * f).round(),
        (a.2 + (b.2 - a.2) * f).round()
    )
}

/// Mean criterion per (α, p_acc_min) cell: α on the horizontal axis,
/// p_acc_min on the vertical one.
pub fn heatmap(cells: &[HeatCell]) -> String {
    let alphas: Vec<f64> = sorted_unique(cells.iter().map(|c| c.alpha));
    let paccs: Vec<f64> = sorted_unique(cells.iter().map(|c| c.p_acc_min));
    let lo = cells.iter().map(|c| c.value).fold(f64::INFINITY, f64::min);
    let hi = cells.iter().map(|c| c.value).fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let cw = plot_w / alphas.len() as f64;
    let ch = plot_h / paccs.len() as f64;

    let mut out = String::new();
    header(&mut out);
    for c in cells {
        let i = alphas.iter().position(|&a| a == c.alpha).unwrap_or(0);
        let j = paccs.iter().position(|&p| p == c.p_acc_min).unwrap_or(0);
        let x = LEFT + i as f64 * cw;
        let y = TOP + plot_h - (j + 1) as f64 * ch;
        let t = (c.value - lo) / span;
        let text = if t > 0.6 { "black" } else { "white" };
        let _ = writeln!(
            out,
            r#"<rect x="{x:.1}" y="{y:.1}" width="{cw:.1}" height="{ch:.1}" fill="{}" stroke="white"/><text x="{:.1}" y="{:.1}" text-anchor="middle" fill="{text}" font-size="10">{}</text>"#,
            lerp_color(t),
            x + cw / 2.0,
            y + ch / 2.0 + 4.0,
            short(c.value)
        );
    }
    for (i, a) in alphas.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{a}</text>"#,
            LEFT + (i as f64 + 0.5) * cw,
            TOP + plot_h + 16.0
        );
    }
    for (j, p) in paccs.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{p}</text>"#,
            LEFT - 6.0,
            TOP + plot_h - (j as f64 + 0.5) * ch + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">alpha</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate(16,{}) rotate(-90)" text-anchor="middle">p_acc_min</text>"#,
        TOP + plot_h / 2.0
    );
    // Colour bar.
    let bx = WIDTH - RIGHT + 30.0;
    for k in 0..50 {
        let t = 1.0 - k as f64 / 49.0;
        let _ = writeln!(
            out,
            r#"<rect x="{bx}" y="{:.1}" width="16" height="{:.1}" fill="{}"/>"#,
            TOP + k as f64 * plot_h / 50.0,
            plot_h / 50.0 + 0.5,
            lerp_color(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}">{}</text><text x="{}" y="{}">{}</text><text x="{bx}" y="{}">N sims x L2^2</text>"#,
        bx + 22.0,
        TOP + 10.0,
        short(hi),
        bx + 22.0,
        TOP + plot_h,
        short(lo),
        TOP - 10.0
    );
    out.push_str("</svg>\n");
    out
}

fn sorted_unique(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn short(x: f64) -> String {
    if x.abs() >= 1e4 || (x != 0.0 && x.abs() < 1e-2) {
        format!("{x:.2e}")
    } else {
        format!("{x:.3}")
    }
}
