//! Plain SVG 1.1 plot of eigenvalues against index.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
/// Floor for the logarithmic axis.
const LOG_FLOOR: f64 = 1e-16;

pub struct PlotSpec<'a> {
    pub lambdas: &'a [f64],
    pub d: f64,
    /// Shaded index window `[lo, hi]`.
    pub window: Option<(f64, f64)>,
    pub log_scale: bool,
    pub title: String,
}

/// Indices shown: up to `2D + 16` or the whole spectrum, whichever is shorter.
fn shown(spec: &PlotSpec) -> usize {
    spec.lambdas.len().min((2.0 * spec.d).ceil() as usize + 16).max(1)
}

pub fn plunge_plot(spec: &PlotSpec) -> String {
    let n = shown(spec);
    let x_of = |k: f64| MARGIN + (k - 1.0) / (n.max(2) - 1) as f64 * (WIDTH - 2.0 * MARGIN);
    let (y_lo, y_hi) = if spec.log_scale {
        (LOG_FLOOR.log10(), 0.0)
    } else {
        (0.0, 1.0)
    };
    let y_of = |lambda: f64| {
        let v = if spec.log_scale {
            lambda.max(LOG_FLOOR).log10()
        } else {
            lambda
        };
        let t = ((v - y_lo) / (y_hi - y_lo)).clamp(-0.05, 1.05);
        HEIGHT - MARGIN - t * (HEIGHT - 2.0 * MARGIN)
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    if let Some((lo, hi)) = spec.window {
        let a = x_of(lo.max(1.0));
        let b = x_of(hi.min(n as f64));
        if b > a {
            let _ = writeln!(
                s,
                r##"<rect x="{a:.2}" y="{MARGIN}" width="{:.2}" height="{:.2}" fill="#f4c95d" fill-opacity="0.35"/>"##,
                b - a,
                HEIGHT - 2.0 * MARGIN
            );
        }
    }
    // axes
    let _ = writeln!(
        s,
        r#"<path d="M{MARGIN} {MARGIN} V{y0} H{x1}" stroke="black" fill="none"/>"#,
        y0 = HEIGHT - MARGIN,
        x1 = WIDTH - MARGIN
    );
    let half = y_of(0.5);
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{half:.2}" x2="{x1}" y2="{half:.2}" stroke="gray" stroke-dasharray="4 4"/>"#,
        x1 = WIDTH - MARGIN
    );
    let xd = x_of(spec.d);
    let _ = writeln!(
        s,
        r#"<line x1="{xd:.2}" y1="{MARGIN}" x2="{xd:.2}" y2="{y0}" stroke="gray" stroke-dasharray="2 3"/>"#,
        y0 = HEIGHT - MARGIN
    );
    let mut path = String::new();
    for (i, &l) in spec.lambdas.iter().take(n).enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        let _ = write!(path, "{cmd}{:.2} {:.2} ", x_of((i + 1) as f64), y_of(l));
    }
    let _ = writeln!(s, r##"<path d="{}" stroke="#1f5fa8" stroke-width="1.5" fill="none"/>"##, path.trim_end());
    for (i, &l) in spec.lambdas.iter().take(n).enumerate() {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="2.2" fill="#1f5fa8"/>"##,
            x_of((i + 1) as f64),
            y_of(l)
        );
    }
    let ticks: Vec<(f64, String)> = if spec.log_scale {
        (0..=4).map(|i| (10f64.powi(-4 * i), format!("1e-{}", 4 * i))).collect()
    } else {
        (0..=4).map(|i| (i as f64 / 4.0, format!("{}", i as f64 / 4.0))).collect()
    };
    for (v, label) in ticks {
        let y = y_of(v);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end" font-family="sans-serif">{label}</text>"#,
            MARGIN - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle" font-family="sans-serif">index k (1 to {n})</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="28" font-size="14" text-anchor="middle" font-family="sans-serif">{}</text>"#,
        WIDTH / 2.0,
        escape(&spec.title)
    );
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
