//! Minimal self-contained SVG line charts.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

#[derive(Debug, Clone)]
pub enum Series<'a> {
    Line {
        label: &'a str,
        y: &'a [f64],
        color: &'a str,
        dashed: bool,
    },
    Band {
        label: &'a str,
        lo: &'a [f64],
        hi: &'a [f64],
        color: &'a str,
    },
}

impl<'a> Series<'a> {
    pub fn line(label: &'a str, y: &'a [f64], color: &'a str, dashed: bool) -> Self {
        Series::Line {
            label,
            y,
            color,
            dashed,
        }
    }

    pub fn band(label: &'a str, lo: &'a [f64], hi: &'a [f64], color: &'a str) -> Self {
        Series::Band { label, lo, hi, color }
    }

    fn values(&self) -> Box<dyn Iterator<Item = f64> + '_> {
        match self {
            Series::Line { y, .. } => Box::new(y.iter().copied()),
            Series::Band { lo, hi, .. } => Box::new(lo.iter().chain(hi.iter()).copied()),
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Range padded by 5% with a fallback for flat data.
fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(hi > lo) {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Plot of several series over common abscissae.
pub fn figure_svg(title: &str, x: &[f64], series: &[Series<'_>]) -> String {
    let finite = |v: &f64| v.is_finite();
    let (x0, x1) = padded(
        x.iter().copied().filter(finite).fold(f64::INFINITY, f64::min),
        x.iter().copied().filter(finite).fold(f64::NEG_INFINITY, f64::max),
    );
    let ys: Vec<f64> = series.iter().flat_map(|s| s.values()).filter(finite).collect();
    let (y0, y1) = padded(
        ys.iter().copied().fold(f64::INFINITY, f64::min),
        ys.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |v: f64| LEFT + (v - x0) / (x1 - x0) * plot_w;
    let py = |v: f64| TOP + (y1 - v) / (y1 - y0) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>"##
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = x0 + t * (x1 - x0);
        let yv = y0 + t * (y1 - y0);
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" text-anchor="middle">{xv:.2}</text><line x1="{:.2}" x2="{:.2}" y1="{:.2}" y2="{:.2}" stroke="#444"/>"##,
            px(xv),
            TOP + plot_h + 18.0,
            px(xv),
            px(xv),
            TOP + plot_h,
            TOP + plot_h + 5.0
        );
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.3}</text><line x1="{:.2}" x2="{LEFT}" y1="{:.2}" y2="{:.2}" stroke="#444"/>"##,
            LEFT - 8.0,
            py(yv) + 4.0,
            LEFT - 5.0,
            py(yv),
            py(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">z</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );

    for (k, series) in series.iter().enumerate() {
        let ly = TOP + 10.0 + 20.0 * k as f64;
        let lx = WIDTH - RIGHT + 12.0;
        match series {
            Series::Band { label, lo, hi, color } => {
                let mut pts: Vec<String> = x
                    .iter()
                    .zip(hi.iter())
                    .map(|(a, b)| format!("{:.2},{:.2}", px(*a), py(*b)))
                    .collect();
                pts.extend(
                    x.iter()
                        .zip(lo.iter())
                        .rev()
                        .map(|(a, b)| format!("{:.2},{:.2}", px(*a), py(*b))),
                );
                let _ = writeln!(
                    s,
                    r#"<polygon points="{}" fill="{color}" fill-opacity="0.5" stroke="none"/>"#,
                    pts.join(" ")
                );
                let _ = writeln!(
                    s,
                    r#"<rect x="{lx}" y="{:.2}" width="18" height="10" fill="{color}" fill-opacity="0.5"/><text x="{}" y="{:.2}">{}</text>"#,
                    ly - 8.0,
                    lx + 24.0,
                    ly + 1.0,
                    escape(label)
                );
            }
            Series::Line {
                label,
                y,
                color,
                dashed,
            } => {
                let pts: Vec<String> = x
                    .iter()
                    .zip(y.iter())
                    .map(|(a, b)| format!("{:.2},{:.2}", px(*a), py(*b)))
                    .collect();
                let dash = if *dashed { r#" stroke-dasharray="6 4""# } else { "" };
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"{dash}/>"#,
                    pts.join(" ")
                );
                let _ = writeln!(
                    s,
                    r#"<line x1="{lx}" x2="{}" y1="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.8"{dash}/><text x="{}" y="{:.2}">{}</text>"#,
                    lx + 18.0,
                    ly - 3.0,
                    ly - 3.0,
                    lx + 24.0,
                    ly + 1.0,
                    escape(label)
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}
