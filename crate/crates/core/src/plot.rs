//! Minimal SVG rendering of BER/FER curves.
//!
//! Two panels side by side (BER left, FER right), linear `Eb/N0` axis,
//! log₁₀ error-rate axis, one polyline per decoder. Zero rates are skipped.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::eval::EvalReport;

const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 320.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 45.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

type Series = Vec<(f64, f64)>;

/// Curves grouped by decoder label, in first-appearance order.
fn series(report: &EvalReport, rate: impl Fn(&crate::eval::EvalRow) -> f64) -> Vec<(String, Series)> {
    let mut order: Vec<String> = Vec::new();
    let mut map: BTreeMap<String, Series> = BTreeMap::new();
    for r in &report.rows {
        let label = if report.rows.iter().any(|o| o.code != r.code) {
            format!("{} {}", r.decoder, r.code)
        } else {
            r.decoder.clone()
        };
        if !map.contains_key(&label) {
            order.push(label.clone());
        }
        let v = rate(r);
        let pts = map.entry(label).or_default();
        if v > 0.0 && v.is_finite() {
            pts.push((r.ebn0_db, v));
        }
    }
    order
        .into_iter()
        .map(|l| {
            let mut pts = map.remove(&l).unwrap_or_default();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            (l, pts)
        })
        .collect()
}

struct Axes {
    x0: f64,
    x1: f64,
    /// Decades spanned, as integer exponents.
    d0: i32,
    d1: i32,
}

impl Axes {
    fn fit(all: &[(String, Series)]) -> Axes {
        let pts = all.iter().flat_map(|(_, s)| s.iter());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            return Axes { x0: 0.0, x1: 1.0, d0: -1, d1: 0 };
        }
        if x1 - x0 < 1e-9 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        let d0 = y0.log10().floor() as i32;
        let mut d1 = y1.log10().ceil() as i32;
        if d1 <= d0 {
            d1 = d0 + 1;
        }
        Axes { x0, x1, d0, d1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x0) / (self.x1 - self.x0) * (PANEL_W - MARGIN_L - MARGIN_R)
    }

    fn py(&self, y: f64) -> f64 {
        let t = (y.log10() - self.d0 as f64) / (self.d1 - self.d0) as f64;
        PANEL_H - MARGIN_B - t * (PANEL_H - MARGIN_T - MARGIN_B)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn panel(out: &mut String, title: &str, curves: &[(String, Series)], offset: f64) {
    let ax = Axes::fit(curves);
    let _ = writeln!(out, r#"<g transform="translate({offset},0)">"#);
    let (left, right) = (MARGIN_L, PANEL_W - MARGIN_R);
    let (top, bottom) = (MARGIN_T, PANEL_H - MARGIN_B);
    let _ = writeln!(
        out,
        r##"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        right - left,
        bottom - top
    );
    for d in ax.d0..=ax.d1 {
        let y = ax.py(10f64.powi(d));
        let _ = writeln!(
            out,
            r##"<line x1="{left}" y1="{y:.2}" x2="{right}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">1e{d}</text>"##,
            left - 4.0,
            y + 4.0
        );
    }
    let ticks = 5;
    for i in 0..=ticks {
        let xv = ax.x0 + (ax.x1 - ax.x0) * i as f64 / ticks as f64;
        let x = ax.px(xv);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{bottom}" x2="{x:.2}" y2="{:.2}" stroke="#444"/><text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"##,
            bottom + 4.0,
            bottom + 16.0,
            (xv * 100.0).round() / 100.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">Eb/N0 (dB)</text>"#,
        (left + right) / 2.0,
        PANEL_H - 10.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="18" font-size="13" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        escape(title)
    );
    for (i, (label, pts)) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        if !pts.is_empty() {
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", ax.px(x), ax.py(y))).collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{}"><title>{}</title></polyline>"#,
                path.join(" "),
                escape(label)
            );
            for &(x, y) in pts {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                    ax.px(x),
                    ax.py(y)
                );
            }
        }
        let ly = top + 14.0 + 15.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            right - 110.0,
            right - 90.0,
            right - 85.0,
            ly + 4.0,
            escape(label)
        );
    }
    out.push_str("</g>\n");
}

/// Renders BER and FER panels for every decoder in `report`.
pub fn render_svg(report: &EvalReport) -> String {
    let ber = series(report, |r| r.ber());
    let fer = series(report, |r| r.fer());
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{PANEL_H}" viewBox="0 0 {} {PANEL_H}" font-family="sans-serif">"#,
        2.0 * PANEL_W,
        2.0 * PANEL_W
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    panel(&mut out, "BER", &ber, 0.0);
    panel(&mut out, "FER", &fer, PANEL_W);
    out.push_str("</svg>\n");
    out
}
