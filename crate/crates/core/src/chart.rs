//! Minimal deterministic SVG bar charts for weight vectors and per-site accuracies.

use std::fmt::Write;

const PALETTE: [&str; 6] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#b07aa1"];

const WIDTH_PER_SLOT: f64 = 48.0;
const PLOT_HEIGHT: f64 = 240.0;
const MARGIN_LEFT: f64 = 56.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 110.0;
const MARGIN_RIGHT: f64 = 24.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn header(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        width / 2.0,
        escape(title)
    );
}

fn y_axis(out: &mut String, y_max: f64, plot_width: f64) {
    let base = MARGIN_TOP + PLOT_HEIGHT;
    for step in 0..=4 {
        let v = y_max * step as f64 / 4.0;
        let y = base - PLOT_HEIGHT * step as f64 / 4.0;
        let _ = writeln!(
            out,
            r##"<line x1="{MARGIN_LEFT:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#dddddd"/>"##,
            MARGIN_LEFT + plot_width
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2}</text>"#,
            MARGIN_LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN_LEFT:.1}" y1="{MARGIN_TOP:.1}" x2="{MARGIN_LEFT:.1}" y2="{base:.1}" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN_LEFT:.1}" y1="{base:.1}" x2="{:.1}" y2="{base:.1}" stroke="black"/>"#,
        MARGIN_LEFT + plot_width
    );
}

fn category_label(out: &mut String, x: f64, label: &str) {
    let y = MARGIN_TOP + PLOT_HEIGHT + 12.0;
    let _ = writeln!(
        out,
        r#"<text x="{x:.1}" y="{y:.1}" text-anchor="end" transform="rotate(-45 {x:.1} {y:.1})">{}</text>"#,
        escape(label)
    );
}

fn bar_height(value: f64, y_max: f64) -> f64 {
    if y_max > 0.0 {
        (value.clamp(0.0, y_max) / y_max) * PLOT_HEIGHT
    } else {
        0.0
    }
}

/// One bar per category on a `[0, y_max]` axis.
pub fn bar_chart(title: &str, labels: &[String], values: &[f64], y_max: f64) -> String {
    assert_eq!(labels.len(), values.len());
    let plot_width = WIDTH_PER_SLOT * labels.len().max(1) as f64;
    let width = MARGIN_LEFT + plot_width + MARGIN_RIGHT;
    let height = MARGIN_TOP + PLOT_HEIGHT + MARGIN_BOTTOM;
    let mut out = String::new();
    header(&mut out, width, height, title);
    y_axis(&mut out, y_max, plot_width);
    let base = MARGIN_TOP + PLOT_HEIGHT;
    for (i, (label, &v)) in labels.iter().zip(values).enumerate() {
        let h = bar_height(v, y_max);
        let x = MARGIN_LEFT + WIDTH_PER_SLOT * i as f64 + 8.0;
        let _ = writeln!(
            out,
            r#"<rect x="{x:.1}" y="{:.1}" width="{:.1}" height="{h:.1}" fill="{}"><title>{}: {v:.4}</title></rect>"#,
            base - h,
            WIDTH_PER_SLOT - 16.0,
            PALETTE[0],
            escape(label)
        );
        category_label(&mut out, x + (WIDTH_PER_SLOT - 16.0) / 2.0, label);
    }
    out.push_str("</svg>\n");
    out
}

/// Groups of side-by-side bars, one colour per series, with a legend.
pub fn grouped_bar_chart(
    title: &str,
    groups: &[String],
    series: &[(String, Vec<f64>)],
    y_max: f64,
) -> String {
    let per_group = series.len().max(1);
    let slot = (14.0 * per_group as f64 + 16.0).max(WIDTH_PER_SLOT);
    let plot_width = slot * groups.len().max(1) as f64;
    let legend_height = 16.0 * series.len() as f64;
    let width = MARGIN_LEFT + plot_width + MARGIN_RIGHT + 170.0;
    let height = MARGIN_TOP + (PLOT_HEIGHT + MARGIN_BOTTOM).max(legend_height + 20.0);
    let mut out = String::new();
    header(&mut out, width, height, title);
    y_axis(&mut out, y_max, plot_width);
    let base = MARGIN_TOP + PLOT_HEIGHT;
    let bar_w = (slot - 16.0) / per_group as f64;
    for (g, group) in groups.iter().enumerate() {
        let x0 = MARGIN_LEFT + slot * g as f64 + 8.0;
        for (s, (name, values)) in series.iter().enumerate() {
            let v = values.get(g).copied().unwrap_or(0.0);
            let h = bar_height(v, y_max);
            let _ = writeln!(
                out,
                r#"<rect x="{:.1}" y="{:.1}" width="{bar_w:.1}" height="{h:.1}" fill="{}"><title>{} / {}: {v:.4}</title></rect>"#,
                x0 + bar_w * s as f64,
                base - h,
                PALETTE[s % PALETTE.len()],
                escape(group),
                escape(name)
            );
        }
        category_label(&mut out, x0 + (slot - 16.0) / 2.0, group);
    }
    let lx = MARGIN_LEFT + plot_width + 16.0;
    for (s, (name, _)) in series.iter().enumerate() {
        let y = MARGIN_TOP + 16.0 * s as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{lx:.1}" y="{y:.1}" width="10" height="10" fill="{}"/>"#,
            PALETTE[s % PALETTE.len()]
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 14.0,
            y + 9.0,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}
