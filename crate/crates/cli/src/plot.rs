//! Hand-written SVG for one day: fixed vs shiftable, reconstruction vs data,
//! then one panel per appliance class.

use std::fmt::Write;

use disagg_core::model::EnergyDataset;
use disagg_core::{Model, Result};
use ndarray::{s, Array1};

const WIDTH: f64 = 960.0;
const PANEL_HEIGHT: f64 = 170.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 26.0;
const MARGIN_BOTTOM: f64 = 24.0;

struct Series<'a> {
    label: &'a str,
    color: &'a str,
    values: Array1<f64>,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn panel(out: &mut String, index: usize, title: &str, series: &[Series<'_>]) {
    let top = index as f64 * PANEL_HEIGHT;
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = PANEL_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let ymax = series
        .iter()
        .flat_map(|s| s.values.iter().copied())
        .fold(0.0_f64, f64::max);
    let ymax = if ymax > 0.0 { ymax * 1.05 } else { 1.0 };
    let d = series.first().map_or(1, |s| s.values.len()).max(2);

    let _ = writeln!(out, r#"<g class="panel" transform="translate(0,{top})">"#);
    let _ = writeln!(out, r#"<text x="{MARGIN_LEFT}" y="16" font-size="13">{}</text>"#, escape(title));
    let _ = writeln!(
        out,
        r##"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#888"/>"##
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{ymax:.3}</text>"#,
        MARGIN_LEFT - 4.0,
        MARGIN_TOP + 8.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="10" text-anchor="end">0</text>"#,
        MARGIN_LEFT - 4.0,
        MARGIN_TOP + plot_h
    );
    // Hour ticks every six hours.
    for hour in (0..=24).step_by(6) {
        let x = MARGIN_LEFT + plot_w * hour as f64 / 24.0;
        let _ = writeln!(
            out,
            r#"<text x="{x:.1}" y="{}" font-size="10" text-anchor="middle">{hour:02}:00</text>"#,
            MARGIN_TOP + plot_h + 14.0
        );
    }
    for (k, s) in series.iter().enumerate() {
        let mut points = String::new();
        for (i, v) in s.values.iter().enumerate() {
            let x = MARGIN_LEFT + plot_w * i as f64 / (d - 1) as f64;
            let y = MARGIN_TOP + plot_h * (1.0 - v / ymax);
            let _ = write!(points, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1" points="{}"><title>{}</title></polyline>"#,
            s.color,
            points.trim_end(),
            escape(s.label)
        );
        let lx = WIDTH - MARGIN_RIGHT - 150.0;
        let ly = 12.0 + 12.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<text x="{lx}" y="{ly}" font-size="10" fill="{}">{}</text>"#,
            s.color,
            escape(s.label)
        );
    }
    out.push_str("</g>\n");
}

/// Renders day `day` of a fitted model. The caller checks the bounds.
pub fn render_day(model: &Model, dataset: &EnergyDataset<f64>, day: usize) -> Result<String> {
    let fixed = model.fixed_reconstruction().slice(s![.., day]).to_owned();
    let shiftable = model.shiftable_reconstruction()?.slice(s![.., day]).to_owned();
    let aggregate = &fixed + &shiftable;
    let raw = dataset.values().slice(s![.., day]).to_owned();
    let label = &dataset.day_labels()[day];

    let panels = 2 + model.shiftable.len();
    let height = PANEL_HEIGHT * panels as f64;
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    panel(
        &mut out,
        0,
        &format!("{label}: fixed and shiftable loads (kWh)"),
        &[
            Series { label: "fixed", color: "#1f77b4", values: fixed },
            Series { label: "shiftable total", color: "#d62728", values: shiftable },
        ],
    );
    panel(
        &mut out,
        1,
        &format!("{label}: aggregate (kWh)"),
        &[
            Series { label: "measured", color: "#7f7f7f", values: raw },
            Series { label: "reconstruction", color: "#2ca02c", values: aggregate },
        ],
    );
    for (j, class) in model.shiftable.iter().enumerate() {
        panel(
            &mut out,
            2 + j,
            &format!("{} (peak {})", class.name, class.peak),
            &[Series { label: &class.name, color: "#9467bd", values: class.contribution(day) }],
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}
