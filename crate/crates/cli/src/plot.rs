//! Static SVG curves: one panel per atom number, one polyline per criterion.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use crate::config::CriterionSpec;
use crate::error::{CliError, Result};
use crate::output::write_atomic;
use crate::sweep::SweepRow;

const PANEL_W: f64 = 480.0;
const PANEL_H: f64 = 320.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 45.0;
const LEGEND_H: f64 = 20.0;

const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

type Series = BTreeMap<CriterionSpec, Vec<(f64, f64)>>;

pub fn render_svg(rows: &[SweepRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(CliError::NoData);
    }
    let mut panels: BTreeMap<usize, Series> = BTreeMap::new();
    for r in rows {
        panels
            .entry(r.n_atoms)
            .or_default()
            .entry(CriterionSpec::new(r.criterion, r.order))
            .or_default()
            .push((r.mu, r.value));
    }
    let specs: Vec<CriterionSpec> = {
        let mut v: Vec<_> = panels.values().flat_map(|s| s.keys().copied()).collect();
        v.sort();
        v.dedup();
        v
    };
    let color = |spec: &CriterionSpec| {
        let i = specs.iter().position(|s| s == spec).unwrap_or(0);
        COLORS[i % COLORS.len()]
    };

    let width = PANEL_W * panels.len() as f64;
    let height = PANEL_H + LEGEND_H;
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();

    for (p, (n, series)) in panels.iter().enumerate() {
        let x0 = PANEL_W * p as f64;
        draw_panel(&mut svg, x0, *n, series, &color);
    }

    let mut lx = 10.0;
    let ly = PANEL_H + LEGEND_H / 2.0;
    for spec in &specs {
        writeln!(
            svg,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{spec}</text>"#,
            lx + 20.0,
            color(spec),
            lx + 24.0,
            ly + 4.0
        )
        .unwrap();
        lx += 100.0;
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn draw_panel(svg: &mut String, x0: f64, n: usize, series: &Series, color: &dyn Fn(&CriterionSpec) -> &'static str) {
    let pts = series.values().flatten();
    let (mut mu_lo, mut mu_hi, mut v_lo, mut v_hi) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, 0.0f64);
    for &(mu, v) in pts {
        mu_lo = mu_lo.min(mu);
        mu_hi = mu_hi.max(mu);
        v_lo = v_lo.min(v);
        v_hi = v_hi.max(v);
    }
    if mu_hi <= mu_lo {
        mu_hi = mu_lo + 1.0;
    }
    if v_hi <= v_lo {
        v_hi = v_lo + 1.0;
    }
    let plot_w = PANEL_W - MARGIN_L - MARGIN_R;
    let plot_h = PANEL_H - MARGIN_T - MARGIN_B;
    let sx = |mu: f64| x0 + MARGIN_L + (mu - mu_lo) / (mu_hi - mu_lo) * plot_w;
    let sy = |v: f64| MARGIN_T + (v_hi - v) / (v_hi - v_lo) * plot_h;

    writeln!(
        svg,
        r#"<rect x="{:.1}" y="{MARGIN_T:.1}" width="{plot_w:.1}" height="{plot_h:.1}" fill="none" stroke="black"/>"#,
        x0 + MARGIN_L
    )
    .unwrap();
    writeln!(
        svg,
        r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="gray" stroke-dasharray="4 3"/>"#,
        sx(mu_lo),
        sy(0.0),
        sx(mu_hi),
        sy(0.0)
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">N = {n}</text>"#,
        x0 + MARGIN_L + plot_w / 2.0,
        MARGIN_T - 10.0
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">μ</text>"#,
        x0 + MARGIN_L + plot_w / 2.0,
        PANEL_H - 8.0
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">δ</text>"#,
        x0 + 18.0,
        MARGIN_T + plot_h / 2.0,
        x0 + 18.0,
        MARGIN_T + plot_h / 2.0
    )
    .unwrap();
    for (v, anchor) in [(mu_lo, "start"), (mu_hi, "end")] {
        writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="{anchor}">{v:.3}</text>"#,
            sx(v),
            MARGIN_T + plot_h + 15.0
        )
        .unwrap();
    }
    for v in [v_lo, v_hi] {
        writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.3}</text>"#,
            x0 + MARGIN_L - 4.0,
            sy(v) + 4.0
        )
        .unwrap();
    }
    for (spec, points) in series {
        let mut pts = points.clone();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let coords: Vec<String> = pts
            .iter()
            .map(|&(mu, v)| format!("{:.2},{:.2}", sx(mu), sy(v)))
            .collect();
        writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            color(spec),
            coords.join(" ")
        )
        .unwrap();
    }
}

pub fn render_plot(rows: &[SweepRow], path: &Path) -> Result<()> {
    let svg = render_svg(rows)?;
    write_atomic(path, &svg)
}
