//! Deterministic SVG rendering of trajectory and sweep CSVs.

use std::fmt::Write as _;

use crate::error::{CliError, Result};

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];
const MAX_LEGEND: usize = 12;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotOptions {
    pub title: Option<String>,
    /// Values above this are drawn at the top edge.
    pub y_max: Option<f64>,
}

fn malformed(msg: impl Into<String>) -> CliError {
    CliError::MalformedCsv(msg.into())
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn parse_table(csv: &str) -> Result<Table> {
    let mut lines = csv.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| malformed("empty input"))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let row: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
        if row.len() != header.len() {
            return Err(malformed(format!("row {} has {} fields, header has {}", k + 1, row.len(), header.len())));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(malformed("no data rows"));
    }
    Ok(Table { header, rows })
}

fn number(s: &str, row: usize) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| malformed(format!("row {row}: `{s}` is not a number")))?;
    if v.is_nan() {
        return Err(malformed(format!("row {row}: NaN value")));
    }
    Ok(v)
}

/// Compact, stable tick label.
fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn svg_open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title));
}

/// Whichever of the two CSV schemas the header announces.
pub fn render_csv(csv: &str, opts: &PlotOptions) -> Result<String> {
    match csv.lines().next().map(|l| l.split(',').next().unwrap_or("").trim()) {
        Some("time") => trajectory_svg(csv, opts),
        Some("graph") => sweep_svg(csv, opts),
        _ => Err(malformed("unrecognised header (expected `time,…` or `graph,…`)")),
    }
}

/// Time against every `u_*` column. A single row yields markers only.
pub fn trajectory_svg(csv: &str, opts: &PlotOptions) -> Result<String> {
    let table = parse_table(csv)?;
    if table.header[0] != "time" {
        return Err(malformed("first column must be `time`"));
    }
    let cols: Vec<usize> = (1..table.header.len()).filter(|&c| table.header[c].starts_with("u_")).collect();
    if cols.is_empty() {
        return Err(malformed("no `u_*` columns"));
    }
    let mut times = Vec::with_capacity(table.rows.len());
    let mut series = vec![Vec::with_capacity(table.rows.len()); cols.len()];
    for (k, row) in table.rows.iter().enumerate() {
        times.push(number(&row[0], k + 1)?);
        for (s, &c) in cols.iter().enumerate() {
            series[s].push(number(&row[c], k + 1)?);
        }
    }
    if times.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
        return Err(malformed("time column is not strictly increasing"));
    }

    let (mut t0, mut t1) = (times[0], *times.last().unwrap());
    if t1 <= t0 {
        t0 -= 0.5;
        t1 += 0.5;
    }
    let finite = series.iter().flatten().copied().filter(|v| v.is_finite());
    let (mut y0, mut y1) = finite.fold((0.0f64, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if let Some(cap) = opts.y_max {
        y1 = y1.min(cap);
    }
    if !y1.is_finite() || y1 <= y0 {
        y1 = y0 + 1.0;
    }
    if y0 < 0.0 && y0 == y1 {
        y0 -= 1.0;
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |t: f64| LEFT + (t - t0) / (t1 - t0) * pw;
    let py = |v: f64| {
        let v = if v.is_finite() { v.clamp(y0, y1) } else if v > 0.0 { y1 } else { y0 };
        TOP + ph - (v - y0) / (y1 - y0) * ph
    };

    let mut out = String::new();
    svg_open(&mut out, opts.title.as_deref().unwrap_or("trajectory"));
    axes(&mut out, (t0, t1), (y0, y1), "t", "u(t, x)");
    let single = times.len() == 1;
    for (s, values) in series.iter().enumerate() {
        let color = PALETTE[s % PALETTE.len()];
        if single {
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{color}"/>"#, px(times[0]), py(values[0]));
        } else {
            let mut pts = String::new();
            for (t, v) in times.iter().zip(values) {
                let _ = write!(pts, "{:.2},{:.2} ", px(*t), py(*v));
            }
            let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.trim_end());
        }
    }
    if cols.len() <= MAX_LEGEND {
        for (s, &c) in cols.iter().enumerate() {
            let y = TOP + 10.0 + 18.0 * s as f64;
            let x = WIDTH - RIGHT + 20.0;
            let color = PALETTE[s % PALETTE.len()];
            let _ = writeln!(out, r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="3"/>"#, x + 20.0);
            let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, x + 26.0, y + 4.0, escape(&table.header[c]));
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn axes(out: &mut String, (x0, x1): (f64, f64), (y0, y1): (f64, f64), xl: &str, yl: &str) {
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let bottom = TOP + ph;
    let _ = writeln!(out, r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##);
    for k in 0..=5 {
        let f = k as f64 / 5.0;
        let x = LEFT + f * pw;
        let y = bottom - f * ph;
        let _ = writeln!(out, r##"<line x1="{x:.2}" y1="{bottom}" x2="{x:.2}" y2="{:.2}" stroke="#333"/>"##, bottom + 5.0);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, bottom + 20.0, fmt_tick(x0 + f * (x1 - x0)));
        let _ = writeln!(out, r##"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#333"/>"##, LEFT - 5.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, fmt_tick(y0 + f * (y1 - y0)));
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 15.0, escape(xl));
    let _ = writeln!(
        out,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(yl)
    );
}

/// Heat table: one row per (graph, α), one column per scale, colored by verdict.
pub fn sweep_svg(csv: &str, opts: &PlotOptions) -> Result<String> {
    let table = parse_table(csv)?;
    let expected = ["graph", "m_fit", "alpha", "m_alpha", "scale", "verdict", "tb_or_final_sup"];
    if table.header != expected {
        return Err(malformed(format!("sweep header must be `{}`", expected.join(","))));
    }
    let mut row_keys: Vec<(String, String, String)> = Vec::new();
    let mut col_keys: Vec<String> = Vec::new();
    let mut cells = Vec::new();
    for (k, r) in table.rows.iter().enumerate() {
        for c in [1, 2, 3, 4, 6] {
            number(&r[c], k + 1)?;
        }
        if !["blow_up", "decay_on_horizon", "undetermined"].contains(&r[5].as_str()) {
            return Err(malformed(format!("row {}: unknown verdict `{}`", k + 1, r[5])));
        }
        let rk = (r[0].clone(), r[2].clone(), r[3].clone());
        let ri = row_keys.iter().position(|x| *x == rk).unwrap_or_else(|| {
            row_keys.push(rk);
            row_keys.len() - 1
        });
        let ci = col_keys.iter().position(|x| *x == r[4]).unwrap_or_else(|| {
            col_keys.push(r[4].clone());
            col_keys.len() - 1
        });
        cells.push((ri, ci, r[5].clone(), number(&r[6], k + 1)?));
    }
    let label_w = 230.0;
    let cell_w = ((WIDTH - label_w - 20.0) / col_keys.len() as f64).max(90.0);
    let cell_h = 34.0;
    let width = label_w + 20.0 + cell_w * col_keys.len() as f64;
    let height = TOP + 30.0 + cell_h * row_keys.len() as f64 + 50.0;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        width / 2.0,
        escape(opts.title.as_deref().unwrap_or("sweep"))
    );
    let top = TOP + 30.0;
    for (ci, scale) in col_keys.iter().enumerate() {
        let x = label_w + cell_w * (ci as f64 + 0.5);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">scale {}</text>"#, top - 8.0, escape(scale));
    }
    for (ri, (g, a, ma)) in row_keys.iter().enumerate() {
        let y = top + cell_h * (ri as f64 + 0.5) + 4.0;
        let _ = writeln!(out, r#"<text x="10" y="{y:.2}">{} α={} mα={}</text>"#, escape(g), escape(a), escape(ma));
    }
    for (ri, ci, verdict, value) in &cells {
        let x = label_w + cell_w * *ci as f64;
        let y = top + cell_h * *ri as f64;
        let (fill, tag) = match verdict.as_str() {
            "blow_up" => ("#f4a6a6", "blow-up T_b="),
            "decay_on_horizon" => ("#a8dba8", "decay sup="),
            _ => ("#d0d0d0", "undet. sup="),
        };
        let _ = writeln!(
            out,
            r##"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{cell_h}" fill="{fill}" stroke="#555"/>"##,
            cell_w
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">{tag}{}</text>"#,
            x + cell_w / 2.0,
            y + cell_h / 2.0 + 4.0,
            fmt_tick(*value)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}
