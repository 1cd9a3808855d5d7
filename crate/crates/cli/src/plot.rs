//! Log-scale line plots of CSV columns against `t`, written as plain SVG.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub label: String,
    pub t: Vec<f64>,
    pub v: Vec<f64>,
}

/// Reads the `t` column and the selected columns of one CSV file. With no
/// selection, `F2` and the `G_p` columns are used when present and every
/// other column otherwise.
pub fn read_curves(path: &Path, columns: &[String]) -> Result<Vec<Curve>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let t_col = header.iter().position(|h| h == "t").with_context(|| format!("{}: no `t` column", path.display()))?;
    let selected: Vec<usize> = if columns.is_empty() {
        let preferred: Vec<usize> =
            (0..header.len()).filter(|&i| header[i] == "F2" || header[i].starts_with("G_")).collect();
        if preferred.is_empty() {
            (0..header.len()).filter(|&i| i != t_col).collect()
        } else {
            preferred
        }
    } else {
        columns
            .iter()
            .map(|c| header.iter().position(|h| h == c).with_context(|| format!("{}: no column `{c}`", path.display())))
            .collect::<Result<_>>()?
    };
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut curves: Vec<Curve> = selected
        .iter()
        .map(|&i| Curve { label: format!("{stem}: {}", header[i]), t: Vec::new(), v: Vec::new() })
        .collect();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let cell = |i: usize| -> Result<f64> {
            let s = record.get(i).unwrap_or("").trim();
            s.parse().with_context(|| format!("{}: line {}: bad number `{s}`", path.display(), row + 2))
        };
        let t = cell(t_col)?;
        for (curve, &i) in curves.iter_mut().zip(&selected) {
            curve.t.push(t);
            curve.v.push(cell(i)?);
        }
    }
    Ok(curves)
}

fn fmt_num(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

/// Renders the curves with a logarithmic value axis. Non-positive values
/// are left out and break the line.
pub fn render_svg(curves: &[Curve], title: &str) -> Result<String> {
    let points = curves.iter().flat_map(|c| c.t.iter().zip(&c.v));
    let positive: Vec<(f64, f64)> = points.filter(|(_, v)| **v > 0.0 && v.is_finite()).map(|(t, v)| (*t, *v)).collect();
    if positive.is_empty() {
        bail!("nothing to plot: no positive values");
    }
    let (t0, t1) = positive.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (t, _)| (a.min(*t), b.max(*t)));
    let (lo, hi) = positive
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (_, v)| (a.min(v.log10()), b.max(v.log10())));
    let (d0, mut d1) = (lo.floor(), hi.ceil());
    if d1 <= d0 {
        d1 = d0 + 1.0;
    }
    let t_span = if t1 > t0 { t1 - t0 } else { 1.0 };
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let x = |t: f64| LEFT + (t - t0) / t_span * pw;
    let y = |v: f64| TOP + (d1 - v.log10()) / (d1 - d0) * ph;

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#)?;
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
    writeln!(s, r#"<text x="{}" y="20" font-family="sans-serif" font-size="14">{}</text>"#, fmt_num(LEFT), escape(title))?;
    let decades = (d1 - d0) as i64;
    let step = (decades as f64 / 10.0).ceil().max(1.0) as i64;
    for k in (0..=decades).step_by(step as usize) {
        let e = d0 as i64 + k;
        let yy = fmt_num(y(10f64.powi(e as i32)));
        writeln!(s, r##"<line x1="{}" y1="{yy}" x2="{}" y2="{yy}" stroke="#dddddd"/>"##, fmt_num(LEFT), fmt_num(LEFT + pw))?;
        writeln!(
            s,
            r#"<text x="{}" y="{yy}" font-family="sans-serif" font-size="11" text-anchor="end" dominant-baseline="middle">1e{e}</text>"#,
            fmt_num(LEFT - 6.0)
        )?;
    }
    for k in 0..=4 {
        let t = t0 + t_span * k as f64 / 4.0;
        let xx = fmt_num(x(t));
        writeln!(s, r##"<line x1="{xx}" y1="{}" x2="{xx}" y2="{}" stroke="#dddddd"/>"##, fmt_num(TOP), fmt_num(TOP + ph))?;
        writeln!(
            s,
            r#"<text x="{xx}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            fmt_num(TOP + ph + 16.0),
            format_tick(t)
        )?;
    }
    writeln!(
        s,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        fmt_num(LEFT),
        fmt_num(TOP),
        fmt_num(pw),
        fmt_num(ph)
    )?;
    writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">t</text>"#,
        fmt_num(LEFT + pw / 2.0),
        fmt_num(HEIGHT - 12.0)
    )?;
    for (k, c) in curves.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut runs: Vec<Vec<String>> = vec![Vec::new()];
        for (t, v) in c.t.iter().zip(&c.v) {
            if *v > 0.0 && v.is_finite() {
                runs.last_mut().unwrap().push(format!("{},{}", fmt_num(x(*t)), fmt_num(y(*v))));
            } else if !runs.last().unwrap().is_empty() {
                runs.push(Vec::new());
            }
        }
        for run in runs.iter().filter(|r| !r.is_empty()) {
            writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, run.join(" "))?;
        }
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = LEFT + pw + 12.0;
        writeln!(
            s,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/>"#,
            fmt_num(lx),
            fmt_num(ly),
            fmt_num(lx + 20.0),
            fmt_num(ly)
        )?;
        writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" dominant-baseline="middle">{}</text>"#,
            fmt_num(lx + 26.0),
            fmt_num(ly),
            escape(&c.label)
        )?;
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn format_tick(t: f64) -> String {
    let s = format!("{t:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
