//! Deterministic SVG line plots from CSV columns.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use crate::config::PlotCommand;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    /// `(x, y, half-width)`.
    pub points: Vec<(f64, f64, f64)>,
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| anyhow!("{}: no column named `{name}`", path.display()))
}

fn number(field: &str, name: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| anyhow!("row {line}: `{field}` in column `{name}` is not a number"))
}

/// Reads the plotted columns, grouped by the series column in order of first
/// appearance.
pub fn read_series(cfg: &PlotCommand) -> Result<Vec<Series>> {
    let path = cfg.csv.as_path();
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let xi = column(&headers, &cfg.x, path)?;
    let yi = column(&headers, &cfg.y, path)?;
    let ei = cfg.err.as_deref().map(|e| column(&headers, e, path)).transpose()?;
    let si = cfg.series.as_deref().map(|s| column(&headers, s, path)).transpose()?;

    let mut series: Vec<Series> = Vec::new();
    let mut rows = 0usize;
    for (k, rec) in reader.records().enumerate() {
        let rec = rec?;
        rows += 1;
        let line = k + 2;
        let (xs, ys) = (&rec[xi], &rec[yi]);
        if ys.trim().is_empty() || xs.trim().is_empty() {
            continue;
        }
        let x = number(xs, &cfg.x, line)?;
        let y = number(ys, &cfg.y, line)?;
        let e = match ei {
            Some(i) if !rec[i].trim().is_empty() => number(&rec[i], cfg.err.as_deref().unwrap_or_default(), line)?,
            _ => 0.0,
        };
        let name = si.map_or_else(|| cfg.y.clone(), |i| rec[i].to_string());
        match series.iter_mut().find(|s| s.name == name) {
            Some(s) => s.points.push((x, y, e)),
            None => series.push(Series {
                name,
                points: vec![(x, y, e)],
            }),
        }
    }
    if rows == 0 {
        bail!("{}: no data rows, nothing to plot", path.display());
    }
    if series.is_empty() {
        bail!("{}: every row has an empty `{}` or `{}`", path.display(), cfg.x, cfg.y);
    }
    Ok(series)
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool, name: &str) -> Result<Axis> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            if log && v <= 0.0 {
                bail!("log axis for `{name}` needs positive values, found {v}");
            }
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo == hi {
            lo -= 0.5;
            hi += 0.5;
        }
        if log {
            lo = lo.floor();
            hi = hi.ceil();
        }
        Ok(Axis { lo, hi, log })
    }

    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.max(f64::MIN_POSITIVE).log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            return (self.lo as i32..=self.hi as i32).map(|k| 10f64.powi(k)).collect();
        }
        let raw = (self.hi - self.lo) / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|m| m * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let first = (self.lo / step).ceil() as i64;
        let last = (self.hi / step).floor() as i64;
        (first..=last).map(|k| k as f64 * step).collect()
    }
}

fn label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders series as an SVG document. Output depends only on the input.
pub fn render_svg(series: &[Series], cfg: &PlotCommand) -> Result<String> {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let xa = Axis::new(all().map(|p| p.0), cfg.log_x, &cfg.x)?;
    let ya = Axis::new(
        all().flat_map(|p| {
            let lo = if cfg.log_y && p.1 - p.2 <= 0.0 { p.1 } else { p.1 - p.2 };
            [lo, p.1 + p.2]
        }),
        cfg.log_y,
        &cfg.y,
    )?;
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let px = |x: f64| LEFT + xa.frac(x) * pw;
    let py = |y: f64| TOP + (1.0 - ya.frac(y)) * ph;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )?;
    writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#)?;
    if let Some(t) = &cfg.title {
        writeln!(s, r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#, LEFT + pw / 2.0, escape(t))?;
    }
    writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#)?;
    for t in xa.ticks() {
        let x = px(t);
        writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd"/>"##, TOP + ph)?;
        writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, label(t))?;
    }
    for t in ya.ticks() {
        let y = py(t);
        writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##, LEFT + pw)?;
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, label(t))?;
    }
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 16.0,
        escape(&cfg.x)
    )?;
    writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&cfg.y)
    )?;

    for (k, ser) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut pts = ser.points.clone();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let path: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", px(p.0), py(p.1))).collect();
        writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, path.join(" "))?;
        for &(x, y, e) in &pts {
            let (cx, cy) = (px(x), py(y));
            if e > 0.0 {
                let lo = if cfg.log_y && y - e <= 0.0 { y } else { y - e };
                let (y0, y1) = (py(lo), py(y + e));
                writeln!(s, r#"<line x1="{cx:.2}" y1="{y0:.2}" x2="{cx:.2}" y2="{y1:.2}" stroke="{color}"/>"#)?;
                for yy in [y0, y1] {
                    writeln!(
                        s,
                        r#"<line x1="{:.2}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="{color}"/>"#,
                        cx - 3.0,
                        cx + 3.0
                    )?;
                }
            }
            writeln!(s, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="2.5" fill="{color}"/>"#)?;
        }
        let ly = TOP + 14.0 + 18.0 * k as f64;
        let lx = LEFT + pw + 14.0;
        writeln!(s, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0)?;
        writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&ser.name))?;
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn cmd_plot(cfg: &PlotCommand) -> Result<String> {
    let series = read_series(cfg)?;
    let svg = render_svg(&series, cfg)?;
    if let Some(dir) = cfg.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(&cfg.out, &svg).with_context(|| format!("writing {}", cfg.out.display()))?;
    Ok(svg)
}
