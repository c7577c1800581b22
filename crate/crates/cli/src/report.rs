//! Scaling fits from `results.csv` and plot-ready data from `summary.json`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use stabsim::harness::{fit_scaling, fmt_f64, Axis, FitWindow, PointSummary, ScalingFit, Stats};

/// The columns of `results.csv` a fit needs.
#[derive(Deserialize)]
struct Row {
    p: usize,
    n: Option<usize>,
    l: Option<i64>,
    t: f64,
    delta: f64,
    lambda: f64,
    delta_rho: Option<f64>,
}

impl Row {
    fn x(&self, axis: Axis) -> Option<f64> {
        match axis {
            Axis::T => Some(self.t),
            Axis::Delta => Some(self.delta),
            Axis::N => self.n.map(|n| n as f64),
            Axis::Lambda => self.lambda.is_finite().then_some(self.lambda),
        }
    }

    fn group(&self, axis: Axis) -> String {
        let mut parts = vec![format!("p={}", self.p)];
        if axis != Axis::T {
            parts.push(format!("t={}", self.t));
        }
        if axis != Axis::Delta {
            parts.push(format!("delta={}", self.delta));
        }
        if axis != Axis::N {
            parts.push(format!("n={}", self.n.map(|n| n.to_string()).unwrap_or_else(|| "-".into())));
        }
        if axis != Axis::Lambda {
            parts.push(format!("lambda={}", self.lambda));
        }
        parts.push(format!("l={}", self.l.map(|l| l.to_string()).unwrap_or_else(|| "all".into())));
        parts.join(",")
    }
}

#[derive(Serialize)]
pub struct SeriesFit {
    pub axis: Axis,
    pub group: String,
    /// `(x, mean, stderr)` per grid value.
    pub points: Vec<(f64, f64, f64)>,
    pub fit: Option<ScalingFit>,
    pub error: Option<String>,
}

/// Fits `log mean Δ(ρ)` against `log x` for each series of `results.csv`
/// that varies along `axis`.
pub fn fit_csv(path: &Path, axis: Axis, window: FitWindow, log_power: f64) -> Result<Vec<SeriesFit>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut groups: BTreeMap<String, BTreeMap<u64, (f64, Vec<f64>)>> = BTreeMap::new();
    for row in reader.deserialize::<Row>() {
        let row = row?;
        let (Some(x), Some(y)) = (row.x(axis), row.delta_rho) else { continue };
        groups.entry(row.group(axis)).or_default().entry(x.to_bits()).or_insert_with(|| (x, Vec::new())).1.push(y);
    }
    if groups.is_empty() {
        bail!("{} has no samples along this axis", path.display());
    }
    Ok(groups
        .into_iter()
        .map(|(group, by_x)| {
            let mut points: Vec<(f64, f64, f64)> = by_x
                .into_values()
                .map(|(x, ys)| {
                    let st = Stats::of(&ys);
                    (x, st.mean, st.stderr)
                })
                .collect();
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            let xy: Vec<(f64, f64)> = points.iter().map(|&(x, y, _)| (x, y)).collect();
            let (fit, error) = match fit_scaling(&xy, window, log_power) {
                Ok(mut f) => {
                    f.axis = Some(axis);
                    (Some(f), None)
                }
                Err(e) => (None, Some(e.to_string())),
            };
            SeriesFit { axis, group, points, fit, error }
        })
        .collect())
}

fn axis_name(axis: Axis) -> &'static str {
    match axis {
        Axis::T => "t",
        Axis::Delta => "delta",
        Axis::N => "n",
        Axis::Lambda => "lambda",
    }
}

fn axis_value(s: &PointSummary, axis: Axis) -> Option<f64> {
    match axis {
        Axis::T => Some(s.point.t),
        Axis::Delta => Some(s.point.delta),
        Axis::N => s.point.n.map(|n| n as f64),
        Axis::Lambda => s.point.lambda,
    }
}

/// One row of a plot-data file.
struct PlotRow {
    x: f64,
    y: f64,
    yerr: f64,
    rhs: Option<f64>,
}

/// Writes `report/<axis>_<k>.csv` per series with columns
/// `x,y,yerr,bound_rhs`, an index `report/<axis>.json`, and optionally
/// an SVG chart per series. Returns the written paths.
pub fn write_plot_data(out: &Path, axis: Axis, svg: bool) -> Result<Vec<PathBuf>> {
    let summary_path = out.join("summary.json");
    let text = fs::read_to_string(&summary_path).with_context(|| format!("reading {}", summary_path.display()))?;
    let summaries: Vec<PointSummary> = serde_json::from_str(&text)?;
    let mut groups: BTreeMap<String, Vec<PlotRow>> = BTreeMap::new();
    for s in &summaries {
        let Some(x) = axis_value(s, axis) else { continue };
        // worst-case theorems are plotted against the worst-case deviation
        let stats = match (&s.delta_wc, s.bounds.first()) {
            (Some(wc), Some(b)) if b.theorem.is_worst_case() => wc,
            _ => &s.delta_rho,
        };
        groups.entry(stabsim::harness::group_key(&s.point, axis)).or_default().push(PlotRow {
            x,
            y: stats.mean,
            yerr: stats.stderr,
            rhs: s.bounds.first().map(|b| b.rhs),
        });
    }
    if groups.is_empty() {
        bail!("no summaries vary along {}", axis_name(axis));
    }
    let dir = out.join("report");
    fs::create_dir_all(&dir)?;
    let name = axis_name(axis);
    let mut written = Vec::new();
    let mut index = BTreeMap::new();
    for (k, (group, mut rows)) in groups.into_iter().enumerate() {
        rows.sort_by(|a, b| a.x.total_cmp(&b.x));
        let path = dir.join(format!("{name}_{k}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["x", "y", "yerr", "bound_rhs"])?;
        for r in &rows {
            w.write_record([fmt_f64(r.x), fmt_f64(r.y), fmt_f64(r.yerr), r.rhs.map(fmt_f64).unwrap_or_default()])?;
        }
        w.flush()?;
        written.push(path.clone());
        let mut entry = serde_json::json!({ "data": path.file_name().unwrap().to_string_lossy() });
        if svg {
            let svg_path = dir.join(format!("{name}_{k}.svg"));
            fs::write(&svg_path, svg_chart(&rows, name, &group))?;
            entry["svg"] = svg_path.file_name().unwrap().to_string_lossy().into();
            written.push(svg_path);
        }
        index.insert(group, entry);
    }
    let index_path = dir.join(format!("{name}.json"));
    fs::write(&index_path, serde_json::to_string_pretty(&index)? + "\n")?;
    written.push(index_path);
    Ok(written)
}

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 320.0;
const MARGIN: f64 = 48.0;

/// Log-log line chart of the mean (with error bars) and the bound.
fn svg_chart(rows: &[PlotRow], x_label: &str, title: &str) -> String {
    let pos = |v: f64| v > 0.0 && v.is_finite();
    let xs: Vec<f64> = rows.iter().map(|r| r.x).filter(|&x| pos(x)).collect();
    let ys: Vec<f64> = rows.iter().flat_map(|r| [Some(r.y), r.rhs]).flatten().filter(|&y| pos(y)).collect();
    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min).log10();
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max).log10();
        if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) }
    };
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="16">{}</text>"#, escape(title));
    if xs.is_empty() || ys.is_empty() {
        s.push_str("</svg>\n");
        return s;
    }
    let (x0, x1) = range(&xs);
    let (y0, y1) = range(&ys);
    let px = |x: f64| MARGIN + (x.log10() - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y.log10() - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);
    let _ = writeln!(
        s,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="#888"/>"##,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#, WIDTH / 2.0, HEIGHT - 12.0);
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="{}">1e{x0:.1}</text>"#, HEIGHT - MARGIN + 14.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">1e{x1:.1}</text>"#, WIDTH - MARGIN, HEIGHT - MARGIN + 14.0);
    let _ = writeln!(s, r#"<text x="4" y="{}">1e{y0:.1}</text>"#, HEIGHT - MARGIN);
    let _ = writeln!(s, r#"<text x="4" y="{}">1e{y1:.1}</text>"#, MARGIN + 4.0);
    let line = |pts: Vec<(f64, f64)>, style: &str| -> String {
        let d: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        format!("<polyline fill=\"none\" {style} points=\"{}\"/>\n", d.join(" "))
    };
    let mean: Vec<(f64, f64)> = rows.iter().filter(|r| pos(r.x) && pos(r.y)).map(|r| (r.x, r.y)).collect();
    let bound: Vec<(f64, f64)> =
        rows.iter().filter_map(|r| r.rhs.map(|b| (r.x, b))).filter(|&(x, b)| pos(x) && pos(b)).collect();
    s.push_str(&line(mean, r##"stroke="#1f5fa8" stroke-width="1.5""##));
    s.push_str(&line(bound, r##"stroke="#b23" stroke-dasharray="4 3""##));
    for r in rows.iter().filter(|r| pos(r.x) && pos(r.y)) {
        let lo = (r.y - r.yerr).max(r.y * 1e-3);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.1}" x2="{x:.1}" y1="{:.1}" y2="{:.1}" stroke="#1f5fa8"/><circle cx="{x:.1}" cy="{:.1}" r="2.5" fill="#1f5fa8"/>"##,
            py(lo),
            py(r.y + r.yerr),
            py(r.y),
            x = px(r.x)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
