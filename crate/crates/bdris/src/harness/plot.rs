//! Self-contained SVG renderings of the experiment CSVs: NMSE against RIS
//! size, NMSE against transmit power, and pilot slots against RIS size,
//! one series per estimator. NMSE values aggregate to the per-point median
//! across trials.

use super::metrics::{median, read_csv, MetricsRecord};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error(transparent)]
    Metrics(#[from] super::metrics::MetricsError),
    #[error("no records in {0}")]
    EmptyCsv(PathBuf),
    #[error("no usable rows for {0}")]
    NoData(&'static str),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Which figure analogue to render.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    /// Median NMSE (log scale) against the RIS element count.
    NmseVsN,
    /// Median NMSE (log scale) against transmit power in dBm.
    NmseVsPower,
    /// Pilot slots against the RIS element count.
    PilotsVsN,
    /// Every figure the CSV carries data for.
    Auto,
}

struct Series {
    label: String,
    /// Sorted `(x, y)` points.
    points: Vec<(f64, f64)>,
}

struct Figure {
    file_stem: &'static str,
    title: String,
    x_label: String,
    y_label: String,
    log_x: bool,
    log_y: bool,
    series: Vec<Series>,
}

/// Render the requested figures next to `out_dir`, returning the written
/// paths. Fails without writing anything when the CSV has no rows.
pub fn emit_plots(
    csv_path: &Path,
    kind: FigureKind,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, PlotError> {
    let records = read_csv(csv_path)?;
    if records.is_empty() {
        return Err(PlotError::EmptyCsv(csv_path.to_path_buf()));
    }
    std::fs::create_dir_all(out_dir).map_err(|source| PlotError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;

    let mut figures = Vec::new();
    let has_nmse = records.iter().any(|r| r.nmse.is_some());
    let distinct_n = distinct(&records, |r| r.n as f64).len();
    let distinct_p = distinct(&records, |r| r.p_dbm).len();
    let wants = |k: FigureKind| kind == k || kind == FigureKind::Auto;

    if wants(FigureKind::NmseVsN) && (kind == FigureKind::NmseVsN || (has_nmse && distinct_n >= 1 && distinct_p <= 1)) {
        figures.push(nmse_vs_n(&records)?);
    }
    if wants(FigureKind::NmseVsPower) && (kind == FigureKind::NmseVsPower || (has_nmse && distinct_p > 1)) {
        figures.push(nmse_vs_power(&records)?);
    }
    if wants(FigureKind::PilotsVsN) && (kind == FigureKind::PilotsVsN || distinct_p <= 1) {
        figures.push(pilots_vs_n(&records)?);
    }
    if figures.is_empty() {
        return Err(PlotError::NoData("requested figure"));
    }

    let mut written = Vec::new();
    for fig in figures {
        let path = out_dir.join(format!("{}.svg", fig.file_stem));
        let svg = render(&fig);
        std::fs::write(&path, svg).map_err(|source| PlotError::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}

fn distinct(records: &[MetricsRecord], key: impl Fn(&MetricsRecord) -> f64) -> Vec<f64> {
    let mut xs: Vec<f64> = records.iter().map(&key).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    xs
}

fn estimators(records: &[MetricsRecord]) -> Vec<String> {
    let mut names: Vec<String> = records.iter().map(|r| r.estimator.clone()).collect();
    names.sort();
    names.dedup();
    names
}

fn median_series(
    records: &[MetricsRecord],
    x_of: impl Fn(&MetricsRecord) -> f64,
    y_of: impl Fn(&MetricsRecord) -> Option<f64>,
) -> Vec<Series> {
    let mut out = Vec::new();
    for name in estimators(records) {
        let mut buckets: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
        for r in records.iter().filter(|r| r.estimator == name) {
            if let Some(y) = y_of(r) {
                let x = x_of(r);
                let entry = buckets.entry(x.to_bits()).or_insert((x, Vec::new()));
                entry.1.push(y);
            }
        }
        let mut points: Vec<(f64, f64)> = buckets
            .into_values()
            .filter_map(|(x, mut ys)| median(&mut ys).map(|m| (x, m)))
            .collect();
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        if !points.is_empty() {
            out.push(Series {
                label: name,
                points,
            });
        }
    }
    out
}

fn nmse_vs_n(records: &[MetricsRecord]) -> Result<Figure, PlotError> {
    let series = median_series(records, |r| r.n as f64, |r| r.nmse);
    if series.is_empty() {
        return Err(PlotError::NoData("NMSE vs N"));
    }
    Ok(Figure {
        file_stem: "nmse_vs_n",
        title: "Cascaded-channel NMSE against RIS elements".into(),
        x_label: "RIS elements N".into(),
        y_label: "median NMSE".into(),
        log_x: false,
        log_y: true,
        series,
    })
}

fn nmse_vs_power(records: &[MetricsRecord]) -> Result<Figure, PlotError> {
    let series = median_series(records, |r| r.p_dbm, |r| r.nmse);
    if series.is_empty() {
        return Err(PlotError::NoData("NMSE vs power"));
    }
    Ok(Figure {
        file_stem: "nmse_vs_power",
        title: "Cascaded-channel NMSE against transmit power".into(),
        x_label: "transmit power (dBm)".into(),
        y_label: "median NMSE".into(),
        log_x: false,
        log_y: true,
        series,
    })
}

fn pilots_vs_n(records: &[MetricsRecord]) -> Result<Figure, PlotError> {
    let series = median_series(records, |r| r.n as f64, |r| Some(r.pilot_slots as f64));
    if series.is_empty() {
        return Err(PlotError::NoData("pilot slots vs N"));
    }
    let xs: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .collect();
    let spread = xs.iter().cloned().fold(f64::MIN, f64::max)
        / xs.iter().cloned().fold(f64::MAX, f64::min).max(1.0);
    Ok(Figure {
        file_stem: "pilot_slots_vs_n",
        title: "Pilot overhead against RIS elements".into(),
        x_label: "RIS elements N".into(),
        y_label: "pilot slots per round".into(),
        log_x: spread > 50.0,
        log_y: true,
        series,
    })
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn render(fig: &Figure) -> String {
    let xs: Vec<f64> = fig
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .collect();
    let ys: Vec<f64> = fig
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .collect();
    let fwd_x = |v: f64| if fig.log_x { v.max(1e-300).log10() } else { v };
    let fwd_y = |v: f64| if fig.log_y { v.max(1e-300).log10() } else { v };
    let (mut x_lo, mut x_hi) = bounds(&xs.iter().map(|&v| fwd_x(v)).collect::<Vec<_>>());
    let (mut y_lo, mut y_hi) = bounds(&ys.iter().map(|&v| fwd_y(v)).collect::<Vec<_>>());
    if (x_hi - x_lo).abs() < 1e-12 {
        x_lo -= 1.0;
        x_hi += 1.0;
    }
    if (y_hi - y_lo).abs() < 1e-12 {
        y_lo -= 1.0;
        y_hi += 1.0;
    }
    let px = |v: f64| MARGIN_L + (fwd_x(v) - x_lo) / (x_hi - x_lo) * (WIDTH - MARGIN_L - MARGIN_R);
    let py = |v: f64| {
        HEIGHT - MARGIN_B - (fwd_y(v) - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_T - MARGIN_B)
    };

    let mut svg = String::new();
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    );
    let _ = write!(
        svg,
        "<text x=\"{:.1}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        WIDTH / 2.0,
        fig.title
    );
    // Axes box.
    let _ = write!(
        svg,
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{:.1}\" height=\"{:.1}\" \
         fill=\"none\" stroke=\"#333\"/>\n",
        WIDTH - MARGIN_L - MARGIN_R,
        HEIGHT - MARGIN_T - MARGIN_B
    );

    for (t, label) in ticks(x_lo, x_hi, fig.log_x) {
        let x = MARGIN_L + (t - x_lo) / (x_hi - x_lo) * (WIDTH - MARGIN_L - MARGIN_R);
        let _ = write!(
            svg,
            "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#bbb\" stroke-dasharray=\"3,3\"/>\n\
             <text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{label}</text>\n",
            MARGIN_T,
            HEIGHT - MARGIN_B,
            HEIGHT - MARGIN_B + 18.0
        );
    }
    for (t, label) in ticks(y_lo, y_hi, fig.log_y) {
        let y = HEIGHT - MARGIN_B - (t - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_T - MARGIN_B);
        let _ = write!(
            svg,
            "<line x1=\"{MARGIN_L}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#bbb\" stroke-dasharray=\"3,3\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{label}</text>\n",
            WIDTH - MARGIN_R,
            MARGIN_L - 6.0,
            y + 4.0
        );
    }
    let _ = write!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 12.0,
        fig.x_label
    );
    let _ = write!(
        svg,
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        fig.y_label
    );

    for (i, series) in fig.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        if series.points.len() > 1 {
            let pts: Vec<String> = series
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            let _ = write!(
                svg,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
                pts.join(" ")
            );
        }
        for &(x, y) in &series.points {
            let _ = write!(
                svg,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{color}\"/>\n",
                px(x),
                py(y)
            );
        }
        let ly = MARGIN_T + 16.0 + 18.0 * i as f64;
        let _ = write!(
            svg,
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
            MARGIN_L + 10.0,
            MARGIN_L + 34.0,
            MARGIN_L + 40.0,
            ly + 4.0,
            series.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().cloned().fold(f64::MAX, f64::min);
    let hi = values.iter().cloned().fold(f64::MIN, f64::max);
    let pad = 0.05 * (hi - lo).max(1e-12);
    (lo - pad, hi + pad)
}

/// Tick positions in transformed coordinates with printable labels.
fn ticks(lo: f64, hi: f64, log: bool) -> Vec<(f64, String)> {
    if log {
        let first = lo.ceil() as i64;
        let last = hi.floor() as i64;
        let mut out = Vec::new();
        let mut step = 1i64;
        while (last - first) / step > 8 {
            step += 1;
        }
        let mut d = first;
        while d <= last {
            out.push((d as f64, format!("1e{d}")));
            d += step;
        }
        if out.is_empty() {
            out.push((lo, format!("1e{lo:.1}")));
        }
        out
    } else {
        let span = hi - lo;
        let raw = span / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|m| m * mag)
            .find(|&s| span / s <= 6.0)
            .unwrap_or(mag * 10.0);
        let mut t = (lo / step).ceil() * step;
        let mut out = Vec::new();
        while t <= hi + 1e-9 * span {
            let label = if step >= 1.0 {
                format!("{t:.0}")
            } else {
                format!("{t}")
            };
            out.push((t, label));
            t += step;
        }
        out
    }
}
