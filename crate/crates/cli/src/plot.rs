//! Plot-ready data: per-metric CSV tables with one row per detector,
//! distribution histograms, and minimal static SVG charts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use salmon_core::analysis::{CharacterizationReport, Distribution};
use salmon_core::io::{write_atomic, write_csv_atomic, IoError, Provenance};
use salmon_core::metrics::MetricReport;

#[derive(Serialize)]
struct MetricRow {
    detector: String,
    et: Option<f64>,
    pc: Option<f64>,
    rd: Option<f64>,
    combined: Option<f64>,
    binary: Option<f64>,
}

#[derive(Serialize)]
struct BinRow {
    bin_lo: f64,
    bin_hi: f64,
    count: u64,
}

#[derive(Serialize)]
struct FitRow {
    x: String,
    y: String,
    points: usize,
    g: Option<f64>,
    r_squared: Option<f64>,
}

const METRIC_HEADER: [&str; 6] = ["detector", "et", "pc", "rd", "combined", "binary"];

fn metric_rows(reports: &[MetricReport], pick: impl Fn(&MetricReport) -> MetricRow) -> Vec<MetricRow> {
    reports.iter().map(pick).collect()
}

/// Writes the plot data files under `out` and returns their paths.
pub fn emit_plot_data(
    metrics: &[MetricReport],
    characterization: Option<&CharacterizationReport>,
    out: &Path,
    svg: bool,
    provenance: &Provenance,
) -> Result<Vec<PathBuf>, IoError> {
    let mut written = Vec::new();
    let tables: [(&str, Vec<MetricRow>); 3] = [
        (
            "mae",
            metric_rows(metrics, |r| {
                let a = &r.aggregates;
                MetricRow {
                    detector: r.config.detector.clone(),
                    et: a.mae.et,
                    pc: a.mae.pc,
                    rd: a.mae.rd,
                    combined: a.mae_combined,
                    binary: None,
                }
            }),
        ),
        (
            "auprc",
            metric_rows(metrics, |r| {
                let a = &r.aggregates;
                MetricRow {
                    detector: r.config.detector.clone(),
                    et: a.auprc.et,
                    pc: a.auprc.pc,
                    rd: a.auprc.rd,
                    combined: a.auprc_combined,
                    binary: a.auprc_binary,
                }
            }),
        ),
        (
            "tau",
            metric_rows(metrics, |r| {
                let a = &r.aggregates;
                MetricRow {
                    detector: r.config.detector.clone(),
                    et: a.tau.et,
                    pc: a.tau.pc,
                    rd: a.tau.rd,
                    combined: a.tau_combined,
                    binary: None,
                }
            }),
        ),
    ];
    for (name, rows) in &tables {
        let path = out.join(format!("{name}.csv"));
        write_csv_atomic(&path, provenance, &METRIC_HEADER, rows)?;
        written.push(path);
        if svg {
            let path = out.join(format!("{name}.svg"));
            write_atomic(&path, |w| w.write_all(bar_chart(name, rows, provenance).as_bytes()))?;
            written.push(path);
        }
    }

    if let Some(c) = characterization {
        for d in &c.distributions {
            let rows: Vec<BinRow> = d
                .counts
                .iter()
                .enumerate()
                .map(|(i, &count)| BinRow {
                    bin_lo: d.edges[i],
                    bin_hi: d.edges[i + 1],
                    count,
                })
                .collect();
            let path = out.join(format!("hist_{}.csv", d.name));
            write_csv_atomic(&path, provenance, &["bin_lo", "bin_hi", "count"], &rows)?;
            written.push(path);
            if svg {
                let path = out.join(format!("hist_{}.svg", d.name));
                write_atomic(&path, |w| w.write_all(histogram_svg(d, provenance).as_bytes()))?;
                written.push(path);
            }
        }
        let fits: Vec<FitRow> = c
            .gamma_fits
            .iter()
            .map(|f| FitRow {
                x: f.x.tag().to_string(),
                y: f.y.tag().to_string(),
                points: f.points,
                g: f.g,
                r_squared: f.r_squared,
            })
            .collect();
        let path = out.join("gamma_fits.csv");
        write_csv_atomic(&path, provenance, &["x", "y", "points", "g", "r_squared"], &fits)?;
        written.push(path);
    }
    Ok(written)
}

const W: f64 = 640.0;
const H: f64 = 320.0;
const PAD: f64 = 40.0;

fn svg_open(title: &str, provenance: &Provenance) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <!-- {} {} config_hash={} -->\n\
         <text x=\"{PAD}\" y=\"20\" font-size=\"14\">{title}</text>\n\
         <line x1=\"{PAD}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        provenance.toolkit,
        provenance.version,
        provenance.config_hash,
        H - PAD,
        W - PAD,
        H - PAD
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bar_chart(title: &str, rows: &[MetricRow], provenance: &Provenance) -> String {
    const SERIES: [(&str, &str); 5] = [
        ("et", "#4c72b0"),
        ("pc", "#dd8452"),
        ("rd", "#55a868"),
        ("combined", "#c44e52"),
        ("binary", "#8172b3"),
    ];
    let mut s = svg_open(title, provenance);
    let values: Vec<[Option<f64>; 5]> = rows.iter().map(|r| [r.et, r.pc, r.rd, r.combined, r.binary]).collect();
    let lo = values.iter().flatten().flatten().fold(0.0_f64, |a, &v| a.min(v));
    let hi = values.iter().flatten().flatten().fold(1.0_f64, |a, &v| a.max(v));
    let y = |v: f64| H - PAD - (v - lo) / (hi - lo) * (H - 2.0 * PAD);
    let group = (W - 2.0 * PAD) / rows.len().max(1) as f64;
    let bar = group / 6.0;
    for (i, (row, vals)) in rows.iter().zip(&values).enumerate() {
        let gx = PAD + i as f64 * group;
        for (k, v) in vals.iter().enumerate() {
            if let Some(v) = v {
                let (top, base) = (y(v.max(0.0)), y(v.min(0.0)));
                let _ = writeln!(
                    s,
                    "<rect x=\"{:.1}\" y=\"{top:.1}\" width=\"{bar:.1}\" height=\"{:.1}\" fill=\"{}\"/>",
                    gx + (k as f64 + 0.5) * bar,
                    base - top,
                    SERIES[k].1
                );
            }
        }
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>", gx + bar, H - PAD + 14.0, escape(&row.detector));
    }
    for (k, (name, color)) in SERIES.iter().enumerate() {
        let _ = writeln!(
            s,
            "<rect x=\"{:.1}\" y=\"28\" width=\"10\" height=\"10\" fill=\"{color}\"/><text x=\"{:.1}\" y=\"37\">{name}</text>",
            W - PAD - 360.0 + k as f64 * 72.0,
            W - PAD - 346.0 + k as f64 * 72.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn histogram_svg(d: &Distribution, provenance: &Provenance) -> String {
    let mut s = svg_open(&d.name, provenance);
    let max = d.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let bw = (W - 2.0 * PAD) / d.counts.len().max(1) as f64;
    for (i, &c) in d.counts.iter().enumerate() {
        let h = c as f64 / max * (H - 2.0 * PAD);
        let _ = writeln!(
            s,
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{h:.1}\" fill=\"#4c72b0\"/>",
            PAD + i as f64 * bw,
            H - PAD - h,
            (bw - 1.0).max(0.5)
        );
    }
    if let (Some(lo), Some(hi)) = (d.edges.first(), d.edges.last()) {
        let _ = writeln!(s, "<text x=\"{PAD}\" y=\"{}\">{lo:.3}</text>", H - PAD + 14.0);
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{hi:.3}</text>", W - PAD, H - PAD + 14.0);
    }
    s.push_str("</svg>\n");
    s
}
