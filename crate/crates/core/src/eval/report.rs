use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{precision_threshold, success_threshold, AttributeBreakdown, EvalCurves, OpeResult};
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::pipeline::TrackerConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceResult {
    pub name: String,
    pub frames: usize,
    pub boxes: Vec<BoundingBox>,
    pub curves: EvalCurves,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceTiming {
    pub name: String,
    pub fps: f64,
    pub frame_times: Vec<f64>,
}

/// Wall-clock figures, kept apart so runs can be compared without them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub fps: f64,
    pub tracker_seconds: f64,
    pub sequences: Vec<SequenceTiming>,
}

/// Contents of `results.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub variant: String,
    /// How per-sequence curves are combined.
    pub aggregation: String,
    pub config: Option<TrackerConfig>,
    pub aggregate: EvalCurves,
    pub sequences: Vec<SequenceResult>,
    pub attributes: AttributeBreakdown,
    pub skipped: BTreeMap<String, String>,
    pub timing: Timing,
}

impl ResultsFile {
    pub fn from_result(result: &OpeResult, breakdown: &AttributeBreakdown) -> Self {
        let sequences = result
            .records
            .iter()
            .zip(&result.curves)
            .map(|(r, c)| SequenceResult {
                name: r.sequence.clone(),
                frames: r.boxes.len(),
                boxes: r.boxes.clone(),
                curves: c.clone(),
            })
            .collect();
        let timing = Timing {
            fps: result.fps,
            tracker_seconds: result.records.iter().map(|r| r.total_time()).sum(),
            sequences: result
                .records
                .iter()
                .map(|r| SequenceTiming {
                    name: r.sequence.clone(),
                    fps: r.fps(),
                    frame_times: r.frame_times.clone(),
                })
                .collect(),
        };
        Self {
            variant: result.variant.clone(),
            aggregation: "mean_of_sequence_curves".into(),
            config: result.records.first().map(|r| r.config.clone()),
            aggregate: result.aggregate.clone(),
            sequences,
            attributes: breakdown.clone(),
            skipped: result.skipped.iter().cloned().collect(),
            timing,
        }
    }
}

pub fn load_results(path: &Path) -> Result<ResultsFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Writes `results.json`, `summary.csv`, `precision.svg` and `success.svg`
/// into `out_dir`.
pub fn emit_report(result: &OpeResult, breakdown: &AttributeBreakdown, out_dir: &Path) -> Result<ResultsFile> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let file = ResultsFile::from_result(result, breakdown);

    let json_path = out_dir.join("results.json");
    let json = serde_json::to_string_pretty(&file).expect("results serialize");
    fs::write(&json_path, json + "\n").map_err(|e| Error::io(&json_path, e))?;

    let csv_path = out_dir.join("summary.csv");
    let csv_err = |e: csv::Error| Error::Parse {
        path: csv_path.clone(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(&csv_path).map_err(csv_err)?;
    w.write_record(["sequence", "frames", "dp20", "auc", "fps"]).map_err(csv_err)?;
    for (s, t) in file.sequences.iter().zip(&file.timing.sequences) {
        w.write_record([
            s.name.clone(),
            s.frames.to_string(),
            format!("{:.6}", s.curves.dp20),
            format!("{:.6}", s.curves.auc),
            format!("{:.3}", t.fps),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;

    let label = format!("{} [{:.3}]", file.variant, file.aggregate.dp20);
    let prec: Vec<(f64, f64)> = file
        .aggregate
        .precision
        .iter()
        .enumerate()
        .map(|(k, &v)| (precision_threshold(k), v))
        .collect();
    write_svg(
        &out_dir.join("precision.svg"),
        &render_svg("Precision plots of OPE", "Location error threshold (px)", 50.0, &[(label, prec)]),
    )?;
    let label = format!("{} [{:.3}]", file.variant, file.aggregate.auc);
    let succ: Vec<(f64, f64)> = file
        .aggregate
        .success
        .iter()
        .enumerate()
        .map(|(k, &v)| (success_threshold(k), v))
        .collect();
    write_svg(
        &out_dir.join("success.svg"),
        &render_svg("Success plots of OPE", "Overlap threshold", 1.0, &[(label, succ)]),
    )?;
    Ok(file)
}

fn write_svg(path: &Path, svg: &str) -> Result<()> {
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Line plot with the y axis fixed to [0, 1]; each series label goes in
/// the legend.
pub fn render_svg(title: &str, x_label: &str, x_max: f64, series: &[(String, Vec<(f64, f64)>)]) -> String {
    const W: f64 = 480.0;
    const H: f64 = 360.0;
    const L: f64 = 60.0;
    const R: f64 = 20.0;
    const T: f64 = 40.0;
    const B: f64 = 50.0;
    const COLORS: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
    let px = |x: f64| L + x / x_max * (W - L - R);
    let py = |y: f64| H - B - y * (H - T - B);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{L}" y="{T}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - L - R,
        H - T - B
    );
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{v:.1}</text>"#, L - 6.0, py(v) + 4.0);
        let xv = v * x_max;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            px(xv),
            H - B + 16.0,
            if x_max >= 10.0 { format!("{xv:.0}") } else { format!("{xv:.1}") }
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, px(x_max / 2.0), H - 12.0, escape(x_label));
    for (i, (label, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, path.join(" "));
        let ly = T + 16.0 + 16.0 * i as f64;
        let lx = W - R - 150.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/>"#, ly - 4.0, lx + 20.0, ly - 4.0);
        let _ = writeln!(s, r#"<text x="{}" y="{ly}">{}</text>"#, lx + 26.0, escape(label));
    }
    s.push_str("</svg>\n");
    s
}
