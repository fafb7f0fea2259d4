//! One-pass evaluation: metrics, the run loop, attribute subsets, reports
//! and synthetic sequences.

mod report;
mod synth;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use report::{emit_report, load_results, render_svg, ResultsFile, SequenceResult, SequenceTiming, Timing};
pub use synth::{
    generate_synthetic, synthetic_suite, write_sequence, BackgroundSpec, CameraMotion, MotionSegment, ObjectSpec, Occluder, SynthSequence,
    SynthSpec,
};

use crate::error::{Error, Result};
use crate::geometry::{center_error, iou, BoundingBox};
use crate::media::{self, Attribute, Frame, SequenceSpec};
use crate::pipeline::{configure_variant, Tracker, TrackerConfig, Variant};

pub const PRECISION_THRESHOLDS: usize = 51;
pub const SUCCESS_THRESHOLDS: usize = 21;

/// Center-error threshold in pixels for entry `k` of the precision curve.
pub fn precision_threshold(k: usize) -> f64 {
    k as f64
}

/// Overlap threshold for entry `k` of the success curve.
pub fn success_threshold(k: usize) -> f64 {
    k as f64 / 20.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCurves {
    /// Fraction of frames with center error `<= k` px, `k = 0..=50`.
    pub precision: Vec<f64>,
    /// Fraction of frames with IoU `> k / 20`, `k = 0..=20`.
    pub success: Vec<f64>,
    pub dp20: f64,
    pub auc: f64,
}

impl EvalCurves {
    fn from_curves(precision: Vec<f64>, success: Vec<f64>) -> Self {
        let dp20 = precision[20];
        let auc = success.iter().sum::<f64>() / success.len() as f64;
        Self {
            precision,
            success,
            dp20,
            auc,
        }
    }

    /// Element-wise mean.
    pub fn mean(curves: &[EvalCurves]) -> Result<EvalCurves> {
        if curves.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = curves.len() as f64;
        let avg = |get: fn(&EvalCurves) -> &Vec<f64>, len: usize| -> Vec<f64> {
            (0..len).map(|k| curves.iter().map(|c| get(c)[k]).sum::<f64>() / n).collect()
        };
        Ok(Self::from_curves(
            avg(|c| &c.precision, PRECISION_THRESHOLDS),
            avg(|c| &c.success, SUCCESS_THRESHOLDS),
        ))
    }
}

pub fn compute_curves(pred: &[BoundingBox], gt: &[BoundingBox]) -> Result<EvalCurves> {
    if pred.len() != gt.len() || pred.is_empty() {
        return Err(Error::LengthMismatch {
            pred: pred.len(),
            gt: gt.len(),
        });
    }
    let n = pred.len() as f64;
    let errors: Vec<f64> = pred.iter().zip(gt).map(|(p, g)| center_error(p, g)).collect();
    let overlaps: Vec<f64> = pred.iter().zip(gt).map(|(p, g)| iou(p, g)).collect();
    let precision = (0..PRECISION_THRESHOLDS)
        .map(|k| errors.iter().filter(|&&e| e <= precision_threshold(k)).count() as f64 / n)
        .collect();
    let success = (0..SUCCESS_THRESHOLDS)
        .map(|k| overlaps.iter().filter(|&&o| o > success_threshold(k)).count() as f64 / n)
        .collect();
    Ok(EvalCurves::from_curves(precision, success))
}

/// Loads every subdirectory of `root` that holds an `img/` folder, in name
/// order. Directories that fail to load are returned with the reason.
pub fn load_dataset(root: &Path) -> Result<(Vec<SequenceSpec>, Vec<(String, String)>)> {
    let entries = std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(media::IMAGE_DIR).is_dir())
        .collect();
    dirs.sort();
    let mut seqs = Vec::new();
    let mut failed = Vec::new();
    for d in dirs {
        match media::load_sequence(&d) {
            Ok(s) if s.ground_truth.is_some() => seqs.push(s),
            Ok(s) => failed.push((s.name, "no ground truth".to_string())),
            Err(e) => failed.push((d.display().to_string(), e.to_string())),
        }
    }
    Ok((seqs, failed))
}

/// Anything that can be run through one pass of a sequence.
pub trait OnlineTracker {
    fn init(&mut self, frame: &Frame, bbox: BoundingBox) -> Result<()>;
    fn track(&mut self, frame: &Frame) -> BoundingBox;
}

/// The fusion tracker behind [`OnlineTracker`].
pub struct FusionTracker {
    config: TrackerConfig,
    inner: Option<Tracker>,
}

impl FusionTracker {
    pub fn new(config: TrackerConfig) -> Self {
        Self { config, inner: None }
    }
}

impl OnlineTracker for FusionTracker {
    fn init(&mut self, frame: &Frame, bbox: BoundingBox) -> Result<()> {
        self.inner = Some(Tracker::init(frame, bbox, self.config.clone())?);
        Ok(())
    }

    fn track(&mut self, frame: &Frame) -> BoundingBox {
        self.inner.as_mut().expect("init before track").step(frame)
    }
}

/// One tracked sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub sequence: String,
    pub variant: String,
    pub boxes: Vec<BoundingBox>,
    /// Tracker seconds per frame; the first entry is initialization.
    pub frame_times: Vec<f64>,
    pub config: TrackerConfig,
}

impl RunRecord {
    pub fn total_time(&self) -> f64 {
        self.frame_times.iter().sum()
    }

    pub fn fps(&self) -> f64 {
        self.boxes.len() as f64 / self.total_time()
    }
}

/// Runs `tracker` once through `seq`, initialized on the first ground-truth
/// box. Only tracker calls are timed.
pub fn run_sequence(
    seq: &SequenceSpec,
    tracker: &mut dyn OnlineTracker,
    variant: &str,
    config: &TrackerConfig,
) -> Result<RunRecord> {
    let gt = seq.ground_truth.as_ref().ok_or_else(|| Error::GroundTruthMismatch {
        frames: seq.len(),
        boxes: 0,
    })?;
    if seq.is_empty() || gt.len() != seq.len() {
        return Err(Error::GroundTruthMismatch {
            frames: seq.len(),
            boxes: gt.len(),
        });
    }
    let mut boxes = Vec::with_capacity(seq.len());
    let mut frame_times = Vec::with_capacity(seq.len());
    for i in 0..seq.len() {
        let frame = seq.load_frame(i)?;
        let start = Instant::now();
        let b = if i == 0 {
            tracker.init(&frame, gt[0])?;
            gt[0]
        } else {
            tracker.track(&frame)
        };
        frame_times.push(start.elapsed().as_secs_f64().max(1e-9));
        boxes.push(b);
    }
    Ok(RunRecord {
        sequence: seq.name.clone(),
        variant: variant.to_string(),
        boxes,
        frame_times,
        config: config.clone(),
    })
}

/// Result of a one-pass evaluation over a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct OpeResult {
    pub variant: String,
    pub records: Vec<RunRecord>,
    /// Per-sequence curves, aligned with `records`.
    pub curves: Vec<EvalCurves>,
    /// Mean of the per-sequence curves.
    pub aggregate: EvalCurves,
    /// Total frames over total tracker time.
    pub fps: f64,
    /// Sequences that failed, with the reason.
    pub skipped: Vec<(String, String)>,
}

/// One-pass evaluation with trackers built by `make`. Sequences run in
/// parallel; results keep dataset order.
pub fn run_ope_with<F>(variant: &str, dataset: &[SequenceSpec], config: &TrackerConfig, make: F) -> Result<OpeResult>
where
    F: Fn(&SequenceSpec) -> Box<dyn OnlineTracker> + Sync,
{
    let outcomes: Vec<Result<(RunRecord, EvalCurves)>> = dataset
        .par_iter()
        .map(|seq| {
            let mut tracker = make(seq);
            let record = run_sequence(seq, tracker.as_mut(), variant, config)?;
            let gt = seq.ground_truth.as_deref().unwrap_or_default();
            let curves = compute_curves(&record.boxes, gt)?;
            Ok((record, curves))
        })
        .collect();
    let mut records = Vec::new();
    let mut curves = Vec::new();
    let mut skipped = Vec::new();
    for (seq, outcome) in dataset.iter().zip(outcomes) {
        match outcome {
            Ok((r, c)) => {
                records.push(r);
                curves.push(c);
            }
            Err(e) => skipped.push((seq.name.clone(), e.to_string())),
        }
    }
    let aggregate = EvalCurves::mean(&curves)?;
    let frames: usize = records.iter().map(|r| r.boxes.len()).sum();
    let time: f64 = records.iter().map(|r| r.total_time()).sum();
    Ok(OpeResult {
        variant: variant.to_string(),
        records,
        curves,
        aggregate,
        fps: frames as f64 / time,
        skipped,
    })
}

/// One-pass evaluation of the fusion tracker in `variant` configuration.
pub fn run_ope(variant: Variant, dataset: &[SequenceSpec], config: &TrackerConfig) -> Result<OpeResult> {
    let cfg = configure_variant(config, variant);
    run_ope_with(variant.as_str(), dataset, &cfg, |_| Box::new(FusionTracker::new(cfg.clone())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeEntry {
    pub sequences: Vec<String>,
    pub curves: EvalCurves,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AttributeBreakdown {
    pub entries: BTreeMap<Attribute, AttributeEntry>,
    /// Attributes left out because no sequence carries them.
    pub notes: Vec<String>,
}

/// Aggregate curves over each attribute's subset of sequences.
pub fn attribute_breakdown(result: &OpeResult, dataset: &[SequenceSpec]) -> AttributeBreakdown {
    let mut out = AttributeBreakdown::default();
    for attr in Attribute::ALL {
        let mut names = Vec::new();
        let mut subset = Vec::new();
        for (record, curves) in result.records.iter().zip(&result.curves) {
            let tagged = dataset
                .iter()
                .find(|s| s.name == record.sequence)
                .is_some_and(|s| s.attributes.contains(&attr));
            if tagged {
                names.push(record.sequence.clone());
                subset.push(curves.clone());
            }
        }
        match EvalCurves::mean(&subset) {
            Ok(curves) => {
                out.entries.insert(attr, AttributeEntry { sequences: names, curves });
            }
            Err(_) => out.notes.push(format!("{attr}: no sequences, omitted")),
        }
    }
    out
}
