use std::collections::BTreeSet;

use fusiontrack::bgmotion::{self, AffineModel, BackgroundParams, Correspondence};
use fusiontrack::eval::{
    self, attribute_breakdown, compute_curves, generate_synthetic, run_ope_with, synthetic_suite, write_sequence,
    EvalCurves, MotionSegment, ObjectSpec, OnlineTracker, SynthSpec,
};
use fusiontrack::geometry::{center_error, iou, BoundingBox};
use fusiontrack::media::{self, to_grayscale, Attribute, SequenceSpec};
use fusiontrack::{Error, Frame, Result, TrackerConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn naive_curves(pred: &[BoundingBox], gt: &[BoundingBox]) -> (Vec<f64>, Vec<f64>) {
    let n = pred.len() as f64;
    let mut precision = Vec::new();
    for t in 0..=50 {
        let mut hits = 0;
        for i in 0..pred.len() {
            let d = ((pred[i].cx - gt[i].cx).powi(2) + (pred[i].cy - gt[i].cy).powi(2)).sqrt();
            if d <= t as f64 {
                hits += 1;
            }
        }
        precision.push(hits as f64 / n);
    }
    let mut success = Vec::new();
    for k in 0..=20 {
        let mut hits = 0;
        for i in 0..pred.len() {
            let (a, b) = (&pred[i], &gt[i]);
            let iw = (a.right().min(b.right()) - a.left().max(b.left())).max(0.0);
            let ih = (a.bottom().min(b.bottom()) - a.top().max(b.top())).max(0.0);
            let inter = iw * ih;
            let o = inter / (a.w * a.h + b.w * b.h - inter);
            if o > k as f64 / 20.0 {
                hits += 1;
            }
        }
        success.push(hits as f64 / n);
    }
    (precision, success)
}

fn random_trace(rng: &mut ChaCha8Rng) -> (Vec<BoundingBox>, Vec<BoundingBox>) {
    let n = rng.random_range(1..80);
    let gt: Vec<BoundingBox> = (0..n)
        .map(|_| BoundingBox::new(rng.random_range(0.0..300.0), rng.random_range(0.0..300.0), rng.random_range(5.0..60.0), rng.random_range(5.0..60.0)))
        .collect();
    let pred = gt
        .iter()
        .map(|g| {
            // integer offsets land exactly on thresholds now and then
            let (dx, dy) = if rng.random_bool(0.3) {
                (rng.random_range(-30i32..30) as f64, 0.0)
            } else {
                (rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0))
            };
            BoundingBox::new(g.cx + dx, g.cy + dy, g.w * rng.random_range(0.5..2.0), g.h * rng.random_range(0.5..2.0))
        })
        .collect();
    (pred, gt)
}

#[test]
fn curves_equal_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..50 {
        let (pred, gt) = random_trace(&mut rng);
        let c = compute_curves(&pred, &gt).unwrap();
        let (p, s) = naive_curves(&pred, &gt);
        assert_eq!(c.precision, p);
        assert_eq!(c.success, s);
        assert_eq!(c.dp20, p[20]);
        assert_eq!(c.auc, s.iter().sum::<f64>() / 21.0);
    }
}

#[test]
fn metric_examples() {
    let a = BoundingBox::from_top_left(0.0, 0.0, 1.0, 1.0);
    let b = BoundingBox::from_top_left(0.5, 0.0, 1.0, 1.0);
    assert!((iou(&a, &b) - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(iou(&a, &a), 1.0);
    assert_eq!(iou(&a, &a.translated(5.0, 0.0)), 0.0);
    let c = BoundingBox::new(3.0, 4.0, 2.0, 2.0);
    let o = BoundingBox::new(0.0, 0.0, 2.0, 2.0);
    assert_eq!(center_error(&c, &o), 5.0);
    assert_eq!(center_error(&o, &c), 5.0);

    let gt: Vec<BoundingBox> = (0..12).map(|i| BoundingBox::new(10.0 * i as f64, 50.0, 20.0, 20.0)).collect();
    let perfect = compute_curves(&gt, &gt).unwrap();
    assert_eq!(perfect.dp20, 1.0);
    assert_eq!(perfect.auc, 20.0 / 21.0);
    let half: Vec<BoundingBox> = gt
        .iter()
        .enumerate()
        .map(|(i, g)| if i % 2 == 0 { *g } else { g.translated(200.0, 0.0) })
        .collect();
    let c = compute_curves(&half, &gt).unwrap();
    assert_eq!(c.dp20, 0.5);
    assert!((c.auc - 10.0 / 21.0).abs() < 1e-15);
    assert!(matches!(compute_curves(&gt[..3], &gt), Err(Error::LengthMismatch { pred: 3, gt: 12 })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn curves_are_monotone_and_bounded(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (pred, gt) = random_trace(&mut rng);
        let c = compute_curves(&pred, &gt).unwrap();
        prop_assert!(c.precision.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(c.success.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(c.precision.iter().chain(&c.success).all(|v| (0.0..=1.0).contains(v)));
    }
}

struct Echo {
    boxes: Vec<BoundingBox>,
    t: usize,
}

impl OnlineTracker for Echo {
    fn init(&mut self, _frame: &Frame, _bbox: BoundingBox) -> Result<()> {
        self.t = 0;
        Ok(())
    }

    fn track(&mut self, _frame: &Frame) -> BoundingBox {
        self.t += 1;
        self.boxes[self.t]
    }
}

struct Static(Option<BoundingBox>);

impl OnlineTracker for Static {
    fn init(&mut self, _frame: &Frame, bbox: BoundingBox) -> Result<()> {
        self.0 = Some(bbox);
        Ok(())
    }

    fn track(&mut self, _frame: &Frame) -> BoundingBox {
        self.0.unwrap()
    }
}

fn tiny_spec(name: &str, vx: f64, attributes: &[Attribute]) -> SynthSpec {
    SynthSpec {
        name: name.into(),
        frames: 20,
        width: 96,
        height: 72,
        object: ObjectSpec {
            cx: 24.0,
            cy: 36.0,
            w: 12.0,
            h: 12.0,
            block: 3.0,
        },
        motion: vec![MotionSegment {
            frames: 19,
            vx,
            ..MotionSegment::default()
        }],
        seed: 1,
        attributes: attributes.iter().copied().collect(),
        ..SynthSpec::default()
    }
}

fn tiny_dataset(dir: &TempDir, specs: &[SynthSpec]) -> Vec<SequenceSpec> {
    specs
        .iter()
        .map(|s| write_sequence(&generate_synthetic(s).unwrap(), &dir.path().join(&s.name)).unwrap())
        .collect()
}

fn echo(seq: &SequenceSpec) -> Box<dyn OnlineTracker> {
    Box::new(Echo {
        boxes: seq.ground_truth.clone().unwrap(),
        t: 0,
    })
}

#[test]
fn oracle_and_static_trackers() {
    let dir = TempDir::new().unwrap();
    let data = tiny_dataset(&dir, &[tiny_spec("slow", 1.5, &[]), tiny_spec("fast", 3.0, &[])]);
    let cfg = TrackerConfig::default();
    let oracle = run_ope_with("oracle", &data, &cfg, echo).unwrap();
    assert_eq!(oracle.aggregate.dp20, 1.0);
    assert_eq!(oracle.records.len(), 2);
    assert!(oracle.records.iter().all(|r| r.frame_times.iter().all(|&t| t > 0.0)));

    let stat = run_ope_with("static", &data, &cfg, |_| Box::new(Static(None))).unwrap();
    let (slow, fast) = (&stat.curves[0], &stat.curves[1]);
    assert!(slow.dp20 < 1.0 && fast.dp20 < slow.dp20);
    for (seq, c) in data.iter().zip(&stat.curves) {
        let gt = seq.ground_truth.as_ref().unwrap();
        let trace = vec![gt[0]; gt.len()];
        assert_eq!(*c, compute_curves(&trace, gt).unwrap());
    }
    let mean = EvalCurves::mean(&stat.curves).unwrap();
    for k in 0..51 {
        assert_eq!(mean.precision[k], (slow.precision[k] + fast.precision[k]) / 2.0);
    }
    assert_eq!(stat.aggregate, mean);
}

#[test]
fn aggregate_ignores_sequence_order() {
    let dir = TempDir::new().unwrap();
    let data = tiny_dataset(&dir, &[tiny_spec("a", 1.0, &[]), tiny_spec("b", 2.0, &[]), tiny_spec("c", 3.0, &[])]);
    let cfg = TrackerConfig::default();
    let forward = run_ope_with("static", &data, &cfg, |_| Box::new(Static(None))).unwrap();
    let mut rev = data.clone();
    rev.reverse();
    let backward = run_ope_with("static", &rev, &cfg, |_| Box::new(Static(None))).unwrap();
    for (a, b) in forward.aggregate.precision.iter().zip(&backward.aggregate.precision) {
        assert!((a - b).abs() < 1e-15);
    }
    for (a, b) in forward.aggregate.success.iter().zip(&backward.aggregate.success) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn unloadable_sequences_are_skipped() {
    let dir = TempDir::new().unwrap();
    let mut data = tiny_dataset(&dir, &[tiny_spec("ok", 1.0, &[])]);
    let mut broken = data[0].clone();
    broken.name = "broken".into();
    broken.frame_paths[3] = dir.path().join("missing.png");
    data.push(broken);
    let r = run_ope_with("oracle", &data, &TrackerConfig::default(), echo).unwrap();
    assert_eq!(r.records.len(), 1);
    assert_eq!(r.skipped.len(), 1);
    assert_eq!(r.skipped[0].0, "broken");

    data.remove(0);
    assert!(matches!(
        run_ope_with("oracle", &data, &TrackerConfig::default(), echo),
        Err(Error::EmptyDataset)
    ));
}

#[test]
fn attribute_subsets() {
    let dir = TempDir::new().unwrap();
    let data = tiny_dataset(
        &dir,
        &[tiny_spec("a", 1.0, &[Attribute::DEF]), tiny_spec("b", 3.0, &[Attribute::DEF, Attribute::SV])],
    );
    let r = run_ope_with("static", &data, &TrackerConfig::default(), |_| Box::new(Static(None))).unwrap();
    let bd = attribute_breakdown(&r, &data);
    assert_eq!(bd.entries.len(), 2);
    assert_eq!(bd.entries[&Attribute::DEF].curves, r.aggregate);
    assert_eq!(bd.entries[&Attribute::SV].sequences, vec!["b".to_string()]);
    assert_eq!(bd.entries[&Attribute::SV].curves, r.curves[1]);
    assert_eq!(bd.notes.len(), 9);

    let other = TempDir::new().unwrap();
    let untagged = tiny_dataset(&other, &[tiny_spec("u", 1.0, &[])]);
    let r = run_ope_with("static", &untagged, &TrackerConfig::default(), |_| Box::new(Static(None))).unwrap();
    let bd = attribute_breakdown(&r, &untagged);
    assert!(bd.entries.is_empty());
    assert_eq!(bd.notes.len(), 11);
}

#[test]
fn synthetic_ground_truth_is_exact() {
    let spec = SynthSpec {
        frames: 50,
        motion: vec![MotionSegment {
            frames: 49,
            vx: 2.0,
            ..MotionSegment::default()
        }],
        ..SynthSpec::default()
    };
    let seq = generate_synthetic(&spec).unwrap();
    assert_eq!(seq.frames.len(), 50);
    for (t, b) in seq.ground_truth.iter().enumerate() {
        assert_eq!(b.cx, spec.object.cx + 2.0 * t as f64);
        assert_eq!(b.cy, spec.object.cy);
    }
    let c = compute_curves(&seq.ground_truth, &seq.ground_truth).unwrap();
    assert_eq!(c.dp20, 1.0);
    for s in synthetic_suite() {
        let gt = s.trajectory();
        assert_eq!(gt.len(), s.frames);
        assert_eq!(compute_curves(&gt, &gt).unwrap().dp20, 1.0);
    }
}

#[test]
fn synthetic_rendering_is_seeded() {
    let spec = SynthSpec {
        frames: 4,
        noise: 0.02,
        ..tiny_spec("n", 1.0, &[])
    };
    let a = generate_synthetic(&spec).unwrap();
    let b = generate_synthetic(&spec).unwrap();
    assert_eq!(a, b);
    let c = generate_synthetic(&SynthSpec { seed: 2, ..spec }).unwrap();
    assert_ne!(a.frames[0].pixels, c.frames[0].pixels);
}

#[test]
fn infeasible_specs_are_rejected() {
    let runaway = SynthSpec {
        frames: 40,
        ..tiny_spec("x", 5.0, &[])
    };
    assert!(matches!(generate_synthetic(&runaway), Err(Error::SpecInfeasible(_))));
    let degenerate = SynthSpec {
        camera: AffineModel {
            a1: 0.0,
            b2: 0.0,
            ..AffineModel::identity()
        },
        ..tiny_spec("y", 1.0, &[])
    };
    assert!(matches!(generate_synthetic(&degenerate), Err(Error::SpecInfeasible(_))));
}

#[test]
fn camera_pan_background_fits_the_spec_model() {
    let spec = synthetic_suite().into_iter().find(|s| s.name == "camera_pan").unwrap();
    let seq = generate_synthetic(&SynthSpec { frames: 5, ..spec.clone() }).unwrap();
    let params = BackgroundParams {
        max_side: 640,
        ..BackgroundParams::default()
    };
    for t in 1..seq.frames.len() {
        let prev = to_grayscale(&seq.frames[t - 1]);
        let curr = to_grayscale(&seq.frames[t]);
        let exclusion = seq.ground_truth[t - 1].scaled(1.5);
        let kps = bgmotion::detect_keypoints(&prev, 100, Some(&exclusion), &params).unwrap();
        let pairs = bgmotion::match_points(&prev, &curr, &kps, 8, 9, 0.6).unwrap();
        let pairs: Vec<Correspondence> = pairs
            .into_iter()
            .filter(|p| !seq.ground_truth[t].scaled(1.5).contains(p.dst.0, p.dst.1))
            .collect();
        let fit = bgmotion::fit_affine(&pairs, 3.0).unwrap();
        let mean: f64 = pairs
            .iter()
            .map(|p| {
                let (a, b) = (fit.model.apply(p.src.0, p.src.1), spec.camera.apply(p.src.0, p.src.1));
                ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
            })
            .sum::<f64>()
            / pairs.len() as f64;
        assert!(mean < 0.5, "frame {t}: {mean} px from the camera model");
    }
}

#[test]
fn report_files_round_trip() {
    let dir = TempDir::new().unwrap();
    let data = tiny_dataset(&dir, &[tiny_spec("a", 1.0, &[Attribute::FM]), tiny_spec("b", 2.0, &[])]);
    let r = run_ope_with("static", &data, &TrackerConfig::default(), |_| Box::new(Static(None))).unwrap();
    let bd = attribute_breakdown(&r, &data);
    let out = dir.path().join("report");
    let written = eval::emit_report(&r, &bd, &out).unwrap();
    let loaded = eval::load_results(&out.join("results.json")).unwrap();
    assert_eq!(loaded, written);
    assert_eq!(loaded.aggregate, r.aggregate);
    for (s, c) in loaded.sequences.iter().zip(&r.curves) {
        assert_eq!(s.curves, *c);
    }

    let mut csv = csv::Reader::from_path(out.join("summary.csv")).unwrap();
    assert_eq!(csv.headers().unwrap().len(), 5);
    assert_eq!(csv.records().count(), 2);
    let raw = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(raw.lines().count(), 3);

    for name in ["precision.svg", "success.svg"] {
        let text = std::fs::read_to_string(out.join(name)).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap();
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        assert!(text.contains("static ["));
    }
}

#[test]
fn sequences_load_from_disk() {
    let dir = TempDir::new().unwrap();
    let seq = generate_synthetic(&tiny_spec("disk", 1.0, &[Attribute::OCC, Attribute::IV])).unwrap();
    let root = dir.path().join("disk");
    let spec = write_sequence(&seq, &root).unwrap();
    assert_eq!(spec.name, "disk");
    assert_eq!(spec.len(), 20);
    assert_eq!(spec.attributes, [Attribute::OCC, Attribute::IV].into_iter().collect::<BTreeSet<_>>());
    let gt = spec.ground_truth.as_ref().unwrap();
    for (a, b) in gt.iter().zip(&seq.ground_truth) {
        assert!((a.cx - b.cx).abs() < 1e-9 && (a.w - b.w).abs() < 1e-9);
    }
    assert_eq!(spec.load_frame(7).unwrap().pixels, seq.frames[7].pixels);

    let (all, failed) = eval::load_dataset(dir.path()).unwrap();
    assert_eq!(all.len(), 1);
    assert!(failed.is_empty());

    std::fs::write(root.join(media::GROUNDTRUTH_FILE), "1,2,3,4\n").unwrap();
    assert!(matches!(
        media::load_sequence(&root),
        Err(Error::GroundTruthMismatch { frames: 20, boxes: 1 })
    ));
    std::fs::create_dir_all(dir.path().join("empty/img")).unwrap();
    assert!(matches!(media::load_sequence(&dir.path().join("empty")), Err(Error::MissingImages(_))));
}
