//! Tracks the built-in synthetic suite in memory and prints per-sequence
//! metrics for each variant. Pass `-v` for per-frame decisions.

use std::time::Instant;

use fusiontrack::eval::{compute_curves, generate_synthetic, synthetic_suite};
use fusiontrack::geometry::iou;
use fusiontrack::pipeline::configure_variant;
use fusiontrack::{Tracker, TrackerConfig, Variant};

fn main() -> fusiontrack::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let verbose = args.iter().any(|a| a == "-v");
    let only: Vec<&String> = args.iter().filter(|a| !a.starts_with('-')).collect();
    for spec in synthetic_suite() {
        if !only.is_empty() && !only.iter().any(|n| **n == spec.name) {
            continue;
        }
        let seq = generate_synthetic(&spec)?;
        for variant in Variant::ALL {
            let cfg = configure_variant(&TrackerConfig::default(), variant);
            let start = Instant::now();
            let mut tracker = Tracker::init(&seq.frames[0], seq.ground_truth[0], cfg)?;
            let mut boxes = vec![seq.ground_truth[0]];
            for (f, gt) in seq.frames.iter().zip(&seq.ground_truth).skip(1) {
                let r = tracker.step_report(f);
                if verbose {
                    let props: Vec<String> = r
                        .proposals
                        .iter()
                        .map(|p| format!("{}:{:.2}@({:.0},{:.0})", &p.source.to_string()[..3], p.score, p.bbox.cx, p.bbox.cy))
                        .collect();
                    println!(
                        "{variant:>13} {:3} iou {:.2} wh ({:.0},{:.0}) gt ({:.0},{:.0}) chosen {:?} mu {} upd {} agree {} {} {:?}",
                        r.frame,
                        iou(&r.bbox, gt),
                        r.bbox.w,
                        r.bbox.h,
                        gt.cx,
                        gt.cy,
                        r.chosen.map(|c| c.to_string()),
                        r.mu,
                        r.updated as u8,
                        r.agreement as u8,
                        props.join(" "),
                        r.failures
                    );
                }
                boxes.push(r.bbox);
            }
            let secs = start.elapsed().as_secs_f64();
            let c = compute_curves(&boxes, &seq.ground_truth)?;
            let mean_iou: f64 =
                boxes.iter().zip(&seq.ground_truth).map(|(b, g)| iou(b, g)).sum::<f64>() / boxes.len() as f64;
            println!(
                "{:<18} {:<13} dp20 {:.3} auc {:.3} mean_iou {:.3} fps {:.1}",
                spec.name,
                variant.as_str(),
                c.dp20,
                c.auc,
                mean_iou,
                boxes.len() as f64 / secs
            );
        }
    }
    Ok(())
}
