use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use fusiontrack::eval::{self, SynthSpec};
use fusiontrack::media::{self, serialize_groundtruth};
use fusiontrack::pipeline::configure_variant;
use fusiontrack::{Tracker, TrackerConfig, Variant};

#[derive(Parser)]
#[command(name = "fusiontrack", version, about = "Unsupervised single-object tracking and one-pass evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track one OTB-layout sequence from its first ground-truth box.
    Track {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long, default_value = "full")]
        variant: Variant,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output boxes, one `x,y,w,h` line per frame.
        #[arg(long)]
        out: PathBuf,
        /// Initial box `x,y,w,h` when the sequence has no ground truth.
        #[arg(long)]
        init: Option<String>,
    },
    /// One-pass evaluation over every sequence directory in a dataset.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "full")]
        variant: Variant,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render synthetic sequences in OTB layout.
    Synth {
        /// JSON or TOML sequence description.
        #[arg(long, required_unless_present = "suite", conflicts_with = "suite")]
        spec: Option<PathBuf>,
        /// Write the built-in desk-scale suite, one subdirectory per sequence.
        #[arg(long)]
        suite: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<TrackerConfig> {
    match path {
        Some(p) => TrackerConfig::load(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(TrackerConfig::default()),
    }
}

fn track(seq: &Path, variant: Variant, config: Option<&Path>, out: &Path, init: Option<&str>) -> Result<()> {
    let spec = media::load_sequence(seq).with_context(|| format!("loading sequence {}", seq.display()))?;
    let cfg = configure_variant(&load_config(config)?, variant);
    let first = match (init, &spec.ground_truth) {
        (Some(text), _) => *media::parse_groundtruth(text)
            .context("parsing --init")?
            .first()
            .context("--init needs x,y,w,h")?,
        (None, Some(gt)) => gt[0],
        (None, None) => bail!("{} has no ground truth; pass --init x,y,w,h", seq.display()),
    };
    let frame = spec.load_frame(0)?;
    let mut tracker = Tracker::init(&frame, first, cfg)?;
    let mut boxes = vec![first];
    for i in 1..spec.len() {
        let frame = spec.load_frame(i)?;
        boxes.push(tracker.step(&frame));
    }
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(out, serialize_groundtruth(&boxes)).with_context(|| format!("writing {}", out.display()))?;
    match &spec.ground_truth {
        Some(gt) => {
            let c = eval::compute_curves(&boxes, gt)?;
            println!("{}: {} frames, dp20 {:.3}, auc {:.3}", spec.name, boxes.len(), c.dp20, c.auc);
        }
        None => println!("{}: {} frames", spec.name, boxes.len()),
    }
    Ok(())
}

fn evaluate(dataset: &Path, variant: Variant, config: Option<&Path>, out: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let (seqs, failed) = eval::load_dataset(dataset).with_context(|| format!("reading dataset {}", dataset.display()))?;
    for (name, why) in &failed {
        eprintln!("skipping {name}: {why}");
    }
    if seqs.is_empty() {
        bail!("no usable sequences under {}", dataset.display());
    }
    let mut result = eval::run_ope(variant, &seqs, &cfg)?;
    result.skipped.extend(failed);
    let breakdown = eval::attribute_breakdown(&result, &seqs);
    eval::emit_report(&result, &breakdown, out)?;
    for (r, c) in result.records.iter().zip(&result.curves) {
        println!("{:<24} dp20 {:.3}  auc {:.3}  fps {:.1}", r.sequence, c.dp20, c.auc, r.fps());
    }
    println!(
        "{variant}: {} sequences, dp20 {:.3}, auc {:.3}, {:.1} fps",
        result.records.len(),
        result.aggregate.dp20,
        result.aggregate.auc,
        result.fps
    );
    for note in &breakdown.notes {
        eprintln!("{note}");
    }
    Ok(())
}

fn synth(spec: Option<&Path>, suite: bool, out: &Path) -> Result<()> {
    if suite {
        for s in eval::synthetic_suite() {
            let dir = out.join(&s.name);
            let seq = eval::generate_synthetic(&s)?;
            eval::write_sequence(&seq, &dir)?;
            println!("wrote {} ({} frames)", dir.display(), seq.frames.len());
        }
        return Ok(());
    }
    let path = spec.context("--spec is required")?;
    let s = SynthSpec::load(path)?;
    let seq = eval::generate_synthetic(&s)?;
    eval::write_sequence(&seq, out)?;
    println!("wrote {} ({} frames)", out.display(), seq.frames.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Track {
            seq,
            variant,
            config,
            out,
            init,
        } => track(seq, *variant, config.as_deref(), out, init.as_deref()),
        Command::Eval {
            dataset,
            variant,
            config,
            out,
        } => evaluate(dataset, *variant, config.as_deref(), out),
        Command::Synth { spec, suite, out } => synth(spec.as_deref(), *suite, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
