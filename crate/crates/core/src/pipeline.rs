//! Per-frame orchestration: proposals from the three modules, scoring
//! against the latest and anchor templates, fusion, and template upkeep.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bgmotion::{self, BackgroundParams};
use crate::error::{Error, Result};
use crate::features::{self, FeatureMap, LabelMap, SpatialWeight};
use crate::geometry::{iou, BoundingBox};
use crate::media::{self, Frame, GrayImage};
use crate::strcf::{self, AdmmParams, MuSchedule, ScaleSearch, SearchGeometry, TemplateModel};
use crate::trajectory::TrajectoryBuffer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalSource {
    Appearance,
    Trajectory,
    Background,
}

impl fmt::Display for ProposalSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProposalSource::Appearance => "appearance",
            ProposalSource::Trajectory => "trajectory",
            ProposalSource::Background => "background",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub bbox: BoundingBox,
    pub source: ProposalSource,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Full,
    NoTrajectory,
    NoBackground,
    Baseline,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Full, Variant::NoTrajectory, Variant::NoBackground, Variant::Baseline];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoTrajectory => "no_trajectory",
            Variant::NoBackground => "no_background",
            Variant::Baseline => "baseline",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::UnknownVariant(s.to_string()))
    }
}

/// Every tunable of the tracker under a flat key set. Missing keys take
/// their defaults when loading from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    pub use_trajectory: bool,
    pub use_background: bool,
    /// Pick μ from the chosen proposal; when false μ stays at `mu_appearance`.
    pub adaptive_mu: bool,
    /// Keep the anchor template and the agreement rules.
    pub use_anchor: bool,
    /// The jump override also needs the background proposal to agree.
    pub jump_needs_background: bool,

    pub mu_appearance: f64,
    pub mu_high: f64,
    pub mu_mid: f64,
    pub mu_low: f64,
    pub mu_t_hi: f64,
    pub mu_t_lo: f64,

    pub history: usize,
    pub cut_threshold: f64,
    pub deviation_tolerance: f64,
    pub jump_threshold: f64,
    pub score_margin: f64,
    pub agreement_iou: f64,
    pub same_location_px: f64,
    pub same_location_iou: f64,
    pub min_motion: f64,

    pub scale_step: f64,
    pub scale_levels: usize,
    pub scale_penalty: f64,

    pub admm_iters: usize,
    pub admm_penalty_init: f64,
    pub admm_penalty_growth: f64,
    pub admm_penalty_max: f64,

    /// Search-region area as a multiple of the target area.
    pub padding: f64,
    pub cell_size: usize,
    pub min_sample_side: f64,
    pub max_sample_side: f64,
    pub use_cn: bool,
    pub sigma_factor: f64,
    pub weight_min: f64,
    pub weight_slope: f64,

    pub bg_max_side: usize,
    pub bg_max_points: usize,
    pub bg_nms_radius: f64,
    pub bg_harris_k: f64,
    pub bg_exclusion_padding: f64,
    pub bg_match_radius: usize,
    pub bg_match_patch: usize,
    pub bg_min_ncc: f64,
    pub bg_trim_residual: f64,
    pub bg_candidate_rel: f64,
    pub bg_candidate_floor: f64,
    pub bg_min_area: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        let mu = MuSchedule::default();
        let admm = AdmmParams::default();
        let scales = ScaleSearch::default();
        let bg = BackgroundParams::default();
        Self {
            use_trajectory: true,
            use_background: true,
            adaptive_mu: true,
            use_anchor: true,
            jump_needs_background: true,
            mu_appearance: mu.appearance,
            mu_high: mu.high,
            mu_mid: mu.mid,
            mu_low: mu.low,
            mu_t_hi: mu.t_hi,
            mu_t_lo: mu.t_lo,
            history: 20,
            cut_threshold: 0.1,
            deviation_tolerance: 0.25,
            jump_threshold: 30.0,
            score_margin: 0.05,
            agreement_iou: 0.5,
            same_location_px: 2.0,
            same_location_iou: 0.8,
            min_motion: 0.5,
            scale_step: scales.step,
            scale_levels: scales.levels,
            scale_penalty: scales.penalty,
            admm_iters: admm.iterations,
            admm_penalty_init: admm.penalty_init,
            admm_penalty_growth: admm.penalty_growth,
            admm_penalty_max: admm.penalty_max,
            padding: 5.0,
            cell_size: 4,
            min_sample_side: 150.0,
            max_sample_side: 200.0,
            use_cn: true,
            sigma_factor: 1.0 / 16.0,
            weight_min: 0.1,
            weight_slope: 3.0,
            bg_max_side: bg.max_side,
            bg_max_points: bg.max_points,
            bg_nms_radius: bg.nms_radius,
            bg_harris_k: bg.harris_k,
            bg_exclusion_padding: bg.exclusion_padding,
            bg_match_radius: bg.match_radius,
            bg_match_patch: bg.match_patch,
            bg_min_ncc: bg.min_ncc,
            bg_trim_residual: bg.trim_residual,
            bg_candidate_rel: bg.candidate_rel,
            bg_candidate_floor: bg.candidate_floor,
            bg_min_area: bg.min_area,
        }
    }
}

impl TrackerConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: TrackerConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: TrackerConfig = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(what.to_string()));
        let positive = [
            ("cut_threshold", self.cut_threshold),
            ("deviation_tolerance", self.deviation_tolerance),
            ("jump_threshold", self.jump_threshold),
            ("score_margin", self.score_margin),
            ("agreement_iou", self.agreement_iou),
            ("same_location_px", self.same_location_px),
            ("same_location_iou", self.same_location_iou),
            ("mu_t_hi", self.mu_t_hi),
            ("mu_t_lo", self.mu_t_lo),
            ("scale_step", self.scale_step),
            ("scale_penalty", self.scale_penalty),
            ("admm_penalty_init", self.admm_penalty_init),
            ("admm_penalty_growth", self.admm_penalty_growth),
            ("admm_penalty_max", self.admm_penalty_max),
            ("min_sample_side", self.min_sample_side),
            ("max_sample_side", self.max_sample_side),
            ("sigma_factor", self.sigma_factor),
            ("weight_min", self.weight_min),
            ("bg_nms_radius", self.bg_nms_radius),
            ("bg_trim_residual", self.bg_trim_residual),
            ("bg_candidate_rel", self.bg_candidate_rel),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(name);
            }
        }
        let mus = [self.mu_appearance, self.mu_high, self.mu_mid, self.mu_low];
        if mus.iter().any(|m| !(*m >= 0.0 && m.is_finite())) {
            return bad("mu levels must be finite and non-negative");
        }
        if mus.iter().all(|&m| m == 0.0) {
            return bad("at least one mu level must be non-zero");
        }
        if self.mu_t_lo > self.mu_t_hi {
            return bad("mu_t_lo exceeds mu_t_hi");
        }
        if !(self.min_motion >= 0.0) || !(self.weight_slope >= 0.0) || !(self.bg_candidate_floor >= 0.0) {
            return bad("min_motion, weight_slope and bg_candidate_floor must be non-negative");
        }
        if !(self.cut_threshold < 1.0) {
            return bad("cut_threshold must lie in (0, 1)");
        }
        if self.history < 2 || self.scale_levels == 0 || self.admm_iters == 0 || self.cell_size == 0 {
            return bad("history >= 2, scale_levels, admm_iters and cell_size >= 1");
        }
        if self.padding < 1.0 || self.min_sample_side > self.max_sample_side {
            return bad("padding >= 1 and min_sample_side <= max_sample_side");
        }
        if self.bg_max_points < 3 || self.bg_match_patch % 2 == 0 || self.bg_match_radius == 0 || self.bg_max_side < 16 {
            return bad("background keypoint and matching parameters");
        }
        Ok(())
    }

    pub fn mu_schedule(&self) -> MuSchedule {
        MuSchedule {
            appearance: self.mu_appearance,
            high: self.mu_high,
            mid: self.mu_mid,
            low: self.mu_low,
            t_hi: self.mu_t_hi,
            t_lo: self.mu_t_lo,
        }
    }

    pub fn admm(&self) -> AdmmParams {
        AdmmParams {
            iterations: self.admm_iters,
            penalty_init: self.admm_penalty_init,
            penalty_growth: self.admm_penalty_growth,
            penalty_max: self.admm_penalty_max,
        }
    }

    pub fn scales(&self) -> ScaleSearch {
        ScaleSearch {
            step: self.scale_step,
            levels: self.scale_levels,
            penalty: self.scale_penalty,
        }
    }

    pub fn background(&self) -> BackgroundParams {
        BackgroundParams {
            max_side: self.bg_max_side,
            max_points: self.bg_max_points,
            nms_radius: self.bg_nms_radius,
            harris_k: self.bg_harris_k,
            exclusion_padding: self.bg_exclusion_padding,
            match_radius: self.bg_match_radius,
            match_patch: self.bg_match_patch,
            min_ncc: self.bg_min_ncc,
            trim_residual: self.bg_trim_residual,
            candidate_rel: self.bg_candidate_rel,
            candidate_floor: self.bg_candidate_floor,
            min_area: self.bg_min_area,
        }
    }

    pub fn fusion(&self) -> FusionRules {
        FusionRules {
            score_margin: self.score_margin,
            agreement_iou: self.agreement_iou,
            jump_threshold: self.jump_threshold,
            jump_needs_background: self.jump_needs_background,
        }
    }
}

/// Switches modules on and off for the ablation variants.
pub fn configure_variant(config: &TrackerConfig, variant: Variant) -> TrackerConfig {
    let mut c = config.clone();
    match variant {
        Variant::Full => {
            c.use_trajectory = true;
            c.use_background = true;
            c.adaptive_mu = true;
            c.use_anchor = true;
            c.jump_needs_background = true;
        }
        Variant::NoTrajectory => {
            c.use_trajectory = false;
            c.use_background = true;
            c.adaptive_mu = true;
            c.use_anchor = true;
            c.jump_needs_background = true;
        }
        Variant::NoBackground => {
            c.use_trajectory = true;
            c.use_background = false;
            c.adaptive_mu = true;
            c.use_anchor = true;
            c.jump_needs_background = false;
        }
        Variant::Baseline => {
            c.use_trajectory = false;
            c.use_background = false;
            c.adaptive_mu = false;
            c.use_anchor = false;
            c.jump_needs_background = true;
            c.min_motion = 0.0;
        }
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionRules {
    pub score_margin: f64,
    pub agreement_iou: f64,
    pub jump_threshold: f64,
    pub jump_needs_background: bool,
}

impl Default for FusionRules {
    fn default() -> Self {
        TrackerConfig::default().fusion()
    }
}

/// Highest score wins (ties keep the earlier of appearance, trajectory,
/// background). The trajectory proposal overrides a winning appearance
/// proposal that jumped more than `jump_threshold` pixels when its score
/// is within `score_margin` and it overlaps the background proposal.
pub fn fuse(
    app: Option<&Proposal>,
    trj: Option<&Proposal>,
    bgd: Option<&Proposal>,
    last_box: &BoundingBox,
    rules: &FusionRules,
) -> Option<Proposal> {
    let best = [app, trj, bgd]
        .into_iter()
        .flatten()
        .fold(None::<&Proposal>, |best, p| match best {
            Some(b) if p.score <= b.score => Some(b),
            _ => Some(p),
        })?;
    if let (Some(a), Some(t)) = (app, trj) {
        if best.source == ProposalSource::Appearance {
            let close = t.score >= a.score - rules.score_margin;
            let jumped = a.bbox.center_distance(last_box) > rules.jump_threshold;
            let agrees = match bgd {
                Some(b) => iou(&t.bbox, &b.bbox) >= rules.agreement_iou,
                None => !rules.jump_needs_background,
            };
            if close && jumped && agrees {
                return Some(*t);
            }
        }
    }
    Some(*best)
}

/// All present proposals share one location: centers within `tol_px` and
/// pairwise IoU at least `min_iou`. Needs at least two proposals.
pub fn proposals_agree(props: &[&Proposal], tol_px: f64, min_iou: f64) -> bool {
    if props.len() < 2 {
        return false;
    }
    for (i, a) in props.iter().enumerate() {
        for b in &props[i + 1..] {
            if a.bbox.center_distance(&b.bbox) > tol_px || iou(&a.bbox, &b.bbox) < min_iou {
                return false;
            }
        }
    }
    true
}

/// Zero-displacement response of `model` at `bbox`, normalized by
/// `reference`, the self-response peak of the first-frame template, so the
/// latest and anchor templates score in the same units.
pub fn score_proposal(
    model: &TemplateModel,
    geometry: &SearchGeometry,
    frame: &Frame,
    bbox: &BoundingBox,
    reference: f64,
) -> Result<f64> {
    strcf::score_box(model, geometry, frame, bbox, reference)
}

/// One anchor replacement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorEvent {
    /// Frame whose step made the change.
    pub frame: usize,
    pub previous_anchor: usize,
    pub new_anchor: usize,
}

/// What a step saw and decided.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub frame: usize,
    pub bbox: BoundingBox,
    pub chosen: Option<ProposalSource>,
    pub proposals: Vec<Proposal>,
    pub agreement: bool,
    pub mu: f64,
    pub updated: bool,
    pub anchor_updated: bool,
    /// Module failures, as display strings.
    pub failures: Vec<String>,
}

/// Per-sequence tracker state.
#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    geometry: SearchGeometry,
    weight: SpatialWeight,
    label: LabelMap,
    latest: Arc<TemplateModel>,
    anchor: Arc<TemplateModel>,
    anchor_frame: usize,
    reference_peak: f64,
    trajectory: TrajectoryBuffer,
    last_box: BoundingBox,
    last_update_box: BoundingBox,
    prev_work: Option<GrayImage>,
    frame_index: usize,
    frame_size: (usize, usize),
    anchor_log: Vec<AnchorEvent>,
}

impl Tracker {
    /// Trains the first template at `bbox` with no temporal term.
    pub fn init(frame: &Frame, bbox: BoundingBox, config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        if !bbox.is_valid() || bbox.w < 1.0 || bbox.h < 1.0 {
            return Err(Error::DegenerateBox { w: bbox.w, h: bbox.h });
        }
        let geometry = SearchGeometry::new(
            &bbox,
            config.padding,
            config.cell_size,
            config.min_sample_side.powi(2),
            config.max_sample_side.powi(2),
            config.use_cn,
        )?;
        let n = geometry.cells();
        let target = geometry.target_cells();
        let weight = features::spatial_weight(n, n, target, config.weight_min, config.weight_slope);
        let label = features::gaussian_label(n, n, config.sigma_factor, target);
        let x = geometry.features(frame, bbox.cx, bbox.cy, 1.0)?;
        let model = Arc::new(strcf::train_template(&x, None, &weight, &label, 0.0, &config.admm(), frame.index)?);
        let reference_peak = model.self_peak;
        let mut trajectory = TrajectoryBuffer::new(config.history);
        trajectory.push(bbox);
        let prev_work = config.use_background.then(|| working_gray(frame, config.bg_max_side).0);
        Ok(Self {
            geometry,
            weight,
            label,
            anchor: Arc::clone(&model),
            latest: model,
            anchor_frame: frame.index,
            reference_peak,
            trajectory,
            last_box: bbox,
            last_update_box: bbox,
            prev_work,
            frame_index: frame.index,
            frame_size: (frame.width, frame.height),
            anchor_log: Vec::new(),
            config,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn geometry(&self) -> &SearchGeometry {
        &self.geometry
    }

    pub fn latest_model(&self) -> &TemplateModel {
        &self.latest
    }

    pub fn anchor_model(&self) -> &TemplateModel {
        &self.anchor
    }

    pub fn anchor_frame(&self) -> usize {
        self.anchor_frame
    }

    pub fn anchor_log(&self) -> &[AnchorEvent] {
        &self.anchor_log
    }

    pub fn trajectory(&self) -> &TrajectoryBuffer {
        &self.trajectory
    }

    pub fn last_box(&self) -> BoundingBox {
        self.last_box
    }

    /// Score of `bbox` in `frame` under the latest template.
    pub fn score(&self, frame: &Frame, bbox: &BoundingBox) -> Result<f64> {
        score_proposal(&self.latest, &self.geometry, frame, bbox, self.reference_peak)
    }

    /// Self-response peak of the first-frame template.
    pub fn reference_peak(&self) -> f64 {
        self.reference_peak
    }

    /// Tracks into `frame` and returns the chosen box.
    pub fn step(&mut self, frame: &Frame) -> BoundingBox {
        self.step_report(frame).bbox
    }

    pub fn step_report(&mut self, frame: &Frame) -> StepReport {
        let t = frame.index;
        let cfg = &self.config;
        let mut failures = Vec::new();
        let mut extracted: Vec<(BoundingBox, FeatureMap)> = Vec::new();

        let app = strcf::propose_appearance(&self.latest, &self.geometry, frame, &self.last_box, &cfg.scales())
            .and_then(|p| strcf::refine_proposal(&self.latest, &self.geometry, frame, &p, self.reference_peak));
        let app = keep(app, "appearance", &mut failures);

        let trj = if cfg.use_trajectory {
            let bbox = self.trajectory.predict_box().unwrap_or(self.last_box);
            let bbox = self.sanitize(bbox);
            let scored = self.extract(frame, &bbox).and_then(|z| {
                let score = strcf::score_features(&self.latest, &z, self.reference_peak)?;
                extracted.push((bbox, z));
                Ok(Proposal {
                    bbox,
                    source: ProposalSource::Trajectory,
                    score,
                })
            });
            keep(scored, "trajectory", &mut failures)
        } else {
            None
        };

        let bgd = if cfg.use_background {
            let (work, scale) = working_gray(frame, cfg.bg_max_side);
            let result = match &self.prev_work {
                Some(prev) if prev.width == work.width && prev.height == work.height => {
                    self.background_proposal(prev, &work, scale, frame, &mut extracted)
                }
                _ => Err(Error::DimensionMismatch("no previous frame at working size".into())),
            };
            self.prev_work = Some(work);
            keep(result, "background", &mut failures).flatten()
        } else {
            None
        };

        let cfg = &self.config;
        let chosen = fuse(app.as_ref(), trj.as_ref(), bgd.as_ref(), &self.last_box, &cfg.fusion());
        let present: Vec<&Proposal> = [app.as_ref(), trj.as_ref(), bgd.as_ref()].into_iter().flatten().collect();
        let enabled = 1 + cfg.use_trajectory as usize + cfg.use_background as usize;
        let agreement = cfg.use_anchor
            && present.len() == enabled
            && proposals_agree(&present, cfg.same_location_px, cfg.same_location_iou);

        let mut anchor_updated = false;
        if agreement {
            let previous = self.anchor_frame;
            self.anchor = Arc::clone(&self.latest);
            self.anchor_frame = t.saturating_sub(1);
            self.anchor_log.push(AnchorEvent {
                frame: t,
                previous_anchor: previous,
                new_anchor: self.anchor_frame,
            });
            anchor_updated = true;
        }

        let schedule = cfg.mu_schedule();
        let bbox = chosen.map_or(self.last_box, |p| self.sanitize(p.bbox));
        let mu = match chosen {
            _ if !cfg.adaptive_mu => schedule.appearance,
            _ if agreement => schedule.smallest_nonzero(),
            Some(p) => strcf::adaptive_mu(p.source, p.score.max(0.0), &schedule),
            None => schedule.appearance,
        };

        let mut updated = false;
        if chosen.is_some() && strcf::should_update(bbox.center_distance(&self.last_update_box), cfg.min_motion) {
            let cached = extracted.iter().position(|(b, _)| *b == bbox).map(|i| extracted.swap_remove(i).1);
            let retrained = cached.map_or_else(|| self.extract(frame, &bbox), Ok).and_then(|x| {
                strcf::train_template(&x, Some(&self.latest), &self.weight, &self.label, mu, &self.config.admm(), t)
            });
            match retrained {
                Ok(m) => {
                    self.latest = Arc::new(m);
                    self.last_update_box = bbox;
                    updated = true;
                }
                Err(e) => failures.push(format!("update: {e}")),
            }
        }

        self.trajectory.push(bbox);
        self.last_box = bbox;
        self.frame_index = t;
        StepReport {
            frame: t,
            bbox,
            chosen: chosen.map(|p| p.source),
            proposals: present.into_iter().copied().collect(),
            agreement,
            mu,
            updated,
            anchor_updated,
            failures,
        }
    }

    fn background_proposal(
        &self,
        prev: &GrayImage,
        curr: &GrayImage,
        scale: f64,
        frame: &Frame,
        extracted: &mut Vec<(BoundingBox, FeatureMap)>,
    ) -> Result<Option<Proposal>> {
        let params = self.config.background();
        let analysis = bgmotion::analyze_working(prev, curr, &self.last_box.scaled_about_origin(scale), scale, &params)?;
        let Some(cand) = bgmotion::propose_background(&analysis.dmap, &params) else {
            return Ok(None);
        };
        let center = cand.bbox.scaled_about_origin(1.0 / scale);
        let size = bgmotion::estimate_shape(&analysis.dmap, &cand.bbox, self.config.cut_threshold)
            .ok()
            .map(|s| bgmotion::ShapeEstimate {
                width: s.width / scale,
                height: s.height / scale,
                x_min: s.x_min / scale,
                x_max: s.x_max / scale,
                y_min: s.y_min / scale,
                y_max: s.y_max / scale,
            })
            .filter(|s| !self.trajectory.reject_deviation(s, self.config.deviation_tolerance))
            .map_or((self.last_box.w, self.last_box.h), |s| (s.width, s.height));
        let bbox = self.sanitize(center.with_size(size.0, size.1));
        let z = self.extract(frame, &bbox)?;
        let score = strcf::score_features(&self.anchor, &z, self.reference_peak)?;
        extracted.push((bbox, z));
        Ok(Some(Proposal {
            bbox,
            source: ProposalSource::Background,
            score,
        }))
    }

    fn extract(&self, frame: &Frame, bbox: &BoundingBox) -> Result<FeatureMap> {
        self.geometry.features(frame, bbox.cx, bbox.cy, self.geometry.scale_of(bbox))
    }

    /// Keeps the center inside the frame and the size within `[2, frame]`.
    fn sanitize(&self, b: BoundingBox) -> BoundingBox {
        let (fw, fh) = (self.frame_size.0 as f64, self.frame_size.1 as f64);
        let fix = |v: f64, fallback: f64| if v.is_finite() { v } else { fallback };
        BoundingBox::new(
            fix(b.cx, self.last_box.cx).clamp(0.0, fw),
            fix(b.cy, self.last_box.cy).clamp(0.0, fh),
            fix(b.w, self.last_box.w).clamp(2.0, fw.max(2.0)),
            fix(b.h, self.last_box.h).clamp(2.0, fh.max(2.0)),
        )
    }
}

fn keep<T>(r: Result<T>, module: &str, failures: &mut Vec<String>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(e) => {
            failures.push(format!("{module}: {e}"));
            None
        }
    }
}

fn working_gray(frame: &Frame, max_side: usize) -> (GrayImage, f64) {
    let scale = bgmotion::working_scale(frame.width, frame.height, max_side);
    (bgmotion::downsample(&media::to_grayscale(frame), scale), scale)
}
