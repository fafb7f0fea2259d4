//! Spatial-temporal regularized correlation filter.
//!
//! The template minimizes
//!
//! ```text
//! 1/2 |sum_d x_d (*) f_d - y|^2 + 1/2 sum_d |w . f_d|^2 + mu/2 |f - f_prev|^2
//! ```
//!
//! where `(*)` is circular cross-correlation, so that the response to a
//! search map `z` is `IFFT(sum_d conj(F_d) Z_d)`. The solver is ADMM on the
//! split `f = g`: the data and temporal terms are solved per frequency bin
//! (a rank-one system across channels), the spatial weight element-wise.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{self, FeatureMap, Grid, LabelMap, SpatialWeight};
use crate::fft2::Fft2;
use crate::geometry::BoundingBox;
use crate::media::{self, PatchSource};
use crate::pipeline::{Proposal, ProposalSource};

/// ADMM iteration count and penalty schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmmParams {
    pub iterations: usize,
    pub penalty_init: f64,
    pub penalty_growth: f64,
    pub penalty_max: f64,
}

impl Default for AdmmParams {
    fn default() -> Self {
        Self {
            iterations: 2,
            penalty_init: 1.0,
            penalty_growth: 10.0,
            penalty_max: 2.0,
        }
    }
}

/// Frequency-domain correlation filter, one grid per feature channel.
#[derive(Debug, Clone)]
pub struct TemplateModel {
    pub rows: usize,
    pub cols: usize,
    pub filters: Vec<Vec<Complex64>>,
    pub weight: SpatialWeight,
    pub label: LabelMap,
    pub mu: f64,
    pub trained_at: usize,
    /// Peak of the response to the training features.
    pub self_peak: f64,
    fft: Fft2,
}

impl TemplateModel {
    pub fn depth(&self) -> usize {
        self.filters.len()
    }

    /// Inverse-transformed filters (real up to round-off).
    pub fn spatial_filters(&self) -> Vec<Vec<f64>> {
        self.filters.iter().map(|f| self.fft.inverse_real(f)).collect()
    }

    /// Largest imaginary part of the inverse-transformed filters.
    pub fn max_imaginary(&self) -> f64 {
        self.filters
            .iter()
            .flat_map(|f| {
                let mut b = f.clone();
                self.fft.inverse(&mut b);
                b.into_iter().map(|v| v.im.abs())
            })
            .fold(0.0, f64::max)
    }
}

/// Correlation scores over the cell grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMap {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    pub peak_value: f64,
    /// Sub-cell peak location `(x, y)`.
    pub peak_pos: (f64, f64),
}

impl ResponseMap {
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.cols + x]
    }

    /// Value at the zero-displacement cell.
    pub fn center_value(&self) -> f64 {
        self.get(self.rows / 2, self.cols / 2)
    }

    /// Integer argmax `(x, y)`.
    pub fn argmax(&self) -> (usize, usize) {
        let i = argmax(&self.data);
        (i % self.cols, i / self.cols)
    }

    /// Peak offset from the grid center, in cells.
    pub fn displacement(&self) -> (f64, f64) {
        (
            self.peak_pos.0 - (self.cols / 2) as f64,
            self.peak_pos.1 - (self.rows / 2) as f64,
        )
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn check_grid(x: &FeatureMap, rows: usize, cols: usize, what: &str) -> Result<()> {
    if x.cells_y != rows || x.cells_x != cols {
        return Err(Error::DimensionMismatch(format!(
            "{what}: {}x{} vs {rows}x{cols}",
            x.cells_y, x.cells_x
        )));
    }
    Ok(())
}

fn transform_channels(fft: &Fft2, x: &FeatureMap) -> Vec<Vec<Complex64>> {
    (0..x.depth).map(|d| fft.forward_real(x.channel(d))).collect()
}

/// Learns a template from `x` with the temporal term anchored at `prev`.
/// `prev` is ignored when `mu == 0` and required otherwise.
pub fn train_template(
    x: &FeatureMap,
    prev: Option<&TemplateModel>,
    weight: &SpatialWeight,
    label: &LabelMap,
    mu: f64,
    admm: &AdmmParams,
    frame: usize,
) -> Result<TemplateModel> {
    train_template_traced(x, prev, weight, label, mu, admm, frame, None)
}

/// [`train_template`] that also records the objective after every f-update.
#[allow(clippy::too_many_arguments)]
pub fn train_template_traced(
    x: &FeatureMap,
    prev: Option<&TemplateModel>,
    weight: &SpatialWeight,
    label: &LabelMap,
    mu: f64,
    admm: &AdmmParams,
    frame: usize,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<TemplateModel> {
    let (rows, cols) = (x.cells_y, x.cells_x);
    if (weight.grid.rows, weight.grid.cols) != (rows, cols) || (label.grid.rows, label.grid.cols) != (rows, cols) {
        return Err(Error::DimensionMismatch("weight/label grid vs features".into()));
    }
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::NonFiniteInput("mu"));
    }
    if !x.is_finite() {
        return Err(Error::NonFiniteInput("features"));
    }
    if x.depth == 0 || admm.iterations == 0 || !(admm.penalty_init > 0.0) {
        return Err(Error::DimensionMismatch("empty features or ADMM schedule".into()));
    }
    let prev = if mu > 0.0 {
        let p = prev.ok_or_else(|| Error::DimensionMismatch("mu > 0 needs a previous template".into()))?;
        if (p.rows, p.cols, p.depth()) != (rows, cols, x.depth) {
            return Err(Error::DimensionMismatch("previous template geometry".into()));
        }
        Some(p)
    } else {
        None
    };

    let n = rows * cols;
    let depth = x.depth;
    let fft = prev.map(|p| p.fft.clone()).unwrap_or_else(|| Fft2::new(rows, cols));
    let xf = transform_channels(&fft, x);
    let yf = fft.forward_real(&label.grid.data);
    let w2: Vec<f64> = weight.grid.data.iter().map(|w| w * w).collect();

    let mut ff = vec![vec![Complex64::default(); n]; depth];
    // g - h, transformed; starts at zero
    let mut qf = vec![vec![Complex64::default(); n]; depth];
    let mut g = vec![vec![0.0; n]; depth];
    let mut h = vec![vec![0.0; n]; depth];
    let mut gamma = admm.penalty_init;

    let mut r = vec![Complex64::default(); depth];
    for it in 0..admm.iterations {
        let lambda = mu + gamma;
        for k in 0..n {
            let mut xx = 0.0;
            let mut xr = Complex64::default();
            let yc = yf[k].conj();
            for d in 0..depth {
                let xv = xf[d][k];
                let mut b = gamma * qf[d][k];
                if let Some(p) = prev {
                    b += mu * p.filters[d][k];
                }
                r[d] = xv * yc + b;
                xx += xv.norm_sqr();
                xr += xv.conj() * r[d];
            }
            let coef = xr / (lambda + xx);
            for d in 0..depth {
                ff[d][k] = (r[d] - xf[d][k] * coef) / lambda;
            }
        }

        let last = it + 1 == admm.iterations;
        if let Some(t) = trace.as_deref_mut() {
            t.push(objective_fourier(&fft, &xf, &yf, &ff, &w2, mu, prev.map(|p| p.filters.as_slice())));
        }
        if last {
            break;
        }

        for d in 0..depth {
            let f = fft.inverse_real(&ff[d]);
            for k in 0..n {
                g[d][k] = gamma * (f[k] + h[d][k]) / (w2[k] + gamma);
                h[d][k] += f[k] - g[d][k];
            }
            let q: Vec<f64> = g[d].iter().zip(&h[d]).map(|(a, b)| a - b).collect();
            qf[d] = fft.forward_real(&q);
        }
        gamma = (gamma * admm.penalty_growth).min(admm.penalty_max.max(admm.penalty_init));
    }

    let self_peak = {
        let resp = correlate(&fft, &ff, &xf);
        resp.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    };

    Ok(TemplateModel {
        rows,
        cols,
        filters: ff,
        weight: weight.clone(),
        label: label.clone(),
        mu,
        trained_at: frame,
        self_peak,
        fft,
    })
}

fn correlate(fft: &Fft2, ff: &[Vec<Complex64>], zf: &[Vec<Complex64>]) -> Vec<f64> {
    let n = fft.len();
    let mut acc = vec![Complex64::default(); n];
    for (f, z) in ff.iter().zip(zf) {
        for k in 0..n {
            acc[k] += f[k].conj() * z[k];
        }
    }
    fft.inverse_real(&acc)
}

fn objective_fourier(
    fft: &Fft2,
    xf: &[Vec<Complex64>],
    yf: &[Complex64],
    ff: &[Vec<Complex64>],
    w2: &[f64],
    mu: f64,
    prev: Option<&[Vec<Complex64>]>,
) -> f64 {
    let n = fft.len();
    let mut acc = vec![Complex64::default(); n];
    for (f, x) in ff.iter().zip(xf) {
        for k in 0..n {
            acc[k] += f[k].conj() * x[k];
        }
    }
    let data: f64 = acc.iter().zip(yf).map(|(a, y)| (a - y).norm_sqr()).sum::<f64>() / n as f64;
    let mut spatial = 0.0;
    let mut temporal = 0.0;
    for (d, f) in ff.iter().enumerate() {
        let fs = fft.inverse_real(f);
        spatial += fs.iter().zip(w2).map(|(v, w)| w * v * v).sum::<f64>();
        if let Some(p) = prev {
            temporal += f.iter().zip(&p[d]).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / n as f64;
        }
    }
    0.5 * data + 0.5 * spatial + 0.5 * mu * temporal
}

/// Value of the training objective for `model`'s filters on features `x`.
pub fn objective(
    model: &TemplateModel,
    x: &FeatureMap,
    prev: Option<&TemplateModel>,
) -> Result<f64> {
    check_grid(x, model.rows, model.cols, "objective")?;
    let xf = transform_channels(&model.fft, x);
    let yf = model.fft.forward_real(&model.label.grid.data);
    let w2: Vec<f64> = model.weight.grid.data.iter().map(|w| w * w).collect();
    let mu = if prev.is_some() { model.mu } else { 0.0 };
    Ok(objective_fourier(
        &model.fft,
        &xf,
        &yf,
        &model.filters,
        &w2,
        mu,
        prev.map(|p| p.filters.as_slice()),
    ))
}

/// Correlates the template with search features `z`.
pub fn respond(model: &TemplateModel, z: &FeatureMap) -> Result<ResponseMap> {
    check_grid(z, model.rows, model.cols, "search features")?;
    if z.depth != model.depth() {
        return Err(Error::DimensionMismatch(format!(
            "search depth {} vs template depth {}",
            z.depth,
            model.depth()
        )));
    }
    let zf = transform_channels(&model.fft, z);
    let data = correlate(&model.fft, &model.filters, &zf);
    Ok(response_from(model.rows, model.cols, data))
}

fn response_from(rows: usize, cols: usize, data: Vec<f64>) -> ResponseMap {
    let i = argmax(&data);
    let (px, py) = (i % cols, i / cols);
    let peak_value = data[i];
    let at = |y: usize, x: usize| data[y * cols + x];
    // parabola through the log values when all three are positive (exact for
    // a Gaussian peak), through the raw values otherwise
    let refine = |l: f64, c: f64, r: f64| {
        let (l, c, r) = if l > 0.0 && c > 0.0 && r > 0.0 { (l.ln(), c.ln(), r.ln()) } else { (l, c, r) };
        let denom = l - 2.0 * c + r;
        if denom < 0.0 {
            (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    };
    let dx = if cols >= 3 {
        refine(at(py, (px + cols - 1) % cols), peak_value, at(py, (px + 1) % cols))
    } else {
        0.0
    };
    let dy = if rows >= 3 {
        refine(at((py + rows - 1) % rows, px), peak_value, at((py + 1) % rows, px))
    } else {
        0.0
    };
    let peak_pos = (
        (px as f64 + dx).clamp(0.0, (cols - 1) as f64),
        (py as f64 + dy).clamp(0.0, (rows - 1) as f64),
    );
    ResponseMap {
        rows,
        cols,
        data,
        peak_value,
        peak_pos,
    }
}

/// Sampling geometry shared by training, detection and scoring.
///
/// The search region is a square of area `padding * w * h` around the
/// box center (scaled by the current scale factor), resampled to a fixed
/// sample size whose area is clamped to `[min_area, max_area]`.
#[derive(Debug, Clone)]
pub struct SearchGeometry {
    pub base_size: (f64, f64),
    pub padding: f64,
    pub sample_side: usize,
    pub cell_size: usize,
    pub use_cn: bool,
    pub window: Grid,
}

impl SearchGeometry {
    pub fn new(
        init: &BoundingBox,
        padding: f64,
        cell_size: usize,
        min_sample_area: f64,
        max_sample_area: f64,
        use_cn: bool,
    ) -> Result<Self> {
        if !init.is_valid() || init.w < 1.0 || init.h < 1.0 {
            return Err(Error::DegenerateBox { w: init.w, h: init.h });
        }
        if cell_size == 0 || !(padding >= 1.0) {
            return Err(Error::InvalidConfig("cell_size and padding".into()));
        }
        let side = (padding * init.area()).sqrt();
        let area = (side * side).clamp(min_sample_area, max_sample_area.max(min_sample_area));
        let cells = fft_friendly((area.sqrt() / cell_size as f64).round() as usize).max(3);
        let sample_side = cells * cell_size;
        Ok(Self {
            base_size: (init.w, init.h),
            padding,
            sample_side,
            cell_size,
            use_cn,
            window: features::cosine_window(cells, cells),
        })
    }

    pub fn cells(&self) -> usize {
        self.sample_side / self.cell_size
    }

    pub fn base_side(&self) -> f64 {
        (self.base_size.0 * self.base_size.1).sqrt()
    }

    /// Scale of `b` relative to the initial box, by area.
    pub fn scale_of(&self, b: &BoundingBox) -> f64 {
        (b.area() / (self.base_size.0 * self.base_size.1)).sqrt()
    }

    /// Frame pixels per feature cell at `scale`.
    pub fn pixels_per_cell(&self, scale: f64) -> f64 {
        self.padding.sqrt() * self.base_side() * scale / self.sample_side as f64 * self.cell_size as f64
    }

    /// Target size in cells at the initial scale.
    pub fn target_cells(&self) -> (f64, f64) {
        let ppc = self.pixels_per_cell(1.0);
        (self.base_size.0 / ppc, self.base_size.1 / ppc)
    }

    /// Windowed features of the region centered at `(cx, cy)` at `scale`.
    pub fn features<S: PatchSource + ?Sized>(&self, src: &S, cx: f64, cy: f64, scale: f64) -> Result<FeatureMap> {
        let side = self.base_side() * scale;
        let region = BoundingBox::new(cx, cy, side, side);
        let patch = media::extract_patch(src, &region, self.padding.sqrt(), self.sample_side, self.sample_side)?;
        let mut fm = features::extract_features(&patch, self.cell_size, self.use_cn)?;
        fm.apply_window(&self.window);
        Ok(fm)
    }
}

/// Nearest integer to `n` with no prime factor above 5, preferring the
/// larger on ties.
fn fft_friendly(n: usize) -> usize {
    let smooth = |mut m: usize| {
        if m == 0 {
            return false;
        }
        for p in [2, 3, 5] {
            while m % p == 0 {
                m /= p;
            }
        }
        m == 1
    };
    (0..=n).find_map(|d| [n + d, n.saturating_sub(d)].into_iter().find(|&m| smooth(m))).unwrap_or(n)
}

/// Five-level scale pyramid with a penalty on non-unit levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleSearch {
    pub step: f64,
    pub levels: usize,
    pub penalty: f64,
}

impl Default for ScaleSearch {
    fn default() -> Self {
        Self {
            step: 1.02,
            levels: 5,
            penalty: 1.025,
        }
    }
}

impl ScaleSearch {
    pub fn factors(&self) -> Vec<f64> {
        let half = (self.levels / 2) as i32;
        (-half..=half).map(|k| self.step.powi(k)).collect()
    }
}

/// Searches five scales around `prev_box` and returns the best-scoring box.
/// The score is the raw (penalized) response peak.
pub fn propose_appearance<S: PatchSource + ?Sized>(
    model: &TemplateModel,
    geometry: &SearchGeometry,
    frame: &S,
    prev_box: &BoundingBox,
    scales: &ScaleSearch,
) -> Result<Proposal> {
    let base_scale = geometry.scale_of(prev_box);
    let mut best: Option<(f64, f64, ResponseMap)> = None;
    for factor in scales.factors() {
        let scale = base_scale * factor;
        let z = geometry.features(frame, prev_box.cx, prev_box.cy, scale)?;
        let resp = respond(model, &z)?;
        let penalized = if (factor - 1.0).abs() > 1e-12 {
            resp.peak_value / scales.penalty
        } else {
            resp.peak_value
        };
        if best.as_ref().is_none_or(|b| penalized > b.0) {
            best = Some((penalized, factor, resp));
        }
    }
    let (score, factor, resp) = best.expect("at least one scale level");
    let (dx, dy) = resp.displacement();
    let ppc = geometry.pixels_per_cell(base_scale * factor);
    let bbox = BoundingBox::new(
        prev_box.cx + dx * ppc,
        prev_box.cy + dy * ppc,
        prev_box.w * factor,
        prev_box.h * factor,
    );
    Ok(Proposal {
        bbox,
        source: ProposalSource::Appearance,
        score,
    })
}

/// Re-centers `proposal` by the response peak of a search region placed on
/// the proposal itself, and rescores it as that peak divided by `reference`.
pub fn refine_proposal<S: PatchSource + ?Sized>(
    model: &TemplateModel,
    geometry: &SearchGeometry,
    frame: &S,
    proposal: &Proposal,
    reference: f64,
) -> Result<Proposal> {
    let b = proposal.bbox;
    let scale = geometry.scale_of(&b);
    let resp = respond(model, &geometry.features(frame, b.cx, b.cy, scale)?)?;
    let (dx, dy) = resp.displacement();
    let ppc = geometry.pixels_per_cell(scale);
    let norm = if reference.abs() > 1e-12 { reference } else { 1.0 };
    Ok(Proposal {
        bbox: BoundingBox::new(b.cx + dx * ppc, b.cy + dy * ppc, b.w, b.h),
        source: proposal.source,
        score: resp.peak_value / norm,
    })
}

/// Zero-displacement response at `bbox`, divided by `reference` (a
/// training self-response peak).
pub fn score_box<S: PatchSource + ?Sized>(
    model: &TemplateModel,
    geometry: &SearchGeometry,
    frame: &S,
    bbox: &BoundingBox,
    reference: f64,
) -> Result<f64> {
    let z = geometry.features(frame, bbox.cx, bbox.cy, geometry.scale_of(bbox))?;
    score_features(model, &z, reference)
}

/// [`score_box`] on features already extracted at the box.
pub fn score_features(model: &TemplateModel, z: &FeatureMap, reference: f64) -> Result<f64> {
    let resp = respond(model, z)?;
    let norm = if reference.abs() > 1e-12 { reference } else { 1.0 };
    Ok(resp.center_value() / norm)
}

/// Temporal regularization levels picked from the chosen proposal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuSchedule {
    pub appearance: f64,
    pub high: f64,
    pub mid: f64,
    pub low: f64,
    pub t_hi: f64,
    pub t_lo: f64,
}

impl Default for MuSchedule {
    fn default() -> Self {
        Self {
            appearance: 15.0,
            high: 10.0,
            mid: 5.0,
            low: 0.0,
            t_hi: 0.25,
            t_lo: 0.12,
        }
    }
}

impl MuSchedule {
    /// Smallest non-zero level.
    pub fn smallest_nonzero(&self) -> f64 {
        [self.appearance, self.high, self.mid, self.low]
            .into_iter()
            .filter(|&m| m > 0.0)
            .fold(f64::INFINITY, f64::min)
    }
}

/// The weaker the chosen proposal's score, the weaker the temporal tie.
pub fn adaptive_mu(source: ProposalSource, score: f64, schedule: &MuSchedule) -> f64 {
    match source {
        ProposalSource::Appearance => schedule.appearance,
        _ if score >= schedule.t_hi => schedule.high,
        _ if score >= schedule.t_lo => schedule.mid,
        _ => schedule.low,
    }
}

/// Retrain only once the box has moved at least `min_motion` pixels.
pub fn should_update(displacement: f64, min_motion: f64) -> bool {
    displacement >= min_motion
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mu_rule() {
        let s = MuSchedule::default();
        assert_eq!(adaptive_mu(ProposalSource::Appearance, 0.0, &s), 15.0);
        assert_eq!(adaptive_mu(ProposalSource::Appearance, 5.0, &s), 15.0);
        assert_eq!(adaptive_mu(ProposalSource::Trajectory, 0.05, &s), 0.0);
        assert_eq!(adaptive_mu(ProposalSource::Background, 0.12, &s), 5.0);
        assert_eq!(adaptive_mu(ProposalSource::Background, 0.25, &s), 10.0);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..100 {
            let m = adaptive_mu(ProposalSource::Trajectory, i as f64 * 0.01, &s);
            assert!(m >= prev);
            prev = m;
        }
        assert_eq!(s.smallest_nonzero(), 5.0);
    }

    #[test]
    fn update_rule() {
        assert!(!should_update(0.0, 0.5));
        assert!(should_update(10.0, 0.5));
        assert!(should_update(0.5, 0.5));
    }

    #[test]
    fn scale_factors() {
        let f = ScaleSearch::default().factors();
        assert_eq!(f.len(), 5);
        assert_eq!(f[2], 1.0);
        assert!((f[0] - 1.02f64.powi(-2)).abs() < 1e-15);
        assert!((f[4] - 1.02f64.powi(2)).abs() < 1e-15);
    }

    #[test]
    fn zero_search_features_give_zero_response() {
        let x = FeatureMap {
            cells_x: 6,
            cells_y: 6,
            depth: 2,
            cell_size: 4,
            data: (0..72).map(|i| ((i * 13) % 7) as f64 / 7.0).collect(),
        };
        let w = features::spatial_weight(6, 6, (2.0, 2.0), 0.1, 3.0);
        let y = features::gaussian_label(6, 6, 0.25, (2.0, 2.0));
        let m = train_template(&x, None, &w, &y, 0.0, &AdmmParams::default(), 0).unwrap();
        let z = FeatureMap::zeros(6, 6, 2, 4);
        let r = respond(&m, &z).unwrap();
        assert!(r.data.iter().all(|&v| v.abs() < 1e-15));
        assert!(r.peak_value.abs() < 1e-15);
    }

    #[test]
    fn mismatched_search_grid_is_rejected() {
        let x = FeatureMap::zeros(6, 6, 1, 4);
        let w = features::spatial_weight(6, 6, (2.0, 2.0), 0.1, 3.0);
        let y = features::gaussian_label(6, 6, 0.25, (2.0, 2.0));
        let m = train_template(&x, None, &w, &y, 0.0, &AdmmParams::default(), 0).unwrap();
        assert!(matches!(respond(&m, &FeatureMap::zeros(5, 6, 1, 4)), Err(Error::DimensionMismatch(_))));
        let w5 = features::spatial_weight(5, 6, (2.0, 2.0), 0.1, 3.0);
        assert!(matches!(
            train_template(&x, None, &w5, &y, 0.0, &AdmmParams::default(), 0),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(train_template(&x, None, &w, &y, 1.0, &AdmmParams::default(), 0).is_err());
        let mut bad = x.clone();
        bad.data[3] = f64::NAN;
        assert!(matches!(
            train_template(&bad, None, &w, &y, 0.0, &AdmmParams::default(), 0),
            Err(Error::NonFiniteInput(_))
        ));
    }
}
