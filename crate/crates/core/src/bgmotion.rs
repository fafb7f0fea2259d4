//! Background motion: affine camera model between consecutive frames,
//! warped-frame difference map, foreground candidates and shape profiles.
//!
//! Point and model coordinates are pixel indices of the (possibly
//! downsampled) image the operation runs on.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::media::GrayImage;

/// `x' = a1 x + a2 y + a0`, `y' = b1 x + b2 y + b0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineModel {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
}

impl Default for AffineModel {
    fn default() -> Self {
        Self::identity()
    }
}

impl AffineModel {
    pub const fn identity() -> Self {
        Self {
            a0: 0.0,
            a1: 1.0,
            a2: 0.0,
            b0: 0.0,
            b1: 0.0,
            b2: 1.0,
        }
    }

    pub const fn translation(dx: f64, dy: f64) -> Self {
        Self {
            a0: dx,
            a1: 1.0,
            a2: 0.0,
            b0: dy,
            b1: 0.0,
            b2: 1.0,
        }
    }

    pub fn params(&self) -> [f64; 6] {
        [self.a0, self.a1, self.a2, self.b0, self.b1, self.b2]
    }

    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (self.a1 * x + self.a2 * y + self.a0, self.b1 * x + self.b2 * y + self.b0)
    }

    pub fn det(&self) -> f64 {
        self.a1 * self.b2 - self.a2 * self.b1
    }

    pub fn is_degenerate(&self) -> bool {
        !self.params().iter().all(|v| v.is_finite()) || self.det().abs() <= 1e-6
    }

    pub fn inverse(&self) -> Result<AffineModel> {
        if self.is_degenerate() {
            return Err(Error::DegenerateModel);
        }
        let det = self.det();
        let (i11, i12) = (self.b2 / det, -self.a2 / det);
        let (i21, i22) = (-self.b1 / det, self.a1 / det);
        Ok(AffineModel {
            a1: i11,
            a2: i12,
            a0: -(i11 * self.a0 + i12 * self.b0),
            b1: i21,
            b2: i22,
            b0: -(i21 * self.a0 + i22 * self.b0),
        })
    }

    /// `self` applied after `first`.
    pub fn compose(&self, first: &AffineModel) -> AffineModel {
        AffineModel {
            a1: self.a1 * first.a1 + self.a2 * first.b1,
            a2: self.a1 * first.a2 + self.a2 * first.b2,
            a0: self.a1 * first.a0 + self.a2 * first.b0 + self.a0,
            b1: self.b1 * first.a1 + self.b2 * first.b1,
            b2: self.b1 * first.a2 + self.b2 * first.b2,
            b0: self.b1 * first.a0 + self.b2 * first.b0 + self.b0,
        }
    }
}

/// Tunables of the background chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundParams {
    /// Frames are downsampled to at most this many pixels per side.
    pub max_side: usize,
    pub max_points: usize,
    pub nms_radius: f64,
    pub harris_k: f64,
    /// Exclusion box scale around the tracked object.
    pub exclusion_padding: f64,
    pub match_radius: usize,
    pub match_patch: usize,
    pub min_ncc: f64,
    pub trim_residual: f64,
    /// Candidate threshold relative to the difference-map maximum.
    pub candidate_rel: f64,
    /// Absolute floor on the candidate threshold.
    pub candidate_floor: f64,
    pub min_area: usize,
}

impl Default for BackgroundParams {
    fn default() -> Self {
        Self {
            max_side: 320,
            max_points: 100,
            nms_radius: 8.0,
            harris_k: 0.04,
            exclusion_padding: 1.5,
            match_radius: 8,
            match_patch: 9,
            min_ncc: 0.6,
            trim_residual: 3.0,
            candidate_rel: 0.2,
            candidate_floor: 0.05,
            min_area: 25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: usize,
    pub y: usize,
    pub response: f64,
}

/// Harris response `det(M) - k tr(M)^2` with a 5x5 binomial window.
pub fn harris_response(image: &GrayImage, k: f64) -> Vec<f64> {
    let (w, h) = (image.width, image.height);
    let mut ixx = vec![0.0; w * h];
    let mut ixy = vec![0.0; w * h];
    let mut iyy = vec![0.0; w * h];
    let v = &image.values;
    let row = |y: isize| y.clamp(0, h as isize - 1) as usize * w;
    let col = |x: isize| x.clamp(0, w as isize - 1) as usize;
    for y in 0..h as isize {
        let (r0, r1, r2) = (row(y - 1), row(y), row(y + 1));
        for x in 0..w as isize {
            let (c0, c2) = (col(x - 1), col(x + 1));
            let c1 = x as usize;
            let p = |r: usize, c: usize| v[r + c] as f64;
            // Sobel
            let gx = (p(r0, c2) + 2.0 * p(r1, c2) + p(r2, c2)) - (p(r0, c0) + 2.0 * p(r1, c0) + p(r2, c0));
            let gy = (p(r2, c0) + 2.0 * p(r2, c1) + p(r2, c2)) - (p(r0, c0) + 2.0 * p(r0, c1) + p(r0, c2));
            let i = r1 + c1;
            ixx[i] = gx * gx / 64.0;
            ixy[i] = gx * gy / 64.0;
            iyy[i] = gy * gy / 64.0;
        }
    }
    let sxx = binomial5(&ixx, w, h);
    let sxy = binomial5(&ixy, w, h);
    let syy = binomial5(&iyy, w, h);
    (0..w * h)
        .map(|i| {
            let tr = sxx[i] + syy[i];
            sxx[i] * syy[i] - sxy[i] * sxy[i] - k * tr * tr
        })
        .collect()
}

fn binomial5(src: &[f64], w: usize, h: usize) -> Vec<f64> {
    const K: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (j, k) in K.iter().enumerate() {
                let xx = (x as isize + j as isize - 2).clamp(0, w as isize - 1) as usize;
                acc += k * src[y * w + xx];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (j, k) in K.iter().enumerate() {
                let yy = (y as isize + j as isize - 2).clamp(0, h as isize - 1) as usize;
                acc += k * tmp[yy * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Strongest Harris corners outside the (padded) exclusion box, greedily
/// thinned so no two lie within `nms_radius` of each other.
pub fn detect_keypoints(
    image: &GrayImage,
    max_points: usize,
    exclusion: Option<&BoundingBox>,
    params: &BackgroundParams,
) -> Result<Vec<Keypoint>> {
    const BORDER: usize = 3;
    let (w, h) = (image.width, image.height);
    let resp = harris_response(image, params.harris_k);
    let max = resp.iter().cloned().fold(0.0, f64::max);
    let excluded = exclusion.map(|b| b.scaled(params.exclusion_padding));
    let mut cands = Vec::new();
    if max > 1e-10 && w > 2 * BORDER && h > 2 * BORDER {
        let floor = 0.01 * max;
        for y in BORDER..h - BORDER {
            for x in BORDER..w - BORDER {
                let r = resp[y * w + x];
                if r <= floor {
                    continue;
                }
                let is_peak = (y - 1..=y + 1)
                    .flat_map(|yy| (x - 1..=x + 1).map(move |xx| (xx, yy)))
                    .all(|(xx, yy)| resp[yy * w + xx] <= r);
                if !is_peak {
                    continue;
                }
                if let Some(b) = &excluded {
                    if b.contains(x as f64 + 0.5, y as f64 + 0.5) {
                        continue;
                    }
                }
                cands.push(Keypoint { x, y, response: r });
            }
        }
    }
    cands.sort_by(|a, b| b.response.total_cmp(&a.response).then((a.y, a.x).cmp(&(b.y, b.x))));
    let r2 = params.nms_radius * params.nms_radius;
    let mut kept: Vec<Keypoint> = Vec::new();
    for c in cands {
        if kept.len() >= max_points {
            break;
        }
        let clear = kept.iter().all(|k| {
            let dx = k.x as f64 - c.x as f64;
            let dy = k.y as f64 - c.y as f64;
            dx * dx + dy * dy >= r2
        });
        if clear {
            kept.push(c);
        }
    }
    if kept.len() < 3 {
        return Err(Error::TooFewKeypoints(kept.len()));
    }
    Ok(kept)
}

/// A matched point pair from the previous to the current frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub src: (f64, f64),
    pub dst: (f64, f64),
    pub ncc: f64,
}

/// Exhaustive NCC block matching of each point's `patch x patch`
/// neighborhood within `+-radius` pixels, refined to sub-pixel by a
/// parabola through the NCC surface. Matches below `min_ncc` are dropped.
pub fn match_points(
    prev: &GrayImage,
    curr: &GrayImage,
    points: &[Keypoint],
    radius: usize,
    patch: usize,
    min_ncc: f64,
) -> Result<Vec<Correspondence>> {
    if prev.width != curr.width || prev.height != curr.height {
        return Err(Error::DimensionMismatch("frames differ in size".into()));
    }
    let half = (patch / 2) as isize;
    let r = radius as isize;
    let (w, h) = (prev.width as isize, prev.height as isize);
    let side = (2 * r + 1) as usize;
    let mut out = Vec::new();
    let mut surface = vec![f64::NEG_INFINITY; side * side];

    for p in points {
        let (px, py) = (p.x as isize, p.y as isize);
        if px - half < 0 || py - half < 0 || px + half >= w || py + half >= h {
            continue;
        }
        let tpl: Vec<f64> = (-half..=half)
            .flat_map(|dy| (-half..=half).map(move |dx| (dx, dy)))
            .map(|(dx, dy)| prev.get((px + dx) as usize, (py + dy) as usize) as f64)
            .collect();
        let n = tpl.len() as f64;
        let tmean = tpl.iter().sum::<f64>() / n;
        let tdev: Vec<f64> = tpl.iter().map(|v| v - tmean).collect();
        let tnorm = tdev.iter().map(|v| v * v).sum::<f64>().sqrt();
        if tnorm < 1e-9 {
            continue;
        }

        surface.iter_mut().for_each(|v| *v = f64::NEG_INFINITY);
        let mut best = (f64::NEG_INFINITY, 0isize, 0isize);
        for oy in -r..=r {
            for ox in -r..=r {
                let (cx, cy) = (px + ox, py + oy);
                if cx - half < 0 || cy - half < 0 || cx + half >= w || cy + half >= h {
                    continue;
                }
                let mut sum = 0.0;
                let mut sum2 = 0.0;
                let mut cross = 0.0;
                let mut i = 0;
                for dy in -half..=half {
                    let row = ((cy + dy) * w) as usize;
                    for dx in -half..=half {
                        let v = curr.values[row + (cx + dx) as usize] as f64;
                        sum += v;
                        sum2 += v * v;
                        cross += v * tdev[i];
                        i += 1;
                    }
                }
                let var = sum2 - sum * sum / n;
                if var <= 1e-12 {
                    continue;
                }
                let ncc = cross / (tnorm * var.sqrt());
                surface[((oy + r) as usize) * side + (ox + r) as usize] = ncc;
                if ncc > best.0 {
                    best = (ncc, ox, oy);
                }
            }
        }
        let (ncc, ox, oy) = best;
        if !(ncc >= min_ncc) {
            continue;
        }
        let at = |ox: isize, oy: isize| -> Option<f64> {
            if ox < -r || ox > r || oy < -r || oy > r {
                return None;
            }
            let v = surface[((oy + r) as usize) * side + (ox + r) as usize];
            v.is_finite().then_some(v)
        };
        let sub = |l: Option<f64>, c: f64, rr: Option<f64>| match (l, rr) {
            (Some(l), Some(rr)) => {
                let d = l - 2.0 * c + rr;
                if d < 0.0 {
                    (0.5 * (l - rr) / d).clamp(-0.5, 0.5)
                } else {
                    0.0
                }
            }
            _ => 0.0,
        };
        let fx = sub(at(ox - 1, oy), ncc, at(ox + 1, oy));
        let fy = sub(at(ox, oy - 1), ncc, at(ox, oy + 1));
        out.push(Correspondence {
            src: (px as f64, py as f64),
            dst: (px as f64 + ox as f64 + fx, py as f64 + oy as f64 + fy),
            ncc,
        });
    }
    if out.is_empty() {
        return Err(Error::NoMatches);
    }
    Ok(out)
}

/// Result of the (trimmed) affine least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineFit {
    pub model: AffineModel,
    /// RMS reprojection error over the pairs kept for the final fit.
    pub rms: f64,
    pub inliers: usize,
}

/// Plain least squares over all pairs.
pub fn fit_affine_lsq(pairs: &[Correspondence]) -> Result<AffineModel> {
    if pairs.len() < 3 {
        return Err(Error::DegenerateConfiguration);
    }
    let n = pairs.len();
    let mx = pairs.iter().map(|p| p.src.0).sum::<f64>() / n as f64;
    let my = pairs.iter().map(|p| p.src.1).sum::<f64>() / n as f64;
    let spread = pairs
        .iter()
        .map(|p| (p.src.0 - mx).abs().max((p.src.1 - my).abs()))
        .fold(0.0, f64::max);
    if spread == 0.0 {
        return Err(Error::DegenerateConfiguration);
    }
    // centered and scaled source coordinates for conditioning
    let a = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => (pairs[i].src.0 - mx) / spread,
        1 => (pairs[i].src.1 - my) / spread,
        _ => 1.0,
    });
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let smin = sv.min();
    if !(smin > 1e-9 * smax) {
        return Err(Error::DegenerateConfiguration);
    }
    let bx = DVector::from_iterator(n, pairs.iter().map(|p| p.dst.0));
    let by = DVector::from_iterator(n, pairs.iter().map(|p| p.dst.1));
    let px = svd.solve(&bx, 0.0).map_err(|_| Error::DegenerateConfiguration)?;
    let py = svd.solve(&by, 0.0).map_err(|_| Error::DegenerateConfiguration)?;
    // undo the normalization: x' = p0 (x - mx)/s + p1 (y - my)/s + p2
    let model = AffineModel {
        a1: px[0] / spread,
        a2: px[1] / spread,
        a0: px[2] - px[0] * mx / spread - px[1] * my / spread,
        b1: py[0] / spread,
        b2: py[1] / spread,
        b0: py[2] - py[0] * mx / spread - py[1] * my / spread,
    };
    if model.is_degenerate() {
        return Err(Error::DegenerateConfiguration);
    }
    Ok(model)
}

fn residual(model: &AffineModel, p: &Correspondence) -> f64 {
    let (x, y) = model.apply(p.src.0, p.src.1);
    (x - p.dst.0).hypot(y - p.dst.1)
}

/// Least squares, then one refit without the pairs whose residual exceeds
/// `trim_residual` pixels.
pub fn fit_affine(pairs: &[Correspondence], trim_residual: f64) -> Result<AffineFit> {
    let first = fit_affine_lsq(pairs)?;
    let kept: Vec<Correspondence> = pairs
        .iter()
        .copied()
        .filter(|p| residual(&first, p) <= trim_residual)
        .collect();
    let (model, used): (AffineModel, &[Correspondence]) = if kept.len() == pairs.len() {
        (first, pairs)
    } else {
        (fit_affine_lsq(&kept)?, &kept)
    };
    let rms = (used.iter().map(|p| residual(&model, p).powi(2)).sum::<f64>() / used.len() as f64).sqrt();
    Ok(AffineFit {
        model,
        rms,
        inliers: used.len(),
    })
}

/// Per-pixel validity of a warped image.
pub type ValidMask = Vec<bool>;

/// Resamples `image` under `model` by inverse mapping. Destinations whose
/// preimage falls outside the frame are zero and marked invalid.
pub fn warp_image(image: &GrayImage, model: &AffineModel) -> Result<(GrayImage, ValidMask)> {
    let inv = model.inverse()?;
    let (w, h) = (image.width, image.height);
    let (maxx, maxy) = ((w - 1) as f64, (h - 1) as f64);
    let mut values = vec![0.0f32; w * h];
    let mut mask = vec![false; w * h];
    let src = &image.values;
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = inv.apply(x as f64, y as f64);
            // tolerate round-off at the border
            if !(sx >= -1e-9 && sy >= -1e-9 && sx <= maxx + 1e-9 && sy <= maxy + 1e-9) {
                continue;
            }
            let (sx, sy) = (sx.clamp(0.0, maxx), sy.clamp(0.0, maxy));
            let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
            let (fx, fy) = ((sx - x0 as f64) as f32, (sy - y0 as f64) as f32);
            let top = src[y0 * w + x0] * (1.0 - fx) + src[y0 * w + x1] * fx;
            let bot = src[y1 * w + x0] * (1.0 - fx) + src[y1 * w + x1] * fx;
            values[y * w + x] = top * (1.0 - fy) + bot * fy;
            mask[y * w + x] = true;
        }
    }
    Ok((GrayImage { width: w, height: h, values }, mask))
}

/// Smoothed absolute residual between the warped previous frame and the
/// observed frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
    pub valid: ValidMask,
}

impl DifferenceMap {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn max(&self) -> f32 {
        self.data.iter().cloned().fold(0.0, f32::max)
    }

    pub fn from_residual(width: usize, height: usize, data: Vec<f32>) -> Self {
        Self {
            width,
            height,
            valid: vec![true; data.len()],
            data,
        }
    }
}

pub fn diff_map(estimated: &GrayImage, observed: &GrayImage, valid: &[bool]) -> Result<DifferenceMap> {
    let (w, h) = (observed.width, observed.height);
    if estimated.width != w || estimated.height != h || valid.len() != w * h {
        return Err(Error::DimensionMismatch("difference map inputs".into()));
    }
    let raw: Vec<f32> = (0..w * h)
        .map(|i| {
            if valid[i] {
                (estimated.values[i] - observed.values[i]).abs()
            } else {
                0.0
            }
        })
        .collect();
    let mut data = vec![0.0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !valid[i] {
                continue;
            }
            let mut sum = 0.0;
            let mut cnt = 0.0;
            for yy in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for xx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    sum += raw[yy * w + xx];
                    cnt += 1.0;
                }
            }
            data[i] = (sum / cnt).clamp(0.0, 1.0);
        }
    }
    Ok(DifferenceMap {
        width: w,
        height: h,
        data,
        valid: valid.to_vec(),
    })
}

/// A connected foreground region of the difference map.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub bbox: BoundingBox,
    pub mass: f64,
    pub area: usize,
    pub centroid: (f64, f64),
}

/// Connected components (8-neighborhood) above
/// `max(candidate_rel * max, candidate_floor)` with at least `min_area`
/// pixels, sorted by decreasing mass.
pub fn foreground_candidates(dmap: &DifferenceMap, params: &BackgroundParams) -> Vec<Candidate> {
    let max = dmap.max() as f64;
    if max <= 0.0 {
        return Vec::new();
    }
    let thr = (params.candidate_rel * max).max(params.candidate_floor);
    let (w, h) = (dmap.width, dmap.height);
    let on: Vec<bool> = dmap.data.iter().map(|&v| v as f64 >= thr && v > 0.0).collect();
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !on[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
        let (mut mass, mut mx, mut my, mut area) = (0.0, 0.0, 0.0, 0);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            let v = dmap.data[i] as f64;
            mass += v;
            mx += v * (x as f64 + 0.5);
            my += v * (y as f64 + 0.5);
            area += 1;
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            for yy in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for xx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    let j = yy * w + xx;
                    if on[j] && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        if area >= params.min_area {
            out.push(Candidate {
                bbox: BoundingBox::from_top_left(x0 as f64, y0 as f64, (x1 - x0 + 1) as f64, (y1 - y0 + 1) as f64),
                mass,
                area,
                centroid: (mx / mass, my / mass),
            });
        }
    }
    out.sort_by(|a, b| b.mass.total_cmp(&a.mass));
    out
}

/// The highest-mass candidate, if any. Its box is the component's bounding
/// box; the caller decides the final size.
pub fn propose_background(dmap: &DifferenceMap, params: &BackgroundParams) -> Option<Candidate> {
    foreground_candidates(dmap, params).into_iter().next()
}

/// Object extent from thresholded row/column profiles of the residual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeEstimate {
    pub width: f64,
    pub height: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl ShapeEstimate {
    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))
    }
}

/// Sums the residual inside `region` (doubled in size) along rows and
/// columns and keeps the span where each profile reaches `cut_threshold`
/// of its maximum. Interval ends are pixel edges, so a `k`-pixel run has
/// length `k`.
pub fn estimate_shape(dmap: &DifferenceMap, region: &BoundingBox, cut_threshold: f64) -> Result<ShapeEstimate> {
    let r = region.scaled(2.0);
    let x0 = r.left().floor().max(0.0) as usize;
    let y0 = r.top().floor().max(0.0) as usize;
    let x1 = (r.right().ceil().max(0.0) as usize).min(dmap.width);
    let y1 = (r.bottom().ceil().max(0.0) as usize).min(dmap.height);
    if x0 >= x1 || y0 >= y1 {
        return Err(Error::NoShape);
    }
    let mut px = vec![0.0f64; x1 - x0];
    let mut py = vec![0.0f64; y1 - y0];
    for y in y0..y1 {
        for x in x0..x1 {
            let v = dmap.get(x, y).abs() as f64;
            px[x - x0] += v;
            py[y - y0] += v;
        }
    }
    let span = |p: &[f64]| -> Option<(usize, usize)> {
        let max = p.iter().cloned().fold(0.0, f64::max);
        if max <= 0.0 {
            return None;
        }
        let thr = cut_threshold * max;
        let first = p.iter().position(|&v| v >= thr)?;
        let last = p.iter().rposition(|&v| v >= thr)?;
        Some((first, last))
    };
    let (xa, xb) = span(&px).ok_or(Error::NoShape)?;
    let (ya, yb) = span(&py).ok_or(Error::NoShape)?;
    let (x_min, x_max) = ((x0 + xa) as f64, (x0 + xb + 1) as f64);
    let (y_min, y_max) = ((y0 + ya) as f64, (y0 + yb + 1) as f64);
    Ok(ShapeEstimate {
        width: x_max - x_min,
        height: y_max - y_min,
        x_min,
        x_max,
        y_min,
        y_max,
    })
}

/// Downsampled grayscale pair and the frame-to-working scale.
pub fn working_scale(width: usize, height: usize, max_side: usize) -> f64 {
    let side = width.max(height) as f64;
    if side <= max_side as f64 {
        1.0
    } else {
        max_side as f64 / side
    }
}

pub fn downsample(image: &GrayImage, scale: f64) -> GrayImage {
    if scale >= 1.0 {
        return image.clone();
    }
    let w = ((image.width as f64 * scale).round() as usize).max(1);
    let h = ((image.height as f64 * scale).round() as usize).max(1);
    image.resized(w, h)
}

/// Everything the background chain produced for one frame pair, in
/// working (downsampled) coordinates.
#[derive(Debug, Clone)]
pub struct MotionAnalysis {
    pub scale: f64,
    pub fit: AffineFit,
    pub dmap: DifferenceMap,
}

/// Keypoints on `prev` outside the object, matched into `curr`, affine fit,
/// warp and difference. `prev_box` is in full-frame pixels.
pub fn analyze_motion(
    prev: &GrayImage,
    curr: &GrayImage,
    prev_box: &BoundingBox,
    params: &BackgroundParams,
) -> Result<MotionAnalysis> {
    if prev.width != curr.width || prev.height != curr.height {
        return Err(Error::DimensionMismatch("frames differ in size".into()));
    }
    let scale = working_scale(prev.width, prev.height, params.max_side);
    let p = downsample(prev, scale);
    let c = downsample(curr, scale);
    analyze_working(&p, &c, &prev_box.scaled_about_origin(scale), scale, params)
}

/// Same as [`analyze_motion`] for images already at working resolution;
/// `prev_box` is in working pixels and `scale` is only recorded.
pub fn analyze_working(
    prev: &GrayImage,
    curr: &GrayImage,
    prev_box: &BoundingBox,
    scale: f64,
    params: &BackgroundParams,
) -> Result<MotionAnalysis> {
    if prev.width != curr.width || prev.height != curr.height {
        return Err(Error::DimensionMismatch("frames differ in size".into()));
    }
    let kps = detect_keypoints(prev, params.max_points, Some(prev_box), params)?;
    let pairs = match_points(prev, curr, &kps, params.match_radius, params.match_patch, params.min_ncc)?;
    let fit = fit_affine(&pairs, params.trim_residual)?;
    let (warped, mask) = warp_image(prev, &fit.model)?;
    let dmap = diff_map(&warped, curr, &mask)?;
    Ok(MotionAnalysis { scale, fit, dmap })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(src: (f64, f64), m: &AffineModel) -> Correspondence {
        Correspondence {
            src,
            dst: m.apply(src.0, src.1),
            ncc: 1.0,
        }
    }

    #[test]
    fn affine_identity_and_translation() {
        let pts = [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0), (7.0, 3.0)];
        let id: Vec<_> = pts.iter().map(|&p| pair(p, &AffineModel::identity())).collect();
        let m = fit_affine(&id, 3.0).unwrap().model;
        for (a, b) in m.params().iter().zip(AffineModel::identity().params()) {
            assert!((a - b).abs() < 1e-12);
        }
        let t = AffineModel::translation(5.0, 3.0);
        let tr: Vec<_> = pts.iter().map(|&p| pair(p, &t)).collect();
        let m = fit_affine(&tr, 3.0).unwrap().model;
        for (a, b) in m.params().iter().zip(t.params()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn collinear_points_are_degenerate() {
        let m = AffineModel::translation(1.0, 1.0);
        let pts: Vec<_> = (0..5).map(|i| pair((i as f64, 2.0 * i as f64), &m)).collect();
        assert!(matches!(fit_affine(&pts, 3.0), Err(Error::DegenerateConfiguration)));
        assert!(matches!(fit_affine(&pts[..2], 3.0), Err(Error::DegenerateConfiguration)));
    }

    #[test]
    fn inverse_and_compose() {
        let m = AffineModel {
            a0: 3.0,
            a1: 1.1,
            a2: 0.2,
            b0: -2.0,
            b1: -0.1,
            b2: 0.9,
        };
        let inv = m.inverse().unwrap();
        let id = inv.compose(&m);
        for (a, b) in id.params().iter().zip(AffineModel::identity().params()) {
            assert!((a - b).abs() < 1e-12);
        }
        let singular = AffineModel {
            a1: 1.0,
            a2: 2.0,
            b1: 0.5,
            b2: 1.0,
            ..AffineModel::identity()
        };
        assert!(matches!(singular.inverse(), Err(Error::DegenerateModel)));
    }

    #[test]
    fn identity_warp_is_identity() {
        let img = GrayImage::from_fn(17, 11, |x, y| ((x * 5 + y * 3) % 13) as f32 / 13.0);
        let (out, mask) = warp_image(&img, &AffineModel::identity()).unwrap();
        assert!(mask.iter().all(|&m| m));
        assert_eq!(out.values, img.values);
    }

    #[test]
    fn ramp_translation() {
        let slope = 0.01f32;
        let img = GrayImage::from_fn(60, 20, |x, _| x as f32 * slope);
        let (out, mask) = warp_image(&img, &AffineModel::translation(5.0, 0.0)).unwrap();
        for y in 0..20 {
            for x in 0..60 {
                let m = mask[y * 60 + x];
                assert_eq!(m, x >= 5);
                if m {
                    assert!((out.get(x, y) - (img.get(x, y) - 5.0 * slope)).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn invalid_pixels_have_out_of_frame_preimages() {
        let img = GrayImage::from_fn(30, 25, |x, y| (x + y) as f32 / 60.0);
        let m = AffineModel {
            a0: 4.0,
            a1: 0.95,
            a2: 0.1,
            b0: -3.0,
            b1: -0.05,
            b2: 1.05,
        };
        let (_, mask) = warp_image(&img, &m).unwrap();
        let inv = m.inverse().unwrap();
        for y in 0..25 {
            for x in 0..30 {
                let (sx, sy) = inv.apply(x as f64, y as f64);
                let inside = sx >= -1e-9 && sy >= -1e-9 && sx <= 29.0 + 1e-9 && sy <= 24.0 + 1e-9;
                assert_eq!(mask[y * 30 + x], inside);
            }
        }
    }

    #[test]
    fn diff_of_equal_images_is_zero() {
        let img = GrayImage::from_fn(12, 9, |x, y| ((x * y) % 5) as f32 / 5.0);
        let d = diff_map(&img, &img, &vec![true; 108]).unwrap();
        assert!(d.data.iter().all(|&v| v == 0.0));
        let other = GrayImage::filled(12, 8, 0.0);
        assert!(matches!(diff_map(&img, &other, &vec![true; 96]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn diff_is_bounded_and_masked() {
        let a = GrayImage::from_fn(20, 20, |x, _| if x < 10 { 0.0 } else { 1.0 });
        let b = GrayImage::from_fn(20, 20, |x, _| if x < 10 { 1.0 } else { 0.0 });
        let valid: Vec<bool> = (0..400).map(|i| i % 7 != 0).collect();
        let d = diff_map(&a, &b, &valid).unwrap();
        for (i, &v) in d.data.iter().enumerate() {
            assert!((0.0..=1.0).contains(&v));
            if !valid[i] {
                assert_eq!(v, 0.0);
            }
        }
    }

    fn blob_map(w: usize, h: usize, blobs: &[(usize, usize, usize, usize, f32)]) -> DifferenceMap {
        let mut data = vec![0.0; w * h];
        for &(x0, y0, bw, bh, v) in blobs {
            for y in y0..y0 + bh {
                for x in x0..x0 + bw {
                    data[y * w + x] = v;
                }
            }
        }
        DifferenceMap::from_residual(w, h, data)
    }

    #[test]
    fn background_candidates() {
        let p = BackgroundParams::default();
        assert!(propose_background(&blob_map(50, 40, &[]), &p).is_none());

        let single = blob_map(80, 60, &[(20, 10, 12, 8, 0.6)]);
        let c = propose_background(&single, &p).unwrap();
        assert!((c.bbox.cx - c.centroid.0).abs() < 2.0 && (c.bbox.cy - c.centroid.1).abs() < 2.0);
        assert!((c.bbox.cx - 26.0).abs() < 1e-9 && (c.bbox.cy - 14.0).abs() < 1e-9);

        // masses 1000 vs 100
        let two = blob_map(100, 100, &[(5, 5, 25, 40, 1.0), (60, 60, 10, 10, 1.0)]);
        let c = propose_background(&two, &p).unwrap();
        assert!((c.mass - 1000.0).abs() < 1e-6);
        assert_eq!((c.bbox.cx, c.bbox.cy), (17.5, 25.0));

        // too small
        assert!(propose_background(&blob_map(30, 30, &[(3, 3, 4, 4, 0.9)]), &p).is_none());
    }

    #[test]
    fn shape_of_rectangle() {
        let d = blob_map(100, 80, &[(30, 30, 20, 10, 1.0)]);
        let region = BoundingBox::from_top_left(30.0, 30.0, 20.0, 10.0);
        let s = estimate_shape(&d, &region, 0.1).unwrap();
        assert_eq!((s.width, s.height), (20.0, 10.0));
        assert_eq!((s.x_min, s.x_max, s.y_min, s.y_max), (30.0, 50.0, 30.0, 40.0));
        let zero = blob_map(100, 80, &[]);
        assert!(matches!(estimate_shape(&zero, &region, 0.1), Err(Error::NoShape)));
    }

    #[test]
    fn keypoints_on_constant_image() {
        let img = GrayImage::filled(64, 64, 0.3);
        assert!(matches!(
            detect_keypoints(&img, 50, None, &BackgroundParams::default()),
            Err(Error::TooFewKeypoints(0))
        ));
    }
}
