//! Box history and PCA line-fit prediction of the next center and size.

use std::collections::VecDeque;

use crate::bgmotion::ShapeEstimate;
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

/// Covariance trace below which the displacement cloud counts as a point.
const DEGENERATE_VARIANCE: f64 = 1e-12;
/// Smallest predicted box side, in pixels.
const MIN_SIDE: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBuffer {
    capacity: usize,
    boxes: VecDeque<BoundingBox>,
}

impl TrajectoryBuffer {
    pub fn new(capacity: usize) -> Self {
        let capacity = capacity.max(1);
        Self {
            capacity,
            boxes: VecDeque::with_capacity(capacity + 1),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn last(&self) -> Option<&BoundingBox> {
        self.boxes.back()
    }

    pub fn iter(&self) -> impl Iterator<Item = &BoundingBox> {
        self.boxes.iter()
    }

    pub fn push(&mut self, b: BoundingBox) {
        self.boxes.push_back(b);
        while self.boxes.len() > self.capacity {
            self.boxes.pop_front();
        }
    }

    /// Next center from the stored centers.
    pub fn predict_center(&self) -> Result<(f64, f64)> {
        let last = self.last().ok_or(Error::InsufficientHistory)?;
        let pts: Vec<[f64; 2]> = self.boxes.iter().map(|b| [b.cx, b.cy]).collect();
        let d = predict_step(&pts)?;
        Ok((last.cx + d[0], last.cy + d[1]))
    }

    /// Next size from the stored sizes, floored at 2x2 pixels.
    pub fn predict_size(&self) -> Result<(f64, f64)> {
        let last = self.last().ok_or(Error::InsufficientHistory)?;
        let pts: Vec<[f64; 2]> = self.boxes.iter().map(|b| [b.w, b.h]).collect();
        let d = predict_step(&pts)?;
        Ok(((last.w + d[0]).max(MIN_SIDE), (last.h + d[1]).max(MIN_SIDE)))
    }

    /// Predicted box, or the last box when history is too short.
    pub fn predict_box(&self) -> Option<BoundingBox> {
        let last = *self.last()?;
        match (self.predict_center(), self.predict_size()) {
            (Ok((cx, cy)), Ok((w, h))) => Some(BoundingBox::new(cx, cy, w, h)),
            _ => Some(last),
        }
    }

    /// True when `candidate` strays more than `tolerance` (relative) from the
    /// predicted size along either axis. The boundary itself is accepted.
    pub fn reject_deviation(&self, candidate: &ShapeEstimate, tolerance: f64) -> bool {
        let (w, h) = match self.predict_size() {
            Ok(s) => s,
            Err(_) => match self.last() {
                Some(b) => (b.w, b.h),
                None => return true,
            },
        };
        (candidate.width - w).abs() > tolerance * w || (candidate.height - h).abs() > tolerance * h
    }
}

/// One-step displacement prediction for a sequence of 2-D points.
///
/// The consecutive displacements are centered and projected on their first
/// principal axis; a least-squares line through (index, score) is
/// extrapolated one index and mapped back, the second component dropped.
/// A zero-variance cloud predicts its mean.
pub fn predict_step(points: &[[f64; 2]]) -> Result<[f64; 2]> {
    if points.len() < 2 {
        return Err(Error::InsufficientHistory);
    }
    let deltas: Vec<[f64; 2]> = points.windows(2).map(|w| [w[1][0] - w[0][0], w[1][1] - w[0][1]]).collect();
    let n = deltas.len() as f64;
    let mean = [
        deltas.iter().map(|d| d[0]).sum::<f64>() / n,
        deltas.iter().map(|d| d[1]).sum::<f64>() / n,
    ];
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for d in &deltas {
        let (a, b) = (d[0] - mean[0], d[1] - mean[1]);
        sxx += a * a;
        sxy += a * b;
        syy += b * b;
    }
    let scale = mean[0].abs().max(mean[1].abs()).max(1.0);
    if (sxx + syy) / n <= DEGENERATE_VARIANCE * scale * scale {
        return Ok(mean);
    }
    let axis = principal_axis(sxx, sxy, syy);
    let scores: Vec<f64> = deltas
        .iter()
        .map(|d| (d[0] - mean[0]) * axis[0] + (d[1] - mean[1]) * axis[1])
        .collect();
    let next = extrapolate_line(&scores);
    Ok([mean[0] + next * axis[0], mean[1] + next * axis[1]])
}

/// Unit eigenvector of the largest eigenvalue of `[[a, b], [b, c]]`.
fn principal_axis(a: f64, b: f64, c: f64) -> [f64; 2] {
    let half_diff = 0.5 * (a - c);
    let root = half_diff.hypot(b);
    let lambda = 0.5 * (a + c) + root;
    // pick the better-conditioned of the two eigenvector forms
    let v = if a >= c {
        [lambda - c, b]
    } else {
        [b, lambda - a]
    };
    let norm = v[0].hypot(v[1]);
    if norm == 0.0 {
        [1.0, 0.0]
    } else {
        [v[0] / norm, v[1] / norm]
    }
}

/// OLS line through `(i, values[i])`, evaluated at `i = values.len()`.
fn extrapolate_line(values: &[f64]) -> f64 {
    let n = values.len();
    if n == 1 {
        return values[0];
    }
    let nf = n as f64;
    let tm = (nf - 1.0) / 2.0;
    let vm = values.iter().sum::<f64>() / nf;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, v) in values.iter().enumerate() {
        let t = i as f64 - tm;
        num += t * (v - vm);
        den += t * t;
    }
    let slope = num / den;
    vm + slope * (nf - tm)
}
