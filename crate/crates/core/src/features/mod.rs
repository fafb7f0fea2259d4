//! Feature maps for the correlation filter: 31-channel HOG, 10-channel
//! color names, plus the cosine window, regression label and spatial
//! regularization weight that share the cell grid.

mod colornames;
mod hog;

pub use colornames::{ColorNameTable, CN_CHANNELS, CN_TABLE_ENTRIES};
pub use hog::{hog, HOG_CHANNELS};

use crate::error::{Error, Result};
use crate::media::Patch;

/// Channel-major feature tensor over a grid of `cells_y x cells_x` cells.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub cells_x: usize,
    pub cells_y: usize,
    pub depth: usize,
    pub cell_size: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn zeros(cells_y: usize, cells_x: usize, depth: usize, cell_size: usize) -> Self {
        Self {
            cells_x,
            cells_y,
            depth,
            cell_size,
            data: vec![0.0; cells_x * cells_y * depth],
        }
    }

    pub fn cells(&self) -> usize {
        self.cells_x * self.cells_y
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, d: usize) -> f64 {
        self.data[(d * self.cells_y + y) * self.cells_x + x]
    }

    #[inline]
    pub fn get_mut(&mut self, y: usize, x: usize, d: usize) -> &mut f64 {
        &mut self.data[(d * self.cells_y + y) * self.cells_x + x]
    }

    pub fn channel(&self, d: usize) -> &[f64] {
        let n = self.cells();
        &self.data[d * n..(d + 1) * n]
    }

    pub fn channel_mut(&mut self, d: usize) -> &mut [f64] {
        let n = self.cells();
        &mut self.data[d * n..(d + 1) * n]
    }

    /// Multiplies every channel by `window` element-wise.
    pub fn apply_window(&mut self, window: &Grid) {
        assert_eq!((window.rows, window.cols), (self.cells_y, self.cells_x));
        for d in 0..self.depth {
            for (v, w) in self.channel_mut(d).iter_mut().zip(&window.data) {
                *v *= w;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Dense row-major real grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Grid {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Index of the center cell, `floor(n / 2)` along each axis.
    pub fn center(&self) -> (usize, usize) {
        (self.rows / 2, self.cols / 2)
    }
}

/// Gaussian regression target with its bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    pub grid: Grid,
    pub sigma: f64,
}

/// Per-cell spatial regularization weight.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialWeight {
    pub grid: Grid,
}

/// HOG, then color names when `use_cn` is set and the patch has color.
pub fn extract_features(patch: &Patch, cell_size: usize, use_cn: bool) -> Result<FeatureMap> {
    extract_features_with(patch, cell_size, use_cn.then(ColorNameTable::builtin))
}

pub fn extract_features_with(
    patch: &Patch,
    cell_size: usize,
    table: Option<&ColorNameTable>,
) -> Result<FeatureMap> {
    if cell_size == 0
        || patch.width % cell_size != 0
        || patch.height % cell_size != 0
        || patch.width == 0
        || patch.height == 0
    {
        return Err(Error::BadGeometry {
            width: patch.width,
            height: patch.height,
            cell: cell_size,
        });
    }
    let hog_map = hog(patch, cell_size);
    match table {
        Some(table) if patch.channels == 3 => {
            let cn = table.cell_features(patch, cell_size);
            let mut data = hog_map.data;
            data.extend_from_slice(&cn.data);
            Ok(FeatureMap {
                depth: HOG_CHANNELS + CN_CHANNELS,
                data,
                ..hog_map
            })
        }
        _ => Ok(hog_map),
    }
}

/// Separable Hann window, `h(k) = 0.5 - 0.5 cos(2 pi k / (n - 1))`.
pub fn cosine_window(n_y: usize, n_x: usize) -> Grid {
    let hann = |n: usize| -> Vec<f64> {
        if n == 1 {
            return vec![1.0];
        }
        (0..n)
            .map(|k| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos())
            .collect()
    };
    let hy = hann(n_y);
    let hx = hann(n_x);
    Grid::from_fn(n_y, n_x, |i, j| hy[i] * hx[j])
}

/// Centered Gaussian label with `sigma = sigma_factor * sqrt(w * h)`, the
/// target size given in cells.
pub fn gaussian_label(n_y: usize, n_x: usize, sigma_factor: f64, target_cells: (f64, f64)) -> LabelMap {
    let sigma = sigma_factor * (target_cells.0 * target_cells.1).sqrt();
    let (cy, cx) = ((n_y / 2) as f64, (n_x / 2) as f64);
    let denom = 2.0 * sigma * sigma;
    let grid = Grid::from_fn(n_y, n_x, |i, j| {
        let d2 = (i as f64 - cy).powi(2) + (j as f64 - cx).powi(2);
        (-d2 / denom).exp()
    });
    LabelMap { grid, sigma }
}

/// Quadratic bowl `w_min + slope * (((i - cy) / h)^2 + ((j - cx) / w)^2)`.
pub fn spatial_weight(n_y: usize, n_x: usize, target_cells: (f64, f64), w_min: f64, w_slope: f64) -> SpatialWeight {
    let (tw, th) = target_cells;
    let (cy, cx) = ((n_y / 2) as f64, (n_x / 2) as f64);
    let grid = Grid::from_fn(n_y, n_x, |i, j| {
        w_min + w_slope * (((i as f64 - cy) / th).powi(2) + ((j as f64 - cx) / tw).powi(2))
    });
    SpatialWeight { grid }
}
