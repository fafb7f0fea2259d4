//! Color-name features from a 32768-entry RGB lookup table.
//!
//! Table layout: entry `(r >> 3) * 1024 + (g >> 3) * 32 + (b >> 3)` holds
//! 10 little-endian `f32` values, so the file is `32768 * 10 * 4` bytes.
//!
//! The bundled table is generated by [`ColorNameTable::generate`]: a soft
//! assignment of each bin's center color to eleven basic color prototypes
//! in CIELAB, mapped to 10 dimensions with an orthonormal basis of the
//! sum-to-zero subspace (the eleven probabilities always sum to one).

use std::path::Path;
use std::sync::OnceLock;

use super::FeatureMap;
use crate::error::{Error, Result};
use crate::media::Patch;

pub const CN_CHANNELS: usize = 10;
pub const CN_TABLE_ENTRIES: usize = 32768;
const TABLE_BYTES: usize = CN_TABLE_ENTRIES * CN_CHANNELS * 4;

static BUILTIN_BYTES: &[u8] = include_bytes!("../../assets/color_names.bin");

/// black, blue, brown, grey, green, orange, pink, purple, red, white, yellow
const PROTOTYPES: [[f64; 3]; 11] = [
    [0.0, 0.0, 0.0],
    [0.0, 0.0, 255.0],
    [139.0, 69.0, 19.0],
    [128.0, 128.0, 128.0],
    [0.0, 160.0, 0.0],
    [255.0, 140.0, 0.0],
    [255.0, 160.0, 190.0],
    [128.0, 0.0, 128.0],
    [220.0, 0.0, 0.0],
    [255.0, 255.0, 255.0],
    [255.0, 255.0, 0.0],
];

/// Bandwidth of the prototype soft assignment, in CIELAB units.
const LAB_SIGMA: f64 = 25.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ColorNameTable {
    values: Vec<f32>,
}

impl ColorNameTable {
    pub fn builtin() -> &'static ColorNameTable {
        static TABLE: OnceLock<ColorNameTable> = OnceLock::new();
        TABLE.get_or_init(|| ColorNameTable::from_le_bytes(BUILTIN_BYTES).expect("bundled color-name table"))
    }

    pub fn from_le_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != TABLE_BYTES {
            return Err(Error::BadColorTable {
                expected: TABLE_BYTES,
                got: bytes.len(),
            });
        }
        let values = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect();
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_le_bytes(&bytes)
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    pub fn generate() -> Self {
        let protos: Vec<[f64; 3]> = PROTOTYPES.iter().map(|p| srgb_to_lab(*p)).collect();
        let basis = helmert_basis();
        let mut values = Vec::with_capacity(CN_TABLE_ENTRIES * CN_CHANNELS);
        for idx in 0..CN_TABLE_ENTRIES {
            let rgb = [
                ((idx >> 10) * 8 + 4) as f64,
                (((idx >> 5) & 31) * 8 + 4) as f64,
                ((idx & 31) * 8 + 4) as f64,
            ];
            let lab = srgb_to_lab(rgb);
            let logits: Vec<f64> = protos
                .iter()
                .map(|p| {
                    let d2: f64 = p.iter().zip(&lab).map(|(a, b)| (a - b).powi(2)).sum();
                    -d2 / (2.0 * LAB_SIGMA * LAB_SIGMA)
                })
                .collect();
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            for row in &basis {
                let v: f64 = row.iter().zip(&exps).map(|(b, e)| b * e / total).sum();
                values.push(v as f32);
            }
        }
        Self { values }
    }

    #[inline]
    pub fn lookup(&self, r: u8, g: u8, b: u8) -> &[f32] {
        let idx = ((r as usize) >> 3) * 1024 + ((g as usize) >> 3) * 32 + ((b as usize) >> 3);
        &self.values[idx * CN_CHANNELS..(idx + 1) * CN_CHANNELS]
    }

    /// Per-cell mean of the table entries over a 3-channel patch.
    pub fn cell_features(&self, patch: &Patch, cell: usize) -> FeatureMap {
        debug_assert_eq!(patch.channels, 3);
        let (nx, ny) = (patch.width / cell, patch.height / cell);
        let mut out = FeatureMap::zeros(ny, nx, CN_CHANNELS, cell);
        let to_u8 = |v: f32| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        let inv = 1.0 / (cell * cell) as f64;
        let plane = nx * ny;
        let mut acc = vec![0.0f32; nx * CN_CHANNELS];
        for cy in 0..ny {
            acc.iter_mut().for_each(|v| *v = 0.0);
            for y in cy * cell..(cy + 1) * cell {
                for x in 0..nx * cell {
                    let i = (y * patch.width + x) * 3;
                    let e = self.lookup(to_u8(patch.data[i]), to_u8(patch.data[i + 1]), to_u8(patch.data[i + 2]));
                    let a = &mut acc[(x / cell) * CN_CHANNELS..(x / cell + 1) * CN_CHANNELS];
                    for (s, &v) in a.iter_mut().zip(e) {
                        *s += v;
                    }
                }
            }
            for cx in 0..nx {
                for d in 0..CN_CHANNELS {
                    out.data[d * plane + cy * nx + cx] = acc[cx * CN_CHANNELS + d] as f64 * inv;
                }
            }
        }
        out
    }
}

/// Rows of an orthonormal basis for vectors in R^11 summing to zero.
fn helmert_basis() -> Vec<[f64; 11]> {
    (1..11)
        .map(|k| {
            let norm = ((k * (k + 1)) as f64).sqrt();
            let mut row = [0.0; 11];
            for v in row.iter_mut().take(k) {
                *v = 1.0 / norm;
            }
            row[k] = -(k as f64) / norm;
            row
        })
        .collect()
}

fn srgb_to_lab(rgb: [f64; 3]) -> [f64; 3] {
    let lin = rgb.map(|c| {
        let c = c / 255.0;
        if c <= 0.04045 {
            c / 12.92
        } else {
            ((c + 0.055) / 1.055).powf(2.4)
        }
    });
    let x = (0.4124 * lin[0] + 0.3576 * lin[1] + 0.1805 * lin[2]) / 0.95047;
    let y = 0.2126 * lin[0] + 0.7152 * lin[1] + 0.0722 * lin[2];
    let z = (0.0193 * lin[0] + 0.1192 * lin[1] + 0.9505 * lin[2]) / 1.08883;
    let f = |t: f64| {
        if t > 216.0 / 24389.0 {
            t.cbrt()
        } else {
            (24389.0 / 27.0 * t + 16.0) / 116.0
        }
    };
    let (fx, fy, fz) = (f(x), f(y), f(z));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}
