//! Felzenszwalb-style HOG: 18 contrast-sensitive orientations, 9
//! contrast-insensitive orientations and 4 gradient-energy channels, each
//! cell normalized against the four 2x2 blocks that contain it.

use std::f64::consts::PI;

use super::FeatureMap;
use crate::media::Patch;

pub const HOG_CHANNELS: usize = 31;

const ORIENTS: usize = 9;
const EPS: f64 = 1e-4;
const TRUNC: f64 = 0.2;
const TEXTURE_SCALE: f64 = 0.2357;

pub fn hog(patch: &Patch, cell: usize) -> FeatureMap {
    let (w, h) = (patch.width, patch.height);
    let (nx, ny) = (w / cell, h / cell);
    let mut hist = vec![0.0f64; nx * ny * 2 * ORIENTS];

    let units: Vec<(f64, f64)> = (0..ORIENTS)
        .map(|o| {
            let a = o as f64 * PI / ORIENTS as f64;
            (a.cos(), a.sin())
        })
        .collect();

    // bilinear vote targets per pixel column / row: (first cell, weight of it)
    let votes = |n: usize| -> Vec<(isize, f64)> {
        (0..n)
            .map(|i| {
                let p = (i as f64 + 0.5) / cell as f64 - 0.5;
                let ip = p.floor();
                (ip as isize, 1.0 - (p - ip))
            })
            .collect()
    };
    let xv = votes(w);
    let yv = votes(h);
    let ch = patch.channels;
    let data = &patch.data;
    let idx = |x: usize, y: usize| (y * w + x) * ch;

    for y in 0..h {
        let (ym, yp) = (y.saturating_sub(1), (y + 1).min(h - 1));
        let (iy, wy0) = yv[y];
        for x in 0..w {
            let (xm, xp) = (x.saturating_sub(1), (x + 1).min(w - 1));
            // strongest channel wins
            let (mut dx, mut dy, mut mag2) = (0.0f64, 0.0f64, 0.0f64);
            let (a, b, c, d) = (idx(xp, y), idx(xm, y), idx(x, yp), idx(x, ym));
            for k in 0..ch {
                let gx = (data[a + k] - data[b + k]) as f64;
                let gy = (data[c + k] - data[d + k]) as f64;
                let m = gx * gx + gy * gy;
                if m > mag2 {
                    (dx, dy, mag2) = (gx, gy, m);
                }
            }
            if mag2 == 0.0 {
                continue;
            }

            let mut best = 0.0;
            let mut orient = 0;
            for (o, &(u, v)) in units.iter().enumerate() {
                let dot = u * dx + v * dy;
                if dot > best {
                    best = dot;
                    orient = o;
                } else if -dot > best {
                    best = -dot;
                    orient = o + ORIENTS;
                }
            }
            let mag = mag2.sqrt();

            // bilinear vote into the four surrounding cells
            let (ix, wx0) = xv[x];
            for (cy, wy) in [(iy, wy0), (iy + 1, 1.0 - wy0)] {
                if cy < 0 || cy as usize >= ny {
                    continue;
                }
                let row = cy as usize * nx;
                for (cx, wx) in [(ix, wx0), (ix + 1, 1.0 - wx0)] {
                    if cx >= 0 && (cx as usize) < nx {
                        hist[(row + cx as usize) * 2 * ORIENTS + orient] += wx * wy * mag;
                    }
                }
            }
        }
    }

    let norm: Vec<f64> = hist
        .chunks_exact(2 * ORIENTS)
        .map(|hc| (0..ORIENTS).map(|o| (hc[o] + hc[o + ORIENTS]).powi(2)).sum())
        .collect();
    let norm_at = |x: isize, y: isize| -> f64 {
        let x = x.clamp(0, nx as isize - 1) as usize;
        let y = y.clamp(0, ny as isize - 1) as usize;
        norm[y * nx + x]
    };
    let block = |x0: isize, y0: isize| -> f64 {
        let s = norm_at(x0, y0) + norm_at(x0 + 1, y0) + norm_at(x0, y0 + 1) + norm_at(x0 + 1, y0 + 1);
        1.0 / (s + EPS).sqrt()
    };

    let mut out = FeatureMap::zeros(ny, nx, HOG_CHANNELS, cell);
    for y in 0..ny {
        for x in 0..nx {
            let (xi, yi) = (x as isize, y as isize);
            let ns = [block(xi, yi), block(xi - 1, yi), block(xi, yi - 1), block(xi - 1, yi - 1)];
            let src = &hist[(y * nx + x) * 2 * ORIENTS..(y * nx + x + 1) * 2 * ORIENTS];
            let mut texture = [0.0; 4];

            for (o, &v) in src.iter().enumerate() {
                let mut sum = 0.0;
                for (k, n) in ns.iter().enumerate() {
                    let t = (v * n).min(TRUNC);
                    sum += t;
                    texture[k] += t;
                }
                *out.get_mut(y, x, o) = 0.5 * sum;
            }
            for o in 0..ORIENTS {
                let v = src[o] + src[o + ORIENTS];
                let sum: f64 = ns.iter().map(|n| (v * n).min(TRUNC)).sum();
                *out.get_mut(y, x, 2 * ORIENTS + o) = 0.5 * sum;
            }
            for (k, t) in texture.iter().enumerate() {
                *out.get_mut(y, x, 3 * ORIENTS + k) = TEXTURE_SCALE * t;
            }
        }
    }
    out
}
