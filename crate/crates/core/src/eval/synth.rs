use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bgmotion::AffineModel;
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::media::{self, Attribute, Frame, SequenceSpec};

/// Initial object box and texture block size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectSpec {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    /// Side of the object's texture blocks, in object pixels.
    pub block: f64,
}

impl Default for ObjectSpec {
    fn default() -> Self {
        Self {
            cx: 160.0,
            cy: 120.0,
            w: 32.0,
            h: 32.0,
            block: 6.0,
        }
    }
}

/// Background mosaic: block side in pixels, channel value range, and the
/// amplitude of the finer detail layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackgroundSpec {
    pub block: f64,
    pub lo: f32,
    pub hi: f32,
    pub detail: f32,
}

impl Default for BackgroundSpec {
    fn default() -> Self {
        Self {
            block: 32.0,
            lo: 0.3,
            hi: 0.7,
            detail: 0.03,
        }
    }
}

/// `frames` steps of constant velocity with a per-step size factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotionSegment {
    pub frames: usize,
    pub vx: f64,
    pub vy: f64,
    pub growth: f64,
}

impl Default for MotionSegment {
    fn default() -> Self {
        Self {
            frames: 1,
            vx: 0.0,
            vy: 0.0,
            growth: 1.0,
        }
    }
}

/// A textured rectangle (top-left and size, frame pixels) drawn over
/// everything on frames `start..end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Occluder {
    pub start: usize,
    pub end: usize,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

/// Background motion between consecutive frames, in pixel-index
/// coordinates: frame `t + 1` at `model(p)` shows what frame `t` showed at
/// `p`.
pub type CameraMotion = AffineModel;

/// Everything needed to render a synthetic sequence. One seed drives all
/// randomness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub name: String,
    pub frames: usize,
    pub width: usize,
    pub height: usize,
    pub object: ObjectSpec,
    pub background: BackgroundSpec,
    /// Applied in order from frame 1; the object rests afterwards.
    pub motion: Vec<MotionSegment>,
    pub occluders: Vec<Occluder>,
    pub camera: CameraMotion,
    /// Standard deviation of additive pixel noise, in [0, 1] units.
    pub noise: f64,
    pub seed: u64,
    /// Minimum fraction of the object box that must stay inside the frame.
    pub min_visible: f64,
    pub attributes: BTreeSet<Attribute>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            frames: 50,
            width: 320,
            height: 240,
            object: ObjectSpec::default(),
            background: BackgroundSpec::default(),
            motion: Vec::new(),
            occluders: Vec::new(),
            camera: AffineModel::identity(),
            noise: 0.0,
            seed: 0,
            min_visible: 0.5,
            attributes: BTreeSet::new(),
        }
    }
}

impl SynthSpec {
    /// Reads a spec from JSON (`.json`) or TOML (anything else).
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|message| Error::Parse {
            path: path.to_path_buf(),
            message,
        })
    }

    /// Ground-truth boxes from the motion program.
    pub fn trajectory(&self) -> Vec<BoundingBox> {
        let mut b = BoundingBox::new(self.object.cx, self.object.cy, self.object.w, self.object.h);
        let mut steps = self.motion.iter().flat_map(|s| std::iter::repeat_n(*s, s.frames));
        let mut out = Vec::with_capacity(self.frames);
        for t in 0..self.frames {
            if t > 0 {
                if let Some(s) = steps.next() {
                    b = BoundingBox::new(b.cx + s.vx, b.cy + s.vy, b.w * s.growth, b.h * s.growth);
                }
            }
            out.push(b);
        }
        out
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::SpecInfeasible(m));
        if self.frames == 0 || self.width < 16 || self.height < 16 {
            return bad("need at least one frame of at least 16x16 pixels".into());
        }
        if !(self.object.w >= 4.0 && self.object.h >= 4.0 && self.object.block > 0.0) {
            return bad("object must be at least 4x4 pixels".into());
        }
        let bg = &self.background;
        if !(bg.block > 0.0 && bg.lo <= bg.hi && bg.detail >= 0.0) {
            return bad("background needs a positive block and lo <= hi".into());
        }
        if !(self.noise >= 0.0) || !(0.0..=1.0).contains(&self.min_visible) {
            return bad("noise must be non-negative and min_visible within [0, 1]".into());
        }
        if self.motion.iter().any(|s| !(s.growth > 0.0) || !s.vx.is_finite() || !s.vy.is_finite()) {
            return bad("motion segments need finite velocity and positive growth".into());
        }
        if self.camera.is_degenerate() {
            return bad("camera model is degenerate".into());
        }
        if self.occluders.iter().any(|o| !(o.w > 0.0 && o.h > 0.0) || o.start > o.end) {
            return bad("occluders need positive size and start <= end".into());
        }
        Ok(())
    }
}

/// A rendered sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSequence {
    pub name: String,
    pub frames: Vec<Frame>,
    pub ground_truth: Vec<BoundingBox>,
    pub camera: CameraMotion,
    pub attributes: BTreeSet<Attribute>,
}

/// Random block mosaic, 3x3 smoothed, in [0, 1] RGB.
struct Texture {
    width: usize,
    height: usize,
    rgb: Vec<[f32; 3]>,
}

impl Texture {
    fn mosaic(rng: &mut ChaCha8Rng, width: usize, height: usize, block: f64, lo: f32, hi: f32, fine: f32) -> Self {
        let bw = ((width as f64 / block).ceil() as usize).max(1);
        let bh = ((height as f64 / block).ceil() as usize).max(1);
        let coarse: Vec<[f32; 3]> = (0..bw * bh)
            .map(|_| [rng.random_range(lo..=hi), rng.random_range(lo..=hi), rng.random_range(lo..=hi)])
            .collect();
        let fb = (block / 3.0).max(1.0);
        let fw = (width as f64 / fb).ceil() as usize + 1;
        let fh = (height as f64 / fb).ceil() as usize + 1;
        let detail: Vec<f32> = (0..fw * fh).map(|_| rng.random_range(-fine..=fine)).collect();
        let mut rgb = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let c = coarse[((y as f64 / block) as usize).min(bh - 1) * bw + ((x as f64 / block) as usize).min(bw - 1)];
                let d = detail[(y as f64 / fb) as usize * fw + (x as f64 / fb) as usize];
                rgb.push([c[0] + d, c[1] + d, c[2] + d]);
            }
        }
        let mut tex = Self { width, height, rgb };
        tex.smooth();
        tex
    }

    fn smooth(&mut self) {
        let (w, h) = (self.width, self.height);
        let mut out = self.rgb.clone();
        for y in 0..h {
            for x in 0..w {
                let mut acc = [0.0f32; 3];
                let mut n = 0.0;
                for yy in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                    for xx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                        let v = self.rgb[yy * w + xx];
                        acc[0] += v[0];
                        acc[1] += v[1];
                        acc[2] += v[2];
                        n += 1.0;
                    }
                }
                out[y * w + x] = [acc[0] / n, acc[1] / n, acc[2] / n];
            }
        }
        self.rgb = out;
    }

    /// Bilinear sample at pixel-index coordinates, edges replicated.
    fn sample(&self, x: f64, y: f64) -> [f32; 3] {
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let (x0, y0) = (x.floor() as usize, y.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(self.width - 1), (y0 + 1).min(self.height - 1));
        let (fx, fy) = ((x - x0 as f64) as f32, (y - y0 as f64) as f32);
        let p = |xx: usize, yy: usize| self.rgb[yy * self.width + xx];
        let (a, b, c, d) = (p(x0, y0), p(x1, y0), p(x0, y1), p(x1, y1));
        let mut out = [0.0; 3];
        for k in 0..3 {
            let top = a[k] * (1.0 - fx) + b[k] * fx;
            let bot = c[k] * (1.0 - fx) + d[k] * fx;
            out[k] = top * (1.0 - fy) + bot * fy;
        }
        out
    }
}

fn visible_fraction(b: &BoundingBox, width: usize, height: usize) -> f64 {
    let iw = (b.right().min(width as f64) - b.left().max(0.0)).max(0.0);
    let ih = (b.bottom().min(height as f64) - b.top().max(0.0)).max(0.0);
    iw * ih / b.area()
}

/// Renders a textured object over a textured, camera-moved background.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<SynthSequence> {
    spec.validate()?;
    let gt = spec.trajectory();
    for (t, b) in gt.iter().enumerate() {
        if visible_fraction(b, spec.width, spec.height) < spec.min_visible {
            return Err(Error::SpecInfeasible(format!(
                "object is less than {:.0}% inside the frame at frame {t}",
                spec.min_visible * 100.0
            )));
        }
    }

    // inverse camera maps per frame: frame t pixel -> world pixel
    let cam_inv = spec.camera.inverse().map_err(|_| Error::SpecInfeasible("camera model is degenerate".into()))?;
    let mut inv = Vec::with_capacity(spec.frames);
    let mut m = AffineModel::identity();
    for _ in 0..spec.frames {
        inv.push(m);
        m = m.compose(&cam_inv);
    }
    let (w, h) = (spec.width as f64, spec.height as f64);
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for m in &inv {
        for (cx, cy) in [(-1.0, -1.0), (w, -1.0), (-1.0, h), (w, h)] {
            let (u, v) = m.apply(cx, cy);
            x0 = x0.min(u);
            y0 = y0.min(v);
            x1 = x1.max(u);
            y1 = y1.max(v);
        }
    }
    let (ox, oy) = (x0.floor() - 2.0, y0.floor() - 2.0);
    let tw = (x1.ceil() + 3.0 - ox) as usize;
    let th = (y1.ceil() + 3.0 - oy) as usize;
    if tw * th > 64_000_000 {
        return Err(Error::SpecInfeasible("camera motion sweeps too large an area".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let bg = spec.background;
    let background = Texture::mosaic(&mut rng, tw, th, bg.block, bg.lo, bg.hi, bg.detail);
    let ow = spec.object.w.ceil() as usize;
    let oh = spec.object.h.ceil() as usize;
    let object = Texture::mosaic(&mut rng, ow, oh, spec.object.block, 0.0, 1.0, 0.1);
    let occluders: Vec<Texture> = spec
        .occluders
        .iter()
        .map(|o| Texture::mosaic(&mut rng, o.w.ceil() as usize, o.h.ceil() as usize, 10.0, 0.3, 0.7, 0.05))
        .collect();
    let noise = if spec.noise > 0.0 {
        Some(Normal::new(0.0, spec.noise).map_err(|e| Error::SpecInfeasible(e.to_string()))?)
    } else {
        None
    };

    let mut frames = Vec::with_capacity(spec.frames);
    for (t, b) in gt.iter().enumerate() {
        let scale = b.w / spec.object.w;
        let (left, top) = (b.left(), b.top());
        let mut pixels = Vec::with_capacity(spec.width * spec.height * 3);
        for y in 0..spec.height {
            let py = y as f64 + 0.5;
            for x in 0..spec.width {
                let px = x as f64 + 0.5;
                let occ = spec
                    .occluders
                    .iter()
                    .zip(&occluders)
                    .find(|(o, _)| t >= o.start && t < o.end && px >= o.x && px < o.x + o.w && py >= o.y && py < o.y + o.h);
                let rgb = if let Some((o, tex)) = occ {
                    tex.sample(px - o.x - 0.5, py - o.y - 0.5)
                } else if px >= left && px < b.right() && py >= top && py < b.bottom() {
                    object.sample((px - left) / scale - 0.5, (py - top) / scale - 0.5)
                } else {
                    let (u, v) = inv[t].apply(x as f64, y as f64);
                    background.sample(u - ox, v - oy)
                };
                for c in rgb {
                    let n = noise.map_or(0.0, |d| d.sample(&mut rng));
                    pixels.push(((c as f64 + n).clamp(0.0, 1.0) * 255.0).round() as u8);
                }
            }
        }
        frames.push(Frame::new(t, spec.width, spec.height, pixels)?);
    }
    Ok(SynthSequence {
        name: spec.name.clone(),
        frames,
        ground_truth: gt,
        camera: spec.camera,
        attributes: spec.attributes.clone(),
    })
}

/// Writes `seq` in OTB layout under `dir` (PNG frames) and returns the
/// loaded [`SequenceSpec`].
pub fn write_sequence(seq: &SynthSequence, dir: &Path) -> Result<SequenceSpec> {
    let img = dir.join(media::IMAGE_DIR);
    fs::create_dir_all(&img).map_err(|e| Error::io(&img, e))?;
    for (i, f) in seq.frames.iter().enumerate() {
        f.save_png(&img.join(format!("{:04}.png", i + 1)))?;
    }
    let gt = dir.join(media::GROUNDTRUTH_FILE);
    fs::write(&gt, media::serialize_groundtruth(&seq.ground_truth)).map_err(|e| Error::io(&gt, e))?;
    if !seq.attributes.is_empty() {
        let attrs = dir.join(media::ATTRIBUTES_FILE);
        let text: Vec<&str> = seq.attributes.iter().map(|a| a.as_str()).collect();
        fs::write(&attrs, text.join("\n") + "\n").map_err(|e| Error::io(&attrs, e))?;
    }
    media::load_sequence(dir)
}

/// The desk-scale suite: constant velocity, occlusion with reappearance,
/// camera pan and scale change, all 640x480.
pub fn synthetic_suite() -> Vec<SynthSpec> {
    let base = SynthSpec {
        width: 640,
        height: 480,
        noise: 0.01,
        ..SynthSpec::default()
    };
    vec![
        SynthSpec {
            name: "constant_velocity".into(),
            frames: 100,
            object: ObjectSpec {
                cx: 160.0,
                cy: 160.0,
                w: 40.0,
                h: 40.0,
                ..ObjectSpec::default()
            },
            motion: vec![MotionSegment {
                frames: 99,
                vx: 3.0,
                vy: 1.5,
                growth: 1.0,
            }],
            seed: 11,
            ..base.clone()
        },
        SynthSpec {
            name: "occlusion".into(),
            frames: 150,
            object: ObjectSpec {
                cx: 120.0,
                cy: 120.0,
                w: 32.0,
                h: 32.0,
                ..ObjectSpec::default()
            },
            motion: vec![
                MotionSegment {
                    frames: 50,
                    vx: 3.0,
                    ..MotionSegment::default()
                },
                MotionSegment {
                    frames: 45,
                    vy: 3.0,
                    ..MotionSegment::default()
                },
                MotionSegment {
                    frames: 54,
                    vy: 2.0,
                    ..MotionSegment::default()
                },
            ],
            occluders: vec![Occluder {
                start: 50,
                end: 95,
                x: 225.0,
                y: 75.0,
                w: 90.0,
                h: 210.0,
            }],
            seed: 12,
            attributes: [Attribute::OCC, Attribute::FM].into_iter().collect(),
            ..base.clone()
        },
        SynthSpec {
            name: "camera_pan".into(),
            frames: 80,
            object: ObjectSpec {
                cx: 300.0,
                cy: 240.0,
                w: 36.0,
                h: 48.0,
                ..ObjectSpec::default()
            },
            motion: vec![MotionSegment {
                frames: 79,
                vx: 2.0,
                vy: -1.0,
                growth: 1.0,
            }],
            camera: AffineModel::translation(-1.5, 0.75),
            seed: 13,
            attributes: [Attribute::BC].into_iter().collect(),
            ..base.clone()
        },
        SynthSpec {
            name: "scale_change".into(),
            frames: 80,
            object: ObjectSpec {
                cx: 320.0,
                cy: 240.0,
                w: 40.0,
                h: 40.0,
                ..ObjectSpec::default()
            },
            motion: vec![MotionSegment {
                frames: 79,
                vx: 1.0,
                vy: 0.5,
                growth: 1.006,
            }],
            seed: 14,
            attributes: [Attribute::SV].into_iter().collect(),
            ..base
        },
    ]
}
