//! Frames, grayscale images, OTB sequence layout and patch sampling.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

/// An 8-bit RGB frame, row-major, 3 bytes per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub index: usize,
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Frame {
    pub fn new(index: usize, width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height * 3 {
            return Err(Error::DimensionMismatch(format!(
                "frame {width}x{height} with {} bytes",
                pixels.len()
            )));
        }
        Ok(Self {
            index,
            width,
            height,
            pixels,
        })
    }

    /// Uniform color frame.
    pub fn filled(index: usize, width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let pixels = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self {
            index,
            width,
            height,
            pixels,
        }
    }

    pub fn load(index: usize, path: &Path) -> Result<Self> {
        let img = image::open(path)
            .map_err(|source| Error::Image {
                path: path.to_path_buf(),
                source,
            })?
            .to_rgb8();
        let (w, h) = img.dimensions();
        Frame::new(index, w as usize, h as usize, img.into_raw())
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        image::save_buffer(
            path,
            &self.pixels,
            self.width as u32,
            self.height as u32,
            image::ExtendedColorType::Rgb8,
        )
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn rgb(&self, x: usize, y: usize) -> [u8; 3] {
        let o = (y * self.width + x) * 3;
        [self.pixels[o], self.pixels[o + 1], self.pixels[o + 2]]
    }
}

/// Luminance image with values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "gray image {width}x{height} with {} values",
                values.len()
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self {
            width,
            height,
            values: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            values,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    /// Edge-replicating pixel access.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f32 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    /// Bilinear sample at pixel-index coordinates, replicating edges.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f32 {
        bilinear(self, 0, x, y)
    }

    /// Bilinear resize to `width` x `height`.
    pub fn resized(&self, width: usize, height: usize) -> GrayImage {
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        GrayImage::from_fn(width, height, |x, y| {
            self.sample_bilinear((x as f64 + 0.5) * sx - 0.5, (y as f64 + 0.5) * sy - 0.5)
        })
    }
}

/// BT.601 luma, scaled to [0, 1].
pub fn to_grayscale(frame: &Frame) -> GrayImage {
    let values = frame
        .pixels
        .chunks_exact(3)
        .map(|p| (0.299 * p[0] as f32 + 0.587 * p[1] as f32 + 0.114 * p[2] as f32) / 255.0)
        .map(|v| v.clamp(0.0, 1.0))
        .collect();
    GrayImage {
        width: frame.width,
        height: frame.height,
        values,
    }
}

/// Planar image source that [`extract_patch`] can sample from.
pub trait PatchSource {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn channels(&self) -> usize;
    /// Value at an in-bounds pixel, in [0, 1].
    fn value(&self, x: usize, y: usize, c: usize) -> f32;
}

impl PatchSource for GrayImage {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn channels(&self) -> usize {
        1
    }
    #[inline]
    fn value(&self, x: usize, y: usize, _c: usize) -> f32 {
        self.get(x, y)
    }
}

impl PatchSource for Frame {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn channels(&self) -> usize {
        3
    }
    #[inline]
    fn value(&self, x: usize, y: usize, c: usize) -> f32 {
        self.pixels[(y * self.width + x) * 3 + c] as f32 / 255.0
    }
}

#[inline]
fn bilinear<S: PatchSource + ?Sized>(src: &S, c: usize, x: f64, y: f64) -> f32 {
    let maxx = (src.width() - 1) as f64;
    let maxy = (src.height() - 1) as f64;
    let x = x.clamp(0.0, maxx);
    let y = y.clamp(0.0, maxy);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(src.width() - 1);
    let y1 = (y0 + 1).min(src.height() - 1);
    let fx = (x - x0 as f64) as f32;
    let fy = (y - y0 as f64) as f32;
    let top = src.value(x0, y0, c) * (1.0 - fx) + src.value(x1, y0, c) * fx;
    let bot = src.value(x0, y1, c) * (1.0 - fx) + src.value(x1, y1, c) * fx;
    top * (1.0 - fy) + bot * fy
}

/// A resampled image region, channel-interleaved, values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl Patch {
    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }
}

/// Crops a `(padding * w) x (padding * h)` region centered on `bbox` and
/// resamples it bilinearly to `out_w x out_h`. Out-of-frame samples take the
/// nearest edge pixel.
pub fn extract_patch<S: PatchSource + ?Sized>(
    src: &S,
    bbox: &BoundingBox,
    padding: f64,
    out_w: usize,
    out_h: usize,
) -> Result<Patch> {
    if !(bbox.w >= 1.0 && bbox.h >= 1.0) || !bbox.cx.is_finite() || !bbox.cy.is_finite() {
        return Err(Error::DegenerateBox { w: bbox.w, h: bbox.h });
    }
    if !(padding >= 1.0) || out_w == 0 || out_h == 0 {
        return Err(Error::DimensionMismatch(format!(
            "padding {padding}, sample size {out_w}x{out_h}"
        )));
    }
    let region_w = bbox.w * padding;
    let region_h = bbox.h * padding;
    let left = bbox.cx - region_w / 2.0;
    let top = bbox.cy - region_h / 2.0;
    let sx = region_w / out_w as f64;
    let sy = region_h / out_h as f64;
    let ch = src.channels();
    let mut data = Vec::with_capacity(out_w * out_h * ch);
    for j in 0..out_h {
        let y = top + (j as f64 + 0.5) * sy - 0.5;
        for i in 0..out_w {
            let x = left + (i as f64 + 0.5) * sx - 0.5;
            for c in 0..ch {
                data.push(bilinear(src, c, x, y));
            }
        }
    }
    Ok(Patch {
        width: out_w,
        height: out_h,
        channels: ch,
        data,
    })
}

/// The eleven OTB difficulty attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Attribute {
    BC,
    DEF,
    FM,
    IPR,
    IV,
    LR,
    MB,
    OCC,
    OPR,
    OV,
    SV,
}

impl Attribute {
    pub const ALL: [Attribute; 11] = [
        Attribute::BC,
        Attribute::DEF,
        Attribute::FM,
        Attribute::IPR,
        Attribute::IV,
        Attribute::LR,
        Attribute::MB,
        Attribute::OCC,
        Attribute::OPR,
        Attribute::OV,
        Attribute::SV,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Attribute::BC => "BC",
            Attribute::DEF => "DEF",
            Attribute::FM => "FM",
            Attribute::IPR => "IPR",
            Attribute::IV => "IV",
            Attribute::LR => "LR",
            Attribute::MB => "MB",
            Attribute::OCC => "OCC",
            Attribute::OPR => "OPR",
            Attribute::OV => "OV",
            Attribute::SV => "SV",
        }
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Attribute {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Attribute::ALL
            .iter()
            .copied()
            .find(|a| a.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown attribute tag `{s}`"))
    }
}

/// A sequence in OTB layout. Frames are loaded lazily from `frame_paths`.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSpec {
    pub name: String,
    pub frame_paths: Vec<PathBuf>,
    pub ground_truth: Option<Vec<BoundingBox>>,
    pub attributes: BTreeSet<Attribute>,
}

impl SequenceSpec {
    pub fn len(&self) -> usize {
        self.frame_paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frame_paths.is_empty()
    }

    pub fn load_frame(&self, index: usize) -> Result<Frame> {
        Frame::load(index, &self.frame_paths[index])
    }
}

pub const GROUNDTRUTH_FILE: &str = "groundtruth_rect.txt";
pub const ATTRIBUTES_FILE: &str = "attrs.txt";
pub const IMAGE_DIR: &str = "img";

/// Parses OTB annotations: one `x y w h` (top-left and size) per line,
/// separated by commas, tabs or spaces. Blank lines are skipped.
pub fn parse_groundtruth(text: &str) -> Result<Vec<BoundingBox>> {
    let mut boxes = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::MalformedLine(line_no))?;
        if fields.len() != 4 || fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::MalformedLine(line_no));
        }
        let (x, y, w, h) = (fields[0], fields[1], fields[2], fields[3]);
        if w <= 0.0 || h <= 0.0 {
            return Err(Error::NonPositiveSize(line_no));
        }
        boxes.push(BoundingBox::from_top_left(x, y, w, h));
    }
    Ok(boxes)
}

/// Inverse of [`parse_groundtruth`], comma separated.
pub fn serialize_groundtruth(boxes: &[BoundingBox]) -> String {
    let mut out = String::new();
    for b in boxes {
        out.push_str(&format!("{},{},{},{}\n", b.left(), b.top(), b.w, b.h));
    }
    out
}

fn is_image(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
        Some("jpg" | "jpeg" | "png")
    )
}

fn numeric_key(path: &Path) -> (u64, String) {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    let digits: String = stem.chars().filter(|c| c.is_ascii_digit()).collect();
    (digits.parse().unwrap_or(u64::MAX), stem.to_string())
}

/// Reads an OTB sequence directory: `img/`, optional `groundtruth_rect.txt`
/// and optional `attrs.txt`.
pub fn load_sequence(root: &Path) -> Result<SequenceSpec> {
    let img_dir = root.join(IMAGE_DIR);
    let mut frame_paths: Vec<PathBuf> = match fs::read_dir(&img_dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && is_image(p))
            .collect(),
        Err(_) => Vec::new(),
    };
    if frame_paths.is_empty() {
        return Err(Error::MissingImages(img_dir));
    }
    frame_paths.sort_by_key(|p| numeric_key(p));

    let gt_path = root.join(GROUNDTRUTH_FILE);
    let ground_truth = if gt_path.is_file() {
        let text = fs::read_to_string(&gt_path).map_err(|e| Error::io(&gt_path, e))?;
        let boxes = parse_groundtruth(&text)?;
        if boxes.len() != frame_paths.len() {
            return Err(Error::GroundTruthMismatch {
                frames: frame_paths.len(),
                boxes: boxes.len(),
            });
        }
        Some(boxes)
    } else {
        None
    };

    let attr_path = root.join(ATTRIBUTES_FILE);
    let mut attributes = BTreeSet::new();
    if attr_path.is_file() {
        let text = fs::read_to_string(&attr_path).map_err(|e| Error::io(&attr_path, e))?;
        for tag in text.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()) {
            let attr = tag.parse().map_err(|message| Error::Parse {
                path: attr_path.clone(),
                message,
            })?;
            attributes.insert(attr);
        }
    }

    let name = root
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or("sequence")
        .to_string();
    Ok(SequenceSpec {
        name,
        frame_paths,
        ground_truth,
        attributes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn groundtruth_examples() {
        let b = parse_groundtruth("10,20,30,40").unwrap();
        assert_eq!(b, vec![BoundingBox::new(25.0, 40.0, 30.0, 40.0)]);
        let b = parse_groundtruth("0,0,1,1\n").unwrap();
        assert_eq!(b, vec![BoundingBox::new(0.5, 0.5, 1.0, 1.0)]);
        let b = parse_groundtruth("5 5 10 10\n6\t5\t10\t10").unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!((b[0].cx, b[0].cy), (10.0, 10.0));
        assert_eq!((b[1].cx, b[1].cy), (11.0, 10.0));
    }

    #[test]
    fn groundtruth_errors() {
        assert!(matches!(parse_groundtruth("1,2,3"), Err(Error::MalformedLine(1))));
        assert!(matches!(parse_groundtruth("1,2,3,4\n1,2,x,4"), Err(Error::MalformedLine(2))));
        assert!(matches!(parse_groundtruth("1,2,3,4,5"), Err(Error::MalformedLine(1))));
        assert!(matches!(parse_groundtruth("1,2,0,4"), Err(Error::NonPositiveSize(1))));
        assert!(matches!(parse_groundtruth("1,2,3,-4"), Err(Error::NonPositiveSize(1))));
    }

    proptest! {
        #[test]
        fn groundtruth_round_trip(raw in prop::collection::vec(
            (-500.0f64..500.0, -500.0f64..500.0, 0.5f64..300.0, 0.5f64..300.0), 1..20)
        ) {
            let boxes: Vec<_> = raw.iter().map(|&(x, y, w, h)| BoundingBox::from_top_left(x, y, w, h)).collect();
            let back = parse_groundtruth(&serialize_groundtruth(&boxes)).unwrap();
            prop_assert_eq!(back.len(), boxes.len());
            for (a, b) in back.iter().zip(&boxes) {
                prop_assert!((a.cx - b.cx).abs() < 1e-9 && (a.cy - b.cy).abs() < 1e-9);
                prop_assert!((a.w - b.w).abs() < 1e-9 && (a.h - b.h).abs() < 1e-9);
            }
        }

        #[test]
        fn patch_has_requested_size(cx in -50.0f64..150.0, cy in -50.0f64..150.0,
                                    w in 1.0f64..80.0, h in 1.0f64..80.0, pad in 1.0f64..4.0,
                                    ow in 1usize..40, oh in 1usize..40) {
            let img = GrayImage::from_fn(64, 48, |x, y| ((x * 7 + y * 3) % 11) as f32 / 10.0);
            let p = extract_patch(&img, &BoundingBox::new(cx, cy, w, h), pad, ow, oh).unwrap();
            prop_assert_eq!((p.width, p.height, p.channels), (ow, oh, 1));
            prop_assert_eq!(p.data.len(), ow * oh);
        }

        #[test]
        fn gray_inputs_map_to_value_over_255(v in 0u8..=255) {
            let g = to_grayscale(&Frame::filled(0, 3, 2, [v, v, v]));
            for &x in &g.values {
                prop_assert!((x - v as f32 / 255.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn grayscale_examples() {
        let g = to_grayscale(&Frame::filled(0, 4, 3, [0, 0, 0]));
        assert!(g.values.iter().all(|&v| v == 0.0));
        let g = to_grayscale(&Frame::filled(0, 4, 3, [255, 255, 255]));
        assert!(g.values.iter().all(|&v| (v - 1.0).abs() < 1e-6));
        let g = to_grayscale(&Frame::filled(0, 4, 3, [255, 0, 0]));
        assert!(g.values.iter().all(|&v| (v - 0.299).abs() < 1e-6));
    }

    #[test]
    fn patch_exact_crop() {
        let img = GrayImage::from_fn(20, 20, |x, y| (x + 20 * y) as f32 / 400.0);
        // top-left (4, 6), size 5x3
        let b = BoundingBox::from_top_left(4.0, 6.0, 5.0, 3.0);
        let p = extract_patch(&img, &b, 1.0, 5, 3).unwrap();
        for j in 0..3 {
            for i in 0..5 {
                assert_eq!(p.get(i, j, 0), img.get(4 + i, 6 + j));
            }
        }
    }

    #[test]
    fn patch_replicates_edges() {
        let img = GrayImage::from_fn(10, 10, |x, y| (x + 10 * y) as f32 / 100.0);
        let b = BoundingBox::new(0.0, 0.0, 4.0, 4.0);
        let p = extract_patch(&img, &b, 1.0, 4, 4).unwrap();
        // the upper-left quadrant lies outside the frame and replicates pixel (0, 0)
        for j in 0..2 {
            for i in 0..2 {
                assert_eq!(p.get(i, j, 0), img.get(0, 0));
            }
        }
        assert_eq!(p.get(3, 0, 0), img.get(1, 0));
        assert_eq!(p.get(0, 3, 0), img.get(0, 1));
    }

    #[test]
    fn patch_of_constant_image_is_constant() {
        let img = Frame::filled(0, 30, 20, [10, 200, 90]);
        let p = extract_patch(&img, &BoundingBox::new(3.3, 17.8, 25.0, 9.0), 2.5, 13, 7).unwrap();
        for px in p.data.chunks(3) {
            assert!((px[0] - 10.0 / 255.0).abs() < 1e-6);
            assert!((px[1] - 200.0 / 255.0).abs() < 1e-6);
            assert!((px[2] - 90.0 / 255.0).abs() < 1e-6);
        }
    }

    #[test]
    fn patch_rejects_degenerate_box() {
        let img = GrayImage::filled(10, 10, 0.5);
        let err = extract_patch(&img, &BoundingBox::new(5.0, 5.0, 0.5, 4.0), 1.0, 4, 4);
        assert!(matches!(err, Err(Error::DegenerateBox { .. })));
    }
}
