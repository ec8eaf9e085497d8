//! Fundus and OCT preprocessing: black-border cropping, ruler inpainting,
//! intensity truncation, central-ROI masking, per-direction orientation and
//! six-direction sequence extraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{
    crop_rect, rotate_about_center, sample_bilinear, Frame, FundusImage, FRAMES_PER_VOLUME,
};

/// Default gray threshold separating fundus foreground from black background.
pub const DEFAULT_BORDER_TAU: u8 = 10;
pub const DEFAULT_TRUNCATE_LO: u8 = 62;
pub const DEFAULT_TRUNCATE_HI: u8 = 255;
pub const DEFAULT_KEEP_V: f64 = 0.20;
pub const DEFAULT_KEEP_H: f64 = 0.60;
pub const SEQUENCE_INPUT_SIZE: usize = 256;
pub const SEQUENCE_WIDTH: usize = 8;
pub const SEQUENCE_LEN: usize = 256;
pub const DEFAULT_SEQUENCE_RADIUS: f64 = 124.0;

/// Rectangle covering an equipment marker in an OCT frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RulerRegion {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl RulerRegion {
    /// A `w`×`h` box anchored at the bottom-left corner of a frame.
    pub fn bottom_left(w: usize, h: usize, frame_w: usize, frame_h: usize) -> Self {
        let w = w.min(frame_w);
        let h = h.min(frame_h);
        Self {
            x0: 0,
            y0: frame_h - h,
            w,
            h,
        }
    }
}

/// Scan direction angles, in degrees counter-clockwise from the horizontal
/// axis of the en-face image. The default radial layout is `90 - 30k`, which
/// a horizontal mirror maps onto direction `(6 - k) mod 6`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionModel {
    angles: [f64; FRAMES_PER_VOLUME],
}

impl Default for DirectionModel {
    fn default() -> Self {
        Self::radial()
    }
}

impl DirectionModel {
    pub fn radial() -> Self {
        let mut angles = [0.0; FRAMES_PER_VOLUME];
        for (k, a) in angles.iter_mut().enumerate() {
            *a = 90.0 - 30.0 * k as f64;
        }
        Self { angles }
    }

    pub fn angle_of(&self, k: usize) -> Result<f64> {
        self.angles.get(k).copied().ok_or(Error::InvalidDirection(k))
    }

    /// Direction index that a horizontal mirror maps `k` onto.
    pub fn mirrored(k: usize) -> usize {
        (FRAMES_PER_VOLUME - k) % FRAMES_PER_VOLUME
    }
}

/// Tight bounding box of pixels whose luma exceeds `tau`.
pub fn crop_black_border(img: &FundusImage, tau: u8) -> Result<FundusImage> {
    let gray = img.to_gray();
    let h = gray.height();
    let (mut x_lo, mut y_lo, mut x_hi, mut y_hi) = (usize::MAX, usize::MAX, 0, 0);
    for y in 0..h {
        for (x, &v) in gray.row(y).iter().enumerate() {
            if v > tau {
                x_lo = x_lo.min(x);
                x_hi = x_hi.max(x);
                y_lo = y_lo.min(y);
                y_hi = y_hi.max(y);
            }
        }
    }
    if x_lo == usize::MAX {
        return Err(Error::NoForeground(tau));
    }
    crop_rect(img, x_lo, y_lo, x_hi - x_lo + 1, y_hi - y_lo + 1)
}

/// Overwrites the marker rectangle row by row with the pixel just right of
/// it, or just left of it when the region touches the right edge.
pub fn remove_ruler(frame: &Frame, region: RulerRegion) -> Result<Frame> {
    let RulerRegion { x0, y0, w, h } = region;
    let (fw, fh) = frame.dims();
    let fits = w > 0
        && h > 0
        && x0.checked_add(w).is_some_and(|r| r <= fw)
        && y0.checked_add(h).is_some_and(|b| b <= fh);
    if !fits {
        return Err(Error::OutOfBounds {
            x0,
            y0,
            w,
            h,
            width: fw,
            height: fh,
        });
    }
    if w == fw {
        return Err(Error::RegionSpansWidth);
    }
    let source_x = if x0 + w < fw { x0 + w } else { x0 - 1 };
    let mut out = frame.clone();
    for y in y0..y0 + h {
        let fill = frame.get(source_x, y);
        let row = &mut out.data_mut()[y * fw..(y + 1) * fw];
        row[x0..x0 + w].fill(fill);
    }
    Ok(out)
}

/// A frame of intensities normalised to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedFrame {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
}

impl NormalizedFrame {
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }
}

/// `(clamp(v, lo, hi) - lo) / (hi - lo)`.
pub fn truncate_value(v: u8, lo: u8, hi: u8) -> f32 {
    let span = f32::from(hi - lo);
    (f32::from(v.clamp(lo, hi) - lo)) / span
}

pub fn truncate_normalize(frame: &Frame, lo: u8, hi: u8) -> Result<NormalizedFrame> {
    if lo >= hi {
        return Err(Error::InvalidRange { lo, hi });
    }
    let mut lut = [0f32; 256];
    for (v, slot) in lut.iter_mut().enumerate() {
        *slot = truncate_value(v as u8, lo, hi);
    }
    Ok(NormalizedFrame {
        width: frame.width(),
        height: frame.height(),
        values: frame.data().iter().map(|&v| lut[usize::from(v)]).collect(),
    })
}

/// Interval `[round(n(1-keep)/2), round(n(1+keep)/2))` kept along one axis.
pub fn central_span(n: usize, keep: f64) -> (usize, usize) {
    let n_f = n as f64;
    let lo = (n_f * (1.0 - keep) / 2.0).round() as usize;
    let hi = ((n_f * (1.0 + keep) / 2.0).round() as usize).min(n);
    (lo, hi)
}

/// Blacks out everything except the central band: `keep_v` of the rows and
/// `keep_h` of the columns.
pub fn mask_central_roi(img: &FundusImage, keep_v: f64, keep_h: f64) -> Result<FundusImage> {
    for f in [keep_v, keep_h] {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::InvalidFraction(f));
        }
    }
    let (w, h) = img.dims();
    let (r0, r1) = central_span(h, keep_v);
    let (c0, c1) = central_span(w, keep_h);
    let mut out = img.clone();
    let stride = w * 3;
    for (y, row) in out.data_mut().chunks_exact_mut(stride).enumerate() {
        if y < r0 || y >= r1 {
            row.fill(0);
        } else {
            row[..c0 * 3].fill(0);
            row[c1 * 3..].fill(0);
        }
    }
    Ok(out)
}

/// Rotates the fundus so that scan direction `k` runs horizontally.
pub fn orient_for_direction(img: &FundusImage, k: usize, model: &DirectionModel) -> Result<FundusImage> {
    let theta = model.angle_of(k)?;
    Ok(rotate_about_center(img, -theta))
}

/// Intensity bands sampled along the six scan directions, indexed
/// `[direction][band row][position]` with shape 6×8×256.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceStack {
    values: Vec<f32>,
}

impl SequenceStack {
    pub const SHAPE: [usize; 3] = [FRAMES_PER_VOLUME, SEQUENCE_WIDTH, SEQUENCE_LEN];

    pub fn shape(&self) -> [usize; 3] {
        Self::SHAPE
    }

    pub fn get(&self, k: usize, j: usize, i: usize) -> f32 {
        self.values[(k * SEQUENCE_WIDTH + j) * SEQUENCE_LEN + i]
    }

    /// The 8×256 slab of direction `k`, row-major.
    pub fn slab(&self, k: usize) -> &[f32] {
        let n = SEQUENCE_WIDTH * SEQUENCE_LEN;
        &self.values[k * n..(k + 1) * n]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.values
    }
}

/// Samples an 8-pixel-wide band through the image centre along each scan
/// direction. Position `i` runs from `-radius` to `+radius` along
/// `u = (cos θ, -sin θ)`; band row `j` is offset by `j - 3.5` along the
/// normal `(sin θ, cos θ)`.
pub fn extract_sequences(img: &FundusImage, model: &DirectionModel, radius: f64) -> Result<SequenceStack> {
    if img.dims() != (SEQUENCE_INPUT_SIZE, SEQUENCE_INPUT_SIZE) {
        return Err(Error::WrongInputSize {
            expected_w: SEQUENCE_INPUT_SIZE,
            expected_h: SEQUENCE_INPUT_SIZE,
            width: img.width(),
            height: img.height(),
        });
    }
    let gray = img.to_gray();
    let cx = (gray.width() as f64 - 1.0) / 2.0;
    let cy = (gray.height() as f64 - 1.0) / 2.0;
    let mut values = Vec::with_capacity(FRAMES_PER_VOLUME * SEQUENCE_WIDTH * SEQUENCE_LEN);
    let half_band = (SEQUENCE_WIDTH as f64 - 1.0) / 2.0;
    for k in 0..FRAMES_PER_VOLUME {
        let (sin, cos) = model.angle_of(k)?.to_radians().sin_cos();
        let (ux, uy) = (cos, -sin);
        let (nx, ny) = (sin, cos);
        for j in 0..SEQUENCE_WIDTH {
            let b = j as f64 - half_band;
            for i in 0..SEQUENCE_LEN {
                let a = (i as f64 / (SEQUENCE_LEN - 1) as f64) * 2.0 - 1.0;
                let x = cx + a * radius * ux + b * nx;
                let y = cy + a * radius * uy + b * ny;
                let v = sample_bilinear(&gray, 0, x, y).unwrap_or(0.0);
                values.push((v / 255.0) as f32);
            }
        }
    }
    Ok(SequenceStack { values })
}
