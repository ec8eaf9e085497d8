//! Paired augmentations: the cross-modality flip and seeded photometric
//! jitter for fundus photographs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::imaging::{luma, mirror_horizontal, FundusImage, OctVolume, FRAMES_PER_VOLUME};

/// Mirrors the fundus and remaps the B-scans so that the pair stays
/// consistent: frame 0 is kept as is, frame `k` for `k >= 1` is mirrored and
/// stored at position `6 - k`.
pub fn collaborative_flip(fundus: &FundusImage, volume: &OctVolume) -> (FundusImage, OctVolume) {
    let frames = volume.frames();
    let mut out = Vec::with_capacity(FRAMES_PER_VOLUME);
    out.push(frames[0].clone());
    for k in 1..FRAMES_PER_VOLUME {
        out.push(mirror_horizontal(&frames[FRAMES_PER_VOLUME - k]));
    }
    let volume = OctVolume::new(out).expect("flip preserves volume shape");
    (mirror_horizontal(fundus), volume)
}

pub const BRIGHTNESS_RANGE: (f64, f64) = (-32.0, 32.0);
pub const CONTRAST_RANGE: (f64, f64) = (0.8, 1.2);
pub const SATURATION_RANGE: (f64, f64) = (0.8, 1.2);
pub const GAMMA_RANGE: (f64, f64) = (0.8, 1.25);
pub const BLUR_SIGMA_RANGE: (f64, f64) = (0.0, 1.5);
pub const NOISE_SIGMA_RANGE: (f64, f64) = (0.0, 8.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotometricParams {
    pub brightness_delta: f64,
    pub contrast_gain: f64,
    pub saturation_gain: f64,
    pub gamma: f64,
    pub blur_sigma: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl PhotometricParams {
    pub fn identity() -> Self {
        Self {
            brightness_delta: 0.0,
            contrast_gain: 1.0,
            saturation_gain: 1.0,
            gamma: 1.0,
            blur_sigma: 0.0,
            noise_sigma: 0.0,
            seed: 0,
        }
    }

    pub fn is_valid(&self) -> bool {
        let inside = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        inside(self.brightness_delta, BRIGHTNESS_RANGE)
            && inside(self.contrast_gain, CONTRAST_RANGE)
            && inside(self.saturation_gain, SATURATION_RANGE)
            && inside(self.gamma, GAMMA_RANGE)
            && inside(self.blur_sigma, BLUR_SIGMA_RANGE)
            && inside(self.noise_sigma, NOISE_SIGMA_RANGE)
    }
}

/// Draws every parameter uniformly from its range.
pub fn sample_photometric(seed: u64) -> PhotometricParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |(lo, hi): (f64, f64)| rng.random_range(lo..=hi);
    PhotometricParams {
        contrast_gain: draw(CONTRAST_RANGE),
        brightness_delta: draw(BRIGHTNESS_RANGE),
        saturation_gain: draw(SATURATION_RANGE),
        gamma: draw(GAMMA_RANGE),
        blur_sigma: draw(BLUR_SIGMA_RANGE),
        noise_sigma: draw(NOISE_SIGMA_RANGE),
        seed,
    }
}

/// Applies contrast, brightness, saturation, gamma, blur and noise in that
/// order, clamping to `[0, 255]` after each step. Deterministic in
/// `(fundus, params)`.
pub fn photometric_augment(fundus: &FundusImage, params: &PhotometricParams) -> FundusImage {
    let (w, h) = fundus.dims();
    let mut buf: Vec<f64> = fundus.data().iter().map(|&v| f64::from(v)).collect();
    let clamp = |buf: &mut [f64]| buf.iter_mut().for_each(|v| *v = v.clamp(0.0, 255.0));

    if params.contrast_gain != 1.0 {
        let mean_luma = fundus
            .data()
            .chunks_exact(3)
            .map(|p| f64::from(luma(p[0], p[1], p[2])))
            .sum::<f64>()
            / (w * h) as f64;
        for v in buf.iter_mut() {
            *v = mean_luma + (*v - mean_luma) * params.contrast_gain;
        }
        clamp(&mut buf);
    }

    if params.brightness_delta != 0.0 {
        buf.iter_mut().for_each(|v| *v += params.brightness_delta);
        clamp(&mut buf);
    }

    if params.saturation_gain != 1.0 {
        for px in buf.chunks_exact_mut(3) {
            let y = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
            for c in px.iter_mut() {
                *c = y + (*c - y) * params.saturation_gain;
            }
        }
        clamp(&mut buf);
    }

    if params.gamma != 1.0 {
        buf.iter_mut()
            .for_each(|v| *v = 255.0 * (*v / 255.0).powf(params.gamma));
    }

    if params.blur_sigma > 0.0 {
        buf = gaussian_blur_rgb(&buf, w, h, params.blur_sigma);
    }

    if params.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        for v in buf.iter_mut() {
            let n: f64 = StandardNormal.sample(&mut rng);
            *v += n * params.noise_sigma;
        }
    }

    let data = buf.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8).collect();
    FundusImage::new(w, h, data).expect("dimensions unchanged")
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur on an interleaved RGB buffer with edge clamping.
fn gaussian_blur_rgb(buf: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as isize;
    let clampi = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; buf.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let mut acc = 0.0;
                for (t, kv) in kernel.iter().enumerate() {
                    let sx = clampi(x as isize + t as isize - r, w);
                    acc += kv * buf[(y * w + sx) * 3 + c];
                }
                tmp[(y * w + x) * 3 + c] = acc;
            }
        }
    }
    let mut out = vec![0.0; buf.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let mut acc = 0.0;
                for (t, kv) in kernel.iter().enumerate() {
                    let sy = clampi(y as isize + t as isize - r, h);
                    acc += kv * tmp[(sy * w + x) * 3 + c];
                }
                out[(y * w + x) * 3 + c] = acc;
            }
        }
    }
    out
}
