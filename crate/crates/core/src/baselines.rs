//! Corruption baselines: forward Gaussian noising on a linear-β schedule and
//! consistent random cropping, plus generation of baseline submissions.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{scan_submission, Manifest, Split, SubmissionSet};
use crate::error::{Error, Result};
use crate::imaging::{crop_rect, resize_bilinear, Frame, OctVolume};

pub const DEFAULT_TIMESTEPS: usize = 1000;
pub const DEFAULT_BETA_START: f64 = 1e-4;
pub const DEFAULT_BETA_END: f64 = 0.02;

/// Cumulative signal retention `ᾱ_t = ∏_{s ≤ t} (1 − β_s)` for a linear β
/// schedule. Index 0 is the clean signal (`ᾱ_0 = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
    alpha_bar: Vec<f64>,
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        Self::linear(DEFAULT_TIMESTEPS, DEFAULT_BETA_START, DEFAULT_BETA_END)
    }
}

impl NoiseSchedule {
    pub fn linear(timesteps: usize, beta_start: f64, beta_end: f64) -> Self {
        let betas: Vec<f64> = (0..timesteps)
            .map(|i| {
                if timesteps == 1 {
                    beta_start
                } else {
                    beta_start + (beta_end - beta_start) * i as f64 / (timesteps - 1) as f64
                }
            })
            .collect();
        let mut alpha_bar = Vec::with_capacity(timesteps + 1);
        alpha_bar.push(1.0);
        let mut acc = 1.0;
        for b in &betas {
            acc *= 1.0 - b;
            alpha_bar.push(acc);
        }
        Self { betas, alpha_bar }
    }

    pub fn timesteps(&self) -> usize {
        self.betas.len()
    }

    /// `β_t` for `t` in `1..=T`.
    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bar[t]
    }
}

/// `x_t = √ᾱ_t · x_0 + √(1 − ᾱ_t) · ε` per pixel, with intensities mapped to
/// `[-1, 1]` and re-quantised to 8 bits afterwards.
pub fn gaussian_noise_corrupt(
    volume: &OctVolume,
    steps: usize,
    schedule: &NoiseSchedule,
    seed: u64,
) -> Result<OctVolume> {
    if steps > schedule.timesteps() {
        return Err(Error::InvalidSteps {
            steps,
            max: schedule.timesteps(),
        });
    }
    if steps == 0 {
        return Ok(volume.clone());
    }
    let ab = schedule.alpha_bar(steps);
    let (signal, noise) = (ab.sqrt(), (1.0 - ab).sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    volume.map_frames(|_, frame| {
        let data = frame
            .data()
            .iter()
            .map(|&v| {
                let x0 = f64::from(v) / 127.5 - 1.0;
                let eps: f64 = StandardNormal.sample(&mut rng);
                let xt = signal * x0 + noise * eps;
                ((xt + 1.0) * 127.5).round().clamp(0.0, 255.0) as u8
            })
            .collect();
        Frame::new(frame.width(), frame.height(), data)
    })
}

/// One crop rectangle drawn for a whole volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropWindow {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

pub fn draw_crop_window(
    width: usize,
    height: usize,
    scale_lo: f64,
    scale_hi: f64,
    rng: &mut impl Rng,
) -> Result<CropWindow> {
    if !(scale_lo > 0.0 && scale_lo <= scale_hi && scale_hi <= 1.0) {
        return Err(Error::InvalidScale {
            lo: scale_lo,
            hi: scale_hi,
        });
    }
    let s = if scale_lo == scale_hi {
        scale_lo
    } else {
        rng.random_range(scale_lo..=scale_hi)
    };
    let side = |n: usize| ((s * n as f64).round() as usize).clamp(1, n);
    let (w, h) = (side(width), side(height));
    let x0 = rng.random_range(0..=width - w);
    let y0 = rng.random_range(0..=height - h);
    Ok(CropWindow { x0, y0, w, h })
}

/// Crops every frame with the same randomly drawn window (side scale in
/// `[scale_lo, scale_hi]`) and resizes back to the original size.
pub fn random_crop_corrupt(volume: &OctVolume, scale_lo: f64, scale_hi: f64, seed: u64) -> Result<OctVolume> {
    let (w, h) = volume.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let win = draw_crop_window(w, h, scale_lo, scale_hi, &mut rng)?;
    volume.map_frames(|_, frame| {
        let c = crop_rect(frame, win.x0, win.y0, win.w, win.h)?;
        resize_bilinear(&c, w, h)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionKind {
    Identity,
    GaussianNoise,
    RandomCrop,
}

fn default_scale_lo() -> f64 {
    0.7
}

fn default_scale_hi() -> f64 {
    0.9
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub kind: CorruptionKind,
    #[serde(default)]
    pub steps: usize,
    #[serde(default = "default_scale_lo")]
    pub scale_lo: f64,
    #[serde(default = "default_scale_hi")]
    pub scale_hi: f64,
    #[serde(default)]
    pub seed: u64,
}

impl CorruptionSpec {
    pub fn identity() -> Self {
        Self {
            kind: CorruptionKind::Identity,
            steps: 0,
            scale_lo: default_scale_lo(),
            scale_hi: default_scale_hi(),
            seed: 0,
        }
    }

    pub fn noise(steps: usize, seed: u64) -> Self {
        Self {
            kind: CorruptionKind::GaussianNoise,
            steps,
            seed,
            ..Self::identity()
        }
    }

    pub fn crop(scale_lo: f64, scale_hi: f64, seed: u64) -> Self {
        Self {
            kind: CorruptionKind::RandomCrop,
            scale_lo,
            scale_hi,
            seed,
            ..Self::identity()
        }
    }

    pub fn validate(&self, schedule: &NoiseSchedule) -> Result<()> {
        if self.steps > schedule.timesteps() {
            return Err(Error::InvalidSteps {
                steps: self.steps,
                max: schedule.timesteps(),
            });
        }
        if !(self.scale_lo > 0.0 && self.scale_lo <= self.scale_hi && self.scale_hi <= 1.0) {
            return Err(Error::InvalidScale {
                lo: self.scale_lo,
                hi: self.scale_hi,
            });
        }
        Ok(())
    }

    /// Short label such as `gaussian_noise_steps100`.
    pub fn label(&self) -> String {
        match self.kind {
            CorruptionKind::Identity => "identity".into(),
            CorruptionKind::GaussianNoise => format!("gaussian_noise_steps{}", self.steps),
            CorruptionKind::RandomCrop => format!("random_crop_{}_{}", self.scale_lo, self.scale_hi),
        }
    }
}

/// Stable per-sample seed: first 8 bytes of `SHA-256(seed_le ‖ sample_id)`.
pub fn sample_seed(seed: u64, sample_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(sample_id.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

pub fn corrupt_volume(
    volume: &OctVolume,
    sample_id: &str,
    spec: &CorruptionSpec,
    schedule: &NoiseSchedule,
) -> Result<OctVolume> {
    let seed = sample_seed(spec.seed, sample_id);
    match spec.kind {
        CorruptionKind::Identity => Ok(volume.clone()),
        CorruptionKind::GaussianNoise => gaussian_noise_corrupt(volume, spec.steps, schedule, seed),
        CorruptionKind::RandomCrop => random_crop_corrupt(volume, spec.scale_lo, spec.scale_hi, seed),
    }
}

/// Corrupts one ground-truth sample and writes it under `out_dir/<sample_id>/`.
pub fn write_corrupted_sample(
    manifest: &Manifest,
    sample_id: &str,
    spec: &CorruptionSpec,
    schedule: &NoiseSchedule,
    out_dir: &Path,
) -> Result<()> {
    let gt = manifest.load_volume(sample_id)?;
    let out = corrupt_volume(&gt, sample_id, spec, schedule)?;
    out.save_dir(out_dir.join(sample_id))
}

/// Writes a corrupted copy of every sample in `split` using the submission
/// layout, then scans it back. Work is spread over the current rayon pool;
/// output bytes do not depend on scheduling.
pub fn generate_baseline_submission(
    manifest: &Manifest,
    split: Split,
    spec: &CorruptionSpec,
    out_dir: impl AsRef<Path>,
) -> Result<SubmissionSet> {
    let out_dir = out_dir.as_ref();
    let schedule = NoiseSchedule::default();
    spec.validate(&schedule)?;
    let ids = manifest.split_ids(split);
    if ids.is_empty() {
        return Err(Error::Config(format!("split `{split}` has no samples")));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    ids.par_iter()
        .try_for_each(|id| write_corrupted_sample(manifest, id, spec, &schedule, out_dir))?;
    scan_submission(out_dir, &ids)
}
