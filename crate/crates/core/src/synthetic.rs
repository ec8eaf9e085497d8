//! Seeded synthetic data: layered OCT-like volumes, disc-shaped fundus
//! photographs and complete on-disk datasets. Used by the examples, the test
//! suites and benchmarking; nothing here resembles real patient data beyond
//! its coarse structure.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Manifest, PairingRecord, Split, MANIFEST_FILE};
use crate::error::{Error, Result};
use crate::imaging::{save_image, Frame, FundusImage, OctVolume, FRAMES_PER_VOLUME};

/// Smooth random field on `[0,1]²`: bilinear interpolation of a coarse grid
/// of uniform values in `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct SmoothField {
    grid: Vec<f64>,
    n: usize,
}

impl SmoothField {
    pub fn new(rng: &mut impl Rng, n: usize) -> Self {
        let n = n.max(2);
        Self {
            grid: (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            n,
        }
    }

    pub fn at(&self, u: f64, v: f64) -> f64 {
        let m = (self.n - 1) as f64;
        let x = (u.clamp(0.0, 1.0)) * m;
        let y = (v.clamp(0.0, 1.0)) * m;
        let x0 = (x.floor() as usize).min(self.n - 2);
        let y0 = (y.floor() as usize).min(self.n - 2);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let g = |i: usize, j: usize| self.grid[j * self.n + i];
        let top = g(x0, y0) * (1.0 - fx) + g(x0 + 1, y0) * fx;
        let bot = g(x0, y0 + 1) * (1.0 - fx) + g(x0 + 1, y0 + 1) * fx;
        top * (1.0 - fy) + bot * fy
    }
}

const LAYERS: usize = 6;

/// A random retina-like volume: horizontal tissue layers whose boundaries
/// undulate smoothly and dip toward a central pit, with smooth texture. All
/// six frames share the layer stack and differ in their undulation, as
/// radial scans through one eye do.
pub fn oct_volume(seed: u64, width: usize, height: usize) -> OctVolume {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = rng.random_range(0.22..0.34);
    let mut bounds = [0.0; LAYERS - 1];
    let mut depth = top;
    for b in bounds.iter_mut() {
        *b = depth;
        depth += rng.random_range(0.05..0.10);
    }
    let mut levels = [0.0; LAYERS];
    let base = [15.0, 190.0, 95.0, 150.0, 80.0, 215.0];
    for (l, b) in levels.iter_mut().zip(base) {
        *l = b + rng.random_range(-25.0..25.0);
    }
    let pit_depth = rng.random_range(0.02..0.07);
    let pit_width = rng.random_range(0.08..0.16);
    let texture_amp = rng.random_range(8.0..20.0);

    let frames = (0..FRAMES_PER_VOLUME)
        .map(|_| {
            let wobble = SmoothField::new(&mut rng, 5);
            let texture = SmoothField::new(&mut rng, 12);
            let tilt = rng.random_range(-0.04..0.04);
            let amp = rng.random_range(0.01..0.03);
            Frame::from_fn(width, height, |x, y| {
                let u = (x as f64 + 0.5) / width as f64;
                let v = (y as f64 + 0.5) / height as f64;
                let pit = pit_depth * (-((u - 0.5) / pit_width).powi(2)).exp();
                let shift = tilt * (u - 0.5) + amp * wobble.at(u, 0.5);
                let mut layer = 0;
                for (l, &b) in bounds.iter().enumerate() {
                    // inner layers thin out at the pit, outer ones follow it
                    let b = b + shift + if l < 3 { pit * (3 - l) as f64 / 3.0 } else { 0.0 };
                    if v >= b {
                        layer = l + 1;
                    }
                }
                let value = levels[layer] + texture_amp * texture.at(u, v);
                [value.round().clamp(0.0, 255.0) as u8]
            })
            .expect("non-empty frame")
        })
        .collect();
    OctVolume::new(frames).expect("six equal frames")
}

/// A volume of smooth random fields: one coarse field shared by the six
/// frames plus a weaker per-frame field, mapped to roughly `[40, 215]`.
pub fn smooth_volume(seed: u64, width: usize, height: usize) -> OctVolume {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shared = SmoothField::new(&mut rng, 6);
    let offset = rng.random_range(-20.0..20.0);
    let frames = (0..FRAMES_PER_VOLUME)
        .map(|_| {
            let own = SmoothField::new(&mut rng, 9);
            Frame::from_fn(width, height, |x, y| {
                let u = (x as f64 + 0.5) / width as f64;
                let v = (y as f64 + 0.5) / height as f64;
                let value = 128.0 + offset + 55.0 * shared.at(u, v) + 25.0 * own.at(u, v);
                [value.round().clamp(0.0, 255.0) as u8]
            })
            .expect("non-empty frame")
        })
        .collect();
    OctVolume::new(frames).expect("six equal frames")
}

/// A fundus-like RGB image: dark background, bright disc with smooth
/// reddish texture, an optic-disc highlight and a few vessel-like arcs.
pub fn fundus_image(seed: u64, width: usize, height: usize) -> FundusImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let field = SmoothField::new(&mut rng, 8);
    let cx = width as f64 / 2.0;
    let cy = height as f64 / 2.0;
    let radius = 0.45 * width.min(height) as f64;
    let od_x = cx + rng.random_range(0.2..0.4) * radius * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let od_r = 0.12 * radius;
    let vessel_phase = rng.random_range(0.0..std::f64::consts::TAU);
    FundusImage::from_fn(width, height, |x, y| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        let r = (dx * dx + dy * dy).sqrt();
        if r > radius {
            return [rng.random_range(0..4), 0, 0];
        }
        let u = x as f64 / width as f64;
        let v = y as f64 / height as f64;
        let t = field.at(u, v);
        let mut rgb = [170.0 + 30.0 * t, 80.0 + 20.0 * t, 40.0 + 10.0 * t];
        let od = ((x as f64 - od_x).powi(2) + dy * dy).sqrt();
        if od < od_r {
            let k = 1.0 - od / od_r;
            rgb = [rgb[0] + 70.0 * k, rgb[1] + 120.0 * k, rgb[2] + 90.0 * k];
        }
        let angle = dy.atan2(x as f64 - od_x);
        if (angle * 4.0 + vessel_phase).sin().abs() < 0.06 && od > od_r {
            rgb = [rgb[0] * 0.6, rgb[1] * 0.5, rgb[2] * 0.5];
        }
        let falloff = 1.0 - 0.35 * (r / radius).powi(2);
        rgb.map(|c| (c * falloff).round().clamp(0.0, 255.0) as u8)
    })
    .expect("non-empty image")
}

/// Shape of a synthetic dataset.
#[derive(Debug, Clone)]
pub struct DatasetSpec {
    /// `(split, number of pairs, number of patients)`.
    pub splits: Vec<(Split, usize, usize)>,
    pub oct_width: usize,
    pub oct_height: usize,
    pub fundus_size: usize,
    pub seed: u64,
}

impl DatasetSpec {
    /// A single split with one patient per pair.
    pub fn single(split: Split, pairs: usize, oct_width: usize, oct_height: usize, seed: u64) -> Self {
        Self {
            splits: vec![(split, pairs, pairs)],
            oct_width,
            oct_height,
            fundus_size: 64,
            seed,
        }
    }
}

/// Manifest records only, no pixels. Sample ids are `s0000`, `s0001`, …;
/// pairs are spread over the split's patients round-robin.
pub fn manifest_records(spec: &DatasetSpec) -> Vec<PairingRecord> {
    let mut records = Vec::new();
    let mut sample = 0usize;
    for (split, pairs, patients) in &spec.splits {
        let patients = (*patients).max(1);
        for i in 0..*pairs {
            let sid = format!("s{sample:04}");
            let pid = format!("{}-p{:04}", split.as_str(), i % patients);
            records.push(PairingRecord::standard(&sid, &pid, *split));
            sample += 1;
        }
    }
    records
}

/// Writes `manifest.csv`, fundus images and OCT frames under `root`.
pub fn write_dataset(root: impl AsRef<Path>, spec: &DatasetSpec) -> Result<Manifest> {
    use rayon::prelude::*;

    let root = root.as_ref();
    std::fs::create_dir_all(root.join("images")).map_err(|e| Error::io(root, e))?;
    let records = manifest_records(spec);
    records.par_iter().enumerate().try_for_each(|(i, rec)| {
        let s = spec.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64);
        let fundus = fundus_image(s ^ 0xF00D, spec.fundus_size, spec.fundus_size);
        save_image(&fundus, root.join(&rec.fundus_path))?;
        oct_volume(s, spec.oct_width, spec.oct_height).save_dir(root.join(&rec.oct_dir))
    })?;
    let manifest = Manifest::from_records(root, records)?;
    manifest.write_csv(root.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// Copies the ground-truth frames of `split` into submission layout.
pub fn copy_ground_truth(manifest: &Manifest, split: Split, out_dir: impl AsRef<Path>) -> Result<()> {
    let out_dir = out_dir.as_ref();
    for rec in manifest.split_records(split) {
        let dst = out_dir.join(&rec.sample_id);
        std::fs::create_dir_all(&dst).map_err(|e| Error::io(&dst, e))?;
        for k in 0..FRAMES_PER_VOLUME {
            let src = crate::imaging::frame_path(&manifest.root().join(&rec.oct_dir), k)
                .ok_or_else(|| Error::MissingFrame(rec.sample_id.clone(), k))?;
            let name = src.file_name().expect("frame file name");
            std::fs::copy(&src, dst.join(name)).map_err(|e| Error::io(&src, e))?;
        }
    }
    Ok(())
}
