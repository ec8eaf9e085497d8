//! Per-frame PSNR and SSIM, and their six-frame averages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{Frame, OctVolume, FRAMES_PER_VOLUME};

/// PSNR reported for identical frames.
pub const PSNR_CAP_DB: f64 = 100.0;

fn check_dims(a: &Frame, b: &Frame) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimMismatch(format!("{:?} vs {:?}", a.dims(), b.dims())));
    }
    Ok(())
}

/// Mean squared error over all pixels, exact up to the final division.
pub fn mse(a: &Frame, b: &Frame) -> Result<f64> {
    check_dims(a, b)?;
    let sse: u64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = i32::from(x) - i32::from(y);
            (d * d) as u64
        })
        .sum();
    Ok(sse as f64 / a.data().len() as f64)
}

pub fn psnr(a: &Frame, b: &Frame, max_val: f64) -> Result<f64> {
    psnr_capped(a, b, max_val, PSNR_CAP_DB)
}

/// `10 log10(max² / MSE)`, or `cap` when the frames are identical.
pub fn psnr_capped(a: &Frame, b: &Frame, max_val: f64, cap: f64) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(cap);
    }
    Ok((10.0 * (max_val * max_val / m).log10()).min(cap))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
    pub window: usize,
    pub sigma: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
            window: 11,
            sigma: 1.5,
        }
    }
}

impl SsimParams {
    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    /// Normalised 1-D Gaussian taps; the 2-D window is their outer product.
    pub fn kernel(&self) -> Vec<f64> {
        let c = (self.window as f64 - 1.0) / 2.0;
        let mut k: Vec<f64> = (0..self.window)
            .map(|i| {
                let d = i as f64 - c;
                (-(d * d) / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let s: f64 = k.iter().sum();
        k.iter_mut().for_each(|v| *v /= s);
        k
    }
}

/// Applies `kernel` along a row, writing only fully covered positions.
#[inline]
fn filter_row(src: &[f32], kernel: &[f32], dst: &mut [f32]) {
    dst.fill(0.0);
    let n = dst.len();
    for (t, &kt) in kernel.iter().enumerate() {
        for (o, &v) in dst.iter_mut().zip(&src[t..t + n]) {
            *o += kt * v;
        }
    }
}

/// Mean SSIM over the valid (unpadded) region, using Gaussian-weighted local
/// statistics.
pub fn ssim(a: &Frame, b: &Frame, p: &SsimParams) -> Result<f64> {
    check_dims(a, b)?;
    let (w, h) = a.dims();
    let win = p.window;
    if win == 0 || w < win || h < win {
        return Err(Error::TooSmall {
            width: w,
            height: h,
            window: win,
        });
    }
    let kernel: Vec<f32> = p.kernel().into_iter().map(|v| v as f32).collect();
    let ow = w - win + 1;
    let oh = h - win + 1;
    let c1 = p.c1() as f32;
    let c2 = p.c2() as f32;
    // Centre intensities to keep the variance subtraction well conditioned.
    const OFFSET: f32 = 128.0;

    // Horizontal pass for the five moment maps: a, b, a², b², ab.
    let mut hmaps = vec![0f32; 5 * h * ow];
    let (ha, rest) = hmaps.split_at_mut(h * ow);
    let (hb, rest) = rest.split_at_mut(h * ow);
    let (haa, rest) = rest.split_at_mut(h * ow);
    let (hbb, hab) = rest.split_at_mut(h * ow);
    let mut ra = vec![0f32; w];
    let mut rb = vec![0f32; w];
    let mut rp = vec![0f32; w];
    for y in 0..h {
        for (dst, &v) in ra.iter_mut().zip(a.row(y)) {
            *dst = f32::from(v) - OFFSET;
        }
        for (dst, &v) in rb.iter_mut().zip(b.row(y)) {
            *dst = f32::from(v) - OFFSET;
        }
        let out = y * ow..(y + 1) * ow;
        filter_row(&ra, &kernel, &mut ha[out.clone()]);
        filter_row(&rb, &kernel, &mut hb[out.clone()]);
        for ((d, &x), &z) in rp.iter_mut().zip(&ra).zip(&rb) {
            *d = x * z;
        }
        filter_row(&rp, &kernel, &mut hab[out.clone()]);
        for (d, &x) in rp.iter_mut().zip(&ra) {
            *d = x * x;
        }
        filter_row(&rp, &kernel, &mut haa[out.clone()]);
        for (d, &z) in rp.iter_mut().zip(&rb) {
            *d = z * z;
        }
        filter_row(&rp, &kernel, &mut hbb[out]);
    }

    // Vertical pass, one output row at a time, then the SSIM map.
    let mut acc = vec![0f32; 5 * ow];
    let mut total = 0f64;
    for oy in 0..oh {
        acc.fill(0.0);
        let (ma, rest) = acc.split_at_mut(ow);
        let (mb, rest) = rest.split_at_mut(ow);
        let (maa, rest) = rest.split_at_mut(ow);
        let (mbb, mab) = rest.split_at_mut(ow);
        for (t, &kt) in kernel.iter().enumerate() {
            let r = (oy + t) * ow..(oy + t + 1) * ow;
            for (o, &v) in ma.iter_mut().zip(&ha[r.clone()]) {
                *o += kt * v;
            }
            for (o, &v) in mb.iter_mut().zip(&hb[r.clone()]) {
                *o += kt * v;
            }
            for (o, &v) in maa.iter_mut().zip(&haa[r.clone()]) {
                *o += kt * v;
            }
            for (o, &v) in mbb.iter_mut().zip(&hbb[r.clone()]) {
                *o += kt * v;
            }
            for (o, &v) in mab.iter_mut().zip(&hab[r]) {
                *o += kt * v;
            }
        }
        let mut row_sum = 0f32;
        for x in 0..ow {
            let (ca, cb) = (ma[x], mb[x]);
            let var_a = maa[x] - ca * ca;
            let var_b = mbb[x] - cb * cb;
            let cov = mab[x] - ca * cb;
            let mu_a = ca + OFFSET;
            let mu_b = cb + OFFSET;
            let num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
            let den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            row_sum += num / den;
        }
        total += f64::from(row_sum);
    }
    Ok((total / (ow * oh) as f64).clamp(-1.0, 1.0))
}

/// Six-frame means of per-frame PSNR and SSIM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeScores {
    pub psnr_mean: f64,
    pub ssim_mean: f64,
    pub psnr: [f64; FRAMES_PER_VOLUME],
    pub ssim: [f64; FRAMES_PER_VOLUME],
}

pub fn volume_pixel_scores(pred: &OctVolume, gt: &OctVolume, p: &SsimParams) -> Result<VolumeScores> {
    volume_pixel_scores_capped(pred, gt, p, PSNR_CAP_DB)
}

pub fn volume_pixel_scores_capped(
    pred: &OctVolume,
    gt: &OctVolume,
    p: &SsimParams,
    psnr_cap: f64,
) -> Result<VolumeScores> {
    let mut psnr_k = [0.0; FRAMES_PER_VOLUME];
    let mut ssim_k = [0.0; FRAMES_PER_VOLUME];
    for k in 0..FRAMES_PER_VOLUME {
        psnr_k[k] = psnr_capped(pred.frame(k), gt.frame(k), p.dynamic_range, psnr_cap)?;
        ssim_k[k] = ssim(pred.frame(k), gt.frame(k), p)?;
    }
    let n = FRAMES_PER_VOLUME as f64;
    Ok(VolumeScores {
        psnr_mean: psnr_k.iter().sum::<f64>() / n,
        ssim_mean: ssim_k.iter().sum::<f64>() / n,
        psnr: psnr_k,
        ssim: ssim_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(v: u8) -> Frame {
        Frame::filled(32, 24, [v]).unwrap()
    }

    #[test]
    fn psnr_cases() {
        assert_eq!(psnr(&constant(9), &constant(9), 255.0).unwrap(), PSNR_CAP_DB);
        assert!((psnr(&constant(0), &constant(255), 255.0).unwrap()).abs() < 1e-12);
        let expected = 10.0 * (65025.0f64 / 256.0).log10();
        assert!((psnr(&constant(0), &constant(16), 255.0).unwrap() - expected).abs() < 1e-9);
        assert!((expected - 24.0484).abs() < 1e-4);
        assert!(matches!(
            psnr(&constant(0), &Frame::filled(3, 3, [0]).unwrap(), 255.0),
            Err(Error::DimMismatch(_))
        ));
    }

    #[test]
    fn ssim_constant_closed_forms() {
        let p = SsimParams::default();
        assert_eq!(ssim(&constant(77), &constant(77), &p).unwrap(), 1.0);
        let c1 = p.c1();
        let want = (2.0 * 100.0 * 150.0 + c1) / (100.0f64.powi(2) + 150.0f64.powi(2) + c1);
        let got = ssim(&constant(100), &constant(150), &p).unwrap();
        assert!((got - want).abs() < 1e-4, "{got} vs {want}");
        assert!((want - 0.923092).abs() < 1e-5);
        let got = ssim(&constant(0), &constant(255), &p).unwrap();
        assert!((got - c1 / (65025.0 + c1)).abs() < 1e-4);
    }

    #[test]
    fn ssim_errors() {
        let p = SsimParams::default();
        let small = Frame::filled(10, 30, [0]).unwrap();
        assert!(matches!(ssim(&small, &small, &p), Err(Error::TooSmall { .. })));
        assert!(matches!(ssim(&constant(0), &small, &p), Err(Error::DimMismatch(_))));
    }

    #[test]
    fn kernel_is_normalised() {
        let k = SsimParams::default().kernel();
        assert_eq!(k.len(), 11);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(SsimParams::default().c1() > 0.0 && SsimParams::default().c2() > 0.0);
    }

    /// Direct double-precision evaluation of the windowed SSIM, used as an
    /// oracle for the separable single-precision path.
    fn ssim_oracle(a: &Frame, b: &Frame, p: &SsimParams) -> f64 {
        let k = p.kernel();
        let win = p.window;
        let (w, h) = a.dims();
        let mut total = 0.0;
        for oy in 0..=h - win {
            for ox in 0..=w - win {
                let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for j in 0..win {
                    for i in 0..win {
                        let wt = k[i] * k[j];
                        let x = f64::from(a.get(ox + i, oy + j));
                        let y = f64::from(b.get(ox + i, oy + j));
                        ma += wt * x;
                        mb += wt * y;
                        saa += wt * x * x;
                        sbb += wt * y * y;
                        sab += wt * x * y;
                    }
                }
                let va = saa - ma * ma;
                let vb = sbb - mb * mb;
                let cv = sab - ma * mb;
                total += ((2.0 * ma * mb + p.c1()) * (2.0 * cv + p.c2()))
                    / ((ma * ma + mb * mb + p.c1()) * (va + vb + p.c2()));
            }
        }
        total / ((w - win + 1) * (h - win + 1)) as f64
    }

    #[test]
    fn ssim_matches_direct_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let a = Frame::from_fn(23, 19, |_, _| [rng.random()]).unwrap();
        let b = Frame::from_fn(23, 19, |x, y| [a.get(x, y).saturating_add(rng.random_range(0..40))]).unwrap();
        let p = SsimParams::default();
        let fast = ssim(&a, &b, &p).unwrap();
        let slow = ssim_oracle(&a, &b, &p);
        assert!((fast - slow).abs() < 1e-4, "{fast} vs {slow}");
        assert!((ssim(&b, &a, &p).unwrap() - fast).abs() < 1e-6);
    }

    #[test]
    fn volume_means() {
        let gt = OctVolume::new(vec![constant(0); 6]).unwrap();
        let s = volume_pixel_scores(&gt, &gt, &SsimParams::default()).unwrap();
        assert_eq!((s.psnr_mean, s.ssim_mean), (100.0, 1.0));

        let mut frames = vec![constant(0); 3];
        frames.extend(vec![constant(255); 3]);
        let pred = OctVolume::new(frames).unwrap();
        let s = volume_pixel_scores(&pred, &gt, &SsimParams::default()).unwrap();
        assert!((s.psnr_mean - 50.0).abs() < 1e-12);
    }

    #[test]
    fn volume_mean_matches_per_frame_oracle() {
        let p = SsimParams::default();
        let gt = OctVolume::new(vec![constant(0); 6]).unwrap();
        let levels = [0u8, 4, 16, 64, 100, 255];
        let pred = OctVolume::new(levels.iter().map(|&v| constant(v)).collect()).unwrap();
        let psnr_oracle: Vec<f64> = levels
            .iter()
            .map(|&v| if v == 0 { 100.0 } else { 10.0 * (65025.0 / f64::from(v).powi(2)).log10() })
            .collect();
        let ssim_oracle: Vec<f64> = levels
            .iter()
            .map(|&v| p.c1() / (f64::from(v).powi(2) + p.c1()))
            .collect();
        let s = volume_pixel_scores(&pred, &gt, &p).unwrap();
        assert!((s.psnr_mean - psnr_oracle.iter().sum::<f64>() / 6.0).abs() < 1e-9);
        assert!((s.ssim_mean - ssim_oracle.iter().sum::<f64>() / 6.0).abs() < 1e-4);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn pair() -> impl Strategy<Value = (Frame, Frame)> {
            (11usize..20, 11usize..20).prop_flat_map(|(w, h)| {
                (
                    proptest::collection::vec(any::<u8>(), w * h),
                    proptest::collection::vec(any::<u8>(), w * h),
                )
                    .prop_map(move |(a, b)| (Frame::new(w, h, a).unwrap(), Frame::new(w, h, b).unwrap()))
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn ssim_bounded_symmetric_reflexive((a, b) in pair()) {
                let p = SsimParams::default();
                let ab = ssim(&a, &b, &p).unwrap();
                prop_assert!((-1.0..=1.0).contains(&ab));
                prop_assert!((ab - ssim(&b, &a, &p).unwrap()).abs() < 1e-6);
                prop_assert_eq!(ssim(&a, &a, &p).unwrap(), 1.0);
            }

            #[test]
            fn psnr_symmetric_and_monotone((a, b) in pair(), bump in 1u8..50) {
                let ab = psnr(&a, &b, 255.0).unwrap();
                prop_assert_eq!(ab, psnr(&b, &a, 255.0).unwrap());
                prop_assert_eq!(psnr(&a, &a, 255.0).unwrap(), PSNR_CAP_DB);
                // widening the error everywhere strictly lowers PSNR
                let c = Frame::from_fn(a.width(), a.height(), |x, y| [a.get(x, y).saturating_sub(bump)]).unwrap();
                let d = Frame::from_fn(a.width(), a.height(), |x, y| [a.get(x, y).saturating_sub(bump / 2)]).unwrap();
                let (m_d, m_c) = (mse(&a, &d).unwrap(), mse(&a, &c).unwrap());
                if m_c > m_d {
                    prop_assert!(psnr(&a, &c, 255.0).unwrap() < psnr(&a, &d, 255.0).unwrap());
                }
            }
        }
    }
}
