//! Per-frame PSNR and SSIM, and their six-frame averages, on progressively
//! noisier copies of a volume.

use octbench::baselines::{gaussian_noise_corrupt, NoiseSchedule};
use octbench::imaging::Frame;
use octbench::metrics::{psnr, ssim, volume_pixel_scores, SsimParams};
use octbench::synthetic;

fn main() -> octbench::Result<()> {
    let p = SsimParams::default();
    let a = Frame::filled(64, 64, [100])?;
    let b = Frame::filled(64, 64, [150])?;
    println!("constant 100 vs 150: psnr {:.4} dB, ssim {:.6}", psnr(&a, &b, 255.0)?, ssim(&a, &b, &p)?);

    let gt = synthetic::oct_volume(5, 256, 192);
    let schedule = NoiseSchedule::default();
    for steps in [0, 10, 50, 100, 150, 300] {
        let noisy = gaussian_noise_corrupt(&gt, steps, &schedule, 77)?;
        let s = volume_pixel_scores(&noisy, &gt, &p)?;
        println!(
            "steps {steps:>3}: alpha_bar {:.4}  psnr_mean {:>7.3} dB  ssim_mean {:.4}",
            schedule.alpha_bar(steps),
            s.psnr_mean,
            s.ssim_mean
        );
    }
    Ok(())
}
