//! Set-level Fréchet distance on reference embeddings: zero for identical
//! sets, growing with the strength of the corruption.

use octbench::baselines::{corrupt_volume, CorruptionSpec, NoiseSchedule};
use octbench::imaging::OctVolume;
use octbench::metrics::{embed_volume, fvd, gaussian_stats, ReferenceEmbedder, REFERENCE_DIM};
use octbench::synthetic;

fn main() -> octbench::Result<()> {
    let gt: Vec<(String, OctVolume)> = (0..32)
        .map(|i| (format!("s{i:03}"), synthetic::smooth_volume(i, 96, 96)))
        .collect();
    let stats = gaussian_stats(&gt.iter().map(|(_, v)| embed_volume(v)).collect::<Vec<_>>())?;
    println!("embedding dim {REFERENCE_DIM}, covariance trace {:.4}", stats.sigma.trace());

    let e = ReferenceEmbedder;
    println!("fvd(gt, gt) = {:.3e}", fvd(&gt, &gt, &e)?);

    let schedule = NoiseSchedule::default();
    let specs = [
        CorruptionSpec::crop(0.7, 0.9, 1),
        CorruptionSpec::noise(50, 1),
        CorruptionSpec::noise(100, 1),
        CorruptionSpec::noise(150, 1),
    ];
    for spec in specs {
        let pred = gt
            .iter()
            .map(|(id, v)| Ok((id.clone(), corrupt_volume(v, id, &spec, &schedule)?)))
            .collect::<octbench::Result<Vec<_>>>()?;
        println!("{:<22} fvd {:.5}", spec.label(), fvd(&pred, &gt, &e)?);
    }
    Ok(())
}
