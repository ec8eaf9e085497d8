//! Pixel-level fidelity (PSNR, SSIM) and distribution-level fidelity (FVD).

pub mod embedding;
pub mod frechet;
pub mod pixel;
pub mod report;

pub use embedding::{
    embed_volume, load_external_embeddings, write_embeddings, Embedding, ExternalEmbedder,
    ReferenceEmbedder, VolumeEmbedder, REFERENCE_DIM,
};
pub use frechet::{frechet_distance, fvd, fvd_from_embeddings, gaussian_stats, GaussianStats};
pub use pixel::{
    mse, psnr, psnr_capped, ssim, volume_pixel_scores, volume_pixel_scores_capped, SsimParams,
    VolumeScores, PSNR_CAP_DB,
};
pub use report::{MetricReport, SampleScore};
