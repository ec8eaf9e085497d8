//! Submission scoring and the FVD-ranked leaderboard.

pub mod cli;
pub mod config;

use std::collections::HashSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{scan_submission, Manifest, Split};
use crate::error::{Error, Result};
use crate::metrics::{
    fvd_from_embeddings, volume_pixel_scores_capped, Embedding, ExternalEmbedder, MetricReport,
    ReferenceEmbedder, SampleScore, VolumeEmbedder,
};

pub use config::{EmbedderConfig, PreprocessConfig, RunConfig};

/// Runs `f` on a dedicated pool when `workers` is set.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

struct SampleResult {
    score: SampleScore,
    pred: Option<Embedding>,
    gt: Option<Embedding>,
}

/// Scores a submission directory against the ground truth of `split`.
///
/// The submission must contain every sample of the split; otherwise the
/// call fails with [`Error::IncompleteSubmission`] and no report is built.
/// Per-sample work runs in parallel, reductions run in sample-id order.
pub fn evaluate(
    manifest: &Manifest,
    split: Split,
    submission_dir: impl AsRef<Path>,
    config: &RunConfig,
) -> Result<MetricReport> {
    let ids = manifest.split_ids(split);
    if ids.is_empty() {
        return Err(Error::Config(format!("split `{split}` has no samples")));
    }
    let submission = scan_submission(submission_dir, &ids)?;
    let ids: Vec<String> = ids.into_iter().collect();
    let reference = matches!(config.embedder, EmbedderConfig::Reference);

    let per_sample = with_workers(config.workers, || {
        ids.par_iter()
            .map(|id| {
                let gt = manifest.load_volume(id)?;
                let pred = submission.load(id)?;
                let scores = volume_pixel_scores_capped(&pred, &gt, &config.ssim, config.psnr_cap)?;
                let (pred_emb, gt_emb) = if reference {
                    (
                        Some(ReferenceEmbedder.embed(id, &pred)?),
                        Some(ReferenceEmbedder.embed(id, &gt)?),
                    )
                } else {
                    (None, None)
                };
                Ok(SampleResult {
                    score: SampleScore {
                        sample_id: id.clone(),
                        psnr: scores.psnr_mean,
                        ssim: scores.ssim_mean,
                    },
                    pred: pred_emb,
                    gt: gt_emb,
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let (pred_set, gt_set): (Vec<_>, Vec<_>) = match &config.embedder {
        EmbedderConfig::Reference => per_sample
            .iter()
            .map(|r| {
                let id = r.score.sample_id.clone();
                (
                    (id.clone(), r.pred.clone().expect("reference embedding")),
                    (id, r.gt.clone().expect("reference embedding")),
                )
            })
            .unzip(),
        EmbedderConfig::External {
            predictions,
            ground_truth,
        } => {
            let pred = ExternalEmbedder::from_csv(predictions)?;
            let gt = ExternalEmbedder::from_csv(ground_truth)?;
            let lookup = |e: &ExternalEmbedder, id: &str| {
                e.get(id)
                    .cloned()
                    .map(|emb| (id.to_owned(), emb))
                    .ok_or_else(|| Error::MissingEmbedding(id.to_owned()))
            };
            let p = ids.iter().map(|id| lookup(&pred, id)).collect::<Result<Vec<_>>>()?;
            let g = ids.iter().map(|id| lookup(&gt, id)).collect::<Result<Vec<_>>>()?;
            (p, g)
        }
    };
    let fvd = fvd_from_embeddings(&pred_set, &gt_set)?;

    let n = per_sample.len() as f64;
    let psnr_mean = per_sample.iter().map(|r| r.score.psnr).sum::<f64>() / n;
    let ssim_mean = per_sample.iter().map(|r| r.score.ssim).sum::<f64>() / n;
    Ok(MetricReport {
        submission_id: config
            .submission_id
            .clone()
            .unwrap_or_else(|| submission.submission_id.clone()),
        fvd,
        ssim_mean,
        psnr_mean,
        per_sample: per_sample.into_iter().map(|r| r.score).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub rank: usize,
    pub submission_id: String,
    pub fvd: f64,
    pub ssim_mean: f64,
    pub psnr_mean: f64,
}

/// Orders submissions by FVD (lower is better). Exact FVD ties fall back to
/// higher SSIM, then higher PSNR, then submission id.
pub fn rank(reports: &[MetricReport]) -> Result<Vec<LeaderboardEntry>> {
    if reports.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut seen = HashSet::new();
    for r in reports {
        if !seen.insert(r.submission_id.as_str()) {
            return Err(Error::DuplicateSubmissionId(r.submission_id.clone()));
        }
    }
    let mut sorted: Vec<&MetricReport> = reports.iter().collect();
    sorted.sort_by(|a, b| {
        a.fvd
            .total_cmp(&b.fvd)
            .then_with(|| b.ssim_mean.total_cmp(&a.ssim_mean))
            .then_with(|| b.psnr_mean.total_cmp(&a.psnr_mean))
            .then_with(|| a.submission_id.cmp(&b.submission_id))
    });
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, r)| LeaderboardEntry {
            rank: i + 1,
            submission_id: r.submission_id.clone(),
            fvd: r.fvd,
            ssim_mean: r.ssim_mean,
            psnr_mean: r.psnr_mean,
        })
        .collect())
}

/// `rank,submission_id,fvd,ssim_mean,psnr_mean` with six decimals.
pub fn leaderboard_csv(entries: &[LeaderboardEntry]) -> String {
    let mut out = String::from("rank,submission_id,fvd,ssim_mean,psnr_mean\n");
    for e in entries {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6}\n",
            e.rank, e.submission_id, e.fvd, e.ssim_mean, e.psnr_mean
        ));
    }
    out
}
