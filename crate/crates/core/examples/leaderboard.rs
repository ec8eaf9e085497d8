//! Rank metric reports by FVD and print the leaderboard CSV.

use octbench::harness::{leaderboard_csv, rank};
use octbench::metrics::MetricReport;

fn main() -> octbench::Result<()> {
    let teams = [
        ("team-a", 697.6727, 0.3961, 13.90),
        ("team-b", 624.5898, 0.4162, 14.61),
        ("team-c", 640.7700, 0.4038, 14.02),
        ("team-d", 630.8068, 0.4175, 14.25),
    ];
    let reports: Vec<MetricReport> = teams
        .iter()
        .map(|&(id, fvd, ssim, psnr)| MetricReport {
            submission_id: id.into(),
            fvd,
            ssim_mean: ssim,
            psnr_mean: psnr,
            per_sample: Vec::new(),
        })
        .collect();
    print!("{}", leaderboard_csv(&rank(&reports)?));
    Ok(())
}
