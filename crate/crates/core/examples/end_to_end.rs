//! Full run: synthetic dataset, baseline submissions, evaluation through the
//! library and through the command-line entry point, and a leaderboard.

use octbench::baselines::{generate_baseline_submission, CorruptionSpec};
use octbench::dataset::Split;
use octbench::harness::cli::cli_main;
use octbench::harness::config::RunConfig;
use octbench::harness::{evaluate, leaderboard_csv, rank};
use octbench::metrics::MetricReport;
use octbench::synthetic::{self, DatasetSpec};

fn main() -> octbench::Result<()> {
    let tmp = tempfile::tempdir().expect("temp dir");
    let data = tmp.path().join("data");
    let manifest = synthetic::write_dataset(&data, &DatasetSpec::single(Split::FinalTest, 16, 192, 128, 4))?;

    let mut reports = Vec::new();
    for spec in [
        CorruptionSpec::identity(),
        CorruptionSpec::noise(100, 1),
        CorruptionSpec::noise(150, 1),
        CorruptionSpec::crop(0.7, 0.9, 1),
    ] {
        let dir = tmp.path().join(spec.label());
        generate_baseline_submission(&manifest, Split::FinalTest, &spec, &dir)?;
        let report = evaluate(&manifest, Split::FinalTest, &dir, &RunConfig::default())?;
        println!(
            "{:<22} fvd {:>9.5}  ssim {:.4}  psnr {:>7.3}",
            report.submission_id, report.fvd, report.ssim_mean, report.psnr_mean
        );
        reports.push(report);
    }
    println!();
    print!("{}", leaderboard_csv(&rank(&reports)?));

    let sub = tmp.path().join(CorruptionSpec::noise(100, 1).label());
    let json = tmp.path().join("cli.json");
    let args = ["octbench", "evaluate", "--dataset", data.to_str().unwrap(), "--submission", sub.to_str().unwrap(), "--out", json.to_str().unwrap()];
    let code = cli_main(args);
    let cli = MetricReport::read_json(&json)?;
    println!("\ncli exit {code}, same report as the library: {}", cli.to_json() == reports[1].to_json());
    Ok(())
}
