//! Generate the three corruption baselines as on-disk submissions and check
//! that the output does not depend on the worker count.

use octbench::baselines::{generate_baseline_submission, CorruptionSpec};
use octbench::dataset::Split;
use octbench::harness::with_workers;
use octbench::synthetic::{self, DatasetSpec};

fn main() -> octbench::Result<()> {
    let tmp = tempfile::tempdir().expect("temp dir");
    let manifest = synthetic::write_dataset(
        tmp.path().join("data"),
        &DatasetSpec::single(Split::FinalTest, 8, 128, 96, 2),
    )?;

    for spec in [
        CorruptionSpec::identity(),
        CorruptionSpec::noise(100, 7),
        CorruptionSpec::crop(0.7, 0.9, 7),
    ] {
        let one = tmp.path().join(format!("{}-1", spec.label()));
        let four = tmp.path().join(format!("{}-4", spec.label()));
        let set = with_workers(Some(1), || generate_baseline_submission(&manifest, Split::FinalTest, &spec, &one))??;
        with_workers(Some(4), || generate_baseline_submission(&manifest, Split::FinalTest, &spec, &four))??;
        let identical = set.ids().all(|id| set.load(id).ok() == octbench::imaging::OctVolume::load_dir(four.join(id), id).ok());
        println!("{:<22} {} volumes, same with 1 and 4 workers: {identical}", spec.label(), set.volumes.len());
    }
    Ok(())
}
