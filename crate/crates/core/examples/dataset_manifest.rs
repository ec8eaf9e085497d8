//! Write a small synthetic dataset, parse its manifest, look at the split
//! counts and validate a submission directory.

use octbench::dataset::{load_sample, parse_manifest, scan_submission, Split, MANIFEST_FILE};
use octbench::synthetic::{self, DatasetSpec};
use octbench::Error;

fn main() -> octbench::Result<()> {
    let tmp = tempfile::tempdir().expect("temp dir");
    let root = tmp.path().join("data");
    let spec = DatasetSpec {
        splits: vec![(Split::Train, 6, 3), (Split::PrelimTest, 3, 2), (Split::FinalTest, 4, 2)],
        oct_width: 96,
        oct_height: 64,
        fundus_size: 128,
        seed: 1,
    };
    synthetic::write_dataset(&root, &spec)?;

    let manifest = parse_manifest(root.join(MANIFEST_FILE))?;
    for (split, n) in manifest.split_counts() {
        println!("{split:>11}: {n} pairs");
    }
    let sample = load_sample(&manifest, "s0000")?;
    println!(
        "s0000 (patient {}): fundus {:?}, oct {:?}",
        sample.patient_id,
        sample.fundus.dims(),
        sample.volume.dims()
    );

    let sub = tmp.path().join("submission");
    synthetic::copy_ground_truth(&manifest, Split::FinalTest, &sub)?;
    let ids = manifest.split_ids(Split::FinalTest);
    let set = scan_submission(&sub, &ids)?;
    println!("complete submission `{}` with {} volumes", set.submission_id, set.volumes.len());

    std::fs::remove_file(sub.join("s0010").join("1.png")).expect("remove frame");
    std::fs::remove_dir_all(sub.join("s0012")).expect("remove sample");
    match scan_submission(&sub, &ids) {
        Err(Error::IncompleteSubmission(defects)) => {
            for d in defects {
                println!("defect: {d}");
            }
        }
        other => println!("unexpected: {:?}", other.map(|s| s.volumes.len())),
    }
    Ok(())
}
