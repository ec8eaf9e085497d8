//! Paired fundus/OCT dataset manifests and submission directories.
//!
//! Layout on disk:
//!
//! ```text
//! <root>/manifest.csv                  sample_id,patient_id,fundus_path,oct_dir,split
//! <root>/images/<sample_id>.{jpg,png}  fundus photograph
//! <root>/oct/<sample_id>/<k>.png       B-scan k, k in 0..6
//! <submission>/<sample_id>/<k>.png     predicted B-scans
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::{Component, Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Defect, Error, Result};
use crate::imaging::{
    frame_path, image_dimensions, load_image, FundusImage, OctVolume, FRAMES_PER_VOLUME,
};

pub const MANIFEST_COLUMNS: [&str; 5] = ["sample_id", "patient_id", "fundus_path", "oct_dir", "split"];
pub const MANIFEST_FILE: &str = "manifest.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    PrelimTest,
    FinalTest,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::PrelimTest, Split::FinalTest];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::PrelimTest => "prelim_test",
            Split::FinalTest => "final_test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|sp| sp.as_str() == s)
            .ok_or_else(|| Error::InvalidRecord(format!("unknown split `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairingRecord {
    pub sample_id: String,
    pub patient_id: String,
    pub fundus_path: PathBuf,
    pub oct_dir: PathBuf,
    pub split: Split,
}

impl PairingRecord {
    /// Record following the default `images/` + `oct/` layout.
    pub fn standard(sample_id: &str, patient_id: &str, split: Split) -> Self {
        Self {
            sample_id: sample_id.to_owned(),
            patient_id: patient_id.to_owned(),
            fundus_path: PathBuf::from(format!("images/{sample_id}.png")),
            oct_dir: PathBuf::from(format!("oct/{sample_id}")),
            split,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Manifest {
    root: PathBuf,
    records: Vec<PairingRecord>,
    index: HashMap<String, usize>,
}

fn is_plain_relative(p: &Path) -> bool {
    !p.as_os_str().is_empty() && p.components().all(|c| matches!(c, Component::Normal(_) | Component::CurDir))
}

impl Manifest {
    /// Validates and indexes a record list.
    pub fn from_records(root: impl Into<PathBuf>, records: Vec<PairingRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyManifest);
        }
        let mut index = HashMap::with_capacity(records.len());
        let mut patient_split: HashMap<&str, Split> = HashMap::new();
        for (i, r) in records.iter().enumerate() {
            if r.sample_id.is_empty() || r.patient_id.is_empty() {
                return Err(Error::InvalidRecord(format!("row {}: empty id", i + 1)));
            }
            for p in [&r.fundus_path, &r.oct_dir] {
                if !is_plain_relative(p) {
                    return Err(Error::InvalidRecord(format!(
                        "{}: path `{}` must be relative without `..`",
                        r.sample_id,
                        p.display()
                    )));
                }
            }
            if index.insert(r.sample_id.clone(), i).is_some() {
                return Err(Error::DuplicateSampleId(r.sample_id.clone()));
            }
            match patient_split.get(r.patient_id.as_str()) {
                Some(&s) if s != r.split => {
                    let (first, second) = if s < r.split { (s, r.split) } else { (r.split, s) };
                    return Err(Error::SplitLeak {
                        patient: r.patient_id.clone(),
                        first: first.to_string(),
                        second: second.to_string(),
                    });
                }
                Some(_) => {}
                None => {
                    patient_split.insert(&r.patient_id, r.split);
                }
            }
        }
        Ok(Self {
            root: root.into(),
            records,
            index,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn records(&self) -> &[PairingRecord] {
        &self.records
    }

    pub fn get(&self, sample_id: &str) -> Option<&PairingRecord> {
        self.index.get(sample_id).map(|&i| &self.records[i])
    }

    pub fn split_records(&self, split: Split) -> impl Iterator<Item = &PairingRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    /// Sample ids of a split, sorted.
    pub fn split_ids(&self, split: Split) -> BTreeSet<String> {
        self.split_records(split).map(|r| r.sample_id.clone()).collect()
    }

    pub fn split_counts(&self) -> BTreeMap<Split, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            *counts.entry(r.split).or_insert(0) += 1;
        }
        counts
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        for r in &self.records {
            w.serialize(r).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Loads only the OCT side of a sample.
    pub fn load_volume(&self, sample_id: &str) -> Result<OctVolume> {
        let rec = self
            .get(sample_id)
            .ok_or_else(|| Error::UnknownSample(sample_id.to_owned()))?;
        OctVolume::load_dir(self.root.join(&rec.oct_dir), sample_id)
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if let csv::ErrorKind::Io(_) = e.kind() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::Parse(format!("{}: {e}", path.display()))
    }
}

/// Parses a manifest CSV; the dataset root is the CSV's parent directory.
pub fn parse_manifest(csv_path: impl AsRef<Path>) -> Result<Manifest> {
    let csv_path = csv_path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(csv_path)
        .map_err(|e| csv_error(csv_path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(csv_path, e))?.clone();
    for col in MANIFEST_COLUMNS {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::MissingColumn(col.to_owned()));
        }
    }
    let mut records = Vec::new();
    for (row, rec) in reader.deserialize::<PairingRecord>().enumerate() {
        let rec = rec.map_err(|e| Error::InvalidRecord(format!("row {}: {e}", row + 1)))?;
        records.push(rec);
    }
    let root = csv_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Manifest::from_records(root, records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pub sample_id: String,
    pub patient_id: String,
    pub fundus: FundusImage,
    pub volume: OctVolume,
}

pub fn load_sample(manifest: &Manifest, sample_id: &str) -> Result<PairedSample> {
    let rec = manifest
        .get(sample_id)
        .ok_or_else(|| Error::UnknownSample(sample_id.to_owned()))?;
    let fundus = load_image(manifest.root().join(&rec.fundus_path))?;
    let volume = manifest.load_volume(sample_id)?;
    Ok(PairedSample {
        sample_id: rec.sample_id.clone(),
        patient_id: rec.patient_id.clone(),
        fundus,
        volume,
    })
}

/// A submitted volume whose six frame files exist and agree in size.
/// Pixels are decoded on demand by [`SubmissionSet::load`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VolumeFiles {
    pub frames: [PathBuf; FRAMES_PER_VOLUME],
    pub dims: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct SubmissionSet {
    pub submission_id: String,
    pub root: PathBuf,
    pub volumes: BTreeMap<String, VolumeFiles>,
    /// Sample directories present but not expected; ignored for scoring.
    pub extra_ids: Vec<String>,
}

impl SubmissionSet {
    pub fn load(&self, sample_id: &str) -> Result<OctVolume> {
        let files = self
            .volumes
            .get(sample_id)
            .ok_or_else(|| Error::UnknownSample(sample_id.to_owned()))?;
        let frames = files
            .frames
            .iter()
            .map(load_image)
            .collect::<Result<Vec<_>>>()?;
        OctVolume::new(frames)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.volumes.keys().map(String::as_str)
    }
}

/// Checks that every expected sample has six readable, equally sized frames.
/// Any defect invalidates the whole submission.
pub fn scan_submission(dir: impl AsRef<Path>, expected_ids: &BTreeSet<String>) -> Result<SubmissionSet> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::FileNotFound(dir.to_path_buf()));
    }
    let mut defects = Vec::new();
    let mut volumes = BTreeMap::new();
    for id in expected_ids {
        let sdir = dir.join(id);
        if !sdir.is_dir() {
            defects.push(Defect::MissingSample(id.clone()));
            continue;
        }
        let mut paths = Vec::with_capacity(FRAMES_PER_VOLUME);
        let mut dims = Vec::with_capacity(FRAMES_PER_VOLUME);
        let before = defects.len();
        for k in 0..FRAMES_PER_VOLUME {
            match frame_path(&sdir, k) {
                None => defects.push(Defect::MissingFrame(id.clone(), k)),
                Some(p) => match image_dimensions(&p) {
                    Ok(d) => {
                        dims.push(d);
                        paths.push(p);
                    }
                    Err(_) => defects.push(Defect::Unreadable(id.clone(), k)),
                },
            }
        }
        if defects.len() > before {
            continue;
        }
        if dims.iter().any(|d| *d != dims[0]) {
            defects.push(Defect::DimMismatch(id.clone()));
            continue;
        }
        let frames: [PathBuf; FRAMES_PER_VOLUME] = paths.try_into().expect("six frame paths");
        volumes.insert(id.clone(), VolumeFiles { frames, dims: dims[0] });
    }
    if !defects.is_empty() {
        return Err(Error::IncompleteSubmission(defects));
    }
    let mut extra_ids = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if entry.path().is_dir() {
            let name = entry.file_name().to_string_lossy().into_owned();
            if !expected_ids.contains(&name) {
                extra_ids.push(name);
            }
        }
    }
    extra_ids.sort();
    let submission_id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "submission".to_owned());
    Ok(SubmissionSet {
        submission_id,
        root: dir.to_path_buf(),
        volumes,
        extra_ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{save_image, Frame};

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    const HEADER: &str = "sample_id,patient_id,fundus_path,oct_dir,split\n";

    #[test]
    fn parses_two_rows() {
        let d = tempfile::tempdir().unwrap();
        let p = write(
            d.path(),
            "m.csv",
            &format!("{HEADER}s1,P1,images/s1.jpg,oct/s1,train\ns2,P2,images/s2.jpg,oct/s2,final_test\n"),
        );
        let m = parse_manifest(&p).unwrap();
        assert_eq!(m.records().len(), 2);
        assert_eq!(m.get("s2").unwrap().split, Split::FinalTest);
        assert_eq!(m.root(), d.path());
    }

    #[test]
    fn split_leak_is_rejected() {
        let d = tempfile::tempdir().unwrap();
        let p = write(
            d.path(),
            "m.csv",
            &format!("{HEADER}s1,P1,images/s1.jpg,oct/s1,train\ns2,P1,images/s2.jpg,oct/s2,final_test\n"),
        );
        assert!(matches!(parse_manifest(&p), Err(Error::SplitLeak { .. })));
    }

    #[test]
    fn schema_errors() {
        let d = tempfile::tempdir().unwrap();
        let p = write(d.path(), "a.csv", "sample_id,patient_id,fundus_path,split\ns1,P1,x.jpg,train\n");
        assert!(matches!(parse_manifest(&p), Err(Error::MissingColumn(c)) if c == "oct_dir"));
        let p = write(d.path(), "b.csv", HEADER);
        assert!(matches!(parse_manifest(&p), Err(Error::EmptyManifest)));
        let p = write(
            d.path(),
            "c.csv",
            &format!("{HEADER}s1,P1,a.jpg,oct/s1,train\ns1,P2,b.jpg,oct/s1b,train\n"),
        );
        assert!(matches!(parse_manifest(&p), Err(Error::DuplicateSampleId(s)) if s == "s1"));
        let p = write(d.path(), "d.csv", &format!("{HEADER}s1,P1,../a.jpg,oct/s1,train\n"));
        assert!(matches!(parse_manifest(&p), Err(Error::InvalidRecord(_))));
        let p = write(d.path(), "e.csv", &format!("{HEADER}s1,P1,/abs/a.jpg,oct/s1,train\n"));
        assert!(matches!(parse_manifest(&p), Err(Error::InvalidRecord(_))));
        let p = write(d.path(), "f.csv", &format!("{HEADER}s1,P1,a.jpg,oct/s1,validation\n"));
        assert!(matches!(parse_manifest(&p), Err(Error::InvalidRecord(_))));
    }

    fn write_volume(dir: &Path, skip: Option<usize>, odd: Option<usize>) {
        std::fs::create_dir_all(dir).unwrap();
        for k in 0..6 {
            if Some(k) == skip {
                continue;
            }
            let w = if Some(k) == odd { 9 } else { 8 };
            save_image(&Frame::filled(w, 8, [k as u8 * 10]).unwrap(), dir.join(format!("{k}.png"))).unwrap();
        }
    }

    fn one_sample_manifest(root: &Path) -> Manifest {
        let m = Manifest::from_records(root, vec![PairingRecord::standard("s1", "P1", Split::Train)]).unwrap();
        std::fs::create_dir_all(root.join("images")).unwrap();
        save_image(&FundusImage::filled(4, 4, [1, 2, 3]).unwrap(), root.join("images/s1.png")).unwrap();
        m
    }

    #[test]
    fn load_sample_in_frame_order() {
        let d = tempfile::tempdir().unwrap();
        let m = one_sample_manifest(d.path());
        write_volume(&d.path().join("oct/s1"), None, None);
        let s = load_sample(&m, "s1").unwrap();
        for k in 0..6 {
            assert_eq!(s.volume.frame(k).get(0, 0), k as u8 * 10);
        }
        assert_eq!(s.fundus.pixel(0, 0), [1, 2, 3]);
        assert!(matches!(load_sample(&m, "nope"), Err(Error::UnknownSample(_))));
    }

    #[test]
    fn load_sample_missing_frame() {
        let d = tempfile::tempdir().unwrap();
        let m = one_sample_manifest(d.path());
        write_volume(&d.path().join("oct/s1"), Some(3), None);
        assert!(matches!(load_sample(&m, "s1"), Err(Error::MissingFrame(_, 3))));
    }

    #[test]
    fn load_sample_dim_mismatch() {
        let d = tempfile::tempdir().unwrap();
        let m = one_sample_manifest(d.path());
        write_volume(&d.path().join("oct/s1"), None, Some(2));
        assert!(matches!(load_sample(&m, "s1"), Err(Error::DimMismatch(_))));
    }

    #[test]
    fn scan_reports_all_defects() {
        let d = tempfile::tempdir().unwrap();
        let ids: BTreeSet<String> = ["a", "b", "c", "e"].iter().map(|s| s.to_string()).collect();
        write_volume(&d.path().join("a"), None, None);
        write_volume(&d.path().join("b"), Some(5), None);
        write_volume(&d.path().join("c"), None, Some(1));
        match scan_submission(d.path(), &ids) {
            Err(Error::IncompleteSubmission(defects)) => assert_eq!(
                defects,
                vec![
                    Defect::MissingFrame("b".into(), 5),
                    Defect::DimMismatch("c".into()),
                    Defect::MissingSample("e".into()),
                ]
            ),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn scan_empty_dir_lists_every_id() {
        let d = tempfile::tempdir().unwrap();
        let ids: BTreeSet<String> = ["x", "y"].iter().map(|s| s.to_string()).collect();
        match scan_submission(d.path(), &ids) {
            Err(Error::IncompleteSubmission(defects)) => assert_eq!(defects.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn scan_accepts_complete_and_flags_extras() {
        let d = tempfile::tempdir().unwrap();
        let ids: BTreeSet<String> = ["a"].iter().map(|s| s.to_string()).collect();
        write_volume(&d.path().join("a"), None, None);
        write_volume(&d.path().join("zzz"), None, None);
        let set = scan_submission(d.path(), &ids).unwrap();
        assert_eq!(set.volumes.len(), 1);
        assert_eq!(set.extra_ids, vec!["zzz".to_string()]);
        assert_eq!(set.load("a").unwrap().dims(), (8, 8));
    }
}
