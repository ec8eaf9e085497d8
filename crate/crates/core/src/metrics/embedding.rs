//! Volume embeddings for the Fréchet distance: the built-in reference
//! embedder and the CSV import path for features computed elsewhere.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::{Frame, OctVolume, FRAMES_PER_VOLUME};

/// Pooling grid per frame.
pub const POOL_GRID: usize = 4;
/// Dimension of [`ReferenceEmbedder`] output: 6×16 pooled means + 5 motion terms.
pub const REFERENCE_DIM: usize = FRAMES_PER_VOLUME * POOL_GRID * POOL_GRID + (FRAMES_PER_VOLUME - 1);

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure(format!("embedding entry {i} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Maps a volume to a feature vector. Implementations must be deterministic.
pub trait VolumeEmbedder: Sync {
    fn embed(&self, sample_id: &str, volume: &OctVolume) -> Result<Embedding>;
}

/// Training-free embedder: each frame average-pooled onto a 4×4 grid
/// (intensities scaled to `[0, 1]`), followed by the mean absolute
/// difference between each pair of adjacent frames.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceEmbedder;

impl VolumeEmbedder for ReferenceEmbedder {
    fn embed(&self, _sample_id: &str, volume: &OctVolume) -> Result<Embedding> {
        Ok(embed_volume(volume))
    }
}

pub fn embed_volume(volume: &OctVolume) -> Embedding {
    let mut out = Vec::with_capacity(REFERENCE_DIM);
    for frame in volume.frames() {
        pool_frame(frame, &mut out);
    }
    for pair in volume.frames().windows(2) {
        let sad: u64 = pair[0]
            .data()
            .iter()
            .zip(pair[1].data())
            .map(|(&a, &b)| u64::from(a.abs_diff(b)))
            .sum();
        out.push(sad as f64 / pair[0].data().len() as f64 / 255.0);
    }
    Embedding(out)
}

/// Cell `(gx, gy)` covers rows `[gy·H/4, (gy+1)·H/4)` and the matching
/// columns. Frames narrower than the grid reuse pixels across cells.
fn pool_frame(frame: &Frame, out: &mut Vec<f64>) {
    let (w, h) = frame.dims();
    let bounds = |n: usize, g: usize| {
        let lo = g * n / POOL_GRID;
        let hi = ((g + 1) * n / POOL_GRID).max(lo + 1).min(n);
        (lo.min(n - 1), hi)
    };
    for gy in 0..POOL_GRID {
        let (y0, y1) = bounds(h, gy);
        for gx in 0..POOL_GRID {
            let (x0, x1) = bounds(w, gx);
            let mut sum = 0u64;
            for y in y0..y1 {
                sum += frame.row(y)[x0..x1].iter().map(|&v| u64::from(v)).sum::<u64>();
            }
            let n = ((y1 - y0) * (x1 - x0)) as f64;
            out.push(sum as f64 / n / 255.0);
        }
    }
}

/// Embeddings looked up by sample id, typically from
/// [`load_external_embeddings`].
#[derive(Debug, Clone, Default)]
pub struct ExternalEmbedder {
    map: HashMap<String, Embedding>,
}

impl ExternalEmbedder {
    pub fn new(map: HashMap<String, Embedding>) -> Self {
        Self { map }
    }

    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::new(load_external_embeddings(path)?.into_iter().collect()))
    }

    pub fn get(&self, sample_id: &str) -> Option<&Embedding> {
        self.map.get(sample_id)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl VolumeEmbedder for ExternalEmbedder {
    fn embed(&self, sample_id: &str, _volume: &OctVolume) -> Result<Embedding> {
        self.get(sample_id)
            .cloned()
            .ok_or_else(|| Error::MissingEmbedding(sample_id.to_owned()))
    }
}

/// Reads `sample_id,v0,...,v{d-1}` rows. Every row must have the same `d`.
pub fn load_external_embeddings(path: impl AsRef<Path>) -> Result<BTreeMap<String, Embedding>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
        .clone();
    if headers.get(0) != Some("sample_id") {
        return Err(Error::Parse(format!("{}: first column must be `sample_id`", path.display())));
    }
    let mut dim: Option<usize> = None;
    let mut out = BTreeMap::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let id = rec.get(0).unwrap_or_default().to_owned();
        if id.is_empty() {
            return Err(Error::Parse(format!("row {}: empty sample_id", row + 1)));
        }
        let values = rec
            .iter()
            .skip(1)
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("row {}: `{s}`: {e}", row + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::InconsistentDim {
                    expected: d,
                    got: values.len(),
                    row: row + 1,
                })
            }
            Some(_) => {}
        }
        if values.is_empty() {
            return Err(Error::Parse(format!("row {}: no embedding values", row + 1)));
        }
        let emb = Embedding::new(values)?;
        if out.insert(id.clone(), emb).is_some() {
            return Err(Error::DuplicateSampleId(id));
        }
    }
    Ok(out)
}

/// Writes embeddings in the format read by [`load_external_embeddings`].
pub fn write_embeddings<'a>(
    path: impl AsRef<Path>,
    rows: impl IntoIterator<Item = (&'a str, &'a Embedding)>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse(e.to_string()))?;
    let mut header_written = false;
    for (id, emb) in rows {
        if !header_written {
            let mut header = vec!["sample_id".to_owned()];
            header.extend((0..emb.dim()).map(|i| format!("v{i}")));
            w.write_record(&header).map_err(|e| Error::Parse(e.to_string()))?;
            header_written = true;
        }
        let mut rec = vec![id.to_owned()];
        rec.extend(emb.values().iter().map(|v| format!("{v:?}")));
        w.write_record(&rec).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn const_volume(values: [u8; 6], w: usize, h: usize) -> OctVolume {
        OctVolume::new(values.iter().map(|&v| Frame::filled(w, h, [v]).unwrap()).collect()).unwrap()
    }

    #[test]
    fn zero_volume_embeds_to_zero() {
        let e = embed_volume(&const_volume([0; 6], 16, 12));
        assert_eq!(e.dim(), 101);
        assert!(e.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_frames_pool_to_constant() {
        let e = embed_volume(&const_volume([51; 6], 13, 9));
        assert!(e.values()[..96].iter().all(|&v| (v - 51.0 / 255.0).abs() < 1e-15));
        assert!(e.values()[96..].iter().all(|&v| v == 0.0));
        assert_eq!(e, embed_volume(&const_volume([51; 6], 13, 9)));
    }

    #[test]
    fn motion_terms() {
        let e = embed_volume(&const_volume([0, 255, 255, 0, 51, 51], 8, 8));
        assert_eq!(&e.values()[96..], &[1.0, 0.0, 1.0, 0.2, 0.0]);
    }

    #[test]
    fn pooling_cells() {
        let f = Frame::from_fn(8, 4, |x, _| [if x < 2 { 255 } else { 0 }]).unwrap();
        let vol = OctVolume::new(vec![f; 6]).unwrap();
        let e = embed_volume(&vol);
        for gy in 0..4 {
            assert_eq!(e.values()[gy * 4], 1.0);
            assert_eq!(e.values()[gy * 4 + 1], 0.0);
        }
        // tiny frames still produce 101 finite values
        let tiny = const_volume([9; 6], 1, 2);
        assert!(embed_volume(&tiny).values().iter().all(|v| v.is_finite()));
    }

    fn write(dir: &Path, body: &str) -> std::path::PathBuf {
        let p = dir.join("emb.csv");
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn external_csv() {
        let d = tempfile::tempdir().unwrap();
        let p = write(d.path(), "sample_id,v0,v1,v2,v3\na,1,2,3,4\nb,0,0,0,0\nc,1e-3,-2,0.5,7\n");
        let m = load_external_embeddings(&p).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m["c"].values(), &[1e-3, -2.0, 0.5, 7.0]);

        let p = write(d.path(), "sample_id,v0,v1,v2,v3\na,1,2,3,4\nb,0,0,0,0,5\n");
        assert!(matches!(load_external_embeddings(&p), Err(Error::InconsistentDim { expected: 4, got: 5, .. })));
        let p = write(d.path(), "sample_id,v0\na,1\na,2\n");
        assert!(matches!(load_external_embeddings(&p), Err(Error::DuplicateSampleId(_))));
        let p = write(d.path(), "sample_id,v0\na,abc\n");
        assert!(matches!(load_external_embeddings(&p), Err(Error::Parse(_))));
    }

    #[test]
    fn write_then_read() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("e.csv");
        let e = embed_volume(&const_volume([1, 2, 3, 4, 5, 6], 8, 8));
        write_embeddings(&p, [("s1", &e), ("s2", &e)]).unwrap();
        let m = load_external_embeddings(&p).unwrap();
        assert_eq!(m["s2"], e);
        let ext = ExternalEmbedder::new(m.into_iter().collect());
        let vol = const_volume([0; 6], 8, 8);
        assert_eq!(ext.embed("s1", &vol).unwrap(), e);
        assert!(matches!(ext.embed("zz", &vol), Err(Error::MissingEmbedding(_))));
    }
}
