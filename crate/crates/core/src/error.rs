use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A single problem found while scanning a submission directory.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Defect {
    /// No directory at all for an expected sample.
    MissingSample(String),
    /// The sample directory exists but frame `k` is absent.
    MissingFrame(String, usize),
    /// Frame dimensions within one volume disagree.
    DimMismatch(String),
    /// A frame file exists but its header could not be read.
    Unreadable(String, usize),
}

impl std::fmt::Display for Defect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Defect::MissingSample(id) => write!(f, "{id}: missing sample directory"),
            Defect::MissingFrame(id, k) => write!(f, "{id}:frame{k}"),
            Defect::DimMismatch(id) => write!(f, "{id}: frames have mismatched dimensions"),
            Defect::Unreadable(id, k) => write!(f, "{id}:frame{k} unreadable"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("cannot decode {path}: {reason}")]
    Decode { path: PathBuf, reason: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },
    #[error("rectangle ({x0},{y0},{w},{h}) is outside a {width}x{height} image")]
    OutOfBounds {
        x0: usize,
        y0: usize,
        w: usize,
        h: usize,
        width: usize,
        height: usize,
    },
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("an OCT volume needs exactly 6 frames, got {0}")]
    FrameCount(usize),

    #[error("manifest is missing column `{0}`")]
    MissingColumn(String),
    #[error("duplicate sample id `{0}`")]
    DuplicateSampleId(String),
    #[error("patient `{patient}` appears in splits {first} and {second}")]
    SplitLeak {
        patient: String,
        first: String,
        second: String,
    },
    #[error("manifest has no records")]
    EmptyManifest,
    #[error("invalid manifest record: {0}")]
    InvalidRecord(String),
    #[error("unknown sample `{0}`")]
    UnknownSample(String),
    #[error("sample `{0}` is missing frame {1}")]
    MissingFrame(String, usize),
    #[error("incomplete submission ({} defects): {}", .0.len(), join_defects(.0))]
    IncompleteSubmission(Vec<Defect>),

    #[error("no pixel brighter than threshold {0}")]
    NoForeground(u8),
    #[error("ruler region spans the full frame width")]
    RegionSpansWidth,
    #[error("invalid truncation range lo={lo} hi={hi}")]
    InvalidRange { lo: u8, hi: u8 },
    #[error("invalid ROI fraction {0}")]
    InvalidFraction(f64),
    #[error("direction index {0} is not in 0..6")]
    InvalidDirection(usize),
    #[error("expected a {expected_w}x{expected_h} input, got {width}x{height}")]
    WrongInputSize {
        expected_w: usize,
        expected_h: usize,
        width: usize,
        height: usize,
    },

    #[error("frames of {width}x{height} are smaller than the {window}x{window} SSIM window")]
    TooSmall {
        width: usize,
        height: usize,
        window: usize,
    },
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("inconsistent embedding dimension: expected {expected}, got {got} (row {row})")]
    InconsistentDim {
        expected: usize,
        got: usize,
        row: usize,
    },
    #[error("no embedding for sample `{0}`")]
    MissingEmbedding(String),

    #[error("steps {steps} exceeds schedule length {max}")]
    InvalidSteps { steps: usize, max: usize },
    #[error("invalid crop scale range [{lo}, {hi}]")]
    InvalidScale { lo: f64, hi: f64 },

    #[error("duplicate submission id `{0}`")]
    DuplicateSubmissionId(String),
    #[error("nothing to rank")]
    EmptyInput,
    #[error("invalid configuration: {0}")]
    Config(String),
}

fn join_defects(defects: &[Defect]) -> String {
    defects
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path)
        } else {
            Error::Io { path, source }
        }
    }
}
