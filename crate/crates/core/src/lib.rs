//! Evaluation harness for fundus-to-OCT volume synthesis.
//!
//! A volume is six directional B-scans ([`imaging::OctVolume`]) paired with
//! an en-face fundus photograph. The crate covers dataset manifests and
//! submission validation ([`dataset`]), the preprocessing and augmentation
//! procedures used by challenge entries ([`preprocess`], [`augment`]),
//! pixel-level and distribution-level fidelity metrics ([`metrics`]),
//! corruption baselines ([`baselines`]) and FVD-ranked leaderboards
//! ([`harness`]).

pub mod augment;
pub mod baselines;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod imaging;
pub mod metrics;
pub mod preprocess;
pub mod synthetic;

pub use error::{Defect, Error, Result};
pub use imaging::{Frame, FundusImage, OctVolume};
