use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::CorruptionSpec;
use crate::dataset::Split;
use crate::error::{Error, Result};
use crate::metrics::{SsimParams, PSNR_CAP_DB};
use crate::preprocess::{
    RulerRegion, DEFAULT_BORDER_TAU, DEFAULT_KEEP_H, DEFAULT_KEEP_V, DEFAULT_SEQUENCE_RADIUS,
    DEFAULT_TRUNCATE_HI, DEFAULT_TRUNCATE_LO, SEQUENCE_INPUT_SIZE,
};

/// Which features feed the Fréchet distance.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmbedderConfig {
    #[default]
    Reference,
    /// Precomputed embedding CSVs for the submission and the ground truth.
    External {
        predictions: PathBuf,
        ground_truth: PathBuf,
    },
}

/// Geometry and intensity constants for the preprocessing procedures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub border_tau: u8,
    pub fundus_size: usize,
    /// Bottom-left marker box, used when `ruler_region` is not set.
    pub ruler_width: usize,
    pub ruler_height: usize,
    pub ruler_region: Option<RulerRegion>,
    pub truncate_lo: u8,
    pub truncate_hi: u8,
    pub keep_v: f64,
    pub keep_h: f64,
    pub oriented_width: usize,
    pub oriented_height: usize,
    pub sequence_size: usize,
    pub sequence_radius: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            border_tau: DEFAULT_BORDER_TAU,
            fundus_size: 224,
            ruler_width: 90,
            ruler_height: 40,
            ruler_region: None,
            truncate_lo: DEFAULT_TRUNCATE_LO,
            truncate_hi: DEFAULT_TRUNCATE_HI,
            keep_v: DEFAULT_KEEP_V,
            keep_h: DEFAULT_KEEP_H,
            oriented_width: 768,
            oriented_height: 496,
            sequence_size: SEQUENCE_INPUT_SIZE,
            sequence_radius: DEFAULT_SEQUENCE_RADIUS,
        }
    }
}

impl PreprocessConfig {
    pub fn ruler_for(&self, frame_w: usize, frame_h: usize) -> RulerRegion {
        self.ruler_region
            .unwrap_or_else(|| RulerRegion::bottom_left(self.ruler_width, self.ruler_height, frame_w, frame_h))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub split: Split,
    pub submission_id: Option<String>,
    pub embedder: EmbedderConfig,
    pub ssim: SsimParams,
    pub psnr_cap: f64,
    pub preprocess: PreprocessConfig,
    pub corruptions: Vec<CorruptionSpec>,
    /// Worker threads; `None` uses the ambient rayon pool.
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            split: Split::FinalTest,
            submission_id: None,
            embedder: EmbedderConfig::default(),
            ssim: SsimParams::default(),
            psnr_cap: PSNR_CAP_DB,
            preprocess: PreprocessConfig::default(),
            corruptions: Vec::new(),
            workers: None,
        }
    }
}

impl RunConfig {
    /// Reads TOML, or JSON when the extension is `.json`, and checks that
    /// referenced paths exist.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let cfg: RunConfig = if is_json {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut paths: Vec<&Path> = Vec::new();
        if let Some(d) = &self.dataset {
            paths.push(d);
        }
        if let EmbedderConfig::External {
            predictions,
            ground_truth,
        } = &self.embedder
        {
            paths.push(predictions);
            paths.push(ground_truth);
        }
        if let Some(missing) = paths.iter().find(|p| !p.exists()) {
            return Err(Error::Config(format!("path does not exist: {}", missing.display())));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        let p = &self.ssim;
        if !(p.k1 > 0.0 && p.k2 > 0.0 && p.dynamic_range > 0.0 && p.window > 0 && p.sigma > 0.0) {
            return Err(Error::Config("SSIM constants must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_from_empty_toml() {
        let cfg: RunConfig = toml::from_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.preprocess.truncate_lo, 62);
        assert_eq!(cfg.ssim.window, 11);
    }

    #[test]
    fn toml_and_json_agree() {
        let d = tempfile::tempdir().unwrap();
        let toml_path = d.path().join("c.toml");
        std::fs::write(
            &toml_path,
            r#"
split = "prelim_test"
psnr_cap = 80.0
[preprocess]
border_tau = 12
[[corruptions]]
kind = "gaussian_noise"
steps = 100
seed = 7
[[corruptions]]
kind = "random_crop"
"#,
        )
        .unwrap();
        let json_path = d.path().join("c.json");
        std::fs::write(
            &json_path,
            r#"{"split":"prelim_test","psnr_cap":80.0,"preprocess":{"border_tau":12},
                "corruptions":[{"kind":"gaussian_noise","steps":100,"seed":7},{"kind":"random_crop"}]}"#,
        )
        .unwrap();
        let a = RunConfig::load(&toml_path).unwrap();
        let b = RunConfig::load(&json_path).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.corruptions.len(), 2);
        assert_eq!(a.preprocess.fundus_size, 224);
    }

    #[test]
    fn missing_paths_are_rejected() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("c.toml");
        std::fs::write(
            &p,
            "[embedder]\nkind = \"external\"\npredictions = \"/no/such/a.csv\"\nground_truth = \"/no/such/b.csv\"\n",
        )
        .unwrap();
        assert!(matches!(RunConfig::load(&p), Err(Error::Config(_))));
    }

    #[test]
    fn documented_example_parses() {
        let text = r#"
dataset = "data"
split = "final_test"
workers = 4
psnr_cap = 100.0

[embedder]
kind = "reference"

[[corruptions]]
kind = "gaussian_noise"
steps = 100
seed = 1

[[corruptions]]
kind = "random_crop"
scale_lo = 0.7
scale_hi = 0.9
"#;
        let cfg: RunConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.workers, Some(4));
        assert_eq!(cfg.corruptions.len(), 2);
        assert_eq!(cfg.corruptions[1].scale_hi, 0.9);
        let ext: RunConfig =
            toml::from_str("[embedder]\nkind = \"external\"\npredictions = \"p.csv\"\nground_truth = \"g.csv\"\n").unwrap();
        assert!(matches!(ext.embedder, EmbedderConfig::External { .. }));
    }
}
