use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Serialises a float rounded to six decimals.
fn round6<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_to_6(*v))
}

pub fn round_to_6(v: f64) -> f64 {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub sample_id: String,
    #[serde(serialize_with = "round6")]
    pub psnr: f64,
    #[serde(serialize_with = "round6")]
    pub ssim: f64,
}

/// Scores of one submission: set-level FVD plus the sample-averaged pixel
/// metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub submission_id: String,
    #[serde(serialize_with = "round6")]
    pub fvd: f64,
    #[serde(serialize_with = "round6")]
    pub ssim_mean: f64,
    #[serde(serialize_with = "round6")]
    pub psnr_mean: f64,
    pub per_sample: Vec<SampleScore>,
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    /// Flat CSV: one summary row (`sample_id` = `ALL`, carrying FVD and the
    /// means) followed by one row per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("submission_id,sample_id,fvd,psnr,ssim\n");
        out.push_str(&format!(
            "{},ALL,{:.6},{:.6},{:.6}\n",
            self.submission_id, self.fvd, self.psnr_mean, self.ssim_mean
        ));
        for s in &self.per_sample {
            out.push_str(&format!(
                "{},{},,{:.6},{:.6}\n",
                self.submission_id, s.sample_id, s.psnr, s.ssim
            ));
        }
        out
    }

    /// Writes JSON, or CSV when the extension is `.csv`.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let body = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            self.to_csv()
        } else {
            self.to_json() + "\n"
        };
        std::fs::write(path, body).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> MetricReport {
        MetricReport {
            submission_id: "team".into(),
            fvd: 624.589_812_34,
            ssim_mean: 0.104_8,
            psnr_mean: 13.650_2,
            per_sample: vec![SampleScore {
                sample_id: "s1".into(),
                psnr: 100.0,
                ssim: 1.0,
            }],
        }
    }

    #[test]
    fn json_schema_and_rounding() {
        let v: serde_json::Value = serde_json::from_str(&report().to_json()).unwrap();
        assert_eq!(v["submission_id"], "team");
        assert_eq!(v["fvd"].as_f64().unwrap(), 624.589812);
        assert_eq!(v["per_sample"][0]["sample_id"], "s1");
        assert_eq!(v["per_sample"][0]["psnr"].as_f64().unwrap(), 100.0);
        let back = MetricReport::from_json(&report().to_json()).unwrap();
        assert_eq!(back.fvd, 624.589812);
    }

    #[test]
    fn csv_layout() {
        let csv = report().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "submission_id,sample_id,fvd,psnr,ssim");
        assert_eq!(lines[1], "team,ALL,624.589812,13.650200,0.104800");
        assert_eq!(lines[2], "team,s1,,100.000000,1.000000");
    }

    #[test]
    fn negative_zero_is_normalised() {
        assert_eq!(round_to_6(-1e-12).to_bits(), 0.0f64.to_bits());
    }
}
