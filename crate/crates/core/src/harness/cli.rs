//! Command-line front end. Exit codes: 0 success, 1 invalid submission or
//! runtime failure, 2 usage or configuration error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::augment::{collaborative_flip, photometric_augment, sample_photometric};
use crate::baselines::{generate_baseline_submission, CorruptionKind, CorruptionSpec};
use crate::dataset::{parse_manifest, scan_submission, Manifest, Split, MANIFEST_FILE};
use crate::error::{Error, Result};
use crate::imaging::{load_image, resize_bilinear, save_image, Frame, FundusImage, OctVolume};
use crate::metrics::{embed_volume, write_embeddings, Embedding, MetricReport};
use crate::preprocess::{
    crop_black_border, extract_sequences, mask_central_roi, orient_for_direction, remove_ruler,
    truncate_normalize, DirectionModel,
};

use super::{evaluate, leaderboard_csv, rank, with_workers, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "octbench", version, about = "Fundus-to-OCT synthesis evaluation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    PrelimTest,
    FinalTest,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::PrelimTest => Split::PrelimTest,
            SplitArg::FinalTest => Split::FinalTest,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Identity,
    GaussianNoise,
    RandomCrop,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PreprocessOp {
    /// Crop the black border of a fundus image and resize to `fundus_size`.
    BorderCrop,
    /// Inpaint the ruler box of an OCT frame.
    RemoveRuler,
    /// Truncate and normalise an OCT frame (written back as 8-bit PNG).
    Truncate,
    /// Black out everything outside the central fundus band.
    MaskRoi,
    /// Rotate a fundus to a scan direction, mask and resize.
    Orient,
    /// Resize a fundus to 256x256 and write the 6x8x256 sequences as JSON.
    Sequences,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that a submission has six frames for every sample of a split.
    Validate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum, default_value = "final-test")]
        split: SplitArg,
        #[arg(long)]
        submission: PathBuf,
    },
    /// Apply one preprocessing procedure to an image file.
    Preprocess {
        #[arg(long, value_enum)]
        op: PreprocessOp,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Scan direction for `orient`.
        #[arg(long, default_value_t = 0)]
        direction: usize,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Augment one fundus/OCT pair.
    Augment {
        #[arg(long)]
        fundus: PathBuf,
        #[arg(long)]
        oct_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        flip: bool,
        #[arg(long)]
        photometric_seed: Option<u64>,
    },
    /// Write a corrupted baseline submission for a split.
    Corrupt {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum, default_value = "final-test")]
        split: SplitArg,
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[arg(long, default_value_t = 0)]
        steps: usize,
        #[arg(long, default_value_t = 0.7)]
        scale_lo: f64,
        #[arg(long, default_value_t = 0.9)]
        scale_hi: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory; with `--config` and no `--kind`, one
        /// sub-directory per configured corruption.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Write reference embeddings of ground-truth or submitted volumes.
    Embed {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum, default_value = "final-test")]
        split: SplitArg,
        #[arg(long)]
        submission: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a submission: FVD, mean SSIM and mean PSNR.
    Evaluate {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, value_enum)]
        split: Option<SplitArg>,
        #[arg(long)]
        submission: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Submission id in the report; defaults to the directory name.
        #[arg(long)]
        id: Option<String>,
        #[arg(long)]
        jobs: Option<usize>,
        /// `.json` or `.csv`; standard output (JSON) when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank report files by FVD.
    Rank {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `argv` (including the program name) and runs the command.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::IncompleteSubmission(defects) = &e {
                for d in defects {
                    eprintln!("  {d}");
                }
            }
            match e {
                Error::Config(_) => EXIT_USAGE,
                _ => EXIT_INVALID,
            }
        }
    }
}

fn open_manifest(dataset: &Path) -> Result<Manifest> {
    if dataset.is_dir() {
        parse_manifest(dataset.join(MANIFEST_FILE))
    } else {
        parse_manifest(dataset)
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
}

fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, body).map_err(|e| Error::io(p, e)),
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Validate {
            dataset,
            split,
            submission,
        } => {
            let manifest = open_manifest(&dataset)?;
            let split = Split::from(split);
            let set = scan_submission(&submission, &manifest.split_ids(split))?;
            for extra in &set.extra_ids {
                eprintln!("warning: unexpected sample `{extra}` ignored");
            }
            eprintln!("valid: {} volumes for split {split}", set.volumes.len());
            Ok(())
        }
        Command::Preprocess {
            op,
            input,
            out,
            direction,
            config,
        } => {
            let cfg = load_config(config.as_deref())?.preprocess;
            match op {
                PreprocessOp::BorderCrop => {
                    let img: FundusImage = load_image(&input)?;
                    let c = crop_black_border(&img, cfg.border_tau)?;
                    save_image(&resize_bilinear(&c, cfg.fundus_size, cfg.fundus_size)?, &out)
                }
                PreprocessOp::RemoveRuler => {
                    let f: Frame = load_image(&input)?;
                    let region = cfg.ruler_for(f.width(), f.height());
                    save_image(&remove_ruler(&f, region)?, &out)
                }
                PreprocessOp::Truncate => {
                    let f: Frame = load_image(&input)?;
                    let n = truncate_normalize(&f, cfg.truncate_lo, cfg.truncate_hi)?;
                    let data = n.values.iter().map(|v| (v * 255.0).round() as u8).collect();
                    save_image(&Frame::new(n.width, n.height, data)?, &out)
                }
                PreprocessOp::MaskRoi => {
                    let img: FundusImage = load_image(&input)?;
                    save_image(&mask_central_roi(&img, cfg.keep_v, cfg.keep_h)?, &out)
                }
                PreprocessOp::Orient => {
                    let img: FundusImage = load_image(&input)?;
                    let o = orient_for_direction(&img, direction, &DirectionModel::default())?;
                    let m = mask_central_roi(&o, cfg.keep_v, cfg.keep_h)?;
                    save_image(&resize_bilinear(&m, cfg.oriented_width, cfg.oriented_height)?, &out)
                }
                PreprocessOp::Sequences => {
                    let img: FundusImage = load_image(&input)?;
                    let r = resize_bilinear(&img, cfg.sequence_size, cfg.sequence_size)?;
                    let s = extract_sequences(&r, &DirectionModel::default(), cfg.sequence_radius)?;
                    let body = serde_json::json!({ "shape": s.shape(), "values": s.as_slice() });
                    emit(Some(&out), &body.to_string())
                }
            }
        }
        Command::Augment {
            fundus,
            oct_dir,
            out_dir,
            flip,
            photometric_seed,
        } => {
            let mut f: FundusImage = load_image(&fundus)?;
            let mut vol = OctVolume::load_dir(&oct_dir, &oct_dir.display().to_string())?;
            if flip {
                (f, vol) = collaborative_flip(&f, &vol);
            }
            if let Some(seed) = photometric_seed {
                f = photometric_augment(&f, &sample_photometric(seed));
            }
            vol.save_dir(&out_dir)?;
            save_image(&f, out_dir.join("fundus.png"))
        }
        Command::Corrupt {
            dataset,
            split,
            kind,
            steps,
            scale_lo,
            scale_hi,
            seed,
            out,
            config,
            jobs,
        } => {
            let manifest = open_manifest(&dataset)?;
            let split = Split::from(split);
            let cfg = load_config(config.as_deref())?;
            let jobs = jobs.or(cfg.workers);
            let specs: Vec<(PathBuf, CorruptionSpec)> = match kind {
                Some(k) => {
                    let kind = match k {
                        KindArg::Identity => CorruptionKind::Identity,
                        KindArg::GaussianNoise => CorruptionKind::GaussianNoise,
                        KindArg::RandomCrop => CorruptionKind::RandomCrop,
                    };
                    vec![(
                        out.clone(),
                        CorruptionSpec {
                            kind,
                            steps,
                            scale_lo,
                            scale_hi,
                            seed,
                        },
                    )]
                }
                None if !cfg.corruptions.is_empty() => cfg
                    .corruptions
                    .iter()
                    .map(|s| (out.join(s.label()), *s))
                    .collect(),
                None => return Err(Error::Config("give --kind or a config with corruptions".into())),
            };
            for (dir, spec) in specs {
                let set = with_workers(jobs, || generate_baseline_submission(&manifest, split, &spec, &dir))??;
                eprintln!("wrote {} volumes to {}", set.volumes.len(), dir.display());
            }
            Ok(())
        }
        Command::Embed {
            dataset,
            split,
            submission,
            out,
        } => {
            let manifest = open_manifest(&dataset)?;
            let ids = manifest.split_ids(Split::from(split));
            let rows: Vec<(String, Embedding)> = match &submission {
                Some(dir) => {
                    let set = scan_submission(dir, &ids)?;
                    ids.iter()
                        .map(|id| Ok((id.clone(), embed_volume(&set.load(id)?))))
                        .collect::<Result<_>>()?
                }
                None => ids
                    .iter()
                    .map(|id| Ok((id.clone(), embed_volume(&manifest.load_volume(id)?))))
                    .collect::<Result<_>>()?,
            };
            write_embeddings(&out, rows.iter().map(|(id, e)| (id.as_str(), e)))
        }
        Command::Evaluate {
            dataset,
            split,
            submission,
            config,
            id,
            jobs,
            out,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if id.is_some() {
                cfg.submission_id = id;
            }
            if jobs.is_some() {
                cfg.workers = jobs;
            }
            cfg.validate()?;
            let dataset = dataset
                .or_else(|| cfg.dataset.clone())
                .ok_or_else(|| Error::Config("--dataset is required".into()))?;
            let split = split.map(Split::from).unwrap_or(cfg.split);
            let manifest = open_manifest(&dataset)?;
            let report = evaluate(&manifest, split, &submission, &cfg)?;
            match out {
                Some(p) => report.write(&p),
                None => emit(None, &(report.to_json() + "\n")),
            }
        }
        Command::Rank { reports, out } => {
            let reports = reports
                .iter()
                .map(MetricReport::read_json)
                .collect::<Result<Vec<_>>>()?;
            let board = rank(&reports)?;
            emit(out.as_deref(), &leaderboard_csv(&board))
        }
    }
}
