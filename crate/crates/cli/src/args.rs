use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use salmon_core::analysis::RingRadius;
use salmon_core::data::Modality;
use salmon_core::gtgen::{DensityNormalization, SigmaChoice};
use salmon_core::metrics::{Scope, ThresholdMode};

#[derive(Debug, Parser)]
#[command(name = "salmon-kit", version, about = "Multi-level salient-object ground truth and evaluation")]
pub struct Cli {
    /// Worker threads (1 runs everything sequentially).
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    /// Print notes and warnings to standard error.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with simulated subjects.
    Synth(SynthArgs),
    /// Build per-object saliencies and multi-level ground-truth maps.
    GtBuild(GtBuildArgs),
    /// Score saliency maps against ground truth.
    Evaluate(EvaluateArgs),
    /// Per-object color, geometry and contrast statistics.
    Characterize(CharacterizeArgs),
    /// Plot-ready CSV (and optional SVG) from metric and characterization reports.
    Report(ReportArgs),
}

/// `et`, `pc`, `rd` or `all`, comma separated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Modalities(pub Vec<Modality>);

impl std::str::FromStr for Modalities {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = Vec::new();
        for part in s.split(',') {
            if part == "all" {
                out.extend(Modality::ALL);
                continue;
            }
            out.push(Modality::from_tag(part).ok_or_else(|| format!("unknown modality `{part}` (et|pc|rd|all)"))?);
        }
        out.sort();
        out.dedup();
        Ok(Modalities(out))
    }
}

/// `a..b` inclusive, or a single count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountRange(pub usize, pub usize);

impl std::str::FromStr for CountRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("bad count `{v}`"));
        let (a, b) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
            None => {
                let n = parse(s)?;
                (n, n)
            }
        };
        if a == 0 || a > b {
            return Err(format!("range `{s}` must satisfy 1 <= a <= b"));
        }
        Ok(CountRange(a, b))
    }
}

/// `et=N,pc=N,rd=N`; omitted modalities get 0 subjects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubjectSpec {
    pub et: usize,
    pub pc: usize,
    pub rd: usize,
}

impl std::str::FromStr for SubjectSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = SubjectSpec { et: 0, pc: 0, rd: 0 };
        for part in s.split(',') {
            let (k, v) = part.split_once('=').ok_or_else(|| format!("expected key=count, got `{part}`"))?;
            let n: usize = v.parse().map_err(|_| format!("bad subject count `{v}`"))?;
            match Modality::from_tag(k) {
                Some(Modality::EyeTracking) => out.et = n,
                Some(Modality::PointClick) => out.pc = n,
                Some(Modality::RectDraw) => out.rd = n,
                None => return Err(format!("unknown modality `{k}`")),
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub scenes: usize,
    #[arg(long, default_value = "2..5", value_name = "A..B")]
    pub objects_per_scene: CountRange,
    #[arg(long, default_value = "et=20,pc=30,rd=35")]
    pub subjects: SubjectSpec,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 192)]
    pub height: usize,
    /// Smallest object side as a fraction of the shorter image side.
    #[arg(long, default_value_t = 0.1)]
    pub size_min: f64,
    #[arg(long, default_value_t = 0.3)]
    pub size_max: f64,
    /// Minimum difference between true saliencies within a scene.
    #[arg(long, default_value_t = 0.0)]
    pub min_saliency_gap: f64,
    #[arg(long, default_value_t = 0.0)]
    pub click_scatter: f64,
    #[arg(long, default_value_t = 0.0)]
    pub rect_jitter: f64,
    #[arg(long, default_value_t = 0.0)]
    pub fixation_scatter: f64,
    #[arg(long, default_value_t = 3)]
    pub fixation_count: u32,
    /// Stand-in detectors whose maps are written under `<out>/maps/<name>/`.
    #[arg(long, value_delimiter = ',', default_value = "truth,noisy,center")]
    pub detectors: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum NormArg {
    Max,
    Minmax,
}

impl From<NormArg> for DensityNormalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Max => DensityNormalization::Max,
            NormArg::Minmax => DensityNormalization::MinMax,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GtBuildArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value = "all")]
    pub modality: Modalities,
    /// Smoothing radius in pixels, or `auto` from the viewing geometry.
    #[arg(long, default_value = "auto")]
    #[serde(serialize_with = "as_display")]
    pub sigma: SigmaChoice,
    #[arg(long, value_enum, default_value_t = NormArg::Max)]
    pub normalization: NormArg,
    #[arg(long, default_value_t = 0.3)]
    pub iou_threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub gt_dir: PathBuf,
    #[arg(long)]
    pub maps_dir: PathBuf,
    #[arg(long, default_value = "all")]
    pub modality: Modalities,
    #[arg(long, default_value = "dataset")]
    #[serde(serialize_with = "as_display")]
    pub scope: Scope,
    #[arg(long, default_value = "uniform256", conflicts_with = "exact_thresholds")]
    #[serde(serialize_with = "as_display")]
    pub thresholds: ThresholdMode,
    /// Same as `--thresholds exact`.
    #[arg(long)]
    pub exact_thresholds: bool,
    #[arg(long, default_value_t = 1e-9)]
    pub tie_eps: f64,
    /// Combine over the modalities present when one is missing.
    #[arg(long)]
    pub allow_partial: bool,
    /// Detector label; defaults to the maps directory name.
    #[arg(long)]
    pub detector: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-object rows as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CharacterizeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Ground-truth directory, enabling gamma fits between modalities.
    #[arg(long)]
    pub gt_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    pub bins: usize,
    #[arg(long, default_value = "auto")]
    #[serde(serialize_with = "as_display")]
    pub ring: RingRadius,
    /// Keep other objects' pixels in the global background.
    #[arg(long)]
    pub include_others_global: bool,
    /// Bins of the summary distributions.
    #[arg(long, default_value_t = 20)]
    pub hist_bins: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for per-object and per-distribution CSV files.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Metric reports, one per detector.
    #[arg(long, num_args = 0.., value_name = "REPORT")]
    pub metrics: Vec<PathBuf>,
    #[arg(long)]
    pub characterization: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also render simple SVG charts.
    #[arg(long)]
    pub svg: bool,
}

fn as_display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}
