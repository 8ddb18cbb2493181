//! Command-line front end. [`run`] parses arguments, executes one command
//! and returns the process exit code.

pub mod config;
pub mod manifest;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

use crate::conv_metrics::{contour_report, write_contour_csv, DdurMode};
use crate::emo_eval::{clustering_ratio, read_embeddings_csv};
use crate::error::{Error, Result};
use crate::features::{describe_features, extract_features, read_feature_csv, write_feature_csv};
use crate::ranker::{build_pairs, load_model, save_model, train_ranker, Polarity};
use crate::signal::load_wav;

pub use config::{Config, ConfigFile};
pub use manifest::{
    make_manifest, parse_manifest, scan_corpus, Emotion, Manifest, ManifestEntry, Split,
};

#[derive(Debug, Parser)]
#[command(
    name = "emointensity",
    version,
    about = "Speech emotion intensity ranking and conversion metrics"
)]
pub struct Cli {
    /// TOML key/value file; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract 384-dimensional utterance features for every manifest entry.
    ExtractFeatures(ExtractArgs),
    /// Learn a relative-attribute ranker for one emotion.
    TrainRanker(TrainArgs),
    /// Score utterances with a trained ranker.
    ScoreIntensity(ScoreArgs),
    /// Clustering ratio of labelled embeddings.
    EvalClustering(ClusteringArgs),
    /// MCD and DDUR over converted/reference pairs.
    EvalConversion(ConversionArgs),
    /// DTW-aligned pitch and energy contours of one pair.
    Contours(ContoursArgs),
    /// Write a manifest for a speaker/emotion/*.wav tree.
    MakeManifest(MakeManifestArgs),
    /// Render the synthetic demo corpus.
    MakeDemoCorpus(DemoArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long, required_unless_present = "describe_features")]
    pub manifest: Option<PathBuf>,
    #[arg(long, required_unless_present = "describe_features")]
    pub out: Option<PathBuf>,
    /// Print the feature index map as JSON.
    #[arg(long)]
    pub describe_features: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub emotion: String,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub n_similar: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Add the nearest preset level (weak/medium/strong).
    #[arg(long)]
    pub with_level: bool,
}

#[derive(Debug, Args)]
pub struct ClusteringArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConversionArgs {
    /// TSV of converted_wav, reference_wav; relative paths resolve against it.
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub ddur_mode: Option<DdurMode>,
    #[arg(long)]
    pub mcep_order: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ContoursArgs {
    #[arg(long)]
    pub converted: PathBuf,
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MakeManifestArgs {
    #[arg(long)]
    pub root: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Base utterances; each gets a neutral and an emotional rendering.
    #[arg(long, default_value_t = 15)]
    pub utterances: usize,
    #[arg(long, default_value = "angry")]
    pub emotion: Emotion,
}

/// Named intensity presets used when labelling scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntensityLevel {
    Weak,
    Medium,
    Strong,
}

impl IntensityLevel {
    pub const ALL: [IntensityLevel; 3] = [
        IntensityLevel::Weak,
        IntensityLevel::Medium,
        IntensityLevel::Strong,
    ];

    pub fn value(self) -> f64 {
        match self {
            IntensityLevel::Weak => 0.1,
            IntensityLevel::Medium => 0.5,
            IntensityLevel::Strong => 0.9,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            IntensityLevel::Weak => "weak",
            IntensityLevel::Medium => "medium",
            IntensityLevel::Strong => "strong",
        }
    }

    /// Preset closest to `score`; ties go to the lower level.
    pub fn nearest(score: f64) -> Self {
        let mut best = IntensityLevel::Weak;
        for level in Self::ALL {
            if (score - level.value()).abs() < (score - best.value()).abs() {
                best = level;
            }
        }
        best
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code: 0 success, 1 validation error, 2 I/O error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<Config> {
    let mut cfg = Config::default();
    if let Some(path) = &cli.config {
        cfg.apply(&ConfigFile::load(path)?);
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    match &cli.command {
        Command::TrainRanker(a) => {
            if let Some(c) = a.c {
                cfg.ranker.c = c;
            }
            if a.n_similar.is_some() {
                cfg.n_similar = a.n_similar;
            }
        }
        Command::EvalConversion(a) => {
            if let Some(mode) = a.ddur_mode {
                cfg.metrics.ddur_mode = mode;
            }
            if let Some(order) = a.mcep_order {
                cfg.metrics.mcep.order = order;
            }
        }
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn execute(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli)?;
    match &cli.command {
        Command::ExtractFeatures(a) => cmd_extract(a, &cfg),
        Command::TrainRanker(a) => cmd_train(a, &cfg),
        Command::ScoreIntensity(a) => cmd_score(a, &cfg),
        Command::EvalClustering(a) => {
            let report = clustering_ratio(&read_embeddings_csv(&a.embeddings)?)?;
            write_json(&cfg.output_path(&a.out)?, &report)
        }
        Command::EvalConversion(a) => cmd_conversion(a, &cfg),
        Command::Contours(a) => {
            let report = contour_report(
                &load_wav(&a.converted)?,
                &load_wav(&a.reference)?,
                &cfg.metrics,
            )?;
            write_contour_csv(&cfg.output_path(&a.out)?, &report.contour_rows)
        }
        Command::MakeManifest(a) => {
            let n = make_manifest(&a.root, &cfg.output_path(&a.out)?)?;
            eprintln!("wrote {n} entries");
            Ok(())
        }
        Command::MakeDemoCorpus(a) => {
            let dir = cfg.output_path(&a.out)?;
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let manifest =
                crate::corpus::write_demo_corpus(&dir, a.utterances, a.emotion.as_str(), cfg.seed)?;
            eprintln!("wrote {}", manifest.display());
            Ok(())
        }
    }
}

fn pool(cfg: &Config) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::InvalidParams(format!("cannot start worker pool: {e}")))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn cmd_extract(a: &ExtractArgs, cfg: &Config) -> Result<()> {
    if a.describe_features {
        let text = serde_json::to_string_pretty(&describe_features())?;
        let mut out = std::io::stdout().lock();
        writeln!(out, "{text}").map_err(|e| Error::io(Path::new("<stdout>"), e))?;
    }
    let (Some(manifest), Some(out)) = (&a.manifest, &a.out) else {
        return Ok(());
    };
    let manifest = parse_manifest(manifest)?;
    let rows = pool(cfg)?.install(|| {
        manifest
            .entries
            .par_iter()
            .map(|e| extract_features(&load_wav(&e.wav_path)?, &e.utt_id, &cfg.features))
            .collect::<Result<Vec<_>>>()
    })?;
    write_feature_csv(&cfg.output_path(out)?, &rows)
}

fn cmd_train(a: &TrainArgs, cfg: &Config) -> Result<()> {
    let emotion: Emotion = a.emotion.parse()?;
    if emotion == Emotion::Neutral {
        return Err(Error::InvalidParams(
            "--emotion must name a non-neutral emotion".into(),
        ));
    }
    let manifest = parse_manifest(&a.manifest)?;
    let features = read_feature_csv(&a.features)?;
    let by_id: std::collections::HashMap<&str, &[f64]> = features
        .iter()
        .map(|f| (f.id.as_str(), f.values()))
        .collect();

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for e in &manifest.entries {
        let polarity = match e.emotion {
            _ if e.split != Split::Train => continue,
            Emotion::Neutral => Polarity::Neutral,
            x if x == emotion => Polarity::Emotional,
            _ => continue,
        };
        let values = by_id.get(e.utt_id.as_str()).ok_or_else(|| {
            Error::InvalidParams(format!("no features for utterance {:?}", e.utt_id))
        })?;
        rows.extend_from_slice(values);
        labels.push(polarity);
    }
    let dim = features.first().map_or(0, |f| f.values().len());
    let matrix = Array2::from_shape_vec((labels.len(), dim), rows)
        .map_err(|e| Error::InvalidParams(e.to_string()))?;
    let pairs = build_pairs(matrix, &labels, cfg.n_similar, cfg.seed)?;
    let model = train_ranker(&pairs, emotion.as_str(), &cfg.ranker)?;
    let report = &model.solver_report;
    eprintln!(
        "trained on {} utterances, {} ordered and {} similar pairs; {} iterations, converged: {}",
        labels.len(),
        pairs.ordered.len(),
        pairs.similar.len(),
        report.iterations,
        report.converged
    );
    save_model(&model, &cfg.output_path(&a.out)?)
}

fn cmd_score(a: &ScoreArgs, cfg: &Config) -> Result<()> {
    let model = load_model(&a.model)?;
    let features = read_feature_csv(&a.features)?;
    let out = cfg.output_path(&a.out)?;
    let mut w = csv::Writer::from_path(&out).map_err(|e| csv_io(&out, e))?;
    let mut header = vec!["utt_id", "intensity"];
    if a.with_level {
        header.push("level");
    }
    w.write_record(&header).map_err(|e| csv_io(&out, e))?;
    for f in &features {
        let s = model.score(f.values())?;
        let mut record = vec![f.id.clone(), s.to_string()];
        if a.with_level {
            record.push(IntensityLevel::nearest(s).as_str().to_string());
        }
        w.write_record(&record).map_err(|e| csv_io(&out, e))?;
    }
    w.flush().map_err(|e| Error::io(&out, e))
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::InvalidParams(format!("{}: {other:?}", path.display())),
    }
}

#[derive(Debug, Serialize)]
struct PairReport {
    converted: String,
    reference: String,
    mcd_db: f64,
    ddur_s: f64,
    n_aligned_frames: usize,
    mean_f0_offset_hz: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ConversionReport {
    n_pairs: usize,
    ddur_mode: DdurMode,
    mcep_order: usize,
    include_c0: bool,
    mean_mcd_db: f64,
    mean_ddur_s: f64,
    pairs: Vec<PairReport>,
}

/// Reads a `converted_wav<TAB>reference_wav` list with an optional header.
pub fn parse_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if n == 0 && fields == ["converted_wav", "reference_wav"] {
            continue;
        }
        match fields.as_slice() {
            [a, b] if !a.is_empty() && !b.is_empty() => pairs.push((a.to_string(), b.to_string())),
            _ => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: n + 1,
                    message: format!("expected 2 tab-separated fields, got {}", fields.len()),
                })
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(pairs)
}

fn cmd_conversion(a: &ConversionArgs, cfg: &Config) -> Result<()> {
    let pairs = parse_pairs(&a.pairs)?;
    let base = a.pairs.parent().unwrap_or_else(|| Path::new("."));
    let reports = pool(cfg)?.install(|| {
        pairs
            .par_iter()
            .map(|(conv, reference)| {
                let r = contour_report(
                    &load_wav(&base.join(conv))?,
                    &load_wav(&base.join(reference))?,
                    &cfg.metrics,
                )?;
                Ok(PairReport {
                    converted: conv.clone(),
                    reference: reference.clone(),
                    mcd_db: r.mcd_db,
                    ddur_s: r.ddur_s,
                    n_aligned_frames: r.n_aligned_frames,
                    mean_f0_offset_hz: r.mean_f0_offset(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let n = reports.len() as f64;
    let report = ConversionReport {
        n_pairs: reports.len(),
        ddur_mode: cfg.metrics.ddur_mode,
        mcep_order: cfg.metrics.mcep.order,
        include_c0: cfg.metrics.include_c0,
        mean_mcd_db: reports.iter().map(|r| r.mcd_db).sum::<f64>() / n,
        mean_ddur_s: reports.iter().map(|r| r.ddur_s).sum::<f64>() / n,
        pairs: reports,
    };
    write_json(&cfg.output_path(&a.out)?, &report)
}
