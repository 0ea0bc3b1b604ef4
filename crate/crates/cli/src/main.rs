use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::builder::TypedValueParser;
use clap::{Args, Parser, Subcommand, ValueEnum};
use qdgm::evaluate::{self, TestSource};
use qdgm::predict::Predictor;
use qdgm::run::{init_workers, RunManifest};
use qdgm::training::{self, TrainJob};
use qdgm::{data, figures, ftog};
use qdgm_core::cher::SpectralDensity;
use qdgm_core::dataset::{DatasetConfig, DatasetPreset};
use serde::Serialize;

/// Reconstruct joint quasi-distributions from three marginals.
#[derive(Parser)]
#[command(name = "qdgm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a training/test dataset from a preset.
    GenData(GenDataArgs),
    /// Solve ground-truth CHER marginals for a list of temperatures.
    SolveFtog(SolveArgs),
    /// Train a generator on a dataset.
    Train(TrainArgs),
    /// Predict the joint distribution behind one FToG marginal file.
    Predict(PredictArgs),
    /// Evaluate a checkpoint on a test source.
    Evaluate(EvaluateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    CherSuperohmic,
    CherDrudelorentz,
    Wigner,
}

impl PresetArg {
    fn preset(self) -> DatasetPreset {
        match self {
            Self::CherSuperohmic => DatasetPreset::CherSuperOhmic,
            Self::CherDrudelorentz => DatasetPreset::CherDrudeLorentz,
            Self::Wigner => DatasetPreset::Wigner,
        }
    }
}

#[derive(Args)]
struct GenDataArgs {
    #[arg(long, value_enum)]
    preset: PresetArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; must not exist yet.
    #[arg(long)]
    out: PathBuf,
    /// TOML dataset configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training samples, split in the preset's proportions.
    #[arg(long)]
    train: Option<usize>,
    #[arg(long)]
    test: Option<usize>,
    /// Label side length.
    #[arg(long, alias = "model-size")]
    image_size: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    /// Which bath: a CHER preset.
    #[arg(long, value_enum, default_value = "cher-superohmic")]
    preset: PresetArg,
    /// Comma-separated temperatures; an empty list does nothing.
    #[arg(long, value_delimiter = ',', num_args = 0.., default_values_t = ftog::DEFAULT_TEMPERATURES)]
    temperatures: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
    /// TOML file holding a spectral density, replacing the preset's.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset directory.
    #[arg(long)]
    data: PathBuf,
    /// Checkpoint path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 64, value_parser = clap::builder::PossibleValuesParser::new(["64", "128", "256"]).map(|s| s.parse::<usize>().expect("listed value")))]
    model_size: usize,
    /// TOML file with optional `[model]` and `[train]` tables.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Continue from this checkpoint.
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// FToG marginal file written by `solve-ftog`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, value_enum)]
    source: TestSource,
    /// Dataset directory for the synthetic and Wigner test sources.
    #[arg(long)]
    data: Option<PathBuf>,
    /// FToG marginal files for the `ftog-marginals` source.
    #[arg(long, num_args = 1..)]
    ftog: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Samples that get figures.
    #[arg(long, default_value_t = 4)]
    figures: usize,
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn gen_data(a: GenDataArgs) -> Result<()> {
    let preset = a.preset.preset();
    let mut cfg = match &a.config {
        Some(path) => read_toml::<DatasetConfig>(path)?,
        None => DatasetConfig::full(preset, a.seed),
    };
    cfg.preset = preset;
    cfg.seed = a.seed;
    if a.train.is_some() || a.test.is_some() {
        let train = a.train.unwrap_or(cfg.counts.train());
        let test = a.test.unwrap_or(cfg.counts.test);
        cfg.counts = preset.full_counts().scaled(train, test);
    }
    if let Some(s) = a.image_size {
        cfg.image_size = s;
    }
    let manifest = data::generate(&cfg, &a.out)?;
    println!("{} train / {} test samples in {} (manifest {})", manifest.counts.train(), manifest.counts.test, a.out.display(), manifest.digest()?);
    Ok(())
}

fn solve_ftog(a: SolveArgs) -> Result<()> {
    let sd = match &a.config {
        Some(path) => read_toml::<SpectralDensity>(path)?,
        None => a.preset.preset().spectral_density().context("the wigner preset has no bath; pick a CHER preset")?,
    };
    let paths = ftog::solve(&sd, &a.temperatures, &a.out)?;
    for p in paths {
        println!("{}", p.display());
    }
    Ok(())
}

#[derive(serde::Deserialize, Default)]
struct TrainFile {
    model: Option<qdgm_model::ModelConfig>,
    train: Option<qdgm_model::TrainConfig>,
}

fn train(a: TrainArgs) -> Result<()> {
    let mut job = TrainJob::for_size(a.model_size)?;
    if let Some(path) = &a.config {
        let file: TrainFile = read_toml(path)?;
        job.model = file.model.unwrap_or(job.model);
        job.train = file.train.unwrap_or(job.train);
    }
    if job.model.output_size != a.model_size {
        bail!("--model-size {} disagrees with the configured output size {}", a.model_size, job.model.output_size);
    }
    if let Some(v) = a.seed {
        job.train.seed = v;
    }
    if let Some(v) = a.epochs {
        job.train.epochs = v;
    }
    if let Some(v) = a.learning_rate {
        job.train.learning_rate = v;
    }
    if let Some(v) = a.batch_size {
        job.train.batch_size = v;
    }
    if let Some(v) = a.time_budget {
        job.train.time_budget_secs = Some(v);
    }
    let outcome = training::run(&job, &a.data, &a.out, a.resume.as_deref())?;
    let st = &outcome.checkpoint.state;
    println!("stopped ({:?}) after {} epochs; best epoch {} val {:?}", outcome.stop, st.epoch, st.best_epoch, st.best_val);
    Ok(())
}

#[derive(Serialize)]
struct PredictConfig<'a> {
    checkpoint: &'a Path,
    input: &'a Path,
}

fn predict(a: PredictArgs) -> Result<()> {
    let pred = Predictor::load(&a.checkpoint)?;
    let record = ftog::load(&a.input)?;
    let p = pred.predict(&record.triple()?)?;
    std::fs::create_dir_all(&a.out)?;
    let json = a.out.join("prediction.json");
    let value = serde_json::json!({
        "temperature": record.temperature,
        "negativity_volume": p.report.negativity_volume,
        "relative_l1": p.report.relative_l1(),
        "report": p.report,
        "marginals": qdgm_core::export::triple_records(&p.marginals),
        "joint": p.joint,
    });
    std::fs::write(&json, serde_json::to_string_pretty(&value)?)?;
    let png = a.out.join("prediction.png");
    figures::save(&figures::encoded(&p.image), &png)?;
    let mut run = RunManifest::new("predict", &PredictConfig { checkpoint: &a.checkpoint, input: &a.input })?;
    run.input(&a.checkpoint)?;
    run.input(&a.input)?;
    run.output(&json)?;
    run.output(&png)?;
    run.write(&a.out.join("run.toml"))?;
    println!("negativity volume {:.4e}, relative L1 {:?}", p.report.negativity_volume, p.report.relative_l1());
    Ok(())
}

#[derive(Serialize)]
struct EvaluateConfig<'a> {
    checkpoint: &'a Path,
    source: TestSource,
    data: Option<&'a Path>,
    ftog: &'a [PathBuf],
    figures: usize,
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let pred = Predictor::load(&a.checkpoint)?;
    let mut run = RunManifest::new(
        "evaluate",
        &EvaluateConfig { checkpoint: &a.checkpoint, source: a.source, data: a.data.as_deref(), ftog: &a.ftog, figures: a.figures },
    )?;
    run.input(&a.checkpoint)?;
    match a.source {
        TestSource::FtogMarginals => {
            if a.data.is_some() {
                bail!("--data is not used with the ftog-marginals source; pass --ftog files");
            }
            let report = evaluate::ftog(&pred, &a.ftog, &a.out)?;
            for f in &a.ftog {
                run.input(f)?;
            }
            for (t, v) in &report.negativity_by_temperature {
                println!("T = {t}: negativity volume {v:.4e}");
            }
        }
        source => {
            let data = a.data.as_deref().context("--data is required for dataset test sources")?;
            let report = evaluate::test_split(&pred, source, data, &a.out, a.figures)?;
            run.input(&data.join(qdgm_core::dataset::MANIFEST_FILE))?;
            println!(
                "{} samples: mean L2 {:.4e}, mean relative L1 {:.4e}, {} unreliable",
                report.samples,
                report.mean_l2_image,
                report.mean_relative_l1,
                report.unreliable.len()
            );
        }
    }
    run.output(&a.out.join("report.json"))?;
    run.write(&a.out.join("run.toml"))?;
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    init_workers()?;
    match Cli::parse().command {
        Command::GenData(a) => gen_data(a),
        Command::SolveFtog(a) => solve_ftog(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
    }
}
