//! Command-line front end: argument types, dispatch and report writing.

mod commands;
pub mod manifest;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use metatune::{
    load_csv, Dataset, ForestConfig, ImpureLeafPolicy, IngestConfig, MetaTechnique, TechniqueId,
    TechniqueParams, TuningSettings, DEFAULT_MTRY, DEFAULT_TREES,
};

#[derive(Debug, Parser)]
#[command(name = "metatune", version, about = "Random-forest prediction intervals and MTRY tuning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coverage of every grid configuration, with Cochran's Q per nc.
    Coverage(CommonArgs),
    /// Mean width of every grid configuration, with Friedman's test per nc.
    Width(CommonArgs),
    /// Tune MTRY with each validation technique and tag the benefit.
    Tune(TuneArgs),
    /// Meta-validation with the three meta holdouts.
    Meta(TuneArgs),
    /// Per-row prediction intervals of one configuration on the test third.
    Intervals(IntervalArgs),
    /// Precision, recall, F1 and EMMRE of each technique's predictions.
    TechniqueAccuracy(TuneArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// CSV dataset with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// TOML ingestion config (response, order_by, categorical, ignore).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Response column, when no config file is given.
    #[arg(long, conflicts_with = "config")]
    pub response: Option<String>,
    /// Chronological ordering column, when no config file is given.
    #[arg(long, conflicts_with = "config")]
    pub order_by: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_TREES)]
    pub trees: usize,
    /// Comma-separated nominal confidences.
    #[arg(long, value_delimiter = ',', default_values_t = [0.90, 0.95, 0.99])]
    pub nc: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_MTRY)]
    pub mtry_default: f64,
    #[arg(long, default_value_t = ImpureLeafPolicy::Error)]
    pub impure_leaf: ImpureLeafPolicy,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads; outputs do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated techniques (default: all eight).
    #[arg(long, value_delimiter = ',')]
    pub techniques: Vec<TechniqueId>,
}

#[derive(Debug, Clone, Args)]
pub struct IntervalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Configuration to fit (default: --mtry-default).
    #[arg(long)]
    pub mtry: Option<f64>,
}

/// What a command wrote.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Points or cells scored from impure leaves under the error policy.
    pub warnings: usize,
}

pub fn run(cli: Cli) -> Result<Outcome> {
    let common = match &cli.command {
        Command::Coverage(c) | Command::Width(c) => c,
        Command::Tune(t) | Command::Meta(t) | Command::TechniqueAccuracy(t) => &t.common,
        Command::Intervals(i) => &i.common,
    };
    if let Some(n) = common.threads {
        // Ignore the error if a pool already exists (library callers, tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Coverage(c) => commands::coverage(&RunContext::load(&c, "coverage", json!({}))?),
        Command::Width(c) => commands::width(&RunContext::load(&c, "width", json!({}))?),
        Command::Tune(t) => {
            let techs = techniques(&t);
            let ctx = RunContext::load(&t.common, "tune", technique_params(&techs))?;
            commands::tune(&ctx, &techs)
        }
        Command::Meta(t) => {
            let techs = techniques(&t);
            let mut extra = technique_params(&techs);
            extra["meta"] = json!(MetaTechnique::ALL.iter().map(|m| m.label()).collect::<Vec<_>>());
            let ctx = RunContext::load(&t.common, "meta", extra)?;
            commands::meta(&ctx, &techs)
        }
        Command::Intervals(i) => {
            let mtry = i.mtry.unwrap_or(i.common.mtry_default);
            let ctx = RunContext::load(&i.common, "intervals", json!({ "mtry": mtry }))?;
            commands::intervals(&ctx, mtry)
        }
        Command::TechniqueAccuracy(t) => {
            let techs = techniques(&t);
            let ctx = RunContext::load(&t.common, "technique-accuracy", technique_params(&techs))?;
            commands::technique_accuracy(&ctx, &techs)
        }
    }
}

fn techniques(t: &TuneArgs) -> Vec<TechniqueId> {
    if t.techniques.is_empty() {
        TechniqueId::ALL.to_vec()
    } else {
        t.techniques.clone()
    }
}

fn technique_params(techs: &[TechniqueId]) -> Value {
    let p = TechniqueParams::default();
    json!({
        "techniques": techs.iter().map(|t| t.label()).collect::<Vec<_>>(),
        "technique_params": {
            "bootstrap_repeats": p.bootstrap_repeats,
            "kfold_k": p.kfold_k,
            "kfold_repeats": p.kfold_repeats,
            "tscv_initial_fraction": p.tscv_initial_fraction,
            "tscv_splits": p.tscv_splits,
            "tshvcv": "v=ceil(0.05m), h=v, s=2v+1",
        },
    })
}

/// Loaded data plus everything a command needs to run and report.
pub(crate) struct RunContext {
    pub data: Dataset,
    pub ncs: Vec<f64>,
    pub settings: TuningSettings,
    pub project: String,
    pub out: PathBuf,
    pub manifest: manifest::RunManifest,
}

impl RunContext {
    fn load(args: &CommonArgs, command: &'static str, extra: Value) -> Result<Self> {
        let ingest = match (&args.config, &args.response) {
            (Some(path), _) => IngestConfig::from_path(path)?,
            (None, Some(resp)) => IngestConfig {
                order_by: args.order_by.clone(),
                ..IngestConfig::new(resp.clone())
            },
            (None, None) => bail!("either --config or --response is required"),
        };
        if args.nc.is_empty() || args.nc.iter().any(|&nc| !(nc > 0.0 && nc < 1.0)) {
            bail!("--nc values must lie strictly between 0 and 1");
        }
        let mut ncs = args.nc.clone();
        ncs.sort_by(f64::total_cmp);
        ncs.dedup();
        let base = ForestConfig {
            n_trees: args.trees,
            seed: args.seed,
            impure_leaf_policy: args.impure_leaf,
            ..ForestConfig::default()
        };
        base.validate()?;
        if !(args.mtry_default > 0.0 && args.mtry_default <= 1.0) {
            bail!("--mtry-default must lie in (0, 1]");
        }
        let data = load_csv(&args.data, &ingest)
            .with_context(|| format!("loading {}", args.data.display()))?;
        let project = ingest.project.clone().unwrap_or_else(|| file_stem(&args.data));

        let mut params = json!({
            "ingest": {
                "response": ingest.response,
                "order_by": ingest.order_by,
                "categorical": ingest.categorical,
                "ignore": ingest.ignore,
                "project": project,
            },
            "seed": args.seed,
            "trees": args.trees,
            "nc": ncs,
            "mtry_default": args.mtry_default,
            "impure_leaf": args.impure_leaf.to_string(),
            "evaluation_split": "66/33 chronological",
        });
        if let (Value::Object(p), Value::Object(e)) = (&mut params, extra) {
            p.extend(e);
        }
        let manifest = manifest::RunManifest::new(command, &args.data, params)?;
        std::fs::create_dir_all(&args.out)
            .with_context(|| format!("creating {}", args.out.display()))?;
        Ok(Self {
            data,
            ncs,
            settings: TuningSettings {
                base,
                default_mtry: args.mtry_default,
                ..TuningSettings::default()
            },
            project,
            out: args.out.clone(),
            manifest,
        })
    }
}

fn file_stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".into())
}
