//! Command-line front end.
//!
//! A run is described by a TOML file (see `docs/config.md`), refined by
//! `--set section.key=value` overrides and the dedicated flags, in that
//! order. Unknown keys are rejected. Exit status is 0 on success, 1 for
//! invalid input or configuration and 2 for failures while running.

pub mod report;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::datasets::{
    load_bit_dataset, load_categorical_csv, load_continuous_binary, load_continuous_csv, rotated_margin_task, split, write_bit_csv,
    BitCsvSchema, ContinuousDataset, LabeledBitDataset, OneHotEncoder, Preset,
};
use crate::error::{Error, Result};
use crate::models::{train_logistic_baseline, train_projection_pipeline, LinearHead, ProjectionConfig};
use crate::parity::{bonferroni_select, enumerate_words, threshold_words, variance_rank, WordLogits, DEFAULT_ENUMERATION_CAP};
use crate::pipelines::{
    robustness_curve, run_swap, train_native_binary, train_spqc, write_atomic, write_curve_csv, AttackConfig, Defense,
    ExperimentResult, NativeBinaryConfig, NativeBinaryModel, RobustnessRun, SeedRun, SpqcConfig, Surrogate, SwapCell, SwapConfig,
};
use crate::DEFAULT_SEEDS;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "PARITY_SHADOW_OUT";

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (result format 1)");

#[derive(Debug, Parser)]
#[command(name = "parity-shadow", version = VERSION, about = "Train parity-feature classifiers and deploy them classically")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set native.lr=0.02`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Comma-separated seed list.
    #[arg(long, global = true, value_delimiter = ',', alias = "seed")]
    pub seeds: Option<Vec<u64>>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for parallel seeds; 0 uses every core.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Generator name or data file.
    #[arg(long, global = true)]
    pub dataset: Option<String>,
    /// Progress messages on stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Write a generated dataset as CSV.
    GenData,
    /// Rank parity words on the training split.
    RankWords,
    /// Native-binary word selection and a deployed parity classifier.
    TrainNative,
    /// The 2x2 basis/moment comparison.
    Swap,
    /// sPQC-Parity on one-hot data.
    Spqc,
    /// Learned projection encoder on continuous data.
    Project,
    /// FGSM curves with and without grid rounding.
    Robustness,
    /// Render stored result files as a table.
    Report {
        #[arg(required = true)]
        results: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    /// 0/1 feature cells.
    #[default]
    Bits,
    /// Arbitrary cells, one-hot encoded.
    Categorical,
    /// Real-valued CSV.
    Continuous,
    /// Raw `f32` rows described by a sidecar header.
    Embedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    /// `parity5`, `parity5_5`, `synthetic_3xor` or `rotated_margin`.
    pub generator: Option<String>,
    pub path: Option<PathBuf>,
    pub format: DataFormat,
    pub label: String,
    /// Generator seed.
    pub seed: u64,
    /// Rows drawn by `rotated_margin`.
    pub count: usize,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            generator: None,
            path: None,
            format: DataFormat::Bits,
            label: "label".into(),
            seed: 0,
            count: 600,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankMethod {
    #[default]
    Variance,
    Bonferroni,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RankConfig {
    pub method: RankMethod,
    /// Highest word order; `None` enumerates every order.
    pub max_order: Option<usize>,
    /// Lines printed.
    pub top: usize,
    pub alpha: f64,
    pub cap: u64,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig {
            method: RankMethod::Variance,
            max_order: None,
            top: 20,
            alpha: 0.05,
            cap: DEFAULT_ENUMERATION_CAP as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SwapOptions {
    pub d_max_order: usize,
}

impl Default for SwapOptions {
    fn default() -> Self {
        SwapOptions { d_max_order: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurrogateKind {
    #[default]
    SoftParity,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobustnessOptions {
    pub epsilons: Vec<f64>,
    pub defense: Defense,
    pub step: f64,
    pub surrogate: SurrogateKind,
}

impl Default for RobustnessOptions {
    fn default() -> Self {
        let a = AttackConfig::default();
        RobustnessOptions {
            epsilons: a.epsilons,
            defense: a.defense,
            step: a.step,
            surrogate: SurrogateKind::SoftParity,
        }
    }
}

/// Everything a subcommand needs, fully resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
    pub jobs: usize,
    pub verbose: bool,
    /// Held-out fraction for `rank-words` and `project`.
    pub test_fraction: f64,
    pub dataset: DatasetConfig,
    pub rank: RankConfig,
    pub native: NativeBinaryConfig,
    pub swap: SwapOptions,
    pub spqc: SpqcConfig,
    pub projection: ProjectionConfig,
    pub robustness: RobustnessOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seeds: DEFAULT_SEEDS.to_vec(),
            out: None,
            jobs: 0,
            verbose: false,
            test_fraction: 0.3,
            dataset: DatasetConfig::default(),
            rank: RankConfig::default(),
            native: NativeBinaryConfig::default(),
            swap: SwapOptions::default(),
            spqc: SpqcConfig::default(),
            projection: ProjectionConfig::default(),
            robustness: RobustnessOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        let mut s = self.seeds.clone();
        s.sort_unstable();
        s.dedup();
        if s.len() != self.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        match (&self.dataset.generator, &self.dataset.path) {
            (Some(_), Some(_)) => Err(Error::Config("set exactly one of dataset.generator and dataset.path".into())),
            (None, None) => Err(Error::Config("missing dataset source (dataset.generator or dataset.path)".into())),
            _ => Ok(()),
        }
    }

    /// The output directory: config, then the environment, then `results`.
    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("results"))
    }

    pub fn dataset_name(&self) -> String {
        match (&self.dataset.generator, &self.dataset.path) {
            (Some(g), _) => g.clone(),
            (None, Some(p)) => p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "data".into()),
            (None, None) => "data".into(),
        }
    }
}

fn parse_value(text: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {text}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(text.to_string()))
}

fn set_path(root: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed key `{key}`")));
    }
    let mut table = root;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{part}` in `{key}` is not a section")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Reads the config file (if any), applies `key=value` overrides in order
/// and deserializes, rejecting unknown keys.
pub fn parse_config(file: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut root = match file {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            toml::from_str::<toml::Table>(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{o}` is not KEY=VALUE")))?;
        set_path(&mut root, k.trim(), parse_value(v.trim()))?;
    }
    toml::Value::Table(root)
        .try_into::<RunConfig>()
        .map_err(|e| Error::Config(e.to_string().trim().to_string()))
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = parse_config(cli.config.as_deref(), &cli.overrides)?;
    if let Some(s) = &cli.seeds {
        cfg.seeds = s.clone();
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    if cli.verbose {
        cfg.verbose = true;
    }
    if let Some(d) = &cli.dataset {
        if is_generator(d) {
            cfg.dataset.generator = Some(d.clone());
            cfg.dataset.path = None;
        } else {
            cfg.dataset.path = Some(PathBuf::from(d));
            cfg.dataset.generator = None;
        }
    }
    if !matches!(cli.command, Command::Report { .. }) {
        cfg.validate()?;
    }
    Ok(cfg)
}

const ROTATED: &str = "rotated_margin";

fn is_generator(name: &str) -> bool {
    name == ROTATED || name.parse::<Preset>().is_ok()
}

enum Data {
    Bits(LabeledBitDataset),
    Continuous(ContinuousDataset),
}

fn load(cfg: &RunConfig) -> Result<Data> {
    let d = &cfg.dataset;
    if let Some(g) = &d.generator {
        if g == ROTATED {
            return Ok(Data::Continuous(rotated_margin_task(d.count, d.seed)?));
        }
        return Ok(Data::Bits(g.parse::<Preset>()?.generate(d.seed)?));
    }
    let path = d.path.as_deref().expect("validated dataset source");
    if !path.is_file() {
        return Err(Error::Invalid(format!("dataset file {} not found", path.display())));
    }
    Ok(match d.format {
        DataFormat::Bits => Data::Bits(load_bit_dataset(path, &BitCsvSchema::new(d.label.clone()))?),
        DataFormat::Categorical => {
            let table = load_categorical_csv(path, &d.label)?;
            Data::Bits(OneHotEncoder::fit(&table)?.transform(&table)?)
        }
        DataFormat::Continuous => Data::Continuous(load_continuous_csv(path, &d.label)?),
        DataFormat::Embedding => Data::Continuous(load_continuous_binary(path)?),
    })
}

fn bits(cfg: &RunConfig) -> Result<LabeledBitDataset> {
    match load(cfg)? {
        Data::Bits(b) => Ok(b),
        Data::Continuous(_) => Err(Error::Invalid(format!("`{}` is continuous; this command needs bit data", cfg.dataset_name()))),
    }
}

fn continuous(cfg: &RunConfig) -> Result<ContinuousDataset> {
    match load(cfg)? {
        Data::Continuous(c) => Ok(c),
        Data::Bits(b) => ContinuousDataset::new(b.n(), b.to_f64_rows(), b.labels().to_vec(), b.classes()),
    }
}

fn progress(cfg: &RunConfig, msg: impl AsRef<str>) {
    if cfg.verbose {
        eprintln!("{}", msg.as_ref());
    }
}

/// Runs `f` for every seed on a pool of `cfg.jobs` threads, keeping seed
/// order.
fn per_seed<T: Send>(cfg: &RunConfig, f: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    pool.install(|| cfg.seeds.par_iter().map(|&s| f(s)).collect())
}

fn seed_run(seed: u64, accuracy: f64, words: Vec<String>, head: Option<&LinearHead>, warnings: Vec<String>) -> SeedRun {
    SeedRun {
        seed,
        accuracy,
        words,
        head_weights: head.map(|h| h.weights.clone()).unwrap_or_default(),
        head_bias: head.map(|h| h.bias.clone()).unwrap_or_default(),
        warnings,
    }
}

fn finish(cfg: &RunConfig, command: &str, mut result: ExperimentResult, notes: &[&str]) -> Result<String> {
    result.notes.extend(notes.iter().map(|s| s.to_string()));
    let path = cfg.out_dir().join(format!("{command}-{}.json", cfg.dataset_name()));
    write_atomic(&path, result.to_json()?.as_bytes())?;
    progress(cfg, format!("wrote {}", path.display()));
    Ok(report::render(&report::rows_of(&result)))
}

fn config_echo(cfg: &RunConfig) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(cfg)?)
}

fn gen_data(cfg: &RunConfig) -> Result<String> {
    let path = cfg.out_dir().join(format!("{}.csv", cfg.dataset_name()));
    let mut buf = Vec::new();
    match load(cfg)? {
        Data::Bits(b) => write_bit_csv(&b, &mut buf)?,
        Data::Continuous(c) => {
            let mut w = csv::Writer::from_writer(&mut buf);
            let mut header: Vec<String> = (0..c.d()).map(|j| format!("x{j}")).collect();
            header.push("label".into());
            w.write_record(&header).map_err(csv_err)?;
            for (x, y) in c.samples().iter().zip(c.labels()) {
                let mut rec: Vec<String> = x.iter().map(|v| v.to_string()).collect();
                rec.push(y.to_string());
                w.write_record(&rec).map_err(csv_err)?;
            }
            w.flush()?;
        }
    }
    write_atomic(&path, &buf)?;
    Ok(format!("{}\n", path.display()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn rank_words(cfg: &RunConfig) -> Result<String> {
    let data = bits(cfg)?;
    let (train, _) = split(&data, cfg.test_fraction, cfg.seeds[0], true)?;
    let max_order = cfg.rank.max_order.unwrap_or(data.n());
    let lines: Vec<(String, String)> = match cfg.rank.method {
        RankMethod::Variance => {
            let words = enumerate_words(data.n(), max_order, cfg.rank.cap.into())?;
            variance_rank(&train, &words)?
                .into_iter()
                .map(|s| (s.word.to_string(), format!("{:.3}", s.score)))
                .collect()
        }
        RankMethod::Bonferroni => bonferroni_select(&train, max_order, cfg.rank.alpha, cfg.rank.cap.into())?
            .into_iter()
            .map(|(w, z)| (w.to_string(), format!("{z:.3}")))
            .collect(),
    };
    let mut full = String::from("word,score\n");
    for (w, s) in &lines {
        full.push_str(&format!("{w},{s}\n"));
    }
    let path = cfg.out_dir().join(format!("rank-words-{}.csv", cfg.dataset_name()));
    write_atomic(&path, full.as_bytes())?;
    progress(cfg, format!("wrote {}", path.display()));
    Ok(lines.iter().take(cfg.rank.top).map(|(w, s)| format!("{w} {s}\n")).collect())
}

fn native_seed(cfg: &RunConfig, data: &LabeledBitDataset, seed: u64) -> Result<(NativeBinaryModel, LabeledBitDataset, f64)> {
    let (train, test) = split(data, cfg.native.test_fraction, seed, true)?;
    let model = train_native_binary(&train, &cfg.native, seed)?;
    let acc = model.classifier(data.n())?.accuracy(test.samples(), test.labels())?;
    progress(cfg, format!("seed {seed}: {acc:.1}% with {} words", model.words.len()));
    Ok((model, test, acc))
}

fn train_native(cfg: &RunConfig) -> Result<String> {
    let data = bits(cfg)?;
    let outcomes = per_seed(cfg, |s| native_seed(cfg, &data, s))?;
    let mut runs = Vec::new();
    for (&seed, (model, _, acc)) in cfg.seeds.iter().zip(&outcomes) {
        let clf = model.classifier(data.n())?;
        let mut buf = Vec::new();
        clf.write(&mut buf)?;
        write_atomic(&cfg.out_dir().join(format!("train-native-{}-s{seed}.clf", cfg.dataset_name())), &buf)?;
        let words = model.words.iter().map(|w| w.to_string()).collect();
        runs.push(seed_run(seed, *acc, words, Some(&model.head), model.warnings.clone()));
    }
    let result = ExperimentResult::new("train-native", &cfg.dataset_name(), config_echo(cfg)?, runs);
    finish(cfg, "train-native", result, &["accuracy is the deployed classifier on the held-out split"])
}

fn swap(cfg: &RunConfig) -> Result<String> {
    let data = bits(cfg)?;
    let swap_cfg = SwapConfig {
        native: cfg.native.clone(),
        d_max_order: cfg.swap.d_max_order,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    let report = pool.install(|| run_swap(&data, &swap_cfg, &cfg.seeds))?;
    let qd = SwapCell::ALL.iter().position(|c| c.label() == "Q+D").expect("Q+D cell");
    let runs = report
        .seeds
        .iter()
        .map(|s| seed_run(s.seed, s.accuracies[qd], s.q_words.iter().map(|w| w.to_string()).collect(), None, vec![]))
        .collect();
    let mut result = ExperimentResult::new("swap", &cfg.dataset_name(), config_echo(cfg)?, runs);
    let cells: Vec<serde_json::Value> = SwapCell::ALL
        .iter()
        .enumerate()
        .map(|(i, c)| {
            serde_json::json!({
                "cell": c.label(),
                "accuracies": report.seeds.iter().map(|s| s.accuracies[i]).collect::<Vec<_>>(),
                "mean": report.means[i],
                "std": report.stds[i],
            })
        })
        .collect();
    result.extra.insert("cells".into(), cells.into());
    let d_words: Vec<Vec<String>> = report.seeds.iter().map(|s| s.d_words.iter().map(|w| w.to_string()).collect()).collect();
    result.extra.insert("d_words".into(), serde_json::to_value(d_words)?);
    finish(
        cfg,
        "swap",
        result,
        &[
            "per-seed accuracy is the Q+D cell",
            "Q moments: each sample as a basis state, then the trained circuit, then Z-string expectations",
        ],
    )
}

fn spqc(cfg: &RunConfig) -> Result<String> {
    let data = bits(cfg)?;
    let runs = per_seed(cfg, |seed| {
        let (train, test) = split(&data, cfg.spqc.test_fraction, seed, true)?;
        let model = train_spqc(&train, &cfg.spqc, seed)?;
        let acc = model.accuracy(&test)?;
        progress(cfg, format!("seed {seed}: {acc:.1}%"));
        let mut warnings = Vec::new();
        if model.skipped > 0 {
            warnings.push(format!("{} training rows could not be amplitude-encoded", model.skipped));
        }
        let words = model.words.iter().map(|w| w.to_string()).collect();
        Ok(seed_run(seed, acc, words, Some(&model.head), warnings))
    })?;
    let mut notes = vec!["rows that cannot be encoded are predicted from the head bias"];
    if data.n() > 1 << cfg.spqc.n_qubits {
        notes.push("inputs reduced by PCA before amplitude encoding");
    }
    let result = ExperimentResult::new("spqc", &cfg.dataset_name(), config_echo(cfg)?, runs);
    finish(cfg, "spqc", result, &notes)
}

fn project(cfg: &RunConfig) -> Result<String> {
    let data = continuous(cfg)?;
    let runs = per_seed(cfg, |seed| {
        let (train, test) = split(&data, cfg.test_fraction, seed, true)?;
        let model = train_projection_pipeline(&train, &cfg.projection, seed)?;
        let acc = model.accuracy(&test)?;
        progress(cfg, format!("seed {seed}: {acc:.1}%"));
        let words = model.words.iter().map(|w| w.to_string()).collect();
        Ok(seed_run(seed, acc, words, Some(&model.head), vec![]))
    })?;
    let result = ExperimentResult::new("project", &cfg.dataset_name(), config_echo(cfg)?, runs);
    finish(cfg, "project", result, &[])
}

/// Trained logits of the first pool row that thresholds to each selected
/// word.
fn selected_logits(model: &NativeBinaryModel) -> Result<WordLogits> {
    let pool = threshold_words(&model.logits);
    let rows = model
        .words
        .iter()
        .map(|w| {
            let i = pool.iter().position(|p| p == w).expect("selected words come from the pool");
            model.logits.rows()[i].clone()
        })
        .collect();
    WordLogits::new(rows, 1.0)
}

fn robustness(cfg: &RunConfig) -> Result<String> {
    let data = bits(cfg)?;
    let atk = AttackConfig {
        epsilons: cfg.robustness.epsilons.clone(),
        defense: cfg.robustness.defense,
        step: cfg.robustness.step,
    };
    atk.validate()?;
    let outcomes = per_seed(cfg, |s| native_seed(cfg, &data, s))?;
    let mut runs = Vec::new();
    let mut seed_runs = Vec::new();
    for (&seed, (model, test, acc)) in cfg.seeds.iter().zip(outcomes) {
        let surrogate = match cfg.robustness.surrogate {
            SurrogateKind::SoftParity => Surrogate::SoftParity {
                logits: selected_logits(&model)?,
                head: model.head.clone(),
            },
            SurrogateKind::Linear => {
                let (train, _) = split(&data, cfg.native.test_fraction, seed, true)?;
                let h = &cfg.native.head;
                let head = train_logistic_baseline(
                    &train.to_f64_rows(),
                    train.labels(),
                    train.classes(),
                    &crate::losses::OptimizerConfig::with_lr(h.lr, h.epochs),
                    h.epochs,
                    h.l2,
                )?;
                Surrogate::Linear { head }
            }
        };
        let words = model.words.iter().map(|w| w.to_string()).collect();
        seed_runs.push(seed_run(seed, acc, words, Some(&model.head), model.warnings.clone()));
        runs.push(RobustnessRun {
            classifier: model.classifier(data.n())?,
            surrogate,
            test,
        });
    }
    let curve = robustness_curve(&runs, &atk)?;
    let mut buf = Vec::new();
    write_curve_csv(&curve, &mut buf)?;
    write_atomic(&cfg.out_dir().join(format!("robustness-{}.csv", cfg.dataset_name())), &buf)?;
    let mut result = ExperimentResult::new("robustness", &cfg.dataset_name(), config_echo(cfg)?, seed_runs);
    result.extra.insert("curve".into(), serde_json::to_value(&curve)?);
    let mut text = finish(cfg, "robustness", result, &["per-seed accuracy is clean test accuracy"])?;
    text.push('\n');
    text.push_str(&String::from_utf8_lossy(&buf));
    Ok(text)
}

fn report_cmd(paths: &[PathBuf]) -> Result<String> {
    let mut rows = Vec::new();
    for p in paths {
        let r = ExperimentResult::read(p).map_err(|e| match e {
            Error::Json(j) => Error::Schema(format!("{}: {j}", p.display())),
            other => other,
        })?;
        rows.extend(report::rows_of(&r));
    }
    Ok(report::render(&rows))
}

fn dispatch(cli: &Cli) -> Result<String> {
    if let Command::Report { results } = &cli.command {
        return report_cmd(results);
    }
    let cfg = resolve(cli)?;
    match &cli.command {
        Command::GenData => gen_data(&cfg),
        Command::RankWords => rank_words(&cfg),
        Command::TrainNative => train_native(&cfg),
        Command::Swap => swap(&cfg),
        Command::Spqc => spqc(&cfg),
        Command::Project => project(&cfg),
        Command::Robustness => robustness(&cfg),
        Command::Report { .. } => unreachable!(),
    }
}

/// Parses `args`, runs the command, prints its output and returns the exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}
