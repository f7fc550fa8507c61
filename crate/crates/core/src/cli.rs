//! The `comve` command line.
//!
//! Every subcommand reads its inputs from flags, falling back to a flat TOML
//! configuration file given with `--config`. Paths in the configuration are
//! resolved against the file's directory. Exit codes: 0 on success, 1 for
//! invalid input or usage, 2 when an external translator breaks its line
//! protocol.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis;
use crate::augment::{self, TranslatorHandle};
use crate::choice_scoring;
use crate::dataset::{self, Labeled};
use crate::ensemble::{self, Objective, SearchOptions};
use crate::error::{Error, Result};
use crate::metrics::{self, PredictionVector};
use crate::report::{fmt_f64, Format, Table};
use crate::rerank;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_CONTRACT: i32 = 2;

/// Default number of lines per translator batch.
pub const DEFAULT_BATCH_SIZE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    /// Subtask A: which of two statements is against common sense.
    Pairs,
    /// Subtask B: which of three explanations is correct.
    Choices,
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pairs" => Ok(Task::Pairs),
            "choices" => Ok(Task::Choices),
            other => Err(Error::invalid(format!("unknown task {other:?} (allowed: pairs, choices)"))),
        }
    }
}

/// Settings read from a configuration file. Every key is optional; a
/// subcommand fails with the key name when it needs one that is missing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub task: Option<Task>,
    pub pairs_data: Option<PathBuf>,
    pub pairs_answers: Option<PathBuf>,
    pub pairs_preds: Option<PathBuf>,
    pub choices_data: Option<PathBuf>,
    pub choices_answers: Option<PathBuf>,
    pub choices_preds: Option<PathBuf>,
    pub generation_data: Option<PathBuf>,
    pub generation_refs: Option<PathBuf>,
    pub probs_dir: Option<PathBuf>,
    pub objective: Option<Objective>,
    pub workers: Option<usize>,
    pub max_members: Option<usize>,
    pub losses: Option<PathBuf>,
    pub systems: Option<Vec<PathBuf>>,
    pub scores: Option<PathBuf>,
    pub human: Option<PathBuf>,
    pub leaderboard: Option<PathBuf>,
    pub top_ks: Option<Vec<usize>>,
    pub forward: Option<String>,
    pub backward: Option<String>,
    pub batch_size: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub format: Option<Format>,
}

const INPUT_PATH_KEYS: [&str; 14] = [
    "pairs_data",
    "pairs_answers",
    "pairs_preds",
    "choices_data",
    "choices_answers",
    "choices_preds",
    "generation_data",
    "generation_refs",
    "probs_dir",
    "losses",
    "scores",
    "human",
    "leaderboard",
    "output_dir",
];

/// Parse and check a configuration file.
///
/// Unknown keys, values of the wrong type, bad enum values and input paths
/// that do not exist are all errors naming the offending key.
pub fn validate_config(config_path: impl AsRef<Path>) -> Result<RunConfig> {
    let config_path = config_path.as_ref();
    let text = fs::read_to_string(config_path).map_err(|e| Error::io(config_path, e))?;
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Malformed {
        path: config_path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    let mut config = RunConfig::default();

    for (key, value) in &table {
        let string = || -> Result<String> {
            value
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| Error::config(key, "expected a string"))
        };
        let count = || -> Result<usize> {
            value
                .as_integer()
                .filter(|&v| v > 0)
                .map(|v| v as usize)
                .ok_or_else(|| Error::config(key, "expected a positive integer"))
        };
        let path = || -> Result<PathBuf> {
            let resolved = base.join(string()?);
            // output_dir is created on demand
            if key != "output_dir" && !resolved.exists() {
                return Err(Error::config(key, format!("path {} does not exist", resolved.display())));
            }
            Ok(resolved)
        };

        match key.as_str() {
            "task" => {
                config.task = Some(string()?.parse().map_err(|_| {
                    Error::config(key, format!("invalid value {value} (allowed: pairs, choices)"))
                })?)
            }
            "objective" => {
                config.objective = Some(string()?.parse().map_err(|_| {
                    Error::config(key, format!("invalid value {value} (allowed: accuracy, f1)"))
                })?)
            }
            "format" => {
                config.format = Some(string()?.parse().map_err(|_| {
                    Error::config(key, format!("invalid value {value} (allowed: csv, text)"))
                })?)
            }
            "workers" => config.workers = Some(count()?),
            "max_members" => config.max_members = Some(count()?),
            "batch_size" => config.batch_size = Some(count()?),
            "forward" => config.forward = Some(string()?),
            "backward" => config.backward = Some(string()?),
            "systems" => {
                let items = value
                    .as_array()
                    .ok_or_else(|| Error::config(key, "expected an array of paths"))?;
                let mut paths = Vec::new();
                for item in items {
                    let p = base.join(
                        item.as_str()
                            .ok_or_else(|| Error::config(key, "expected an array of paths"))?,
                    );
                    if !p.exists() {
                        return Err(Error::config(key, format!("path {} does not exist", p.display())));
                    }
                    paths.push(p);
                }
                config.systems = Some(paths);
            }
            "top_ks" => {
                let items = value
                    .as_array()
                    .ok_or_else(|| Error::config(key, "expected an array of integers"))?;
                config.top_ks = Some(
                    items
                        .iter()
                        .map(|v| {
                            v.as_integer()
                                .filter(|&k| k > 0)
                                .map(|k| k as usize)
                                .ok_or_else(|| Error::config(key, "expected an array of positive integers"))
                        })
                        .collect::<Result<_>>()?,
                );
            }
            k if INPUT_PATH_KEYS.contains(&k) => {
                let p = Some(path()?);
                match k {
                    "pairs_data" => config.pairs_data = p,
                    "pairs_answers" => config.pairs_answers = p,
                    "pairs_preds" => config.pairs_preds = p,
                    "choices_data" => config.choices_data = p,
                    "choices_answers" => config.choices_answers = p,
                    "choices_preds" => config.choices_preds = p,
                    "generation_data" => config.generation_data = p,
                    "generation_refs" => config.generation_refs = p,
                    "probs_dir" => config.probs_dir = p,
                    "losses" => config.losses = p,
                    "scores" => config.scores = p,
                    "human" => config.human = p,
                    "leaderboard" => config.leaderboard = p,
                    _ => config.output_dir = p,
                }
            }
            _ => return Err(Error::config(key, "unknown key")),
        }
    }
    Ok(config)
}

#[derive(Debug, Parser)]
#[command(name = "comve", version, about = "Commonsense validation and explanation evaluation harness")]
struct Cli {
    /// Configuration file (flat TOML); flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Report format.
    #[arg(long, global = true, value_parser = ["csv", "text"])]
    format: Option<String>,

    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Accuracy (and F1 for pairs) of a prediction file.
    Evaluate(EvaluateArgs),
    /// Exhaustive search for the best-averaging subset of models.
    EnsembleSearch(EnsembleArgs),
    /// Choose the option with the lowest loss.
    PplSelect(PplArgs),
    /// Rerank system outputs with candidate scores and report human-score effects.
    Rerank(RerankArgs),
    /// Round-trip-translation augmentation of pair data.
    Augment(AugmentArgs),
    /// BLEU of copying the statement as the explanation.
    BaselineCopySource(CopySourceArgs),
    /// Correlation between BLEU and human scores on a leaderboard.
    AnalyzeCorrelation(CorrelationArgs),
    /// List misclassified examples.
    ErrorBreakdown(EvaluateArgs),
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long, value_enum)]
    task: Option<Task>,
    /// Predictions, JSON Lines `{"id", "label"}`.
    #[arg(long)]
    preds: Option<PathBuf>,
    /// Data CSV for the task.
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Answers CSV `id,label`.
    #[arg(long)]
    answers: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EnsembleArgs {
    /// Directory of per-model probability files (`*.jsonl`).
    #[arg(long)]
    probs: Option<PathBuf>,
    #[arg(long)]
    answers: Option<PathBuf>,
    #[arg(long, value_parser = ["accuracy", "f1"])]
    objective: Option<String>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Largest subset size to consider.
    #[arg(long)]
    max_members: Option<usize>,
    /// Directory for the averaged probabilities and predictions.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PplArgs {
    /// Loss file, JSON Lines `{"id", "losses"}`.
    #[arg(long)]
    losses: Option<PathBuf>,
    /// Choices data CSV; with answers, accuracy is reported.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    answers: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RerankArgs {
    /// Generation data CSV; needs `--refs`. Without it ids come from the first system.
    #[arg(long)]
    statements: Option<PathBuf>,
    #[arg(long)]
    refs: Option<PathBuf>,
    /// System output files in option order.
    #[arg(long, num_args = 2..=3)]
    systems: Option<Vec<PathBuf>>,
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Human scores CSV `id,system,score`.
    #[arg(long)]
    human: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AugmentArgs {
    /// Pairs data CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    answers: Option<PathBuf>,
    /// Forward translator, run with `sh -c`.
    #[arg(long)]
    forward: Option<String>,
    /// Backward translator, run with `sh -c`.
    #[arg(long)]
    backward: Option<String>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CopySourceArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    refs: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CorrelationArgs {
    /// Leaderboard CSV `system,bleu,human`.
    #[arg(long)]
    leaderboard: Option<PathBuf>,
    /// Also correlate over the k best systems by BLEU; repeatable.
    #[arg(long = "top-k")]
    top_k: Vec<usize>,
}

fn require<T>(value: Option<T>, key: &str) -> Result<T> {
    value.ok_or_else(|| Error::config(key, "missing (set it in the config file or pass the flag)"))
}

fn parse_objective(flag: Option<String>, config: Option<Objective>) -> Result<Option<Objective>> {
    match flag {
        Some(s) => Ok(Some(s.parse()?)),
        None => Ok(config),
    }
}

/// Run the command line and return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INVALID,
            };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_contract() {
                EXIT_CONTRACT
            } else {
                EXIT_INVALID
            }
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => validate_config(path)?,
        None => RunConfig::default(),
    };
    let format = match cli.format {
        Some(f) => f.parse()?,
        None => config.format.unwrap_or_default(),
    };
    let table = match cli.command {
        Command::Evaluate(args) => evaluate(args, &config)?,
        Command::EnsembleSearch(args) => ensemble_search(args, &config)?,
        Command::PplSelect(args) => ppl_select(args, &config)?,
        Command::Rerank(args) => rerank(args, &config)?,
        Command::Augment(args) => augment(args, &config)?,
        Command::BaselineCopySource(args) => copy_source(args, &config)?,
        Command::AnalyzeCorrelation(args) => correlation(args, &config)?,
        Command::ErrorBreakdown(args) => error_breakdown(args, &config)?,
    };
    let rendered = table.render(format);
    match &cli.output {
        Some(path) => fs::write(path, rendered).map_err(|e| Error::io(path, e)),
        None => std::io::stdout()
            .write_all(rendered.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn output_dir(flag: Option<PathBuf>, config: &RunConfig) -> Result<Option<PathBuf>> {
    let dir = flag.or_else(|| config.output_dir.clone());
    if let Some(dir) = &dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(dir)
}

/// Gold labels and predictions for `evaluate` and `error-breakdown`.
enum Loaded {
    Pairs(dataset::Dataset<dataset::PairExample>, PredictionVector),
    Choices(dataset::Dataset<dataset::ChoiceExample>, PredictionVector),
}

fn load_evaluation(args: EvaluateArgs, config: &RunConfig) -> Result<Loaded> {
    let task = require(args.task.or(config.task), "task")?;
    match task {
        Task::Pairs => {
            let data = require(args.gold.or_else(|| config.pairs_data.clone()), "pairs_data")?;
            let answers = require(args.answers.or_else(|| config.pairs_answers.clone()), "pairs_answers")?;
            let preds = require(args.preds.or_else(|| config.pairs_preds.clone()), "pairs_preds")?;
            let ds = dataset::load_pairs(data, Some(&answers))?;
            Ok(Loaded::Pairs(ds, metrics::load_predictions(preds)?))
        }
        Task::Choices => {
            let data = require(args.gold.or_else(|| config.choices_data.clone()), "choices_data")?;
            let answers =
                require(args.answers.or_else(|| config.choices_answers.clone()), "choices_answers")?;
            let preds = require(args.preds.or_else(|| config.choices_preds.clone()), "choices_preds")?;
            let ds = dataset::load_choices(data, Some(&answers))?;
            Ok(Loaded::Choices(ds, metrics::load_predictions(preds)?))
        }
    }
}

fn check_label_range(preds: &PredictionVector, classes: usize) -> Result<()> {
    match preds.iter().find(|(_, label)| *label >= classes) {
        Some((id, label)) => Err(Error::invalid(format!(
            "prediction for id {id:?} is {label}, expected one of 0..{classes}"
        ))),
        None => Ok(()),
    }
}

fn evaluate(args: EvaluateArgs, config: &RunConfig) -> Result<Table> {
    let mut t = Table::new("Evaluation", &["metric", "value"]);
    match load_evaluation(args, config)? {
        Loaded::Pairs(ds, preds) => {
            check_label_range(&preds, dataset::PairExample::CLASSES)?;
            let golds = ds.labels()?;
            let f1 = metrics::binary_f1(&preds, &golds, 1)?;
            t.row(["examples".to_string(), golds.len().to_string()]);
            t.row(["accuracy".to_string(), fmt_f64(metrics::accuracy(&preds, &golds)?)]);
            t.row(["f1".to_string(), fmt_f64(f1.value)]);
            if f1.degenerate {
                t.note("warning: no positive predictions or labels; F1 reported as 0");
            }
        }
        Loaded::Choices(ds, preds) => {
            check_label_range(&preds, dataset::ChoiceExample::CLASSES)?;
            let golds = ds.labels()?;
            t.row(["examples".to_string(), golds.len().to_string()]);
            t.row(["accuracy".to_string(), fmt_f64(metrics::accuracy(&preds, &golds)?)]);
        }
    }
    Ok(t)
}

fn error_breakdown(args: EvaluateArgs, config: &RunConfig) -> Result<Table> {
    let breakdown = match load_evaluation(args, config)? {
        Loaded::Pairs(ds, preds) => analysis::error_breakdown(&preds, &ds.labels()?, &ds)?,
        Loaded::Choices(ds, preds) => analysis::error_breakdown(&preds, &ds.labels()?, &ds)?,
    };
    Ok(breakdown.table())
}

fn ensemble_search(args: EnsembleArgs, config: &RunConfig) -> Result<Table> {
    let probs = require(args.probs.or_else(|| config.probs_dir.clone()), "probs_dir")?;
    let objective = require(parse_objective(args.objective, config.objective)?, "objective")?;
    let answers = match objective {
        Objective::F1 => args.answers.or_else(|| config.pairs_answers.clone()),
        Objective::Accuracy => args
            .answers
            .or_else(|| config.choices_answers.clone())
            .or_else(|| config.pairs_answers.clone()),
    };
    let answers = require(answers, "pairs_answers")?;
    let matrices = ensemble::load_probability_dir(&probs)?;
    let golds = dataset::load_answers(&answers, matrices[0].class_count())?;
    let options = SearchOptions {
        workers: args.workers.or(config.workers),
        max_members: args.max_members.or(config.max_members),
    };
    let result = ensemble::search_best_subset(&matrices, &golds, objective, &options)?;

    if let Some(dir) = output_dir(args.output_dir, config)? {
        ensemble::write_probabilities(&result.averaged, dir.join("ensemble_probs.jsonl"))?;
        metrics::write_predictions(&ensemble::predict(&result.averaged), dir.join("ensemble_preds.jsonl"))?;
    }

    let mut t = Table::new("Ensemble search", &["metric", "value"]);
    t.row(["models".to_string(), matrices.len().to_string()]);
    t.row(["objective".to_string(), result.objective.to_string()]);
    t.row(["subsets_evaluated".to_string(), result.subsets_evaluated.to_string()]);
    t.row(["best_members".to_string(), result.member_ids.join(" ")]);
    t.row(["best_size".to_string(), result.member_ids.len().to_string()]);
    t.row(["best_score".to_string(), fmt_f64(result.dev_score)]);
    Ok(t)
}

fn ppl_select(args: PplArgs, config: &RunConfig) -> Result<Table> {
    let losses = require(args.losses.or_else(|| config.losses.clone()), "losses")?;
    let table = choice_scoring::load_losses(losses)?;
    let preds = choice_scoring::select_by_min_loss(&table);

    let mut t = Table::new("Minimum-loss selection", &["metric", "value"]);
    t.row(["source_model".to_string(), table.source_model().to_string()]);
    t.row(["examples".to_string(), table.len().to_string()]);
    let data = args.data.or_else(|| config.choices_data.clone());
    let answers = args.answers.or_else(|| config.choices_answers.clone());
    if let (Some(data), Some(answers)) = (data, answers) {
        let golds = dataset::load_choices(data, Some(&answers))?;
        t.row([
            "accuracy".to_string(),
            fmt_f64(choice_scoring::evaluate_choices(&table, &golds)?),
        ]);
    }
    if let Some(dir) = output_dir(args.output_dir, config)? {
        metrics::write_predictions(&preds, dir.join("ppl_preds.jsonl"))?;
    }
    Ok(t)
}

fn rerank(args: RerankArgs, config: &RunConfig) -> Result<Table> {
    let system_paths = require(args.systems.or_else(|| config.systems.clone()), "systems")?;
    let scores = require(args.scores.or_else(|| config.scores.clone()), "scores")?;
    let human = require(args.human.or_else(|| config.human.clone()), "human")?;

    let mut systems = Vec::new();
    let mut first_order = Vec::new();
    for (i, path) in system_paths.iter().enumerate() {
        let (output, order) = rerank::load_system_output(path)?;
        if i == 0 {
            first_order = order;
        }
        systems.push(output);
    }
    let statements = args.statements.or_else(|| config.generation_data.clone());
    let refs = args.refs.or_else(|| config.generation_refs.clone());
    let instances = match statements {
        Some(data) => {
            let refs = require(refs, "generation_refs")?;
            rerank::build_choice_instances(&dataset::load_generation(data, refs)?, &systems)?
        }
        None => rerank::build_from_statements(first_order.iter().map(|id| (id.as_str(), "")), &systems)?,
    };
    let scores = rerank::load_candidate_scores(scores)?;
    let human = rerank::load_human_scores(human)?;

    let selections = rerank::select_best(&instances, &scores)?;
    let shares = rerank::selection_shares(&selections, instances.systems.len())?;
    let reranked = rerank::recompute_human_score(&selections, &human)?;
    let upper = rerank::oracle_upper_bound(instances.dataset.ids(), &instances.systems, &human)?;

    if let Some(dir) = output_dir(args.output_dir, config)? {
        let path = dir.join("reranked.jsonl");
        let lines = selections.iter().map(|s| {
            serde_json::json!({"id": s.id, "system": s.system_id, "text": s.text})
        });
        crate::jsonl::write(&path, lines)?;
    }

    let mut t = Table::new("Reranking", &["metric", "value"]);
    t.row(["examples".to_string(), selections.len().to_string()]);
    for (system, share) in instances.systems.iter().zip(&shares) {
        t.row([format!("share:{system}"), fmt_f64(*share)]);
    }
    for system in &instances.systems {
        let picked: Vec<rerank::Selection> = instances
            .dataset
            .iter()
            .map(|e| rerank::Selection {
                id: e.id.clone(),
                system_index: 0,
                system_id: system.clone(),
                text: String::new(),
            })
            .collect();
        let mean = rerank::recompute_human_score(&picked, &human)?;
        t.row([format!("human:{system}"), fmt_f64(mean)]);
    }
    t.row(["human:reranked".to_string(), fmt_f64(reranked)]);
    t.row(["human:upper_bound".to_string(), fmt_f64(upper)]);
    Ok(t)
}

fn augment(args: AugmentArgs, config: &RunConfig) -> Result<Table> {
    let data = require(args.data.or_else(|| config.pairs_data.clone()), "pairs_data")?;
    let answers = args.answers.or_else(|| config.pairs_answers.clone());
    let forward = require(args.forward.or_else(|| config.forward.clone()), "forward")?;
    let backward = require(args.backward.or_else(|| config.backward.clone()), "backward")?;
    let batch_size = args.batch_size.or(config.batch_size).unwrap_or(DEFAULT_BATCH_SIZE);
    let dir = require(output_dir(args.output_dir, config)?, "output_dir")?;

    let original = dataset::load_pairs(data, answers.as_deref())?;
    let forward = TranslatorHandle::shell(forward, batch_size)?;
    let backward = TranslatorHandle::shell(backward, batch_size)?;
    let rtt = augment::round_trip_pairs(&original, &forward, &backward)?;
    let (augmented, report) = augment::augment_dataset(&original, &rtt)?;

    let answers_out = dir.join("augmented_answers.csv");
    dataset::write_pairs(
        &augmented,
        dir.join("augmented.csv"),
        answers.is_some().then_some(answers_out.as_path()),
    )?;

    let mut t = Table::new("Round-trip augmentation", &["metric", "value"]);
    t.row(["originals".to_string(), report.originals.to_string()]);
    t.row(["round_tripped".to_string(), report.round_tripped.to_string()]);
    t.row(["duplicates_removed".to_string(), report.duplicates_removed.to_string()]);
    t.row(["final_added".to_string(), report.final_added.to_string()]);
    t.row(["rtt_bleu".to_string(), fmt_f64(report.rtt_bleu)]);
    Ok(t)
}

fn copy_source(args: CopySourceArgs, config: &RunConfig) -> Result<Table> {
    let data = require(args.data.or_else(|| config.generation_data.clone()), "generation_data")?;
    let refs = require(args.refs.or_else(|| config.generation_refs.clone()), "generation_refs")?;
    let ds = dataset::load_generation(data, refs)?;
    Ok(analysis::bleu_table("Copy-source baseline", &analysis::copy_source_baseline(&ds)?))
}

fn correlation(args: CorrelationArgs, config: &RunConfig) -> Result<Table> {
    let path = require(args.leaderboard.or_else(|| config.leaderboard.clone()), "leaderboard")?;
    let top_ks = if args.top_k.is_empty() {
        config.top_ks.clone().unwrap_or_default()
    } else {
        args.top_k
    };
    let rows = analysis::load_leaderboard(path)?;
    Ok(analysis::correlation_report(&rows, &top_ks)?.table())
}
