//! The `refnav` command-line driver.
//!
//! One pipeline stage per invocation. Settings come from built-in defaults,
//! then an optional flat `key = value` config file, then the `REFNAV_OUT`
//! environment variable (output directory only), then command-line flags.
//! Every stage writes its effective settings next to its artifacts.
//!
//! Output directory layout:
//!
//! | stage            | files                                                   |
//! |------------------|---------------------------------------------------------|
//! | `synth`          | `corpus.jsonl`, `tasks.jsonl`                           |
//! | `ingest`         | `corpus.jsonl`, `tasks.jsonl`, `tasks.csv`              |
//! | `graph`          | `graphs/<drug>.csv`                                     |
//! | `train-baseline` | `baseline.json`, `rankings.csv`                         |
//! | `train-agent`    | `<algo>.json`, `training_log_<algo>.csv`                |
//! | `evaluate`       | `results_<method>.json`, `report.*`, `boxplot.csv`      |
//! | `report`         | `report.csv`, `report.txt`, `boxplot.csv` over all runs |

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::agents::{save_training_log, train_agent, AgentConfig, Algo, Behavior, TaskContext};
use crate::baseline::{
    rank_candidates, reads_until_target, save_rankings, train_classifier, BaselineConfig,
    Classifier,
};
use crate::corpus::{
    load_corpus, load_task_specs, save_task_specs, Corpus, SyntheticConfig, Task, TaskSpec,
    Vocabulary,
};
use crate::env::RewardConfig;
use crate::error::{self, Error, Result};
use crate::eval::{emit_report, evaluate_agent, Method, TaskResult};
use crate::nn::{Checkpoint, DistanceWeighting, PolicyNet};
use crate::recsys::build_neighbor_graph;

/// Environment variable that overrides the output directory.
pub const OUT_ENV: &str = "REFNAV_OUT";

/// Tasks at or below this hardness are dropped when filtering is on.
pub const HOF_THRESHOLD: f64 = 0.5;

#[derive(Debug, Parser)]
#[command(
    name = "refnav",
    version,
    about = "Train and evaluate reference-navigation agents"
)]
struct Cli {
    /// Flat `key = value` settings file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Default, Args)]
struct CommonArgs {
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    tasks: Option<PathBuf>,
    /// Neighbors per reference.
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    step_penalty: Option<f64>,
    #[arg(long, global = true)]
    discount: Option<f64>,
    /// Keep tasks whose hardness is at or below 0.5.
    #[arg(long, global = true)]
    no_hof_filter: bool,
    /// Classifier checkpoint used to pick start papers.
    #[arg(long, global = true)]
    baseline: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a corpus and task file, pose the tasks and summarize them.
    Ingest,
    /// Generate a synthetic corpus and its task.
    Synth(SynthArgs),
    /// Export the neighbor graph of every task.
    Graph,
    /// Train the read/skip classifier and rank every task's candidates.
    TrainBaseline(BaselineArgs),
    /// Train a REINFORCE or A2C agent.
    TrainAgent(AgentArgs),
    /// Evaluate one method over seeded episodes.
    Evaluate(EvalArgs),
    /// Merge every evaluated method into one report.
    Report,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    n_docs: Option<usize>,
    #[arg(long)]
    n_targets: Option<usize>,
    #[arg(long)]
    vocab_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    signal_seed: Option<u64>,
    /// Put a marker token in every target's abstract.
    #[arg(long)]
    label_marker: bool,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct AgentArgs {
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    episodes_per_task: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// none, distance or similarity.
    #[arg(long)]
    weighting: Option<String>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// a2c, reinforce, baseline or random.
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    weighting: Option<String>,
}

/// Effective settings of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub tasks: Option<PathBuf>,
    pub out: PathBuf,
    pub baseline: Option<PathBuf>,
    pub k: usize,
    pub rewards: RewardConfig,
    pub hof_filter: bool,
    pub algo: String,
    pub weighting: Option<DistanceWeighting>,
    pub beta: f64,
    pub delta: f64,
    pub lambda: f64,
    pub learning_rate: f64,
    pub episodes_per_task: usize,
    pub d: usize,
    pub seed: u64,
    pub n_episodes: usize,
    pub base_seed: u64,
    pub baseline_epochs: usize,
    pub baseline_seed: u64,
    pub n_docs: usize,
    pub n_targets: usize,
    pub vocab_size: usize,
    pub synth_seed: u64,
    pub signal_seed: Option<u64>,
    pub label_marker: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let agent = AgentConfig::new(Algo::A2c);
        RunConfig {
            corpus: None,
            tasks: None,
            out: PathBuf::from("refnav-out"),
            baseline: None,
            k: 20,
            rewards: RewardConfig::default(),
            hof_filter: true,
            algo: "a2c".into(),
            weighting: None,
            beta: agent.beta,
            delta: agent.delta,
            lambda: agent.lambda,
            learning_rate: agent.learning_rate,
            episodes_per_task: agent.episodes_per_task,
            d: agent.d,
            seed: 0,
            n_episodes: crate::eval::DEFAULT_EPISODES,
            base_seed: 0,
            baseline_epochs: BaselineConfig::default().epochs,
            baseline_seed: 0,
            n_docs: 500,
            n_targets: 10,
            vocab_size: 1000,
            synth_seed: 7,
            signal_seed: None,
            label_marker: false,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("invalid value {value:?} for {key}"))
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let k = key.as_str();
        let optional = |v: &str| (!v.is_empty()).then(|| PathBuf::from(v));
        match k {
            "corpus" => self.corpus = optional(value),
            "tasks" => self.tasks = optional(value),
            "baseline" => self.baseline = optional(value),
            "weighting" if value.is_empty() => self.weighting = None,
            "signal_seed" if value.is_empty() => self.signal_seed = None,
            "out" => self.out = value.into(),
            "k" => self.k = parse_value(k, value)?,
            "step_penalty" => self.rewards.step_penalty = parse_value(k, value)?,
            "discount" => self.rewards.discount = parse_value(k, value)?,
            "hof_filter" => self.hof_filter = parse_value(k, value)?,
            "algo" => self.algo = value.to_string(),
            "weighting" => {
                self.weighting = Some(
                    DistanceWeighting::parse(value)
                        .ok_or_else(|| format!("invalid value {value:?} for weighting"))?,
                )
            }
            "beta" => self.beta = parse_value(k, value)?,
            "delta" => self.delta = parse_value(k, value)?,
            "lambda" => self.lambda = parse_value(k, value)?,
            "learning_rate" | "lr" => self.learning_rate = parse_value(k, value)?,
            "episodes_per_task" => self.episodes_per_task = parse_value(k, value)?,
            "d" => self.d = parse_value(k, value)?,
            "seed" => self.seed = parse_value(k, value)?,
            "n_episodes" | "episodes" => self.n_episodes = parse_value(k, value)?,
            "base_seed" => self.base_seed = parse_value(k, value)?,
            "baseline_epochs" => self.baseline_epochs = parse_value(k, value)?,
            "baseline_seed" => self.baseline_seed = parse_value(k, value)?,
            "n_docs" => self.n_docs = parse_value(k, value)?,
            "n_targets" => self.n_targets = parse_value(k, value)?,
            "vocab_size" => self.vocab_size = parse_value(k, value)?,
            "synth_seed" => self.synth_seed = parse_value(k, value)?,
            "signal_seed" => self.signal_seed = Some(parse_value(k, value)?),
            "label_marker" => self.label_marker = parse_value(k, value)?,
            _ => return Err(format!("unknown setting {key:?}")),
        }
        Ok(())
    }

    /// Parses a flat settings file. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> std::result::Result<(), String> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
            self.set(key, value)
                .map_err(|e| format!("line {}: {e}", i + 1))?;
        }
        Ok(())
    }

    pub fn agent_config(&self) -> Result<AgentConfig> {
        let algo = Algo::parse(&self.algo)
            .ok_or_else(|| Error::Config(format!("unknown agent algorithm {:?}", self.algo)))?;
        let config = AgentConfig {
            algo,
            d: self.d,
            learning_rate: self.learning_rate,
            beta: self.beta,
            delta: self.delta,
            lambda: self.lambda,
            episodes_per_task: self.episodes_per_task,
            seed: self.seed,
            weighting: self.weighting.unwrap_or(algo.default_weighting()),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn baseline_config(&self) -> BaselineConfig {
        BaselineConfig {
            epochs: self.baseline_epochs,
            seed: self.baseline_seed,
            ..BaselineConfig::default()
        }
    }

    /// Every setting as `key = value` lines in a fixed order.
    pub fn render(&self) -> String {
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()
        };
        let mut entries: BTreeMap<&str, String> = BTreeMap::new();
        entries.insert("corpus", path(&self.corpus));
        entries.insert("tasks", path(&self.tasks));
        entries.insert("out", self.out.display().to_string());
        entries.insert("baseline", path(&self.baseline));
        entries.insert("k", self.k.to_string());
        entries.insert("step_penalty", self.rewards.step_penalty.to_string());
        entries.insert("discount", self.rewards.discount.to_string());
        entries.insert("hof_filter", self.hof_filter.to_string());
        entries.insert("algo", self.algo.clone());
        entries.insert(
            "weighting",
            self.weighting
                .map(|w| w.as_str().to_string())
                .unwrap_or_default(),
        );
        entries.insert("beta", self.beta.to_string());
        entries.insert("delta", self.delta.to_string());
        entries.insert("lambda", self.lambda.to_string());
        entries.insert("learning_rate", self.learning_rate.to_string());
        entries.insert("episodes_per_task", self.episodes_per_task.to_string());
        entries.insert("d", self.d.to_string());
        entries.insert("seed", self.seed.to_string());
        entries.insert("n_episodes", self.n_episodes.to_string());
        entries.insert("base_seed", self.base_seed.to_string());
        entries.insert("baseline_epochs", self.baseline_epochs.to_string());
        entries.insert("baseline_seed", self.baseline_seed.to_string());
        entries.insert("n_docs", self.n_docs.to_string());
        entries.insert("n_targets", self.n_targets.to_string());
        entries.insert("vocab_size", self.vocab_size.to_string());
        entries.insert("synth_seed", self.synth_seed.to_string());
        entries.insert(
            "signal_seed",
            self.signal_seed.map(|s| s.to_string()).unwrap_or_default(),
        );
        entries.insert("label_marker", self.label_marker.to_string());
        entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    fn corpus_path(&self) -> Result<&Path> {
        self.corpus
            .as_deref()
            .ok_or_else(|| Error::Config("no corpus given (use --corpus or `corpus =`)".into()))
    }

    fn tasks_path(&self) -> Result<&Path> {
        self.tasks
            .as_deref()
            .ok_or_else(|| Error::Config("no task file given (use --tasks or `tasks =`)".into()))
    }

    fn baseline_path(&self) -> PathBuf {
        self.baseline
            .clone()
            .unwrap_or_else(|| self.out.join("baseline.json"))
    }
}

/// Why a command failed; decides the exit status.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Stage(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Stage(e)
    }
}

fn resolve_config(cli: &Cli, env_out: Option<OsString>) -> std::result::Result<RunConfig, Failure> {
    let mut config = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        config
            .apply_text(&text)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    }
    if let Some(out) = env_out.filter(|v| !v.is_empty()) {
        config.out = PathBuf::from(out);
    }

    let c = &cli.common;
    let mut flags: Vec<(&str, String)> = Vec::new();
    let mut push = |key: &'static str, value: Option<String>| {
        if let Some(v) = value {
            flags.push((key, v));
        }
    };
    let show = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    push("out", show(&c.out));
    push("corpus", show(&c.corpus));
    push("tasks", show(&c.tasks));
    push("baseline", show(&c.baseline));
    push("k", c.k.map(|v| v.to_string()));
    push("step_penalty", c.step_penalty.map(|v| v.to_string()));
    push("discount", c.discount.map(|v| v.to_string()));
    if c.no_hof_filter {
        push("hof_filter", Some("false".into()));
    }
    match &cli.command {
        Command::Synth(a) => {
            push("n_docs", a.n_docs.map(|v| v.to_string()));
            push("n_targets", a.n_targets.map(|v| v.to_string()));
            push("vocab_size", a.vocab_size.map(|v| v.to_string()));
            push("synth_seed", a.seed.map(|v| v.to_string()));
            push("signal_seed", a.signal_seed.map(|v| v.to_string()));
            if a.label_marker {
                push("label_marker", Some("true".into()));
            }
        }
        Command::TrainBaseline(a) => {
            push("baseline_epochs", a.epochs.map(|v| v.to_string()));
            push("baseline_seed", a.seed.map(|v| v.to_string()));
        }
        Command::TrainAgent(a) => {
            push("algo", a.algo.clone());
            push("beta", a.beta.map(|v| v.to_string()));
            push("delta", a.delta.map(|v| v.to_string()));
            push("lambda", a.lambda.map(|v| v.to_string()));
            push("learning_rate", a.lr.map(|v| v.to_string()));
            push(
                "episodes_per_task",
                a.episodes_per_task.map(|v| v.to_string()),
            );
            push("d", a.d.map(|v| v.to_string()));
            push("seed", a.seed.map(|v| v.to_string()));
            push("weighting", a.weighting.clone());
        }
        Command::Evaluate(a) => {
            push("algo", a.algo.clone());
            push("n_episodes", a.episodes.map(|v| v.to_string()));
            push("base_seed", a.base_seed.map(|v| v.to_string()));
            push("weighting", a.weighting.clone());
        }
        Command::Ingest | Command::Graph | Command::Report => {}
    }
    for (key, value) in flags {
        config.set(key, &value).map_err(Failure::Usage)?;
    }
    match &cli.command {
        Command::TrainAgent(_) if Algo::parse(&config.algo).is_none() => {
            return Err(Failure::Usage(format!(
                "unknown agent algorithm {:?}",
                config.algo
            )));
        }
        Command::Evaluate(_) if Method::parse(&config.algo).is_none() => {
            return Err(Failure::Usage(format!("unknown method {:?}", config.algo)));
        }
        _ => {}
    }
    Ok(config)
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Ingest => "ingest",
        Command::Synth(_) => "synth",
        Command::Graph => "graph",
        Command::TrainBaseline(_) => "train-baseline",
        Command::TrainAgent(_) => "train-agent",
        Command::Evaluate(_) => "evaluate",
        Command::Report => "report",
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = error::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = std::io::BufWriter::new(error::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

struct Loaded {
    corpus: Corpus,
    vocab: Vocabulary,
    tasks: Vec<Task>,
}

fn load_inputs(config: &RunConfig) -> Result<Loaded> {
    let corpus = load_corpus(config.corpus_path()?)?;
    let specs = load_task_specs(config.tasks_path()?)?;
    let tasks = specs
        .iter()
        .map(|s| Task::pose(&corpus, s))
        .collect::<Result<Vec<_>>>()?;
    let vocab = corpus.vocabulary();
    Ok(Loaded {
        corpus,
        vocab,
        tasks,
    })
}

/// Drops tasks with hardness at or below the threshold, logging each.
fn filter_tasks(tasks: Vec<Task>, enabled: bool, log: &mut dyn Write) -> Result<Vec<Task>> {
    if !enabled {
        return Ok(tasks);
    }
    let mut kept = Vec::with_capacity(tasks.len());
    for task in tasks {
        let hof = task.hardness();
        if hof > HOF_THRESHOLD {
            kept.push(task);
        } else {
            writeln!(
                log,
                "notice: excluding task {:?}: HoF {hof:.3} <= {HOF_THRESHOLD}",
                task.drug
            )?;
        }
    }
    if kept.is_empty() {
        return Err(Error::Config(
            "every task was excluded by the HoF filter".into(),
        ));
    }
    Ok(kept)
}

fn load_classifier(config: &RunConfig, vocab: &Vocabulary) -> Result<Classifier> {
    let path = config.baseline_path();
    if !path.exists() {
        return Err(Error::Config(format!(
            "no classifier at {}; run train-baseline first",
            path.display()
        )));
    }
    Classifier::from_checkpoint(&Checkpoint::load(&path)?, vocab)
}

/// Start paper of each task: the classifier's top-ranked candidate.
fn start_papers(classifier: &Classifier, loaded: &Loaded, tasks: &[Task]) -> Result<Vec<String>> {
    tasks
        .iter()
        .map(|t| {
            let ranking =
                rank_candidates(classifier, &loaded.corpus, &loaded.vocab, &t.candidate_ids)?;
            Ok(ranking[0].id.clone())
        })
        .collect()
}

fn contexts<'c>(
    config: &RunConfig,
    loaded: &'c Loaded,
    tasks: &[Task],
) -> Result<Vec<TaskContext<'c>>> {
    tasks
        .iter()
        .map(|t| {
            TaskContext::new(
                &loaded.corpus,
                &loaded.vocab,
                t.clone(),
                config.k,
                config.rewards,
            )
        })
        .collect()
}

fn run_stage(command: &Command, config: &RunConfig, log: &mut dyn Write) -> Result<()> {
    let out = &config.out;
    match command {
        Command::Synth(_) => {
            let mut synth = SyntheticConfig::new(
                config.n_docs,
                config.n_targets,
                config.vocab_size,
                config.synth_seed,
            );
            synth.signal_seed = config.signal_seed;
            synth.label_marker = config.label_marker;
            let (corpus, task) = synth.generate()?;
            corpus.save(&out.join("corpus.jsonl"))?;
            save_task_specs(&[task.spec()], &out.join("tasks.jsonl"))?;
            writeln!(
                log,
                "wrote {} references and task {:?} ({} targets, HoF {:.3})",
                corpus.len(),
                task.drug,
                task.n_targets(),
                task.hardness()
            )?;
        }
        Command::Ingest => {
            let loaded = load_inputs(config)?;
            loaded.corpus.save(&out.join("corpus.jsonl"))?;
            let specs: Vec<TaskSpec> = loaded.tasks.iter().map(Task::spec).collect();
            save_task_specs(&specs, &out.join("tasks.jsonl"))?;
            let mut w = csv::Writer::from_writer(error::create(&out.join("tasks.csv"))?);
            w.write_record(["drug", "n_candidates", "n_targets", "hof", "ctn"])?;
            for t in &loaded.tasks {
                w.write_record([
                    t.drug.clone(),
                    t.n_candidates().to_string(),
                    t.n_targets().to_string(),
                    t.hardness().to_string(),
                    crate::eval::ctn(t.n_candidates(), t.n_targets())?.to_string(),
                ])?;
            }
            w.flush()?;
            writeln!(
                log,
                "ingested {} references and {} tasks (vocabulary {})",
                loaded.corpus.len(),
                loaded.tasks.len(),
                loaded.vocab.hash()
            )?;
        }
        Command::Graph => {
            let loaded = load_inputs(config)?;
            for t in &loaded.tasks {
                let graph = build_neighbor_graph(&loaded.corpus, &t.candidate_ids, config.k)?;
                graph.save_csv(&out.join("graphs").join(format!("{}.csv", t.drug)))?;
            }
            writeln!(log, "wrote {} graphs", loaded.tasks.len())?;
        }
        Command::TrainBaseline(_) => {
            let loaded = load_inputs(config)?;
            let tasks = filter_tasks(loaded.tasks.clone(), config.hof_filter, log)?;
            let trained = train_classifier(
                &tasks,
                &loaded.corpus,
                &loaded.vocab,
                &config.baseline_config(),
            )?;
            trained
                .classifier
                .to_checkpoint(&loaded.vocab)
                .save(&out.join("baseline.json"))?;
            let rankings = tasks
                .iter()
                .map(|t| {
                    rank_candidates(
                        &trained.classifier,
                        &loaded.corpus,
                        &loaded.vocab,
                        &t.candidate_ids,
                    )
                    .map(|r| (t.drug.clone(), r))
                })
                .collect::<Result<Vec<_>>>()?;
            save_rankings(&rankings, &out.join("rankings.csv"))?;
            writeln!(
                log,
                "trained classifier on {} tasks; final loss {:.4}",
                tasks.len(),
                trained.epoch_losses.last().copied().unwrap_or(f64::NAN)
            )?;
        }
        Command::TrainAgent(_) => {
            let agent = config.agent_config()?;
            let loaded = load_inputs(config)?;
            let tasks = filter_tasks(loaded.tasks.clone(), config.hof_filter, log)?;
            let classifier = load_classifier(config, &loaded.vocab)?;
            let starts = start_papers(&classifier, &loaded, &tasks)?;
            let ctxs = contexts(config, &loaded, &tasks)?;
            let trained = train_agent(&ctxs, &starts, &loaded.vocab, &agent)?;
            let name = agent.algo.as_str();
            trained
                .net
                .to_checkpoint(&loaded.vocab)
                .save(&out.join(format!("{name}.json")))?;
            save_training_log(&trained.log, &out.join(format!("training_log_{name}.csv")))?;
            writeln!(log, "trained {name} for {} episodes", trained.log.len())?;
        }
        Command::Evaluate(_) => {
            let method = Method::parse(&config.algo)
                .ok_or_else(|| Error::Config(format!("unknown method {:?}", config.algo)))?;
            let loaded = load_inputs(config)?;
            let tasks = filter_tasks(loaded.tasks.clone(), config.hof_filter, log)?;
            let classifier = load_classifier(config, &loaded.vocab)?;
            let results = match method {
                Method::Baseline => tasks
                    .iter()
                    .map(|t| {
                        let ranking = rank_candidates(
                            &classifier,
                            &loaded.corpus,
                            &loaded.vocab,
                            &t.candidate_ids,
                        )?;
                        let ids: Vec<&str> = ranking.iter().map(|c| c.id.as_str()).collect();
                        let reads = reads_until_target(&ids, &t.target_ids)?;
                        let ctn = crate::eval::ctn(t.n_candidates(), t.n_targets())?;
                        TaskResult::new(&t.drug, method, vec![reads], Vec::new(), t.hardness(), ctn)
                    })
                    .collect::<Result<Vec<_>>>()?,
                _ => {
                    let starts = start_papers(&classifier, &loaded, &tasks)?;
                    let ctxs = contexts(config, &loaded, &tasks)?;
                    let net = match method {
                        Method::Random => None,
                        _ => {
                            let path = out.join(format!("{}.json", method.as_str()));
                            if !path.exists() {
                                return Err(Error::Config(format!(
                                    "no checkpoint at {}; run train-agent first",
                                    path.display()
                                )));
                            }
                            Some(PolicyNet::from_checkpoint(
                                &Checkpoint::load(&path)?,
                                &loaded.vocab,
                            )?)
                        }
                    };
                    let behavior = match &net {
                        Some(net) => {
                            let algo = Algo::parse(method.as_str()).expect("agent method");
                            Behavior::Sample {
                                net,
                                weighting: config.weighting.unwrap_or(algo.default_weighting()),
                            }
                        }
                        None => Behavior::Uniform,
                    };
                    evaluate_agent(
                        &ctxs,
                        &starts,
                        &behavior,
                        method,
                        config.n_episodes,
                        config.base_seed,
                    )?
                }
            };
            write_json(
                &out.join(format!("results_{}.json", method.as_str())),
                &results,
            )?;
            emit_report(&results, out)?;
            writeln!(log, "evaluated {method} on {} tasks", results.len())?;
        }
        Command::Report => {
            let mut results: Vec<TaskResult> = Vec::new();
            for method in [
                Method::Baseline,
                Method::Reinforce,
                Method::A2c,
                Method::Random,
            ] {
                let path = out.join(format!("results_{}.json", method.as_str()));
                if path.exists() {
                    let file = std::io::BufReader::new(error::open(&path)?);
                    let part: Vec<TaskResult> = serde_json::from_reader(file)?;
                    results.extend(part);
                }
            }
            let files = emit_report(&results, out)?;
            writeln!(log, "wrote {}", files.table_txt.display())?;
        }
    }
    Ok(())
}

/// Runs one command line and returns the process exit status: 0 on
/// success, 2 for usage errors, 1 when a stage fails.
pub fn run<I, T>(argv: I, env_out: Option<OsString>, log: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = write!(log, "{e}");
            return code;
        }
    };
    let outcome = resolve_config(&cli, env_out).and_then(|config| {
        let stage = command_name(&cli.command);
        write_text(
            &config.out.join(format!("config-{stage}.txt")),
            &config.render(),
        )?;
        run_stage(&cli.command, &config, log).map_err(Failure::Stage)
    });
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(log, "error: {msg}");
            2
        }
        Err(Failure::Stage(e)) => {
            let _ = writeln!(log, "error: {e}");
            1
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let stderr = std::io::stderr();
    run(
        std::env::args_os(),
        std::env::var_os(OUT_ENV),
        &mut stderr.lock(),
    )
}
