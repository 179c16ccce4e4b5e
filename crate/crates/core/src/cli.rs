//! Command-line runner behind the `sagefin` binary.
//!
//! Settings resolve in three layers: built-in defaults, an optional TOML
//! file (`--config`), then flags. Every command writes `manifest.json` with
//! the resolved configuration into its output directory.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::data::{self, EllipticSchema, SyntheticConfig};
use crate::error::{Error, Result};
use crate::explain::{explain, ExplainConfig};
use crate::graph::{BipartiteGraph, NodeRef, Partition};
use crate::model::{Checkpoint, SageFinConfig};
use crate::tensor::{sigmoid, Mode};
use crate::train::{self, LogisticConfig, Split, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "sagefin", version, about = "Semi-supervised bipartite GNN fraud detection with causal edge explanations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Write a synthetic planted-fraud dataset as CSV.
    Generate,
    /// Train on a dataset and write a checkpoint plus per-epoch report.
    Train,
    /// Score a checkpoint on the test split.
    Evaluate,
    /// Explain the classification of selected nodes.
    Explain,
    /// Compare SAGE-FIN with a feature-only logistic baseline.
    Benchmark,
}

#[derive(Clone, Debug, Default, Args)]
pub struct Flags {
    /// TOML file with any of the run settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    #[arg(long, global = true)]
    pub lr: Option<f64>,
    /// Hidden and latent width.
    #[arg(long, global = true)]
    pub hidden_dim: Option<usize>,
    #[arg(long, global = true)]
    pub neg_ratio: Option<usize>,
    #[arg(long, global = true)]
    pub hops: Option<usize>,
    #[arg(long, global = true)]
    pub top_k: Option<usize>,
    /// Comma-separated nodes such as `u:12,v:7`; bare ids are wallets (v).
    #[arg(long, global = true)]
    pub targets: Option<String>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

/// Fully resolved settings of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
    pub targets: Option<String>,
    pub model: SageFinConfig,
    pub train: TrainConfig,
    pub explain: ExplainConfig,
    pub synthetic: SyntheticConfig,
    pub baseline: LogisticConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
            threads: None,
            targets: None,
            model: SageFinConfig::default(),
            train: TrainConfig::default(),
            explain: ExplainConfig::default(),
            synthetic: SyntheticConfig::default(),
            baseline: LogisticConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Defaults, then the config file, then flags. The run seed is copied
    /// into every seeded component.
    pub fn resolve(flags: &Flags) -> Result<Self> {
        let mut c = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                Self::from_toml(&text)?
            }
            None => Self::default(),
        };
        if let Some(v) = &flags.data_dir {
            c.data_dir = v.clone();
        }
        if let Some(v) = &flags.out_dir {
            c.out_dir = v.clone();
        }
        if let Some(v) = flags.seed {
            c.seed = v;
        }
        if let Some(v) = flags.epochs {
            c.train.epochs = v;
        }
        if let Some(v) = flags.lr {
            c.train.learning_rate = v;
        }
        if let Some(v) = flags.hidden_dim {
            c.model.hidden_dim = v;
            c.model.latent_dim = v;
        }
        if let Some(v) = flags.neg_ratio {
            c.model.negative_ratio = v;
        }
        if let Some(v) = flags.hops {
            c.explain.hops = v;
        }
        if let Some(v) = flags.top_k {
            c.explain.top_k = v;
        }
        if let Some(v) = &flags.targets {
            c.targets = Some(v.clone());
        }
        if let Some(v) = flags.threads {
            c.threads = Some(v);
        }
        c.model.seed = c.seed;
        c.synthetic.seed = c.seed;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        self.explain.validate()?;
        self.synthetic.validate()?;
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be positive".into()));
        }
        if let Some(t) = &self.targets {
            parse_targets(t)?;
        }
        Ok(())
    }
}

/// Parses `u:12,v:7,3`. Bare ids refer to wallets (v).
pub fn parse_targets(text: &str) -> Result<Vec<NodeRef>> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (partition, id) = match item.split_once(':') {
            Some(("u", id)) | Some(("U", id)) => (Partition::U, id),
            Some(("v", id)) | Some(("V", id)) => (Partition::V, id),
            Some(_) => return Err(Error::InvalidConfig(format!("bad target `{item}`"))),
            None => (Partition::V, item),
        };
        let index = id
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad target id `{item}`")))?;
        out.push(NodeRef { partition, index });
    }
    Ok(out)
}

/// Reproducibility record written next to every command's outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub seed: u64,
    pub config: RunConfig,
    pub outputs: Vec<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const REPORT_FILE: &str = "train_report.jsonl";
pub const METRICS_FILE: &str = "metrics.txt";
pub const METRICS_JSON_FILE: &str = "metrics.json";
pub const BENCHMARK_FILE: &str = "benchmark.txt";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";
pub const EXPLANATIONS_DIR: &str = "explanations";

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn rel(out: &Path, path: &Path) -> String {
    path.strip_prefix(out).unwrap_or(path).display().to_string()
}

fn load_raw(config: &RunConfig) -> Result<BipartiteGraph> {
    let schema = EllipticSchema::for_dir(&config.data_dir)?;
    let graph = data::load_elliptic(&config.data_dir, &schema)?;
    log::info!(
        "loaded {} transactions, {} wallets, {} edges from {}",
        graph.n_u(),
        graph.n_v(),
        graph.n_e(),
        config.data_dir.display()
    );
    Ok(graph)
}

fn load_checkpoint(config: &RunConfig) -> Result<Checkpoint> {
    Checkpoint::load(&config.out_dir.join(CHECKPOINT_FILE))
}

/// Executes one command and returns the files it wrote, relative to the
/// output directory.
pub fn run(command: Command, config: &RunConfig) -> Result<Vec<String>> {
    config.validate()?;
    if let Some(n) = config.threads {
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("global thread pool already initialized");
        }
    }
    let out = &config.out_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut outputs = Vec::new();
    match command {
        Command::Generate => {
            let (graph, truth) = data::generate_synthetic(&config.synthetic)?;
            data::export_csv(&graph, out)?;
            let gt = out.join(GROUND_TRUTH_FILE);
            data::export_ground_truth(&truth, &gt)?;
            let summary = data::DatasetSummary::of(&graph);
            let summary_path = out.join("summary.txt");
            write(&summary_path, &summary.to_table())?;
            let degrees = data::summarize_degrees(&graph);
            for p in [Partition::U, Partition::V] {
                let path = out.join(format!("degrees_{}.txt", p.tag()));
                write(&path, &degrees.to_text(p))?;
                outputs.push(rel(out, &path));
            }
            let schema = EllipticSchema::for_dir(out)?;
            outputs.extend(data::default_paths(out, &schema).iter().map(|p| rel(out, p)));
            outputs.push(data::SCHEMA_FILE.into());
            outputs.push(rel(out, &gt));
            outputs.push(rel(out, &summary_path));
        }
        Command::Train => {
            let raw = load_raw(config)?;
            let (_, _, outcome) = train::fit(&raw, &config.model, &config.train)?;
            let ckpt = out.join(CHECKPOINT_FILE);
            Checkpoint::new(outcome.model, outcome.optimizer).save(&ckpt)?;
            let report = out.join(REPORT_FILE);
            write(&report, &outcome.report.to_jsonl()?)?;
            let best = outcome.report.best();
            log::info!(
                "best epoch {} (val node F1 {:.4}, edge F1 {:.4})",
                best.epoch,
                best.val.node_f1(),
                best.val.edges.f1
            );
            outputs.push(rel(out, &ckpt));
            outputs.push(rel(out, &report));
        }
        Command::Evaluate => {
            let raw = load_raw(config)?;
            let ckpt = load_checkpoint(config)?;
            let (graph, splits) = train::prepare(&raw, config.train.split, ckpt.seed)?;
            let report = train::evaluate(&ckpt.model, &graph, &splits, Split::Test, config.train.threshold)?;
            let table = train::format_table(&[("sagefin", &report, true)]);
            print!("{table}");
            let txt = out.join(METRICS_FILE);
            let json = out.join(METRICS_JSON_FILE);
            write(&txt, &table)?;
            write(&json, &serde_json::to_string_pretty(&report)?)?;
            outputs.push(rel(out, &txt));
            outputs.push(rel(out, &json));
        }
        Command::Explain => {
            let raw = load_raw(config)?;
            let ckpt = load_checkpoint(config)?;
            let (graph, _) = train::prepare(&raw, config.train.split, ckpt.seed)?;
            let targets = match &config.targets {
                Some(t) => parse_targets(t)?,
                None => default_targets(&ckpt, &graph, 5)?,
            };
            let dir = out.join(EXPLANATIONS_DIR);
            for target in targets {
                let e = explain(&ckpt.model, &graph, target, &config.explain)?;
                log::info!(
                    "{target}: {} edges, p(y|G) {:.4}, p(y|S) {:.4}",
                    e.edges.len(),
                    e.p_full,
                    e.p_subgraph
                );
                let (dot, json) = e.write_files(&dir)?;
                outputs.push(rel(out, &dot));
                outputs.push(rel(out, &json));
            }
        }
        Command::Benchmark => {
            let raw = load_raw(config)?;
            let (graph, splits, outcome) = train::fit(&raw, &config.model, &config.train)?;
            let ours = outcome.report.test.expect("fit scores the test split");
            let baseline = train::baseline_report(&graph, &splits, Split::Test, &config.baseline)?;
            let table = train::format_table(&[("sagefin", &ours, true), ("logistic", &baseline, false)]);
            print!("{table}");
            let txt = out.join(BENCHMARK_FILE);
            write(&txt, &table)?;
            let json = out.join("benchmark.json");
            write(
                &json,
                &serde_json::to_string_pretty(&serde_json::json!({ "sagefin": ours, "logistic": baseline }))?,
            )?;
            outputs.push(rel(out, &txt));
            outputs.push(rel(out, &json));
        }
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command,
        seed: config.seed,
        config: config.clone(),
        outputs: outputs.clone(),
    };
    let path = out.join(MANIFEST_FILE);
    write(&path, &serde_json::to_string_pretty(&manifest)?)?;
    Ok(outputs)
}

/// Wallets with the highest predicted fraud probability.
fn default_targets(ckpt: &Checkpoint, graph: &BipartiteGraph, n: usize) -> Result<Vec<NodeRef>> {
    let z = ckpt.model.encode(&graph.view(), Mode::Eval)?;
    let logits = ckpt.model.node_logits(&z, Partition::V)?;
    let mut order: Vec<usize> = (0..logits.len()).collect();
    order.sort_by(|&a, &b| sigmoid(logits[b]).total_cmp(&sigmoid(logits[a])).then(a.cmp(&b)));
    Ok(order.into_iter().take(n).map(NodeRef::v).collect())
}

/// Parses arguments, runs, and maps errors to a one-line report and exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = RunConfig::resolve(&cli.flags).and_then(|config| run(cli.command, &config));
    match result {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("{}: {}", e.code(), e.to_string().replace('\n', " "));
            1
        }
    }
}
