//! End-to-end experiment orchestration.
//!
//! Layout of an experiment directory:
//!
//! ```text
//! <output_dir>/<name>/
//!     config.toml                 effective configuration
//!     results.csv                 run_seed,policy,split,auc,brier
//!     auc_table.{md,csv}          test split, paired tests vs `none`
//!     brier_table.{md,csv}
//!     auc_table_val.{md,csv}      same for the validation split
//!     brier_table_val.{md,csv}
//!     <seed>/graph.txt            percolated graph (benchmark pipeline)
//!     <seed>/split/               six edge lists + meta.toml
//!     <seed>/<policy>/            train_aug.txt, metrics.csv, model.ckpt, meta.toml
//! ```
//!
//! Within a seed every policy sees the same percolated graph, split and
//! model initialisation; only the augmentation stream differs.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::augment::{self, Policy, Provenance, SemanticContext};
use crate::error::{Error, Result};
use crate::graph::{load_edges, load_features, write_edges, BipartiteGraph, Edge};
use crate::metrics::EvalSet;
use crate::predictor::{self, write_checkpoint, TrainConfig, CHECKPOINT_VERSION};
use crate::report::{render_markdown, stat_rows_to_csv};
use crate::seed::{stage_rng, sub_seed};
use crate::sparsify::{percolate, split_links, write_split, LinkSplit, SplitConfig, SplitMeta};
use crate::stats::{aggregate, MethodRuns};

pub const CONFIG_SCHEMA: u32 = 1;
pub const BASELINE: &str = "none";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub edges: PathBuf,
    pub n_u: usize,
    pub n_v: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_features: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_features: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PercolationConfig {
    pub enabled: bool,
    pub q: f64,
    /// Re-percolate for every seed rather than sharing one draw.
    pub per_seed: bool,
}

impl Default for PercolationConfig {
    fn default() -> Self {
        PercolationConfig {
            enabled: false,
            q: 0.01,
            per_seed: true,
        }
    }
}

fn default_schema() -> u32 {
    CONFIG_SCHEMA
}
fn default_phi() -> f64 {
    100.0
}
fn default_n_seeds() -> usize {
    32
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema: u32,
    pub name: String,
    #[serde(default = "default_phi")]
    pub phi: f64,
    #[serde(default = "default_n_seeds")]
    pub n_seeds: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_true")]
    pub save_checkpoints: bool,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub percolation: PercolationConfig,
    #[serde(default)]
    pub split: SplitConfig,
    /// `train.seed` is ignored: each run derives its own.
    #[serde(default)]
    pub train: TrainConfig,
    pub policies: Vec<Policy>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses a config file; relative dataset paths resolve against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.dataset.edges);
        if let Some(p) = cfg.dataset.u_features.as_mut() {
            resolve(p);
        }
        if let Some(p) = cfg.dataset.v_features.as_mut() {
            resolve(p);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        if self.schema != CONFIG_SCHEMA {
            return err(format!("unsupported config schema {} (expected {CONFIG_SCHEMA})", self.schema));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return err(format!("experiment name {:?} must be a plain directory name", self.name));
        }
        if !self.policies.contains(&Policy::None) {
            return err("policies must include `none` (the paired-test baseline)".into());
        }
        let mut names = HashSet::new();
        for p in &self.policies {
            if !names.insert(p.name()) {
                return err(format!("policy `{}` listed twice", p.name()));
            }
            p.validate()?;
        }
        if self.n_seeds < 2 {
            return err(format!("n_seeds must be >= 2, got {}", self.n_seeds));
        }
        if !(self.phi >= 1.0 && self.phi.is_finite()) {
            return err(format!("phi must be >= 1, got {}", self.phi));
        }
        if self.percolation.enabled && !(self.percolation.q > 0.0 && self.percolation.q <= 1.0) {
            return err(format!("percolation q must lie in (0, 1], got {}", self.percolation.q));
        }
        let wants_features = self.policies.iter().any(|p| matches!(p, Policy::SemanticKnn { .. }));
        if wants_features && (self.dataset.u_features.is_none() || self.dataset.v_features.is_none()) {
            return err("semantic_knn needs dataset.u_features and dataset.v_features".into());
        }
        self.split.validate()?;
        self.train.validate()
    }

    /// Hex SHA-256 prefix of the effective configuration.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().take(8).fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        }))
    }

    pub fn experiment_dir(&self) -> PathBuf {
        self.output_dir.join(&self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalSplit {
    Val,
    Test,
}

impl EvalSplit {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalSplit::Val => "val",
            EvalSplit::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "val" => Some(EvalSplit::Val),
            "test" => Some(EvalSplit::Test),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub auc: f64,
    pub brier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub policy: String,
    pub val: Option<SplitMetrics>,
    pub test: Option<SplitMetrics>,
    pub added: usize,
    pub shortfall: usize,
    pub duration_ms: u64,
    pub config_hash: String,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

/// One row of `results.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub run_seed: u64,
    pub policy: String,
    pub split: EvalSplit,
    pub auc: f64,
    pub brier: f64,
}

pub const RESULTS_HEADER: &str = "run_seed,policy,split,auc,brier";

pub fn metric_records(runs: &[RunRecord]) -> Vec<MetricRecord> {
    let mut out = Vec::new();
    for r in runs.iter().filter(|r| r.succeeded()) {
        for (split, m) in [(EvalSplit::Val, r.val), (EvalSplit::Test, r.test)] {
            if let Some(m) = m {
                out.push(MetricRecord {
                    run_seed: r.seed,
                    policy: r.policy.clone(),
                    split,
                    auc: m.auc,
                    brier: m.brier,
                });
            }
        }
    }
    out
}

pub fn results_to_csv(records: &[MetricRecord]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{},{},{},{},{}", r.run_seed, r.policy, r.split.as_str(), r.auc, r.brier);
    }
    out
}

pub fn results_from_csv(text: &str) -> Result<Vec<MetricRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == RESULTS_HEADER => {}
        _ => return Err(Error::Shape(format!("expected header `{RESULTS_HEADER}`"))),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: &str| Error::Shape(format!("results line {}: {m}", i + 1));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad("expected 5 fields"));
        }
        out.push(MetricRecord {
            run_seed: f[0].parse().map_err(|_| bad("bad seed"))?,
            policy: f[1].to_owned(),
            split: EvalSplit::parse(f[2]).ok_or_else(|| bad("split must be val or test"))?,
            auc: f[3].parse().map_err(|_| bad("bad auc"))?,
            brier: f[4].parse().map_err(|_| bad("bad brier"))?,
        });
    }
    Ok(out)
}

/// Files written by [`make_report`].
#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub written: Vec<PathBuf>,
}

/// Emits AUC and Brier tables (CSV + Markdown) for the test split and, when
/// present, the validation split. Policies appear in order of first
/// occurrence in `records`.
pub fn make_report(records: &[MetricRecord], baseline: &str, out_dir: impl AsRef<Path>) -> Result<ReportFiles> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut order: Vec<&str> = Vec::new();
    for r in records {
        if !order.contains(&r.policy.as_str()) {
            order.push(&r.policy);
        }
    }
    let mut written = Vec::new();
    for split in [EvalSplit::Test, EvalSplit::Val] {
        let in_split: Vec<&MetricRecord> = records.iter().filter(|r| r.split == split).collect();
        if in_split.is_empty() {
            continue;
        }
        let suffix = match split {
            EvalSplit::Test => "",
            EvalSplit::Val => "_val",
        };
        let other = match split {
            EvalSplit::Test => "Validation-split tables: `auc_table_val.md`, `brier_table_val.md`.",
            EvalSplit::Val => "Headline tables (test split): `auc_table.md`, `brier_table.md`.",
        };
        for (metric, label, pick) in [
            ("auc", "AUC", (|r: &MetricRecord| r.auc) as fn(&MetricRecord) -> f64),
            ("brier", "Brier", |r: &MetricRecord| r.brier),
        ] {
            let runs: Vec<MethodRuns> = order
                .iter()
                .map(|&p| MethodRuns {
                    method: p.to_owned(),
                    values: in_split
                        .iter()
                        .filter(|r| r.policy == p)
                        .map(|r| (r.run_seed, pick(r)))
                        .collect::<BTreeMap<_, _>>(),
                })
                .collect();
            let rows = aggregate(&runs, baseline)?;
            let footer = format!(
                "_Evaluated on the {} split. Two-tailed paired t-tests against `{}` (t = baseline − method), \
                 n = {}. Sig.: \\* p<.05, \\*\\* p<.01, \\*\\*\\* p<.001. {other}_",
                split.as_str(),
                baseline,
                rows[0].n,
            );
            let md_path = out_dir.join(format!("{metric}_table{suffix}.md"));
            let csv_path = out_dir.join(format!("{metric}_table{suffix}.csv"));
            fs::write(&md_path, render_markdown(&rows, label, Some(&footer))).map_err(|e| Error::io(&md_path, e))?;
            fs::write(&csv_path, stat_rows_to_csv(&rows)).map_err(|e| Error::io(&csv_path, e))?;
            written.push(md_path);
            written.push(csv_path);
        }
    }
    Ok(ReportFiles { written })
}

/// Edges the augmentation introduced that were not already training
/// positives and that collide with held-out positives. Empty means no
/// leakage.
pub fn leakage(train_pos: &[Edge], augmented: &[Edge], held_out: impl IntoIterator<Item = Edge>) -> Vec<Edge> {
    let original: HashSet<Edge> = train_pos.iter().copied().collect();
    let new: HashSet<Edge> = augmented.iter().copied().filter(|e| !original.contains(e)).collect();
    let mut hits: Vec<Edge> = held_out.into_iter().filter(|e| new.contains(e)).collect();
    hits.sort_unstable();
    hits.dedup();
    hits
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RunMeta {
    format_version: u32,
    seed: u64,
    policy: Policy,
    phi: f64,
    augment_seed: u64,
    train_seed: u64,
    input_edges: usize,
    added: usize,
    shortfall: usize,
    duration_ms: u64,
    config_hash: String,
    checkpoint_version: u32,
    scorer: predictor::Scorer,
    d_model: usize,
    disjoint_train_ratio: f64,
}

type PreparedSeed = (u64, Result<SeedData>);

struct SeedData {
    seed: u64,
    split: LinkSplit,
}

fn augment_tag(policy: &Policy) -> String {
    format!("augment:{}", policy.name())
}

fn prepare_seed(
    cfg: &ExperimentConfig,
    base: &BipartiteGraph,
    shared: Option<&BipartiteGraph>,
    seed: u64,
    seed_dir: &Path,
) -> Result<SeedData> {
    fs::create_dir_all(seed_dir).map_err(|e| Error::io(seed_dir, e))?;
    let graph = if cfg.percolation.enabled {
        let g = match shared {
            Some(g) => g.clone(),
            None => percolate(base, cfg.percolation.q, &mut stage_rng(seed, "percolate"))?,
        };
        write_edges(seed_dir.join("graph.txt"), g.edges())?;
        g
    } else {
        base.clone()
    };
    let split = split_links(&graph, &cfg.split, &mut stage_rng(seed, "split"))?;
    let meta = SplitMeta {
        format_version: 1,
        seed,
        q: cfg.percolation.enabled.then_some(cfg.percolation.q),
        ratios: cfg.split.ratios,
        negative_ratio: cfg.split.negative_ratio,
        disjoint_train_ratio: cfg.split.disjoint_train_ratio,
        n_u: graph.n_u(),
        n_v: graph.n_v(),
    };
    write_split(seed_dir.join("split"), &split, &meta)?;
    Ok(SeedData { seed, split })
}

fn evaluate(model: &predictor::TrainedModel, pos: &[Edge], neg: &[Edge]) -> Result<SplitMetrics> {
    let set = EvalSet::from_classes(model.predict(pos)?, model.predict(neg)?);
    Ok(SplitMetrics {
        auc: set.auc_roc()?,
        brier: set.brier()?,
    })
}

struct RunOutput {
    val: SplitMetrics,
    test: SplitMetrics,
    added: usize,
    shortfall: usize,
}

#[allow(clippy::too_many_arguments)]
fn run_policy(
    cfg: &ExperimentConfig,
    data: &SeedData,
    policy: &Policy,
    semantic: Option<&SemanticContext>,
    seed_dir: &Path,
    config_hash: &str,
    started: Instant,
) -> Result<RunOutput> {
    let split = &data.split;
    let augment_seed = sub_seed(data.seed, &augment_tag(policy));
    let held_out: HashSet<Edge> = split.val_pos.iter().chain(&split.test_pos).copied().collect();
    let aug = augment::apply_excluding(
        policy,
        cfg.phi,
        &split.train_pos,
        split.n_u,
        split.n_v,
        semantic,
        &held_out,
        &mut crate::seed::rng_from_seed(augment_seed),
    )?;
    let leaked = leakage(&split.train_pos, &aug.edges, held_out.iter().copied());
    if !leaked.is_empty() {
        return Err(Error::Config(format!(
            "augmentation produced {} held-out positives",
            leaked.len()
        )));
    }

    let train_cfg = TrainConfig {
        seed: sub_seed(data.seed, "train"),
        ..cfg.train.clone()
    };
    let outcome = predictor::train(&aug.edges, &split.train_neg, split.n_u, split.n_v, &train_cfg)?;
    let val = evaluate(&outcome.model, &split.val_pos, &split.val_neg)?;
    let test = evaluate(&outcome.model, &split.test_pos, &split.test_neg)?;

    let final_dir = seed_dir.join(policy.name());
    let tmp_dir = seed_dir.join(format!(".{}.partial", policy.name()));
    if tmp_dir.exists() {
        fs::remove_dir_all(&tmp_dir).map_err(|e| Error::io(&tmp_dir, e))?;
    }
    fs::create_dir_all(&tmp_dir).map_err(|e| Error::io(&tmp_dir, e))?;
    write_edges(tmp_dir.join("train_aug.txt"), &aug.edges)?;
    let provenance = Provenance {
        policy: policy.clone(),
        phi: cfg.phi,
        seed: augment_seed,
        input_edges: split.train_pos.len(),
        added: aug.added,
        shortfall: aug.shortfall,
    };
    write_toml(&tmp_dir.join("train_aug.prov.toml"), &provenance)?;
    let mut metrics = String::from("split,auc,brier\n");
    for (name, m) in [("val", val), ("test", test)] {
        let _ = writeln!(metrics, "{name},{},{}", m.auc, m.brier);
    }
    let metrics_path = tmp_dir.join("metrics.csv");
    fs::write(&metrics_path, metrics).map_err(|e| Error::io(&metrics_path, e))?;
    let mut losses = String::from("epoch,loss\n");
    for (i, l) in outcome.epoch_losses.iter().enumerate() {
        let _ = writeln!(losses, "{i},{l}");
    }
    let loss_path = tmp_dir.join("losses.csv");
    fs::write(&loss_path, losses).map_err(|e| Error::io(&loss_path, e))?;
    if cfg.save_checkpoints {
        write_checkpoint(tmp_dir.join("model.ckpt"), &outcome.model)?;
    }
    let meta = RunMeta {
        format_version: 1,
        seed: data.seed,
        policy: policy.clone(),
        phi: cfg.phi,
        augment_seed,
        train_seed: train_cfg.seed,
        input_edges: split.train_pos.len(),
        added: aug.added,
        shortfall: aug.shortfall,
        duration_ms: started.elapsed().as_millis() as u64,
        config_hash: config_hash.to_owned(),
        checkpoint_version: CHECKPOINT_VERSION,
        scorer: train_cfg.scorer,
        d_model: train_cfg.d_model,
        disjoint_train_ratio: cfg.split.disjoint_train_ratio,
    };
    write_toml(&tmp_dir.join("meta.toml"), &meta)?;
    if final_dir.exists() {
        fs::remove_dir_all(&final_dir).map_err(|e| Error::io(&final_dir, e))?;
    }
    fs::rename(&tmp_dir, &final_dir).map_err(|e| Error::io(&final_dir, e))?;

    Ok(RunOutput {
        val,
        test,
        added: aug.added,
        shortfall: aug.shortfall,
    })
}

fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = toml::to_string(value).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub dir: PathBuf,
    pub config_hash: String,
    /// Sorted by (policy order in the config, seed).
    pub records: Vec<RunRecord>,
}

/// Percolate → split → augment (train only) → train → evaluate, for every
/// seed and policy.
pub fn run_benchmark_pipeline(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentOutcome> {
    if !cfg.percolation.enabled {
        return Err(Error::Config("the benchmark pipeline requires percolation.enabled = true".into()));
    }
    run_pipeline(cfg, jobs)
}

/// Like [`run_benchmark_pipeline`] but on the graph as given, without edge
/// dropping.
pub fn run_case_study_pipeline(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentOutcome> {
    if cfg.percolation.enabled {
        return Err(Error::Config("the case-study pipeline requires percolation.enabled = false".into()));
    }
    run_pipeline(cfg, jobs)
}

/// Dispatches on `percolation.enabled`.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentOutcome> {
    run_pipeline(cfg, jobs)
}

fn build_semantic_contexts(cfg: &ExperimentConfig) -> Result<Vec<Option<SemanticContext>>> {
    let mut features = None;
    cfg.policies
        .iter()
        .map(|p| match *p {
            Policy::SemanticKnn { k, tau, include_self, .. } => {
                if features.is_none() {
                    let (Some(pu), Some(pv)) = (&cfg.dataset.u_features, &cfg.dataset.v_features) else {
                        return Err(Error::Config("semantic_knn needs feature files".into()));
                    };
                    features = Some((load_features(pu, cfg.dataset.n_u)?, load_features(pv, cfg.dataset.n_v)?));
                }
                let (xu, xv) = features.as_ref().unwrap();
                Ok(Some(SemanticContext::build(xu, xv, k, tau, include_self)))
            }
            _ => Ok(None),
        })
        .collect()
}

fn run_pipeline(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| run_pipeline_inner(cfg))
}

fn run_pipeline_inner(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let exp_dir = cfg.experiment_dir();
    fs::create_dir_all(&exp_dir).map_err(|e| Error::io(&exp_dir, e))?;
    let config_text = cfg.to_toml()?;
    let config_path = exp_dir.join("config.toml");
    fs::write(&config_path, &config_text).map_err(|e| Error::io(&config_path, e))?;
    let config_hash = cfg.hash()?;

    let mut graph = load_edges(&cfg.dataset.edges, cfg.dataset.n_u, cfg.dataset.n_v)?;
    if cfg.percolation.enabled {
        graph = graph.deduplicated();
    }
    let shared = if cfg.percolation.enabled && !cfg.percolation.per_seed {
        Some(percolate(&graph, cfg.percolation.q, &mut stage_rng(cfg.base_seed, "percolate"))?)
    } else {
        None
    };
    let semantic = build_semantic_contexts(cfg)?;

    let seeds: Vec<u64> = (0..cfg.n_seeds as u64).map(|i| cfg.base_seed + i).collect();
    let prepared: Vec<PreparedSeed> = seeds
        .par_iter()
        .map(|&seed| {
            let dir = exp_dir.join(seed.to_string());
            (seed, prepare_seed(cfg, &graph, shared.as_ref(), seed, &dir))
        })
        .collect();

    let jobs: Vec<(usize, &Policy, &PreparedSeed)> = prepared
        .iter()
        .flat_map(|s| cfg.policies.iter().enumerate().map(move |(i, p)| (i, p, s)))
        .collect();
    let mut records: Vec<(usize, RunRecord)> = jobs
        .par_iter()
        .map(|&(idx, policy, (seed, data))| {
            let started = Instant::now();
            let result = match data {
                Ok(data) => {
                    let dir = exp_dir.join(seed.to_string());
                    run_policy(cfg, data, policy, semantic[idx].as_ref(), &dir, &config_hash, started)
                }
                Err(e) => Err(Error::Config(format!("seed preparation failed: {e}"))),
            };
            let duration_ms = started.elapsed().as_millis() as u64;
            let record = match result {
                Ok(out) => RunRecord {
                    seed: *seed,
                    policy: policy.name().to_owned(),
                    val: Some(out.val),
                    test: Some(out.test),
                    added: out.added,
                    shortfall: out.shortfall,
                    duration_ms,
                    config_hash: config_hash.clone(),
                    error: None,
                },
                Err(e) => {
                    log::error!("run seed={seed} policy={} failed: {e}", policy.name());
                    RunRecord {
                        seed: *seed,
                        policy: policy.name().to_owned(),
                        val: None,
                        test: None,
                        added: 0,
                        shortfall: 0,
                        duration_ms,
                        config_hash: config_hash.clone(),
                        error: Some(e.to_string()),
                    }
                }
            };
            (idx, record)
        })
        .collect();
    records.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.seed.cmp(&b.1.seed)));
    let records: Vec<RunRecord> = records.into_iter().map(|(_, r)| r).collect();

    let metrics = metric_records(&records);
    let results_path = exp_dir.join("results.csv");
    fs::write(&results_path, results_to_csv(&metrics)).map_err(|e| Error::io(&results_path, e))?;

    let failures: Vec<&RunRecord> = records.iter().filter(|r| !r.succeeded()).collect();
    let failures_path = exp_dir.join("failures.csv");
    if failures.is_empty() {
        let _ = fs::remove_file(&failures_path);
    } else {
        let mut text = String::from("run_seed,policy,error\n");
        for f in &failures {
            let msg = f.error.as_deref().unwrap_or_default().replace([',', '\n'], ";");
            let _ = writeln!(text, "{},{},{msg}", f.seed, f.policy);
        }
        fs::write(&failures_path, text).map_err(|e| Error::io(&failures_path, e))?;
    }

    // paired tables need a seed to have succeeded for every policy
    let complete: Vec<u64> = seeds
        .iter()
        .copied()
        .filter(|s| records.iter().filter(|r| r.seed == *s).all(RunRecord::succeeded))
        .collect();
    if complete.len() < seeds.len() {
        log::warn!(
            "{} of {} seeds had failed runs and are left out of the tables",
            seeds.len() - complete.len(),
            seeds.len()
        );
    }
    let reportable: Vec<MetricRecord> = metrics.into_iter().filter(|m| complete.contains(&m.run_seed)).collect();
    if complete.len() >= 2 {
        make_report(&reportable, BASELINE, &exp_dir)?;
    } else {
        log::warn!("fewer than two complete seeds; no tables written");
    }

    Ok(ExperimentOutcome {
        dir: exp_dir,
        config_hash,
        records,
    })
}
