use std::fs;
use std::path::{Path, PathBuf};

use aegis_core::augment::{self, Provenance, DEFAULT_EPSILON};
use aegis_core::graph::{ingest_labeled_edges, load_edges, load_features, write_edges};
use aegis_core::harness::{self, results_from_csv, ExperimentConfig, BASELINE};
use aegis_core::planted::{generate, PlantedConfig};
use aegis_core::predictor::{read_checkpoint, train, write_checkpoint};
use aegis_core::seed::{rng_from_seed, stage_rng};
use aegis_core::sparsify::{percolate, read_split, split_links, write_split, SplitMeta};
use aegis_core::{EvalSet, Policy, Scorer, SemanticContext, SplitConfig, TrainConfig};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "aegis", version, about = "Edge-sparsity stress tests for bipartite link prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert an edge list keyed by external ids into dense indices.
    Ingest(IngestArgs),
    /// Keep each edge independently with probability q.
    Percolate(PercolateArgs),
    /// Split edges into train/val/test positives with sampled negatives.
    Split(SplitArgs),
    /// Augment the training positives of a split directory.
    Augment(AugmentArgs),
    /// Train a link scorer on a split (optionally on augmented positives).
    Train(TrainArgs),
    /// Score a checkpoint on the val and test sets of a split.
    Eval(EvalArgs),
    /// Run every seed x policy of a config file and write the tables.
    Experiment(ExperimentArgs),
    /// Rebuild AUC and Brier tables from a results.csv.
    Report(ReportArgs),
    /// Write a planted-block fixture with block-indicator features.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct GraphInput {
    /// Edge list, one `u,v` (or tab separated) pair per line.
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    n_u: usize,
    #[arg(long)]
    n_v: usize,
}

#[derive(Args)]
struct IngestArgs {
    /// Edge list of external identifiers.
    #[arg(long)]
    input: PathBuf,
    /// Directory receiving edges.txt, u_ids.csv and v_ids.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PercolateArgs {
    #[command(flatten)]
    graph: GraphInput,
    #[arg(long)]
    q: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SplitArgs {
    #[command(flatten)]
    graph: GraphInput,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.8, 0.1, 0.1])]
    ratios: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    negative_ratio: f64,
    /// Output directory for the six edge lists and meta.toml.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyKind {
    None,
    Simple,
    DegreeAware,
    RandomEr,
    Synthetic,
    SemanticKnn,
}

#[derive(Args)]
struct AugmentArgs {
    /// Split directory; its train_pos.txt is augmented.
    #[arg(long)]
    split: PathBuf,
    #[arg(long, value_enum)]
    policy: PolicyKind,
    #[arg(long, default_value_t = 100.0)]
    phi: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = 2)]
    radius: u32,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    tau: f64,
    #[arg(long, default_value_t = 10)]
    alpha: usize,
    #[arg(long)]
    include_self: bool,
    #[arg(long)]
    u_features: Option<PathBuf>,
    #[arg(long)]
    v_features: Option<PathBuf>,
    /// Augmented edge list; a `.prov.toml` sidecar is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScorerArg {
    Dot,
    Bilinear,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    split: PathBuf,
    /// Training positives to use instead of the split's train_pos.txt.
    #[arg(long)]
    positives: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "dot")]
    scorer: ScorerArg,
    #[arg(long)]
    d_model: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    split: PathBuf,
    /// Also write `split,auc,brier` rows here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long, env = "AEGIS_OUTPUT_DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long, default_value = BASELINE)]
    baseline: String,
    /// Defaults to the directory holding results.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 200)]
    n_u: usize,
    #[arg(long, default_value_t = 200)]
    n_v: usize,
    #[arg(long, default_value_t = 8)]
    blocks: usize,
    #[arg(long, default_value_t = 0.5)]
    p_in: f64,
    #[arg(long, default_value_t = 0.0)]
    p_out: f64,
    #[arg(long, default_value_t = 0.3)]
    noise_sd: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Ingest(a) => ingest(a),
        Command::Percolate(a) => percolate_cmd(a),
        Command::Split(a) => split_cmd(a),
        Command::Augment(a) => augment_cmd(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Experiment(a) => experiment(a),
        Command::Report(a) => report(a),
        Command::Generate(a) => generate_cmd(a),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn ingest(a: IngestArgs) -> Result<()> {
    let labeled = ingest_labeled_edges(&a.input)?;
    fs::create_dir_all(&a.out)?;
    write_edges(a.out.join("edges.txt"), labeled.graph.edges())?;
    write_text(&a.out.join("u_ids.csv"), &labeled.u_ids.to_csv())?;
    write_text(&a.out.join("v_ids.csv"), &labeled.v_ids.to_csv())?;
    println!(
        "n_u = {}\nn_v = {}\nedges = {}",
        labeled.graph.n_u(),
        labeled.graph.n_v(),
        labeled.graph.num_edges()
    );
    Ok(())
}

fn percolate_cmd(a: PercolateArgs) -> Result<()> {
    let g = load_edges(&a.graph.edges, a.graph.n_u, a.graph.n_v)?.deduplicated();
    let kept = percolate(&g, a.q, &mut stage_rng(a.seed, "percolate"))?;
    write_edges(&a.out, kept.edges())?;
    println!("kept {} of {} edges", kept.num_edges(), g.num_edges());
    Ok(())
}

fn split_cmd(a: SplitArgs) -> Result<()> {
    let g = load_edges(&a.graph.edges, a.graph.n_u, a.graph.n_v)?;
    let cfg = SplitConfig {
        ratios: [a.ratios[0], a.ratios[1], a.ratios[2]],
        negative_ratio: a.negative_ratio,
        ..SplitConfig::default()
    };
    cfg.validate()?;
    let split = split_links(&g, &cfg, &mut stage_rng(a.seed, "split"))?;
    let meta = SplitMeta {
        format_version: 1,
        seed: a.seed,
        q: None,
        ratios: cfg.ratios,
        negative_ratio: cfg.negative_ratio,
        disjoint_train_ratio: cfg.disjoint_train_ratio,
        n_u: g.n_u(),
        n_v: g.n_v(),
    };
    write_split(&a.out, &split, &meta)?;
    println!(
        "train {} / val {} / test {} positives",
        split.train_pos.len(),
        split.val_pos.len(),
        split.test_pos.len()
    );
    Ok(())
}

fn augment_cmd(a: AugmentArgs) -> Result<()> {
    let (split, _) = read_split(&a.split)?;
    let policy = match a.policy {
        PolicyKind::None => Policy::None,
        PolicyKind::Simple => Policy::Simple,
        PolicyKind::DegreeAware => Policy::DegreeAware { epsilon: a.epsilon },
        PolicyKind::RandomEr => Policy::RandomEr,
        PolicyKind::Synthetic => Policy::Synthetic { radius: a.radius },
        PolicyKind::SemanticKnn => Policy::SemanticKnn {
            k: a.k,
            tau: a.tau,
            alpha: a.alpha,
            include_self: a.include_self,
        },
    };
    let semantic = match (&policy, &a.u_features, &a.v_features) {
        (Policy::SemanticKnn { k, tau, include_self, .. }, Some(pu), Some(pv)) => {
            let xu = load_features(pu, split.n_u)?;
            let xv = load_features(pv, split.n_v)?;
            Some(SemanticContext::build(&xu, &xv, *k, *tau, *include_self))
        }
        (Policy::SemanticKnn { .. }, _, _) => bail!("semantic_knn needs --u-features and --v-features"),
        _ => None,
    };
    let held_out = split.val_pos.iter().chain(&split.test_pos).copied().collect();
    let aug = augment::apply_excluding(
        &policy,
        a.phi,
        &split.train_pos,
        split.n_u,
        split.n_v,
        semantic.as_ref(),
        &held_out,
        &mut rng_from_seed(a.seed),
    )?;
    write_edges(&a.out, &aug.edges)?;
    let prov = Provenance {
        policy,
        phi: a.phi,
        seed: a.seed,
        input_edges: split.train_pos.len(),
        added: aug.added,
        shortfall: aug.shortfall,
    };
    write_text(&a.out.with_extension("prov.toml"), &prov.to_toml()?)?;
    println!("added {} edges (shortfall {})", aug.added, aug.shortfall);
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let (split, _) = read_split(&a.split)?;
    let positives = match &a.positives {
        Some(p) => load_edges(p, split.n_u, split.n_v)?.into_edges(),
        None => split.train_pos.clone(),
    };
    let defaults = TrainConfig::default();
    let cfg = TrainConfig {
        scorer: match a.scorer {
            ScorerArg::Dot => Scorer::Dot,
            ScorerArg::Bilinear => Scorer::Bilinear,
        },
        d_model: a.d_model.unwrap_or(defaults.d_model),
        epochs: a.epochs.unwrap_or(defaults.epochs),
        learning_rate: a.learning_rate.unwrap_or(defaults.learning_rate),
        batch_size: a.batch_size.unwrap_or(defaults.batch_size),
        seed: a.seed,
        ..defaults
    };
    let outcome = train(&positives, &split.train_neg, split.n_u, split.n_v, &cfg)?;
    write_checkpoint(&a.out, &outcome.model)?;
    if let Some(last) = outcome.epoch_losses.last() {
        println!("final training loss {last:.6}");
    }
    Ok(())
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let model = read_checkpoint(&a.model)?;
    let (split, _) = read_split(&a.split)?;
    let mut csv = String::from("split,auc,brier\n");
    for (name, pos, neg) in [
        ("val", &split.val_pos, &split.val_neg),
        ("test", &split.test_pos, &split.test_neg),
    ] {
        let set = EvalSet::from_classes(model.predict(pos)?, model.predict(neg)?);
        let (auc, brier) = (set.auc_roc()?, set.brier()?);
        println!("{name}: auc {auc:.4} brier {brier:.4}");
        csv.push_str(&format!("{name},{auc},{brier}\n"));
    }
    if let Some(out) = a.out {
        write_text(&out, &csv)?;
    }
    Ok(())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(s) = a.base_seed {
        cfg.base_seed = s;
    }
    if let Some(out) = a.out {
        cfg.output_dir = out;
    } else if cfg.output_dir.is_relative() {
        if let Some(dir) = a.config.parent() {
            cfg.output_dir = dir.join(&cfg.output_dir);
        }
    }
    let outcome = harness::run_experiment(&cfg, a.jobs)?;
    let failed = outcome.records.iter().filter(|r| !r.succeeded()).count();
    println!(
        "{} runs ({} failed) -> {}",
        outcome.records.len(),
        failed,
        outcome.dir.display()
    );
    let table = outcome.dir.join("auc_table.md");
    if let Ok(md) = fs::read_to_string(&table) {
        print!("{md}");
    }
    if failed > 0 {
        bail!("{failed} runs failed; see failures.csv");
    }
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let text = fs::read_to_string(&a.results).with_context(|| format!("reading {}", a.results.display()))?;
    let records = results_from_csv(&text)?;
    let out = a
        .out
        .unwrap_or_else(|| a.results.parent().map(Path::to_path_buf).unwrap_or_default());
    let files = harness::make_report(&records, &a.baseline, &out)?;
    for f in files.written {
        println!("{}", f.display());
    }
    Ok(())
}

fn generate_cmd(a: GenerateArgs) -> Result<()> {
    let data = generate(&PlantedConfig {
        n_u: a.n_u,
        n_v: a.n_v,
        blocks: a.blocks,
        p_in: a.p_in,
        p_out: a.p_out,
        noise_sd: a.noise_sd,
        seed: a.seed,
    })?;
    let files = data.write(&a.out)?;
    println!("{} edges -> {}", data.graph.num_edges(), files.edges.display());
    Ok(())
}
