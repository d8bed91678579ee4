use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dppred::data::{
    load_csv, minmax_normalize_labels, split_train_test, Dataset, LabelKind, RawTable, Schema, SplitRatio,
};
use dppred::model::{evaluate, evaluate_model, predict, predictions_csv, train_with_report, Metrics};
use dppred::stratify::{predict_stratified, train_stratified, LdaConfig};
use dppred::synth::{generate_medical, generate_subtyped_regression, SynthConfig, SynthData};
use dppred::{derive_seed, DppredModel, HyperParams, SelectionMethod, StratifiedModel, StratifyConfig, TaskKind};

/// Seed stream for the LDA chain, kept apart from the tree seed.
const LDA_STREAM: u64 = 0x1da;
/// Seed stream for the sweep's train/test split.
const SPLIT_STREAM: u64 = 0x5917;

#[derive(Parser)]
#[command(name = "dppred", version, about = "Discriminative pattern-based prediction")]
struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "DPPRED_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write it to --out.
    Train(TrainArgs),
    /// Predict every row of a CSV with a trained model.
    Predict(PredictArgs),
    /// Score a trained model on labeled data.
    Evaluate(EvaluateArgs),
    /// Generate synthetic train/test CSVs plus a schema.
    Synth(SynthArgs),
    /// Train a stratified model: global patterns, LDA clusters, local patterns.
    StratifyTrain(StratifyTrainArgs),
    /// Predict with a stratified model; also reports each row's cluster.
    StratifyPredict(PredictArgs),
    /// Per-cluster variable frequency report of a stratified model.
    Importance(ImportanceArgs),
    /// Train once per parameter value and report train and test metrics.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Forward,
    Lasso,
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    Classification,
    Regression,
}

#[derive(Args)]
struct DataArgs {
    /// Training CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Schema file naming the label task and every column's kind.
    #[arg(long)]
    schema: PathBuf,
}

#[derive(Args, Clone)]
struct HyperArgs {
    /// Number of random trees T.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    trees: u64,
    /// Maximum tree depth D.
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u64).range(1..))]
    depth: u64,
    /// Minimum tree-bag size sigma.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    min_bag: u64,
    /// Patterns to select; defaults to 20 for classification, 30 for regression.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: Option<u64>,
    #[arg(long, value_enum, default_value_t = Method::Forward)]
    method: Method,
    /// Must agree with the schema's label_task when given.
    #[arg(long, value_enum)]
    task: Option<Task>,
    /// Features sampled per split; defaults to ceil(sqrt(d)).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    feature_candidates: Option<u64>,
    /// Thresholds sampled per feature.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    threshold_candidates: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl HyperArgs {
    fn resolve(&self, schema: &Schema) -> Result<HyperParams> {
        let task = TaskKind::for_labels(schema.label_kind);
        match (self.task, task) {
            (Some(Task::Classification), TaskKind::Regression) | (Some(Task::Regression), TaskKind::Classification) => {
                bail!("--task disagrees with the schema's label_task ({})", task.as_str())
            }
            _ => {}
        }
        let mut hp = HyperParams::for_task(task);
        hp.tree.n_trees = self.trees as usize;
        hp.tree.max_depth = self.depth as usize;
        hp.tree.min_bag = self.min_bag as usize;
        hp.tree.n_feature_candidates = self.feature_candidates.map(|v| v as usize);
        hp.tree.n_threshold_candidates = self.threshold_candidates as usize;
        hp.tree.seed = self.seed;
        if let Some(k) = self.k {
            hp.k = k as usize;
        }
        hp.method = match self.method {
            Method::Forward => SelectionMethod::Forward,
            Method::Lasso => SelectionMethod::Lasso,
        };
        hp.validate()?;
        Ok(hp)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Model file to write.
    #[arg(long)]
    out: PathBuf,
    /// Optional CSV of the selection trace.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// CSV with the training columns; the label column is optional.
    #[arg(long)]
    data: PathBuf,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Labeled CSV with the training columns.
    #[arg(long)]
    data: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    /// Three-rule disease data over age, gender and two lab tests.
    Medical,
    /// Regression data drawn from hidden subtypes with distinct rules.
    Subtyped,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value_t = SynthKind::Medical)]
    kind: SynthKind,
    /// Directory receiving train.csv, test.csv and schema.txt.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    n_train: u64,
    #[arg(long, default_value_t = 50_000)]
    n_test: u64,
    /// Fraction of training labels flipped (medical only).
    #[arg(long, default_value_t = 0.001)]
    noise: f64,
    /// Hidden subtype count (subtyped only).
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    subtypes: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct StratifyTrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: PathBuf,
    /// Global pattern count K_g.
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u64).range(1..))]
    k_global: u64,
    /// Local pattern count per cluster K_l.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    k_local: u64,
    /// Cluster count G.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    clusters: u64,
    /// LDA document-topic prior; defaults to 50 / G.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    gibbs_iterations: u64,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    fold_in_iterations: u64,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args)]
struct ImportanceArgs {
    /// Stratified model file.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum SweepParam {
    K,
    Trees,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Held-out CSV; without it the training data is split 2:1.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, value_enum)]
    param: SweepParam,
    /// Comma-separated positive integers.
    #[arg(long, value_parser = parse_values)]
    values: Values,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Clone)]
struct Values(Vec<usize>);

fn parse_values(s: &str) -> std::result::Result<Values, String> {
    let values = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| match t.parse::<usize>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(format!("'{t}' is not a positive integer")),
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err("at least one value is required".into());
    }
    Ok(Values(values))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Loads training data; real labels are min-max normalized.
fn load_training(args: &DataArgs) -> Result<(Schema, Dataset)> {
    let schema = Schema::from_file(&args.schema)?;
    let mut ds = load_csv(&args.data, &schema)?;
    if ds.label_kind == LabelKind::Real {
        ds = minmax_normalize_labels(&ds)?;
    }
    Ok((schema, ds))
}

fn metric_line(label: &str, m: &Metrics) -> String {
    format!("{label} {}: {:.6}", m.name(), m.primary())
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let (schema, ds) = load_training(&args.data)?;
    let hp = args.hyper.resolve(&schema)?;
    let (model, report) = train_with_report(&ds, &hp)?;
    model.save(&args.out)?;
    if let Some(trace) = &args.trace {
        fs::write(trace, report.selection.trace.to_csv()).with_context(|| format!("writing {}", trace.display()))?;
    }
    println!("{} patterns selected from {} candidates", model.patterns.len(), report.pool_size);
    for p in &model.patterns {
        println!("  {}", p.render(&model.feature_names));
    }
    println!("{}", metric_line("training", &evaluate_model(&model, &ds)?));
    Ok(())
}

fn encode_with(encoding_owner: &str, raw: &RawTable, encode: impl Fn(&RawTable) -> dppred::error::Result<Dataset>) -> Result<Dataset> {
    encode(raw).with_context(|| format!("encoding data for the {encoding_owner}"))
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let model = DppredModel::load(&args.model)?;
    let raw = RawTable::from_path(&args.data)?;
    let ds = encode_with("model", &raw, |r| model.encode(r))?;
    let preds = predict(&model, &ds)?;
    write_output(args.out.as_deref(), &predictions_csv(&model, &preds))
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let model = DppredModel::load(&args.model)?;
    let raw = RawTable::from_path(&args.data)?;
    let ds = encode_with("model", &raw, |r| model.encode(r))?;
    let m = evaluate_model(&model, &ds)?;
    println!("metric,value");
    println!("{},{}", m.name(), m.primary());
    match &m {
        Metrics::Classification { confusion, .. } => {
            for (t, row) in confusion.iter().enumerate() {
                for (p, count) in row.iter().enumerate() {
                    let name = |i: usize| model.class_name(i).map_or_else(|| i.to_string(), str::to_string);
                    println!("confusion[{}][{}],{count}", name(t), name(p));
                }
            }
        }
        Metrics::Regression { residuals, .. } => {
            println!("residual_mean,{}", residuals.mean);
            println!("residual_mean_abs,{}", residuals.mean_abs);
            println!("residual_min,{}", residuals.min);
            println!("residual_max,{}", residuals.max);
        }
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        n_train: args.n_train as usize,
        n_test: args.n_test as usize,
        noise_rate: args.noise,
        seed: args.seed,
    };
    let data: SynthData = match args.kind {
        SynthKind::Medical => generate_medical(&cfg)?.data,
        SynthKind::Subtyped => generate_subtyped_regression(&cfg, args.subtypes as usize)?.data,
    };
    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let files = [
        ("train.csv", data.train_raw.to_csv()?),
        ("test.csv", data.test_raw.to_csv()?),
        ("schema.txt", data.schema.to_text()),
    ];
    for (name, text) in files {
        let path = args.out_dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("wrote train.csv ({} rows), test.csv ({} rows), schema.txt to {}", cfg.n_train, cfg.n_test, args.out_dir.display());
    Ok(())
}

fn cmd_stratify_train(args: StratifyTrainArgs) -> Result<()> {
    let (schema, ds) = load_training(&args.data)?;
    let mut hp = args.hyper.resolve(&schema)?;
    hp.k = args.k_global as usize;
    let cfg = StratifyConfig {
        k_global: args.k_global as usize,
        k_local: args.k_local as usize,
        clusters: args.clusters as usize,
        lda: LdaConfig {
            alpha: args.alpha,
            beta: args.beta,
            iterations: args.gibbs_iterations as usize,
            fold_in_iterations: args.fold_in_iterations as usize,
            seed: derive_seed(args.hyper.seed, LDA_STREAM),
        },
    };
    let model = train_stratified(&ds, &hp, &cfg)?;
    model.save(&args.out)?;
    let mut sizes = vec![0usize; cfg.clusters];
    for &c in &model.cluster_assignments {
        sizes[c] += 1;
    }
    println!("{} global patterns", model.global_patterns.len());
    for p in &model.global_patterns {
        println!("  {}", p.render(&model.feature_names));
    }
    for (c, local) in model.local_patterns.iter().enumerate() {
        println!("cluster {c}: {} instances, {} local patterns", sizes[c], local.len());
        for p in local {
            println!("  {}", p.render(&model.feature_names));
        }
    }
    let preds: Vec<f64> = predict_stratified(&model, &ds)?.iter().map(|p| p.prediction.value).collect();
    println!("{}", metric_line("training", &evaluate(&preds, &ds.original_labels(), model.task())?));
    Ok(())
}

fn cmd_stratify_predict(args: PredictArgs) -> Result<()> {
    let model = StratifiedModel::load(&args.model)?;
    let raw = RawTable::from_path(&args.data)?;
    let ds = encode_with("stratified model", &raw, |r| model.encode(r))?;
    let preds = predict_stratified(&model, &ds)?;
    let mut out = String::from("row_index,prediction,cluster\n");
    for (i, p) in preds.iter().enumerate() {
        out.push_str(&format!("{i},{},{}\n", p.prediction.value, p.cluster));
    }
    write_output(args.out.as_deref(), &out)
}

fn cmd_importance(args: ImportanceArgs) -> Result<()> {
    let model = StratifiedModel::load(&args.model)?;
    write_output(args.out.as_deref(), &model.importance_csv())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let (schema, ds) = load_training(&args.data)?;
    let base = args.hyper.resolve(&schema)?;
    let (train_ds, test_ds) = match &args.test {
        Some(path) => {
            let raw = RawTable::from_path(path)?;
            let enc = ds.encoding.as_ref().expect("CSV-loaded data carries its encoding");
            let mut test = enc.encode(&raw, Default::default())?;
            if let Some(bounds) = ds.label_bounds {
                test.label_bounds = Some(bounds);
                test.y = test.y.iter().map(|v| (v - bounds.0) / (bounds.1 - bounds.0)).collect();
            }
            (ds, test)
        }
        None => split_train_test(&ds, SplitRatio::two_thirds(), derive_seed(args.hyper.seed, SPLIT_STREAM))?,
    };
    let mut out = String::from("value,train_metric,test_metric\n");
    for &v in &args.values.0 {
        let mut hp = base.clone();
        match args.param {
            SweepParam::K => hp.k = v,
            SweepParam::Trees => hp.tree.n_trees = v,
        }
        let (model, _) = train_with_report(&train_ds, &hp)?;
        let train_metric = evaluate_model(&model, &train_ds)?.primary();
        let test_metric = evaluate_model(&model, &test_ds)?.primary();
        log::info!("{} = {v}: train {train_metric}, test {test_metric}", if args.param == SweepParam::K { "k" } else { "T" });
        out.push_str(&format!("{v},{train_metric},{test_metric}\n"));
    }
    write_output(args.out.as_deref(), &out)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Synth(a) => cmd_synth(a),
        Command::StratifyTrain(a) => cmd_stratify_train(a),
        Command::StratifyPredict(a) => cmd_stratify_predict(a),
        Command::Importance(a) => cmd_importance(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

/// Joins the error chain, skipping causes a parent message already embeds.
fn render_chain(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.ends_with(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // Clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", render_chain(&e));
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_parse_and_reject() {
        assert_eq!(parse_values("3, 5,,8").unwrap().0, vec![3, 5, 8]);
        assert!(parse_values("").is_err());
        assert!(parse_values("0").is_err());
        assert!(parse_values("2,-1").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
