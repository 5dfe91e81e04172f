//! Command-line front end. [`run_cli`] parses arguments, runs one protocol,
//! writes its CSV and prints a short summary; it returns the exit status
//! instead of exiting so it can be driven in-process.

use std::ffi::OsString;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Once;

use clap::{Args, Parser, Subcommand};
use log::warn;

use crate::data::{RatingScale, Sign, SocialGraph};
use crate::error::{Error, Result};
use crate::experiments::batch::{batch_sizes_from_fractions, batch_study};
use crate::experiments::consistency::{consistency_eval, ConsistencyConfig, METRIC_NAMES};
use crate::experiments::grid::{grid_search, GridAxis};
use crate::experiments::majority::majority_vote_eval;
use crate::experiments::split::{cold_start_split, split_ratings};
use crate::experiments::synth::{synth_generate, SyntheticSpec};
use crate::experiments::tradeoff::distrust_tradeoff_run;
use crate::experiments::{evaluate_predictor, ResultTable};
use crate::io::dataset::{
    build_graph, load_ratings_with, numbered_ids, parse_social, with_file, write_ratings,
    write_social, IdPolicy,
};
use crate::io::{load_dataset, load_model, save_model, write_table, Dataset, IdMap, SocialSource};
use crate::registry::{Family, FactorPredictor, MethodConfig, OptimizerKind, Registry, TrainingData};
use crate::params::Hyperparams;
use crate::triplets::{extract_triplets, StoreMode};

pub const THREADS_ENV: &str = "TRUSTFACTOR_THREADS";

#[derive(Debug, Parser)]
#[command(name = "trustfactor", version, about = "Trust/distrust-aware matrix factorization")]
struct Cli {
    /// Write outputs without printing a summary.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

struct Console {
    quiet: bool,
}

impl Console {
    fn say(&self, message: impl std::fmt::Display) {
        if !self.quiet {
            println!("{message}");
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split ratings, fit one method, report test accuracy and save the model.
    Fit(FitArgs),
    /// Score a saved model on its held-out ratings or another file.
    Eval(EvalArgs),
    /// Write repeated random train/test splits.
    Split(SplitArgs),
    /// Validation RMSE over (lambda_s, lambda_v) and (lambda_s, lambda_u).
    Grid(GridArgs),
    /// Accuracy on users whose ratings are all withheld.
    Coldstart(ColdstartArgs),
    /// Alignment of declared relations with rating similarity.
    Consistency(ConsistencyArgs),
    /// Predict held-out relation signs by majority vote.
    MajorityVote(MajorityArgs),
    /// Sweep distrust fractions on a thinned trust graph.
    Tradeoff(TradeoffArgs),
    /// Generate a planted synthetic dataset.
    Synth(SynthArgs),
    /// Gradient descent against mini-batch SGD at several batch sizes.
    BatchStudy(BatchArgs),
}

#[derive(Debug, Clone, Args)]
struct SocialArgs {
    /// Signed relations: `from<TAB>to<TAB>1|-1`.
    #[arg(long)]
    social: Option<PathBuf>,
    /// Unsigned trust relations: `from<TAB>to`.
    #[arg(long, conflicts_with = "social")]
    trust: Option<PathBuf>,
    /// Unsigned distrust relations: `from<TAB>to`.
    #[arg(long, conflicts_with = "social", requires = "trust")]
    distrust: Option<PathBuf>,
}

impl SocialArgs {
    fn source(&self) -> SocialSource<'_> {
        match (&self.social, &self.trust) {
            (Some(s), _) => SocialSource::Signed(s),
            (None, Some(t)) => SocialSource::Split {
                trust: t,
                distrust: self.distrust.as_deref(),
            },
            (None, None) => SocialSource::None,
        }
    }
}

#[derive(Debug, Clone, Args)]
struct DataArgs {
    /// Ratings: `user<TAB>item<TAB>rating`.
    #[arg(long)]
    ratings: PathBuf,
    #[command(flatten)]
    social: SocialArgs,
    #[arg(long, default_value_t = 1.0)]
    rating_min: f64,
    #[arg(long, default_value_t = 5.0)]
    rating_max: f64,
}

impl DataArgs {
    fn scale(&self) -> Result<RatingScale> {
        RatingScale::new(self.rating_min, self.rating_max)
    }

    fn load(&self) -> Result<Dataset> {
        load_dataset(&self.ratings, self.social.source(), self.scale()?)
    }
}

#[derive(Debug, Clone, Args)]
struct ModelArgs {
    /// mf, mf-t, mf-d, mf-td, nb, nb-t, nb-td-f or nb-td-d.
    #[arg(long, default_value = "mf-td")]
    method: String,
    /// gd or sgd (factorization methods only).
    #[arg(long)]
    optimizer: Option<String>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 5.0)]
    lambda_u: f64,
    #[arg(long, default_value_t = 5.0)]
    lambda_v: f64,
    #[arg(long, default_value_t = 14.8)]
    lambda_s: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 10.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.01)]
    eta: f64,
    /// constant or inverse-sqrt.
    #[arg(long, default_value = "constant")]
    schedule: String,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    /// hinge or logistic.
    #[arg(long, default_value = "hinge")]
    loss: String,
    /// figure1 or paper-literal.
    #[arg(long, default_value = "figure1")]
    sign_convention: String,
    /// unbiased or paper-literal.
    #[arg(long, default_value = "unbiased")]
    batch_scaling: String,
    /// Trust propagation depth (neighborhood methods only).
    #[arg(long)]
    p: Option<usize>,
    /// Distrust propagation depth (neighborhood methods only).
    #[arg(long)]
    q: Option<usize>,
    #[arg(long, default_value_t = crate::neighborhood::MIN_CORATED)]
    min_corated: usize,
    /// Stop when validation RMSE has not improved this many times.
    #[arg(long)]
    patience: Option<usize>,
    /// Sample triplets from per-user counts instead of listing them (SGD only).
    #[arg(long)]
    lazy_triplets: bool,
    /// Report raw scores instead of clipping to the rating scale.
    #[arg(long)]
    no_clamp: bool,
}

impl ModelArgs {
    fn config(&self, seed: u64, registry: &Registry) -> Result<MethodConfig> {
        let family = registry.get(&self.method)?.family();
        match family {
            Family::Neighborhood => {
                if self.optimizer.is_some() {
                    warn!("optimizer ignored for {}", self.method);
                }
            }
            Family::Factorization => {
                if self.p.is_some() || self.q.is_some() {
                    warn!("propagation depths ignored for {}", self.method);
                }
            }
        }
        let hp = Hyperparams {
            rank: self.k,
            lambda_u: self.lambda_u,
            lambda_v: self.lambda_v,
            lambda_s: self.lambda_s,
            alpha: self.alpha,
            beta: self.beta,
            eta0: self.eta,
            schedule: self.schedule.parse()?,
            batch_size: self.batch_size,
            epochs: self.epochs,
            loss: self.loss.parse()?,
            sign_convention: self.sign_convention.parse()?,
            batch_scaling: self.batch_scaling.parse()?,
            clamp_predictions: !self.no_clamp,
        };
        hp.validate()?;
        let optimizer: OptimizerKind = match &self.optimizer {
            Some(o) => o.parse()?,
            None => OptimizerKind::Gd,
        };
        if self.lazy_triplets && optimizer == OptimizerKind::Gd {
            return Err(Error::invalid("lazy triplets need --optimizer sgd"));
        }
        Ok(MethodConfig {
            hp,
            optimizer,
            store_mode: if self.lazy_triplets {
                StoreMode::Lazy
            } else {
                StoreMode::Materialized
            },
            p: self.p.unwrap_or(1),
            q: self.q.unwrap_or(1),
            min_corated: self.min_corated,
            seed,
            patience: self.patience,
        })
    }
}

fn parse_fraction(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} must lie strictly between 0 and 1"))
    }
}

#[derive(Debug, Clone, Args)]
struct RunArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 0.9, value_parser = parse_fraction)]
    train_frac: f64,
    #[arg(long, default_value_t = 1)]
    reps: usize,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Directory written by `fit`.
    #[arg(long)]
    model_dir: PathBuf,
    /// Ratings to score instead of the saved held-out set.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Output directory (defaults to the model directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 0.9, value_parser = parse_fraction)]
    train_frac: f64,
    #[arg(long, default_value_t = 5)]
    reps: usize,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Fraction of ratings used for fitting; the rest validates.
    #[arg(long, default_value_t = 0.9, value_parser = parse_fraction)]
    train_frac: f64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 1.0, 5.0, 14.8, 50.0])]
    lambda_s_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 5.0, 11.0, 20.0])]
    lambda_v_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 5.0, 13.0, 20.0])]
    lambda_u_grid: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    reps: usize,
}

#[derive(Debug, Args)]
struct ColdstartArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 0.1, 0.2, 0.3])]
    fractions: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = ["mf".to_string(), "mf-t".into(), "mf-d".into(), "mf-td".into()])]
    methods: Vec<String>,
    #[arg(long, default_value_t = 1)]
    reps: usize,
}

#[derive(Debug, Args)]
struct ConsistencyArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    run: RunArgs,
    /// trust or distrust.
    #[arg(long, default_value = "trust")]
    relation: String,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 20, 40, 60, 80])]
    bins: Vec<usize>,
    #[arg(long, default_value_t = crate::neighborhood::MIN_CORATED)]
    min_corated: usize,
    /// Shuffle relevance flags with this seed (control run).
    #[arg(long)]
    shuffle_seed: Option<u64>,
}

#[derive(Debug, Args)]
struct MajorityArgs {
    #[command(flatten)]
    social: SocialArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 0.3, value_parser = parse_fraction)]
    holdout: f64,
    #[arg(long, default_value_t = 1)]
    reps: usize,
}

#[derive(Debug, Args)]
struct TradeoffArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 0.9, value_parser = parse_fraction)]
    train_frac: f64,
    #[arg(long, default_value_t = 0.9)]
    trust_keep: f64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0])]
    distrust_fractions: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    reps: usize,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 150)]
    m: usize,
    #[arg(long, default_value_t = 3)]
    rank: usize,
    #[arg(long, default_value_t = 4)]
    clusters: usize,
    #[arg(long, default_value_t = 0.2)]
    density: f64,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 1000)]
    trust_edges: usize,
    #[arg(long, default_value_t = 1000)]
    distrust_edges: usize,
    /// Round ratings to whole stars.
    #[arg(long)]
    quantize: bool,
    #[arg(long, default_value_t = 0.0)]
    activity_skew: f64,
}

#[derive(Debug, Args)]
struct BatchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value_t = 0.9, value_parser = parse_fraction)]
    train_frac: f64,
    /// Batch sizes as fractions of the triplet count.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.1, 0.2, 0.3])]
    batch_fractions: Vec<f64>,
    /// Explicit batch sizes; overrides the fractions.
    #[arg(long, value_delimiter = ',')]
    batch_sizes: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    reps: usize,
}

static INIT: Once = Once::new();

fn init_runtime() {
    INIT.call_once(|| {
        let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
            .format_timestamp(None)
            .try_init();
        if let Ok(v) = std::env::var(THREADS_ENV) {
            match v.trim().parse::<usize>() {
                Ok(0) => {}
                Ok(n) => {
                    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
                }
                Err(_) => warn!("ignoring {THREADS_ENV}={v}: not a number"),
            }
        }
    });
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit status.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_runtime();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let console = Console { quiet: cli.quiet };
    match dispatch(cli.command, &console) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: Command, con: &Console) -> Result<()> {
    match command {
        Command::Fit(a) => fit(a, con),
        Command::Eval(a) => eval(a, con),
        Command::Split(a) => split(a, con),
        Command::Grid(a) => grid(a, con),
        Command::Coldstart(a) => coldstart(a, con),
        Command::Consistency(a) => consistency(a, con),
        Command::MajorityVote(a) => majority(a, con),
        Command::Tradeoff(a) => tradeoff(a, con),
        Command::Synth(a) => synth(a, con),
        Command::BatchStudy(a) => batch(a, con),
    }
}

fn out_dir(path: &Path) -> Result<&Path> {
    fs::create_dir_all(path)?;
    Ok(path)
}

fn save(con: &Console, table: &ResultTable, dir: &Path, name: &str) -> Result<()> {
    let path = dir.join(name);
    write_table(table, &path)?;
    if !con.quiet {
        print_summary(table);
    }
    con.say(format_args!("wrote {}", path.display()));
    Ok(())
}

fn print_summary(table: &ResultTable) {
    let mut stdout = std::io::stdout().lock();
    for (keys, stats) in table.summaries() {
        let label = if keys.is_empty() { "all".to_string() } else { keys.join(" ") };
        let parts: Vec<String> = table
            .metric_columns
            .iter()
            .zip(&stats)
            .map(|(name, (mean, std))| {
                if *std > 0.0 {
                    format!("{name} {} ± {}", crate::io::fmt_sig6(*mean), crate::io::fmt_sig6(*std))
                } else {
                    format!("{name} {}", crate::io::fmt_sig6(*mean))
                }
            })
            .collect();
        let _ = writeln!(stdout, "{label}: {}", parts.join(", "));
    }
}

const META_FILE: &str = "meta.tsv";

fn fit(a: FitArgs, con: &Console) -> Result<()> {
    let registry = Registry::builtin();
    let config = a.model.config(a.run.seed, &registry)?;
    let method = registry.get(&a.model.method)?;
    let ds = a.data.load()?;
    let dir = out_dir(&a.run.out)?;
    let mut table = ResultTable::new(&["method"], &["mae", "rmse", "iterations", "objective"]);
    for rep in 0..a.reps.max(1) {
        let (train, test) = split_ratings(&ds.ratings, a.train_frac, a.run.seed, rep as u64)?;
        let data = TrainingData {
            ratings: &train,
            graph: &ds.graph,
            validation: config.patience.map(|_| &test),
        };
        let predictor = method.fit(data, &config)?;
        let acc = evaluate_predictor(predictor.as_ref(), &test)?;
        let (iterations, objective) = predictor
            .report()
            .map_or((0.0, f64::NAN), |r| (r.records.len() as f64, r.final_objective()));
        if let Some(report) = predictor.report() {
            con.say(format_args!("rep {rep}: stopped by {}", report.stop_reason));
        }
        table.push(
            vec![a.model.method.clone()],
            rep,
            vec![acc.mae, acc.rmse, iterations, objective],
        );
        if rep == 0 {
            ds.users.write(&dir.join("users.tsv"))?;
            ds.items.write(&dir.join("items.tsv"))?;
            write_ratings(&dir.join("test.tsv"), &test, &ds.users, &ds.items)?;
            if let Some(model) = predictor.factors() {
                save_model(model, &dir.join("model.bin"))?;
            }
            let scale = ds.ratings.scale();
            fs::write(
                dir.join(META_FILE),
                format!(
                    "method\t{}\nrating_min\t{}\nrating_max\t{}\nclamp\t{}\n",
                    a.model.method, scale.min, scale.max, config.hp.clamp_predictions
                ),
            )?;
        }
    }
    save(con, &table, dir, "fit.csv")
}

fn read_meta(dir: &Path) -> Result<Vec<(String, String)>> {
    let file = fs::File::open(dir.join(META_FILE))
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", dir.join(META_FILE).display())))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if let Some((k, v)) = line.split_once('\t') {
            out.push((k.to_string(), v.to_string()));
        }
    }
    Ok(out)
}

fn eval(a: EvalArgs, con: &Console) -> Result<()> {
    let meta = read_meta(&a.model_dir)?;
    let get = |key: &str| {
        meta.iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| Error::invalid(format!("{META_FILE} lacks `{key}`")))
    };
    let method = get("method")?;
    let parse_f = |s: String| s.parse::<f64>().map_err(|_| Error::invalid(format!("bad number `{s}`")));
    let scale = RatingScale::new(parse_f(get("rating_min")?)?, parse_f(get("rating_max")?)?)?;
    let clamp = get("clamp")? == "true";
    let model_path = a.model_dir.join("model.bin");
    if !model_path.exists() {
        return Err(Error::invalid(format!(
            "{method} saves no model; its test accuracy is in fit.csv"
        )));
    }
    let model = load_model(&model_path)?;
    let users = IdMap::read(&a.model_dir.join("users.tsv"))?;
    let items = IdMap::read(&a.model_dir.join("items.tsv"))?;
    if users.len() != model.n_users() || items.len() != model.n_items() {
        return Err(Error::invalid("id maps do not match the model dimensions"));
    }
    let test_path = a.test.unwrap_or_else(|| a.model_dir.join("test.tsv"));
    let test = load_ratings_with(&test_path, &users, &items, scale)?;
    let predictor = FactorPredictor {
        model,
        report: crate::optimize::FitReport {
            initial_objective: f64::NAN,
            records: Vec::new(),
            stop_reason: crate::optimize::StopReason::MaxIters,
        },
        clamp: clamp.then_some(scale),
    };
    let acc = evaluate_predictor(&predictor, &test)?;
    let mut table = ResultTable::new(&["method"], &["mae", "rmse", "count"]);
    table.push(vec![method], 0, vec![acc.mae, acc.rmse, acc.count as f64]);
    let dir = out_dir(a.out.as_deref().unwrap_or(&a.model_dir))?;
    save(con, &table, dir, "eval.csv")
}

fn split(a: SplitArgs, con: &Console) -> Result<()> {
    let ds = a.data.load()?;
    let dir = out_dir(&a.run.out)?;
    let mut table = ResultTable::new(&[], &["train", "test"]);
    for rep in 0..a.reps.max(1) {
        let (train, test) = split_ratings(&ds.ratings, a.train_frac, a.run.seed, rep as u64)?;
        write_ratings(&dir.join(format!("train_{rep}.tsv")), &train, &ds.users, &ds.items)?;
        write_ratings(&dir.join(format!("test_{rep}.tsv")), &test, &ds.users, &ds.items)?;
        table.push(Vec::new(), rep, vec![train.len() as f64, test.len() as f64]);
    }
    save(con, &table, dir, "split.csv")
}

fn grid(a: GridArgs, con: &Console) -> Result<()> {
    let registry = Registry::builtin();
    let config = a.model.config(a.run.seed, &registry)?;
    let method = registry.get(&a.model.method)?;
    let ds = a.data.load()?;
    let dir = out_dir(&a.run.out)?;
    let mut table = ResultTable::new(&["surface", "lambda_s", "second"], &["rmse"]);
    for rep in 0..a.reps.max(1) {
        let (train, validation) = split_ratings(&ds.ratings, a.train_frac, a.run.seed, rep as u64)?;
        let data = TrainingData {
            ratings: &train,
            graph: &ds.graph,
            validation: Some(&validation),
        };
        for (axis, second) in [
            (GridAxis::LambdaV, &a.lambda_v_grid),
            (GridAxis::LambdaU, &a.lambda_u_grid),
        ] {
            let result = grid_search(method, data, &config, axis, &a.lambda_s_grid, second)?;
            con.say(format_args!(
                "rep {rep}: best (lambda_s, {axis}) = ({}, {}) with validation RMSE {}",
                result.best.lambda_s,
                result.best.second,
                crate::io::fmt_sig6(result.best.rmse)
            ));
            for p in &result.surface {
                table.push(
                    vec![
                        format!("lambda_s/{axis}"),
                        crate::io::fmt_sig6(p.lambda_s),
                        crate::io::fmt_sig6(p.second),
                    ],
                    rep,
                    vec![p.rmse],
                );
            }
        }
    }
    write_table(&table, &dir.join("grid.csv"))?;
    con.say(format_args!("wrote {}", dir.join("grid.csv").display()));
    Ok(())
}

fn coldstart(a: ColdstartArgs, con: &Console) -> Result<()> {
    let registry = Registry::builtin();
    let base = a.model.config(a.run.seed, &registry)?;
    let ds = a.data.load()?;
    let dir = out_dir(&a.run.out)?;
    let mut table =
        ResultTable::new(&["cold_fraction", "method"], &["cold_users", "mae", "rmse"]);
    for &fraction in &a.fractions {
        for rep in 0..a.reps.max(1) {
            let split = cold_start_split(&ds.ratings, fraction, a.run.seed, rep as u64)?;
            for name in &a.methods {
                let method = registry.get(name)?;
                let data = TrainingData {
                    ratings: &split.train,
                    graph: &ds.graph,
                    validation: None,
                };
                let predictor = method.fit(data, &base)?;
                let acc = evaluate_predictor(predictor.as_ref(), &split.test)?;
                table.push(
                    vec![crate::io::fmt_sig6(fraction), name.clone()],
                    rep,
                    vec![split.cold_users.len() as f64, acc.mae, acc.rmse],
                );
            }
        }
    }
    save(con, &table, dir, "coldstart.csv")
}

fn consistency(a: ConsistencyArgs, con: &Console) -> Result<()> {
    let relation = match a.relation.as_str() {
        "trust" => Sign::Trust,
        "distrust" => Sign::Distrust,
        other => return Err(Error::invalid(format!("unknown relation `{other}`"))),
    };
    let ds = a.data.load()?;
    let dir = out_dir(&a.run.out)?;
    let config = ConsistencyConfig {
        relation,
        bin_edges: a.bins.clone(),
        min_corated: a.min_corated,
        shuffle_seed: a.shuffle_seed,
    };
    let bins = consistency_eval(&ds.ratings, &ds.graph, &config)?;
    let mut metrics = vec!["users"];
    metrics.extend(METRIC_NAMES);
    let mut table = ResultTable::new(&["bin"], &metrics);
    table.summarize = false;
    let last = bins.len() - 1;
    for (idx, b) in bins.iter().enumerate() {
        let label = if idx == last { "all".to_string() } else { b.label() };
        let mut values = vec![b.users as f64];
        values.extend(b.metrics());
        table.push(vec![label], 0, values);
    }
    save(con, &table, dir, "consistency.csv")
}

fn load_social_only(args: &SocialArgs) -> Result<SocialGraph> {
    let mut users = IdMap::new();
    let mut edges = Vec::new();
    let mut read = |path: &Path, sign: Option<Sign>| -> Result<()> {
        let file = fs::File::open(path)
            .map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))?;
        let name = path.display().to_string();
        edges.extend(
            parse_social(BufReader::new(file), &mut users, IdPolicy::Extend, sign, &name)
                .map_err(|e| with_file(e, path))?,
        );
        Ok(())
    };
    match args.source() {
        SocialSource::None => return Err(Error::invalid("majority vote needs --social or --trust")),
        SocialSource::Signed(p) => read(p, None)?,
        SocialSource::Split { trust, distrust } => {
            read(trust, Some(Sign::Trust))?;
            if let Some(d) = distrust {
                read(d, Some(Sign::Distrust))?;
            }
        }
    }
    let (graph, repeats) = build_graph(users.len(), &edges)?;
    if repeats > 0 {
        warn!("{repeats} duplicate relations ignored");
    }
    Ok(graph)
}

fn majority(a: MajorityArgs, con: &Console) -> Result<()> {
    let graph = load_social_only(&a.social)?;
    let dir = out_dir(&a.run.out)?;
    let mut table = ResultTable::new(&["regime", "sign"], &["count", "share_pct", "alignment_pct"]);
    for rep in 0..a.reps.max(1) {
        for row in majority_vote_eval(&graph, a.holdout, a.run.seed, rep as u64)? {
            table.push(
                vec![row.regime.to_string(), row.sign.to_string()],
                rep,
                vec![
                    row.count as f64,
                    row.share_pct,
                    row.alignment_pct.unwrap_or(f64::NAN),
                ],
            );
        }
    }
    save(con, &table, dir, "majority_vote.csv")
}

fn tradeoff(a: TradeoffArgs, con: &Console) -> Result<()> {
    let registry = Registry::builtin();
    let config = a.model.config(a.run.seed, &registry)?;
    let ds = a.data.load()?;
    let dir = out_dir(&a.run.out)?;
    let mut table = ResultTable::new(
        &["method", "trust_fraction", "distrust_fraction"],
        &["mae", "rmse"],
    );
    for rep in 0..a.reps.max(1) {
        let (train, test) = split_ratings(&ds.ratings, a.train_frac, a.run.seed, rep as u64)?;
        let rows = distrust_tradeoff_run(
            &train,
            &test,
            &ds.graph,
            a.trust_keep,
            &a.distrust_fractions,
            &config,
        )?;
        for r in rows {
            table.push(
                vec![
                    r.method.to_string(),
                    crate::io::fmt_sig6(r.trust_fraction),
                    crate::io::fmt_sig6(r.distrust_fraction),
                ],
                rep,
                vec![r.accuracy.mae, r.accuracy.rmse],
            );
        }
    }
    save(con, &table, dir, "tradeoff.csv")
}

fn synth(a: SynthArgs, con: &Console) -> Result<()> {
    let spec = SyntheticSpec {
        n_users: a.n,
        n_items: a.m,
        rank: a.rank,
        clusters: a.clusters,
        density: a.density,
        noise: a.noise,
        trust_edges: a.trust_edges,
        distrust_edges: a.distrust_edges,
        quantize: a.quantize,
        activity_skew: a.activity_skew,
        scale: RatingScale::default(),
        seed: a.run.seed,
    };
    let s = synth_generate(&spec)?;
    let dir = out_dir(&a.run.out)?;
    let users = numbered_ids("u", spec.n_users);
    let items = numbered_ids("i", spec.n_items);
    write_ratings(&dir.join("ratings.tsv"), &s.ratings, &users, &items)?;
    write_social(&dir.join("social.tsv"), &s.graph, &users)?;
    let mut table = ResultTable::new(&[], &["users", "items", "ratings", "trust", "distrust"]);
    table.summarize = false;
    table.push(
        Vec::new(),
        0,
        vec![
            spec.n_users as f64,
            spec.n_items as f64,
            s.ratings.len() as f64,
            s.graph.trust_edge_count() as f64,
            s.graph.distrust_edge_count() as f64,
        ],
    );
    save(con, &table, dir, "synth.csv")
}

fn batch(a: BatchArgs, con: &Console) -> Result<()> {
    let registry = Registry::builtin();
    let config = a.model.config(a.run.seed, &registry)?;
    let ds = a.data.load()?;
    let dir = out_dir(&a.run.out)?;
    let total = extract_triplets(&ds.graph).total();
    let sizes = if a.batch_sizes.is_empty() {
        batch_sizes_from_fractions(total, &a.batch_fractions)
    } else {
        a.batch_sizes.clone()
    };
    let mut summary = ResultTable::new(&["optimizer"], &["batch_size", "rmse", "mae", "objective"]);
    let mut trajectory = ResultTable::new(&["optimizer", "iteration"], &["rmse", "mae", "objective"]);
    trajectory.summarize = false;
    for rep in 0..a.reps.max(1) {
        let (train, test) = split_ratings(&ds.ratings, a.train_frac, a.run.seed, rep as u64)?;
        let mut cfg = config.clone();
        cfg.seed = crate::rng::derive_seed(a.run.seed, crate::rng::stream::SGD, rep as u64);
        for run in batch_study(&train, &test, &ds.graph, &cfg, &sizes)? {
            let label = run.label();
            for r in &run.report.records {
                let acc = r.validation.expect("test set tracked");
                trajectory.push(
                    vec![label.clone(), r.iteration.to_string()],
                    rep,
                    vec![acc.rmse, acc.mae, r.objective],
                );
            }
            let acc = run.final_accuracy();
            summary.push(
                vec![label],
                rep,
                vec![
                    run.batch_size.map_or(total as f64, |b| b as f64),
                    acc.map_or(f64::NAN, |a| a.rmse),
                    acc.map_or(f64::NAN, |a| a.mae),
                    run.report.final_objective(),
                ],
            );
        }
    }
    write_table(&trajectory, &dir.join("batch_trajectory.csv"))?;
    save(con, &summary, dir, "batch_study.csv")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fraction_validation() {
        assert!(parse_fraction("0.5").is_ok());
        assert!(parse_fraction("1.5").is_err());
        assert!(parse_fraction("0").is_err());
        assert!(parse_fraction("x").is_err());
    }

    #[test]
    fn unknown_subcommand_is_a_usage_error() {
        assert_ne!(run_cli(["trustfactor", "frobnicate"]), 0);
        assert_ne!(run_cli(["trustfactor", "fit", "--bogus"]), 0);
    }
}
