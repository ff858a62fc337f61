//! Command-line front end. Exit codes: 0 success, 2 usage or configuration,
//! 3 infeasible or empty input, 4 violated precondition, 5 numerical failure.

pub mod config;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::coherency::{partition_scores, median_threshold, score_corpus, score_histogram};
use crate::conv::{w_operator, Patch};
use crate::csc::{verify_seeds, SynthesisParams};
use crate::error::Error;
use crate::neuron::{gd_step, gd_step_soft_form, spectrally_scaled, NeuronFilter, TrainState};
use crate::prox::{ist_solve, lasso_kkt_residual, spectral_norm, IstOptions, LinearOperator, DEFAULT_POWER_ITERS};
use crate::sr::data::{make_pairs, PairGeometry};
use crate::sr::eval::{depth_sweep, evaluate, median, welch_t, SweepCorpus, SweepGeometry};
use crate::sr::image::load_pgm;
use crate::sr::net::{read_params, write_params, NetworkConfig, ToyCnn};
use crate::sr::train::train;
use config::{pgm_files, RunConfig, MANIFEST_ROOT};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_PRECONDITION: i32 = 4;
pub const EXIT_NUMERICAL: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "convinv", version, about = "Convolutional networks as inverse-problem solvers: demos and experiments")]
pub struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score PGM images by spatial coherency and split them into two manifests.
    Split(SplitArgs),
    /// Iterative shrinkage on a random sparse recovery problem.
    IstDemo(IstArgs),
    /// Paired gradient-descent and soft-threshold neuron trajectories.
    NeuronDemo(NeuronArgs),
    /// Stability check of layered soft thresholding on synthetic instances.
    CscVerify(CscArgs),
    /// Train a network from a JSON run config.
    Train(ConfigArg),
    /// Evaluate trained parameters from a JSON run config.
    Eval(ConfigArg),
    /// Depth sweep over corpora from a JSON run config.
    Sweep(ConfigArg),
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// A number in [0, 1] or `median`.
    #[arg(long, default_value = "median")]
    pub tau: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OperatorKind {
    Gaussian,
    Identity,
}

#[derive(Debug, Args)]
pub struct IstArgs {
    /// Rows and columns of the operator.
    #[arg(long, num_args = 2, value_names = ["M", "N"], default_values_t = [8, 16])]
    pub size: Vec<usize>,
    #[arg(long, default_value_t = 2)]
    pub sparsity: usize,
    #[arg(long, default_value_t = 0.01)]
    pub bias: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = OperatorKind::Gaussian)]
    pub operator: OperatorKind,
    /// Divide the operator by its spectral norm first.
    #[arg(long)]
    pub scale: bool,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct NeuronArgs {
    #[arg(long, default_value_t = 8)]
    pub superpatch: usize,
    #[arg(long, default_value_t = 3)]
    pub filter: usize,
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub bias: f64,
}

#[derive(Debug, Args)]
pub struct CscArgs {
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value_t = 100)]
    pub seeds: u64,
    /// Coherence target for the synthesized dictionaries.
    #[arg(long, default_value_t = 0.02)]
    pub coherence: f64,
    /// Comma-separated `n0,n1,...` (signal length first).
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Comma-separated per-layer sparsities, non-increasing.
    #[arg(long, value_delimiter = ',')]
    pub sparsities: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub first_seed: u64,
    /// Magnitude range of first-layer coefficients.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [1.0, 1.2])]
    pub magnitudes: Vec<f64>,
    /// Bias position inside the admissible interval.
    #[arg(long, default_value_t = 0.05)]
    pub bias_position: f64,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A JSON run config; the optional flags override its values.
#[derive(Debug, Args)]
pub struct ConfigArg {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

struct Failure {
    code: i32,
    msg: String,
}

type CmdResult = std::result::Result<i32, Failure>;

fn fail(code: i32, msg: impl Into<String>) -> Failure {
    Failure { code, msg: msg.into() }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Synthesis(_) => EXIT_INFEASIBLE,
        Error::Precondition(_) => EXIT_PRECONDITION,
        Error::Singular(_) | Error::Divergence { .. } => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        fail(exit_code(&e), e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        fail(EXIT_USAGE, e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        fail(EXIT_USAGE, e.to_string())
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if cli.threads == 0 {
        eprintln!("error: --threads must be at least 1");
        return EXIT_USAGE;
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::Split(a) => cmd_split(a),
        Command::IstDemo(a) => cmd_ist_demo(a),
        Command::NeuronDemo(a) => cmd_neuron_demo(a),
        Command::CscVerify(a) => cmd_csc_verify(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
    });
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            f.code
        }
    }
}

fn cmd_split(a: &SplitArgs) -> CmdResult {
    let files = pgm_files(&a.input).map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", a.input.display())))?;
    if files.is_empty() {
        return Err(fail(EXIT_INFEASIBLE, format!("no .pgm files in {}", a.input.display())));
    }
    let images = files.iter().map(load_pgm).collect::<crate::Result<Vec<_>>>()?;
    let scores = score_corpus(&images)?;
    let tau = if a.tau == "median" {
        median_threshold(&scores)?
    } else {
        a.tau
            .parse::<f64>()
            .map_err(|_| fail(EXIT_USAGE, format!("--tau expects a number or `median`, got {:?}", a.tau)))?
    };
    let part = partition_scores(scores, tau)?;
    fs::create_dir_all(&a.out)?;
    let root = fs::canonicalize(&a.input)?;
    let names: Vec<String> = files
        .iter()
        .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
        .collect();
    for (file, idx) in [("high.manifest", &part.high), ("low.manifest", &part.low)] {
        let mut text = format!("{MANIFEST_ROOT}\t{}\n", root.display());
        for &i in idx {
            text.push_str(&format!("{}\t{}\n", names[i], part.scores[i].mu));
        }
        fs::write(a.out.join(file), text)?;
    }
    let mut w = csv::Writer::from_path(a.out.join("scores.csv"))?;
    for bin in score_histogram(&part.scores, a.bins)? {
        w.serialize(bin)?;
    }
    w.flush()?;
    println!(
        "tau {tau}: {} high, {} low of {} images",
        part.high.len(),
        part.low.len(),
        files.len()
    );
    Ok(EXIT_OK)
}

fn cmd_ist_demo(a: &IstArgs) -> CmdResult {
    let (m, n) = (a.size[0], a.size[1]);
    if m == 0 || n == 0 {
        return Err(fail(EXIT_USAGE, "--size needs positive dimensions"));
    }
    if !(a.bias >= 0.0) {
        return Err(fail(EXIT_USAGE, "--bias must be nonnegative"));
    }
    if a.sparsity == 0 || a.sparsity > n {
        return Err(fail(EXIT_INFEASIBLE, format!("sparsity {} impossible with {n} unknowns", a.sparsity)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let k = match a.operator {
        OperatorKind::Identity => {
            if m != n {
                return Err(fail(EXIT_USAGE, "identity operator needs a square --size"));
            }
            DMatrix::identity(n, n)
        }
        OperatorKind::Gaussian => DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal) / (m as f64).sqrt()),
    };
    let mut op = LinearOperator::new(k)?;
    if a.scale {
        op = op.normalized().0;
    }
    let mut t = DVector::zeros(n);
    for j in index::sample(&mut rng, n, a.sparsity) {
        t[j] = if rng.random_bool(0.5) { 1.0 } else { -1.0 } * rng.random_range(1.0..2.0);
    }
    let g = op.matrix() * &t;
    println!(
        "operator {:?} {m}x{n}, spectral norm {:.6}, sparsity {}, bias {}",
        a.operator,
        spectral_norm(&op, DEFAULT_POWER_ITERS),
        a.sparsity,
        a.bias
    );
    let opts = IstOptions {
        max_iter: a.max_iter,
        tol: a.tol,
        ..IstOptions::default()
    };
    let rep = ist_solve(&op, &g, a.bias, opts)?;
    println!("{:>8} {:>16} {:>14}", "iter", "objective", "step_norm");
    let every = (rep.iterations / 20).max(1);
    for (i, r) in rep.residual_history.iter().enumerate() {
        let it = i + 1;
        if it % every == 0 || it == rep.iterations || it == 1 {
            println!("{it:>8} {:>16.10} {:>14.3e}", rep.objective_history[it], r);
        }
    }
    let kkt = lasso_kkt_residual(&op, &g, &rep.solution, a.bias);
    println!(
        "iterations {}, converged {}, kkt residual {kkt:.3e}, recovery error {:.3e}",
        rep.iterations,
        rep.converged,
        (&rep.solution - &t).norm()
    );
    Ok(if kkt < 1e-6 { EXIT_OK } else { EXIT_NUMERICAL })
}

fn cmd_neuron_demo(a: &NeuronArgs) -> CmdResult {
    if a.filter == 0 || a.filter > a.superpatch {
        return Err(fail(EXIT_USAGE, "--filter must be between 1 and --superpatch"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let x = Patch::from_fn(a.superpatch, a.superpatch, |_, _| rng.random_range(0.0..1.0))?;
    let (d, s) = spectrally_scaled(&w_operator(&x, a.filter)?)?;
    let out = a.superpatch - a.filter + 1;
    let t = DVector::from_fn(out * out, |_, _| rng.random_range(0.0..1.0));
    let f0 = NeuronFilter::new(
        DVector::from_fn(a.filter * a.filter, |_, _| rng.random_range(0.0..0.2)),
        a.bias,
    )?;
    println!(
        "superpatch {0}x{0}, filter {1}x{1}, bias {2}, dictionary scaled by 1/{s:.6}",
        a.superpatch, a.filter, a.bias
    );
    let (mut gd, mut soft) = (TrainState::new(f0.clone()), TrainState::new(f0));
    let verbose = a.iters <= 20;
    let every = (a.iters / 20).max(1);
    let mut worst: f64 = 0.0;
    println!("{:>8} {:>16} {:>14}", "iter", "mse", "divergence");
    for it in 1..=a.iters {
        gd = gd_step(&gd, &d, &t)?;
        soft = gd_step_soft_form(&soft, &d, &t)?;
        let div = (&gd.filter.coeffs - &soft.filter.coeffs).amax();
        worst = worst.max(div);
        if verbose || it % every == 0 || it == a.iters {
            println!("{it:>8} {:>16.10} {div:>14.3e}", gd.mse_history[it - 1]);
            if verbose && a.filter == 1 {
                println!("{:>8} f = {:.12}", "", gd.filter.coeffs[0]);
            }
        }
    }
    println!("max divergence {worst:.3e}");
    if worst < 1e-10 {
        Ok(EXIT_OK)
    } else {
        Err(fail(EXIT_NUMERICAL, format!("trajectories diverged by {worst:e}")))
    }
}

#[derive(Serialize)]
struct CscRow {
    seed: u64,
    layer: usize,
    mu_max: f64,
    mu_min: f64,
    sparsity: usize,
    x_min: f64,
    x_max: f64,
    sparsity_rhs: f64,
    bias: f64,
    epsilon: f64,
    condition_met: bool,
    support_recovered: bool,
    error_norm: f64,
    within_bound: bool,
}

impl CscRow {
    fn new(seed: u64, l: &crate::csc::LayerStability) -> Self {
        CscRow {
            seed,
            layer: l.layer,
            mu_max: l.mu_max,
            mu_min: l.mu_min,
            sparsity: l.sparsity,
            x_min: l.x_min,
            x_max: l.x_max,
            sparsity_rhs: l.sparsity_rhs,
            bias: l.bias,
            epsilon: l.epsilon,
            condition_met: l.condition_met,
            support_recovered: l.support_recovered,
            error_norm: l.error_norm,
            within_bound: l.error_norm <= l.epsilon,
        }
    }
}

fn cmd_csc_verify(a: &CscArgs) -> CmdResult {
    if a.layers == 0 {
        return Err(fail(EXIT_USAGE, "--layers must be positive"));
    }
    let dims = a
        .dims
        .clone()
        .unwrap_or_else(|| (0..=a.layers).map(|i| 64usize.saturating_sub(16 * i).max(16)).collect());
    let sparsities = a
        .sparsities
        .clone()
        .unwrap_or_else(|| (0..a.layers).map(|i| if i == 0 { 3 } else { 2 }).collect());
    if dims.len() != a.layers + 1 || sparsities.len() != a.layers {
        return Err(fail(EXIT_USAGE, "--dims needs layers+1 entries and --sparsities needs layers entries"));
    }
    let mut params = SynthesisParams::new(dims, sparsities, a.coherence, a.noise, 0);
    params.magnitude_range = (a.magnitudes[0], a.magnitudes[1]);
    params.bias_position = a.bias_position;
    let seeds: Vec<u64> = (a.first_seed..a.first_seed + a.seeds).collect();
    let results = verify_seeds(&params, &seeds);
    let sink: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    let (mut met, mut good) = (0usize, 0usize);
    for (seed, rep) in &results {
        let rep = rep.as_ref().map_err(|e| fail(exit_code(e), format!("seed {seed}: {e}")))?;
        for l in &rep.layers {
            w.serialize(CscRow::new(*seed, l))?;
        }
        if rep.all_conditions_met() {
            met += 1;
            if rep.all_supports_recovered() && rep.errors_within_bounds() {
                good += 1;
            }
        }
    }
    w.flush()?;
    eprintln!(
        "{} seeds, {met} meet the sparsity condition on every layer, {good} of those recover supports within bounds",
        results.len()
    );
    Ok(if good == met { EXIT_OK } else { EXIT_NUMERICAL })
}

#[derive(Serialize)]
struct RunMeta<'a> {
    command: &'a str,
    version: &'a str,
    config: &'a RunConfig,
}

fn write_run_json(cfg: &RunConfig, command: &str) -> std::result::Result<(), Failure> {
    fs::create_dir_all(&cfg.output_dir)?;
    let meta = RunMeta {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
    };
    let text = serde_json::to_string_pretty(&meta).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
    fs::write(cfg.output_dir.join(format!("{command}.run.json")), text + "\n")?;
    Ok(())
}

fn load_config(a: &ConfigArg) -> std::result::Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load(&a.config).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
    if let Some(s) = a.seed {
        cfg.network.seed = s;
    }
    if let Some(e) = a.epochs {
        cfg.network.epochs = e;
    }
    if let Some(lr) = a.learning_rate {
        cfg.network.learning_rate = lr;
    }
    if let Some(d) = &a.output_dir {
        cfg.output_dir = d.clone();
    }
    cfg.network.validate().map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
    Ok(cfg)
}

fn geometry(cfg: &RunConfig, net: &NetworkConfig) -> PairGeometry {
    let rf = net.receptive_field();
    PairGeometry {
        output: cfg.data.output,
        receptive_field: rf,
        stride: cfg.data.stride,
        margin: (rf - 1) / 2,
    }
}

fn cmd_train(a: &ConfigArg) -> CmdResult {
    let cfg = load_config(a)?;
    let images = cfg.data.train.load()?;
    let pairs = make_pairs(&images, cfg.data.scale, geometry(&cfg, &cfg.network))?;
    if pairs.is_empty() {
        return Err(fail(EXIT_INFEASIBLE, "training corpus yields no pairs"));
    }
    write_run_json(&cfg, "train")?;
    let rep = train(ToyCnn::random(&cfg.network)?, &pairs, &cfg.network)?;
    let mut f = fs::File::create(cfg.output_dir.join("params.bin"))?;
    write_params(&rep.net, &mut f)?;
    let mut w = csv::Writer::from_path(cfg.output_dir.join("losses.csv"))?;
    w.write_record(["epoch", "mean_loss"])?;
    for (e, l) in rep.epoch_losses.iter().enumerate() {
        w.write_record([(e + 1).to_string(), l.to_string()])?;
    }
    w.flush()?;
    println!(
        "trained on {} pairs for {} epochs; final loss {}",
        pairs.len(),
        cfg.network.epochs,
        rep.epoch_losses.last().copied().unwrap_or(f64::NAN)
    );
    Ok(EXIT_OK)
}

fn read_net(path: &Path) -> std::result::Result<ToyCnn, Failure> {
    let f = fs::File::open(path).map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", path.display())))?;
    Ok(read_params(io::BufReader::new(f))?)
}

fn cmd_eval(a: &ConfigArg) -> CmdResult {
    let cfg = load_config(a)?;
    let ev_cfg = cfg.eval.clone().unwrap_or(config::EvalConfig {
        params: None,
        baseline_params: None,
    });
    let params = ev_cfg.params.clone().unwrap_or_else(|| cfg.output_dir.join("params.bin"));
    let net = read_net(&params)?;
    let baseline = ev_cfg.baseline_params.as_deref().map(read_net).transpose()?;
    let images = cfg.data.test.load()?;
    // a common margin keeps both nets on the same target pixels
    let rf = baseline
        .as_ref()
        .map_or(net.receptive_field(), |b| b.receptive_field().max(net.receptive_field()));
    let geom = PairGeometry {
        output: cfg.data.output,
        receptive_field: net.receptive_field(),
        stride: cfg.data.stride,
        margin: (rf - 1) / 2,
    };
    let pairs = make_pairs(&images, cfg.data.scale, geom)?;
    if pairs.is_empty() {
        return Err(fail(EXIT_INFEASIBLE, "test corpus yields no pairs"));
    }
    write_run_json(&cfg, "eval")?;
    let rep = evaluate(&net, &pairs)?;
    let base_rep = match &baseline {
        Some(b) => {
            let bp = make_pairs(
                &images,
                cfg.data.scale,
                PairGeometry {
                    receptive_field: b.receptive_field(),
                    ..geom
                },
            )?;
            Some(evaluate(b, &bp)?)
        }
        None => None,
    };
    let mut w = csv::Writer::from_path(cfg.output_dir.join("eval.csv"))?;
    w.write_record(["patch", "psnr", "bicubic_psnr", "baseline_psnr"])?;
    for i in 0..rep.psnr_per_patch.len() {
        let base = base_rep.as_ref().map(|b| b.psnr_per_patch[i].to_string()).unwrap_or_default();
        w.write_record([
            i.to_string(),
            rep.psnr_per_patch[i].to_string(),
            rep.baseline_psnr_per_patch[i].to_string(),
            base,
        ])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(cfg.output_dir.join("coherence.csv"))?;
    for l in &rep.layer_coherence {
        w.serialize(l)?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(cfg.output_dir.join("summary.csv"))?;
    w.write_record(["metric", "value"])?;
    let mut summary = vec![
        ("patches", rep.psnr_per_patch.len() as f64),
        ("mean_psnr", rep.mean_psnr),
        ("median_psnr", rep.median_psnr),
        ("mean_bicubic_psnr", rep.mean_baseline_psnr),
    ];
    if let Some(b) = &base_rep {
        summary.push(("baseline_mean_psnr", b.mean_psnr));
        summary.push(("baseline_median_psnr", median(&b.psnr_per_patch)));
        summary.push(("welch_t", welch_t(&rep.psnr_per_patch, &b.psnr_per_patch)?));
    }
    for (k, v) in &summary {
        w.write_record([k.to_string(), v.to_string()])?;
        println!("{k} {v}");
    }
    w.flush()?;
    Ok(EXIT_OK)
}

fn cmd_sweep(a: &ConfigArg) -> CmdResult {
    let cfg = load_config(a)?;
    let sw = cfg
        .sweep
        .clone()
        .ok_or_else(|| fail(EXIT_USAGE, "config has no `sweep` section"))?;
    let mut corpora = Vec::new();
    for c in &sw.corpora {
        let train = c.train.load()?;
        let test = c.test.load()?;
        if train.is_empty() || test.is_empty() {
            return Err(fail(EXIT_INFEASIBLE, format!("corpus {} is empty", c.name)));
        }
        corpora.push(SweepCorpus {
            name: c.name.clone(),
            train,
            test,
        });
    }
    write_run_json(&cfg, "sweep")?;
    let table = depth_sweep(
        &corpora,
        &sw.depths,
        &sw.seeds,
        &cfg.network,
        SweepGeometry {
            scale: cfg.data.scale,
            output: cfg.data.output,
            stride: cfg.data.stride,
        },
    )?;
    let mut w = csv::Writer::from_path(cfg.output_dir.join("sweep.csv"))?;
    for r in &table.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    for c in &corpora {
        for &s in &sw.seeds {
            println!(
                "{} seed {s}: saturation depth {}",
                c.name,
                table.saturation(&c.name, s).map_or("-".into(), |d| d.to_string())
            );
        }
    }
    Ok(EXIT_OK)
}
