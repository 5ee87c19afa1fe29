//! Benchmark harness for the sparse coding engine.
//!
//! Subcommands: `run` (one operating point, first K images), `sweep-lambda`
//! (activation threshold grid), `sweep-lambda-e` (residual threshold grid,
//! two-layer models), and `make-dict` (dictionary synthesis). All thresholds
//! are given as base-2 exponents. Sweep points are independent jobs fanned
//! out over a thread pool; rows are sorted by (model, lambda, lambda_e,
//! image index) before writing, so parallelism never changes output bytes.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use lca_core::dictionary::Dictionary;
use lca_core::emu::{EmuConfig, Network, RunOutcome, Topology};
use lca_core::fixedpoint::FxValue;
use lca_core::idx::{load_idx_images, ImageSet};
use lca_core::metrics::{compute_metrics, sort_rows, write_csv, MetricsRow};
use lca_core::{Error, Result};

#[derive(Parser)]
#[command(name = "lca-bench", version, about = "Sparse coding benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Code the first K images at one operating point.
    Run(RunArgs),
    /// Sweep the activation threshold over a power-of-two grid.
    SweepLambda(SweepLambdaArgs),
    /// Sweep the residual firing threshold (two-layer models only).
    SweepLambdaE(SweepLambdaEArgs),
    /// Synthesize a dictionary and write it to a file.
    MakeDict(MakeDictArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum Model {
    OneLayerFloat,
    OneLayerFixed,
    TwoLayerFloat,
    TwoLayerFixed,
}

impl Model {
    fn tag(self) -> &'static str {
        match self {
            Model::OneLayerFloat => "one-layer-float",
            Model::OneLayerFixed => "one-layer-fixed",
            Model::TwoLayerFloat => "two-layer-float",
            Model::TwoLayerFixed => "two-layer-fixed",
        }
    }

    fn topology(self) -> Topology {
        match self {
            Model::OneLayerFloat | Model::OneLayerFixed => Topology::OneLayer,
            Model::TwoLayerFloat | Model::TwoLayerFixed => Topology::TwoLayer,
        }
    }

    fn is_fixed(self) -> bool {
        matches!(self, Model::OneLayerFixed | Model::TwoLayerFixed)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum DictMode {
    Gaussian,
    Dct,
}

/// Flags shared by every benchmarking subcommand.
#[derive(Args)]
struct IoArgs {
    /// Dictionary file.
    #[arg(long, value_name = "PATH")]
    dict: PathBuf,
    /// IDX image file.
    #[arg(long, value_name = "PATH")]
    images: PathBuf,
    /// Output CSV file.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Timesteps per run.
    #[arg(long, default_value_t = 256)]
    steps: usize,
    /// Leak exponent: the per-step leak rate is 2^-TAU_EXP.
    #[arg(long, value_name = "TAU_EXP", default_value_t = 7)]
    tau_exp: u32,
    /// Zero the wall_ns column so output is machine-independent.
    #[arg(long)]
    no_timing: bool,
    /// Worker threads for sweep points (default: one per core).
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Model to run.
    #[arg(long, value_enum)]
    model: Model,
    /// Activation threshold: lambda = 2^EXP.
    #[arg(long, value_name = "EXP", default_value_t = -1, allow_negative_numbers = true)]
    lambda_exp: i32,
    /// Residual firing threshold: lambda_e = 2^EXP (two-layer models).
    #[arg(long, value_name = "EXP", default_value_t = 6, allow_negative_numbers = true)]
    lambda_e_exp: i32,
    /// How many images to code, taken from the front of the file.
    #[arg(long, value_name = "K", default_value_t = 10)]
    num_images: usize,
}

#[derive(Args)]
struct SweepLambdaArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Models to sweep, comma separated.
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_values_t = vec![Model::OneLayerFloat, Model::OneLayerFixed]
    )]
    models: Vec<Model>,
    /// Lowest lambda exponent of the grid.
    #[arg(long, value_name = "EXP", default_value_t = -6, allow_negative_numbers = true)]
    min_exp: i32,
    /// Highest lambda exponent of the grid.
    #[arg(long, value_name = "EXP", default_value_t = 4, allow_negative_numbers = true)]
    max_exp: i32,
    /// Residual firing threshold for two-layer models: lambda_e = 2^EXP.
    #[arg(long, value_name = "EXP", default_value_t = 6, allow_negative_numbers = true)]
    lambda_e_exp: i32,
    /// How many images to sample from the file.
    #[arg(long, value_name = "K", default_value_t = 10)]
    num_images: usize,
    /// Seed for the image sample.
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args)]
struct SweepLambdaEArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Two-layer model to sweep.
    #[arg(long, value_enum, default_value_t = Model::TwoLayerFloat)]
    model: Model,
    /// Lowest lambda_e exponent of the grid.
    #[arg(long, value_name = "EXP", default_value_t = -16, allow_negative_numbers = true)]
    min_exp: i32,
    /// Highest lambda_e exponent of the grid.
    #[arg(long, value_name = "EXP", default_value_t = 6, allow_negative_numbers = true)]
    max_exp: i32,
    /// Activation threshold: lambda = 2^EXP.
    #[arg(long, value_name = "EXP", default_value_t = -1, allow_negative_numbers = true)]
    lambda_exp: i32,
    /// How many images to sample from the file.
    #[arg(long, value_name = "K", default_value_t = 3)]
    num_images: usize,
    /// Seed for the image sample.
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args)]
struct MakeDictArgs {
    /// Kind of dictionary to synthesize.
    #[arg(long, value_enum)]
    mode: DictMode,
    /// Input dimension (pixels per atom).
    #[arg(long)]
    m: usize,
    /// Number of atoms.
    #[arg(long)]
    n: usize,
    /// Seed for the gaussian mode.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output dictionary file.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests arrive here too; only genuine usage
            // problems take the usage exit code.
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::SweepLambda(args) => cmd_sweep_lambda(args),
        Command::SweepLambdaE(args) => cmd_sweep_lambda_e(args),
        Command::MakeDict(args) => cmd_make_dict(args),
    }
}

/// Type-erased network so model dispatch happens once, not per job.
enum AnyNetwork {
    Fixed(Network<FxValue>),
    Float(Network<f64>),
}

impl AnyNetwork {
    fn build(model: Model, dict: &Dictionary<f64>, steps: usize, tau_exp: u32) -> Result<Self> {
        let cfg = EmuConfig {
            topology: model.topology(),
            lambda: 0.0,
            lambda_e: 0.0,
            tau_exp,
            steps,
        };
        Ok(if model.is_fixed() {
            AnyNetwork::Fixed(Network::new(dict, &cfg)?)
        } else {
            AnyNetwork::Float(Network::new(dict, &cfg)?)
        })
    }

    fn run(&self, x: &[f64], lambda: f64, lambda_e: f64) -> Result<RunOutcome> {
        match self {
            AnyNetwork::Fixed(net) => net.instance_with(x, lambda, lambda_e)?.run(),
            AnyNetwork::Float(net) => net.instance_with(x, lambda, lambda_e)?.run(),
        }
    }
}

fn exp2(e: i32) -> f64 {
    2f64.powi(e)
}

fn load_images(args: &IoArgs, limit: Option<usize>) -> Result<ImageSet> {
    let images = load_idx_images(&args.images, limit)?;
    if (images.rows(), images.cols()) != (28, 28) {
        eprintln!(
            "warning: images are {}x{}, not the usual 28x28",
            images.rows(),
            images.cols()
        );
    }
    if images.count() == 0 {
        return Err(Error::InvalidConfig {
            reason: "image file contains no images".into(),
        });
    }
    Ok(images)
}

fn check_image_count(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidConfig {
            reason: "--num-images must be at least 1".into(),
        });
    }
    Ok(())
}

fn check_range(min_exp: i32, max_exp: i32) -> Result<()> {
    if min_exp > max_exp {
        return Err(Error::InvalidConfig {
            reason: format!("--min-exp {min_exp} exceeds --max-exp {max_exp}"),
        });
    }
    Ok(())
}

/// Deterministic sample of `k` distinct image indices, ascending. Asking for
/// at least the whole set returns every index.
fn choose_images(count: usize, k: usize, seed: u64) -> Vec<usize> {
    if k >= count {
        return (0..count).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, count, k).into_vec();
    picked.sort_unstable();
    picked
}

/// The residual threshold only exists in the two-layer wiring; one-layer
/// rows record zero.
fn lambda_e_for(model: Model, lambda_e_exp: i32) -> f64 {
    match model.topology() {
        Topology::OneLayer => 0.0,
        Topology::TwoLayer => exp2(lambda_e_exp),
    }
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig {
                    reason: format!("cannot build a {n}-thread pool: {e}"),
                })?;
            Ok(pool.install(f))
        }
    }
}

fn finish(mut rows: Vec<MetricsRow>, io: &IoArgs) -> Result<()> {
    if io.no_timing {
        for row in &mut rows {
            row.wall_ns = 0;
        }
    }
    sort_rows(&mut rows);
    write_csv(&io.out, &rows)?;
    eprintln!("wrote {} rows to {}", rows.len(), io.out.display());
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    check_image_count(args.num_images)?;
    let dict = Dictionary::<f64>::load(&args.io.dict)?;
    let images = load_images(&args.io, Some(args.num_images))?;
    let net = AnyNetwork::build(args.model, &dict, args.io.steps, args.io.tau_exp)?;
    let lambda = exp2(args.lambda_exp);
    let lambda_e = lambda_e_for(args.model, args.lambda_e_exp);
    let tau = exp2(-(args.io.tau_exp as i32));

    let mut rows = Vec::with_capacity(images.count());
    for i in 0..images.count() {
        let x = images.image(i);
        let outcome = net.run(x, lambda, lambda_e)?;
        rows.push(compute_metrics(
            args.model.tag(),
            &dict,
            lambda,
            lambda_e,
            tau,
            args.io.steps,
            i,
            x,
            &outcome,
        )?);
    }
    finish(rows, &args.io)
}

fn cmd_sweep_lambda(args: SweepLambdaArgs) -> Result<()> {
    check_image_count(args.num_images)?;
    check_range(args.min_exp, args.max_exp)?;
    if args.models.is_empty() {
        return Err(Error::InvalidConfig {
            reason: "--models needs at least one model".into(),
        });
    }
    let mut models: Vec<Model> = Vec::new();
    for m in &args.models {
        if !models.contains(m) {
            models.push(*m);
        }
    }

    let dict = Dictionary::<f64>::load(&args.io.dict)?;
    let images = load_images(&args.io, None)?;
    let picked = choose_images(images.count(), args.num_images, args.seed);
    let nets = models
        .iter()
        .map(|&m| AnyNetwork::build(m, &dict, args.io.steps, args.io.tau_exp))
        .collect::<Result<Vec<_>>>()?;
    let tau = exp2(-(args.io.tau_exp as i32));

    let mut jobs = Vec::new();
    for mi in 0..models.len() {
        for exp in args.min_exp..=args.max_exp {
            for &image in &picked {
                jobs.push((mi, exp, image));
            }
        }
    }

    let rows = with_jobs(args.io.jobs, || {
        jobs.par_iter()
            .map(|&(mi, exp, image)| {
                let model = models[mi];
                let lambda = exp2(exp);
                let lambda_e = lambda_e_for(model, args.lambda_e_exp);
                let x = images.image(image);
                let outcome = nets[mi].run(x, lambda, lambda_e)?;
                compute_metrics(
                    model.tag(),
                    &dict,
                    lambda,
                    lambda_e,
                    tau,
                    args.io.steps,
                    image,
                    x,
                    &outcome,
                )
            })
            .collect::<Result<Vec<_>>>()
    })??;
    finish(rows, &args.io)
}

fn cmd_sweep_lambda_e(args: SweepLambdaEArgs) -> Result<()> {
    check_image_count(args.num_images)?;
    check_range(args.min_exp, args.max_exp)?;
    if args.model.topology() != Topology::TwoLayer {
        return Err(Error::InvalidConfig {
            reason: format!(
                "sweep-lambda-e needs a two-layer model; {} has no residual layer",
                args.model.tag()
            ),
        });
    }

    let dict = Dictionary::<f64>::load(&args.io.dict)?;
    let images = load_images(&args.io, None)?;
    let picked = choose_images(images.count(), args.num_images, args.seed);
    let net = AnyNetwork::build(args.model, &dict, args.io.steps, args.io.tau_exp)?;
    let lambda = exp2(args.lambda_exp);
    let tau = exp2(-(args.io.tau_exp as i32));

    let mut jobs = Vec::new();
    for exp in args.min_exp..=args.max_exp {
        for &image in &picked {
            jobs.push((exp, image));
        }
    }

    let rows = with_jobs(args.io.jobs, || {
        jobs.par_iter()
            .map(|&(exp, image)| {
                let lambda_e = exp2(exp);
                let x = images.image(image);
                let outcome = net.run(x, lambda, lambda_e)?;
                compute_metrics(
                    args.model.tag(),
                    &dict,
                    lambda,
                    lambda_e,
                    tau,
                    args.io.steps,
                    image,
                    x,
                    &outcome,
                )
            })
            .collect::<Result<Vec<_>>>()
    })??;
    finish(rows, &args.io)
}

fn cmd_make_dict(args: MakeDictArgs) -> Result<()> {
    let dict: Dictionary<f64> = match args.mode {
        DictMode::Gaussian => Dictionary::gaussian(args.m, args.n, args.seed)?,
        DictMode::Dct => {
            let (h, w) = squarest_factors(args.m);
            Dictionary::overcomplete_dct(h, w, args.n)?
        }
    };
    dict.save(&args.out)?;
    eprintln!(
        "wrote a {}x{} dictionary to {}",
        dict.input_dim(),
        dict.atom_count(),
        args.out.display()
    );
    Ok(())
}

/// Factor pair of `m` closest to square, for laying pixels on a grid.
fn squarest_factors(m: usize) -> (usize, usize) {
    let mut h = (m as f64).sqrt() as usize;
    while h > 1 && m % h != 0 {
        h -= 1;
    }
    (h.max(1), m / h.max(1))
}
