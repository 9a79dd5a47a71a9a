//! `repalign`: theory curves, ensemble sweeps, CCE between stored
//! representations, and the MNIST label-noise sweep.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use repalign::classifier::{load_mnist_dir, run_label_noise_sweep, LabelNoiseConfig, MNIST_DIR_ENV};
use repalign::error::ErrorClass;
use repalign::exec::with_workers;
use repalign::experiments::{emit_csv, run_sweep, ActivationPair, Solver, SweepConfig};
use repalign::io::read_points_csv;
use repalign::metrics::cce_between_with;
use repalign::theory::theory_point;
use repalign::{Error, Execution, Result};

#[derive(Parser)]
#[command(name = "repalign", version, about = "Representational alignment of independently trained networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Asymptotic correlation, CCE and generalization error on an alpha grid.
    Theory(TheoryArgs),
    /// Ensemble sweep of student pairs (presets fig1, fig2, fig3).
    Sweep(SweepArgs),
    /// CCE and Information Imbalance between two representation CSV files.
    Cce(CceArgs),
    /// Label-noise sweep of MNIST classifiers (presets fig5-mnist, smoke).
    MnistSweep(MnistArgs),
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    alphas: Vec<f64>,
    #[arg(long = "snr", alias = "snrs", value_delimiter = ',', required = true)]
    snrs: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    sigma_w2: f64,
    /// Output CSV path, `-` for standard output.
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// JSON configuration file; missing fields take fig1 defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    ensembles: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    snrs: Option<Vec<f64>>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    n_cce: Option<usize>,
    /// `oracle` or `gd`.
    #[arg(long)]
    solver: Option<String>,
    /// `linear-linear`, `relu-relu` or `linear-relu`.
    #[arg(long)]
    pair: Option<String>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct RunArgs {
    /// Master seed; determines every random draw.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Args)]
struct CceArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// Use a seeded subsample of this many rows.
    #[arg(long)]
    subsample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct MnistArgs {
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory with the four uncompressed MNIST IDX files.
    #[arg(long)]
    mnist_dir: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    #[command(flatten)]
    run: RunArgs,
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Config => 2,
        ErrorClass::Io => 3,
        ErrorClass::Numerical => 4,
    }
}

fn parse_value<T: serde::de::DeserializeOwned>(what: &str, raw: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(raw.to_string()))
        .map_err(|_| Error::Config(format!("invalid {what} '{raw}'")))
}

fn print_config<C: serde::Serialize>(cfg: &C) {
    let json = serde_json::to_string_pretty(cfg).unwrap_or_default();
    eprintln!("resolved config:\n{json}");
}

fn cmd_theory(args: &TheoryArgs) -> Result<()> {
    let mut text = String::from("alpha,snr,rho_star,cce,gen_error,sigma_w2,sigma_eps2\n");
    for &snr in &args.snrs {
        for &alpha in &args.alphas {
            let t = theory_point(alpha, snr, args.sigma_w2)?;
            text.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                t.alpha, t.snr, t.rho_star, t.cce, t.gen_error, t.sigma_w2, t.sigma_eps2
            ));
        }
    }
    write_text(&args.out, &text)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if path.as_os_str() == "-" {
        std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io(path, e))
    } else {
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

fn resolve_sweep(args: &SweepArgs) -> Result<SweepConfig> {
    let mut cfg = match (&args.preset, &args.config) {
        (Some(p), _) => SweepConfig::preset(p)?,
        (None, Some(path)) => SweepConfig::from_json_file(path)?,
        (None, None) => SweepConfig::fig1(),
    };
    if let Some(v) = args.ensembles {
        cfg.ensembles = v;
    }
    if let Some(v) = &args.alphas {
        cfg.alphas = v.clone();
    }
    if let Some(v) = &args.snrs {
        cfg.snrs = v.clone();
    }
    if let Some(v) = args.d {
        cfg.d = v;
    }
    if let Some(v) = args.k {
        cfg.k = v;
    }
    if let Some(v) = args.n_test {
        cfg.n_test = v;
    }
    if let Some(v) = args.n_cce {
        cfg.n_cce = v;
    }
    if let Some(v) = &args.solver {
        cfg.solver = parse_value::<Solver>("solver", v)?;
    }
    if let Some(v) = &args.pair {
        cfg.activation_pair = parse_value::<ActivationPair>("activation pair", v)?;
    }
    if let Some(v) = args.max_steps {
        cfg.train.max_steps = v;
    }
    if let Some(v) = args.run.seed {
        cfg.master_seed = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_parallel<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    with_workers(workers.unwrap_or(0), f)
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let cfg = resolve_sweep(args)?;
    print_config(&cfg);
    let result = run_parallel(args.run.workers, || run_sweep(&cfg, Execution::default()))?;
    emit_csv(&result, &args.run.out)
}

fn cmd_cce(args: &CceArgs) -> Result<()> {
    let a = read_points_csv(&args.a)?;
    let b = read_points_csv(&args.b)?;
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "row counts differ: {} has {} rows, {} has {} rows",
            args.a.display(),
            a.len(),
            args.b.display(),
            b.len()
        )));
    }
    let s = run_parallel(args.workers, || {
        cce_between_with(&a, &b, args.subsample, args.seed, Execution::default())
    })?;
    println!("cce_ab={}", s.cce_ab);
    println!("cce_ba={}", s.cce_ba);
    println!("ii_ab={}", s.ii_ab);
    println!("ii_ba={}", s.ii_ba);
    println!("N={}", s.n_points);
    println!("M={}", s.n_bins);
    Ok(())
}

fn cmd_mnist(args: &MnistArgs) -> Result<()> {
    let mut cfg = match (&args.preset, &args.config) {
        (Some(p), _) => LabelNoiseConfig::preset(p)?,
        (None, Some(path)) => LabelNoiseConfig::from_json_file(path)?,
        (None, None) => LabelNoiseConfig::fig5_mnist(),
    };
    if let Some(v) = args.epochs {
        cfg.schedule.epochs = v;
    }
    if let Some(v) = args.replicates {
        cfg.replicates = v;
    }
    if let Some(v) = args.run.seed {
        cfg.master_seed = v;
    }
    cfg.validate()?;
    let dir = match args.mnist_dir.clone().or_else(|| std::env::var_os(MNIST_DIR_ENV).map(PathBuf::from)) {
        Some(d) => d,
        None => {
            return Err(Error::Config(format!(
                "no MNIST directory: pass --mnist-dir or set {MNIST_DIR_ENV}"
            )))
        }
    };
    print_config(&cfg);
    let (train, test) = load_mnist_dir(&dir)?;
    let result = run_parallel(args.run.workers, || {
        run_label_noise_sweep(&cfg, &train, &test, Execution::default())
    })?;
    emit_csv(&result, &args.run.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Theory(a) => cmd_theory(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Cce(a) => cmd_cce(a),
        Command::MnistSweep(a) => cmd_mnist(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
