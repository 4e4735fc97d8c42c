use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use redita::denoise::DenoiserSpec;
use redita::grid::OversamplingMap;
use redita::harness::fixtures::fixture_by_name;
use redita::harness::io::{load_image_resized, save_image};
use redita::harness::report::summarize;
use redita::harness::{derive_seed, random_init, run_experiment, write_outputs, ExperimentConfig};
use redita::sim::{
    load_measurement, save_measurement, synthesize_measurement, write_measurement_csv, NoiseModel,
};
use redita::solvers::{residual, run_solver, Algorithm, SolverConfig, SolverState, DEFAULT_SIGMAS};

#[derive(Parser)]
#[command(
    name = "redita",
    version,
    about = "Oversampled Fourier phase retrieval"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment grid and write metrics, images and traces.
    Run(RunArgs),
    /// Simulate a noisy measurement of one image.
    Simulate(SimulateArgs),
    /// Reconstruct an image from a measurement file without ground truth.
    Reconstruct(ReconstructArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; flags below override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ground-truth image (PNG/PGM); repeatable.
    #[arg(long = "image")]
    images: Vec<PathBuf>,
    /// Procedural fixture name; repeatable.
    #[arg(long = "fixture")]
    fixtures: Vec<String>,
    /// Comma-separated algorithm names.
    #[arg(long, value_delimiter = ',')]
    algorithm: Vec<Algorithm>,
    /// Comma-separated noise levels.
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// `random_init` or `hio_init`.
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    denoiser: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    side: Option<usize>,
    #[arg(long)]
    oversample: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    /// Also write per-stage residual traces.
    #[arg(long)]
    traces: bool,
    /// Skip writing reconstructed images.
    #[arg(long)]
    no_images: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
    image: Option<PathBuf>,
    #[arg(long)]
    fixture: Option<String>,
    #[arg(long, default_value_t = 128)]
    side: usize,
    #[arg(long, default_value_t = 2)]
    oversample: usize,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; `.csv` writes `row,col,amplitude`, anything else the binary format.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Binary measurement file written by `simulate`.
    #[arg(long)]
    measurement: PathBuf,
    #[arg(long, default_value = "red_ita_s")]
    algorithm: Algorithm,
    #[arg(long, default_value_t = 1200)]
    iters: usize,
    #[arg(long, default_value = "tv")]
    denoiser: String,
    /// Amplitude noise level used to scale the prior; defaults to the file's value.
    #[arg(long)]
    sigma_bar: Option<f64>,
    #[arg(long, default_value_t = 2)]
    oversample: usize,
    #[arg(long, default_value_t = 0.9)]
    beta: f64,
    #[arg(long, default_value_t = 3)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output image (PNG or PGM).
    #[arg(long)]
    out: PathBuf,
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if !args.images.is_empty() {
        cfg.images = args.images;
    }
    if !args.fixtures.is_empty() {
        cfg.fixtures = args.fixtures;
    }
    if !args.algorithm.is_empty() {
        cfg.algorithms = args.algorithm;
    }
    if !args.alpha.is_empty() {
        cfg.alphas = args.alpha;
    }
    if let Some(p) = args.protocol {
        cfg.protocol = p.parse()?;
    }
    cfg.seed = args.seed.unwrap_or(cfg.seed);
    cfg.denoiser = args.denoiser.unwrap_or(cfg.denoiser);
    cfg.out = args.out.or(cfg.out);
    cfg.iterations = args.iters.unwrap_or(cfg.iterations);
    cfg.restarts = args.restarts.unwrap_or(cfg.restarts);
    cfg.side = args.side.unwrap_or(cfg.side);
    cfg.oversample = args.oversample.unwrap_or(cfg.oversample);
    cfg.beta = args.beta.unwrap_or(cfg.beta);
    cfg.save_traces |= args.traces;
    cfg.save_images &= !args.no_images;

    let start = Instant::now();
    let outcomes = run_experiment(&cfg)?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    write_outputs(&out, &outcomes, cfg.save_images, cfg.save_traces)
        .with_context(|| format!("writing results to {}", out.display()))?;

    println!(
        "{:<12} {:>6} {:>6} {:>10} {:>8}",
        "algorithm", "alpha", "images", "psnr_dB", "ssim"
    );
    let reports: Vec<_> = outcomes.iter().map(|o| o.report.clone()).collect();
    for row in summarize(&reports) {
        println!(
            "{:<12} {:>6} {:>6} {:>10.2} {:>8.4}",
            row.algorithm, row.alpha, row.images, row.mean_psnr, row.mean_ssim
        );
    }
    println!(
        "{} cells in {:.1}s, metrics in {}",
        outcomes.len(),
        start.elapsed().as_secs_f64(),
        out.join("metrics.csv").display()
    );
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let truth = match (&args.image, &args.fixture) {
        (Some(path), _) => load_image_resized(path, args.side)?,
        (None, Some(name)) => match fixture_by_name(name, args.side) {
            Some(f) => f.image,
            None => bail!("unknown fixture {name:?}"),
        },
        (None, None) => bail!("pass --image or --fixture"),
    };
    let map = OversamplingMap::new(args.side, args.oversample)?;
    let noise = NoiseModel {
        alpha: args.alpha,
        seed: args.seed,
    };
    let meas = synthesize_measurement(&truth, &map, &noise)?;
    if has_extension(&args.out, "csv") {
        let file = std::fs::File::create(&args.out)
            .with_context(|| format!("creating {}", args.out.display()))?;
        write_measurement_csv(&meas, std::io::BufWriter::new(file))?;
    } else {
        save_measurement(&meas, &args.out)?;
    }
    println!(
        "wrote {} ({}x{} bins, alpha {}, sigma_bar {:.6})",
        args.out.display(),
        meas.side(),
        meas.side(),
        meas.alpha(),
        meas.sigma_bar()
    );
    Ok(())
}

fn has_extension(path: &Path, ext: &str) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

fn reconstruct(args: ReconstructArgs) -> Result<()> {
    let mut meas = load_measurement(&args.measurement)
        .with_context(|| format!("reading {}", args.measurement.display()))?;
    if let Some(s) = args.sigma_bar {
        meas = meas.with_sigma_bar(s)?;
    }
    if meas.side() % args.oversample != 0 {
        bail!(
            "measurement side {} is not a multiple of the oversampling factor {}",
            meas.side(),
            args.oversample
        );
    }
    if args.restarts == 0 {
        bail!("--restarts must be positive");
    }
    let map = OversamplingMap::new(meas.side() / args.oversample, args.oversample)?;
    let mut cfg = SolverConfig::new(
        args.algorithm,
        DenoiserSpec::parse(&args.denoiser, &DEFAULT_SIGMAS)?,
        args.iters,
    );
    cfg.beta = args.beta;

    let mut best = None;
    for restart in 0..args.restarts {
        let init = random_init(&map, derive_seed(args.seed, &[restart as u64]));
        let run = run_solver(&SolverState::from_field(&init, &map)?, &cfg, &meas, &map)?;
        let r = residual(&run.image, &meas, &map)?;
        println!("restart {restart}: residual {r:.6e}");
        if best.as_ref().is_none_or(|(_, b)| r < *b) {
            best = Some((run.image, r));
        }
    }
    let (image, r) = best.expect("at least one restart");
    save_image(&image, &args.out)?;
    println!("wrote {} (residual {r:.6e})", args.out.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Simulate(args) => simulate(args),
        Command::Reconstruct(args) => reconstruct(args),
    }
}
