//! Experiment harness: builds measurements for a set of images and noise
//! levels, runs the configured algorithms under one of two initialization
//! protocols and scores the restart with the smallest residual.

pub mod config;
pub mod fixtures;
pub mod io;
pub mod report;

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::denoise::DenoiserSpec;
use crate::error::{Error, Result};
use crate::eval::{find_alignment, psnr, ssim, RunReport};
use crate::fourier::Measurement;
use crate::grid::{ComplexField, ImagePlane, OversamplingMap};
use crate::sim::{
    clean_amplitudes, msnr, synthesize_measurement, MsnrKind, NoiseModel, RNG_ALGORITHM,
};
use crate::solvers::{residual, run_solver, Algorithm, SolverConfig, SolverState, DEFAULT_SIGMAS};
use crate::Complex64;

pub use config::{ExperimentConfig, Protocol};

/// Label of the HIO initializer rows in the metrics table.
pub const INITIALIZER_LABEL: &str = "hio_init";

const TAG_NOISE: u64 = 1;
const TAG_INIT: u64 = 2;
const TAG_HIO_INIT: u64 = 3;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic child seed of `base` for the tuple `parts`.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}

/// Real parts drawn from `U[0, 255]` on the object block, zero elsewhere.
pub fn random_init(map: &OversamplingMap, seed: u64) -> ComplexField {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (n, side) = (map.object_side(), map.padded_side());
    ComplexField::from_fn(side, |r, c| {
        if r < n && c < n {
            Complex64::new(rng.random_range(0.0..255.0), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// One ground-truth image at one noise level.
#[derive(Clone, Debug)]
pub struct Case {
    pub name: String,
    /// Position in the image list; keys the per-image seeds.
    pub index: usize,
    pub truth: ImagePlane,
    pub map: OversamplingMap,
    pub meas: Measurement,
    pub clean: Vec<f64>,
    pub seed: u64,
}

impl Case {
    pub fn new(
        name: &str,
        index: usize,
        truth: ImagePlane,
        alpha: f64,
        oversample: usize,
        seed: u64,
    ) -> Result<Self> {
        let map = OversamplingMap::new(truth.side(), oversample)?;
        let noise = NoiseModel {
            alpha,
            seed: derive_seed(seed, &[TAG_NOISE, index as u64, alpha.to_bits()]),
        };
        let meas = synthesize_measurement(&truth, &map, &noise)?;
        let clean = clean_amplitudes(&truth, &map)?;
        Ok(Self {
            name: name.to_owned(),
            index,
            truth,
            map,
            meas,
            clean,
            seed,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.meas.alpha()
    }

    /// Aligns `x` to the truth and computes every metric.
    pub fn evaluate(&self, x: &ImagePlane, label: &str) -> Result<(RunReport, ImagePlane)> {
        let alignment = find_alignment(x, &self.truth)?;
        let aligned = alignment.apply(x);
        let ssim = match ssim(&aligned, &self.truth) {
            Ok(v) => v,
            Err(Error::ImageTooSmall { .. }) => f64::NAN,
            Err(e) => return Err(e),
        };
        let report = RunReport {
            image: self.name.clone(),
            algorithm: label.to_owned(),
            alpha: self.alpha(),
            seed: self.seed,
            restart: 0,
            psnr: psnr(&aligned, &self.truth)?,
            ssim,
            msnr1: msnr(&self.meas, &self.clean, MsnrKind::Intensity)?,
            msnr2: msnr(&self.meas, &self.clean, MsnrKind::Amplitude)?,
            residual: residual(x, &self.meas, &self.map)?,
            iterations: 0,
            wall_ms: 0.0,
            aligned: alignment,
            rng: RNG_ALGORITHM.to_owned(),
            init: String::new(),
        };
        Ok((report, aligned))
    }
}

/// Solver steps spent on one cell, per phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepAccounting {
    pub init_runs: usize,
    pub init_steps: usize,
    pub refine_steps: usize,
    pub algorithm_steps: usize,
}

/// Scored result of one `(image, alpha, algorithm)` cell.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: RunReport,
    /// Reconstruction after alignment to the truth.
    pub aligned: ImagePlane,
    /// Residual at the end of every schedule stage of the selected restart.
    pub trace: Vec<f64>,
    pub accounting: StepAccounting,
}

/// A starting point for one restart of the HIO-initialized protocol.
#[derive(Clone, Debug)]
pub struct Initializer {
    pub restart: usize,
    pub image: ImagePlane,
    pub residual: f64,
    pub trace: Vec<f64>,
    pub accounting: StepAccounting,
}

/// Solver settings shared by every cell of an experiment.
#[derive(Clone, Debug)]
pub struct RunSettings {
    pub iterations: usize,
    pub restarts: usize,
    pub beta: f64,
    pub denoiser: DenoiserSpec,
    pub init_runs: usize,
    pub init_run_iterations: usize,
    pub init_refine_iterations: usize,
}

impl RunSettings {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(Self {
            iterations: cfg.iterations,
            restarts: cfg.restarts,
            beta: cfg.beta,
            denoiser: DenoiserSpec::parse(&cfg.denoiser, &DEFAULT_SIGMAS)?,
            init_runs: cfg.init_runs,
            init_run_iterations: cfg.init_run_iterations,
            init_refine_iterations: cfg.init_refine_iterations,
        })
    }

    pub fn solver_config(&self, algorithm: Algorithm, iterations: usize) -> SolverConfig {
        let mut cfg = SolverConfig::new(algorithm, self.denoiser.clone(), iterations);
        cfg.beta = self.beta;
        cfg
    }
}

struct Candidate {
    restart: usize,
    image: ImagePlane,
    residual: f64,
    trace: Vec<f64>,
    steps: usize,
}

/// Smallest residual, ties to the lowest restart index.
fn select(candidates: Vec<Candidate>) -> Candidate {
    candidates
        .into_iter()
        .min_by(|a, b| {
            a.residual
                .total_cmp(&b.residual)
                .then(a.restart.cmp(&b.restart))
        })
        .expect("at least one restart")
}

fn run_from(
    case: &Case,
    settings: &RunSettings,
    algorithm: Algorithm,
    iterations: usize,
    init: &SolverState,
    restart: usize,
) -> Result<(Candidate, SolverState)> {
    let cfg = settings.solver_config(algorithm, iterations);
    let run = run_solver(init, &cfg, &case.meas, &case.map)?;
    Ok((
        Candidate {
            restart,
            residual: residual(&run.image, &case.meas, &case.map)?,
            image: run.image,
            trace: run.stage_residuals,
            steps: run.iterations,
        },
        run.state,
    ))
}

fn finish(
    case: &Case,
    best: Candidate,
    label: &str,
    init: &str,
    wall_ms: f64,
    accounting: StepAccounting,
) -> Result<Outcome> {
    let (mut report, aligned) = case.evaluate(&best.image, label)?;
    report.restart = best.restart;
    report.residual = best.residual;
    report.iterations = best.steps;
    report.wall_ms = wall_ms;
    report.init = init.to_owned();
    Ok(Outcome {
        report,
        aligned,
        trace: best.trace,
        accounting,
    })
}

/// Random initialization: every restart draws a fresh random point, shared
/// by all algorithms for the same `(image, restart)`.
pub fn protocol_random_init(
    case: &Case,
    settings: &RunSettings,
    algorithm: Algorithm,
) -> Result<Outcome> {
    let start = Instant::now();
    let candidates = (0..settings.restarts)
        .into_par_iter()
        .map(|restart| {
            let seed = derive_seed(case.seed, &[TAG_INIT, case.index as u64, restart as u64]);
            let init = SolverState::from_field(&random_init(&case.map, seed), &case.map)?;
            run_from(
                case,
                settings,
                algorithm,
                settings.iterations,
                &init,
                restart,
            )
            .map(|(c, _)| c)
        })
        .collect::<Result<Vec<_>>>()?;
    let accounting = StepAccounting {
        algorithm_steps: candidates.iter().map(|c| c.steps).sum(),
        ..Default::default()
    };
    let best = select(candidates);
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    finish(case, best, algorithm.name(), "random", wall_ms, accounting)
}

/// Builds the HIO starting point of every restart: the best of
/// `init_runs` short random-start HIO runs, refined by a long HIO run.
pub fn hio_initializers(case: &Case, settings: &RunSettings) -> Result<Vec<Initializer>> {
    (0..settings.restarts)
        .into_par_iter()
        .map(|restart| {
            let runs = (0..settings.init_runs)
                .into_par_iter()
                .map(|run| {
                    let seed = derive_seed(
                        case.seed,
                        &[TAG_HIO_INIT, case.index as u64, restart as u64, run as u64],
                    );
                    let init = SolverState::from_field(&random_init(&case.map, seed), &case.map)?;
                    run_from(
                        case,
                        settings,
                        Algorithm::Hio,
                        settings.init_run_iterations,
                        &init,
                        run,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let init_steps = runs.iter().map(|(c, _)| c.steps).sum();
            let (best, state) = runs
                .into_iter()
                .min_by(|(a, _), (b, _)| {
                    a.residual
                        .total_cmp(&b.residual)
                        .then(a.restart.cmp(&b.restart))
                })
                .expect("init_runs > 0");
            let (refined, _) = if settings.init_refine_iterations > 0 {
                run_from(
                    case,
                    settings,
                    Algorithm::Hio,
                    settings.init_refine_iterations,
                    &state,
                    restart,
                )?
            } else {
                (best, state)
            };
            Ok(Initializer {
                restart,
                residual: refined.residual,
                trace: refined.trace,
                accounting: StepAccounting {
                    init_runs: settings.init_runs,
                    init_steps,
                    refine_steps: settings.init_refine_iterations,
                    algorithm_steps: 0,
                },
                image: refined.image,
            })
        })
        .collect()
}

fn total_accounting(inits: &[Initializer]) -> StepAccounting {
    inits
        .iter()
        .fold(StepAccounting::default(), |acc, i| StepAccounting {
            init_runs: acc.init_runs + i.accounting.init_runs,
            init_steps: acc.init_steps + i.accounting.init_steps,
            refine_steps: acc.refine_steps + i.accounting.refine_steps,
            algorithm_steps: 0,
        })
}

/// Scores the initializer itself, selected by residual over the restarts.
pub fn score_initializers(case: &Case, inits: &[Initializer]) -> Result<Outcome> {
    let best = select(
        inits
            .iter()
            .map(|i| Candidate {
                restart: i.restart,
                image: i.image.clone(),
                residual: i.residual,
                trace: i.trace.clone(),
                steps: i.accounting.refine_steps,
            })
            .collect(),
    );
    finish(
        case,
        best,
        INITIALIZER_LABEL,
        "random",
        0.0,
        total_accounting(inits),
    )
}

/// Runs `algorithm` from each initializer and keeps the smallest residual.
pub fn run_from_initializers(
    case: &Case,
    settings: &RunSettings,
    algorithm: Algorithm,
    inits: &[Initializer],
) -> Result<Outcome> {
    let start = Instant::now();
    let candidates = inits
        .par_iter()
        .map(|i| {
            let init = SolverState::from_image(&i.image, &case.map)?;
            run_from(
                case,
                settings,
                algorithm,
                settings.iterations,
                &init,
                i.restart,
            )
            .map(|(c, _)| c)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut accounting = total_accounting(inits);
    accounting.algorithm_steps = candidates.iter().map(|c| c.steps).sum();
    let best = select(candidates);
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    finish(
        case,
        best,
        algorithm.name(),
        INITIALIZER_LABEL,
        wall_ms,
        accounting,
    )
}

/// HIO initialization followed by `algorithm`. Returns the scored
/// initializer and the scored algorithm output.
pub fn protocol_hio_init(
    case: &Case,
    settings: &RunSettings,
    algorithm: Algorithm,
) -> Result<(Outcome, Outcome)> {
    let inits = hio_initializers(case, settings)?;
    Ok((
        score_initializers(case, &inits)?,
        run_from_initializers(case, settings, algorithm, &inits)?,
    ))
}

/// Ground-truth images of an experiment, in order.
pub fn load_images(cfg: &ExperimentConfig) -> Result<Vec<(String, ImagePlane)>> {
    if !cfg.images.is_empty() {
        return cfg
            .images
            .iter()
            .map(|p| {
                let name = p
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or("image")
                    .to_owned();
                Ok((name, io::load_image_resized(p, cfg.side)?))
            })
            .collect();
    }
    if cfg.fixtures.is_empty() {
        return Ok(fixtures::standard_six(cfg.side)
            .into_iter()
            .map(|f| (f.name.to_owned(), f.image))
            .collect());
    }
    cfg.fixtures
        .iter()
        .map(|name| {
            fixtures::fixture_by_name(name, cfg.side)
                .map(|f| (f.name.to_owned(), f.image))
                .ok_or_else(|| Error::Config(format!("unknown fixture {name:?}")))
        })
        .collect()
}

/// Runs every `(image, alpha, algorithm)` cell. Results are ordered by
/// image, then alpha, then algorithm in configuration order; under the
/// HIO-initialized protocol each `(image, alpha)` block starts with the
/// initializer row.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<Outcome>> {
    cfg.validate()?;
    let settings = RunSettings::from_config(cfg)?;
    let images = load_images(cfg)?;
    let cases: Vec<(usize, String, ImagePlane, f64)> = images
        .into_iter()
        .enumerate()
        .flat_map(|(i, (name, img))| {
            cfg.alphas
                .iter()
                .map(move |&a| (i, name.clone(), img.clone(), a))
                .collect::<Vec<_>>()
        })
        .collect();
    let blocks = cases
        .into_par_iter()
        .map(|(index, name, truth, alpha)| {
            let case = Case::new(&name, index, truth, alpha, cfg.oversample, cfg.seed)?;
            match cfg.protocol {
                Protocol::RandomInit => cfg
                    .algorithms
                    .par_iter()
                    .map(|&a| protocol_random_init(&case, &settings, a))
                    .collect::<Result<Vec<_>>>(),
                Protocol::HioInit => {
                    let inits = hio_initializers(&case, &settings)?;
                    let mut out = vec![score_initializers(&case, &inits)?];
                    out.extend(
                        cfg.algorithms
                            .par_iter()
                            .map(|&a| run_from_initializers(&case, &settings, a, &inits))
                            .collect::<Result<Vec<_>>>()?,
                    );
                    Ok(out)
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

fn file_stem(report: &RunReport) -> String {
    format!("{}_a{}_{}", report.image, report.alpha, report.algorithm)
}

/// Writes `metrics.csv`, the aligned reconstructions and, if requested, the
/// per-stage residual traces under `dir`.
pub fn write_outputs(
    dir: &Path,
    outcomes: &[Outcome],
    save_images: bool,
    save_traces: bool,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let reports: Vec<RunReport> = outcomes.iter().map(|o| o.report.clone()).collect();
    let file = std::fs::File::create(dir.join("metrics.csv"))?;
    report::write_reports_csv(&reports, std::io::BufWriter::new(file))?;
    if save_images {
        for o in outcomes {
            io::save_image(
                &o.aligned,
                &dir.join(format!("{}.png", file_stem(&o.report))),
            )?;
        }
    }
    if save_traces {
        let file = std::fs::File::create(dir.join("traces.csv"))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        w.write_record(["image", "algorithm", "alpha", "stage", "residual"])?;
        for o in outcomes {
            for (stage, r) in o.trace.iter().enumerate() {
                w.write_record([
                    o.report.image.clone(),
                    o.report.algorithm.clone(),
                    o.report.alpha.to_string(),
                    stage.to_string(),
                    r.to_string(),
                ])?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_settings(iterations: usize, restarts: usize) -> RunSettings {
        RunSettings {
            iterations,
            restarts,
            beta: 0.9,
            denoiser: DenoiserSpec::parse("tv", &DEFAULT_SIGMAS).unwrap(),
            init_runs: 3,
            init_run_iterations: 5,
            init_refine_iterations: 10,
        }
    }

    fn case(alpha: f64) -> Case {
        let truth = fixtures::fixture_by_name("blobs", 12).unwrap().image;
        Case::new("blobs", 0, truth, alpha, 2, 5).unwrap()
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a = derive_seed(1, &[2, 0, 0]);
        assert_eq!(a, derive_seed(1, &[2, 0, 0]));
        assert_ne!(a, derive_seed(1, &[2, 0, 1]));
        assert_ne!(a, derive_seed(1, &[2, 1, 0]));
        assert_ne!(a, derive_seed(0, &[2, 0, 0]));
    }

    #[test]
    fn random_init_lives_on_the_object_block() {
        let map = OversamplingMap::double(6).unwrap();
        let f = random_init(&map, 3);
        for r in 0..12 {
            for c in 0..12 {
                let v = f.get(r, c);
                assert_eq!(v.im, 0.0);
                if r < 6 && c < 6 {
                    assert!((0.0..255.0).contains(&v.re));
                } else {
                    assert_eq!(v.re, 0.0);
                }
            }
        }
        assert_eq!(f, random_init(&map, 3));
    }

    #[test]
    fn zero_iterations_echo_the_random_init() {
        let case = case(0.0);
        let out = protocol_random_init(&case, &small_settings(0, 1), Algorithm::RedItaF).unwrap();
        let seed = derive_seed(case.seed, &[TAG_INIT, 0, 0]);
        let init = case.map.extract(&random_init(&case.map, seed)).unwrap();
        let (expected, _) = case.evaluate(&init, "x").unwrap();
        assert_eq!(out.report.psnr, expected.psnr);
        assert_eq!(out.report.residual, expected.residual);
        assert_eq!(out.report.iterations, 0);
    }

    #[test]
    fn zero_iterations_echo_the_hio_initializer() {
        let case = case(2.0);
        let (init, out) =
            protocol_hio_init(&case, &small_settings(0, 2), Algorithm::RedItaS).unwrap();
        assert_eq!(init.report.psnr, out.report.psnr);
        assert_eq!(init.report.residual, out.report.residual);
        assert_eq!(init.report.restart, out.report.restart);
        assert_eq!(
            out.accounting,
            StepAccounting {
                init_runs: 6,
                init_steps: 30,
                refine_steps: 20,
                algorithm_steps: 0
            }
        );
    }

    #[test]
    fn selected_restart_has_the_smallest_residual() {
        let case = case(0.0);
        let settings = small_settings(8, 3);
        let out = protocol_random_init(&case, &settings, Algorithm::Hio).unwrap();
        for restart in 0..3 {
            let seed = derive_seed(case.seed, &[TAG_INIT, 0, restart]);
            let init = SolverState::from_field(&random_init(&case.map, seed), &case.map).unwrap();
            let (c, _) =
                run_from(&case, &settings, Algorithm::Hio, 8, &init, restart as usize).unwrap();
            assert!(out.report.residual <= c.residual);
        }
        assert_eq!(out.accounting.algorithm_steps, 24);
    }

    #[test]
    fn experiment_is_deterministic_and_ordered() {
        let cfg = ExperimentConfig {
            fixtures: vec!["tiles".into(), "blobs".into()],
            side: 12,
            alphas: vec![0.0, 3.0],
            algorithms: vec![Algorithm::Hio, Algorithm::RedItaF],
            protocol: Protocol::HioInit,
            restarts: 2,
            iterations: 6,
            init_runs: 2,
            init_run_iterations: 3,
            init_refine_iterations: 4,
            ..Default::default()
        };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        let labels: Vec<_> = a
            .iter()
            .map(|o| {
                (
                    o.report.image.as_str(),
                    o.report.alpha,
                    o.report.algorithm.as_str(),
                )
            })
            .collect();
        assert_eq!(labels.len(), 12);
        assert_eq!(labels[0], ("tiles", 0.0, INITIALIZER_LABEL));
        assert_eq!(labels[2], ("tiles", 0.0, "red_ita_f"));
        assert_eq!(labels[3], ("tiles", 3.0, INITIALIZER_LABEL));
        assert_eq!(labels[6], ("blobs", 0.0, INITIALIZER_LABEL));
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.aligned, y.aligned);
            assert_eq!(x.report.psnr, y.report.psnr);
            assert_eq!(x.report.residual, y.report.residual);
        }

        let dir = tempfile::tempdir().unwrap();
        write_outputs(dir.path(), &a, true, true).unwrap();
        let text = std::fs::read(dir.path().join("metrics.csv")).unwrap();
        let back = report::read_reports_csv(text.as_slice()).unwrap();
        assert_eq!(back.len(), 12);
        assert!(dir.path().join("tiles_a3_red_ita_f.png").is_file());
        assert!(dir.path().join("traces.csv").is_file());
    }
}
