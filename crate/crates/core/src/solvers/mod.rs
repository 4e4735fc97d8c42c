//! Iterative phase-retrieval solvers and the schedule-driven driver.

mod steps;

use std::fmt;
use std::str::FromStr;

pub use steps::{
    admm_indicator_step, amplitude_gradient, er_step, hio_step, lowpass, oss_step, pnp_admm_step,
    prred_step, red_ita_f_step, red_ita_s_step, residual, x_update_tau, SolverState,
};

use crate::denoise::DenoiserSpec;
use crate::error::{Error, Result};
use crate::fourier::Measurement;
use crate::grid::{ConstraintSet, ImagePlane, OversamplingMap};
use crate::red::RedParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Hio,
    Er,
    Hpr,
    Oss,
    PnpAdmm,
    PrRed,
    RedItaF,
    RedItaS,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Self::Hio,
        Self::Er,
        Self::Hpr,
        Self::Oss,
        Self::PnpAdmm,
        Self::PrRed,
        Self::RedItaF,
        Self::RedItaS,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Hio => "hio",
            Self::Er => "er",
            Self::Hpr => "hpr",
            Self::Oss => "oss",
            Self::PnpAdmm => "pnp_admm",
            Self::PrRed => "prred",
            Self::RedItaF => "red_ita_f",
            Self::RedItaS => "red_ita_s",
        }
    }

    /// `λ = c · σ̄²` coefficient for the prior-based solvers.
    pub fn lambda_coefficient(self) -> f64 {
        match self {
            Self::RedItaF | Self::RedItaS => 0.025,
            Self::PrRed => 0.05,
            Self::PnpAdmm => 0.01,
            Self::Hio | Self::Er | Self::Hpr | Self::Oss => 0.0,
        }
    }

    pub fn uses_denoiser(self) -> bool {
        matches!(
            self,
            Self::PnpAdmm | Self::PrRed | Self::RedItaF | Self::RedItaS
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|a| a.name() == key)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm {s:?}")))
    }
}

/// One block of iterations at a fixed denoiser strength.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stage {
    pub sigma: f64,
    pub iterations: usize,
    /// Scales `λ` and `ρ` for this stage.
    pub multiplier: f64,
}

impl Stage {
    pub fn new(sigma: f64, iterations: usize) -> Self {
        Self {
            sigma,
            iterations,
            multiplier: 1.0,
        }
    }
}

/// Denoiser strengths of the default schedule.
pub const DEFAULT_SIGMAS: [f64; 4] = [60.0, 40.0, 20.0, 10.0];

/// `total` iterations split as evenly as possible over [`DEFAULT_SIGMAS`].
pub fn default_schedule(total: usize) -> Vec<Stage> {
    let k = DEFAULT_SIGMAS.len();
    DEFAULT_SIGMAS
        .iter()
        .enumerate()
        .map(|(i, &s)| Stage::new(s, total / k + usize::from(i < total % k)))
        .filter(|s| s.iterations > 0)
        .collect()
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// HIO/HPR/OSS feedback.
    pub beta: f64,
    /// Fixed ADMM penalty; `None` derives `ρ = λ/2` per stage.
    pub rho: Option<f64>,
    /// Fixed prior weight; `None` derives `λ = c · σ̄²` per stage.
    pub lambda: Option<f64>,
    /// prRED step; `None` uses `n/m`.
    pub mu: Option<f64>,
    /// Prior used by prRED and RED-ITA (its `lambda` is set per stage) and
    /// the denoiser used by PnP-ADMM.
    pub red: RedParams,
    pub schedule: Vec<Stage>,
    /// Add `Re ≥ 0` to the support constraint of HIO, ER and OSS.
    pub nonneg_projection: bool,
    pub oss_stages: usize,
}

impl SolverConfig {
    pub fn new(algorithm: Algorithm, denoiser: DenoiserSpec, total_iterations: usize) -> Self {
        Self {
            algorithm,
            beta: 0.9,
            rho: None,
            lambda: None,
            mu: None,
            red: RedParams::new(0.0, ConstraintSet::NonnegReal, denoiser),
            schedule: default_schedule(total_iterations),
            nonneg_projection: false,
            oss_stages: 10,
        }
    }

    pub fn total_iterations(&self) -> usize {
        self.schedule.iter().map(|s| s.iterations).sum()
    }

    /// `(λ, ρ)` for a stage.
    pub fn stage_parameters(&self, stage: &Stage, sigma_bar: f64) -> (f64, f64) {
        let lambda = self
            .lambda
            .unwrap_or(self.algorithm.lambda_coefficient() * sigma_bar * sigma_bar)
            * stage.multiplier;
        let rho = self.rho.map_or(lambda / 2.0, |r| r * stage.multiplier);
        (lambda, rho)
    }

    /// Constraint of the projection methods on the padded grid.
    pub fn projection_constraint(&self, map: &OversamplingMap) -> ConstraintSet {
        let nonneg = match self.algorithm {
            Algorithm::Hpr => true,
            Algorithm::Hio | Algorithm::Er | Algorithm::Oss => self.nonneg_projection,
            _ => false,
        };
        if nonneg {
            ConstraintSet::SupportAndNonneg(map.support())
        } else {
            ConstraintSet::Support(map.support())
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schedule.iter().any(|s| s.iterations == 0) {
            return Err(Error::InvalidParameter(
                "schedule iteration counts must be positive".into(),
            ));
        }
        if !(self.beta >= 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in [0, 1], got {}",
                self.beta
            )));
        }
        if self.oss_stages == 0 {
            return Err(Error::InvalidParameter(
                "oss_stages must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Reported to the observer before each step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepEvent {
    pub iteration: usize,
    pub stage: usize,
    pub sigma: f64,
    pub lambda: f64,
    pub rho: f64,
}

#[derive(Clone, Debug)]
pub struct SolverRun {
    pub image: ImagePlane,
    pub state: SolverState,
    /// Residual at the end of every stage.
    pub stage_residuals: Vec<f64>,
    pub iterations: usize,
}

/// Object estimate carried by `state` for `algorithm`.
pub fn current_estimate(
    algorithm: Algorithm,
    state: &SolverState,
    map: &OversamplingMap,
) -> Result<ImagePlane> {
    match algorithm {
        Algorithm::Hio | Algorithm::Er | Algorithm::Hpr | Algorithm::Oss => {
            map.extract(&state.padded)
        }
        _ => Ok(state.x.clone()),
    }
}

pub fn run_solver(
    init: &SolverState,
    config: &SolverConfig,
    meas: &Measurement,
    map: &OversamplingMap,
) -> Result<SolverRun> {
    run_solver_observed(init, config, meas, map, |_| {})
}

/// OSS filter width at `iteration`: the run is cut into `stages` equal
/// blocks whose widths fall linearly from the padded side to a tenth of it.
pub fn oss_filter_sigma(iteration: usize, total: usize, stages: usize, padded_side: usize) -> f64 {
    let full = padded_side as f64;
    let stage = (iteration * stages / total.max(1)).min(stages - 1);
    if stages == 1 {
        return full;
    }
    full * (1.0 - 0.9 * stage as f64 / (stages - 1) as f64)
}

/// Runs the configured solver through its schedule from `init`.
pub fn run_solver_observed(
    init: &SolverState,
    config: &SolverConfig,
    meas: &Measurement,
    map: &OversamplingMap,
    mut observe: impl FnMut(&StepEvent),
) -> Result<SolverRun> {
    config.validate()?;
    if meas.side() != map.padded_side() {
        return Err(Error::DimensionMismatch {
            expected: map.m(),
            actual: meas.side() * meas.side(),
        });
    }
    let algorithm = config.algorithm;
    let constraint = config.projection_constraint(map);
    let total = config.total_iterations();
    let mu = config.mu.unwrap_or(map.n() as f64 / map.m() as f64);
    let mut state = init.clone();
    let mut stage_residuals = Vec::with_capacity(config.schedule.len());
    let mut iteration = 0;

    for (stage_idx, stage) in config.schedule.iter().enumerate() {
        let (lambda, rho) = config.stage_parameters(stage, meas.sigma_bar());
        let mut red = config.red.clone();
        red.lambda = lambda;
        red.denoiser = config.red.denoiser.with_strength(stage.sigma);

        for _ in 0..stage.iterations {
            observe(&StepEvent {
                iteration,
                stage: stage_idx,
                sigma: stage.sigma,
                lambda,
                rho,
            });
            state = match algorithm {
                Algorithm::Hio | Algorithm::Hpr => SolverState {
                    padded: hio_step(&state.padded, meas, &constraint, config.beta)?,
                    iter: state.iter + 1,
                    ..state
                },
                Algorithm::Er => SolverState {
                    padded: er_step(&state.padded, meas, &constraint)?,
                    iter: state.iter + 1,
                    ..state
                },
                Algorithm::Oss => {
                    let width =
                        oss_filter_sigma(iteration, total, config.oss_stages, map.padded_side());
                    SolverState {
                        padded: oss_step(&state.padded, meas, &constraint, config.beta, width)?,
                        iter: state.iter + 1,
                        ..state
                    }
                }
                Algorithm::PnpAdmm => pnp_admm_step(&state, meas, map, &red.denoiser)?,
                Algorithm::PrRed => {
                    let x = prred_step(&state.x, meas, map, mu, &red)?;
                    SolverState {
                        padded: map.embed(&x)?,
                        x,
                        iter: state.iter + 1,
                        ..state
                    }
                }
                Algorithm::RedItaF => red_ita_f_step(&state, meas, map, rho, &red)?,
                Algorithm::RedItaS => red_ita_s_step(&state, meas, map, rho, &red)?,
            };
            if !state.is_finite() {
                return Err(Error::NonFinite(format!(
                    "{algorithm} state at iteration {iteration} (stage {stage_idx}, sigma {})",
                    stage.sigma
                )));
            }
            iteration += 1;
        }
        let estimate = current_estimate(algorithm, &state, map)?;
        stage_residuals.push(residual(&estimate, meas, map)?);
    }

    if !algorithm.uses_denoiser() && total > 0 {
        state.x = map.extract(&state.padded)?;
    }
    Ok(SolverRun {
        image: current_estimate(algorithm, &state, map)?,
        state,
        stage_residuals,
        iterations: iteration,
    })
}
