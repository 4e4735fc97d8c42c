//! Unitary 2-D DFT and the Fourier-domain operators: the projection onto the
//! measurement set `M = {v : |F v| = y}` and the proximal operator of the
//! amplitude loss `f(z) = ½‖y − |F z|‖²`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::ComplexField;
use crate::Complex64;

struct Plan2d {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plan(side: usize) -> Arc<Plan2d> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plan2d>>>> = OnceLock::new();
    let mut cache = CACHE
        .get_or_init(Default::default)
        .lock()
        .unwrap_or_else(|e| e.into_inner());
    cache
        .entry(side)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plan2d {
                forward: planner.plan_fft_forward(side),
                inverse: planner.plan_fft_inverse(side),
            })
        })
        .clone()
}

fn transpose(data: &mut [Complex64], side: usize) {
    for r in 0..side {
        for c in r + 1..side {
            data.swap(r * side + c, c * side + r);
        }
    }
}

fn transform(v: &ComplexField, inverse: bool) -> ComplexField {
    let side = v.side();
    let plan = plan(side);
    let fft = if inverse {
        &plan.inverse
    } else {
        &plan.forward
    };
    let mut data = v.values().to_vec();
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(&mut data, &mut scratch);
    transpose(&mut data, side);
    fft.process_with_scratch(&mut data, &mut scratch);
    transpose(&mut data, side);
    let k = 1.0 / side as f64;
    for x in &mut data {
        *x *= k;
    }
    ComplexField::new(side, data).expect("square field")
}

/// Unitary forward DFT (`1/sqrt(m)` scaling).
pub fn dft2(v: &ComplexField) -> ComplexField {
    transform(v, false)
}

/// Unitary inverse DFT (`1/sqrt(m)` scaling).
pub fn idft2(v: &ComplexField) -> ComplexField {
    transform(v, true)
}

/// Oversampled Fourier amplitudes with their noise metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    side: usize,
    amplitudes: Vec<f64>,
    alpha: f64,
    sigma_bar: f64,
}

/// Amplitude-noise estimate used when no noise was added.
pub const NOISE_FREE_SIGMA_BAR: f64 = 0.1;

impl Measurement {
    pub fn new(side: usize, amplitudes: Vec<f64>, alpha: f64, sigma_bar: f64) -> Result<Self> {
        if amplitudes.len() != side * side {
            return Err(Error::DimensionMismatch {
                expected: side * side,
                actual: amplitudes.len(),
            });
        }
        if let Some(bad) = amplitudes.iter().find(|y| !(**y >= 0.0 && y.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "amplitudes must be finite and nonnegative, found {bad}"
            )));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be >= 0, got {alpha}"
            )));
        }
        if !(sigma_bar >= 0.0 && sigma_bar.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma_bar must be >= 0, got {sigma_bar}"
            )));
        }
        Ok(Self {
            side,
            amplitudes,
            alpha,
            sigma_bar,
        })
    }

    /// Noise-free measurement `y = |F v|`.
    pub fn exact(v: &ComplexField) -> Self {
        let amplitudes = dft2(v).values().iter().map(|q| q.norm()).collect();
        Self {
            side: v.side(),
            amplitudes,
            alpha: 0.0,
            sigma_bar: NOISE_FREE_SIGMA_BAR,
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma_bar(&self) -> f64 {
        self.sigma_bar
    }

    /// Replaces the amplitude-noise estimate, e.g. with a user-supplied value
    /// for blind reconstruction.
    pub fn with_sigma_bar(mut self, sigma_bar: f64) -> Result<Self> {
        if !(sigma_bar >= 0.0 && sigma_bar.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma_bar must be >= 0, got {sigma_bar}"
            )));
        }
        self.sigma_bar = sigma_bar;
        Ok(self)
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|y| y * y).sum::<f64>().sqrt()
    }

    fn check(&self, v: &ComplexField) -> Result<()> {
        if v.side() != self.side {
            return Err(Error::DimensionMismatch {
                expected: self.side * self.side,
                actual: v.len(),
            });
        }
        Ok(())
    }
}

/// Unit phasor of `q`, with phase 0 where `q` vanishes.
pub(crate) fn phase(q: Complex64) -> Complex64 {
    let r = q.norm();
    if r > 0.0 {
        q / r
    } else {
        Complex64::new(1.0, 0.0)
    }
}

/// `Π_M(v) = F⁻¹(y ⊙ Fv / |Fv|)`. Bins where `Fv` vanishes get phase 0.
pub fn project_measurement(v: &ComplexField, meas: &Measurement) -> Result<ComplexField> {
    meas.check(v)?;
    let mut spectrum = dft2(v);
    for (q, &y) in spectrum.values_mut().iter_mut().zip(&meas.amplitudes) {
        *q = phase(*q) * y;
    }
    Ok(idft2(&spectrum))
}

/// `f(v) = ½‖y − |F v|‖²`.
pub fn amplitude_loss(v: &ComplexField, meas: &Measurement) -> Result<f64> {
    meas.check(v)?;
    Ok(0.5
        * dft2(v)
            .values()
            .iter()
            .zip(&meas.amplitudes)
            .map(|(q, y)| (y - q.norm()).powi(2))
            .sum::<f64>())
}

/// `prox_{τf}(v) = v/(τ+1) + τ/(τ+1) · Π_M(v)`, the global minimizer of
/// `τ·f(z) + ½‖v − z‖²`.
pub fn prox_amplitude(v: &ComplexField, meas: &Measurement, tau: f64) -> Result<ComplexField> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tau must be > 0, got {tau}"
        )));
    }
    let projected = project_measurement(v, meas)?;
    let (a, b) = (1.0 / (tau + 1.0), tau / (tau + 1.0));
    v.zip_map(&projected, |v, p| v * a + p * b)
}
