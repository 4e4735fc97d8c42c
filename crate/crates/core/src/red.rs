//! Regularization by denoising, `R(x) = I_C(x) + (λ/2)⟨x, x − D(x)⟩`, and its
//! approximate proximal operator.

use crate::denoise::{apply_denoiser, DenoiserSpec};
use crate::error::{Error, Result};
use crate::grid::{ConstraintSet, ImagePlane};

#[derive(Clone, Debug)]
pub struct RedParams {
    /// Prior weight. Zero leaves only the constraint projection.
    pub lambda: f64,
    /// Fixed-point iterations per prox evaluation.
    pub p: usize,
    pub constraint: ConstraintSet,
    pub denoiser: DenoiserSpec,
}

impl RedParams {
    pub fn new(lambda: f64, constraint: ConstraintSet, denoiser: DenoiserSpec) -> Self {
        Self {
            lambda,
            p: 1,
            constraint,
            denoiser,
        }
    }

    pub fn with_iterations(mut self, p: usize) -> Self {
        self.p = p;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if self.p == 0 {
            return Err(Error::InvalidParameter("p must be at least 1".into()));
        }
        Ok(())
    }
}

/// `(λ/2)⟨x, x − D(x)⟩`.
pub fn red_value(x: &ImagePlane, params: &RedParams) -> Result<f64> {
    params.validate()?;
    if params.lambda == 0.0 {
        return Ok(0.0);
    }
    let denoised = apply_denoiser(x, &params.denoiser)?;
    let residual = x.zip_map(&denoised, |a, b| a - b)?;
    Ok(0.5 * params.lambda * x.dot(&residual)?)
}

/// `p` iterations of `s ← Π_C((s₀ + λτ D(s)) / (1 + λτ))` from `s = s₀`.
pub fn prox_red(s: &ImagePlane, tau: f64, params: &RedParams) -> Result<ImagePlane> {
    prox_red_traced(s, tau, params, |_| {})
}

/// [`prox_red`], reporting every iterate to `observe`.
pub fn prox_red_traced(
    s: &ImagePlane,
    tau: f64,
    params: &RedParams,
    mut observe: impl FnMut(&ImagePlane),
) -> Result<ImagePlane> {
    params.validate()?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tau must be > 0, got {tau}"
        )));
    }
    let lt = params.lambda * tau;
    if lt == 0.0 {
        let out = params.constraint.project_real(s)?;
        observe(&out);
        return Ok(out);
    }
    let mut current = s.clone();
    for _ in 0..params.p {
        let denoised = apply_denoiser(&current, &params.denoiser)?;
        let blend = s.zip_map(&denoised, |a, d| (a + lt * d) / (1.0 + lt))?;
        current = params.constraint.project_real(&blend)?;
        observe(&current);
    }
    Ok(current)
}
