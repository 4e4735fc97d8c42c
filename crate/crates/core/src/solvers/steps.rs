//! One iteration of every solver, as a pure state transformer.

use crate::denoise::{apply_denoiser, DenoiserSpec};
use crate::error::{Error, Result};
use crate::fourier::{
    amplitude_loss, dft2, idft2, project_measurement, prox_amplitude, Measurement,
};
use crate::grid::{ComplexField, ConstraintSet, ImagePlane, OversamplingMap};
use crate::red::{prox_red, RedParams};
use crate::Complex64;

/// Iterates shared by all solvers.
///
/// Projection methods (HIO, HPR, ER, OSS) evolve `padded` only. The ADMM
/// solvers keep `padded = O x` in sync with `x`; prRED evolves `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub x: ImagePlane,
    pub padded: ComplexField,
    pub z: ComplexField,
    pub u: ComplexField,
    /// Slack of RED-ITA-S; stays zero for every other solver.
    pub xi: ComplexField,
    pub iter: usize,
}

impl SolverState {
    /// Starts every padded variable from `init` (`z⁰ = x̃⁰ = init`) with zero
    /// duals and slack.
    pub fn from_field(init: &ComplexField, map: &OversamplingMap) -> Result<Self> {
        let x = map.extract(init)?;
        let zeros = ComplexField::zeros(init.side());
        Ok(Self {
            x,
            padded: init.clone(),
            z: init.clone(),
            u: zeros.clone(),
            xi: zeros,
            iter: 0,
        })
    }

    pub fn from_image(x: &ImagePlane, map: &OversamplingMap) -> Result<Self> {
        Self::from_field(&map.embed(x)?, map)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite()
            && self.padded.is_finite()
            && self.z.is_finite()
            && self.u.is_finite()
            && self.xi.is_finite()
    }
}

fn support_of(constraint: &ConstraintSet, len: usize) -> Result<&crate::grid::Mask> {
    let mask = constraint.mask().ok_or(Error::MissingSupport)?;
    if mask.len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            actual: mask.len(),
        });
    }
    Ok(mask)
}

/// Hybrid input-output. With `z̃ = Π_M(x̃)`, pixels in the support take `z̃`
/// and the rest take the feedback `x̃ − β z̃`.
///
/// Under `SupportAndNonneg` this is HPR: an in-support pixel whose reflection
/// `2z̃ − x̃` has negative real part gets the feedback on its real part only,
/// the imaginary part taking `z̃`.
pub fn hio_step(
    xt: &ComplexField,
    meas: &Measurement,
    constraint: &ConstraintSet,
    beta: f64,
) -> Result<ComplexField> {
    let mask = support_of(constraint, xt.len())?;
    let nonneg = constraint.requires_nonneg();
    let zt = project_measurement(xt, meas)?;
    let values = xt
        .values()
        .iter()
        .zip(zt.values())
        .enumerate()
        .map(|(i, (&x, &z))| {
            if !mask.contains(i) {
                x - z * beta
            } else if nonneg && 2.0 * z.re - x.re < 0.0 {
                Complex64::new(x.re - beta * z.re, z.im)
            } else {
                z
            }
        })
        .collect();
    ComplexField::new(xt.side(), values)
}

/// Error reduction: `Π_C(Π_M(x̃))`.
pub fn er_step(
    xt: &ComplexField,
    meas: &Measurement,
    constraint: &ConstraintSet,
) -> Result<ComplexField> {
    support_of(constraint, xt.len())?;
    constraint.project_complex(&project_measurement(xt, meas)?)
}

/// Gaussian low-pass `exp(−|k|² / 2σ²)` applied in the Fourier domain, with
/// `k` the signed frequency index.
pub fn lowpass(v: &ComplexField, filter_sigma: f64) -> ComplexField {
    let side = v.side();
    let signed = |k: usize| {
        if k <= side / 2 {
            k as f64
        } else {
            k as f64 - side as f64
        }
    };
    let mut spectrum = dft2(v);
    for (i, q) in spectrum.values_mut().iter_mut().enumerate() {
        let (k1, k2) = (signed(i / side), signed(i % side));
        *q *= (-(k1 * k1 + k2 * k2) / (2.0 * filter_sigma * filter_sigma)).exp();
    }
    idft2(&spectrum)
}

/// Oversampling smoothness: an HIO step whose out-of-support region is
/// replaced by the low-passed HIO output. An infinite width skips filtering.
pub fn oss_step(
    xt: &ComplexField,
    meas: &Measurement,
    constraint: &ConstraintSet,
    beta: f64,
    filter_sigma: f64,
) -> Result<ComplexField> {
    let hio = hio_step(xt, meas, constraint, beta)?;
    if filter_sigma.is_infinite() {
        return Ok(hio);
    }
    if filter_sigma.is_nan() || filter_sigma <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "filter width must be > 0, got {filter_sigma}"
        )));
    }
    let mask = support_of(constraint, xt.len())?;
    let smooth = lowpass(&hio, filter_sigma);
    let values = hio
        .values()
        .iter()
        .zip(smooth.values())
        .enumerate()
        .map(|(i, (&h, &s))| if mask.contains(i) { h } else { s })
        .collect();
    ComplexField::new(xt.side(), values)
}

/// ADMM on `I_M(z) + I_C(x̃)` subject to `z = x̃`:
/// `x̃ ← Π_C(z + u); z ← Π_M(x̃ − u); u ← u + z − x̃`.
pub fn admm_indicator_step(
    state: &SolverState,
    meas: &Measurement,
    map: &OversamplingMap,
    project: impl Fn(&ComplexField) -> Result<ComplexField>,
) -> Result<SolverState> {
    let xt = project(&state.z.add(&state.u)?)?;
    let z = project_measurement(&xt.sub(&state.u)?, meas)?;
    let u = state.u.add(&z.sub(&xt)?)?;
    Ok(SolverState {
        x: map.extract(&xt)?,
        padded: xt,
        z,
        u,
        xi: state.xi.clone(),
        iter: state.iter + 1,
    })
}

/// PnP-ADMM with the denoising step first:
/// `x ← D(extract(z + u)); x̃ ← O x; z ← Π_M(x̃ − u); u ← u + z − x̃`.
pub fn pnp_admm_step(
    state: &SolverState,
    meas: &Measurement,
    map: &OversamplingMap,
    denoiser: &DenoiserSpec,
) -> Result<SolverState> {
    let x = apply_denoiser(&map.extract(&state.z.add(&state.u)?)?, denoiser)?;
    let xt = map.embed(&x)?;
    let z = project_measurement(&xt.sub(&state.u)?, meas)?;
    let u = state.u.add(&z.sub(&xt)?)?;
    Ok(SolverState {
        x,
        padded: xt,
        z,
        u,
        xi: state.xi.clone(),
        iter: state.iter + 1,
    })
}

/// Gradient of `f(x) = ½‖y − |F O x|‖²`: `Oᵀ Re(O x − Π_M(O x))`. Bins where
/// `F O x` vanishes contribute through phase 0.
pub fn amplitude_gradient(
    x: &ImagePlane,
    meas: &Measurement,
    map: &OversamplingMap,
) -> Result<ImagePlane> {
    let xt = map.embed(x)?;
    let diff = xt.sub(&project_measurement(&xt, meas)?)?;
    map.adjoint_real(&diff)
}

/// prRED forward-backward step `x ← prox_{μR}(x − μ ∇f(x))`.
pub fn prred_step(
    x: &ImagePlane,
    meas: &Measurement,
    map: &OversamplingMap,
    mu: f64,
    red: &RedParams,
) -> Result<ImagePlane> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidParameter(format!("mu must be > 0, got {mu}")));
    }
    let g = amplitude_gradient(x, meas, map)?;
    let s = x.zip_map(&g, |a, b| a - mu * b)?;
    prox_red(&s, mu, red)
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "rho must be > 0, got {rho}"
        )));
    }
    Ok(())
}

/// `τ = n / (m ρ)`, the prox weight of the x-update.
pub fn x_update_tau(map: &OversamplingMap, rho: f64) -> f64 {
    map.n() as f64 / (map.m() as f64 * rho)
}

/// RED-ITA-F: ADMM relaxing the Fourier constraint into the amplitude loss.
///
/// ```text
/// v = z + u;  τ = n/(mρ);  x ← prox_{τR}((n/m) Re(Oᵀ v));  x̃ = O x
/// z ← prox_{f/ρ}(x̃ − u);  u ← u + z − x̃
/// ```
pub fn red_ita_f_step(
    state: &SolverState,
    meas: &Measurement,
    map: &OversamplingMap,
    rho: f64,
    red: &RedParams,
) -> Result<SolverState> {
    check_rho(rho)?;
    let v = state.z.add(&state.u)?;
    let x = prox_red(&map.extract(&v)?, x_update_tau(map, rho), red)?;
    let xt = map.embed(&x)?;
    let z = prox_amplitude(&xt.sub(&state.u)?, meas, 1.0 / rho)?;
    let u = state.u.add(&z.sub(&xt)?)?;
    Ok(SolverState {
        x,
        padded: xt,
        z,
        u,
        xi: state.xi.clone(),
        iter: state.iter + 1,
    })
}

/// RED-ITA-S: three-block ADMM relaxing the oversampling constraint with a
/// slack `ξ = z − O x`.
///
/// ```text
/// v = z + u − ξ;  τ = n/(mρ);  x ← prox_{τR}((n/m) Re(Oᵀ v));  x̃ = O x
/// z ← Π_M(x̃ + ξ − u);  ξ ← ρ/(ρ+1) (z − x̃ + u);  u ← u + z − x̃ − ξ
/// ```
pub fn red_ita_s_step(
    state: &SolverState,
    meas: &Measurement,
    map: &OversamplingMap,
    rho: f64,
    red: &RedParams,
) -> Result<SolverState> {
    check_rho(rho)?;
    let v = state.z.add(&state.u)?.sub(&state.xi)?;
    let x = prox_red(&map.extract(&v)?, x_update_tau(map, rho), red)?;
    let xt = map.embed(&x)?;
    let z = project_measurement(&xt.add(&state.xi)?.sub(&state.u)?, meas)?;
    let gap = z.sub(&xt)?;
    let xi = gap.add(&state.u)?.scale(rho / (rho + 1.0));
    let u = state.u.add(&gap.sub(&xi)?)?;
    Ok(SolverState {
        x,
        padded: xt,
        z,
        u,
        xi,
        iter: state.iter + 1,
    })
}

/// `½‖y − |F O x|‖²`.
pub fn residual(x: &ImagePlane, meas: &Measurement, map: &OversamplingMap) -> Result<f64> {
    amplitude_loss(&map.embed(x)?, meas)
}
