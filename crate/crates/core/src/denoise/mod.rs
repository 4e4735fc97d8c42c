//! Pluggable denoisers `D(·)` for the RED prior and for PnP.
//!
//! All denoisers work on images in `[0, 255]` units. The nominal strength `σ`
//! is in the same units and is switched by the solver schedule.

mod cnn;
mod tv;

use std::fmt;
use std::path::Path;
use std::sync::Arc;

pub use cnn::{apply_cnn, load_cnn, parse_cnn, write_cnn, Activation, CnnModel, ConvLayer};
pub use tv::{total_variation, tv_denoise, DEFAULT_TV_ITERS, TV_STEP};

use crate::error::{Error, Result};
use crate::grid::ImagePlane;

/// ROF weight per unit of denoiser strength for the TV denoiser.
pub const DEFAULT_TV_WEIGHT: f64 = 0.5;

/// CNN weights, either a single model or one per training noise level.
#[derive(Clone, Debug)]
pub struct CnnBank {
    models: Vec<(Option<f64>, Arc<CnnModel>)>,
}

impl CnnBank {
    pub fn single(model: CnnModel) -> Self {
        Self {
            models: vec![(None, Arc::new(model))],
        }
    }

    pub fn per_sigma(models: Vec<(f64, CnnModel)>) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::InvalidParameter("empty CNN bank".into()));
        }
        Ok(Self {
            models: models
                .into_iter()
                .map(|(s, m)| (Some(s), Arc::new(m)))
                .collect(),
        })
    }

    /// Model trained closest to `sigma`.
    pub fn select(&self, sigma: f64) -> &CnnModel {
        self.models
            .iter()
            .min_by(|a, b| {
                let da = a.0.map_or(0.0, |s| (s - sigma).abs());
                let db = b.0.map_or(0.0, |s| (s - sigma).abs());
                da.total_cmp(&db)
            })
            .map(|(_, m)| m.as_ref())
            .expect("non-empty bank")
    }
}

#[derive(Clone, Debug)]
pub enum DenoiserKind {
    Identity,
    /// Circular, normalized Gaussian blur of width `sigma_blur` pixels.
    Gaussian {
        sigma_blur: f64,
    },
    /// Sliding median over an odd `window × window` neighbourhood.
    Median {
        window: usize,
    },
    /// ROF total-variation denoising with weight `weight · strength`.
    Tv {
        weight: f64,
        iters: usize,
    },
    Cnn(CnnBank),
}

#[derive(Clone, Debug)]
pub struct DenoiserSpec {
    pub kind: DenoiserKind,
    /// Nominal noise standard deviation the denoiser targets.
    pub strength: f64,
}

impl DenoiserSpec {
    pub fn identity() -> Self {
        Self {
            kind: DenoiserKind::Identity,
            strength: 0.0,
        }
    }

    pub fn gaussian(sigma_blur: f64) -> Self {
        Self {
            kind: DenoiserKind::Gaussian { sigma_blur },
            strength: 0.0,
        }
    }

    pub fn median(window: usize) -> Self {
        Self {
            kind: DenoiserKind::Median { window },
            strength: 0.0,
        }
    }

    pub fn tv(weight: f64, iters: usize, strength: f64) -> Self {
        Self {
            kind: DenoiserKind::Tv { weight, iters },
            strength,
        }
    }

    pub fn with_strength(&self, strength: f64) -> Self {
        Self {
            kind: self.kind.clone(),
            strength,
        }
    }

    /// Parses the CLI form `identity | gaussian[:σ] | median[:w] | tv[:weight[:iters]] | cnn:<path>`.
    ///
    /// A CNN path containing `{sigma}` loads one model per entry of `sigmas`.
    pub fn parse(text: &str, sigmas: &[f64]) -> Result<Self> {
        let (name, arg) = match text.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (text, None),
        };
        let number = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad denoiser argument {s:?}")))
        };
        let kind = match name {
            "identity" => DenoiserKind::Identity,
            "gaussian" => DenoiserKind::Gaussian {
                sigma_blur: arg.map(number).transpose()?.unwrap_or(1.0),
            },
            "median" => DenoiserKind::Median {
                window: arg.map(number).transpose()?.unwrap_or(3.0) as usize,
            },
            "tv" => {
                let mut parts = arg.into_iter().flat_map(|a| a.split(':'));
                let weight = parts.next().map(number).transpose()?;
                let iters = parts.next().map(number).transpose()?;
                DenoiserKind::Tv {
                    weight: weight.unwrap_or(DEFAULT_TV_WEIGHT),
                    iters: iters.map_or(DEFAULT_TV_ITERS, |i| i as usize),
                }
            }
            "cnn" => {
                let path = arg.ok_or_else(|| {
                    Error::InvalidParameter("cnn denoiser needs a weight path".into())
                })?;
                let bank = if path.contains("{sigma}") {
                    let models = sigmas
                        .iter()
                        .map(|&s| {
                            let p = path.replace("{sigma}", &format!("{s}"));
                            load_cnn(Path::new(&p)).map(|m| (s, m))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    CnnBank::per_sigma(models)?
                } else {
                    CnnBank::single(load_cnn(Path::new(path))?)
                };
                DenoiserKind::Cnn(bank)
            }
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown denoiser kind {other:?}"
                )))
            }
        };
        let spec = Self {
            kind,
            strength: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        match self.kind {
            DenoiserKind::Gaussian { sigma_blur } if sigma_blur.is_nan() || sigma_blur <= 0.0 => {
                Err(Error::InvalidParameter(format!(
                    "gaussian width must be > 0, got {sigma_blur}"
                )))
            }
            DenoiserKind::Median { window } if window == 0 || window % 2 == 0 => Err(
                Error::InvalidParameter(format!("median window must be odd, got {window}")),
            ),
            DenoiserKind::Tv { weight, .. } if weight.is_nan() || weight < 0.0 => Err(
                Error::InvalidParameter(format!("tv weight must be >= 0, got {weight}")),
            ),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for DenoiserSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            DenoiserKind::Identity => write!(f, "identity"),
            DenoiserKind::Gaussian { sigma_blur } => write!(f, "gaussian:{sigma_blur}"),
            DenoiserKind::Median { window } => write!(f, "median:{window}"),
            DenoiserKind::Tv { weight, iters } => write!(f, "tv:{weight}:{iters}"),
            DenoiserKind::Cnn(_) => write!(f, "cnn"),
        }
    }
}

/// Applies `D` to `x`. Output has the same side as the input.
pub fn apply_denoiser(x: &ImagePlane, spec: &DenoiserSpec) -> Result<ImagePlane> {
    if !x.is_finite() {
        return Err(Error::NonFinite("denoiser input".into()));
    }
    spec.validate()?;
    match &spec.kind {
        DenoiserKind::Identity => Ok(x.clone()),
        DenoiserKind::Gaussian { sigma_blur } => Ok(gaussian_blur(x, *sigma_blur)),
        DenoiserKind::Median { window } => Ok(median_filter(x, *window)),
        DenoiserKind::Tv { weight, iters } => Ok(tv_denoise(x, weight * spec.strength, *iters)),
        DenoiserKind::Cnn(bank) => apply_cnn(x, bank.select(spec.strength)),
    }
}

/// Normalized 1-D Gaussian taps on `[-r, r]`, `r = ceil(3σ)`.
fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil().max(1.0) as i64;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / total).collect()
}

/// Separable Gaussian blur with periodic boundaries. The operator is a
/// symmetric circulant with unit row sums.
pub fn gaussian_blur(x: &ImagePlane, sigma: f64) -> ImagePlane {
    let taps = gaussian_taps(sigma);
    let radius = (taps.len() / 2) as i64;
    let s = x.side() as i64;
    let wrap = |i: i64| i.rem_euclid(s) as usize;
    let rows = ImagePlane::from_fn(x.side(), |r, c| {
        taps.iter()
            .enumerate()
            .map(|(t, w)| w * x.get(r, wrap(c as i64 + t as i64 - radius)))
            .sum()
    });
    ImagePlane::from_fn(x.side(), |r, c| {
        taps.iter()
            .enumerate()
            .map(|(t, w)| w * rows.get(wrap(r as i64 + t as i64 - radius), c))
            .sum()
    })
}

/// Median filter with replicated borders.
pub fn median_filter(x: &ImagePlane, window: usize) -> ImagePlane {
    let half = (window / 2) as i64;
    let s = x.side() as i64;
    let clamp = |i: i64| i.clamp(0, s - 1) as usize;
    let mut buf = Vec::with_capacity(window * window);
    ImagePlane::from_fn(x.side(), |r, c| {
        buf.clear();
        for dr in -half..=half {
            for dc in -half..=half {
                buf.push(x.get(clamp(r as i64 + dr), clamp(c as i64 + dc)));
            }
        }
        buf.sort_by(f64::total_cmp);
        buf[buf.len() / 2]
    })
}
