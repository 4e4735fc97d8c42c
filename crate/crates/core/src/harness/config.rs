//! Experiment configuration, read from a flat TOML file.
//!
//! Every key is optional:
//!
//! ```toml
//! images = ["data/cameraman.png"]   # empty: use the procedural fixtures
//! fixtures = ["blobs", "text"]      # subset of fixtures when images is empty
//! side = 128
//! oversample = 2
//! alphas = [0.0, 4.0]
//! algorithms = ["hio", "red_ita_f", "red_ita_s"]
//! protocol = "random_init"          # or "hio_init"
//! restarts = 3
//! iterations = 1200
//! seed = 0
//! out = "results"
//! denoiser = "tv"
//! beta = 0.9
//! init_runs = 50
//! init_run_iterations = 50
//! init_refine_iterations = 1000
//! save_images = true
//! save_traces = false
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::solvers::Algorithm;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Every algorithm starts from the same random point.
    RandomInit,
    /// Every algorithm starts from a staged HIO reconstruction.
    HioInit,
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random_init" | "random" => Ok(Self::RandomInit),
            "hio_init" | "hio" => Ok(Self::HioInit),
            other => Err(Error::Config(format!("unknown protocol {other:?}"))),
        }
    }
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Self::RandomInit => "random_init",
            Self::HioInit => "hio_init",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub images: Vec<PathBuf>,
    pub fixtures: Vec<String>,
    pub side: usize,
    pub oversample: usize,
    pub alphas: Vec<f64>,
    #[serde(deserialize_with = "de_algorithms")]
    pub algorithms: Vec<Algorithm>,
    pub protocol: Protocol,
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub denoiser: String,
    pub beta: f64,
    pub init_runs: usize,
    pub init_run_iterations: usize,
    pub init_refine_iterations: usize,
    pub save_images: bool,
    pub save_traces: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            images: Vec::new(),
            fixtures: Vec::new(),
            side: 128,
            oversample: 2,
            alphas: vec![0.0],
            algorithms: vec![Algorithm::Hio, Algorithm::RedItaF, Algorithm::RedItaS],
            protocol: Protocol::RandomInit,
            restarts: 3,
            iterations: 1200,
            seed: 0,
            out: None,
            denoiser: "tv".into(),
            beta: 0.9,
            init_runs: 50,
            init_run_iterations: 50,
            init_refine_iterations: 1000,
            save_images: true,
            save_traces: false,
        }
    }
}

fn de_algorithms<'de, D: serde::Deserializer<'de>>(
    de: D,
) -> std::result::Result<Vec<Algorithm>, D::Error> {
    Vec::<String>::deserialize(de)?
        .iter()
        .map(|s| s.parse().map_err(serde::de::Error::custom))
        .collect()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(missing) = self.images.iter().find(|p| !p.is_file()) {
            return Err(Error::Config(format!(
                "image {} does not exist",
                missing.display()
            )));
        }
        if self.side == 0 {
            return Err(Error::Config("side must be positive".into()));
        }
        if self.oversample < 2 {
            return Err(Error::Config("oversample must be at least 2".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be positive".into()));
        }
        if self.alphas.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(Error::Config("alphas must be finite and >= 0".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms configured".into()));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Config(format!(
                "beta must lie in [0, 1], got {}",
                self.beta
            )));
        }
        if self.protocol == Protocol::HioInit && (self.init_runs == 0) {
            return Err(Error::Config("init_runs must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_experiment_setup() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(
            (cfg.side, cfg.oversample, cfg.restarts, cfg.iterations),
            (128, 2, 3, 1200)
        );
        assert_eq!(
            (
                cfg.init_runs,
                cfg.init_run_iterations,
                cfg.init_refine_iterations
            ),
            (50, 50, 1000)
        );
    }

    #[test]
    fn parses_all_keys() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            fixtures = ["blobs"]
            side = 32
            alphas = [0.0, 8.0]
            algorithms = ["hio", "red-ita-s", "PRRED"]
            protocol = "hio_init"
            restarts = 2
            iterations = 40
            seed = 9
            out = "res"
            denoiser = "gaussian:1.5"
            "#,
        )
        .unwrap();
        assert_eq!(
            cfg.algorithms,
            vec![Algorithm::Hio, Algorithm::RedItaS, Algorithm::PrRed]
        );
        assert_eq!(cfg.protocol, Protocol::HioInit);
        assert_eq!(cfg.alphas, vec![0.0, 8.0]);
        assert_eq!(cfg.out, Some(PathBuf::from("res")));
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml("algorithms = [\"gs\"]").is_err());
        assert!(ExperimentConfig::from_toml("protocol = \"other\"").is_err());
        let cfg = ExperimentConfig {
            images: vec!["/no/such/image.png".into()],
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            oversample: 1,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
