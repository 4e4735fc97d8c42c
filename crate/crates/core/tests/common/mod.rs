#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use redita::fourier::Measurement;
use redita::grid::{ComplexField, ImagePlane, OversamplingMap};
use redita::harness::fixtures::fixture_by_name;
use redita::harness::random_init;
use redita::sim::{synthesize_measurement, NoiseModel};
use redita::Complex64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(seed: u64, side: usize) -> ImagePlane {
    let mut rng = rng(seed);
    ImagePlane::from_fn(side, |_, _| rng.random_range(0.0..255.0))
}

pub fn random_field(seed: u64, side: usize, scale: f64) -> ComplexField {
    let mut rng = rng(seed);
    ComplexField::from_fn(side, |_, _| {
        Complex64::new(
            rng.random_range(-scale..scale),
            rng.random_range(-scale..scale),
        )
    })
}

/// A fixture, its factor-2 map and a measurement at `alpha`.
pub fn instance(name: &str, side: usize, alpha: f64) -> (ImagePlane, OversamplingMap, Measurement) {
    let truth = fixture_by_name(name, side).expect("fixture").image;
    let map = OversamplingMap::double(side).unwrap();
    let meas = synthesize_measurement(&truth, &map, &NoiseModel { alpha, seed: 3 }).unwrap();
    (truth, map, meas)
}

pub fn start(map: &OversamplingMap, seed: u64) -> ComplexField {
    random_init(map, seed)
}

pub fn max_abs_diff(a: &ImagePlane, b: &ImagePlane) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `O x` plus i.i.d. complex uniform noise of half-width `amp` on the whole
/// padded grid: a start in the basin of the solution.
pub fn perturbed_truth(
    truth: &ImagePlane,
    map: &OversamplingMap,
    amp: f64,
    seed: u64,
) -> ComplexField {
    let mut rng = rng(seed);
    let base = map.embed(truth).unwrap();
    ComplexField::from_fn(map.padded_side(), |r, c| {
        base.get(r, c) + Complex64::new(rng.random_range(-amp..amp), rng.random_range(-amp..amp))
    })
}
