//! Forward model with Gaussian-approximated shot noise,
//! `y² = |q|² + w`, `w ~ N(0, diag(α² |q|²))`, `q = F O x`.

use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fourier::{dft2, Measurement, NOISE_FREE_SIGMA_BAR};
use crate::grid::{ImagePlane, OversamplingMap};

/// Generator behind every seeded draw in the crate.
pub const RNG_ALGORITHM: &str = "ChaCha20";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    pub alpha: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn noise_free() -> Self {
        Self {
            alpha: 0.0,
            seed: 0,
        }
    }
}

/// `|F O x|`.
pub fn clean_amplitudes(x: &ImagePlane, map: &OversamplingMap) -> Result<Vec<f64>> {
    Ok(dft2(&map.embed(x)?)
        .values()
        .iter()
        .map(|q| q.norm())
        .collect())
}

/// Simulates a noisy amplitude measurement of `x`.
///
/// Negative noisy intensities are clamped to zero before the square root.
/// `σ̄` is the RMS amplitude error against the clean amplitudes, or 0.1 when
/// `α = 0`.
pub fn synthesize_measurement(
    x: &ImagePlane,
    map: &OversamplingMap,
    noise: &NoiseModel,
) -> Result<Measurement> {
    if let Some(v) = x.values().iter().find(|v| !(0.0..=255.0).contains(*v)) {
        return Err(Error::InvalidParameter(format!(
            "ground truth must lie in [0, 255], found {v}"
        )));
    }
    if !(noise.alpha >= 0.0 && noise.alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "alpha must be >= 0, got {}",
            noise.alpha
        )));
    }
    let q = clean_amplitudes(x, map)?;
    let side = map.padded_side();
    if noise.alpha == 0.0 {
        return Measurement::new(side, q, 0.0, NOISE_FREE_SIGMA_BAR);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(noise.seed);
    let y: Vec<f64> = q
        .iter()
        .map(|&a| {
            let g: f64 = StandardNormal.sample(&mut rng);
            (a * a + noise.alpha * a * g).max(0.0).sqrt()
        })
        .collect();
    let sigma_bar =
        (y.iter().zip(&q).map(|(y, q)| (y - q).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    Measurement::new(side, y, noise.alpha, sigma_bar)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MsnrKind {
    /// Intensity domain, `10 log₁₀(‖|q|²‖ / ‖y² − |q|²‖)`.
    Intensity,
    /// Amplitude domain, `20 log₁₀(‖|q|‖ / ‖y − |q|‖)`.
    Amplitude,
}

/// Measurement SNR in dB; `+∞` when the measurement is exact.
pub fn msnr(meas: &Measurement, clean: &[f64], kind: MsnrKind) -> Result<f64> {
    let y = meas.amplitudes();
    if clean.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            actual: clean.len(),
        });
    }
    let norm = |it: &mut dyn Iterator<Item = f64>| it.map(|v| v * v).sum::<f64>().sqrt();
    let (signal, error, scale) = match kind {
        MsnrKind::Intensity => (
            norm(&mut clean.iter().map(|q| q * q)),
            norm(&mut y.iter().zip(clean).map(|(y, q)| y * y - q * q)),
            10.0,
        ),
        MsnrKind::Amplitude => (
            norm(&mut clean.iter().copied()),
            norm(&mut y.iter().zip(clean).map(|(y, q)| y - q)),
            20.0,
        ),
    };
    if error == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(scale * (signal / error).log10())
}

const MEAS_MAGIC: &[u8; 4] = b"FPRM";
const MEAS_VERSION: u32 = 1;

/// Flat binary: `"FPRM" version:u32 side:u32 alpha:f64 sigma_bar:f64 y:f64[side²]`,
/// little endian.
pub fn write_measurement(meas: &Measurement, mut out: impl Write) -> Result<()> {
    out.write_all(MEAS_MAGIC)?;
    out.write_all(&MEAS_VERSION.to_le_bytes())?;
    out.write_all(&(meas.side() as u32).to_le_bytes())?;
    out.write_all(&meas.alpha().to_le_bytes())?;
    out.write_all(&meas.sigma_bar().to_le_bytes())?;
    for y in meas.amplitudes() {
        out.write_all(&y.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_measurement(mut input: impl Read) -> Result<Measurement> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    const HEADER: usize = 4 + 4 + 4 + 8 + 8;
    if bytes.len() < HEADER || &bytes[..4] != MEAS_MAGIC {
        return Err(Error::MeasurementFormat("missing FPRM header".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let f64_at = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != MEAS_VERSION {
        return Err(Error::MeasurementFormat(format!(
            "unsupported version {version}"
        )));
    }
    let side = u32_at(8) as usize;
    let expected = HEADER + side * side * 8;
    if bytes.len() != expected {
        return Err(Error::MeasurementFormat(format!(
            "expected {expected} bytes for side {side}, found {}",
            bytes.len()
        )));
    }
    let y = (0..side * side).map(|i| f64_at(HEADER + 8 * i)).collect();
    Measurement::new(side, y, f64_at(12), f64_at(20))
}

pub fn save_measurement(meas: &Measurement, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    write_measurement(meas, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_measurement(path: &Path) -> Result<Measurement> {
    read_measurement(std::fs::File::open(path)?)
}

/// `row,col,amplitude` per bin, for inspection.
pub fn write_measurement_csv(meas: &Measurement, out: impl Write) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["row", "col", "amplitude"])?;
    let side = meas.side();
    for (i, y) in meas.amplitudes().iter().enumerate() {
        writer.write_record([
            (i / side).to_string(),
            (i % side).to_string(),
            format!("{y:e}"),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn test_image(side: usize) -> ImagePlane {
        ImagePlane::from_fn(side, |r, c| ((r * 7 + c * 3) % 11) as f64 * 20.0 + 10.0)
    }

    #[test]
    fn noise_free_is_exact() {
        let map = OversamplingMap::double(8).unwrap();
        let x = test_image(8);
        let meas = synthesize_measurement(&x, &map, &NoiseModel::noise_free()).unwrap();
        assert_eq!(
            meas.amplitudes(),
            clean_amplitudes(&x, &map).unwrap().as_slice()
        );
        assert_eq!(meas.sigma_bar(), NOISE_FREE_SIGMA_BAR);
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let map = OversamplingMap::double(8).unwrap();
        let x = test_image(8);
        let noise = NoiseModel {
            alpha: 4.0,
            seed: 99,
        };
        let a = synthesize_measurement(&x, &map, &noise).unwrap();
        let b = synthesize_measurement(&x, &map, &noise).unwrap();
        assert_eq!(a, b);
        let c = synthesize_measurement(&x, &map, &NoiseModel { seed: 100, ..noise }).unwrap();
        assert_ne!(a, c);
        assert!(a.sigma_bar() > 0.0);
    }

    #[test]
    fn out_of_range_truth_rejected() {
        let map = OversamplingMap::double(2).unwrap();
        let x = ImagePlane::new(2, vec![0.0, 300.0, 1.0, 2.0]).unwrap();
        assert!(synthesize_measurement(&x, &map, &NoiseModel::noise_free()).is_err());
    }

    #[test]
    fn msnr_doubled_amplitude_is_zero_db() {
        let q = vec![1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = q.iter().map(|v| 2.0 * v).collect();
        let meas = Measurement::new(2, y, 1.0, 1.0).unwrap();
        assert!(msnr(&meas, &q, MsnrKind::Amplitude).unwrap().abs() < 1e-12);
        let exact = Measurement::new(2, q.clone(), 0.0, 0.1).unwrap();
        assert_eq!(
            msnr(&exact, &q, MsnrKind::Amplitude).unwrap(),
            f64::INFINITY
        );
        assert_eq!(
            msnr(&exact, &q, MsnrKind::Intensity).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn msnr_hand_computed_fixture() {
        // q = [3, 4, 0, 0], y = [3, 5, 0, 0]:
        //   ‖|q|‖ = 5, ‖y − |q|‖ = 1          → 20 log₁₀ 5
        //   ‖|q|²‖ = √(81+256) = √337, ‖y² − |q|²‖ = 9 → 10 log₁₀(√337 / 9)
        let q = vec![3.0, 4.0, 0.0, 0.0];
        let meas = Measurement::new(2, vec![3.0, 5.0, 0.0, 0.0], 1.0, 1.0).unwrap();
        let m2 = msnr(&meas, &q, MsnrKind::Amplitude).unwrap();
        let m1 = msnr(&meas, &q, MsnrKind::Intensity).unwrap();
        assert!((m2 - 20.0 * 5f64.log10()).abs() < 1e-12);
        assert!((m1 - 10.0 * (337f64.sqrt() / 9.0).log10()).abs() < 1e-12);
    }

    #[test]
    fn noise_std_scales_with_alpha() {
        // Per-bin std of y² − |q|² should be α|q|; doubling α doubles it.
        let q = 50.0;
        let draws = 10_000;
        let std_for = |alpha: f64| {
            let mut rng = ChaCha20Rng::seed_from_u64(5);
            let samples: Vec<f64> = (0..draws)
                .map(|_| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    let y2 = (q * q + alpha * q * g).max(0.0);
                    y2 - q * q
                })
                .collect();
            let mean = samples.iter().sum::<f64>() / draws as f64;
            (samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / draws as f64).sqrt()
        };
        let (s1, s2) = (std_for(1.0), std_for(2.0));
        assert!((s1 / (q) - 1.0).abs() < 0.05);
        assert!((s2 / s1 - 2.0).abs() < 0.1);
    }

    #[test]
    fn no_clamping_for_small_alpha() {
        let map = OversamplingMap::double(6).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let x = ImagePlane::from_fn(6, |_, _| rng.random_range(100.0..200.0));
        let q = clean_amplitudes(&x, &map).unwrap();
        let noise = NoiseModel {
            alpha: 0.1,
            seed: 4,
        };
        let meas = synthesize_measurement(&x, &map, &noise).unwrap();
        for (y, q) in meas.amplitudes().iter().zip(&q) {
            if *q > 1.0 {
                assert!(*y > 0.0);
            }
        }
    }

    #[test]
    fn binary_roundtrip_and_rejects_garbage() {
        let meas = Measurement::new(2, vec![1.0, 2.5, 0.0, 7.25], 4.0, 0.75).unwrap();
        let mut buf = Vec::new();
        write_measurement(&meas, &mut buf).unwrap();
        assert_eq!(buf.len(), 28 + 4 * 8);
        assert_eq!(read_measurement(buf.as_slice()).unwrap(), meas);
        assert!(read_measurement(&buf[..buf.len() - 1]).is_err());
        assert!(read_measurement(&b"nope"[..]).is_err());
    }

    #[test]
    fn csv_has_one_row_per_bin() {
        let meas = Measurement::new(2, vec![1.0, 2.0, 3.0, 4.0], 0.0, 0.1).unwrap();
        let mut buf = Vec::new();
        write_measurement_csv(&meas, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("row,col,amplitude\n0,0,1e0\n"));
    }
}
