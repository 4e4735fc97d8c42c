//! Registration modulo the trivial ambiguities, and image-quality metrics.

use crate::error::{Error, Result};
use crate::fourier::{dft2, idft2};
use crate::grid::{ComplexField, ImagePlane};
use crate::Complex64;

/// PSNR ceiling in dB.
pub const PSNR_CAP: f64 = 80.0;
const PEAK: f64 = 255.0;

pub const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

/// Transform that maps a candidate onto the truth.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Alignment {
    /// Circular shift `(rows, cols)` applied after the optional flip.
    pub shift: (usize, usize),
    /// 180° rotation (conjugate inversion of a real signal).
    pub flipped: bool,
    /// Global sign flip (global phase of a real signal).
    pub negated: bool,
}

impl Alignment {
    pub fn apply(&self, x: &ImagePlane) -> ImagePlane {
        let base = if self.flipped { x.flipped() } else { x.clone() };
        let shifted = base.circshift(self.shift.0, self.shift.1);
        if self.negated {
            shifted.map(|v| -v)
        } else {
            shifted
        }
    }
}

fn to_field(x: &ImagePlane) -> ComplexField {
    ComplexField::new(
        x.side(),
        x.values().iter().map(|&v| Complex64::new(v, 0.0)).collect(),
    )
    .expect("square")
}

/// Cross-correlation `c(d) = Σ_r truth(r) · x(r − d)` over all circular shifts.
fn correlation(truth_spectrum: &ComplexField, x: &ImagePlane) -> Vec<f64> {
    let xs = dft2(&to_field(x));
    let product = truth_spectrum
        .zip_map(&xs, |t, c| t * c.conj())
        .expect("same side");
    idft2(&product).values().iter().map(|v| v.re).collect()
}

/// Finds the circular shift, flip and sign that best match `candidate` to
/// `truth` by exhaustive FFT cross-correlation. Ties go to the smallest shift,
/// then to the unflipped candidate.
pub fn find_alignment(candidate: &ImagePlane, truth: &ImagePlane) -> Result<Alignment> {
    if candidate.side() != truth.side() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: candidate.len(),
        });
    }
    let side = truth.side();
    let truth_spectrum = dft2(&to_field(truth));
    let scale = truth.norm() * candidate.norm();
    let tol = 1e-9 * scale.max(f64::MIN_POSITIVE);
    let mut best: Option<(f64, f64, Alignment)> = None;
    for flipped in [false, true] {
        let base = if flipped {
            candidate.flipped()
        } else {
            candidate.clone()
        };
        for (d, &c) in correlation(&truth_spectrum, &base).iter().enumerate() {
            let better = match best {
                None => true,
                Some((score, _, _)) => c.abs() > score + tol,
            };
            if better {
                let alignment = Alignment {
                    shift: (d / side, d % side),
                    flipped,
                    negated: false,
                };
                best = Some((c.abs(), c, alignment));
            }
        }
    }
    let (_, corr, mut alignment) = best.expect("at least one shift");
    alignment.negated = corr < 0.0;
    Ok(alignment)
}

/// `candidate` registered onto `truth` modulo translation, conjugate
/// inversion and global sign.
pub fn align_to_truth(candidate: &ImagePlane, truth: &ImagePlane) -> Result<ImagePlane> {
    Ok(find_alignment(candidate, truth)?.apply(candidate))
}

/// `10 log₁₀(255² / MSE)`, capped at [`PSNR_CAP`].
pub fn psnr(a: &ImagePlane, b: &ImagePlane) -> Result<f64> {
    let diff = a.zip_map(b, |x, y| x - y)?;
    let mse = diff.values().iter().map(|d| d * d).sum::<f64>() / diff.len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (PEAK * PEAK / mse).log10()).min(PSNR_CAP))
}

fn ssim_window() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as f64;
    let g: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| (-(i as f64 - half).powi(2) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let total: f64 = g.iter().sum();
    let mut w = Vec::with_capacity(SSIM_WINDOW * SSIM_WINDOW);
    for a in &g {
        for b in &g {
            w.push(a * b / (total * total));
        }
    }
    w
}

/// Mean SSIM over every fully contained 11×11 Gaussian window (σ = 1.5,
/// K₁ = 0.01, K₂ = 0.03, L = 255), clamped to `[0, 1]`.
pub fn ssim(a: &ImagePlane, b: &ImagePlane) -> Result<f64> {
    if a.side() != b.side() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let side = a.side();
    if side < SSIM_WINDOW {
        return Err(Error::ImageTooSmall {
            side,
            window: SSIM_WINDOW,
        });
    }
    let w = ssim_window();
    let c1 = (SSIM_K1 * PEAK).powi(2);
    let c2 = (SSIM_K2 * PEAK).powi(2);
    let valid = side - SSIM_WINDOW + 1;
    let mut total = 0.0;
    for r0 in 0..valid {
        for c0 in 0..valid {
            let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..SSIM_WINDOW {
                for j in 0..SSIM_WINDOW {
                    let k = w[i * SSIM_WINDOW + j];
                    let (x, y) = (a.get(r0 + i, c0 + j), b.get(r0 + i, c0 + j));
                    ma += k * x;
                    mb += k * y;
                    saa += k * x * x;
                    sbb += k * y * y;
                    sab += k * x * y;
                }
            }
            let (va, vb, cov) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
    }
    Ok((total / (valid * valid) as f64).clamp(0.0, 1.0))
}

/// Metrics for one reconstruction.
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub image: String,
    pub algorithm: String,
    pub alpha: f64,
    pub seed: u64,
    /// Restart selected by minimum residual.
    pub restart: usize,
    pub psnr: f64,
    pub ssim: f64,
    pub msnr1: f64,
    pub msnr2: f64,
    pub residual: f64,
    pub iterations: usize,
    pub wall_ms: f64,
    pub aligned: Alignment,
    pub rng: String,
    pub init: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn textured(seed: u64, side: usize) -> ImagePlane {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImagePlane::from_fn(side, |_, _| rng.random_range(0.0..255.0))
    }

    #[test]
    fn identical_images() {
        let a = textured(1, 16);
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(align_to_truth(&a, &a).unwrap(), a);
    }

    #[test]
    fn psnr_closed_forms() {
        let black = ImagePlane::zeros(4);
        let white = ImagePlane::filled(4, 255.0);
        assert!(psnr(&black, &white).unwrap().abs() < 1e-12);
        let a = textured(2, 4);
        let b = a.map(|v| v + 1.0);
        let expected = 10.0 * 65025f64.log10();
        assert!((psnr(&a, &b).unwrap() - expected).abs() < 1e-9);
        assert!((expected - 48.13).abs() < 0.005);
    }

    #[test]
    fn ssim_anticorrelated_is_small() {
        let a = textured(3, 16);
        let b = a.map(|v| 255.0 - v);
        assert!(ssim(&a, &b).unwrap() < 0.1);
    }

    #[test]
    fn ssim_constant_luminance_term() {
        let (m1, m2) = (100.0, 110.0);
        let a = ImagePlane::filled(12, m1);
        let b = ImagePlane::filled(12, m2);
        let c1 = (0.01f64 * 255.0).powi(2);
        let expected = (2.0 * m1 * m2 + c1) / (m1 * m1 + m2 * m2 + c1);
        assert!((ssim(&a, &b).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn ssim_rejects_small_images() {
        let a = ImagePlane::zeros(10);
        assert!(matches!(ssim(&a, &a), Err(Error::ImageTooSmall { .. })));
    }

    #[test]
    fn recovers_shift_and_flip() {
        let t = textured(4, 12);
        assert_eq!(align_to_truth(&t.circshift(3, 5), &t).unwrap(), t);
        assert_eq!(align_to_truth(&t.flipped(), &t).unwrap(), t);
        assert_eq!(align_to_truth(&t.map(|v| -v), &t).unwrap(), t);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn psnr_is_symmetric(seed in any::<u64>()) {
            let (a, b) = (textured(seed, 6), textured(seed ^ 1, 6));
            prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        }

        #[test]
        fn alignment_inverts_every_trivial_ambiguity(
            seed in any::<u64>(),
            dr in 0usize..9,
            dc in 0usize..9,
            flip in any::<bool>(),
        ) {
            let t = textured(seed, 9);
            let g = if flip { t.flipped() } else { t.clone() };
            prop_assert_eq!(align_to_truth(&g.circshift(dr, dc), &t).unwrap(), t);
        }
    }
}
