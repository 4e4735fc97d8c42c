//! Isotropic ROF denoising by dual projection:
//! `argmin_u ½‖u − f‖² + w · TV(u)`.

use crate::grid::ImagePlane;

pub const TV_STEP: f64 = 0.25;
pub const DEFAULT_TV_ITERS: usize = 30;

/// Forward-difference gradient, zero across the last row/column.
fn gradient(u: &[f64], s: usize, gx: &mut [f64], gy: &mut [f64]) {
    for r in 0..s {
        for c in 0..s {
            let i = r * s + c;
            gx[i] = if c + 1 < s { u[i + 1] - u[i] } else { 0.0 };
            gy[i] = if r + 1 < s { u[i + s] - u[i] } else { 0.0 };
        }
    }
}

/// Negative adjoint of [`gradient`].
fn divergence(px: &[f64], py: &[f64], s: usize, out: &mut [f64]) {
    for r in 0..s {
        for c in 0..s {
            let i = r * s + c;
            let dx = match c {
                _ if s == 1 => 0.0,
                0 => px[i],
                _ if c == s - 1 => -px[i - 1],
                _ => px[i] - px[i - 1],
            };
            let dy = match r {
                _ if s == 1 => 0.0,
                0 => py[i],
                _ if r == s - 1 => -py[i - s],
                _ => py[i] - py[i - s],
            };
            out[i] = dx + dy;
        }
    }
}

/// Isotropic total variation `Σ |∇u|` with forward differences.
pub fn total_variation(u: &ImagePlane) -> f64 {
    let s = u.side();
    let (mut gx, mut gy) = (vec![0.0; s * s], vec![0.0; s * s]);
    gradient(u.values(), s, &mut gx, &mut gy);
    gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).sum()
}

/// Runs `iters` dual-projection steps with step [`TV_STEP`] and returns
/// `f − w · div p`. A zero weight returns the input.
pub fn tv_denoise(f: &ImagePlane, weight: f64, iters: usize) -> ImagePlane {
    if weight <= 0.0 || iters == 0 {
        return f.clone();
    }
    let s = f.side();
    let n = s * s;
    let fv = f.values();
    let (mut px, mut py) = (vec![0.0; n], vec![0.0; n]);
    let (mut gx, mut gy) = (vec![0.0; n], vec![0.0; n]);
    let mut div = vec![0.0; n];
    let mut g = vec![0.0; n];
    for _ in 0..iters {
        divergence(&px, &py, s, &mut div);
        for i in 0..n {
            g[i] = div[i] - fv[i] / weight;
        }
        gradient(&g, s, &mut gx, &mut gy);
        for i in 0..n {
            let denom = 1.0 + TV_STEP * gx[i].hypot(gy[i]);
            px[i] = (px[i] + TV_STEP * gx[i]) / denom;
            py[i] = (py[i] + TV_STEP * gy[i]) / denom;
        }
    }
    divergence(&px, &py, s, &mut div);
    let values = fv.iter().zip(&div).map(|(f, d)| f - weight * d).collect();
    ImagePlane::new(s, values).expect("same side")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn divergence_is_negative_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = 6;
        let u: Vec<f64> = (0..s * s).map(|_| rng.random_range(-1.0..1.0)).collect();
        let px: Vec<f64> = (0..s * s).map(|_| rng.random_range(-1.0..1.0)).collect();
        let py: Vec<f64> = (0..s * s).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (mut gx, mut gy, mut div) = (vec![0.0; s * s], vec![0.0; s * s], vec![0.0; s * s]);
        gradient(&u, s, &mut gx, &mut gy);
        divergence(&px, &py, s, &mut div);
        let lhs: f64 = (0..s * s).map(|i| gx[i] * px[i] + gy[i] * py[i]).sum();
        let rhs: f64 = (0..s * s).map(|i| -u[i] * div[i]).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn constant_is_fixed() {
        let f = ImagePlane::filled(5, 77.0);
        let u = tv_denoise(&f, 10.0, 30);
        assert!(u.values().iter().all(|v| (v - 77.0).abs() < 1e-12));
    }

    #[test]
    fn preserves_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let f = ImagePlane::from_fn(12, |_, _| rng.random_range(0.0..255.0));
        let u = tv_denoise(&f, 20.0, 30);
        assert!((u.mean() - f.mean()).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn reduces_total_variation_and_variance(
            seed in any::<u64>(),
            side in 2usize..12,
            weight in 0.5f64..60.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = ImagePlane::from_fn(side, |_, _| rng.random_range(0.0..255.0));
            let u = tv_denoise(&f, weight, DEFAULT_TV_ITERS);
            prop_assert!(total_variation(&u) <= total_variation(&f) + 1e-9);
            prop_assert!(u.variance() <= f.variance() + 1e-9);
        }
    }
}
