//! Procedurally generated test images.
//!
//! The "natural" set is smooth and textured, the "unnatural" set piecewise
//! constant with sharp edges. Every fixture is deterministic, lies in
//! `[0, 255]` and has a nonzero border so its support fills the object block.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::grid::ImagePlane;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixtureKind {
    Natural,
    Unnatural,
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub kind: FixtureKind,
    pub image: ImagePlane,
}

fn clamp255(v: f64) -> f64 {
    v.clamp(0.0, 255.0)
}

/// Bilinearly interpolated random lattice with `cells` cells per side.
fn value_noise(side: usize, cells: usize, seed: u64) -> ImagePlane {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let lattice: Vec<f64> = (0..(cells + 1) * (cells + 1))
        .map(|_| rng.random_range(0.0..1.0))
        .collect();
    let at = |i: usize, j: usize| lattice[i * (cells + 1) + j];
    ImagePlane::from_fn(side, |r, c| {
        let (y, x) = (
            r as f64 * cells as f64 / side as f64,
            c as f64 * cells as f64 / side as f64,
        );
        let (i, j) = (y.floor() as usize, x.floor() as usize);
        let (fy, fx) = (y - i as f64, x - j as f64);
        let (sy, sx) = (fy * fy * (3.0 - 2.0 * fy), fx * fx * (3.0 - 2.0 * fx));
        let top = at(i, j) * (1.0 - sx) + at(i, j + 1) * sx;
        let bottom = at(i + 1, j) * (1.0 - sx) + at(i + 1, j + 1) * sx;
        top * (1.0 - sy) + bottom * sy
    })
}

fn blobs(side: usize) -> ImagePlane {
    let s = side as f64;
    let centers = [
        (0.30, 0.35, 0.18, 150.0),
        (0.65, 0.60, 0.22, 110.0),
        (0.20, 0.75, 0.12, 90.0),
        (0.80, 0.20, 0.10, 70.0),
    ];
    ImagePlane::from_fn(side, |r, c| {
        let (y, x) = (r as f64 / s, c as f64 / s);
        let bumps: f64 = centers
            .iter()
            .map(|(cy, cx, w, a)| {
                a * (-((y - cy).powi(2) + (x - cx).powi(2)) / (2.0 * w * w)).exp()
            })
            .sum();
        clamp255(30.0 + bumps)
    })
}

fn clouds(side: usize) -> ImagePlane {
    let coarse = value_noise(side, 3, 11);
    let fine = value_noise(side, 7, 12);
    ImagePlane::from_fn(side, |r, c| {
        clamp255(25.0 + 150.0 * coarse.get(r, c) + 70.0 * fine.get(r, c))
    })
}

fn portrait(side: usize) -> ImagePlane {
    let s = side as f64;
    let texture = value_noise(side, 6, 13);
    ImagePlane::from_fn(side, |r, c| {
        let (y, x) = (r as f64 / s - 0.48, c as f64 / s - 0.5);
        let inside = (x / 0.28).powi(2) + (y / 0.36).powi(2);
        let face = if inside < 1.0 {
            170.0 - 60.0 * inside - 40.0 * x
        } else {
            60.0 + 30.0 * (r as f64 / s)
        };
        clamp255(face + 25.0 * texture.get(r, c))
    })
}

fn landscape(side: usize) -> ImagePlane {
    let s = side as f64;
    let ridge = value_noise(side, 4, 14);
    let grass = value_noise(side, 9, 15);
    ImagePlane::from_fn(side, |r, c| {
        let y = r as f64 / s;
        let horizon = 0.35 + 0.2 * ridge.get(side / 2, c);
        if y < horizon {
            clamp255(200.0 - 80.0 * y)
        } else {
            clamp255(50.0 + 90.0 * grass.get(r, c) + 30.0 * (1.0 - y))
        }
    })
}

fn ripples(side: usize) -> ImagePlane {
    let s = side as f64;
    ImagePlane::from_fn(side, |r, c| {
        let (y, x) = (r as f64 / s - 0.4, c as f64 / s - 0.45);
        let d = (x * x + y * y).sqrt();
        clamp255(120.0 + 70.0 * (14.0 * d).cos() * (-2.5 * d).exp() + 40.0 * x)
    })
}

fn shading(side: usize) -> ImagePlane {
    let s = side as f64;
    let texture = value_noise(side, 5, 16);
    ImagePlane::from_fn(side, |r, c| {
        let (y, x) = (r as f64 / s, c as f64 / s);
        let sphere = (1.0 - ((x - 0.55).powi(2) + (y - 0.45).powi(2)) / 0.12).max(0.0);
        clamp255(40.0 + 60.0 * x + 120.0 * sphere.sqrt() + 30.0 * texture.get(r, c))
    })
}

fn tiles(side: usize) -> ImagePlane {
    let cell = (side / 6).max(1);
    let mut rng = ChaCha20Rng::seed_from_u64(21);
    let n = side.div_ceil(cell);
    let levels: Vec<f64> = (0..n * n).map(|_| rng.random_range(30.0..240.0)).collect();
    ImagePlane::from_fn(side, |r, c| levels[(r / cell) * n + c / cell])
}

/// 5×7 bitmap glyphs for "PR", "RED" and "ITA".
fn glyph(ch: char) -> [u8; 7] {
    match ch {
        'P' => [0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10],
        'R' => [0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11],
        'E' => [0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F],
        'D' => [0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E],
        'I' => [0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E],
        'T' => [0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04],
        'A' => [0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11],
        _ => [0; 7],
    }
}

fn text(side: usize) -> ImagePlane {
    let lines = ["PR", "RED", "ITA"];
    let scale = (side / 24).max(1);
    let mut img = ImagePlane::from_fn(side, |r, _| 40.0 + 20.0 * (r as f64 / side as f64));
    for (li, line) in lines.iter().enumerate() {
        for (ci, ch) in line.chars().enumerate() {
            let rows = glyph(ch);
            for (gr, bits) in rows.iter().enumerate() {
                for gc in 0..5 {
                    if bits & (0x10 >> gc) == 0 {
                        continue;
                    }
                    for dr in 0..scale {
                        for dc in 0..scale {
                            let r = 1 + (li * 8 + gr) * scale + dr;
                            let c = 1 + (ci * 6 + gc) * scale + dc + li * scale;
                            if r < side && c < side {
                                img.set(r, c, 230.0 - 30.0 * li as f64);
                            }
                        }
                    }
                }
            }
        }
    }
    img
}

fn squares(side: usize) -> ImagePlane {
    let s = side as f64;
    ImagePlane::from_fn(side, |r, c| {
        let (y, x) = (r as f64 / s - 0.42, c as f64 / s - 0.47);
        let d = x.abs().max(y.abs());
        let band = (d * 9.0).floor() as usize;
        [220.0, 60.0, 180.0, 90.0, 240.0, 40.0][band % 6]
    })
}

fn rectangles(side: usize) -> ImagePlane {
    let mut img = ImagePlane::filled(side, 50.0);
    let mut rng = ChaCha20Rng::seed_from_u64(22);
    for _ in 0..7 {
        let (r0, c0) = (rng.random_range(0..side), rng.random_range(0..side));
        let (h, w) = (
            rng.random_range(side / 8..=side / 2),
            rng.random_range(side / 8..=side / 2),
        );
        let level = rng.random_range(80.0..250.0);
        for r in r0..(r0 + h).min(side) {
            for c in c0..(c0 + w).min(side) {
                img.set(r, c, level);
            }
        }
    }
    img
}

fn wedge(side: usize) -> ImagePlane {
    ImagePlane::from_fn(side, |r, c| {
        if 2 * c + r < 2 * side - side / 3 && c > r / 3 {
            210.0
        } else if r > c {
            110.0
        } else {
            35.0
        }
    })
}

fn circles(side: usize) -> ImagePlane {
    let s = side as f64;
    let discs = [
        (0.3, 0.3, 0.2, 200.0),
        (0.7, 0.35, 0.15, 140.0),
        (0.55, 0.7, 0.25, 240.0),
        (0.2, 0.75, 0.1, 90.0),
    ];
    ImagePlane::from_fn(side, |r, c| {
        let (y, x) = (r as f64 / s, c as f64 / s);
        discs
            .iter()
            .rev()
            .find(|(cy, cx, rad, _)| (y - cy).powi(2) + (x - cx).powi(2) < rad * rad)
            .map_or(45.0, |d| d.3)
    })
}

/// Twelve fixtures at `side`, natural ones first.
pub fn all_fixtures(side: usize) -> Vec<Fixture> {
    use FixtureKind::*;
    let make = |name, kind, image| Fixture { name, kind, image };
    vec![
        make("blobs", Natural, blobs(side)),
        make("clouds", Natural, clouds(side)),
        make("portrait", Natural, portrait(side)),
        make("landscape", Natural, landscape(side)),
        make("ripples", Natural, ripples(side)),
        make("shading", Natural, shading(side)),
        make("tiles", Unnatural, tiles(side)),
        make("text", Unnatural, text(side)),
        make("squares", Unnatural, squares(side)),
        make("rectangles", Unnatural, rectangles(side)),
        make("wedge", Unnatural, wedge(side)),
        make("circles", Unnatural, circles(side)),
    ]
}

/// Three natural and three unnatural fixtures.
pub fn standard_six(side: usize) -> Vec<Fixture> {
    let keep = ["blobs", "clouds", "portrait", "tiles", "text", "circles"];
    all_fixtures(side)
        .into_iter()
        .filter(|f| keep.contains(&f.name))
        .collect()
}

pub fn fixture_by_name(name: &str, side: usize) -> Option<Fixture> {
    all_fixtures(side).into_iter().find(|f| f.name == name)
}
