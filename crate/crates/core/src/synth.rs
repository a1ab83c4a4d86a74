//! Deterministic synthetic fixtures: smear-like scenes (pale background,
//! overlapping cells with darker nuclei), contrast compression, Gaussian
//! noise and blur, plus least-squares fitting of small test scorers on
//! those distortions.
//!
//! The fitted scorers are for directional tests only. They are not trained
//! on any natural-image quality database.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::clahe::{clahe_apply, ClaheParams};
use crate::image::{luminance, to_real, to_u8, ChannelF64, ChannelU8, RgbImage8};
use crate::iqa::{brisque_features, ceiq_features, fit_linear, IqaError, ScoringModel};
use crate::math::clamp;

/// Side length of the bundled fixtures.
pub const FIXTURE_SIZE: usize = 96;
/// Number of images in the bundled corpus.
pub const CORPUS_LEN: usize = 10;

/// Degradation applied to a clean scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Degradation {
    /// Contrast factor around the scene mean, 1 = unchanged.
    pub contrast: f64,
    /// Gaussian noise standard deviation on the 0..255 scale.
    pub sigma: f64,
    /// Passes of the separable `[1, 2, 1] / 4` blur.
    pub blur: usize,
}

struct Cell {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    angle: f64,
    nucleus: f64,
}

fn inside(c: &Cell, x: f64, y: f64, scale: f64) -> bool {
    let (s, co) = (libm::sin(c.angle), libm::cos(c.angle));
    let dx = x - c.cx;
    let dy = y - c.cy;
    let u = (dx * co + dy * s) / (c.rx * scale);
    let v = (-dx * s + dy * co) / (c.ry * scale);
    u * u + v * v <= 1.0
}

/// Clean scene number `seed`, `size` x `size`.
pub fn clean_scene(seed: u64, size: usize) -> RgbImage8 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 ^ seed);
    let s = size as f64;
    let count = rng.random_range(3..7);
    let cells: Vec<Cell> = (0..count)
        .map(|_| Cell {
            cx: rng.random_range(0.15..0.85) * s,
            cy: rng.random_range(0.15..0.85) * s,
            rx: rng.random_range(0.10..0.22) * s,
            ry: rng.random_range(0.08..0.18) * s,
            angle: rng.random_range(0.0..core::f64::consts::PI),
            nucleus: rng.random_range(0.22..0.38),
        })
        .collect();
    let background = [214.0, 182.0, 196.0];
    let cytoplasm = [[160.0, 118.0, 170.0], [120.0, 160.0, 175.0]];
    let nucleus = [72.0, 48.0, 112.0];
    RgbImage8::from_fn(size, size, |x, y| {
        let (xf, yf) = (x as f64 + 0.5, y as f64 + 0.5);
        // gentle illumination gradient
        let shade = 1.0 - 0.08 * (xf + yf) / (2.0 * s);
        let mut px = background;
        for (k, c) in cells.iter().enumerate() {
            if inside(c, xf, yf, 1.0) {
                px = cytoplasm[k % 2];
            }
        }
        for c in &cells {
            if inside(c, xf, yf, c.nucleus) {
                px = nucleus;
            }
        }
        px.map(|v| clamp(libm::round(v * shade), 0.0, 255.0) as u8)
    })
    .expect("non-empty fixture")
}

fn blur_once(p: &ChannelF64) -> ChannelF64 {
    let (w, h) = (p.width(), p.height());
    let d = p.data();
    let horizontal = ChannelF64::from_fn(w, h, |x, y| {
        let l = d[y * w + x.saturating_sub(1)];
        let r = d[y * w + (x + 1).min(w - 1)];
        0.25 * l + 0.5 * d[y * w + x] + 0.25 * r
    })
    .expect("same dims");
    let hd = horizontal.data();
    ChannelF64::from_fn(w, h, |x, y| {
        let u = hd[y.saturating_sub(1) * w + x];
        let v = hd[(y + 1).min(h - 1) * w + x];
        0.25 * u + 0.5 * hd[y * w + x] + 0.25 * v
    })
    .expect("same dims")
}

fn degrade_plane(p: &ChannelF64, mean: f64, d: &Degradation, rng: &mut ChaCha8Rng) -> ChannelF64 {
    let mut out = p.map(|v| mean + d.contrast * (v - mean));
    for _ in 0..d.blur {
        out = blur_once(&out);
    }
    if d.sigma > 0.0 {
        let normal = Normal::new(0.0, d.sigma).expect("positive sigma");
        let noisy: Vec<f64> = out.data().iter().map(|&v| v + normal.sample(rng)).collect();
        out = ChannelF64::new(out.width(), out.height(), noisy).expect("same dims");
    }
    out
}

/// Applies `d` to every channel. The contrast pivot is the mean luminance,
/// so compression keeps the overall brightness.
pub fn degrade_rgb(img: &RgbImage8, d: &Degradation, seed: u64) -> RgbImage8 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lum = luminance(img);
    let mean = lum.data().iter().map(|&v| v as f64).sum::<f64>() / lum.len() as f64;
    let planes: Vec<ChannelU8> = (0..3)
        .map(|c| {
            let p = ChannelF64::from_fn(img.width(), img.height(), |x, y| img.pixel(x, y)[c] as f64).expect("dims");
            to_u8(&degrade_plane(&p, mean, d, &mut rng))
        })
        .collect();
    RgbImage8::from_fn(img.width(), img.height(), |x, y| {
        [planes[0].get(x, y), planes[1].get(x, y), planes[2].get(x, y)]
    })
    .expect("dims")
}

/// Applies `d` to a gray plane (real valued, unclamped).
pub fn degrade_gray(img: &ChannelF64, d: &Degradation, seed: u64) -> ChannelF64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = img.data().iter().sum::<f64>() / img.len() as f64;
    degrade_plane(img, mean, d, &mut rng)
}

/// Degradation of corpus image `index`: contrast 0.35..0.55, noise
/// sigma 6..12.
pub fn corpus_degradation(index: usize) -> Degradation {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0de_0000 ^ index as u64);
    Degradation {
        contrast: rng.random_range(0.35..0.55),
        sigma: rng.random_range(6.0..12.0),
        blur: 0,
    }
}

/// Corpus image `index`: noisy, low-contrast smear scene.
pub fn corpus_image(index: usize) -> RgbImage8 {
    let clean = clean_scene(index as u64, FIXTURE_SIZE);
    degrade_rgb(&clean, &corpus_degradation(index), 0xa11c_e000 ^ index as u64)
}

/// The bundled 10-image corpus.
pub fn corpus() -> Vec<RgbImage8> {
    (0..CORPUS_LEN).map(corpus_image).collect()
}

/// Clean gray scene and its copy with additive noise of standard deviation
/// `sigma`, unclamped.
pub fn gray_noise_pair(sigma: f64, seed: u64) -> (ChannelF64, ChannelF64) {
    let clean = to_real(&luminance(&clean_scene(seed, FIXTURE_SIZE)));
    let noisy = degrade_gray(
        &clean,
        &Degradation {
            contrast: 1.0,
            sigma,
            blur: 0,
        },
        seed ^ 0x7015e,
    );
    (clean, noisy)
}

/// Gray scene compressed to 30% contrast, lightly noisy, quantized.
pub fn low_contrast_gray(seed: u64) -> ChannelU8 {
    let clean = to_real(&luminance(&clean_scene(seed, FIXTURE_SIZE)));
    to_u8(&degrade_gray(
        &clean,
        &Degradation {
            contrast: 0.3,
            sigma: 2.0,
            blur: 0,
        },
        seed ^ 0x10c0,
    ))
}

/// Training scenes for the test scorers; disjoint from the corpus seeds.
const TRAIN_SEEDS: [u64; 6] = [100, 101, 102, 103, 104, 105];

/// Target of the BRISQUE test scorer: noise sigma plus a blur penalty.
/// Lower is better.
pub fn brisque_target(d: &Degradation) -> f64 {
    d.sigma + 4.0 * d.blur as f64
}

/// Target of the CEIQ test scorer for a processed sample: rewards the
/// contrast of the processed noise-free scene relative to the clean one,
/// penalizes the noise left in (or amplified by) the processing. Higher is
/// better.
pub fn ceiq_target(contrast_gain: f64, residual_noise: f64) -> f64 {
    2.0 + 2.0 * contrast_gain - residual_noise / 20.0
}

fn training_luminance(seed: u64, d: &Degradation, k: u64) -> ChannelU8 {
    let clean = to_real(&luminance(&clean_scene(seed, FIXTURE_SIZE)));
    to_u8(&degrade_gray(&clean, d, seed.wrapping_mul(1000) + k))
}

/// Fits the linear BRISQUE test scorer on noise x blur distortions.
pub fn fit_brisque_test_model() -> Result<ScoringModel, IqaError> {
    let mut samples = Vec::new();
    let mut targets = Vec::new();
    for &seed in &TRAIN_SEEDS {
        let mut k = 0;
        for sigma in [0.0, 4.0, 8.0, 12.0, 16.0] {
            for blur in [0, 1, 2, 4] {
                let d = Degradation {
                    contrast: 0.5,
                    sigma,
                    blur,
                };
                samples.push(brisque_features(&training_luminance(seed, &d, k))?.to_vec());
                targets.push(brisque_target(&d));
                k += 1;
            }
        }
    }
    fit_linear(&samples, &targets, 1e-3)
}

/// CLAHE settings applied to part of the CEIQ training samples.
const CEIQ_TRAIN_CLAHE: [(f64, usize); 4] = [(0.5, 2), (1.0, 4), (2.0, 8), (4.0, 16)];

fn population_std(p: &ChannelU8) -> f64 {
    let n = p.len() as f64;
    let mean = p.data().iter().map(|&v| v as f64).sum::<f64>() / n;
    libm::sqrt(p.data().iter().map(|&v| (v as f64 - mean) * (v as f64 - mean)).sum::<f64>() / n)
}

/// Fits the linear CEIQ test scorer on contrast x noise distortions, raw
/// and after CLAHE. Each sample is labelled from its noise-free twin run
/// through the same processing: the contrast gain is the twin's spread
/// over the clean scene's, the residual noise is the spread of the
/// difference to the twin.
pub fn fit_ceiq_test_model() -> Result<ScoringModel, IqaError> {
    let mut samples = Vec::new();
    let mut targets = Vec::new();
    for &seed in &TRAIN_SEEDS {
        let clean = to_real(&luminance(&clean_scene(seed, FIXTURE_SIZE)));
        let clean_std = population_std(&to_u8(&clean));
        let mut k = 0;
        for contrast in [0.2, 0.4, 0.6, 0.8, 1.0] {
            for sigma in [0.0, 5.0, 10.0, 20.0] {
                let d = Degradation {
                    contrast,
                    sigma,
                    blur: 0,
                };
                let twin = to_u8(&degrade_gray(&clean, &Degradation { sigma: 0.0, ..d }, 0));
                let noisy = to_u8(&degrade_gray(&clean, &d, seed.wrapping_mul(1000) + k));
                k += 1;
                let mut variants = vec![(twin.clone(), noisy.clone())];
                for &(clip, tiles) in &CEIQ_TRAIN_CLAHE {
                    let p = ClaheParams::new(clip, tiles).expect("valid training params");
                    variants.push((
                        clahe_apply(&twin, &p).expect("fixture larger than grid"),
                        clahe_apply(&noisy, &p).expect("fixture larger than grid"),
                    ));
                }
                for (t, n) in variants {
                    let diff: Vec<f64> = n.data().iter().zip(t.data()).map(|(&a, &b)| a as f64 - b as f64).collect();
                    let m = diff.iter().sum::<f64>() / diff.len() as f64;
                    let noise = libm::sqrt(diff.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / diff.len() as f64);
                    samples.push(ceiq_features(&n)?.to_vec());
                    targets.push(ceiq_target(population_std(&t) / clean_std, noise));
                }
            }
        }
    }
    fit_linear(&samples, &targets, 1e-3)
}

/// `[0, 1]` uniform plane for property tests.
pub fn uniform_plane(width: usize, height: usize, seed: u64) -> ChannelU8 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<u8> = (0..width * height).map(|_| rng.random()).collect();
    ChannelU8::new(width, height, data).expect("non-empty")
}

/// Unit-variance Gaussian noise plane.
pub fn gaussian_plane(width: usize, height: usize, seed: u64) -> ChannelF64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let data: Vec<f64> = (0..width * height).map(|_| normal.sample(&mut rng)).collect();
    ChannelF64::new(width, height, data).expect("non-empty")
}
