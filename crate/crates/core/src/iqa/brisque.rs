//! BRISQUE spatial-domain features.
//!
//! Mean-subtracted contrast-normalized (MSCN) coefficients are computed with
//! a 7x7 Gaussian window (sigma = 7/6) and stabilizing constant 1. A
//! symmetric generalized Gaussian is fitted to the MSCN field (shape,
//! variance) and an asymmetric one to each of the four neighbour products
//! (shape, mean, left variance, right variance). The same 18 features are
//! extracted again on a 2x2-averaged copy, giving 36.
//!
//! Shapes are estimated by moment matching against the tabulated ratio
//! `Gamma(1/a) Gamma(3/a) / Gamma(2/a)^2` on the grid `0.2, 0.201, ..., 10`.
//! The ratio is strictly monotone on that grid, so the nearest entry is found
//! by bisection instead of a linear scan; both give the same index.

use alloc::vec;
use alloc::vec::Vec;

use super::{ensure_min, IqaError, ScoringModel};
use crate::image::{to_real, ChannelF64, ChannelU8};

pub const BRISQUE_FEATURES: usize = 36;
pub const SHAPE_MIN: f64 = 0.2;
pub const SHAPE_MAX: f64 = 10.0;
pub const SHAPE_STEP: f64 = 1e-3;

const MIN_SIZE: usize = 16;
const STABILIZER: f64 = 1.0;
const WINDOW_RADIUS: usize = 3;
const WINDOW_SIGMA: f64 = 7.0 / 6.0;

/// Number of grid points in `[SHAPE_MIN, SHAPE_MAX]`.
const SHAPE_COUNT: usize = 9801;

#[inline]
fn shape_at(k: usize) -> f64 {
    SHAPE_MIN + k as f64 * SHAPE_STEP
}

/// `Gamma(1/a) Gamma(3/a) / Gamma(2/a)^2`, decreasing in `a`.
#[inline]
fn ggd_ratio(a: f64) -> f64 {
    libm::exp(libm::lgamma(1.0 / a) + libm::lgamma(3.0 / a) - 2.0 * libm::lgamma(2.0 / a))
}

/// Grid shape whose ratio is closest to `target`.
fn nearest_shape(target: f64) -> f64 {
    // bisection for the first index whose ratio is <= target
    let (mut lo, mut hi) = (0usize, SHAPE_COUNT);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if ggd_ratio(shape_at(mid)) <= target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let k = if lo == 0 {
        0
    } else if lo == SHAPE_COUNT {
        SHAPE_COUNT - 1
    } else {
        let below = (ggd_ratio(shape_at(lo - 1)) - target).abs();
        let above = (ggd_ratio(shape_at(lo)) - target).abs();
        if below <= above {
            lo - 1
        } else {
            lo
        }
    };
    shape_at(k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgdFit {
    pub shape: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggdFit {
    pub shape: f64,
    pub mean: f64,
    pub left_variance: f64,
    pub right_variance: f64,
}

/// Symmetric GGD moment fit. An all-zero sample set fits the lower shape
/// bound with zero variance.
pub fn ggd_fit(samples: &[f64]) -> GgdFit {
    let n = samples.len() as f64;
    let variance = samples.iter().map(|x| x * x).sum::<f64>() / n;
    let mean_abs = samples.iter().map(|x| x.abs()).sum::<f64>() / n;
    if !(mean_abs > 0.0) {
        return GgdFit {
            shape: SHAPE_MIN,
            variance: 0.0,
        };
    }
    GgdFit {
        shape: nearest_shape(variance / (mean_abs * mean_abs)),
        variance,
    }
}

/// Asymmetric GGD moment fit. When either side has no mass the fit is
/// degenerate: lower shape bound, zero mean, and the observed side
/// variances.
pub fn aggd_fit(samples: &[f64]) -> AggdFit {
    let (mut ls, mut ln, mut rs, mut rn) = (0.0, 0usize, 0.0, 0usize);
    let (mut abs_sum, mut sq_sum) = (0.0, 0.0);
    for &x in samples {
        if x < 0.0 {
            ls += x * x;
            ln += 1;
        } else if x > 0.0 {
            rs += x * x;
            rn += 1;
        }
        abs_sum += x.abs();
        sq_sum += x * x;
    }
    let left_variance = if ln > 0 { ls / ln as f64 } else { 0.0 };
    let right_variance = if rn > 0 { rs / rn as f64 } else { 0.0 };
    if !(left_variance > 0.0 && right_variance > 0.0) {
        return AggdFit {
            shape: SHAPE_MIN,
            mean: 0.0,
            left_variance,
            right_variance,
        };
    }
    let (left_std, right_std) = (libm::sqrt(left_variance), libm::sqrt(right_variance));
    let n = samples.len() as f64;
    let gamma_hat = left_std / right_std;
    let r_hat = (abs_sum / n) * (abs_sum / n) / (sq_sum / n);
    let g2 = gamma_hat * gamma_hat;
    let r_norm = r_hat * (g2 * gamma_hat + 1.0) * (gamma_hat + 1.0) / ((g2 + 1.0) * (g2 + 1.0));
    // the AGGD table holds the reciprocal of the GGD ratio
    let shape = nearest_shape(1.0 / r_norm);
    let scale = libm::sqrt(libm::tgamma(1.0 / shape) / libm::tgamma(3.0 / shape));
    let (bl, br) = (left_std * scale, right_std * scale);
    let mean = (br - bl) * libm::tgamma(2.0 / shape) / libm::tgamma(1.0 / shape);
    AggdFit {
        shape,
        mean,
        left_variance,
        right_variance,
    }
}

fn gaussian_taps() -> [f64; 2 * WINDOW_RADIUS + 1] {
    let mut taps = [0.0; 2 * WINDOW_RADIUS + 1];
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - WINDOW_RADIUS as f64;
        *t = libm::exp(-d * d / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA));
    }
    let s: f64 = taps.iter().sum();
    taps.map(|t| t / s)
}

/// Separable Gaussian blur with replicated borders.
fn blur(data: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let r = WINDOW_RADIUS as isize;
    let clampi = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; data.len()];
    for y in 0..h {
        let row = &data[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * row[clampi(x as isize + k as isize - r, w)];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; data.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, t) in taps.iter().enumerate() {
                acc += t * tmp[clampi(y as isize + k as isize - r, h) * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// MSCN coefficients. The plane is centred on its global mean first; the
/// coefficients are shift invariant and a constant plane yields exact zeros.
pub fn mscn(img: &ChannelF64) -> ChannelF64 {
    let (w, h) = (img.width(), img.height());
    let n = img.len() as f64;
    let mean = img.data().iter().sum::<f64>() / n;
    let centred: Vec<f64> = img.data().iter().map(|v| v - mean).collect();
    let squared: Vec<f64> = centred.iter().map(|v| v * v).collect();
    let taps = gaussian_taps();
    let mu = blur(&centred, w, h, &taps);
    let mu_sq = blur(&squared, w, h, &taps);
    let out = centred
        .iter()
        .zip(mu.iter().zip(&mu_sq))
        .map(|(&v, (&m, &m2))| {
            let sigma = libm::sqrt((m2 - m * m).abs());
            (v - m) / (sigma + STABILIZER)
        })
        .collect();
    ChannelF64::new(w, h, out).expect("dimensions preserved")
}

/// 2x2 box average; odd trailing rows/columns are dropped.
pub fn downsample2(img: &ChannelF64) -> ChannelF64 {
    let (w, h) = (img.width() / 2, img.height() / 2);
    ChannelF64::from_fn(w.max(1), h.max(1), |x, y| {
        let (sx, sy) = (2 * x, 2 * y);
        let (x1, y1) = ((sx + 1).min(img.width() - 1), (sy + 1).min(img.height() - 1));
        0.25 * (img.get(sx, sy) + img.get(x1, sy) + img.get(sx, y1) + img.get(x1, y1))
    })
    .expect("non-empty")
}

/// The 18 features of one scale.
pub fn scale_features(img: &ChannelF64) -> [f64; 18] {
    let m = mscn(img);
    let (w, h) = (m.width(), m.height());
    let d = m.data();
    let mut f = [0.0; 18];
    let g = ggd_fit(d);
    f[0] = g.shape;
    f[1] = g.variance;

    // horizontal, vertical, main diagonal, anti-diagonal neighbours
    let shifts: [(isize, isize); 4] = [(1, 0), (0, 1), (1, 1), (-1, 1)];
    let mut products = Vec::with_capacity(w * h);
    for (i, &(dx, dy)) in shifts.iter().enumerate() {
        products.clear();
        for y in 0..h.saturating_sub(dy as usize) {
            for x in 0..w {
                let nx = x as isize + dx;
                if nx < 0 || nx >= w as isize {
                    continue;
                }
                products.push(d[y * w + x] * d[(y + dy as usize) * w + nx as usize]);
            }
        }
        let a = aggd_fit(&products);
        f[2 + 4 * i] = a.shape;
        f[3 + 4 * i] = a.mean;
        f[4 + 4 * i] = a.left_variance;
        f[5 + 4 * i] = a.right_variance;
    }
    f
}

/// Features of a real-valued plane at full and half resolution.
pub fn brisque_features_real(img: &ChannelF64) -> Result<[f64; BRISQUE_FEATURES], IqaError> {
    ensure_min(img.width(), img.height(), MIN_SIZE)?;
    img.ensure_finite()?;
    let mut out = [0.0; BRISQUE_FEATURES];
    out[..18].copy_from_slice(&scale_features(img));
    out[18..].copy_from_slice(&scale_features(&downsample2(img)));
    Ok(out)
}

pub fn brisque_features(img: &ChannelU8) -> Result<[f64; BRISQUE_FEATURES], IqaError> {
    brisque_features_real(&to_real(img))
}

/// Lower is better.
pub fn brisque_score(features: &[f64], model: &ScoringModel) -> Result<f64, IqaError> {
    if model.feature_count != BRISQUE_FEATURES {
        return Err(IqaError::FeatureCountMismatch {
            expected: BRISQUE_FEATURES,
            actual: model.feature_count,
        });
    }
    model.score(features)
}
