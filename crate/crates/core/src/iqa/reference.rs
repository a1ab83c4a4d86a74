use alloc::vec;
use alloc::vec::Vec;

use super::{ensure_min, IqaError};
use crate::image::ChannelU8;

pub const PEAK: f64 = 255.0;
pub const SSIM_WINDOW: usize = 8;

const C1: f64 = (0.01 * PEAK) * (0.01 * PEAK);
const C2: f64 = (0.03 * PEAK) * (0.03 * PEAK);

pub fn mse(a: &ChannelU8, b: &ChannelU8) -> Result<f64, IqaError> {
    a.same_dims(b)?;
    let sum: u64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = i64::from(x) - i64::from(y);
            (d * d) as u64
        })
        .sum();
    Ok(sum as f64 / a.len() as f64)
}

/// `10 log10(255^2 / mse)`; `+inf` when `mse == 0`.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        return f64::INFINITY;
    }
    10.0 * libm::log10(PEAK * PEAK / mse)
}

pub fn psnr(a: &ChannelU8, b: &ChannelU8) -> Result<f64, IqaError> {
    Ok(psnr_from_mse(mse(a, b)?))
}

/// Summed-area table with a zero guard row/column.
struct Integral {
    stride: usize,
    sums: Vec<u64>,
}

impl Integral {
    fn build(w: usize, h: usize, value: impl Fn(usize) -> u64) -> Self {
        let stride = w + 1;
        let mut sums = vec![0u64; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0u64;
            for x in 0..w {
                row += value(y * w + x);
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row;
            }
        }
        Self { stride, sums }
    }

    /// Sum over the `n x n` window with top-left corner (x, y).
    #[inline]
    fn window(&self, x: usize, y: usize, n: usize) -> u64 {
        let s = self.stride;
        self.sums[(y + n) * s + x + n] + self.sums[y * s + x] - self.sums[y * s + x + n] - self.sums[(y + n) * s + x]
    }
}

/// Mean SSIM over all 8x8 windows (stride 1, uniform weights, population
/// statistics).
pub fn ssim(a: &ChannelU8, b: &ChannelU8) -> Result<f64, IqaError> {
    a.same_dims(b)?;
    let (w, h) = (a.width(), a.height());
    ensure_min(w, h, SSIM_WINDOW)?;
    let (da, db) = (a.data(), b.data());
    let sa = Integral::build(w, h, |i| u64::from(da[i]));
    let sb = Integral::build(w, h, |i| u64::from(db[i]));
    let saa = Integral::build(w, h, |i| u64::from(da[i]) * u64::from(da[i]));
    let sbb = Integral::build(w, h, |i| u64::from(db[i]) * u64::from(db[i]));
    let sab = Integral::build(w, h, |i| u64::from(da[i]) * u64::from(db[i]));

    let n = SSIM_WINDOW;
    let count = (n * n) as i128;
    let nf = (n * n) as f64;
    let nf2 = nf * nf;
    let mut total = 0.0;
    for y in 0..=h - n {
        for x in 0..=w - n {
            let (ma, mb) = (sa.window(x, y, n) as i128, sb.window(x, y, n) as i128);
            // n^2 * variance, exact in integers
            let va = count * saa.window(x, y, n) as i128 - ma * ma;
            let vb = count * sbb.window(x, y, n) as i128 - mb * mb;
            let cov = count * sab.window(x, y, n) as i128 - ma * mb;
            total += ssim_window(ma as f64 / nf, mb as f64 / nf, va as f64 / nf2, vb as f64 / nf2, cov as f64 / nf2);
        }
    }
    Ok(total / ((w - n + 1) * (h - n + 1)) as f64)
}

#[inline]
fn ssim_window(mu_a: f64, mu_b: f64, var_a: f64, var_b: f64, cov: f64) -> f64 {
    ((2.0 * mu_a * mu_b + C1) * (2.0 * cov + C2)) / ((mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2))
}

/// Pearson correlation of two pixel populations.
pub fn coc(x: &ChannelU8, y: &ChannelU8) -> Result<f64, IqaError> {
    x.same_dims(y)?;
    let n = x.len() as f64;
    let mx = x.data().iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let my = y.data().iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.data().iter().zip(y.data()) {
        let (dx, dy) = (f64::from(a) - mx, f64::from(b) - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(IqaError::ConstantImage);
    }
    Ok(sxy / libm::sqrt(sxx * syy))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(w: usize, h: usize, data: Vec<u8>) -> ChannelU8 {
        ChannelU8::new(w, h, data).unwrap()
    }

    #[test]
    fn mse_cases() {
        let a = plane(2, 1, vec![0, 0]);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(mse(&plane(1, 1, vec![0]), &plane(1, 1, vec![255])).unwrap(), 65025.0);
        assert_eq!(mse(&a, &plane(2, 1, vec![3, 4])).unwrap(), 12.5);
        assert!(matches!(mse(&a, &plane(1, 2, vec![0, 0])), Err(IqaError::Image(_))));
    }

    #[test]
    fn psnr_matches_published_rows() {
        assert!((psnr_from_mse(0.043389455) - 61.75696).abs() < 1e-4);
        assert!((psnr_from_mse(0.025031866) - 64.14587).abs() < 1e-4);
        let a = plane(2, 1, vec![1, 2]);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
    }

    #[test]
    fn ssim_identity_and_shift() {
        let a = ChannelU8::from_fn(12, 10, |x, y| (x * 13 + y * 7) as u8).unwrap();
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
        let b = ChannelU8::new(12, 10, a.data().iter().map(|&v| v + 10).collect()).unwrap();
        let s = ssim(&a, &b).unwrap();
        assert!(s < 1.0 && s > 0.9);
    }

    #[test]
    fn ssim_requires_window() {
        let a = ChannelU8::filled(7, 20, 0).unwrap();
        assert!(matches!(ssim(&a, &a), Err(IqaError::TooSmall { .. })));
    }

    #[test]
    fn coc_cases() {
        let x = ChannelU8::from_fn(9, 9, |i, j| (i * 11 + j * 3) as u8).unwrap();
        assert!((coc(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        let neg = ChannelU8::new(9, 9, x.data().iter().map(|&v| 255 - v).collect()).unwrap();
        assert!((coc(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
        let affine = ChannelU8::new(9, 9, x.data().iter().map(|&v| 2 * v + 3).collect()).unwrap();
        assert!((coc(&x, &affine).unwrap() - 1.0).abs() < 1e-10);
        let flat = ChannelU8::filled(9, 9, 4).unwrap();
        assert_eq!(coc(&x, &flat), Err(IqaError::ConstantImage));
    }
}
