use super::IqaError;
use crate::clahe::{Histogram256, LEVELS};
use crate::image::ChannelU8;

/// Floor added inside the cross-entropy logarithm.
pub const CROSS_ENTROPY_EPS: f64 = 1e-12;
/// Offset added to block max and min so empty (zero) minima stay finite.
pub const EME_EPS: f64 = 1.0;

fn probabilities(img: &ChannelU8) -> [f64; LEVELS] {
    let h = Histogram256::of(img);
    let n = img.len() as f64;
    let mut p = [0.0; LEVELS];
    for (pi, &c) in p.iter_mut().zip(h.counts.iter()) {
        *pi = f64::from(c) / n;
    }
    p
}

/// Shannon entropy of the 256-bin histogram, in bits.
pub fn entropy(img: &ChannelU8) -> f64 {
    let e: f64 = probabilities(img)
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * libm::log2(p))
        .sum();
    // a single occupied bin yields -0.0
    e + 0.0
}

/// `-sum h_x(i) log2(h_y(i) + eps)` over normalized histograms.
pub fn cross_entropy(x: &ChannelU8, y: &ChannelU8) -> f64 {
    let (px, py) = (probabilities(x), probabilities(y));
    px.iter()
        .zip(py.iter())
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| -a * libm::log2(b + CROSS_ENTROPY_EPS))
        .sum()
}

/// Mean over full `block x block` tiles of `20 log10((max + 1) / (min + 1))`.
/// Remainder rows and columns are ignored.
pub fn eme(img: &ChannelU8, block: usize) -> Result<f64, IqaError> {
    if block == 0 {
        return Err(IqaError::InvalidBlock);
    }
    let (w, h) = (img.width(), img.height());
    if w < block || h < block {
        return Err(IqaError::TooSmall {
            width: w,
            height: h,
            min: block,
        });
    }
    let (bx, by) = (w / block, h / block);
    let mut total = 0.0;
    for j in 0..by {
        for i in 0..bx {
            let (mut lo, mut hi) = (u8::MAX, u8::MIN);
            for y in j * block..(j + 1) * block {
                for &v in &img.data()[y * w + i * block..y * w + (i + 1) * block] {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            total += 20.0 * libm::log10((f64::from(hi) + EME_EPS) / (f64::from(lo) + EME_EPS));
        }
    }
    Ok(total / (bx * by) as f64)
}

/// `(max - min) / (max + min)`, 0 for an all-zero image.
pub fn michelson(img: &ChannelU8) -> f64 {
    let lo = img.data().iter().copied().min().unwrap_or(0);
    let hi = img.data().iter().copied().max().unwrap_or(0);
    if hi == 0 {
        return 0.0;
    }
    f64::from(hi - lo) / (f64::from(hi) + f64::from(lo))
}

/// Population standard deviation of pixel intensities.
pub fn rms_contrast(img: &ChannelU8) -> f64 {
    let n = img.len() as f64;
    let mean = img.data().iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let ss: f64 = img
        .data()
        .iter()
        .map(|&v| {
            let d = f64::from(v) - mean;
            d * d
        })
        .sum();
    libm::sqrt(ss / n)
}

/// Same quantity as [`rms_contrast`], reported under its own name.
pub fn std_dev(img: &ChannelU8) -> f64 {
    rms_contrast(img)
}
