//! Contrast-enhancement based quality features.
//!
//! The image is compared with its globally histogram-equalized version:
//! structural similarity, the entropies of both, and the cross-entropies in
//! both directions.

use alloc::vec::Vec;

use super::{cross_entropy, ensure_min, entropy, ssim, IqaError, ScoringModel, SSIM_WINDOW};
use crate::clahe::{he_lut, Histogram256};
use crate::image::ChannelU8;

pub const CEIQ_FEATURES: usize = 5;

/// Global histogram equalization through [`he_lut`]. A single-level image
/// has nothing to redistribute and is returned unchanged.
pub fn equalize(img: &ChannelU8) -> ChannelU8 {
    let h = Histogram256::of(img);
    if h.counts.iter().filter(|&&c| c > 0).count() <= 1 {
        return img.clone();
    }
    let lut = he_lut(&h).expect("non-empty image");
    let data: Vec<u8> = img.data().iter().map(|&v| lut[v as usize]).collect();
    ChannelU8::new(img.width(), img.height(), data).expect("dimensions preserved")
}

/// `[ssim(I, HE(I)), H(I), H(HE(I)), CE(I, HE(I)), CE(HE(I), I)]`.
pub fn ceiq_features(img: &ChannelU8) -> Result<[f64; CEIQ_FEATURES], IqaError> {
    ensure_min(img.width(), img.height(), SSIM_WINDOW)?;
    let eq = equalize(img);
    Ok([
        ssim(img, &eq)?,
        entropy(img),
        entropy(&eq),
        cross_entropy(img, &eq),
        cross_entropy(&eq, img),
    ])
}

/// Higher is better.
pub fn ceiq_score(features: &[f64], model: &ScoringModel) -> Result<f64, IqaError> {
    if model.feature_count != CEIQ_FEATURES {
        return Err(IqaError::FeatureCountMismatch {
            expected: CEIQ_FEATURES,
            actual: model.feature_count,
        });
    }
    model.score(features)
}
