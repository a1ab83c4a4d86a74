//! Image quality assessment.
//!
//! Full-reference metrics (MSE, PSNR, SSIM, CoC), histogram and contrast
//! measures (entropy, cross-entropy, EME, Michelson, RMS contrast), and the
//! two no-reference objectives: CEIQ and BRISQUE. Both no-reference scores
//! are split into an exact feature extractor and a pluggable
//! [`ScoringModel`] loaded from configuration.

mod brisque;
mod ceiq;
mod contrast;
mod model;
mod reference;

pub use self::brisque::{
    aggd_fit, brisque_features, brisque_features_real, brisque_score, downsample2, ggd_fit,
    mscn, scale_features, AggdFit, GgdFit, BRISQUE_FEATURES, SHAPE_MAX, SHAPE_MIN, SHAPE_STEP,
};
pub use self::ceiq::{ceiq_features, ceiq_score, equalize, CEIQ_FEATURES};
pub use self::contrast::{
    cross_entropy, eme, entropy, michelson, rms_contrast, std_dev, CROSS_ENTROPY_EPS, EME_EPS,
};
pub use self::model::{fit_linear, ModelKind, ScoringModel};
pub use self::reference::{coc, mse, psnr, psnr_from_mse, ssim, PEAK, SSIM_WINDOW};

use crate::image::ImageError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IqaError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("image {width}x{height} is smaller than the required {min}x{min}")]
    TooSmall { width: usize, height: usize, min: usize },
    #[error("correlation undefined for a constant image")]
    ConstantImage,
    #[error("block size must be at least 1")]
    InvalidBlock,
    #[error("model expects {expected} features, got {actual}")]
    FeatureCountMismatch { expected: usize, actual: usize },
    #[error("invalid scoring model: {0}")]
    InvalidModel(&'static str),
    #[error("least-squares system is singular")]
    Singular,
}

/// Every evaluation value for one (original, enhanced) pair.
///
/// Full-reference fields compare original to enhanced; single-image fields
/// describe the enhanced image. `psnr_db` is `+inf` for identical inputs
/// and `coc` is NaN when either image is constant. `ceiq` and `brisque` are
/// absent when no scoring model was supplied.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub mse: f64,
    pub psnr_db: f64,
    pub ssim: f64,
    pub entropy_bits: f64,
    pub eme: f64,
    pub michelson: f64,
    pub rms_contrast: f64,
    pub coc: f64,
    pub std_dev: f64,
    pub cross_entropy: f64,
    pub ceiq: Option<f64>,
    pub brisque: Option<f64>,
}

pub(crate) fn ensure_min(w: usize, h: usize, min: usize) -> Result<(), IqaError> {
    if w < min || h < min {
        return Err(IqaError::TooSmall {
            width: w,
            height: h,
            min,
        });
    }
    Ok(())
}
