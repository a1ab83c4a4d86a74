//! Image enhancement by Perona-Malik diffusion and CLAHE with parameters
//! tuned per image by Spider Monkey Optimization.
//!
//! The crate is `no_std` and only needs `alloc`. Enable the `parallel`
//! feature to evaluate optimizer candidates and diffusion rows on a rayon
//! pool; results are bit-identical either way.
//!
//! Module map:
//! * [`image`] plane and RGB buffer types, 8-bit/real conversions
//! * [`colorspace`] sRGB <-> CIELAB (D65)
//! * [`diffusion`] explicit 4-neighbour Perona-Malik filter
//! * [`clahe`] contrast limited adaptive histogram equalization
//! * [`iqa`] full- and no-reference quality metrics, BRISQUE/CEIQ features
//! * [`optim`] Spider Monkey Optimization and a PSO baseline
//! * [`pipeline`] the LAB split / denoise / equalize / recombine pipeline
//! * [`synth`] deterministic synthetic fixtures and test scorer fitting

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod clahe;
pub mod colorspace;
pub mod diffusion;
pub mod image;
pub mod iqa;
pub mod math;
pub mod optim;
pub mod pipeline;
pub mod synth;

pub use crate::clahe::{ClaheError, ClaheParams, ClippedHistogram, Histogram256};
pub use crate::colorspace::LabImage;
pub use crate::diffusion::{DiffusionError, PmdParams};
pub use crate::image::{ChannelF64, ChannelU8, ImageError, RgbImage8};
pub use crate::iqa::{IqaError, MetricsReport, ModelKind, ScoringModel};
pub use crate::optim::{OptResult, Objective, PsoConfig, SearchSpace, SmoConfig};
pub use crate::pipeline::{EnhanceResult, Mode, PipelineConfig};
