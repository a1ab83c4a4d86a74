//! Perona-Malik anisotropic diffusion.
//!
//! Explicit 4-neighbour scheme: each step moves a pixel by
//! `lambda * sum_D c(|grad_D|) * grad_D` over the N/S/E/W forward differences,
//! with the exponential conductance `c(g) = exp(-(g / kappa)^2)`. Borders are
//! replicated so a missing neighbour contributes zero flux.
//!
//! Naming: `kappa` is the edge-sensitivity constant inside the conductance
//! and `lambda` is the per-iteration rate. Some texts call these the
//! "diffusion coefficient" and "gradient threshold"; the numeric ranges used
//! here (kappa in 10..=100, lambda in 0.1..=0.25) fix the roles unambiguously.

use alloc::vec::Vec;

use crate::image::{ChannelF64, ImageError};

/// Stability bound of the explicit 4-neighbour scheme.
pub const MAX_LAMBDA: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DiffusionError {
    #[error("kappa must be positive and finite, got {0}")]
    InvalidKappa(f64),
    #[error("lambda must lie in (0, 0.25], got {0}")]
    InvalidLambda(f64),
    #[error("gradient magnitude must be finite and non-negative, got {0}")]
    InvalidGradient(f64),
    #[error(transparent)]
    Image(#[from] ImageError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmdParams {
    pub niter: u32,
    pub kappa: f64,
    pub lambda: f64,
}

impl PmdParams {
    pub fn new(niter: u32, kappa: f64, lambda: f64) -> Result<Self, DiffusionError> {
        let p = Self { niter, kappa, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), DiffusionError> {
        check_kappa(self.kappa)?;
        check_lambda(self.lambda)
    }
}

fn check_kappa(kappa: f64) -> Result<(), DiffusionError> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(DiffusionError::InvalidKappa(kappa));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<(), DiffusionError> {
    if !(lambda > 0.0 && lambda <= MAX_LAMBDA) {
        return Err(DiffusionError::InvalidLambda(lambda));
    }
    Ok(())
}

/// Exponential conductance `exp(-(g/kappa)^2)`, in (0, 1].
pub fn diffusion_coefficient(grad_mag: f64, kappa: f64) -> Result<f64, DiffusionError> {
    check_kappa(kappa)?;
    if !(grad_mag.is_finite() && grad_mag >= 0.0) {
        return Err(DiffusionError::InvalidGradient(grad_mag));
    }
    Ok(conductance(grad_mag, 1.0 / (kappa * kappa)))
}

#[inline(always)]
fn conductance(grad: f64, inv_k2: f64) -> f64 {
    libm::exp(-(grad * grad) * inv_k2)
}

#[inline(always)]
fn flux(center: f64, neighbour: f64, inv_k2: f64) -> f64 {
    let d = neighbour - center;
    conductance(d, inv_k2) * d
}

fn step_row(src: &[f64], width: usize, height: usize, y: usize, inv_k2: f64, lambda: f64, out: &mut [f64]) {
    let row = &src[y * width..(y + 1) * width];
    let up = if y > 0 { Some(&src[(y - 1) * width..y * width]) } else { None };
    let down = if y + 1 < height {
        Some(&src[(y + 1) * width..(y + 2) * width])
    } else {
        None
    };
    for x in 0..width {
        let c = row[x];
        let mut acc = 0.0;
        if let Some(up) = up {
            acc += flux(c, up[x], inv_k2);
        }
        if let Some(down) = down {
            acc += flux(c, down[x], inv_k2);
        }
        if x + 1 < width {
            acc += flux(c, row[x + 1], inv_k2);
        }
        if x > 0 {
            acc += flux(c, row[x - 1], inv_k2);
        }
        out[x] = c + lambda * acc;
    }
}

fn step_unchecked(img: &ChannelF64, kappa: f64, lambda: f64) -> ChannelF64 {
    let (w, h) = (img.width(), img.height());
    let inv_k2 = 1.0 / (kappa * kappa);
    let src = img.data();
    let mut out: Vec<f64> = alloc::vec![0.0; src.len()];

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        out.par_chunks_mut(w)
            .enumerate()
            .for_each(|(y, row)| step_row(src, w, h, y, inv_k2, lambda, row));
    }
    #[cfg(not(feature = "parallel"))]
    for (y, row) in out.chunks_mut(w).enumerate() {
        step_row(src, w, h, y, inv_k2, lambda, row);
    }

    ChannelF64::new(w, h, out).expect("dimensions preserved")
}

/// One explicit diffusion step.
pub fn pmd_step(img: &ChannelF64, kappa: f64, lambda: f64) -> Result<ChannelF64, DiffusionError> {
    check_kappa(kappa)?;
    check_lambda(lambda)?;
    img.ensure_finite()?;
    Ok(step_unchecked(img, kappa, lambda))
}

/// Applies [`pmd_step`] exactly `p.niter` times.
pub fn pmd_filter(img: &ChannelF64, p: &PmdParams) -> Result<ChannelF64, DiffusionError> {
    p.validate()?;
    img.ensure_finite()?;
    let mut cur = img.clone();
    for _ in 0..p.niter {
        cur = step_unchecked(&cur, p.kappa, p.lambda);
    }
    Ok(cur)
}
