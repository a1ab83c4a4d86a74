//! Contrast limited adaptive histogram equalization on 8-bit planes.
//!
//! The plane is cut into a `tiles x tiles` grid; the last tile row and
//! column absorb remainder pixels. Each tile histogram is clipped at a
//! ceiling of `max(1, clip_limit * tile_pixels / 256)` counts, the excess is
//! spread over all bins in one pass, and the tile LUT is the rounded scaled
//! CDF. Output pixels blend the LUTs of the nearest tile centres bilinearly.

use alloc::vec::Vec;

use crate::image::{ChannelU8, ImageError};
use crate::math::round_half_away;

pub const LEVELS: usize = 256;

pub const MIN_CLIP_LIMIT: f64 = 0.01;
pub const MAX_CLIP_LIMIT: f64 = 4.0;
pub const MIN_TILES: usize = 2;
pub const MAX_TILES: usize = 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClaheError {
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("image {width}x{height} is smaller than the {tiles}x{tiles} tile grid")]
    ImageSmallerThanGrid { width: usize, height: usize, tiles: usize },
    #[error("clip limit must be positive and finite, got {0}")]
    InvalidClipLimit(f64),
    #[error("tile grid must be at least 1, got {0}")]
    InvalidTiles(usize),
    #[error(transparent)]
    Image(#[from] ImageError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClaheParams {
    /// Ceiling as a multiple of the average bin occupancy.
    pub clip_limit: f64,
    /// Tile count per dimension.
    pub tiles: usize,
}

impl ClaheParams {
    pub fn new(clip_limit: f64, tiles: usize) -> Result<Self, ClaheError> {
        let p = Self { clip_limit, tiles };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ClaheError> {
        if !(self.clip_limit.is_finite() && self.clip_limit > 0.0) {
            return Err(ClaheError::InvalidClipLimit(self.clip_limit));
        }
        if self.tiles == 0 {
            return Err(ClaheError::InvalidTiles(self.tiles));
        }
        Ok(())
    }
}

impl Default for ClaheParams {
    fn default() -> Self {
        Self {
            clip_limit: 2.0,
            tiles: 8,
        }
    }
}

/// 256-bin intensity histogram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram256 {
    pub counts: [u32; LEVELS],
}

impl Default for Histogram256 {
    fn default() -> Self {
        Self { counts: [0; LEVELS] }
    }
}

impl Histogram256 {
    pub fn from_samples(samples: impl IntoIterator<Item = u8>) -> Self {
        let mut h = Self::default();
        for s in samples {
            h.counts[s as usize] += 1;
        }
        h
    }

    pub fn of(img: &ChannelU8) -> Self {
        Self::from_samples(img.data().iter().copied())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }
}

/// Histogram equalization LUT: `K_i = round(C_i * 255 / N)`.
pub fn he_lut(h: &Histogram256) -> Result<[u8; LEVELS], ClaheError> {
    lut_from_bins(h.counts.iter().map(|&c| u64::from(c)))
}

/// [`he_lut`] of a clipped histogram; the scale of its units cancels.
pub fn clipped_lut(h: &ClippedHistogram) -> Result<[u8; LEVELS], ClaheError> {
    lut_from_bins(h.units.iter().copied())
}

fn lut_from_bins(bins: impl Iterator<Item = u64> + Clone) -> Result<[u8; LEVELS], ClaheError> {
    let total: u64 = bins.clone().sum();
    if total == 0 {
        return Err(ClaheError::EmptyHistogram);
    }
    let scale = 255.0 / total as f64;
    let mut lut = [0u8; LEVELS];
    let mut cdf = 0u64;
    for (k, c) in lut.iter_mut().zip(bins) {
        cdf += c;
        *k = round_half_away(cdf as f64 * scale) as u8;
    }
    Ok(lut)
}

/// Per-bin count ceiling for a tile.
pub fn clip_limit_count(p: &ClaheParams, tile_pixels: usize) -> f64 {
    let beta = p.clip_limit * tile_pixels as f64 / LEVELS as f64;
    if beta < 1.0 {
        1.0
    } else {
        beta
    }
}

/// Sub-count resolution of [`ClippedHistogram`].
pub const UNITS_PER_COUNT: u64 = 256;

/// Histogram after clipping, in fixed point: `units[i] / UNITS_PER_COUNT`
/// is the (possibly fractional) count of bin `i`. Integer units keep mass
/// conservation exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClippedHistogram {
    pub units: [u64; LEVELS],
}

impl ClippedHistogram {
    pub fn count(&self, i: usize) -> f64 {
        self.units[i] as f64 / UNITS_PER_COUNT as f64
    }

    pub fn total_units(&self) -> u64 {
        self.units.iter().sum()
    }

    /// Total in counts; exact for any realistic pixel count.
    pub fn total(&self) -> f64 {
        self.total_units() as f64 / UNITS_PER_COUNT as f64
    }
}

impl From<&Histogram256> for ClippedHistogram {
    fn from(h: &Histogram256) -> Self {
        let mut units = [0u64; LEVELS];
        for (u, &c) in units.iter_mut().zip(h.counts.iter()) {
            *u = u64::from(c) * UNITS_PER_COUNT;
        }
        Self { units }
    }
}

/// Clips every bin at `beta` (to 1/256 of a count) and spreads the excess
/// equally over all bins in one pass. The part of the excess that does not
/// divide by 256 goes one unit at a time to the lowest-indexed bins.
pub fn clip_histogram(h: &Histogram256, beta: f64) -> ClippedHistogram {
    let scaled = beta * UNITS_PER_COUNT as f64;
    let ceiling = if scaled >= u64::MAX as f64 {
        u64::MAX
    } else if !(scaled >= UNITS_PER_COUNT as f64) {
        UNITS_PER_COUNT
    } else {
        scaled as u64
    };
    let mut out = ClippedHistogram::from(h);
    let mut excess = 0u64;
    for u in out.units.iter_mut() {
        if *u > ceiling {
            excess += *u - ceiling;
            *u = ceiling;
        }
    }
    if excess == 0 {
        return out;
    }
    let per_bin = excess / LEVELS as u64;
    let residual = (excess % LEVELS as u64) as usize;
    for (i, u) in out.units.iter_mut().enumerate() {
        *u += per_bin + u64::from(i < residual);
    }
    out
}

/// Start offset and length of each tile along one axis.
fn tile_spans(len: usize, tiles: usize) -> Vec<(usize, usize)> {
    let base = len / tiles;
    (0..tiles)
        .map(|k| {
            let start = k * base;
            let size = if k + 1 == tiles { len - start } else { base };
            (start, size)
        })
        .collect()
}

/// For each coordinate: (lower tile, upper tile, weight of upper tile).
fn axis_weights(len: usize, spans: &[(usize, usize)]) -> Vec<(usize, usize, f64)> {
    let centres: Vec<f64> = spans.iter().map(|&(s, n)| s as f64 + (n as f64 - 1.0) / 2.0).collect();
    let last = centres.len() - 1;
    let mut k = 0;
    (0..len)
        .map(|p| {
            let p = p as f64;
            if p <= centres[0] {
                return (0, 0, 0.0);
            }
            if p >= centres[last] {
                return (last, last, 0.0);
            }
            while centres[k + 1] < p {
                k += 1;
            }
            let w = (p - centres[k]) / (centres[k + 1] - centres[k]);
            (k, k + 1, w)
        })
        .collect()
}

fn tile_lut(img: &ChannelU8, xs: (usize, usize), ys: (usize, usize), p: &ClaheParams) -> [u8; LEVELS] {
    let mut h = Histogram256::default();
    for y in ys.0..ys.0 + ys.1 {
        let row = &img.data()[y * img.width()..(y + 1) * img.width()];
        for &v in &row[xs.0..xs.0 + xs.1] {
            h.counts[v as usize] += 1;
        }
    }
    let beta = clip_limit_count(p, xs.1 * ys.1);
    clipped_lut(&clip_histogram(&h, beta)).expect("tiles are never empty")
}

pub fn clahe_apply(img: &ChannelU8, p: &ClaheParams) -> Result<ChannelU8, ClaheError> {
    p.validate()?;
    let (w, h) = (img.width(), img.height());
    if w < p.tiles || h < p.tiles {
        return Err(ClaheError::ImageSmallerThanGrid {
            width: w,
            height: h,
            tiles: p.tiles,
        });
    }
    let xspans = tile_spans(w, p.tiles);
    let yspans = tile_spans(h, p.tiles);

    let cells: Vec<(usize, usize)> = (0..p.tiles)
        .flat_map(|ty| (0..p.tiles).map(move |tx| (tx, ty)))
        .collect();
    let build = |&(tx, ty): &(usize, usize)| tile_lut(img, xspans[tx], yspans[ty], p);
    #[cfg(feature = "parallel")]
    let luts: Vec<[u8; LEVELS]> = {
        use rayon::prelude::*;
        cells.par_iter().map(build).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let luts: Vec<[u8; LEVELS]> = cells.iter().map(build).collect();

    let xw = axis_weights(w, &xspans);
    let yw = axis_weights(h, &yspans);
    let lut = |tx: usize, ty: usize, v: u8| f64::from(luts[ty * p.tiles + tx][v as usize]);

    let mut out = Vec::with_capacity(w * h);
    for (y, &(y0, y1, wy)) in yw.iter().enumerate() {
        for (x, &(x0, x1, wx)) in xw.iter().enumerate() {
            let v = img.get(x, y);
            let top = (1.0 - wx) * lut(x0, y0, v) + wx * lut(x1, y0, v);
            let bottom = (1.0 - wx) * lut(x0, y1, v) + wx * lut(x1, y1, v);
            let blended = (1.0 - wy) * top + wy * bottom;
            out.push(round_half_away(blended) as u8);
        }
    }
    Ok(ChannelU8::new(w, h, out)?)
}
