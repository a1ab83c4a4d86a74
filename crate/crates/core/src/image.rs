//! Plane and RGB buffer types shared by every stage.
//!
//! Real planes use the nominal 0..=255 intensity scale. Conversions back to
//! 8 bits round half away from zero and then clamp.

use alloc::vec::Vec;

use crate::math::to_u8_sample;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ImageError {
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    ZeroDimension { width: usize, height: usize },
    #[error("buffer holds {actual} samples, expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("non-finite sample at index {index}")]
    NonFinite { index: usize },
    #[error("dimension mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    DimensionMismatch {
        left_w: usize,
        left_h: usize,
        right_w: usize,
        right_h: usize,
    },
}

fn check_dims(width: usize, height: usize, len: usize, per_pixel: usize) -> Result<(), ImageError> {
    if width == 0 || height == 0 {
        return Err(ImageError::ZeroDimension { width, height });
    }
    let expected = width * height * per_pixel;
    if len != expected {
        return Err(ImageError::LengthMismatch {
            expected,
            actual: len,
        });
    }
    Ok(())
}

macro_rules! plane_common {
    ($ty:ident, $sample:ty) => {
        impl $ty {
            pub fn new(width: usize, height: usize, data: Vec<$sample>) -> Result<Self, ImageError> {
                check_dims(width, height, data.len(), 1)?;
                Ok(Self { width, height, data })
            }

            pub fn from_fn(
                width: usize,
                height: usize,
                mut f: impl FnMut(usize, usize) -> $sample,
            ) -> Result<Self, ImageError> {
                let mut data = Vec::with_capacity(width * height);
                for y in 0..height {
                    for x in 0..width {
                        data.push(f(x, y));
                    }
                }
                Self::new(width, height, data)
            }

            pub fn filled(width: usize, height: usize, value: $sample) -> Result<Self, ImageError> {
                Self::new(width, height, alloc::vec![value; width * height])
            }

            #[inline]
            pub fn width(&self) -> usize {
                self.width
            }

            #[inline]
            pub fn height(&self) -> usize {
                self.height
            }

            #[inline]
            pub fn data(&self) -> &[$sample] {
                &self.data
            }

            pub fn into_data(self) -> Vec<$sample> {
                self.data
            }

            #[inline]
            pub fn get(&self, x: usize, y: usize) -> $sample {
                self.data[y * self.width + x]
            }

            pub fn len(&self) -> usize {
                self.data.len()
            }

            pub fn is_empty(&self) -> bool {
                self.data.is_empty()
            }

            pub fn same_dims(&self, other: &Self) -> Result<(), ImageError> {
                if self.width != other.width || self.height != other.height {
                    return Err(ImageError::DimensionMismatch {
                        left_w: self.width,
                        left_h: self.height,
                        right_w: other.width,
                        right_h: other.height,
                    });
                }
                Ok(())
            }
        }
    };
}

/// A row-major plane of real intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelF64 {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

/// A row-major plane of 8-bit intensities.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChannelU8 {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

plane_common!(ChannelF64, f64);
plane_common!(ChannelU8, u8);

impl ChannelF64 {
    /// Index of the first NaN or infinite sample, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.data.iter().position(|v| !v.is_finite())
    }

    pub fn ensure_finite(&self) -> Result<(), ImageError> {
        match self.first_non_finite() {
            Some(index) => Err(ImageError::NonFinite { index }),
            None => Ok(()),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ChannelF64 {
        ChannelF64 {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Interleaved 8-bit RGB.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RgbImage8 {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage8 {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        check_dims(width, height, data.len(), 3)?;
        Ok(Self { width, height, data })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Result<Self, ImageError> {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    /// Gray image with R = G = B.
    pub fn from_gray(gray: &ChannelU8) -> Self {
        let data = gray.data().iter().flat_map(|&v| [v, v, v]).collect();
        Self {
            width: gray.width(),
            height: gray.height(),
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    pub fn same_dims(&self, other: &Self) -> Result<(), ImageError> {
        if self.width != other.width || self.height != other.height {
            return Err(ImageError::DimensionMismatch {
                left_w: self.width,
                left_h: self.height,
                right_w: other.width,
                right_h: other.height,
            });
        }
        Ok(())
    }
}

pub fn to_real(c: &ChannelU8) -> ChannelF64 {
    ChannelF64 {
        width: c.width,
        height: c.height,
        data: c.data.iter().map(|&v| f64::from(v)).collect(),
    }
}

pub fn to_u8(c: &ChannelF64) -> ChannelU8 {
    ChannelU8 {
        width: c.width,
        height: c.height,
        data: c.data.iter().map(|&v| to_u8_sample(v)).collect(),
    }
}

/// 8-bit luma with Rec. 601 weights. All metrics on colour results are
/// computed on this plane.
pub fn luminance(img: &RgbImage8) -> ChannelU8 {
    let data = img
        .pixels()
        .map(|[r, g, b]| {
            to_u8_sample(0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b))
        })
        .collect();
    ChannelU8 {
        width: img.width,
        height: img.height,
        data,
    }
}
