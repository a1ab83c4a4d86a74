//! sRGB <-> CIELAB under the D65 white point.
//!
//! Intermediate math is unclamped; only [`lab_to_rgb`] clamps to the 8-bit
//! gamut.

use alloc::vec::Vec;

use crate::image::{ChannelF64, ChannelU8, ImageError, RgbImage8};
use crate::math::{clamp, to_u8_sample};

/// D65 reference white, Y normalised to 1.
pub const WHITE_D65: [f64; 3] = [0.95047, 1.0, 1.08883];

const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

const XYZ_TO_RGB: [[f64; 3]; 3] = [
    [3.2404542, -1.5371385, -0.4985314],
    [-0.9692660, 1.8760108, 0.0415560],
    [0.0556434, -0.2040259, 1.0572252],
];

const EPSILON: f64 = 216.0 / 24389.0; // (6/29)^3
const KAPPA: f64 = 24389.0 / 27.0; // (29/3)^3

/// CIELAB planes. `l` is L* in 0..=100, `a`/`b` nominally -128..=127.
#[derive(Debug, Clone, PartialEq)]
pub struct LabImage {
    pub l: ChannelF64,
    pub a: ChannelF64,
    pub b: ChannelF64,
}

impl LabImage {
    pub fn new(l: ChannelF64, a: ChannelF64, b: ChannelF64) -> Result<Self, ImageError> {
        l.same_dims(&a)?;
        l.same_dims(&b)?;
        Ok(Self { l, a, b })
    }

    pub fn width(&self) -> usize {
        self.l.width()
    }

    pub fn height(&self) -> usize {
        self.l.height()
    }
}

#[inline]
pub fn srgb_decode(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        libm::pow((v + 0.055) / 1.055, 2.4)
    }
}

#[inline]
pub fn srgb_encode(v: f64) -> f64 {
    if v <= 0.0031308 {
        12.92 * v
    } else {
        1.055 * libm::pow(v, 1.0 / 2.4) - 0.055
    }
}

#[inline]
fn lab_f(t: f64) -> f64 {
    if t > EPSILON {
        libm::cbrt(t)
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

#[inline]
fn lab_f_inv(f: f64) -> f64 {
    let f3 = f * f * f;
    if f3 > EPSILON {
        f3
    } else {
        (116.0 * f - 16.0) / KAPPA
    }
}

fn mul(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// One pixel, 8-bit sRGB to (L*, a*, b*).
pub fn rgb_pixel_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let lin = rgb.map(|c| srgb_decode(f64::from(c) / 255.0));
    let xyz = mul(&RGB_TO_XYZ, lin);
    let fx = lab_f(xyz[0] / WHITE_D65[0]);
    let fy = lab_f(xyz[1] / WHITE_D65[1]);
    let fz = lab_f(xyz[2] / WHITE_D65[2]);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// One pixel, (L*, a*, b*) to 8-bit sRGB with gamut clamping.
pub fn lab_pixel_to_rgb(lab: [f64; 3]) -> [u8; 3] {
    let fy = (lab[0] + 16.0) / 116.0;
    let fx = fy + lab[1] / 500.0;
    let fz = fy - lab[2] / 200.0;
    let xyz = [
        lab_f_inv(fx) * WHITE_D65[0],
        lab_f_inv(fy) * WHITE_D65[1],
        lab_f_inv(fz) * WHITE_D65[2],
    ];
    mul(&XYZ_TO_RGB, xyz).map(|c| to_u8_sample(255.0 * srgb_encode(clamp(c, 0.0, 1.0))))
}

pub fn rgb_to_lab(img: &RgbImage8) -> LabImage {
    let n = img.width() * img.height();
    let (mut l, mut a, mut b) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for px in img.pixels() {
        let [ll, aa, bb] = rgb_pixel_to_lab(px);
        l.push(ll);
        a.push(aa);
        b.push(bb);
    }
    let (w, h) = (img.width(), img.height());
    // dimensions come from a validated image
    LabImage {
        l: ChannelF64::new(w, h, l).expect("valid dims"),
        a: ChannelF64::new(w, h, a).expect("valid dims"),
        b: ChannelF64::new(w, h, b).expect("valid dims"),
    }
}

pub fn lab_to_rgb(img: &LabImage) -> RgbImage8 {
    let (l, a, b) = (img.l.data(), img.a.data(), img.b.data());
    let mut data = Vec::with_capacity(l.len() * 3);
    for i in 0..l.len() {
        data.extend_from_slice(&lab_pixel_to_rgb([l[i], a[i], b[i]]));
    }
    RgbImage8::new(img.width(), img.height(), data).expect("valid dims")
}

/// Quantizes L* (0..=100) onto 0..=255 for histogram processing.
pub fn l_to_u8(l: &ChannelF64) -> Result<ChannelU8, ImageError> {
    l.ensure_finite()?;
    let data = l.data().iter().map(|&v| to_u8_sample(v * 255.0 / 100.0)).collect();
    ChannelU8::new(l.width(), l.height(), data)
}

pub fn u8_to_l(c: &ChannelU8) -> ChannelF64 {
    let data = c.data().iter().map(|&v| f64::from(v) * 100.0 / 255.0).collect();
    ChannelF64::new(c.width(), c.height(), data).expect("valid dims")
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn single(rgb: [u8; 3]) -> RgbImage8 {
        RgbImage8::new(1, 1, rgb.to_vec()).unwrap()
    }

    #[test]
    fn white_and_black() {
        let w = rgb_to_lab(&single([255, 255, 255]));
        assert!((w.l.data()[0] - 100.0).abs() < 0.01);
        assert!(w.a.data()[0].abs() < 0.01);
        assert!(w.b.data()[0].abs() < 0.01);
        let k = rgb_to_lab(&single([0, 0, 0]));
        assert_eq!(k.l.data()[0], 0.0);
        assert_eq!(k.a.data()[0], 0.0);
        assert_eq!(k.b.data()[0], 0.0);
    }

    #[test]
    fn mid_gray_matches_reference_formula() {
        // independent evaluation: for a neutral gray, Y = decoded value and
        // L* = 116 * cbrt(Y) - 16 (the matrix's Y row sums to 1 + 1e-7)
        let v: f64 = 119.0 / 255.0;
        let y = ((v + 0.055) / 1.055).powf(2.4);
        let expected_l = 116.0 * y.cbrt() - 16.0;
        let g = rgb_to_lab(&single([119, 119, 119]));
        assert!((g.l.data()[0] - expected_l).abs() < 1e-5, "{} vs {}", g.l.data()[0], expected_l);
        assert!(g.a.data()[0].abs() < 0.01);
        assert!(g.b.data()[0].abs() < 0.01);
    }

    #[test]
    fn gray_axis_is_neutral() {
        for v in 0..=255u8 {
            let [_, a, b] = rgb_pixel_to_lab([v, v, v]);
            assert!(a.abs() < 0.01 && b.abs() < 0.01, "v={v} a={a} b={b}");
        }
    }

    #[test]
    fn round_trip_on_sampled_cube() {
        let levels: Vec<u8> = (0..16).map(|i| (i * 17) as u8).collect();
        for &r in &levels {
            for &g in &levels {
                for &b in &levels {
                    let back = lab_pixel_to_rgb(rgb_pixel_to_lab([r, g, b]));
                    for (x, y) in [r, g, b].iter().zip(back.iter()) {
                        assert!((i16::from(*x) - i16::from(*y)).abs() <= 1, "{r},{g},{b} -> {back:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn white_point_and_out_of_gamut() {
        assert_eq!(lab_pixel_to_rgb([100.0, 0.0, 0.0]), [255, 255, 255]);
        // clamped; u8 already guarantees the range, so check it saturates
        let px = lab_pixel_to_rgb([50.0, 120.0, -120.0]);
        assert!(px.contains(&255) || px.contains(&0));
    }

    #[test]
    fn l_quantization_endpoints() {
        let l = ChannelF64::new(3, 1, vec![100.0, 0.0, 50.0]).unwrap();
        assert_eq!(l_to_u8(&l).unwrap().data(), &[255, 0, 128]);
        let c = ChannelU8::new(2, 1, vec![255, 0]).unwrap();
        assert_eq!(u8_to_l(&c).data(), &[100.0, 0.0]);
        let bad = ChannelF64::new(1, 1, vec![f64::INFINITY]).unwrap();
        assert!(l_to_u8(&bad).is_err());
    }

    #[test]
    fn l_quantization_error_bound_and_monotone() {
        let grid: Vec<f64> = (0..=400).map(|i| i as f64 * 0.25).collect();
        let l = ChannelF64::new(grid.len(), 1, grid.clone()).unwrap();
        let q = l_to_u8(&l).unwrap();
        let back = u8_to_l(&q);
        let bound = 0.5 * 100.0 / 255.0 + 1e-12;
        for (orig, rec) in grid.iter().zip(back.data()) {
            assert!((orig - rec).abs() <= bound);
        }
        assert!(q.data().windows(2).all(|w| w[0] <= w[1]));
    }
}
