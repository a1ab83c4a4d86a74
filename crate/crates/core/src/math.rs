//! Float helpers that work without `std`.

/// Rounds half away from zero (`127.5 -> 128`, `-2.5 -> -3`).
#[inline]
pub fn round_half_away(x: f64) -> f64 {
    libm::round(x)
}

/// Rounds half away from zero then clamps to the 8-bit range.
/// NaN maps to 0.
#[inline]
pub fn to_u8_sample(x: f64) -> u8 {
    let r = round_half_away(x);
    if r >= 255.0 {
        255
    } else if r > 0.0 {
        r as u8
    } else {
        0
    }
}

#[inline]
pub fn clamp(x: f64, lo: f64, hi: f64) -> f64 {
    if x < lo {
        lo
    } else if x > hi {
        hi
    } else {
        x
    }
}

/// Population mean and variance of a sample set.
pub fn mean_var(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let mut n = 0usize;
    let mut sum = 0.0;
    for x in xs.clone() {
        sum += x;
        n += 1;
    }
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = sum / n as f64;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    (mean, var)
}
