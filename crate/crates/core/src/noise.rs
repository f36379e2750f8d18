//! Deterministic Gaussian noise maps.
//!
//! The generator is counter based so any pixel can be regenerated from
//! `(seed, index)` alone:
//!
//! ```text
//! word(k)   = splitmix64_mix(seed + (k + 1) * 0x9E3779B97F4A7C15)      (wrapping)
//! unit(k)   = ((word(k) >> 11) + 0.5) * 2^-53                          in (0, 1)
//! r         = sqrt(-2 ln unit(2j)),  t = 2 pi unit(2j + 1)
//! z[2j]     = r cos t,  z[2j + 1] = r sin t                            (Box-Muller)
//! ```
//!
//! Pixels are numbered row-major; an odd trailing pixel uses the cosine
//! branch of its pair. Values are not re-standardized per map.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::image::{NoiseMap, Plane};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit counter-based word for `(seed, counter)`.
#[inline]
pub fn counter_word(seed: u64, counter: u64) -> u64 {
    mix64(seed.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

#[inline]
fn unit_open(word: u64) -> f64 {
    ((word >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard-normal pair number `pair` of the stream for `seed`.
#[inline]
pub fn normal_pair(seed: u64, pair: u64) -> (f64, f64) {
    let u1 = unit_open(counter_word(seed, 2 * pair));
    let u2 = unit_open(counter_word(seed, 2 * pair + 1));
    let r = (-2.0 * u1.ln()).sqrt();
    let t = 2.0 * PI * u2;
    (r * t.cos(), r * t.sin())
}

/// I.i.d. standard-normal map of the given size, a pure function of its inputs.
pub fn sample_noise(width: usize, height: usize, seed: u64) -> Result<NoiseMap> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidParam(format!(
            "noise map dimensions must be positive, got {width}x{height}"
        )));
    }
    let n = width * height;
    let mut data = Vec::with_capacity(n);
    let mut pair = 0u64;
    while data.len() < n {
        let (a, b) = normal_pair(seed, pair);
        data.push(a);
        if data.len() < n {
            data.push(b);
        }
        pair += 1;
    }
    Ok(NoiseMap::from_parts(Plane::new(width, height, data)?, seed))
}
