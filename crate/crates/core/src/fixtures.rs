//! Procedural continuous-tone test images.
//!
//! Ten smooth synthetic scenes stand in for a natural-image corpus: ramps,
//! gratings, disks, blobs and mixtures with edges. They are deterministic
//! functions of position, so no image files need to ship with the crate.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::image::{GrayImage, Plane};

pub const CORPUS_LEN: usize = 10;
pub const CORPUS_SIDE: usize = 128;

pub fn corpus_names() -> [&'static str; CORPUS_LEN] {
    [
        "ramp",
        "radial",
        "rings",
        "grating",
        "disk",
        "waves",
        "blocks",
        "blobs",
        "zoneplate",
        "mixed",
    ]
}

fn smoothstep(e0: f64, e1: f64, x: f64) -> f64 {
    let t = ((x - e0) / (e1 - e0)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Pixel of fixture `index` at normalized coordinates `u, v` in `[0, 1]`.
fn shade(index: usize, u: f64, v: f64) -> f64 {
    let (du, dv) = (u - 0.5, v - 0.5);
    let r = (du * du + dv * dv).sqrt();
    match index {
        0 => 0.05 + 0.9 * u,
        1 => 0.95 - 1.2 * r,
        2 => 0.5 + 0.4 * (2.0 * PI * 6.0 * r).cos(),
        3 => 0.5 + 0.35 * (2.0 * PI * (3.0 * u + 1.5 * v)).sin() * (0.6 + 0.4 * v),
        4 => 0.2 + 0.6 * (1.0 - smoothstep(0.28, 0.3, r)) + 0.15 * u,
        5 => {
            0.5 + 0.15 * (2.0 * PI * (2.0 * u + 0.3)).sin()
                + 0.12 * (2.0 * PI * (3.0 * v + 0.1)).cos()
                + 0.1 * (2.0 * PI * (1.7 * u - 2.3 * v)).sin()
        }
        6 => {
            let bx = (u * 4.0).floor() as i32;
            let by = (v * 4.0).floor() as i32;
            0.15 + 0.7 * (((bx * 5 + by * 3) % 7) as f64 / 6.0)
        }
        7 => {
            let blob = |cx: f64, cy: f64, s: f64| (-((u - cx).powi(2) + (v - cy).powi(2)) / (2.0 * s * s)).exp();
            0.1 + 0.6 * blob(0.3, 0.35, 0.12) + 0.5 * blob(0.7, 0.6, 0.18) + 0.3 * blob(0.45, 0.8, 0.08)
        }
        8 => 0.5 + 0.45 * (PI * 40.0 * r * r).cos(),
        _ => {
            let edge = if u + 0.3 * v > 0.6 { 0.25 } else { 0.0 };
            0.3 + 0.4 * v + edge + 0.1 * (2.0 * PI * 5.0 * u).sin()
        }
    }
}

/// Fixture `index` rendered at `width x height`.
pub fn fixture(index: usize, width: usize, height: usize) -> Result<GrayImage> {
    if index >= CORPUS_LEN {
        return Err(Error::InvalidParam(format!("fixture index {index} >= {CORPUS_LEN}")));
    }
    if width == 0 || height == 0 {
        return Err(Error::InvalidParam("fixture dimensions must be positive".into()));
    }
    let sx = (width.max(2) - 1) as f64;
    let sy = (height.max(2) - 1) as f64;
    Ok(GrayImage::from_plane_clamped(Plane::from_fn(width, height, |x, y| {
        shade(index, x as f64 / sx, y as f64 / sy)
    })))
}

/// The full corpus at `CORPUS_SIDE x CORPUS_SIDE`.
pub fn corpus() -> Vec<GrayImage> {
    (0..CORPUS_LEN)
        .map(|i| fixture(i, CORPUS_SIDE, CORPUS_SIDE).expect("valid fixture"))
        .collect()
}

/// Uniformly placed `size x size` crop.
pub fn random_crop(img: &GrayImage, size: usize, rng: &mut impl Rng) -> Result<GrayImage> {
    if size > img.width() || size > img.height() {
        return Err(Error::InvalidParam(format!(
            "crop {size} larger than {}x{} image",
            img.width(),
            img.height()
        )));
    }
    let x0 = rng.random_range(0..=img.width() - size);
    let y0 = rng.random_range(0..=img.height() - size);
    img.crop(x0, y0, size, size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn corpus_is_valid_and_varied() {
        let c = corpus();
        assert_eq!(c.len(), CORPUS_LEN);
        for (i, a) in c.iter().enumerate() {
            assert!(a.data().iter().all(|v| (0.0..=1.0).contains(v)));
            let lo = a.data().iter().cloned().fold(1.0, f64::min);
            let hi = a.data().iter().cloned().fold(0.0, f64::max);
            assert!(hi - lo > 0.3, "fixture {i} is too flat");
            for b in &c[i + 1..] {
                assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn crops_fit() {
        let img = fixture(3, 40, 30).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            let c = random_crop(&img, 30, &mut rng).unwrap();
            assert_eq!((c.width(), c.height()), (30, 30));
        }
        assert!(random_crop(&img, 31, &mut rng).is_err());
    }
}
