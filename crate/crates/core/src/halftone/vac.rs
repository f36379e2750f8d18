//! Void-and-cluster threshold matrix construction.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ordered::ThresholdMatrix;
use crate::error::{Error, Result};
use crate::hvs::HvsFilter;

/// Fraction of minority pixels in the initial random pattern.
const INITIAL_DENSITY: f64 = 0.1;

/// Binary pattern on a torus with its filtered "energy" kept up to date.
struct Torus<'a> {
    side: usize,
    filter: &'a HvsFilter,
    bits: Vec<bool>,
    energy: Vec<f64>,
}

impl<'a> Torus<'a> {
    fn new(side: usize, filter: &'a HvsFilter) -> Self {
        Self {
            side,
            filter,
            bits: vec![false; side * side],
            energy: vec![0.0; side * side],
        }
    }

    fn set(&mut self, idx: usize, on: bool) {
        if self.bits[idx] == on {
            return;
        }
        self.bits[idx] = on;
        let sign = if on { 1.0 } else { -1.0 };
        let s = self.side as isize;
        let r = self.filter.radius() as isize;
        let (qx, qy) = ((idx % self.side) as isize, (idx / self.side) as isize);
        for dy in -r..=r {
            let y = (qy + dy).rem_euclid(s) as usize;
            for dx in -r..=r {
                let x = (qx + dx).rem_euclid(s) as usize;
                self.energy[y * self.side + x] += sign * self.filter.weight(dx, dy);
            }
        }
    }

    /// Densest minority pixel: the one with the largest energy among set bits.
    fn tightest_cluster(&self) -> usize {
        let mut best = usize::MAX;
        let mut best_e = f64::NEG_INFINITY;
        for (i, (&b, &e)) in self.bits.iter().zip(&self.energy).enumerate() {
            if b && e > best_e {
                best_e = e;
                best = i;
            }
        }
        best
    }

    /// Emptiest majority pixel: the one with the smallest energy among clear bits.
    fn largest_void(&self) -> usize {
        let mut best = usize::MAX;
        let mut best_e = f64::INFINITY;
        for (i, (&b, &e)) in self.bits.iter().zip(&self.energy).enumerate() {
            if !b && e < best_e {
                best_e = e;
                best = i;
            }
        }
        best
    }
}

/// Builds a `side x side` blue-noise threshold matrix.
///
/// A random pattern of ~10% dots is relaxed by repeatedly moving the
/// tightest cluster into the largest void until the move would be a no-op.
/// Ranks are then assigned in three phases: removing clusters from the
/// prototype (ranks below its dot count), filling voids up to half
/// coverage, then filling the remaining pixels. In the last phase the
/// tightest cluster of zeros under a unit-sum toroidal kernel is exactly
/// the largest void of ones, so both fill phases share one search.
pub fn generate_vac_mask(side: usize, seed: u64, hvs: &HvsFilter) -> Result<ThresholdMatrix> {
    if side < 4 || !side.is_power_of_two() {
        return Err(Error::InvalidParam(format!(
            "void-and-cluster side must be a power of two >= 4, got {side}"
        )));
    }
    let n = side * side;
    let ones = ((n as f64 * INITIAL_DENSITY).round() as usize).clamp(1, n / 2);

    let mut proto = Torus::new(side, hvs);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    for &i in &order[..ones] {
        proto.set(i, true);
    }

    // Relaxation; the cap guards against cycles between tied energies.
    for _ in 0..4 * n {
        let cluster = proto.tightest_cluster();
        proto.set(cluster, false);
        let void = proto.largest_void();
        proto.set(void, true);
        if void == cluster {
            break;
        }
    }

    let mut ranks = vec![u32::MAX; n];

    let mut work = Torus {
        side,
        filter: hvs,
        bits: proto.bits.clone(),
        energy: proto.energy.clone(),
    };
    for rank in (0..ones).rev() {
        let cluster = work.tightest_cluster();
        work.set(cluster, false);
        ranks[cluster] = rank as u32;
    }

    let mut work = proto;
    for rank in ones..n {
        let void = work.largest_void();
        work.set(void, true);
        ranks[void] = rank as u32;
    }

    ThresholdMatrix::from_ranks(side, ranks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::halftone::ordered_dither;
    use crate::image::constant_image;

    fn vac_filter() -> HvsFilter {
        HvsFilter::gaussian(1.5, 4).unwrap()
    }

    #[test]
    fn is_permutation_and_deterministic() {
        let a = generate_vac_mask(16, 1, &vac_filter()).unwrap();
        let b = generate_vac_mask(16, 1, &vac_filter()).unwrap();
        assert_eq!(a, b);
        let c = generate_vac_mask(16, 2, &vac_filter()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_side() {
        assert!(generate_vac_mask(2, 0, &vac_filter()).is_err());
        assert!(generate_vac_mask(12, 0, &vac_filter()).is_err());
    }

    #[test]
    fn small_side_with_wide_kernel() {
        let m = generate_vac_mask(4, 9, &HvsFilter::gaussian(2.0, 6).unwrap()).unwrap();
        assert_eq!(m.ranks().len(), 16);
    }

    #[test]
    fn tone_within_one_level() {
        let m = generate_vac_mask(32, 5, &vac_filter()).unwrap();
        let tol = 1.0 / (32.0 * 32.0);
        for k in 1..10 {
            let g = k as f64 / 10.0;
            let h = ordered_dither(&constant_image(64, 64, g).unwrap(), &m);
            assert!((h.on_fraction() - g).abs() <= tol, "g={g}: {}", h.on_fraction());
        }
    }
}
