//! Direct binary search.
//!
//! The state keeps the filtered error image `e = G(h) - G(c)`. A change
//! `h += d_a` at pixel `a` changes it by `d_a K_a`, where `K_a` is the
//! filter's (boundary-aware) impulse response at `a`, so
//!
//! ```text
//! toggle:  dS = 2 d_a <e, K_a> + d_a^2 |K_a|^2
//! swap:    dS = 2 d_a <e, K_a> + 2 d_b <e, K_b> + |K_a|^2 + |K_b|^2 + 2 d_a d_b <K_a, K_b>
//! ```
//!
//! with `S = sum(e^2) = N * MSE(G(h), G(c))`. For interior pixels
//! `<K_a, K_b>` is the filter autocorrelation at `b - a`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hvs::{HvsFilter, LocalResponse};
use crate::image::{BinaryImage, GrayImage};
use crate::metrics::mse;

/// Smallest decrease of `S` that counts as an improvement.
const IMPROVEMENT_EPS: f64 = 1e-12;

const NEIGHBORS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Toggle(usize),
    Swap(usize, usize),
}

#[derive(Debug, Clone)]
pub struct DbsState {
    width: usize,
    height: usize,
    target: GrayImage,
    hvs: HvsFilter,
    halftone: BinaryImage,
    error: Vec<f64>,
    sq_sum: f64,
}

impl DbsState {
    pub fn new(c: &GrayImage, init: &BinaryImage, hvs: &HvsFilter) -> Result<Self> {
        if c.width() != init.width() || c.height() != init.height() {
            return Err(Error::DimensionMismatch {
                left_w: c.width(),
                left_h: c.height(),
                right_w: init.width(),
                right_h: init.height(),
            });
        }
        let gh = hvs.apply(&init.to_plane());
        let gc = hvs.apply(c);
        let error: Vec<f64> = gh.data().iter().zip(gc.data()).map(|(a, b)| a - b).collect();
        let sq_sum = error.iter().map(|v| v * v).sum();
        Ok(Self {
            width: c.width(),
            height: c.height(),
            target: c.clone(),
            hvs: hvs.clone(),
            halftone: init.clone(),
            error,
            sq_sum,
        })
    }

    pub fn halftone(&self) -> &BinaryImage {
        &self.halftone
    }

    pub fn into_halftone(self) -> BinaryImage {
        self.halftone
    }

    /// Tracked `MSE(G(h), G(c))`.
    pub fn mse(&self) -> f64 {
        self.sq_sum / self.error.len() as f64
    }

    /// `MSE(G(h), G(c))` recomputed from scratch.
    pub fn recompute_mse(&self) -> f64 {
        mse(&self.hvs.apply(&self.halftone.to_plane()), &self.hvs.apply(&self.target)).expect("dims")
    }

    fn response(&self, idx: usize) -> LocalResponse {
        self.hvs
            .impulse_response(self.width, self.height, idx % self.width, idx / self.width)
    }

    #[inline]
    fn step(&self, idx: usize) -> f64 {
        1.0 - 2.0 * self.halftone.data()[idx] as f64
    }

    /// MSE change if pixel `idx` were toggled.
    pub fn toggle_delta(&self, idx: usize) -> f64 {
        let k = self.response(idx);
        let d = self.step(idx);
        (2.0 * d * k.dot_image(&self.error, self.width) + k.energy()) / self.error.len() as f64
    }

    /// MSE change if pixels `a` and `b` swapped values. Zero when equal.
    pub fn swap_delta(&self, a: usize, b: usize) -> f64 {
        if self.halftone.data()[a] == self.halftone.data()[b] {
            return 0.0;
        }
        let (ka, kb) = (self.response(a), self.response(b));
        let s = swap_sum_delta(
            self.step(a),
            ka.dot_image(&self.error, self.width),
            ka.energy(),
            &ka,
            &kb,
            kb.dot_image(&self.error, self.width),
            kb.energy(),
        );
        s / self.error.len() as f64
    }

    pub fn delta(&self, mv: Move) -> f64 {
        match mv {
            Move::Toggle(a) => self.toggle_delta(a),
            Move::Swap(a, b) => self.swap_delta(a, b),
        }
    }

    /// Applies a move and updates the filtered error incrementally.
    pub fn apply(&mut self, mv: Move) {
        let flip = |state: &mut Self, idx: usize| {
            let k = state.response(idx);
            let d = state.step(idx);
            let ek = k.dot_image(&state.error, state.width);
            state.sq_sum += 2.0 * d * ek + k.energy();
            k.add_to_image(&mut state.error, state.width, d);
            state.halftone.flip(idx);
        };
        match mv {
            Move::Toggle(a) => flip(self, a),
            Move::Swap(a, b) => {
                if self.halftone.data()[a] != self.halftone.data()[b] {
                    flip(self, a);
                    flip(self, b);
                }
            }
        }
    }

    /// Best improving move at `idx` among its toggle and swaps with the
    /// 8 neighbors, as `(move, dS)`.
    fn best_move_at(&self, idx: usize) -> Option<(Move, f64)> {
        let ka = self.response(idx);
        let da = self.step(idx);
        let ea = ka.dot_image(&self.error, self.width);
        let ea2 = ka.energy();
        let mut best = (Move::Toggle(idx), 2.0 * da * ea + ea2);
        let (x, y) = ((idx % self.width) as isize, (idx / self.width) as isize);
        for (dx, dy) in NEIGHBORS {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 0 || nx >= self.width as isize || ny >= self.height as isize {
                continue;
            }
            let nb = ny as usize * self.width + nx as usize;
            if self.halftone.data()[nb] == self.halftone.data()[idx] {
                continue;
            }
            let kb = self.response(nb);
            let ds = swap_sum_delta(da, ea, ea2, &ka, &kb, kb.dot_image(&self.error, self.width), kb.energy());
            if ds < best.1 {
                best = (Move::Swap(idx, nb), ds);
            }
        }
        (best.1 < -IMPROVEMENT_EPS).then_some(best)
    }
}

fn swap_sum_delta(
    da: f64,
    ea: f64,
    ea2: f64,
    ka: &LocalResponse,
    kb: &LocalResponse,
    eb: f64,
    eb2: f64,
) -> f64 {
    let db = -da;
    2.0 * da * ea + 2.0 * db * eb + ea2 + eb2 + 2.0 * da * db * ka.dot(kb)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbsOptions {
    pub max_sweeps: usize,
    /// Record the MSE after every accepted move.
    pub trace: bool,
}

impl Default for DbsOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 20,
            trace: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DbsReport {
    pub halftone: BinaryImage,
    pub sweeps: usize,
    pub accepted_moves: usize,
    pub initial_mse: f64,
    pub final_mse: f64,
    pub trace: Vec<f64>,
}

/// Greedy DBS from `init`; stops after a sweep with no accepted move or
/// after `max_sweeps` sweeps.
pub fn dbs(c: &GrayImage, init: &BinaryImage, hvs: &HvsFilter, max_sweeps: usize) -> Result<BinaryImage> {
    Ok(dbs_with_options(
        c,
        init,
        hvs,
        DbsOptions {
            max_sweeps,
            trace: false,
        },
    )?
    .halftone)
}

pub fn dbs_with_options(c: &GrayImage, init: &BinaryImage, hvs: &HvsFilter, opts: DbsOptions) -> Result<DbsReport> {
    let mut state = DbsState::new(c, init, hvs)?;
    let initial_mse = state.recompute_mse();
    let mut accepted = 0;
    let mut sweeps = 0;
    let mut trace = Vec::new();
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let mut changed = 0;
        for idx in 0..state.error.len() {
            if let Some((mv, _)) = state.best_move_at(idx) {
                state.apply(mv);
                changed += 1;
                if opts.trace {
                    trace.push(state.mse());
                }
            }
        }
        accepted += changed;
        if changed == 0 {
            break;
        }
    }
    let final_mse = state.recompute_mse();
    Ok(DbsReport {
        halftone: state.into_halftone(),
        sweeps,
        accepted_moves: accepted,
        initial_mse,
        final_mse,
        trace,
    })
}

/// `h = 1` where `c` exceeds an i.i.d. uniform threshold.
pub fn white_noise_halftone(c: &GrayImage, seed: u64) -> BinaryImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BinaryImage::from_fn(c.width(), c.height(), |x, y| c.get(x, y) > rng.random::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Plane;

    fn fixture(w: usize, h: usize) -> GrayImage {
        GrayImage::from_plane(Plane::from_fn(w, h, |x, y| {
            0.5 + 0.4 * ((x as f64 * 0.3).sin() * (y as f64 * 0.2).cos())
        }))
        .unwrap()
    }

    #[test]
    fn incremental_deltas_match_recompute() {
        let c = fixture(32, 32);
        let hvs = HvsFilter::gaussian(2.0, 6).unwrap();
        let init = white_noise_halftone(&c, 1);
        let mut state = DbsState::new(&c, &init, &hvs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for i in 0..120 {
            let a = rng.random_range(0..1024);
            let mv = if i % 2 == 0 {
                Move::Toggle(a)
            } else {
                let (x, y) = (a % 32, a / 32);
                let nx = (x + 1).min(31);
                Move::Swap(a, y * 32 + nx)
            };
            let before = state.recompute_mse();
            let predicted = state.delta(mv);
            state.apply(mv);
            let after = state.recompute_mse();
            assert!((after - before - predicted).abs() < 1e-9);
            assert!((state.mse() - after).abs() < 1e-9);
        }
    }

    #[test]
    fn never_increases_error() {
        let c = fixture(24, 20);
        let hvs = HvsFilter::gaussian(1.5, 4).unwrap();
        let init = white_noise_halftone(&c, 4);
        let rep = dbs_with_options(&c, &init, &hvs, DbsOptions { max_sweeps: 10, trace: true }).unwrap();
        assert!(rep.accepted_moves > 0);
        let mut prev = rep.initial_mse;
        for &m in &rep.trace {
            assert!(m < prev + 1e-15);
            prev = m;
        }
        assert!(rep.final_mse < rep.initial_mse);
    }

    #[test]
    fn converged_output_is_fixed_point() {
        let c = fixture(20, 20);
        let hvs = HvsFilter::gaussian(1.5, 4).unwrap();
        let init = white_noise_halftone(&c, 5);
        let first = dbs_with_options(&c, &init, &hvs, DbsOptions { max_sweeps: 100, trace: false }).unwrap();
        assert!(first.sweeps < 100);
        let again = dbs_with_options(&c, &first.halftone, &hvs, DbsOptions { max_sweeps: 100, trace: false }).unwrap();
        assert_eq!(again.sweeps, 1);
        assert_eq!(again.accepted_moves, 0);
        assert_eq!(again.halftone, first.halftone);
    }

    #[test]
    fn dimension_mismatch() {
        let c = fixture(8, 8);
        let hvs = HvsFilter::gaussian(1.0, 2).unwrap();
        assert!(matches!(
            dbs(&c, &BinaryImage::zeros(8, 7), &hvs, 1),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
