//! Multi-agent policy-gradient training: every pixel is an agent choosing
//! `h_a` in `{0, 1}`, all agents share one policy network, and each agent's
//! gradient uses the counterfactual reward of both its actions while the
//! other agents keep their sampled actions.

mod train;

pub use train::{
    augment_brightness, infer_halftone, make_batch, train_step, Batch, StepReport, TrainConfig, Trainer, DEFAULT_OMEGA_A,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dims, Result};
use crate::image::{BinaryImage, GrayImage, Plane};
use crate::metrics::{reward, ErrorMetricConfig, SsimField};
use crate::policy::ProbabilityMap;

/// Independent Bernoulli draw per pixel.
pub fn sample_halftone(p: &ProbabilityMap, seed: u64) -> BinaryImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BinaryImage::from_fn(p.width(), p.height(), |x, y| rng.random::<f64>() < p.get(x, y))
}

/// Rewards of `{h_a = 0, h'_-a}` and `{h_a = 1, h'_-a}` for every pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterfactualTable {
    width: usize,
    height: usize,
    r0: Vec<f64>,
    r1: Vec<f64>,
    sampled: f64,
}

impl CounterfactualTable {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn r0(&self) -> &[f64] {
        &self.r0
    }

    pub fn r1(&self) -> &[f64] {
        &self.r1
    }

    pub fn get(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width + x;
        (self.r0[i], self.r1[i])
    }

    /// `R(h')` of the sampled halftone.
    pub fn sampled_reward(&self) -> f64 {
        self.sampled
    }
}

/// Counterfactual rewards from incremental updates: a flip at `a` changes
/// the filtered error by `d K_a` and only touches the SSIM windows that
/// cover `a`, so every entry is exact.
pub fn counterfactual_rewards(h: &BinaryImage, c: &GrayImage, cfg: &ErrorMetricConfig) -> Result<CounterfactualTable> {
    check_dims(h.width(), h.height(), c.width(), c.height())?;
    let (w, ht) = (h.width(), h.height());
    let n = (w * ht) as f64;
    let hp = h.to_plane();
    let base = reward(h, c, cfg)?;
    let gh = cfg.hvs.apply(&hp);
    let gc = cfg.hvs.apply(c);
    let err: Vec<f64> = gh.data().iter().zip(gc.data()).map(|(a, b)| a - b).collect();
    let field = if cfg.omega_s != 0.0 {
        Some(SsimField::new(&hp, c, cfg)?)
    } else {
        None
    };
    let mut r0 = vec![0.0; w * ht];
    let mut r1 = vec![0.0; w * ht];
    for y in 0..ht {
        for x in 0..w {
            let i = y * w + x;
            let old = h.data()[i] as f64;
            let new = 1.0 - old;
            let d = new - old;
            let k = cfg.hvs.impulse_response(w, ht, x, y);
            let dmse = (2.0 * d * k.dot_image(&err, w) + k.energy()) / n;
            let dssim = match &field {
                Some(f) => f.sum_delta_for_change(x, y, old, new, c.data()[i]) / f.moments.len() as f64,
                None => 0.0,
            };
            let flipped = base - (dmse - cfg.omega_s * dssim);
            if h.data()[i] == 1 {
                r1[i] = base;
                r0[i] = flipped;
            } else {
                r0[i] = base;
                r1[i] = flipped;
            }
        }
    }
    Ok(CounterfactualTable {
        width: w,
        height: ht,
        r0,
        r1,
        sampled: base,
    })
}

/// Counterfactual rewards by full recomputation of `R` for every flip.
pub fn counterfactual_rewards_reference(
    h: &BinaryImage,
    c: &GrayImage,
    cfg: &ErrorMetricConfig,
) -> Result<CounterfactualTable> {
    check_dims(h.width(), h.height(), c.width(), c.height())?;
    let base = reward(h, c, cfg)?;
    let mut r0 = vec![0.0; h.len()];
    let mut r1 = vec![0.0; h.len()];
    let mut work = h.clone();
    for i in 0..h.len() {
        work.flip(i);
        let flipped = reward(&work, c, cfg)?;
        work.flip(i);
        if h.data()[i] == 1 {
            (r0[i], r1[i]) = (flipped, base);
        } else {
            (r0[i], r1[i]) = (base, flipped);
        }
    }
    Ok(CounterfactualTable {
        width: h.width(),
        height: h.height(),
        r0,
        r1,
        sampled: base,
    })
}

/// Gradient of `-sum_a sum_{h_a} pi_a(h_a) R_a(h_a)` with respect to each
/// `p_a = pi_a(1)`, i.e. `-(R1_a - R0_a)`.
pub fn marl_gradient(p: &ProbabilityMap, table: &CounterfactualTable) -> Result<Plane> {
    check_dims(p.width(), p.height(), table.width, table.height)?;
    let data = table.r1.iter().zip(&table.r0).map(|(r1, r0)| -(r1 - r0)).collect();
    Plane::new(p.width(), p.height(), data)
}
