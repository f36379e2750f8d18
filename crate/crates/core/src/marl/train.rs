use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{counterfactual_rewards, marl_gradient, sample_halftone};
use crate::error::{Error, Result};
use crate::fixtures::{corpus, random_crop};
use crate::hvs::HvsFilter;
use crate::image::{constant_image, threshold, BinaryImage, GrayImage, NoiseMap};
use crate::metrics::{ErrorMetricConfig, DEFAULT_OMEGA_S};
use crate::noise::{counter_word, sample_noise};
use crate::policy::{backward_into, cosine_lr, forward, forward_trace, Adam, Architecture, Checkpoint, PolicyParams};
use crate::spectral::anisotropy_loss;

pub const DEFAULT_OMEGA_A: f64 = 0.002;

// Independent sub-streams derived from the run seed.
const STREAM_BATCH: u64 = 0x6261_7463_6800_0001;
const STREAM_NOISE: u64 = 0x6e6f_6973_6500_0002;
const STREAM_SAMPLE: u64 = 0x7361_6d70_6c00_0003;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub omega_s: f64,
    pub omega_a: f64,
    pub batch: usize,
    pub crop: usize,
    pub iterations: u64,
    pub lr_max: f64,
    pub lr_min: f64,
    pub seed: u64,
    pub brightness_jitter: f64,
    pub hvs: HvsFilter,
    pub arch: Architecture,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            omega_s: DEFAULT_OMEGA_S,
            omega_a: DEFAULT_OMEGA_A,
            batch: 4,
            crop: 32,
            iterations: 200,
            lr_max: 3e-4,
            lr_min: 1e-5,
            seed: 0,
            brightness_jitter: 0.9,
            hvs: HvsFilter::gaussian(2.0, 6).expect("default filter"),
            arch: Architecture::desk(),
        }
    }
}

impl TrainConfig {
    pub fn metric(&self) -> ErrorMetricConfig {
        ErrorMetricConfig {
            omega_s: self.omega_s,
            ..ErrorMetricConfig::with_hvs(self.hvs.clone())
        }
    }

    /// Radius of the neighborhood a single flip can affect through either
    /// reward term.
    pub fn local_window(&self) -> usize {
        let m = self.metric();
        self.hvs.radius() + if self.omega_s > 0.0 { m.ssim_window / 2 } else { 0 }
    }

    pub fn validate(&self) -> Result<()> {
        self.metric().validate()?;
        if !(self.omega_a >= 0.0) {
            return Err(Error::InvalidParam("omega_a must be >= 0".into()));
        }
        if self.batch == 0 {
            return Err(Error::InvalidParam("batch must be >= 1".into()));
        }
        if self.crop < 2 * self.local_window() + 1 {
            return Err(Error::InvalidParam(format!(
                "crop {} is smaller than 2 * local window + 1 = {}",
                self.crop,
                2 * self.local_window() + 1
            )));
        }
        if !(self.lr_max >= 0.0 && self.lr_min >= 0.0) {
            return Err(Error::InvalidParam("learning rates must be >= 0".into()));
        }
        if !(self.brightness_jitter >= 0.0) {
            return Err(Error::InvalidParam("brightness jitter must be >= 0".into()));
        }
        Ok(())
    }
}

/// Multiplies by a factor uniform in `[max(0, 1 - jitter), 1 + jitter]`
/// and clamps to `[0, 1]`.
pub fn augment_brightness(c: &GrayImage, jitter: f64, rng: &mut impl Rng) -> GrayImage {
    if jitter == 0.0 {
        return c.clone();
    }
    let lo = (1.0 - jitter).max(0.0);
    let f = rng.random_range(lo..=1.0 + jitter);
    scale_brightness(c, f)
}

pub(crate) fn scale_brightness(c: &GrayImage, factor: f64) -> GrayImage {
    let mut p = c.as_plane().clone();
    p.data_mut().iter_mut().for_each(|v| *v *= factor);
    GrayImage::from_plane_clamped(p)
}

/// Inputs of one training step.
#[derive(Debug, Clone)]
pub struct Batch {
    pub natural: Vec<(GrayImage, NoiseMap)>,
    pub gray: Vec<(GrayImage, NoiseMap)>,
    /// Sampling seed per natural element.
    pub sample_seeds: Vec<u64>,
}

/// Deterministic batch for `step`: jittered crops of `images` plus the
/// same number of constant-gray images with `g ~ U(0, 1)`, each with its
/// own noise map.
pub fn make_batch(images: &[GrayImage], cfg: &TrainConfig, step: u64) -> Result<Batch> {
    if images.is_empty() {
        return Err(Error::InvalidParam("empty training corpus".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(counter_word(cfg.seed ^ STREAM_BATCH, step));
    let base = step * 2 * cfg.batch as u64;
    let noise = |k: u64| sample_noise(cfg.crop, cfg.crop, counter_word(cfg.seed ^ STREAM_NOISE, base + k));
    let mut natural = Vec::with_capacity(cfg.batch);
    let mut sample_seeds = Vec::with_capacity(cfg.batch);
    for i in 0..cfg.batch {
        let img = &images[rng.random_range(0..images.len())];
        let crop = random_crop(img, cfg.crop, &mut rng)?;
        natural.push((augment_brightness(&crop, cfg.brightness_jitter, &mut rng), noise(i as u64)?));
        sample_seeds.push(counter_word(cfg.seed ^ STREAM_SAMPLE, base + i as u64));
    }
    let mut gray = Vec::with_capacity(cfg.batch);
    for i in 0..cfg.batch {
        let g: f64 = rng.random();
        gray.push((constant_image(cfg.crop, cfg.crop, g)?, noise((cfg.batch + i) as u64)?));
    }
    Ok(Batch {
        natural,
        gray,
        sample_seeds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub step: u64,
    pub lr: f64,
    /// Mean `R(h')` over the natural batch.
    pub mean_reward: f64,
    /// `-mean_reward`, the sampled estimate of the MARL loss per image.
    pub l_marl: f64,
    /// Mean anisotropy loss over the constant-gray batch.
    pub l_as: f64,
}

/// One update of `L_total = L_MARL + omega_a L_AS`, both averaged over
/// their batches. `step` counts completed steps and selects the learning
/// rate on the cosine schedule.
pub fn train_step(
    params: &mut PolicyParams,
    adam: &mut Adam,
    batch: &Batch,
    cfg: &TrainConfig,
    step: u64,
) -> Result<StepReport> {
    let metric = cfg.metric();
    let mut grads = vec![0.0; params.len()];
    let inv_nat = 1.0 / batch.natural.len().max(1) as f64;
    let mut reward_sum = 0.0;
    for ((c, z), &seed) in batch.natural.iter().zip(&batch.sample_seeds) {
        let trace = forward_trace(params, c, z)?;
        let p = trace.probabilities();
        let h = sample_halftone(&p, seed);
        let table = counterfactual_rewards(&h, c, &metric)?;
        reward_sum += table.sampled_reward();
        let mut g = marl_gradient(&p, &table)?;
        g.data_mut().iter_mut().for_each(|v| *v *= inv_nat);
        backward_into(params, &trace, &g, &mut grads)?;
    }

    let inv_gray = 1.0 / batch.gray.len().max(1) as f64;
    let mut l_as = 0.0;
    for (c, z) in &batch.gray {
        let trace = forward_trace(params, c, z)?;
        let (value, mut g) = anisotropy_loss(&trace.probabilities().to_plane());
        l_as += value * inv_gray;
        if cfg.omega_a > 0.0 {
            let s = cfg.omega_a * inv_gray;
            g.data_mut().iter_mut().for_each(|v| *v *= s);
            backward_into(params, &trace, &g, &mut grads)?;
        }
    }

    let lr = cosine_lr(step.min(cfg.iterations), cfg.iterations, cfg.lr_max, cfg.lr_min)?;
    adam.step(params.data_mut(), &grads, lr)?;
    let mean_reward = reward_sum * inv_nat;
    Ok(StepReport {
        step,
        lr,
        mean_reward,
        l_marl: -mean_reward,
        l_as,
    })
}

/// Training loop state: parameters, optimizer and the image corpus.
#[derive(Debug, Clone)]
pub struct Trainer {
    cfg: TrainConfig,
    images: Vec<GrayImage>,
    params: PolicyParams,
    adam: Adam,
    step: u64,
}

impl Trainer {
    /// Fresh parameters seeded from `cfg.seed`, trained on the built-in corpus.
    pub fn new(cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let params = PolicyParams::init(cfg.arch, cfg.seed)?;
        Ok(Self {
            adam: Adam::new(params.len()),
            images: corpus(),
            params,
            cfg,
            step: 0,
        })
    }

    pub fn resume(cfg: TrainConfig, ck: Checkpoint) -> Result<Self> {
        cfg.validate()?;
        if ck.params.architecture() != cfg.arch {
            return Err(Error::InvalidParam(format!(
                "checkpoint architecture {:?} differs from config {:?}",
                ck.params.architecture(),
                cfg.arch
            )));
        }
        Ok(Self {
            adam: ck.adam.unwrap_or_else(|| Adam::new(ck.params.len())),
            images: corpus(),
            params: ck.params,
            cfg,
            step: ck.step,
        })
    }

    pub fn with_images(mut self, images: Vec<GrayImage>) -> Result<Self> {
        if images.iter().any(|i| i.width() < self.cfg.crop || i.height() < self.cfg.crop) {
            return Err(Error::InvalidParam("training image smaller than the crop".into()));
        }
        self.images = images;
        Ok(self)
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn params(&self) -> &PolicyParams {
        &self.params
    }

    pub fn steps_done(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self) -> Result<StepReport> {
        let batch = make_batch(&self.images, &self.cfg, self.step)?;
        let report = train_step(&mut self.params, &mut self.adam, &batch, &self.cfg, self.step)?;
        self.step += 1;
        Ok(report)
    }

    /// Runs until `cfg.iterations` steps are done.
    pub fn run(&mut self, mut on_step: impl FnMut(&StepReport)) -> Result<()> {
        while self.step < self.cfg.iterations {
            let r = self.step()?;
            on_step(&r);
        }
        Ok(())
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            params: self.params.clone(),
            step: self.step,
            adam: Some(self.adam.clone()),
        }
    }
}

/// Argmax halftone: `h_a = 1` iff `p_a >= 0.5`, with the noise map drawn
/// from `seed`.
pub fn infer_halftone(params: &PolicyParams, c: &GrayImage, seed: u64) -> Result<BinaryImage> {
    let z = sample_noise(c.width(), c.height(), seed)?;
    let p = forward(params, c, &z)?;
    Ok(threshold(&p.to_plane(), 0.5))
}
