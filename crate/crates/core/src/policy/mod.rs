//! The shared convolutional policy: parameters, forward and reverse passes,
//! the Adam optimizer and checkpoints.

mod adam;
mod checkpoint;
mod network;

pub use adam::{cosine_lr, Adam, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use network::{backward, backward_into, forward, forward_trace, Trace};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::image::Plane;

/// Lower/upper clamp distance for probabilities.
pub const PROB_EPS: f64 = 1e-6;

/// Residual network shape: input projection `2 -> C` (3x3), `blocks`
/// residual blocks of two `C -> C` 3x3 convolutions, and a 1x1 head.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Architecture {
    pub blocks: usize,
    pub channels: usize,
}

impl Architecture {
    pub fn new(blocks: usize, channels: usize) -> Result<Self> {
        if blocks == 0 || channels == 0 {
            return Err(Error::InvalidParam(format!(
                "blocks and channels must be >= 1, got {blocks} and {channels}"
            )));
        }
        Ok(Self { blocks, channels })
    }

    pub fn desk() -> Self {
        Self { blocks: 4, channels: 16 }
    }

    pub fn full() -> Self {
        Self { blocks: 16, channels: 32 }
    }

    fn conv_len(cin: usize, cout: usize) -> usize {
        cout * cin * 9 + cout
    }

    pub fn num_params(&self) -> usize {
        let c = self.channels;
        Self::conv_len(2, c) + self.blocks * 2 * Self::conv_len(c, c) + c + 1
    }

    /// Offset of the weights of layer `l`, where layer 0 is the input
    /// projection, layers `1 + 2k` and `2 + 2k` the convolutions of block
    /// `k`, and layer `1 + 2B` the head. Biases follow the weights.
    pub(crate) fn layer_offset(&self, l: usize) -> usize {
        let c = self.channels;
        if l == 0 {
            0
        } else {
            Self::conv_len(2, c) + (l - 1) * Self::conv_len(c, c)
        }
    }

    pub(crate) fn head_offset(&self) -> usize {
        self.layer_offset(1 + 2 * self.blocks)
    }

    /// Pixels on each side whose values can influence an output pixel.
    pub fn receptive_radius(&self) -> usize {
        1 + 2 * self.blocks
    }
}

/// All trainable weights, stored as one flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    arch: Architecture,
    data: Vec<f64>,
}

impl PolicyParams {
    pub fn zeros(arch: Architecture) -> Self {
        Self {
            data: vec![0.0; arch.num_params()],
            arch,
        }
    }

    /// He-normal convolutions (`std = sqrt(2 / fan_in)`), a head with
    /// `std = 1 / sqrt(C)`, zero biases.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        let arch = Architecture::new(arch.blocks, arch.channels)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(arch);
        let c = arch.channels;
        let mut fill = |data: &mut [f64], std: f64| {
            let n = Normal::new(0.0, std).expect("positive std");
            for w in data {
                *w = n.sample(&mut rng);
            }
        };
        let o = arch.layer_offset(0);
        fill(&mut p.data[o..o + c * 2 * 9], (2.0 / 18.0f64).sqrt());
        for l in 1..=2 * arch.blocks {
            let o = arch.layer_offset(l);
            fill(&mut p.data[o..o + c * c * 9], (2.0 / (9 * c) as f64).sqrt());
        }
        let o = arch.head_offset();
        fill(&mut p.data[o..o + c], 1.0 / (c as f64).sqrt());
        Ok(p)
    }

    pub fn from_vec(arch: Architecture, data: Vec<f64>) -> Result<Self> {
        if data.len() != arch.num_params() {
            return Err(Error::ShapeMismatch {
                expected: arch.num_params(),
                actual: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("policy parameters"));
        }
        Ok(Self { arch, data })
    }

    pub fn architecture(&self) -> Architecture {
        self.arch
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Per-pixel probability of action 1, clamped to `[PROB_EPS, 1 - PROB_EPS]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ProbabilityMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        let plane = Plane::new(width, height, data)?;
        if plane.data().iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return Err(Error::InvalidParam("probabilities must lie in (0, 1)".into()));
        }
        Ok(Self {
            width,
            height,
            data: plane.into_data(),
        })
    }

    pub fn filled(width: usize, height: usize, p: f64) -> Result<Self> {
        Self::new(width, height, vec![p; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn to_plane(&self) -> Plane {
        Plane::new(self.width, self.height, self.data.clone()).expect("valid dims")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_count() {
        let a = Architecture::new(2, 4).unwrap();
        assert_eq!(a.num_params(), (4 * 2 * 9 + 4) + 4 * (4 * 4 * 9 + 4) + 4 + 1);
        assert_eq!(a.head_offset() + 5, a.num_params());
        assert!(Architecture::new(0, 4).is_err());
    }

    #[test]
    fn init_is_deterministic() {
        let a = Architecture::desk();
        assert_eq!(PolicyParams::init(a, 7).unwrap(), PolicyParams::init(a, 7).unwrap());
        assert_ne!(PolicyParams::init(a, 7).unwrap(), PolicyParams::init(a, 8).unwrap());
        let p = PolicyParams::init(a, 7).unwrap();
        assert_eq!(p.data()[p.architecture().num_params() - 1], 0.0);
    }

    #[test]
    fn from_vec_rejects_non_finite() {
        let a = Architecture::new(1, 1).unwrap();
        let mut v = vec![0.0; a.num_params()];
        v[3] = f64::NAN;
        assert!(matches!(PolicyParams::from_vec(a, v), Err(Error::NonFinite(_))));
        assert!(PolicyParams::from_vec(a, vec![0.0; 3]).is_err());
    }
}
