//! Halftoning engine: a learned multi-agent policy halftoner, the classic
//! baselines it is compared against, and blue-noise quality analysis.
//!
//! Pixel intensities are reals in `[0, 1]` everywhere inside the crate;
//! 8-bit quantization happens only in [`io`].

pub mod config;
pub mod error;
pub mod fixtures;
pub mod halftone;
pub mod hvs;
pub mod image;
pub mod io;
pub mod marl;
pub mod metrics;
pub mod noise;
pub mod plot;
pub mod policy;
pub mod spectral;

pub use error::{Error, Result};
pub use image::{BinaryImage, GrayImage, NoiseMap, Plane};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
