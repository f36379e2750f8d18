//! Baseline halftoning methods: ordered dithering, error diffusion and direct
//! binary search.

mod dbs;
mod diffusion;
mod ordered;
mod vac;

pub use dbs::{dbs, dbs_with_options, white_noise_halftone, DbsOptions, DbsReport, DbsState, Move};
pub use diffusion::{
    error_diffusion, error_diffusion_variable, DiffusionKernel, Tap, VariableKernelTable,
    PLACEHOLDER_TABLE,
};
pub use ordered::{ordered_dither, ThresholdMatrix};
pub use vac::generate_vac_mask;
