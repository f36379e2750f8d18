use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use halftone_core::halftone::generate_vac_mask;
use halftone_core::hvs::HvsFilter;
use halftone_core::io::save_gray;

use crate::manifest::{sidecar, Invocation, OutputRecord, Record};

pub const VAC_SIGMA: f64 = 1.5;
pub const VAC_RADIUS: usize = 4;

pub fn vac_filter() -> HvsFilter {
    HvsFilter::gaussian(VAC_SIGMA, VAC_RADIUS).expect("valid constants")
}

#[derive(Args, Debug)]
pub struct GenmaskArgs {
    /// Matrix side, a power of two >= 4.
    #[arg(long, default_value_t = 32)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Void-and-cluster filter width.
    #[arg(long, default_value_t = VAC_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = VAC_RADIUS)]
    pub radius: usize,
    /// Text mask (`threshold-matrix <side>` then rank rows).
    #[arg(long)]
    pub out: PathBuf,
    /// Optional grayscale preview of the thresholds.
    #[arg(long)]
    pub png: Option<PathBuf>,
}

pub fn run(a: GenmaskArgs, inv: Invocation) -> anyhow::Result<()> {
    let hvs = HvsFilter::gaussian(a.sigma, a.radius)?;
    let m = generate_vac_mask(a.size, a.seed, &hvs)?;
    std::fs::write(&a.out, m.to_text()).with_context(|| format!("writing {}", a.out.display()))?;
    let mut rec = Record::default()
        .seed("vac", a.seed)
        .set("size", a.size)
        .set("sigma", a.sigma)
        .set("radius", a.radius)
        .output(OutputRecord::new(&a.out, "mask"));
    if let Some(p) = &a.png {
        save_gray(&m.to_plane(), p)?;
        rec = rec.output(OutputRecord::new(p, "image"));
    }
    inv.write("genmask", rec, &sidecar(&a.out))
}
