use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use halftone_core::config::Config;
use halftone_core::halftone::{
    dbs, error_diffusion, error_diffusion_variable, generate_vac_mask, ordered_dither, white_noise_halftone,
    DiffusionKernel, ThresholdMatrix, VariableKernelTable,
};
use halftone_core::io::{load_gray, save_binary};
use halftone_core::marl::infer_halftone;
use halftone_core::policy::Checkpoint;
use halftone_core::{BinaryImage, GrayImage};

use crate::genmask::vac_filter;
use crate::manifest::{sidecar, Invocation, OutputRecord, Record};
use crate::{usage, UsageError};

#[derive(Args, Debug)]
pub struct HalftoneArgs {
    /// ordered | bayer | vac | ed | dbs | marl
    #[arg(long)]
    pub method: String,
    /// Threshold-matrix file for `ordered`.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Matrix side for `bayer` and `vac`.
    #[arg(long)]
    pub size: Option<usize>,
    /// fs | jarvis | table:FILE
    #[arg(long, default_value = "fs")]
    pub kernel: String,
    /// Left-to-right scan on every row instead of serpentine.
    #[arg(long)]
    pub raster: bool,
    /// Maximum DBS sweeps.
    #[arg(long, default_value_t = 20)]
    pub sweeps: usize,
    /// Seed for the DBS start, the VAC prototype, or the policy noise map.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Policy checkpoint for `marl`.
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    /// Config file; its HVS section drives `dbs`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    pub input: PathBuf,
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Method {
    Ordered,
    Bayer,
    Vac,
    Ed,
    Dbs,
    Marl,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self, UsageError> {
        Ok(match s {
            "ordered" => Method::Ordered,
            "bayer" => Method::Bayer,
            "vac" => Method::Vac,
            "ed" => Method::Ed,
            "dbs" => Method::Dbs,
            "marl" => Method::Marl,
            _ => return Err(UsageError::UnknownMethod(s.into())),
        })
    }
}

pub fn diffusion_kernel(name: &str, raster: bool) -> anyhow::Result<Kernel> {
    let serpentine = !raster;
    Ok(match name {
        "fs" => Kernel::Fixed(DiffusionKernel::floyd_steinberg(serpentine)),
        "jarvis" => Kernel::Fixed(DiffusionKernel::jarvis(serpentine)),
        _ => match name.strip_prefix("table:") {
            Some(path) => Kernel::Table(VariableKernelTable::load(path)?, serpentine),
            None => return Err(usage(format!("unknown kernel '{name}' (fs, jarvis, table:FILE)"))),
        },
    })
}

pub enum Kernel {
    Fixed(DiffusionKernel),
    Table(VariableKernelTable, bool),
}

impl Kernel {
    pub fn apply(&self, c: &GrayImage) -> BinaryImage {
        match self {
            Kernel::Fixed(k) => error_diffusion(c, k),
            Kernel::Table(t, serpentine) => error_diffusion_variable(c, t, *serpentine),
        }
    }
}

fn load_mask(path: &Path) -> anyhow::Result<ThresholdMatrix> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading mask {}", path.display()))?;
    Ok(ThresholdMatrix::from_text(&text)?)
}

pub fn run(a: HalftoneArgs, inv: Invocation) -> anyhow::Result<()> {
    let method = Method::parse(&a.method)?;
    let cfg = match &a.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let c = load_gray(&a.input).with_context(|| format!("loading {}", a.input.display()))?;
    let mut rec = Record::default().set("method", &a.method);
    let h = match method {
        Method::Ordered => {
            let path = a.mask.as_ref().ok_or_else(|| usage("--method ordered needs --mask FILE"))?;
            rec = rec.set("mask", path.display());
            ordered_dither(&c, &load_mask(path)?)
        }
        Method::Bayer => {
            let side = a.size.unwrap_or(8);
            rec = rec.set("size", side);
            ordered_dither(&c, &ThresholdMatrix::bayer(side)?)
        }
        Method::Vac => {
            let side = a.size.unwrap_or(32);
            rec = rec.set("size", side).seed("vac", a.seed);
            ordered_dither(&c, &generate_vac_mask(side, a.seed, &vac_filter())?)
        }
        Method::Ed => {
            rec = rec.set("kernel", &a.kernel).set("serpentine", !a.raster);
            diffusion_kernel(&a.kernel, a.raster)?.apply(&c)
        }
        Method::Dbs => {
            rec = rec.set("sweeps", a.sweeps).seed("init", a.seed);
            rec.config = Some(cfg.to_text());
            dbs(&c, &white_noise_halftone(&c, a.seed), &cfg.hvs()?, a.sweeps)?
        }
        Method::Marl => {
            let path = a.ckpt.as_ref().ok_or_else(|| usage("--method marl needs --ckpt FILE"))?;
            let ck = Checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
            rec = rec.set("ckpt", path.display()).seed("noise", a.seed);
            infer_halftone(&ck.params, &c, a.seed)?
        }
    };
    save_binary(&h, &a.output).with_context(|| format!("writing {}", a.output.display()))?;
    let rec = rec
        .set("input", a.input.display())
        .set("on_fraction", h.on_fraction())
        .output(OutputRecord::new(&a.output, "image"));
    inv.write("halftone", rec, &sidecar(&a.output))
}
