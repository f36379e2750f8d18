use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::Context;
use clap::Args;
use halftone_core::fixtures::{corpus_names, fixture, CORPUS_LEN, CORPUS_SIDE};
use halftone_core::halftone::{dbs, generate_vac_mask, ordered_dither, white_noise_halftone, ThresholdMatrix};
use halftone_core::io::load_gray;
use halftone_core::marl::infer_halftone;
use halftone_core::metrics::{hvs_psnr, ssim};
use halftone_core::policy::Checkpoint;
use halftone_core::{BinaryImage, GrayImage};

use crate::genmask::vac_filter;
use crate::halftone::{diffusion_kernel, Method};
use crate::manifest::{sidecar, Invocation, OutputRecord, Record};
use crate::train::load_config;
use crate::{input_label, usage};

pub const BENCH_HEADER: &str = "method,image,width,height,median_ms,hvs_psnr,ssim";

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Comma-separated subset of bayer, vac, ed, dbs, marl.
    #[arg(long, default_value = "bayer,vac,ed,dbs")]
    pub methods: String,
    /// Side of the generated fixtures.
    #[arg(long, default_value_t = CORPUS_SIDE)]
    pub size: usize,
    /// Number of corpus fixtures to use.
    #[arg(long, default_value_t = CORPUS_LEN)]
    pub count: usize,
    /// Use these images instead of the fixtures.
    #[arg(long = "image")]
    pub images: Vec<PathBuf>,
    /// Timed runs per (method, image); the median is reported.
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, default_value_t = 20)]
    pub sweeps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn run(a: BenchArgs, inv: Invocation) -> anyhow::Result<()> {
    if a.repeats == 0 {
        return Err(usage("--repeats must be at least 1"));
    }
    let methods = a
        .methods
        .split(',')
        .map(|m| Method::parse(m.trim()).map(|k| (m.trim().to_string(), k)))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = load_config(a.config.as_ref(), &[])?;
    let metric = cfg.metric()?;

    let inputs: Vec<(String, GrayImage)> = if a.images.is_empty() {
        if a.count == 0 || a.count > CORPUS_LEN {
            return Err(usage(format!("--count must be in 1..={CORPUS_LEN}")));
        }
        (0..a.count)
            .map(|i| Ok((corpus_names()[i].to_string(), fixture(i, a.size, a.size)?)))
            .collect::<halftone_core::Result<_>>()?
    } else {
        a.images
            .iter()
            .map(|p| Ok((input_label(p), load_gray(p).with_context(|| format!("loading {}", p.display()))?)))
            .collect::<anyhow::Result<_>>()?
    };

    // Masks and checkpoints are prepared once, outside the timed region.
    let bayer = ThresholdMatrix::bayer(8)?;
    let vac = if methods.iter().any(|(_, m)| *m == Method::Vac) {
        Some(generate_vac_mask(32, a.seed, &vac_filter())?)
    } else {
        None
    };
    let kernel = diffusion_kernel("fs", false)?;
    let hvs = cfg.hvs()?;
    let params = match (&a.ckpt, methods.iter().any(|(_, m)| *m == Method::Marl)) {
        (Some(p), true) => Some(Checkpoint::load(p)?.params),
        (None, true) => return Err(usage("method marl needs --ckpt FILE")),
        _ => None,
    };

    let mut csv = format!("{BENCH_HEADER}\n");
    for (name, method) in &methods {
        if matches!(method, Method::Ordered) {
            return Err(usage("bench uses bayer or vac instead of ordered"));
        }
        for (label, c) in &inputs {
            let once = || -> anyhow::Result<BinaryImage> {
                Ok(match method {
                    Method::Bayer => ordered_dither(c, &bayer),
                    Method::Vac => ordered_dither(c, vac.as_ref().expect("built above")),
                    Method::Ed => kernel.apply(c),
                    Method::Dbs => dbs(c, &white_noise_halftone(c, a.seed), &hvs, a.sweeps)?,
                    Method::Marl => infer_halftone(params.as_ref().expect("loaded above"), c, a.seed)?,
                    Method::Ordered => unreachable!(),
                })
            };
            let mut times = Vec::with_capacity(a.repeats);
            let mut h = None;
            for _ in 0..a.repeats {
                let t = Instant::now();
                let out = once()?;
                times.push(t.elapsed().as_secs_f64() * 1e3);
                h = Some(out);
            }
            let h = h.expect("repeats >= 1");
            let psnr = hvs_psnr(&h, c, &hvs)?;
            let s = ssim(&h.to_plane(), c, &metric).map_or(f64::NAN, |v| v);
            let _ = writeln!(csv, "{name},{label},{},{},{},{psnr},{s}", c.width(), c.height(), median(times));
        }
    }
    std::fs::write(&a.out, csv).with_context(|| format!("writing {}", a.out.display()))?;
    let rec = Record {
        config: Some(cfg.to_text()),
        ..Record::default()
    }
    .seed("bench", a.seed)
    .set("methods", &a.methods)
    .set("repeats", a.repeats)
    .set("size", a.size)
    .output(OutputRecord::new(&a.out, "csv").volatile(&["median_ms"]));
    inv.write("bench", rec, &sidecar(&a.out))
}
