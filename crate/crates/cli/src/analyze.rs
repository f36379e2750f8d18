use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use halftone_core::image::gray_ramp;
use halftone_core::io::{load_binary, load_gray, save_gray};
use halftone_core::metrics::{error_metric, hvs_psnr, ssim};
use halftone_core::plot::LinePlot;
use halftone_core::spectral::bluenoise_report;
use halftone_core::{BinaryImage, Error, GrayImage};

use crate::manifest::{sidecar, Invocation, OutputRecord, Record};
use crate::train::load_config;
use crate::{input_label, usage};

pub const METRICS_HEADER: &str = "halftone,reference,width,height,on_fraction,mean_tone,hvs_psnr,ssim,error_metric";

const PLOT_W: usize = 640;
const PLOT_H: usize = 400;
const CURVE: [u8; 3] = [30, 90, 200];
const MARKER: [u8; 3] = [200, 40, 40];

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Halftone to analyze (PBM or two-level PNG).
    pub halftone: Option<PathBuf>,
    /// Continuous-tone original; enables metrics.csv.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Write rapsd.csv, anisotropy.csv, bluenoise.csv and plots.
    #[arg(long)]
    pub spectrum: bool,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Config file; HVS and SSIM weight for the metrics.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write a W x H gray ramp (column x at x / (W - 1)) to --out instead.
    #[arg(long, num_args = 2, value_names = ["W", "H"])]
    pub ramp: Option<Vec<usize>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `inf` for a perfect match, `nan` when the image is below the SSIM window.
fn fmt_metric(r: halftone_core::Result<f64>) -> anyhow::Result<String> {
    match r {
        Ok(v) => Ok(v.to_string()),
        Err(Error::ImageTooSmall { .. }) => Ok("nan".into()),
        Err(e) => Err(e.into()),
    }
}

fn metrics_row(name: &str, ref_name: &str, h: &BinaryImage, c: &GrayImage, cfg: &halftone_core::config::Config) -> anyhow::Result<String> {
    let metric = cfg.metric()?;
    let psnr = hvs_psnr(h, c, &metric.hvs)?;
    Ok(format!(
        "{},{},{},{},{},{},{},{},{}",
        name,
        ref_name,
        h.width(),
        h.height(),
        h.on_fraction(),
        c.mean(),
        psnr,
        fmt_metric(ssim(&h.to_plane(), c, &metric))?,
        fmt_metric(error_metric(h, c, &metric))?,
    ))
}

fn write(dir: &Path, name: &str, text: &str, rec: Record) -> anyhow::Result<Record> {
    let p = dir.join(name);
    std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
    Ok(rec.output(OutputRecord::new(&p, "csv")))
}

pub fn run(a: AnalyzeArgs, inv: Invocation) -> anyhow::Result<()> {
    if let Some(wh) = &a.ramp {
        let out = a.out.as_ref().ok_or_else(|| usage("--ramp needs --out FILE"))?;
        let img = gray_ramp(wh[0], wh[1])?;
        save_gray(&img, out)?;
        let rec = Record::default()
            .set("ramp", format!("{}x{}", wh[0], wh[1]))
            .output(OutputRecord::new(out, "image"));
        return inv.write("analyze", rec, &sidecar(out));
    }
    let hpath = a.halftone.as_ref().ok_or_else(|| usage("analyze needs a halftone (or --ramp W H)"))?;
    let dir = a.out_dir.as_ref().ok_or_else(|| usage("analyze needs --out-dir DIR"))?;
    if a.reference.is_none() && !a.spectrum {
        return Err(usage("nothing to do: pass --reference and/or --spectrum"));
    }
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let h = load_binary(hpath).with_context(|| format!("loading {}", hpath.display()))?;
    let cfg = load_config(a.config.as_ref(), &[])?;
    let mut rec = Record {
        config: Some(cfg.to_text()),
        ..Record::default()
    }
    .set("halftone", hpath.display());

    if let Some(rpath) = &a.reference {
        let c = load_gray(rpath).with_context(|| format!("loading {}", rpath.display()))?;
        let row = metrics_row(&input_label(hpath), &input_label(rpath), &h, &c, &cfg)?;
        rec = write(dir, "metrics.csv", &format!("{METRICS_HEADER}\n{row}\n"), rec)?;
        rec = rec.set("reference", rpath.display());
    }
    if a.spectrum {
        let rep = bluenoise_report(&h);
        rec = write(dir, "rapsd.csv", &rep.profile.to_csv(), rec)?;
        rec = write(dir, "anisotropy.csv", &rep.anisotropy.to_csv(), rec)?;
        rec = write(dir, "bluenoise.csv", &rep.to_csv(), rec)?;
        let freqs = &rep.profile.frequencies;
        let mut rapsd_plot = LinePlot::new(PLOT_W, PLOT_H)
            .with_series(CURVE, freqs.iter().copied().zip(rep.profile.values.iter().copied()).collect());
        let db: Vec<(f64, f64)> = freqs
            .iter()
            .zip(&rep.anisotropy.values_db)
            .map(|(&f, v)| (f, v.unwrap_or(f64::NAN)))
            .collect();
        let mut aniso_plot = LinePlot::new(PLOT_W, PLOT_H).with_series(CURVE, db);
        if let Some(fb) = rep.principal_frequency {
            rapsd_plot = rapsd_plot.with_marker(fb, MARKER);
            aniso_plot = aniso_plot.with_marker(fb, MARKER);
            rec = rec.set("principal_frequency", fb);
        }
        for (name, plot) in [("rapsd.png", rapsd_plot), ("anisotropy.png", aniso_plot)] {
            let p = dir.join(name);
            plot.save(&p)?;
            rec = rec.output(OutputRecord::new(&p, "image"));
        }
        if let Some(r) = rep.low_frequency_ratio {
            rec = rec.set("low_frequency_ratio", r);
        }
    }
    inv.write("analyze", rec, &dir.join("manifest.json"))
}
