//! Quality metrics and the halftoning reward.
//!
//! `E(h, c) = MSE(G(h), G(c)) - omega_s * SSIM(h, c)` and `R = -E`.
//! SSIM is taken on the raw halftone and continuous-tone images; the HVS
//! filter only enters the MSE term.

use crate::error::{Error, Result};
use crate::hvs::HvsFilter;
use crate::image::{BinaryImage, GrayImage, Plane};

pub const DEFAULT_OMEGA_S: f64 = 0.006;
pub const DEFAULT_SSIM_WINDOW: usize = 11;
pub const DEFAULT_SSIM_SIGMA: f64 = 1.5;
pub const DEFAULT_SSIM_K1: f64 = 0.01;
pub const DEFAULT_SSIM_K2: f64 = 0.03;

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMetricConfig {
    pub omega_s: f64,
    pub hvs: HvsFilter,
    pub ssim_window: usize,
    pub ssim_sigma: f64,
    pub ssim_k1: f64,
    pub ssim_k2: f64,
}

impl Default for ErrorMetricConfig {
    fn default() -> Self {
        Self {
            omega_s: DEFAULT_OMEGA_S,
            hvs: HvsFilter::gaussian(
                crate::hvs::DEFAULT_GAUSSIAN_SIGMA,
                crate::hvs::DEFAULT_GAUSSIAN_RADIUS,
            )
            .expect("default hvs"),
            ssim_window: DEFAULT_SSIM_WINDOW,
            ssim_sigma: DEFAULT_SSIM_SIGMA,
            ssim_k1: DEFAULT_SSIM_K1,
            ssim_k2: DEFAULT_SSIM_K2,
        }
    }
}

impl ErrorMetricConfig {
    pub fn with_hvs(hvs: HvsFilter) -> Self {
        Self {
            hvs,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_s >= 0.0) {
            return Err(Error::InvalidParam(format!("omega_s must be >= 0, got {}", self.omega_s)));
        }
        if self.ssim_window < 3 || self.ssim_window % 2 == 0 {
            return Err(Error::InvalidParam(format!(
                "ssim window must be odd and >= 3, got {}",
                self.ssim_window
            )));
        }
        if !(self.ssim_sigma > 0.0) {
            return Err(Error::InvalidParam("ssim sigma must be > 0".into()));
        }
        Ok(())
    }

    /// Normalized Gaussian window weights, row-major.
    pub fn ssim_weights(&self) -> Vec<f64> {
        let n = self.ssim_window;
        let half = (n / 2) as f64;
        let g: Vec<f64> = (0..n)
            .map(|i| {
                let d = i as f64 - half;
                (-d * d / (2.0 * self.ssim_sigma * self.ssim_sigma)).exp()
            })
            .collect();
        let mut w: Vec<f64> = g.iter().flat_map(|a| g.iter().map(move |b| a * b)).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
        w
    }

    fn c1(&self) -> f64 {
        (self.ssim_k1 * 1.0).powi(2)
    }

    fn c2(&self) -> f64 {
        (self.ssim_k2 * 1.0).powi(2)
    }
}

pub fn mse(a: &Plane, b: &Plane) -> Result<f64> {
    a.same_dims(b)?;
    Ok(a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.len() as f64)
}

/// Weighted first and second moments of one SSIM window.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WindowMoments {
    pub mu_a: f64,
    pub mu_b: f64,
    pub e_aa: f64,
    pub e_bb: f64,
    pub e_ab: f64,
}

impl WindowMoments {
    pub fn ssim(&self, c1: f64, c2: f64) -> f64 {
        let var_a = self.e_aa - self.mu_a * self.mu_a;
        let var_b = self.e_bb - self.mu_b * self.mu_b;
        let cov = self.e_ab - self.mu_a * self.mu_b;
        ((2.0 * self.mu_a * self.mu_b + c1) * (2.0 * cov + c2))
            / ((self.mu_a * self.mu_a + self.mu_b * self.mu_b + c1) * (var_a + var_b + c2))
    }
}

/// Per-window moments over all windows that fit entirely inside the image.
#[derive(Debug, Clone)]
pub struct SsimField {
    pub windows_x: usize,
    pub windows_y: usize,
    pub window: usize,
    pub weights: Vec<f64>,
    pub moments: Vec<WindowMoments>,
    pub c1: f64,
    pub c2: f64,
}

impl SsimField {
    pub fn new(a: &Plane, b: &Plane, cfg: &ErrorMetricConfig) -> Result<Self> {
        a.same_dims(b)?;
        cfg.validate()?;
        let n = cfg.ssim_window;
        let (w, h) = (a.width(), a.height());
        if w < n || h < n {
            return Err(Error::ImageTooSmall {
                width: w,
                height: h,
                window: n,
            });
        }
        let weights = cfg.ssim_weights();
        let (wx, wy) = (w - n + 1, h - n + 1);
        let (ad, bd) = (a.data(), b.data());
        let mut moments = Vec::with_capacity(wx * wy);
        for oy in 0..wy {
            for ox in 0..wx {
                let mut m = WindowMoments::default();
                for j in 0..n {
                    let base = (oy + j) * w + ox;
                    for i in 0..n {
                        let wt = weights[j * n + i];
                        let (va, vb) = (ad[base + i], bd[base + i]);
                        m.mu_a += wt * va;
                        m.mu_b += wt * vb;
                        m.e_aa += wt * va * va;
                        m.e_bb += wt * vb * vb;
                        m.e_ab += wt * va * vb;
                    }
                }
                moments.push(m);
            }
        }
        Ok(Self {
            windows_x: wx,
            windows_y: wy,
            window: n,
            weights,
            moments,
            c1: cfg.c1(),
            c2: cfg.c2(),
        })
    }

    pub fn ssim_sum(&self) -> f64 {
        self.moments.iter().map(|m| m.ssim(self.c1, self.c2)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.ssim_sum() / self.moments.len() as f64
    }

    /// Change of the SSIM sum when pixel `(x, y)` of `a` moves from `old` to
    /// `new` (`b` value there is `bv`). Only windows covering the pixel change.
    pub fn sum_delta_for_change(&self, x: usize, y: usize, old: f64, new: f64, bv: f64) -> f64 {
        let n = self.window;
        let d = new - old;
        let dsq = new * new - old * old;
        let ox_lo = x.saturating_sub(n - 1);
        let oy_lo = y.saturating_sub(n - 1);
        let ox_hi = x.min(self.windows_x - 1);
        let oy_hi = y.min(self.windows_y - 1);
        let mut delta = 0.0;
        if ox_lo > ox_hi || oy_lo > oy_hi {
            return 0.0;
        }
        for oy in oy_lo..=oy_hi {
            for ox in ox_lo..=ox_hi {
                let wt = self.weights[(y - oy) * n + (x - ox)];
                let m = self.moments[oy * self.windows_x + ox];
                let mut m2 = m;
                m2.mu_a += wt * d;
                m2.e_aa += wt * dsq;
                m2.e_ab += wt * d * bv;
                delta += m2.ssim(self.c1, self.c2) - m.ssim(self.c1, self.c2);
            }
        }
        delta
    }
}

/// Mean SSIM over sliding Gaussian-weighted windows, dynamic range 1.
pub fn ssim(a: &Plane, b: &Plane, cfg: &ErrorMetricConfig) -> Result<f64> {
    Ok(SsimField::new(a, b, cfg)?.mean())
}

/// PSNR between HVS-filtered halftone and continuous tone, peak 1.
/// Returns `f64::INFINITY` when the filtered images agree exactly.
pub fn hvs_psnr(h: &BinaryImage, c: &GrayImage, hvs: &HvsFilter) -> Result<f64> {
    let hp = h.to_plane();
    hp.same_dims(c)?;
    let err = mse(&hvs.apply(&hp), &hvs.apply(c))?;
    Ok(psnr_from_mse(err))
}

pub fn psnr_from_mse(err: f64) -> f64 {
    if err == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (1.0 / err).log10()
    }
}

/// `MSE(G(h), G(c)) - omega_s SSIM(h, c)`. With `omega_s == 0` the SSIM
/// term is skipped entirely, so images smaller than the SSIM window work.
pub fn error_metric(h: &BinaryImage, c: &GrayImage, cfg: &ErrorMetricConfig) -> Result<f64> {
    let hp = h.to_plane();
    error_metric_plane(&hp, c, cfg)
}

pub(crate) fn error_metric_plane(hp: &Plane, c: &Plane, cfg: &ErrorMetricConfig) -> Result<f64> {
    hp.same_dims(c)?;
    cfg.validate()?;
    let m = mse(&cfg.hvs.apply(hp), &cfg.hvs.apply(c))?;
    if cfg.omega_s == 0.0 {
        return Ok(m);
    }
    Ok(m - cfg.omega_s * ssim(hp, c, cfg)?)
}

/// Global reward `R(h, c) = -E(h, c)`.
pub fn reward(h: &BinaryImage, c: &GrayImage, cfg: &ErrorMetricConfig) -> Result<f64> {
    Ok(-error_metric(h, c, cfg)?)
}
