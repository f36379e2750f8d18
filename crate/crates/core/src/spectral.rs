//! Blue-noise spectral analysis and the anisotropy-suppressing loss.
//!
//! Power spectrum `P(f) = |DFT(x)|^2 / N` (no window), radially averaged
//! over rings of width one frequency bin. A bin belongs to ring
//! `round(sqrt(kx^2 + ky^2))` where `kx, ky` are its signed (centered)
//! indices. The DC bin belongs to no ring.

use std::fmt::Write as _;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::image::{BinaryImage, Plane};

/// Signed frequency index of DFT bin `k` of an `n`-point transform.
#[inline]
pub fn centered_index(k: usize, n: usize) -> isize {
    if k < n.div_ceil(2) {
        k as isize
    } else {
        k as isize - n as isize
    }
}

fn fft_axis(buf: &mut [Complex64], width: usize, height: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let row_fft = if inverse {
        planner.plan_fft_inverse(width)
    } else {
        planner.plan_fft_forward(width)
    };
    for row in buf.chunks_exact_mut(width) {
        row_fft.process(row);
    }
    let col_fft = if inverse {
        planner.plan_fft_inverse(height)
    } else {
        planner.plan_fft_forward(height)
    };
    let mut col = vec![Complex64::default(); height];
    for x in 0..width {
        for y in 0..height {
            col[y] = buf[y * width + x];
        }
        col_fft.process(&mut col);
        for y in 0..height {
            buf[y * width + x] = col[y];
        }
    }
}

/// Unnormalized forward 2D DFT, row-major.
pub fn dft2(x: &Plane) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_axis(&mut buf, x.width(), x.height(), false);
    buf
}

/// Inverse 2D DFT including the `1/N` factor.
pub fn idft2(spec: &[Complex64], width: usize, height: usize) -> Vec<Complex64> {
    let mut buf = spec.to_vec();
    fft_axis(&mut buf, width, height, true);
    let n = (width * height) as f64;
    buf.iter_mut().for_each(|v| *v /= n);
    buf
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    width: usize,
    height: usize,
    power: Vec<f64>,
}

impl Spectrum {
    /// Wraps precomputed power values (row-major, DC first).
    pub fn from_power(width: usize, height: usize, power: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || power.len() != width * height {
            return Err(Error::ShapeMismatch {
                expected: width * height,
                actual: power.len(),
            });
        }
        if power.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidParam("power values must be >= 0".into()));
        }
        Ok(Self {
            width,
            height,
            power,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Row-major power, unshifted (DC at index 0).
    pub fn power(&self) -> &[f64] {
        &self.power
    }

    /// Power at signed frequency `(kx, ky)`.
    pub fn at(&self, kx: isize, ky: isize) -> f64 {
        let x = kx.rem_euclid(self.width as isize) as usize;
        let y = ky.rem_euclid(self.height as isize) as usize;
        self.power[y * self.width + x]
    }

    pub fn total(&self) -> f64 {
        self.power.iter().sum()
    }
}

/// `|DFT(x)|^2 / N`.
pub fn power_spectrum(x: &Plane) -> Spectrum {
    let n = x.len() as f64;
    let power = dft2(x).iter().map(|c| c.norm_sqr() / n).collect();
    Spectrum {
        width: x.width(),
        height: x.height(),
        power,
    }
}

/// Ring membership of every bin of a `width x height` spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct RingMap {
    width: usize,
    height: usize,
    /// Ring radius of each reported (non-empty) ring, ascending.
    radii: Vec<usize>,
    /// Position in `radii` for each bin; `None` for DC.
    bin_ring: Vec<Option<usize>>,
    counts: Vec<usize>,
}

impl RingMap {
    pub fn new(width: usize, height: usize) -> Self {
        let mut raw = Vec::with_capacity(width * height);
        let mut max_r = 0;
        for y in 0..height {
            for x in 0..width {
                let (kx, ky) = (centered_index(x, width), centered_index(y, height));
                if kx == 0 && ky == 0 {
                    raw.push(None);
                    continue;
                }
                let r = ((kx * kx + ky * ky) as f64).sqrt().round() as usize;
                max_r = max_r.max(r);
                raw.push(Some(r));
            }
        }
        let mut counts_by_r = vec![0usize; max_r + 1];
        for r in raw.iter().flatten() {
            counts_by_r[*r] += 1;
        }
        let mut pos = vec![usize::MAX; max_r + 1];
        let mut radii = Vec::new();
        let mut counts = Vec::new();
        for (r, &c) in counts_by_r.iter().enumerate() {
            if c > 0 {
                pos[r] = radii.len();
                radii.push(r);
                counts.push(c);
            }
        }
        let bin_ring = raw.into_iter().map(|r| r.map(|r| pos[r])).collect();
        Self {
            width,
            height,
            radii,
            bin_ring,
            counts,
        }
    }

    pub fn radii(&self) -> &[usize] {
        &self.radii
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn bin_ring(&self) -> &[Option<usize>] {
        &self.bin_ring
    }

    pub fn num_rings(&self) -> usize {
        self.radii.len()
    }

    /// Ring radius in cycles per pixel, relative to the longer side.
    pub fn frequency(&self, ring: usize) -> f64 {
        self.radii[ring] as f64 / self.width.max(self.height) as f64
    }

    fn ring_means(&self, power: &[f64]) -> Vec<f64> {
        let mut sums = vec![0.0; self.radii.len()];
        for (p, ring) in power.iter().zip(&self.bin_ring) {
            if let Some(r) = ring {
                sums[*r] += p;
            }
        }
        sums.iter()
            .zip(&self.counts)
            .map(|(s, &c)| s / c as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub radii: Vec<usize>,
    pub frequencies: Vec<f64>,
    pub values: Vec<f64>,
    pub counts: Vec<usize>,
}

impl RadialProfile {
    pub fn num_rings(&self) -> usize {
        self.values.len()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("ring,frequency,power\n");
        for i in 0..self.values.len() {
            let _ = writeln!(s, "{},{},{}", self.radii[i], self.frequencies[i], self.values[i]);
        }
        s
    }
}

/// Radially averaged power spectrum density.
pub fn rapsd(s: &Spectrum) -> RadialProfile {
    let rings = RingMap::new(s.width, s.height);
    let values = rings.ring_means(&s.power);
    RadialProfile {
        frequencies: (0..rings.num_rings()).map(|i| rings.frequency(i)).collect(),
        radii: rings.radii.clone(),
        counts: rings.counts.clone(),
        values,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnisotropyProfile {
    pub radii: Vec<usize>,
    /// `None` where the ring has fewer than two bins or zero mean power.
    pub linear: Vec<Option<f64>>,
    /// `10 log10(linear)`; zero anisotropy maps to negative infinity.
    pub values_db: Vec<Option<f64>>,
}

impl AnisotropyProfile {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("ring,db\n");
        for (r, db) in self.radii.iter().zip(&self.values_db) {
            match db {
                Some(v) => {
                    let _ = writeln!(s, "{r},{v}");
                }
                None => {
                    let _ = writeln!(s, "{r},nan");
                }
            }
        }
        s
    }

    /// Mean dB over defined, finite rings whose bin count is at least `min_count`.
    pub fn mean_db(&self, profile: &RadialProfile, min_count: usize) -> Option<f64> {
        let vals: Vec<f64> = self
            .values_db
            .iter()
            .zip(&profile.counts)
            .filter(|(_, &c)| c >= min_count)
            .filter_map(|(v, _)| *v)
            .filter(|v| v.is_finite())
            .collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }
}

/// Relative variance of the power within each ring.
pub fn anisotropy(s: &Spectrum, p: &RadialProfile) -> AnisotropyProfile {
    let rings = RingMap::new(s.width, s.height);
    let mut dev = vec![0.0; rings.num_rings()];
    for (pw, ring) in s.power.iter().zip(&rings.bin_ring) {
        if let Some(r) = ring {
            let d = pw - p.values[*r];
            dev[*r] += d * d;
        }
    }
    let mut linear = Vec::with_capacity(dev.len());
    for (i, d) in dev.iter().enumerate() {
        let n = rings.counts[i];
        let mean = p.values[i];
        linear.push(if n >= 2 && mean > 0.0 {
            Some(d / ((n - 1) as f64 * mean * mean))
        } else {
            None
        });
    }
    let values_db = linear
        .iter()
        .map(|a| a.map(|a| if a == 0.0 { f64::NEG_INFINITY } else { 10.0 * a.log10() }))
        .collect();
    AnisotropyProfile {
        radii: rings.radii,
        linear,
        values_db,
    }
}

/// Anisotropy-suppressing loss on a probability map and its exact gradient.
///
/// Value: mean over the `N - 1` non-DC bins of `(P(f) - P_ring(f))^2`.
/// Since ring deviations sum to zero, `dL/dP(f) = 2 (P(f) - P_ring(f)) / (N - 1)`,
/// and chaining through `P = |X|^2 / N` with `X = DFT(p)` gives
/// `dL/dp = 2 Re(IDFT(w * X))` with `w = dL/dP`.
pub fn anisotropy_loss(p: &Plane) -> (f64, Plane) {
    let (w, h) = (p.width(), p.height());
    let n = w * h;
    if n < 2 {
        return (0.0, Plane::zeros(w, h));
    }
    let spec = dft2(p);
    let nf = n as f64;
    let power: Vec<f64> = spec.iter().map(|c| c.norm_sqr() / nf).collect();
    let rings = RingMap::new(w, h);
    let means = rings.ring_means(&power);
    let m = (n - 1) as f64;
    let mut value = 0.0;
    let mut weighted = vec![Complex64::default(); n];
    for i in 0..n {
        if let Some(r) = rings.bin_ring[i] {
            let d = power[i] - means[r];
            value += d * d;
            weighted[i] = spec[i] * (2.0 * d / m);
        }
    }
    value /= m;
    let back = idft2(&weighted, w, h);
    let grad = back.iter().map(|c| 2.0 * c.re).collect();
    (value, Plane::new(w, h, grad).expect("dims"))
}

/// Blue-noise principal frequency for gray level `g`, cycles per pixel.
pub fn principal_frequency(g: f64) -> Result<f64> {
    if !(g > 0.0 && g < 1.0) {
        return Err(Error::OutOfRangeGray(g));
    }
    Ok(if g <= 0.5 { g.sqrt() } else { (1.0 - g).sqrt() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlueNoiseReport {
    pub gray: f64,
    pub principal_frequency: Option<f64>,
    pub profile: RadialProfile,
    pub anisotropy: AnisotropyProfile,
    /// Mean RAPSD below `f_b / 2` over the peak RAPSD.
    pub low_frequency_ratio: Option<f64>,
    /// Set when the halftone is all black or all white, which cannot come
    /// from a mid-gray constant input.
    pub degenerate_tone: bool,
}

impl BlueNoiseReport {
    /// `ring,frequency,power,count,anisotropy_db` rows plus a header
    /// carrying `f_b` and the low-frequency ratio.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# gray={} principal_frequency={} low_frequency_ratio={}",
            self.gray,
            self.principal_frequency.map_or("nan".into(), |v| v.to_string()),
            self.low_frequency_ratio.map_or("nan".into(), |v| v.to_string()),
        );
        s.push_str("ring,frequency,power,count,anisotropy_db\n");
        for i in 0..self.profile.num_rings() {
            let db = self.anisotropy.values_db[i].map_or("nan".into(), |v| v.to_string());
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                self.profile.radii[i],
                self.profile.frequencies[i],
                self.profile.values[i],
                self.profile.counts[i],
                db
            );
        }
        s
    }
}

pub fn bluenoise_report(h: &BinaryImage) -> BlueNoiseReport {
    let plane = h.to_plane();
    let gray = plane.mean();
    let spec = power_spectrum(&plane);
    let profile = rapsd(&spec);
    let anis = anisotropy(&spec, &profile);
    let fb = principal_frequency(gray).ok();
    let peak = profile.values.iter().cloned().fold(0.0, f64::max);
    let low_frequency_ratio = fb.and_then(|fb| {
        let low: Vec<f64> = profile
            .values
            .iter()
            .zip(&profile.frequencies)
            .filter(|(_, &f)| f < fb / 2.0)
            .map(|(v, _)| *v)
            .collect();
        if low.is_empty() || peak <= 0.0 {
            None
        } else {
            Some(low.iter().sum::<f64>() / low.len() as f64 / peak)
        }
    });
    BlueNoiseReport {
        gray,
        principal_frequency: fb,
        profile,
        anisotropy: anis,
        low_frequency_ratio,
        degenerate_tone: fb.is_none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ones_spectrum_is_dc_only() {
        let s = power_spectrum(&Plane::filled(4, 4, 1.0));
        assert!((s.power()[0] - 16.0).abs() < 1e-10);
        assert!(s.power()[1..].iter().all(|p| p.abs() < 1e-10));
        let prof = rapsd(&s);
        assert!(prof.values.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn checkerboard_nyquist() {
        let x = Plane::from_fn(8, 8, |x, y| ((x + y) % 2) as f64);
        let s = power_spectrum(&x);
        for ky in -4..4 {
            for kx in -4..4 {
                let p = s.at(kx, ky);
                if (kx, ky) == (-4, -4) || (kx, ky) == (0, 0) {
                    assert!((p - 16.0).abs() < 1e-10);
                } else {
                    assert!(p.abs() < 1e-10, "({kx},{ky}) = {p}");
                }
            }
        }
        let prof = rapsd(&s);
        let last = prof.num_rings() - 1;
        assert!(prof.values[last] > 1.0);
        assert!(prof.values[..last].iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn ring_partition_counts() {
        for &(w, h) in &[(8, 8), (17, 13), (1, 5), (64, 64)] {
            let rings = RingMap::new(w, h);
            assert_eq!(rings.counts().iter().sum::<usize>(), w * h - 1);
            assert!(rings.counts().iter().all(|&c| c >= 1));
        }
    }

    #[test]
    fn anisotropy_two_bin_ring() {
        // 3x1: bins kx = 0, 1, -1; ring 1 = {1, -1}.
        let s = Spectrum::from_power(3, 1, vec![5.0, 1.0, 3.0]).unwrap();
        let p = rapsd(&s);
        assert_eq!(p.values, vec![2.0]);
        let a = anisotropy(&s, &p);
        assert_eq!(a.linear, vec![Some(0.5)]);
        assert!((a.values_db[0].unwrap() - 10.0 * 0.5f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn anisotropy_radially_constant_is_zero() {
        let rings = RingMap::new(16, 16);
        let power: Vec<f64> = rings
            .bin_ring()
            .iter()
            .map(|r| r.map_or(3.0, |r| 1.0 + r as f64))
            .collect();
        let s = Spectrum::from_power(16, 16, power).unwrap();
        let p = rapsd(&s);
        let a = anisotropy(&s, &p);
        for (lin, db) in a.linear.iter().zip(&a.values_db) {
            if let Some(l) = lin {
                assert_eq!(*l, 0.0);
                assert_eq!(db.unwrap(), f64::NEG_INFINITY);
            }
        }
    }

    #[test]
    fn undefined_rings_flagged() {
        let x = Plane::from_fn(8, 8, |x, y| ((x + y) % 2) as f64);
        let s = power_spectrum(&x);
        let a = anisotropy(&s, &rapsd(&s));
        // Outermost ring has one bin; inner rings have zero mean.
        assert!(a.linear.iter().all(|v| v.is_none()));
    }

    #[test]
    fn principal_frequency_values() {
        assert!((principal_frequency(0.25).unwrap() - 0.5).abs() < 1e-15);
        assert!((principal_frequency(0.5).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        for g in [0.1, 0.3, 0.45, 0.6, 0.8] {
            assert!((principal_frequency(g).unwrap() - principal_frequency(1.0 - g).unwrap()).abs() < 1e-12);
        }
        assert!(matches!(principal_frequency(0.0), Err(Error::OutOfRangeGray(_))));
        assert!(matches!(principal_frequency(1.0), Err(Error::OutOfRangeGray(_))));
    }

    #[test]
    fn constant_loss_is_zero() {
        let (v, g) = anisotropy_loss(&Plane::filled(8, 8, 0.37));
        assert!(v.abs() < 1e-10);
        assert!(g.data().iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn degenerate_report() {
        let r = bluenoise_report(&BinaryImage::zeros(8, 8));
        assert!(r.degenerate_tone);
        assert!(r.low_frequency_ratio.is_none());
    }
}
