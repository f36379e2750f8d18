//! Human-visual-system low-pass filters.
//!
//! Every filter is a square, odd-sided kernel with unit DC gain that is
//! symmetric under 180 degree rotation. Filtering uses half-sample mirror
//! boundaries (see [`mirror_index`]).

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::image::{mirror_index, Plane};

/// Näsänen contrast-sensitivity constants (Kim and Allebach usage):
/// `H(f) = a L^b exp(-f / (c ln L + d))`, `f` in cycles per degree.
pub const NASANEN_A: f64 = 131.6;
pub const NASANEN_B: f64 = 0.3188;
pub const NASANEN_C: f64 = 0.525;
pub const NASANEN_D: f64 = 3.91;
/// Average luminance in cd/m^2.
pub const NASANEN_LUMINANCE: f64 = 11.0;

pub const DEFAULT_GAUSSIAN_SIGMA: f64 = 2.0;
pub const DEFAULT_GAUSSIAN_RADIUS: usize = 6;
pub const DEFAULT_NASANEN_SCALE: f64 = 2000.0;
pub const DEFAULT_NASANEN_SIZE: usize = 23;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HvsKind {
    Gaussian { sigma: f64 },
    /// `scale` is resolution (dpi) times viewing distance (inches).
    Nasanen { scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HvsFilter {
    kind: HvsKind,
    radius: usize,
    kernel: Vec<f64>,
}

/// Response of a filter to a unit impulse, restricted to the image.
///
/// With mirror boundaries the response depends on where the impulse sits;
/// the patch covers every output pixel the impulse can reach.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalResponse {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl LocalResponse {
    /// Dot product with a full-size image.
    pub fn dot_image(&self, img: &[f64], img_width: usize) -> f64 {
        let mut acc = 0.0;
        for yy in 0..self.height {
            let row = &img[(self.y0 + yy) * img_width + self.x0..][..self.width];
            let k = &self.data[yy * self.width..][..self.width];
            acc += row.iter().zip(k).map(|(a, b)| a * b).sum::<f64>();
        }
        acc
    }

    /// `img += scale * self`.
    pub fn add_to_image(&self, img: &mut [f64], img_width: usize, scale: f64) {
        for yy in 0..self.height {
            let row = &mut img[(self.y0 + yy) * img_width + self.x0..][..self.width];
            let k = &self.data[yy * self.width..][..self.width];
            for (a, b) in row.iter_mut().zip(k) {
                *a += scale * b;
            }
        }
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Inner product of two responses over their overlap.
    pub fn dot(&self, other: &LocalResponse) -> f64 {
        let x_lo = self.x0.max(other.x0);
        let y_lo = self.y0.max(other.y0);
        let x_hi = (self.x0 + self.width).min(other.x0 + other.width);
        let y_hi = (self.y0 + self.height).min(other.y0 + other.height);
        if x_lo >= x_hi || y_lo >= y_hi {
            return 0.0;
        }
        let mut acc = 0.0;
        for y in y_lo..y_hi {
            let a = &self.data[(y - self.y0) * self.width + (x_lo - self.x0)..][..x_hi - x_lo];
            let b = &other.data[(y - other.y0) * other.width + (x_lo - other.x0)..][..x_hi - x_lo];
            acc += a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
        }
        acc
    }
}

impl HvsFilter {
    /// Truncated 2D Gaussian of side `2 radius + 1`, renormalized to sum 1.
    pub fn gaussian(sigma: f64, radius: usize) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParam(format!("gaussian sigma must be > 0, got {sigma}")));
        }
        if radius < 1 {
            return Err(Error::InvalidParam("gaussian radius must be >= 1".into()));
        }
        let side = 2 * radius + 1;
        let r = radius as f64;
        let mut kernel = Vec::with_capacity(side * side);
        for y in 0..side {
            for x in 0..side {
                let (dx, dy) = (x as f64 - r, y as f64 - r);
                kernel.push((-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp());
            }
        }
        normalize(&mut kernel);
        Ok(Self {
            kind: HvsKind::Gaussian { sigma },
            radius,
            kernel,
        })
    }

    /// Näsänen model kernel.
    ///
    /// The exponential radial response is sampled on the `size x size` DFT
    /// grid (frequency `k / size` cycles/pixel converted to cycles/degree as
    /// `f * scale * pi / 180`), inverse transformed, centered and
    /// renormalized to unit sum.
    pub fn nasanen(scale: f64, size: usize) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidParam(format!("nasanen scale must be > 0, got {scale}")));
        }
        if size < 3 || size % 2 == 0 {
            return Err(Error::InvalidParam(format!("nasanen size must be odd and >= 3, got {size}")));
        }
        let radius = size / 2;
        let n = size as f64;
        let decay = 1.0 / (NASANEN_C * NASANEN_LUMINANCE.ln() + NASANEN_D);
        let cpd = scale * PI / 180.0;
        let half = radius as isize;
        // Frequency response on the centered grid; the a L^b gain cancels on renormalization.
        let freq: Vec<f64> = (-half..=half)
            .flat_map(|ky| {
                (-half..=half).map(move |kx| {
                    let f = ((kx * kx + ky * ky) as f64).sqrt() / n;
                    NASANEN_A * NASANEN_LUMINANCE.powf(NASANEN_B) * (-f * cpd * decay).exp()
                })
            })
            .collect();
        let mut kernel = Vec::with_capacity(size * size);
        for y in -half..=half {
            for x in -half..=half {
                let mut acc = 0.0;
                for (j, ky) in (-half..=half).enumerate() {
                    for (i, kx) in (-half..=half).enumerate() {
                        let phase = 2.0 * PI * ((kx * x + ky * y) as f64) / n;
                        acc += freq[j * size + i] * phase.cos();
                    }
                }
                kernel.push(acc / (n * n));
            }
        }
        normalize(&mut kernel);
        symmetrize(&mut kernel);
        Ok(Self {
            kind: HvsKind::Nasanen { scale },
            radius,
            kernel,
        })
    }

    /// Identity kernel (single unit tap).
    pub fn impulse() -> Self {
        let mut kernel = vec![0.0; 9];
        kernel[4] = 1.0;
        Self {
            kind: HvsKind::Gaussian { sigma: 0.0 },
            radius: 1,
            kernel,
        }
    }

    pub fn kind(&self) -> HvsKind {
        self.kind
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    /// Row-major kernel weights, `side * side` long, offset `(-r, -r)` first.
    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    #[inline]
    pub fn weight(&self, dx: isize, dy: isize) -> f64 {
        let r = self.radius as isize;
        if dx.abs() > r || dy.abs() > r {
            return 0.0;
        }
        self.kernel[((dy + r) as usize) * self.side() + (dx + r) as usize]
    }

    /// Frequency response at `(fx, fy)` cycles/pixel.
    pub fn frequency_response(&self, fx: f64, fy: f64) -> f64 {
        let r = self.radius as isize;
        let mut acc = 0.0;
        for dy in -r..=r {
            for dx in -r..=r {
                acc += self.weight(dx, dy) * (2.0 * PI * (fx * dx as f64 + fy * dy as f64)).cos();
            }
        }
        acc
    }

    /// Second moment `sum w (dx^2 + dy^2)` of the kernel.
    pub fn second_moment(&self) -> f64 {
        let r = self.radius as isize;
        let mut acc = 0.0;
        for dy in -r..=r {
            for dx in -r..=r {
                acc += self.weight(dx, dy) * (dx * dx + dy * dy) as f64;
            }
        }
        acc
    }

    /// 2D convolution with mirror boundaries; output has the input's dimensions.
    pub fn apply(&self, img: &Plane) -> Plane {
        let (w, h) = (img.width(), img.height());
        let r = self.radius;
        let side = self.side();
        let src = img.data();
        let mut out = vec![0.0; w * h];
        let interior = w > 2 * r && h > 2 * r;
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                if interior && x >= r && x + r < w && y >= r && y + r < h {
                    // out(p) = sum_t k(t) in(p - t); with the kernel's point symmetry
                    // this is a plain correlation over the window.
                    for ky in 0..side {
                        let row = &src[(y + ky - r) * w + (x - r)..][..side];
                        let k = &self.kernel[(side - 1 - ky) * side..][..side];
                        acc += row.iter().zip(k.iter().rev()).map(|(a, b)| a * b).sum::<f64>();
                    }
                } else {
                    for ky in 0..side {
                        let dy = ky as isize - r as isize;
                        let sy = mirror_index(y as isize - dy, h);
                        for kx in 0..side {
                            let dx = kx as isize - r as isize;
                            let sx = mirror_index(x as isize - dx, w);
                            acc += self.kernel[ky * side + kx] * src[sy * w + sx];
                        }
                    }
                }
                out[y * w + x] = acc;
            }
        }
        Plane::new(w, h, out).expect("same dims")
    }

    /// Response of [`HvsFilter::apply`] to a unit impulse at `(ax, ay)` in a
    /// `width x height` image.
    pub fn impulse_response(&self, width: usize, height: usize, ax: usize, ay: usize) -> LocalResponse {
        let r = self.radius as isize;
        let x0 = ax.saturating_sub(self.radius);
        let y0 = ay.saturating_sub(self.radius);
        let x1 = (ax + self.radius).min(width - 1);
        let y1 = (ay + self.radius).min(height - 1);
        let (pw, ph) = (x1 - x0 + 1, y1 - y0 + 1);
        // Every q with mirror(q) == a is a source of the impulse.
        let pre_x = preimages(ax, width, self.radius);
        let pre_y = preimages(ay, height, self.radius);
        let mut data = vec![0.0; pw * ph];
        if pre_x.len() == 1 && pre_y.len() == 1 {
            for py in 0..ph {
                for px in 0..pw {
                    let dx = (x0 + px) as isize - ax as isize;
                    let dy = (y0 + py) as isize - ay as isize;
                    data[py * pw + px] = self.weight(dx, dy);
                }
            }
        } else {
            for py in 0..ph {
                for px in 0..pw {
                    let (gx, gy) = ((x0 + px) as isize, (y0 + py) as isize);
                    let mut acc = 0.0;
                    for &qy in &pre_y {
                        let dy = gy - qy;
                        if dy.abs() > r {
                            continue;
                        }
                        for &qx in &pre_x {
                            let dx = gx - qx;
                            if dx.abs() <= r {
                                acc += self.weight(dx, dy);
                            }
                        }
                    }
                    data[py * pw + px] = acc;
                }
            }
        }
        LocalResponse {
            x0,
            y0,
            width: pw,
            height: ph,
            data,
        }
    }
}

fn preimages(a: usize, n: usize, radius: usize) -> Vec<isize> {
    let r = radius as isize;
    (-r..n as isize + r)
        .filter(|&q| mirror_index(q, n) == a)
        .collect()
}

fn normalize(kernel: &mut [f64]) {
    let sum: f64 = kernel.iter().sum();
    for v in kernel.iter_mut() {
        *v /= sum;
    }
}

/// Averages each weight with its 180 degree partner so rounding cannot break symmetry.
fn symmetrize(kernel: &mut [f64]) {
    let n = kernel.len();
    for i in 0..n / 2 {
        let avg = 0.5 * (kernel[i] + kernel[n - 1 - i]);
        kernel[i] = avg;
        kernel[n - 1 - i] = avg;
    }
}
