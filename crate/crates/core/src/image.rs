//! Image containers.
//!
//! All intensities live in the normalized `[0, 1]` domain; quantization to
//! 8 bits only happens in [`crate::io`].

use std::ops::Deref;

use crate::error::{check_dims, Error, Result};

/// A dense row-major grid of reals with no range constraint.
///
/// Used for filtered images, gradients and anything else that is an
/// "image of reals" rather than a valid gray image.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParam(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::ShapeMismatch {
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "empty plane");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "empty plane");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn same_dims(&self, other: &Plane) -> Result<()> {
        check_dims(self.width, self.height, other.width, other.height)
    }

    /// Cyclic shift: output(x, y) = self((x - dx) mod w, (y - dy) mod h).
    pub fn roll(&self, dx: isize, dy: isize) -> Plane {
        let (w, h) = (self.width as isize, self.height as isize);
        Plane::from_fn(self.width, self.height, |x, y| {
            let sx = (x as isize - dx).rem_euclid(w) as usize;
            let sy = (y as isize - dy).rem_euclid(h) as usize;
            self.get(sx, sy)
        })
    }
}

/// Half-sample symmetric reflection of `i` into `[0, n)`.
///
/// `-1 -> 0`, `n -> n - 1`; repeated for indices more than one period away,
/// so kernels wider than the image are still well defined.
#[inline]
pub fn mirror_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let m = i.rem_euclid(2 * n);
    if m < n {
        m as usize
    } else {
        (2 * n - 1 - m) as usize
    }
}

/// Continuous-tone image with every pixel in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage(Plane);

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        let plane = Plane::new(width, height, data)?;
        Self::from_plane(plane)
    }

    pub fn from_plane(plane: Plane) -> Result<Self> {
        if let Some(&bad) = plane.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfRangeGray(bad));
        }
        Ok(Self(plane))
    }

    /// Clamps every value into `[0, 1]`. NaN maps to 0.
    pub fn from_plane_clamped(mut plane: Plane) -> Self {
        for v in plane.data_mut() {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Self(plane)
    }

    pub fn as_plane(&self) -> &Plane {
        &self.0
    }

    pub fn into_plane(self) -> Plane {
        self.0
    }

    /// Sub-image starting at `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<GrayImage> {
        if width == 0 || height == 0 || x0 + width > self.width() || y0 + height > self.height() {
            return Err(Error::InvalidParam(format!(
                "crop {width}x{height}+{x0}+{y0} outside {}x{}",
                self.width(),
                self.height()
            )));
        }
        Ok(GrayImage(Plane::from_fn(width, height, |x, y| {
            self.get(x0 + x, y0 + y)
        })))
    }
}

impl Deref for GrayImage {
    type Target = Plane;
    fn deref(&self) -> &Plane {
        &self.0
    }
}

/// Two-level image; every pixel is exactly 0 (black) or 1 (white).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParam(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::ShapeMismatch {
                expected: width * height,
                actual: data.len(),
            });
        }
        if data.iter().any(|&b| b > 1) {
            return Err(Error::InvalidParam("binary pixels must be 0 or 1".into()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "empty image");
        Self {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut img = Self::zeros(width, height);
        for y in 0..height {
            for x in 0..width {
                img.data[y * width + x] = u8::from(f(x, y));
            }
        }
        img
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = u8::from(v);
    }

    #[inline]
    pub fn flip(&mut self, index: usize) {
        self.data[index] ^= 1;
    }

    /// Fraction of pixels that are on.
    pub fn on_fraction(&self) -> f64 {
        self.data.iter().map(|&b| b as usize).sum::<usize>() as f64 / self.data.len() as f64
    }

    pub fn to_plane(&self) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&b| b as f64).collect(),
        }
    }
}

/// Gaussian noise map paired with the seed that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseMap {
    plane: Plane,
    seed: u64,
}

impl NoiseMap {
    /// Wraps an arbitrary plane; `seed` is only recorded.
    pub fn new(plane: Plane, seed: u64) -> Self {
        Self::from_parts(plane, seed)
    }

    pub(crate) fn from_parts(plane: Plane, seed: u64) -> Self {
        Self { plane, seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn as_plane(&self) -> &Plane {
        &self.plane
    }
}

impl Deref for NoiseMap {
    type Target = Plane;
    fn deref(&self) -> &Plane {
        &self.plane
    }
}

/// Image with every pixel equal to `g`.
pub fn constant_image(width: usize, height: usize, g: f64) -> Result<GrayImage> {
    if !(0.0..=1.0).contains(&g) {
        return Err(Error::OutOfRangeGray(g));
    }
    if width == 0 || height == 0 {
        return Err(Error::InvalidParam("image dimensions must be positive".into()));
    }
    Ok(GrayImage(Plane::filled(width, height, g)))
}

/// Horizontal gray ramp: column `x` has gray `x / (width - 1)`.
pub fn gray_ramp(width: usize, height: usize) -> Result<GrayImage> {
    if width < 2 || height == 0 {
        return Err(Error::InvalidParam(format!(
            "ramp needs width >= 2 and height >= 1, got {width}x{height}"
        )));
    }
    let denom = (width - 1) as f64;
    Ok(GrayImage(Plane::from_fn(width, height, |x, _| {
        x as f64 / denom
    })))
}

/// Binarizes with the 0.5 threshold; ties go to 1.
pub fn threshold(img: &Plane, level: f64) -> BinaryImage {
    BinaryImage::from_fn(img.width(), img.height(), |x, y| img.get(x, y) >= level)
}
