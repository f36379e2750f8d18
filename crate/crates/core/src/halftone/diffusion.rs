//! Error diffusion with fixed or level-dependent kernels.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{BinaryImage, GrayImage};

const WEIGHT_TOLERANCE: f64 = 1e-12;
const TABLE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub dx: isize,
    pub dy: isize,
    pub weight: f64,
}

/// Diffusion taps relative to the current pixel, written for a
/// left-to-right scan; serpentine scanning mirrors `dx` on reversed rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionKernel {
    taps: Vec<Tap>,
    serpentine: bool,
}

impl DiffusionKernel {
    pub fn new(taps: Vec<Tap>, serpentine: bool) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidParam("kernel has no taps".into()));
        }
        for t in &taps {
            if t.dy < 0 || (t.dy == 0 && t.dx <= 0) {
                return Err(Error::InvalidParam(format!(
                    "tap ({}, {}) points at an already processed pixel",
                    t.dx, t.dy
                )));
            }
        }
        let sum: f64 = taps.iter().map(|t| t.weight).sum();
        if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidParam(format!("kernel weights sum to {sum}")));
        }
        Ok(Self { taps, serpentine })
    }

    pub fn floyd_steinberg(serpentine: bool) -> Self {
        Self::from_table(&[(1, 0, 7.0), (-1, 1, 3.0), (0, 1, 5.0), (1, 1, 1.0)], 16.0, serpentine)
    }

    /// Jarvis, Judice and Ninke.
    pub fn jarvis(serpentine: bool) -> Self {
        Self::from_table(
            &[
                (1, 0, 7.0),
                (2, 0, 5.0),
                (-2, 1, 3.0),
                (-1, 1, 5.0),
                (0, 1, 7.0),
                (1, 1, 5.0),
                (2, 1, 3.0),
                (-2, 2, 1.0),
                (-1, 2, 3.0),
                (0, 2, 5.0),
                (1, 2, 3.0),
                (2, 2, 1.0),
            ],
            48.0,
            serpentine,
        )
    }

    /// Right, down-left and down taps, the layout of variable-coefficient tables.
    pub fn three_tap(weights: [f64; 3], serpentine: bool) -> Result<Self> {
        Self::new(three_taps(weights), serpentine)
    }

    fn from_table(t: &[(isize, isize, f64)], denom: f64, serpentine: bool) -> Self {
        let taps = t
            .iter()
            .map(|&(dx, dy, w)| Tap {
                dx,
                dy,
                weight: w / denom,
            })
            .collect();
        Self::new(taps, serpentine).expect("built-in kernel is valid")
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    pub fn serpentine(&self) -> bool {
        self.serpentine
    }
}

fn three_taps(w: [f64; 3]) -> Vec<Tap> {
    vec![
        Tap { dx: 1, dy: 0, weight: w[0] },
        Tap { dx: -1, dy: 1, weight: w[1] },
        Tap { dx: 0, dy: 1, weight: w[2] },
    ]
}

/// Per-input-level three-tap weights (right, down-left, down) for 256 levels.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableKernelTable {
    rows: Vec<[f64; 3]>,
}

impl VariableKernelTable {
    pub fn from_rows(rows: Vec<[f64; 3]>) -> Result<Self> {
        if rows.len() != 256 {
            return Err(Error::MalformedTable(format!("expected 256 rows, got {}", rows.len())));
        }
        for (level, r) in rows.iter().enumerate() {
            if r.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(Error::MalformedTable(format!("negative or non-finite weight at level {level}")));
            }
            let sum: f64 = r.iter().sum();
            if (sum - 1.0).abs() > TABLE_TOLERANCE {
                return Err(Error::WeightsDontNormalize { level, sum });
            }
        }
        Ok(Self { rows })
    }

    /// Parses `level w1 w2 w3` rows; blank lines and `#` comments are ignored.
    /// Every level 0..=255 must appear exactly once.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows: Vec<Option<[f64; 3]>> = vec![None; 256];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::MalformedTable(format!(
                    "line {}: expected 'level w1 w2 w3'",
                    lineno + 1
                )));
            }
            let level: usize = fields[0]
                .parse()
                .map_err(|_| Error::MalformedTable(format!("line {}: bad level", lineno + 1)))?;
            if level > 255 {
                return Err(Error::MalformedTable(format!("line {}: level {level} > 255", lineno + 1)));
            }
            let mut w = [0.0; 3];
            for (i, f) in fields[1..].iter().enumerate() {
                w[i] = f
                    .parse()
                    .map_err(|_| Error::MalformedTable(format!("line {}: bad weight '{f}'", lineno + 1)))?;
            }
            if rows[level].replace(w).is_some() {
                return Err(Error::MalformedTable(format!("duplicate level {level}")));
            }
        }
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(level, r)| r.ok_or_else(|| Error::MalformedTable(format!("missing level {level}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(rows)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Bundled stand-in table: every level uses the three-tap
    /// Floyd-Steinberg layout 7/16, 3/16, 6/16.
    pub fn placeholder() -> Self {
        Self::parse(PLACEHOLDER_TABLE).expect("bundled table is valid")
    }

    pub fn row(&self, level: usize) -> [f64; 3] {
        self.rows[level]
    }

    pub fn to_text(&self) -> String {
        self.rows
            .iter()
            .enumerate()
            .map(|(l, w)| format!("{l} {} {} {}\n", w[0], w[1], w[2]))
            .collect()
    }
}

pub const PLACEHOLDER_TABLE: &str = include_str!("../../data/fs_three_tap_table.txt");

/// Sequential error diffusion with threshold 0.5 (ties to 1). Error pushed
/// outside the image is discarded.
pub fn error_diffusion(c: &GrayImage, k: &DiffusionKernel) -> BinaryImage {
    diffuse(c, k.serpentine, |_| k.taps())
}

/// Error diffusion whose weights depend on the current pixel's original
/// 8-bit level.
pub fn error_diffusion_variable(c: &GrayImage, table: &VariableKernelTable, serpentine: bool) -> BinaryImage {
    let kernels: Vec<Vec<Tap>> = table.rows.iter().map(|&w| three_taps(w)).collect();
    diffuse(c, serpentine, |orig| {
        let level = (orig.clamp(0.0, 1.0) * 255.0).round() as usize;
        &kernels[level]
    })
}

fn diffuse<'k>(c: &GrayImage, serpentine: bool, taps_for: impl Fn(f64) -> &'k [Tap]) -> BinaryImage {
    let (w, h) = (c.width(), c.height());
    let mut buf = c.data().to_vec();
    let mut out = BinaryImage::zeros(w, h);
    for y in 0..h {
        let reverse = serpentine && y % 2 == 1;
        for i in 0..w {
            let x = if reverse { w - 1 - i } else { i };
            let v = buf[y * w + x];
            let on = v >= 0.5;
            out.set(x, y, on);
            let err = v - if on { 1.0 } else { 0.0 };
            if err == 0.0 {
                continue;
            }
            for t in taps_for(c.get(x, y)) {
                let dx = if reverse { -t.dx } else { t.dx };
                let tx = x as isize + dx;
                let ty = y as isize + t.dy;
                if tx < 0 || tx >= w as isize || ty >= h as isize {
                    continue;
                }
                buf[ty as usize * w + tx as usize] += err * t.weight;
            }
        }
    }
    out
}
