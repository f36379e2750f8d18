//! Minimal line-plot renderer (RGB PNG, no text). CSVs stay the canonical
//! output; plots are for eyeballing curves.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::save_rgb_png;

const MARGIN: usize = 24;
const BACKGROUND: [u8; 3] = [255, 255, 255];
const AXIS: [u8; 3] = [0, 0, 0];
const GRID: [u8; 3] = [225, 225, 225];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub color: [u8; 3],
    /// Non-finite points break the line.
    pub points: Vec<(f64, f64)>,
}

/// Several series on shared axes, optionally with vertical markers.
#[derive(Debug, Clone, PartialEq)]
pub struct LinePlot {
    pub width: usize,
    pub height: usize,
    pub series: Vec<Series>,
    pub markers: Vec<(f64, [u8; 3])>,
}

struct Canvas {
    w: usize,
    h: usize,
    rgb: Vec<u8>,
}

impl Canvas {
    fn put(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as usize) < self.w && (y as usize) < self.h {
            let i = 3 * (y as usize * self.w + x as usize);
            self.rgb[i..i + 3].copy_from_slice(&c);
        }
    }

    fn line(&mut self, (mut x0, mut y0): (i64, i64), (x1, y1): (i64, i64), c: [u8; 3]) {
        let dx = (x1 - x0).abs();
        let dy = -(y1 - y0).abs();
        let sx = if x0 < x1 { 1 } else { -1 };
        let sy = if y0 < y1 { 1 } else { -1 };
        let mut err = dx + dy;
        loop {
            self.put(x0, y0, c);
            if x0 == x1 && y0 == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x0 += sx;
            }
            if e2 <= dx {
                err += dx;
                y0 += sy;
            }
        }
    }
}

fn bounds(vals: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return None;
    }
    if hi - lo < 1e-12 {
        let pad = lo.abs().max(1.0) * 0.5;
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

impl LinePlot {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            series: Vec::new(),
            markers: Vec::new(),
        }
    }

    pub fn with_series(mut self, color: [u8; 3], points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series { color, points });
        self
    }

    pub fn with_marker(mut self, x: f64, color: [u8; 3]) -> Self {
        self.markers.push((x, color));
        self
    }

    /// Row-major RGB pixels.
    pub fn render(&self) -> Result<Vec<u8>> {
        if self.width < 2 * MARGIN + 2 || self.height < 2 * MARGIN + 2 {
            return Err(Error::InvalidParam(format!("plot {}x{} is too small", self.width, self.height)));
        }
        let mut cv = Canvas {
            w: self.width,
            h: self.height,
            rgb: BACKGROUND.iter().cycle().take(3 * self.width * self.height).copied().collect(),
        };
        let pts = || self.series.iter().flat_map(|s| s.points.iter());
        let (x_lo, x_hi) = bounds(pts().map(|p| p.0).chain(self.markers.iter().map(|m| m.0))).unwrap_or((0.0, 1.0));
        let (y_lo, y_hi) = bounds(pts().map(|p| p.1)).unwrap_or((0.0, 1.0));
        let (left, right) = (MARGIN as f64, (self.width - MARGIN) as f64);
        let (top, bottom) = (MARGIN as f64, (self.height - MARGIN) as f64);
        let to_px = |x: f64, y: f64| {
            let px = left + (x - x_lo) / (x_hi - x_lo) * (right - left);
            let py = bottom - (y - y_lo) / (y_hi - y_lo) * (bottom - top);
            (px.round() as i64, py.round() as i64)
        };

        for k in 1..4 {
            let gy = (top + (bottom - top) * k as f64 / 4.0).round() as i64;
            cv.line((left as i64, gy), (right as i64, gy), GRID);
            let gx = (left + (right - left) * k as f64 / 4.0).round() as i64;
            cv.line((gx, top as i64), (gx, bottom as i64), GRID);
        }
        let (l, r, t, b) = (left as i64, right as i64, top as i64, bottom as i64);
        cv.line((l, b), (r, b), AXIS);
        cv.line((l, t), (l, b), AXIS);

        for &(x, color) in &self.markers {
            if x.is_finite() {
                let (px, _) = to_px(x, y_lo);
                let mut y = t;
                while y < b {
                    cv.line((px, y), (px, (y + 3).min(b)), color);
                    y += 6;
                }
            }
        }
        for s in &self.series {
            let mut prev: Option<(i64, i64)> = None;
            for &(x, y) in &s.points {
                if !(x.is_finite() && y.is_finite()) {
                    prev = None;
                    continue;
                }
                let p = to_px(x, y);
                match prev {
                    Some(q) => cv.line(q, p, s.color),
                    None => cv.put(p.0, p.1, s.color),
                }
                prev = Some(p);
            }
        }
        Ok(cv.rgb)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_rgb_png(self.width, self.height, &self.render()?, path)
    }
}
