use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::{BinaryImage, GrayImage, Plane};

/// Tileable dither array. Ranks `0..side^2` each appear once; the threshold
/// of rank `k` is `(k + 0.5) / side^2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThresholdMatrix {
    side: usize,
    ranks: Vec<u32>,
}

impl ThresholdMatrix {
    pub fn from_ranks(side: usize, ranks: Vec<u32>) -> Result<Self> {
        if side == 0 || ranks.len() != side * side {
            return Err(Error::ShapeMismatch {
                expected: side * side,
                actual: ranks.len(),
            });
        }
        let mut seen = vec![false; ranks.len()];
        for &r in &ranks {
            let r = r as usize;
            if r >= seen.len() || seen[r] {
                return Err(Error::InvalidParam(format!("ranks are not a permutation (rank {r})")));
            }
            seen[r] = true;
        }
        Ok(Self { side, ranks })
    }

    /// Recursive Bayer index matrix; `side` must be a power of two.
    pub fn bayer(side: usize) -> Result<Self> {
        if side < 2 || !side.is_power_of_two() {
            return Err(Error::InvalidParam(format!("bayer side must be a power of two >= 2, got {side}")));
        }
        let mut m = vec![0u32, 2, 3, 1];
        let mut n = 2;
        while n < side {
            let mut next = vec![0u32; 4 * n * n];
            for y in 0..n {
                for x in 0..n {
                    let v = 4 * m[y * n + x];
                    next[y * 2 * n + x] = v;
                    next[y * 2 * n + x + n] = v + 2;
                    next[(y + n) * 2 * n + x] = v + 3;
                    next[(y + n) * 2 * n + x + n] = v + 1;
                }
            }
            m = next;
            n *= 2;
        }
        Self::from_ranks(side, m)
    }

    /// Uniformly random permutation of ranks (white-noise mask).
    pub fn white_noise(side: usize, seed: u64) -> Result<Self> {
        if side == 0 {
            return Err(Error::InvalidParam("side must be >= 1".into()));
        }
        let mut ranks: Vec<u32> = (0..(side * side) as u32).collect();
        ranks.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self::from_ranks(side, ranks)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn ranks(&self) -> &[u32] {
        &self.ranks
    }

    #[inline]
    pub fn threshold(&self, x: usize, y: usize) -> f64 {
        let r = self.ranks[(y % self.side) * self.side + x % self.side];
        (r as f64 + 0.5) / (self.side * self.side) as f64
    }

    /// Thresholds as a gray image (for previews).
    pub fn to_plane(&self) -> Plane {
        Plane::from_fn(self.side, self.side, |x, y| self.threshold(x, y))
    }

    /// Plain-text form: `threshold-matrix <side>` then one row of ranks per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("threshold-matrix {}\n", self.side);
        for row in self.ranks.chunks(self.side) {
            let line: Vec<String> = row.iter().map(|r| r.to_string()).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        if tokens.next() != Some("threshold-matrix") {
            return Err(Error::MalformedMask("missing 'threshold-matrix' header".into()));
        }
        let side: usize = tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::MalformedMask("bad side".into()))?;
        let ranks = tokens
            .map(|t| t.parse::<u32>().map_err(|_| Error::MalformedMask(format!("bad rank '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_ranks(side, ranks).map_err(|e| Error::MalformedMask(e.to_string()))
    }
}

/// `h(x, y) = 1` iff `c(x, y) > m(x mod side, y mod side)`.
pub fn ordered_dither(c: &GrayImage, m: &ThresholdMatrix) -> BinaryImage {
    BinaryImage::from_fn(c.width(), c.height(), |x, y| c.get(x, y) > m.threshold(x, y))
}
