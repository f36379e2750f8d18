//! Little-endian checkpoint file.
//!
//! ```text
//! magic      8 bytes  "HTPOLICY"
//! version    u32      1
//! blocks     u32
//! channels   u32
//! step       u64      completed training steps
//! n_params   u64
//! params     n_params x f64
//! has_adam   u8       0 or 1
//! [t u64, m n_params x f64, v n_params x f64]   when has_adam = 1
//! ```

use std::path::Path;

use super::{Adam, Architecture, PolicyParams};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"HTPOLICY";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: PolicyParams,
    pub step: u64,
    pub adam: Option<Adam>,
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::MalformedCheckpoint("truncated file".into()));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::MalformedCheckpoint("size overflow".into()))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let arch = self.params.architecture();
        let n = self.params.len();
        let mut out = Vec::with_capacity(48 + 8 * n * 3);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(arch.blocks as u32).to_le_bytes());
        out.extend_from_slice(&(arch.channels as u32).to_le_bytes());
        out.extend_from_slice(&self.step.to_le_bytes());
        out.extend_from_slice(&(n as u64).to_le_bytes());
        let mut put = |v: &[f64]| {
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        };
        put(self.params.data());
        match &self.adam {
            None => out.push(0),
            Some(a) => {
                out.push(1);
                out.extend_from_slice(&a.t.to_le_bytes());
                for x in a.m.iter().chain(&a.v) {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader { buf };
        if r.take(8)? != CHECKPOINT_MAGIC {
            return Err(Error::MalformedCheckpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::MalformedCheckpoint(format!("unsupported version {version}")));
        }
        let blocks = r.u32()? as usize;
        let channels = r.u32()? as usize;
        let arch = Architecture::new(blocks, channels).map_err(|e| Error::MalformedCheckpoint(e.to_string()))?;
        let step = r.u64()?;
        let n = r.u64()? as usize;
        if n != arch.num_params() {
            return Err(Error::MalformedCheckpoint(format!(
                "expected {} parameters for {blocks}x{channels}, found {n}",
                arch.num_params()
            )));
        }
        let params = PolicyParams::from_vec(arch, r.f64s(n)?)?;
        let adam = match r.take(1)?[0] {
            0 => None,
            1 => {
                let t = r.u64()?;
                let m = r.f64s(n)?;
                let v = r.f64s(n)?;
                if m.iter().chain(&v).any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite("optimizer state"));
                }
                Some(Adam { m, v, t })
            }
            other => return Err(Error::MalformedCheckpoint(format!("bad optimizer flag {other}"))),
        };
        if !r.buf.is_empty() {
            return Err(Error::MalformedCheckpoint("trailing bytes".into()));
        }
        Ok(Self { params, step, adam })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
