//! PGM (P5), PBM (P4) and 8-bit grayscale PNG reading and writing.
//!
//! Gray pixels map as `byte / 255` on load and `round(v * 255)` on save.
//! Binary images are written with 0 as black and 1 as white; PBM stores
//! black as a set bit, so the bit is the inverse of the pixel value.

use std::fs;
use std::io::{BufWriter, Cursor, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{BinaryImage, GrayImage, Plane};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Pgm,
    Pbm,
    Png,
}

fn format_from_extension(path: &Path) -> Result<Format> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("pgm") => Ok(Format::Pgm),
        Some("pbm") => Ok(Format::Pbm),
        Some("png") => Ok(Format::Png),
        _ => Err(Error::InvalidParam(format!(
            "cannot infer image format from {}",
            path.display()
        ))),
    }
}

fn png_err(e: png::DecodingError) -> Error {
    match e {
        png::DecodingError::IoError(io) => Error::Io(io),
        other => Error::MalformedHeader(other.to_string()),
    }
}

fn png_enc_err(e: png::EncodingError) -> Error {
    match e {
        png::EncodingError::IoError(io) => Error::Io(io),
        other => Error::InvalidParam(other.to_string()),
    }
}

/// Netpbm header tokenizer: whitespace separated, `#` comments to end of line.
struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 2 }
    }

    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::MalformedHeader(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader(format!("bad {what}")))
    }

    /// Consumes the single whitespace byte that terminates the header.
    fn end(&mut self) -> Result<usize> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => Ok(self.pos + 1),
            _ => Err(Error::MalformedHeader("header not terminated by whitespace".into())),
        }
    }
}

fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let mut hr = HeaderReader::new(bytes);
    let width = hr.number("width")?;
    let height = hr.number("height")?;
    let maxval = hr.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!("zero dimension {width}x{height}")));
    }
    if maxval != 255 {
        return Err(Error::UnsupportedBitDepth(format!("maxval {maxval}, expected 255")));
    }
    let start = hr.end()?;
    let n = width * height;
    let raster = bytes
        .get(start..start + n)
        .ok_or_else(|| Error::MalformedHeader(format!("expected {n} pixel bytes")))?;
    GrayImage::new(width, height, raster.iter().map(|&b| b as f64 / 255.0).collect())
}

fn parse_pbm(bytes: &[u8]) -> Result<BinaryImage> {
    let mut hr = HeaderReader::new(bytes);
    let width = hr.number("width")?;
    let height = hr.number("height")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader(format!("zero dimension {width}x{height}")));
    }
    let start = hr.end()?;
    let stride = width.div_ceil(8);
    let raster = bytes
        .get(start..start + stride * height)
        .ok_or_else(|| Error::MalformedHeader(format!("expected {} raster bytes", stride * height)))?;
    Ok(BinaryImage::from_fn(width, height, |x, y| {
        let byte = raster[y * stride + x / 8];
        let black = (byte >> (7 - (x % 8))) & 1 == 1;
        !black
    }))
}

fn decode_png(bytes: Vec<u8>) -> Result<(usize, usize, Vec<u8>)> {
    let decoder = png::Decoder::new(Cursor::new(bytes));
    let mut reader = decoder.read_info().map_err(png_err)?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale {
        return Err(Error::UnsupportedBitDepth(format!(
            "PNG color type {:?}, expected 8-bit grayscale",
            info.color_type
        )));
    }
    if info.bit_depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedBitDepth(format!(
            "PNG bit depth {:?}, expected 8",
            info.bit_depth
        )));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::MalformedHeader("PNG too large".into()))?;
    let mut buf = vec![0; size];
    let frame = reader.next_frame(&mut buf).map_err(png_err)?;
    buf.truncate(frame.buffer_size());
    if buf.len() != w * h {
        return Err(Error::MalformedHeader("unexpected PNG row layout".into()));
    }
    Ok((w, h, buf))
}

fn encode_png(width: usize, height: usize, pixels: &[u8], color: png::ColorType) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width as u32, height as u32);
        enc.set_color(color);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(png_enc_err)?;
        writer.write_image_data(pixels).map_err(png_enc_err)?;
        writer.finish().map_err(png_enc_err)?;
    }
    Ok(out)
}

/// Loads an 8-bit PGM (P5) or 8-bit grayscale PNG.
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let bytes = fs::read(path.as_ref())?;
    decode_gray(bytes)
}

/// Decodes P5 or grayscale PNG bytes.
pub fn decode_gray(bytes: Vec<u8>) -> Result<GrayImage> {
    if bytes.starts_with(b"P5") {
        parse_pgm(&bytes)
    } else if bytes.starts_with(b"\x89PNG") {
        let (w, h, px) = decode_png(bytes)?;
        GrayImage::new(w, h, px.iter().map(|&b| b as f64 / 255.0).collect())
    } else {
        Err(Error::MalformedHeader("not a P5 PGM or PNG file".into()))
    }
}

/// Loads a PBM (P4) or a PNG whose pixels are all 0 or 255.
pub fn load_binary(path: impl AsRef<Path>) -> Result<BinaryImage> {
    let bytes = fs::read(path.as_ref())?;
    if bytes.starts_with(b"P4") {
        parse_pbm(&bytes)
    } else if bytes.starts_with(b"\x89PNG") {
        let (w, h, px) = decode_png(bytes)?;
        if px.iter().any(|&b| b != 0 && b != 255) {
            return Err(Error::InvalidParam("PNG is not two-level".into()));
        }
        BinaryImage::new(w, h, px.iter().map(|&b| u8::from(b == 255)).collect())
    } else {
        Err(Error::MalformedHeader("not a P4 PBM or PNG file".into()))
    }
}

pub fn encode_pbm(img: &BinaryImage) -> Vec<u8> {
    let (w, h) = (img.width(), img.height());
    let stride = w.div_ceil(8);
    let mut out = format!("P4\n{w} {h}\n").into_bytes();
    let header = out.len();
    out.resize(header + stride * h, 0);
    for y in 0..h {
        for x in 0..w {
            if img.get(x, y) == 0 {
                out[header + y * stride + x / 8] |= 0x80 >> (x % 8);
            }
        }
    }
    out
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn encode_pgm(img: &Plane) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.data().iter().map(|&v| quantize(v)));
    out
}

/// Writes a binary image as PBM or PNG, chosen by extension.
pub fn save_binary(img: &BinaryImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format_from_extension(path)? {
        Format::Pbm => encode_pbm(img),
        Format::Png => {
            let px: Vec<u8> = img.data().iter().map(|&b| b * 255).collect();
            encode_png(img.width(), img.height(), &px, png::ColorType::Grayscale)?
        }
        Format::Pgm => encode_pgm(&img.to_plane()),
    };
    write_atomic(path, &bytes)
}

/// Writes a gray image as PGM or PNG, quantized to 8 bits.
pub fn save_gray(img: &Plane, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format_from_extension(path)? {
        Format::Pgm => encode_pgm(img),
        Format::Png => {
            let px: Vec<u8> = img.data().iter().map(|&v| quantize(v)).collect();
            encode_png(img.width(), img.height(), &px, png::ColorType::Grayscale)?
        }
        Format::Pbm => {
            return Err(Error::InvalidParam(
                "gray images cannot be written as PBM".into(),
            ))
        }
    };
    write_atomic(path, &bytes)
}

/// Writes an 8-bit RGB PNG (used by the plot renderer).
pub fn save_rgb_png(width: usize, height: usize, rgb: &[u8], path: impl AsRef<Path>) -> Result<()> {
    if rgb.len() != width * height * 3 {
        return Err(Error::ShapeMismatch {
            expected: width * height * 3,
            actual: rgb.len(),
        });
    }
    let bytes = encode_png(width, height, rgb, png::ColorType::Rgb)?;
    write_atomic(path.as_ref(), &bytes)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}
