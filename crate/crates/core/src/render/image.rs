use std::io::Write;
use std::path::Path;

use super::RenderError;

/// 8-bit RGB raster, rows top to bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            pixels: vec![0; width as usize * height as usize * 3],
        }
    }

    pub fn pixel(&self, col: usize, row: usize) -> &[u8] {
        let i = (row * self.width as usize + col) * 3;
        &self.pixels[i..i + 3]
    }

    /// Binary PPM (P6) bytes.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn from_ppm(bytes: &[u8]) -> Result<Self, RenderError> {
        let bad = |m: &str| RenderError::Image(m.to_string());
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not ASCII"))?);
        }
        if fields[0] != "P6" || fields[3] != "255" {
            return Err(bad("expected a P6 image with maxval 255"));
        }
        let width: u32 = fields[1].parse().map_err(|_| bad("bad width"))?;
        let height: u32 = fields[2].parse().map_err(|_| bad("bad height"))?;
        let data = bytes.get(pos + 1..).ok_or_else(|| bad("missing pixel data"))?;
        if data.len() != width as usize * height as usize * 3 {
            return Err(bad("pixel data length does not match dimensions"));
        }
        Ok(Self {
            width,
            height,
            pixels: data.to_vec(),
        })
    }

    pub fn write_ppm(&self, path: &Path) -> Result<(), RenderError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(&self.to_ppm())?;
        f.flush()?;
        Ok(())
    }
}
