//! Minimal netpbm support: PGM (P2 write, P2/P5 read) and PPM (P3/P6).

use std::path::Path;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    maxval: u16,
    pixels: Vec<u16>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, maxval: u16, pixels: Vec<u16>) -> Result<Self> {
        if maxval == 0 {
            return Err(Error::param("pgm maxval must be positive"));
        }
        if pixels.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        if pixels.iter().any(|&p| p > maxval) {
            return Err(Error::param("pixel value exceeds maxval"));
        }
        Ok(Self {
            width,
            height,
            maxval,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn maxval(&self) -> u16 {
        self.maxval
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.pixels[y * self.width + x]
    }

    /// Plain (P2) encoding, one image row per line.
    pub fn to_p2(&self) -> String {
        let mut out = format!("P2\n{} {}\n{}\n", self.width, self.height, self.maxval);
        for row in self.pixels.chunks(self.width.max(1)) {
            let line: Vec<String> = row.iter().map(u16::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut header = Header::new(bytes);
        let magic = header.magic()?;
        let width = header.number()?;
        let height = header.number()?;
        let maxval = header.number()?;
        if maxval == 0 || maxval > u16::MAX as usize {
            return Err(Error::parse("pgm", format!("maxval {maxval} out of range")));
        }
        let count = width * height;
        let pixels = match magic {
            b'2' => (0..count)
                .map(|_| header.number().map(|v| v as u16))
                .collect::<Result<Vec<_>>>()?,
            b'5' => {
                let data = header.binary_body()?;
                read_binary_samples(data, count, maxval)?
            }
            other => {
                return Err(Error::parse("pgm", format!("unsupported magic P{}", other as char)));
            }
        };
        Self::new(width, height, maxval as u16, pixels)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_p2()).map_err(|e| Error::io(path, e))
    }
}

/// 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<[u8; 3]>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
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

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.data[y * self.width + x]
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.data
    }

    /// Luma (Rec. 601 weights) as reals in [0, 255], row-major.
    pub fn to_gray(&self) -> Vec<f64> {
        self.data
            .iter()
            .map(|[r, g, b]| 0.299 * *r as f64 + 0.587 * *g as f64 + 0.114 * *b as f64)
            .collect()
    }

    pub fn to_p3(&self) -> String {
        let mut out = format!("P3\n{} {}\n255\n", self.width, self.height);
        for row in self.data.chunks(self.width.max(1)) {
            let line: Vec<String> = row
                .iter()
                .map(|[r, g, b]| format!("{r} {g} {b}"))
                .collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn to_p6(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        for px in &self.data {
            out.extend_from_slice(px);
        }
        out
    }

    /// Decodes P3 or P6. Samples with a maxval other than 255 are rescaled.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut header = Header::new(bytes);
        let magic = header.magic()?;
        let width = header.number()?;
        let height = header.number()?;
        let maxval = header.number()?;
        if maxval == 0 || maxval > u16::MAX as usize {
            return Err(Error::parse("ppm", format!("maxval {maxval} out of range")));
        }
        let count = width * height * 3;
        let samples = match magic {
            b'3' => (0..count)
                .map(|_| header.number().map(|v| v as u16))
                .collect::<Result<Vec<_>>>()?,
            b'6' => {
                let data = header.binary_body()?;
                read_binary_samples(data, count, maxval)?
            }
            other => {
                return Err(Error::parse("ppm", format!("unsupported magic P{}", other as char)));
            }
        };
        if samples.iter().any(|&s| s as usize > maxval) {
            return Err(Error::parse("ppm", "sample exceeds maxval"));
        }
        let scale = |s: u16| -> u8 {
            if maxval == 255 {
                s as u8
            } else {
                ((s as f64) * 255.0 / maxval as f64).round() as u8
            }
        };
        let data = samples
            .chunks_exact(3)
            .map(|c| [scale(c[0]), scale(c[1]), scale(c[2])])
            .collect();
        Self::new(width, height, data)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }

    /// Writes binary P6.
    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_p6()).map_err(|e| Error::io(path, e))
    }
}

fn read_binary_samples(data: &[u8], count: usize, maxval: usize) -> Result<Vec<u16>> {
    let wide = maxval > 255;
    let needed = if wide { count * 2 } else { count };
    if data.len() < needed {
        return Err(Error::parse(
            "netpbm",
            format!("binary body has {} bytes, expected {needed}", data.len()),
        ));
    }
    Ok(if wide {
        data[..needed]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    } else {
        data[..needed].iter().map(|&b| b as u16).collect()
    })
}

/// Tokenizer over the ASCII parts of a netpbm file (handles `#` comments).
struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn magic(&mut self) -> Result<u8> {
        if self.bytes.len() < 2 || self.bytes[0] != b'P' {
            return Err(Error::parse("netpbm", "missing P magic"));
        }
        self.pos = 2;
        Ok(self.bytes[1])
    }

    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::parse("netpbm", format!("expected a number at byte {start}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("ascii digits")
            .parse()
            .map_err(|e| Error::parse("netpbm", format!("{e}")))
    }

    /// Binary data begins after exactly one whitespace byte following maxval.
    fn binary_body(&mut self) -> Result<&'a [u8]> {
        if self.pos >= self.bytes.len() || !self.bytes[self.pos].is_ascii_whitespace() {
            return Err(Error::parse("netpbm", "missing whitespace before binary body"));
        }
        Ok(&self.bytes[self.pos + 1..])
    }
}
