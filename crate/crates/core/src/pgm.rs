//! Minimal ASCII PGM (P2) encoding and parsing.
//!
//! Images are row-major with row 0 at the top. The encoder writes one image
//! row per text line so dumps stay diffable; the parser accepts any
//! whitespace layout and `#` comments, per the format.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// A parsed grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    /// Row-major pixel values, each in `0..=maxval`.
    pub pixels: Vec<u16>,
}

/// Encodes a row-major image as ASCII PGM.
pub fn encode(width: usize, height: usize, maxval: u16, pixels: &[u16]) -> Result<String> {
    if width == 0 || height == 0 {
        return Err(Error::Config("pgm: dimensions must be positive".into()));
    }
    if maxval == 0 {
        return Err(Error::Config("pgm: maxval must be at least 1".into()));
    }
    if pixels.len() != width * height {
        return Err(Error::Data(format!(
            "pgm: expected {} pixels, got {}",
            width * height,
            pixels.len()
        )));
    }
    if let Some(p) = pixels.iter().find(|&&p| p > maxval) {
        return Err(Error::Data(format!("pgm: pixel {p} exceeds maxval {maxval}")));
    }
    let mut out = format!("P2\n{width} {height}\n{maxval}\n");
    for row in pixels.chunks(width) {
        let line: Vec<String> = row.iter().map(|p| p.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    Ok(out)
}

/// Parses ASCII PGM text, tolerating comments and arbitrary whitespace.
pub fn parse(text: &str) -> Result<Pgm> {
    let mut tokens = text
        .lines()
        .map(|line| line.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    let magic = tokens.next().ok_or_else(|| Error::Data("pgm: empty input".into()))?;
    if magic != "P2" {
        return Err(Error::Data(format!("pgm: expected magic P2, got {magic:?}")));
    }
    let mut header = |name: &str| -> Result<usize> {
        tokens
            .next()
            .ok_or_else(|| Error::Data(format!("pgm: missing {name}")))?
            .parse::<usize>()
            .map_err(|_| Error::Data(format!("pgm: invalid {name}")))
    };
    let width = header("width")?;
    let height = header("height")?;
    let maxval = header("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Data("pgm: dimensions must be positive".into()));
    }
    if maxval == 0 || maxval > u16::MAX as usize {
        return Err(Error::Data(format!("pgm: unsupported maxval {maxval}")));
    }
    let mut pixels = Vec::with_capacity(width * height);
    for token in tokens.by_ref() {
        let v = token
            .parse::<usize>()
            .map_err(|_| Error::Data(format!("pgm: invalid pixel {token:?}")))?;
        if v > maxval {
            return Err(Error::Data(format!("pgm: pixel {v} exceeds maxval {maxval}")));
        }
        pixels.push(v as u16);
        if pixels.len() == width * height {
            break;
        }
    }
    if pixels.len() != width * height {
        return Err(Error::Data(format!(
            "pgm: expected {} pixels, got {}",
            width * height,
            pixels.len()
        )));
    }
    if tokens.next().is_some() {
        return Err(Error::Data("pgm: trailing data after pixels".into()));
    }
    Ok(Pgm { width, height, maxval: maxval as u16, pixels })
}

/// Writes an image to `path` in ASCII PGM format.
pub fn write_file(path: &Path, width: usize, height: usize, maxval: u16, pixels: &[u16]) -> Result<()> {
    let text = encode(width, height, maxval, pixels)?;
    fs::write(path, text)?;
    Ok(())
}

/// Reads and parses an ASCII PGM file.
pub fn read_file(path: &Path) -> Result<Pgm> {
    let text = fs::read_to_string(path)?;
    parse(&text)
}
