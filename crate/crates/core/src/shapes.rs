//! Binary target masks for the shape-matching loss.
//!
//! All generators center their mask on the grid centre cell (m/2, m/2) and
//! guarantee it is contained in the mask. Box-like shapes (square, triangle
//! base, biped scale) take a size parameter of the grid's parity so the
//! bounding box centers exactly; the circle radius is capped by the distance
//! from the centre to the nearest edge.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pgm;

/// The built-in target shape families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Square,
    Circle,
    Triangle,
    Biped,
    CircularBiped,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 5] =
        [Self::Square, Self::Circle, Self::Triangle, Self::Biped, Self::CircularBiped];

    pub fn name(self) -> &'static str {
        match self {
            Self::Square => "square",
            Self::Circle => "circle",
            Self::Triangle => "triangle",
            Self::Biped => "biped",
            Self::CircularBiped => "circular_biped",
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown shape {s:?}")))
    }
}

/// A binary target mask on an m x m grid, row-major with row 0 on top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetShape {
    m: usize,
    name: String,
    cells: Vec<u8>,
}

impl TargetShape {
    /// Wraps a raw mask; it must be m x m, 0/1 valued, and nonempty.
    pub fn new(m: usize, name: impl Into<String>, cells: Vec<u8>) -> Result<Self> {
        if m < 3 {
            return Err(Error::Config(format!("grid side must be at least 3, got {m}")));
        }
        if cells.len() != m * m {
            return Err(Error::Data(format!(
                "mask must have {} cells, got {}",
                m * m,
                cells.len()
            )));
        }
        if !cells.iter().all(|&c| c <= 1) {
            return Err(Error::Data("mask cells must be 0 or 1".into()));
        }
        if !cells.contains(&1) {
            return Err(Error::Data("mask must contain at least one cell".into()));
        }
        Ok(Self { m, name: name.into(), cells })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Row-major 0/1 mask.
    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.m + j] == 1
    }

    pub fn cell_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c == 1).count()
    }

    /// ASCII PGM rendering with maxval 1.
    pub fn to_pgm(&self) -> String {
        let px: Vec<u16> = self.cells.iter().map(|&c| c as u16).collect();
        pgm::encode(self.m, self.m, 1, &px).expect("mask dimensions are valid")
    }

    /// Reads a mask from PGM text; any nonzero pixel counts as set.
    pub fn from_pgm_text(text: &str, name: impl Into<String>) -> Result<Self> {
        let img = pgm::parse(text)?;
        if img.width != img.height {
            return Err(Error::Data(format!(
                "mask must be square, got {}x{}",
                img.width, img.height
            )));
        }
        let cells = img.pixels.iter().map(|&p| (p != 0) as u8).collect();
        Self::new(img.width, name, cells)
    }

    /// Reads a mask from a PGM file, named after the file stem.
    pub fn from_pgm_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let name = path.file_stem().map_or_else(|| "custom".into(), |s| s.to_string_lossy());
        Self::from_pgm_text(&text, name)
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_pgm())?;
        Ok(())
    }
}

fn check_box_scale(m: usize, scale: usize, what: &str) -> Result<()> {
    if m < 3 {
        return Err(Error::Config(format!("grid side must be at least 3, got {m}")));
    }
    if scale < 1 || scale > m {
        return Err(Error::Config(format!("{what} must lie in 1..={m}, got {scale}")));
    }
    if scale % 2 != m % 2 {
        return Err(Error::Config(format!(
            "{what} must have the grid's parity, got {scale} on side {m}"
        )));
    }
    Ok(())
}

/// Axis-aligned side x side square centered on the grid.
pub fn make_square(m: usize, side: usize) -> Result<TargetShape> {
    check_box_scale(m, side, "side")?;
    let top = (m - side) / 2;
    let mut cells = vec![0u8; m * m];
    for i in top..top + side {
        for j in top..top + side {
            cells[i * m + j] = 1;
        }
    }
    TargetShape::new(m, ShapeKind::Square.name(), cells)
}

/// Disc of cells within Euclidean distance radius + 1/2 of the centre cell,
/// compared in integers as di^2 + dj^2 <= radius^2 + radius.
pub fn make_circle(m: usize, radius: usize) -> Result<TargetShape> {
    if m < 3 {
        return Err(Error::Config(format!("grid side must be at least 3, got {m}")));
    }
    let c = m / 2;
    let max_radius = c.min(m - 1 - c);
    if radius < 1 || radius > max_radius {
        return Err(Error::Config(format!(
            "radius must lie in 1..={max_radius} on side {m}, got {radius}"
        )));
    }
    let bound = (radius * radius + radius) as i64;
    let mut cells = vec![0u8; m * m];
    for i in 0..m {
        for j in 0..m {
            let di = i as i64 - c as i64;
            let dj = j as i64 - c as i64;
            if di * di + dj * dj <= bound {
                cells[i * m + j] = 1;
            }
        }
    }
    TargetShape::new(m, ShapeKind::Circle.name(), cells)
}

/// Isosceles triangle of height (base + 1) / 2: row k below the apex spans
/// columns c-k ..= c+k, so the bottom row is base wide when base is odd.
pub fn make_triangle(m: usize, base: usize) -> Result<TargetShape> {
    check_box_scale(m, base, "base")?;
    let c = m / 2;
    let h = (base + 1) / 2;
    let top = c - h / 2;
    let mut cells = vec![0u8; m * m];
    for k in 0..h {
        for j in c - k..=c + k {
            cells[(top + k) * m + j] = 1;
        }
    }
    TargetShape::new(m, ShapeKind::Triangle.name(), cells)
}

/// Shared biped layout inside a scale x scale box at the grid centre: torso
/// over the top scale/2 + 1 rows (so the centre cell is torso), two legs of
/// equal width below, split by a centered gap of roughly scale/5 columns.
struct BipedFrame {
    top: usize,
    torso_rows: usize,
    leg_width: usize,
}

fn biped_frame(m: usize, scale: usize) -> Result<BipedFrame> {
    check_box_scale(m, scale, "scale")?;
    let mut gap = (scale / 5).max(1);
    if (scale - gap) % 2 == 1 {
        gap += 1; // keep the legs the same width
    }
    Ok(BipedFrame {
        top: m / 2 - scale / 2,
        torso_rows: (scale / 2 + 1).min(scale),
        leg_width: scale.saturating_sub(gap) / 2,
    })
}

fn biped_legs(frame: &BipedFrame, m: usize, scale: usize, cells: &mut [u8]) {
    for u in frame.torso_rows..scale {
        for v in 0..frame.leg_width {
            cells[(frame.top + u) * m + frame.top + v] = 1;
            cells[(frame.top + u) * m + frame.top + scale - 1 - v] = 1;
        }
    }
}

/// Biped with a rectangular torso over two legs.
pub fn make_biped(m: usize, scale: usize) -> Result<TargetShape> {
    let frame = biped_frame(m, scale)?;
    let mut cells = vec![0u8; m * m];
    for u in 0..frame.torso_rows {
        for v in 0..scale {
            cells[(frame.top + u) * m + frame.top + v] = 1;
        }
    }
    biped_legs(&frame, m, scale, &mut cells);
    TargetShape::new(m, ShapeKind::Biped.name(), cells)
}

/// Biped whose torso is the upper half-disc inscribed in the box, centered
/// on the bottom torso row.
pub fn make_circular_biped(m: usize, scale: usize) -> Result<TargetShape> {
    let frame = biped_frame(m, scale)?;
    let cy = (frame.torso_rows - 1) as f64;
    let cx = (scale - 1) as f64 / 2.0;
    let r = (scale - 1) as f64 / 2.0 + 0.5;
    let mut cells = vec![0u8; m * m];
    for u in 0..frame.torso_rows {
        for v in 0..scale {
            let du = u as f64 - cy;
            let dv = v as f64 - cx;
            if du * du + dv * dv <= r * r {
                cells[(frame.top + u) * m + frame.top + v] = 1;
            }
        }
    }
    biped_legs(&frame, m, scale, &mut cells);
    TargetShape::new(m, ShapeKind::CircularBiped.name(), cells)
}

/// Default size parameter: about 0.6 m for box shapes, adjusted to the
/// grid's parity, and about 0.28 m for the circle radius.
pub fn default_param(kind: ShapeKind, m: usize) -> usize {
    match kind {
        ShapeKind::Circle => {
            let c = m / 2;
            let max_radius = if m >= 3 { c.min(m - 1 - c).max(1) } else { 1 };
            ((0.28 * m as f64).round() as usize).clamp(1, max_radius)
        }
        _ => {
            let mut s = (0.6 * m as f64).round() as usize;
            if s % 2 != m % 2 {
                s += 1;
            }
            if s > m {
                s -= 2;
            }
            s.max(1)
        }
    }
}

/// Builds a shape of the given kind, falling back to `default_param`.
pub fn make(kind: ShapeKind, m: usize, param: Option<usize>) -> Result<TargetShape> {
    let p = param.unwrap_or_else(|| default_param(kind, m));
    match kind {
        ShapeKind::Square => make_square(m, p),
        ShapeKind::Circle => make_circle(m, p),
        ShapeKind::Triangle => make_triangle(m, p),
        ShapeKind::Biped => make_biped(m, p),
        ShapeKind::CircularBiped => make_circular_biped(m, p),
    }
}
