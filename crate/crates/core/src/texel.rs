//! Texel-level types shared by synthesis, detection and description.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape label of a texel. The declaration order is the order of the label
/// histogram in the descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Circle,
    Line,
    Polygon,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 3] = [ShapeKind::Circle, ShapeKind::Line, ShapeKind::Polygon];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ShapeKind::Circle => "circle",
            ShapeKind::Line => "line",
            ShapeKind::Polygon => "polygon",
        }
    }
}

impl std::fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Axis-aligned pixel box `[x, y, w, h]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[u32; 4]", into = "[u32; 4]")]
pub struct BBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl From<[u32; 4]> for BBox {
    fn from([x, y, w, h]: [u32; 4]) -> Self {
        BBox { x, y, w, h }
    }
}

impl From<BBox> for [u32; 4] {
    fn from(b: BBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

impl BBox {
    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    /// True if the continuous point lies in the box's pixel extent.
    pub fn contains_point(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x as f64
            && p[0] <= (self.x + self.w) as f64
            && p[1] >= self.y as f64
            && p[1] <= (self.y + self.h) as f64
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = (self.x + self.w).min(other.x + other.w);
        let y1 = (self.y + self.h).min(other.y + other.h);
        if x1 <= x0 || y1 <= y0 {
            return 0.0;
        }
        let inter = (x1 - x0) as f64 * (y1 - y0) as f64;
        let union = self.area() as f64 + other.area() as f64 - inter;
        inter / union
    }
}

/// Binary pixel mask stored row-major over its bounding box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TexelMask {
    bbox: BBox,
    bits: Vec<bool>,
}

impl TexelMask {
    /// Builds the tightest mask around a set of pixel coordinates.
    pub fn from_pixels(pixels: &[(u32, u32)]) -> Option<Self> {
        let (&(fx, fy), rest) = pixels.split_first()?;
        let (mut x0, mut y0, mut x1, mut y1) = (fx, fy, fx, fy);
        for &(x, y) in rest {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        let bbox = BBox {
            x: x0,
            y: y0,
            w: x1 - x0 + 1,
            h: y1 - y0 + 1,
        };
        let mut bits = vec![false; bbox.area() as usize];
        for &(x, y) in pixels {
            bits[((y - y0) * bbox.w + (x - x0)) as usize] = true;
        }
        Some(TexelMask { bbox, bits })
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        let b = &self.bbox;
        if x < b.x || y < b.y || x >= b.x + b.w || y >= b.y + b.h {
            return false;
        }
        self.bits[((y - b.y) * b.w + (x - b.x)) as usize]
    }

    /// Absolute coordinates of the mask pixels, row-major.
    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let b = self.bbox;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(move |(i, _)| (b.x + i as u32 % b.w, b.y + i as u32 / b.w))
    }

    /// Mean of pixel centres, i.e. `(x + 0.5, y + 0.5)`.
    pub fn centroid(&self) -> [f64; 2] {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for (x, y) in self.pixels() {
            sx += x as f64 + 0.5;
            sy += y as f64 + 0.5;
            n += 1;
        }
        if n == 0 {
            return [f64::NAN, f64::NAN];
        }
        [sx / n as f64, sy / n as f64]
    }

    /// Run lengths over the bbox in row-major order, alternating
    /// off/on and starting with an off-run (which may be zero).
    pub fn to_rle(&self) -> Vec<u32> {
        let mut runs = Vec::new();
        let mut current = false;
        let mut len = 0u32;
        for &b in &self.bits {
            if b == current {
                len += 1;
            } else {
                runs.push(len);
                current = b;
                len = 1;
            }
        }
        runs.push(len);
        runs
    }

    pub fn from_rle(bbox: BBox, runs: &[u32]) -> Result<Self> {
        let total: u64 = runs.iter().map(|&r| r as u64).sum();
        if total != bbox.area() {
            return Err(Error::InvalidArgument(format!(
                "mask runs cover {total} pixels but bbox holds {}",
                bbox.area()
            )));
        }
        let mut bits = Vec::with_capacity(bbox.area() as usize);
        for (i, &r) in runs.iter().enumerate() {
            bits.extend(std::iter::repeat_n(i % 2 == 1, r as usize));
        }
        Ok(TexelMask { bbox, bits })
    }
}
