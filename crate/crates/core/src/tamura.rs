//! Tamura texture features: coarseness, contrast, directionality and,
//! optionally, line-likeness, regularity and roughness.

use std::f64::consts::{FRAC_PI_2, PI};

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PRIMARY_COLUMNS: [&str; 3] = ["coarseness", "contrast", "directionality"];
pub const EXTENDED_COLUMNS: [&str; 6] = ["coarseness", "contrast", "directionality", "line_likeness", "regularity", "roughness"];

const MAX_SCALE_EXP: u32 = 5;
const TIE_TOLERANCE: f64 = 1e-9;
const DIRECTION_BINS: usize = 16;
/// Line-likeness co-occurrence distance in pixels.
const LINE_DISTANCE: i64 = 4;
/// Regularity uses a grid of this many sub-images per side.
const REGULARITY_GRID: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TamuraConfig {
    /// Also compute line-likeness, regularity and roughness.
    pub extended: bool,
    /// Minimum gradient magnitude (grey levels) counted by the direction
    /// histogram.
    pub edge_threshold: f64,
}

impl Default for TamuraConfig {
    fn default() -> Self {
        TamuraConfig {
            extended: false,
            edge_threshold: 12.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TamuraDescriptor {
    pub coarseness: f64,
    pub contrast: f64,
    pub directionality: f64,
    /// `[line_likeness, regularity, roughness]` when enabled.
    pub extended: Option<[f64; 3]>,
}

impl TamuraDescriptor {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.coarseness, self.contrast, self.directionality];
        if let Some(e) = self.extended {
            v.extend_from_slice(&e);
        }
        v
    }

    pub fn columns(&self) -> &'static [&'static str] {
        if self.extended.is_some() {
            &EXTENDED_COLUMNS
        } else {
            &PRIMARY_COLUMNS
        }
    }
}

/// Grey-level image in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gray {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Gray {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), width * height);
        Gray { width, height, data }
    }

    /// ITU-R BT.601 luma.
    pub fn from_rgb(image: &RgbImage) -> Self {
        let data = image
            .pixels()
            .map(|p| 0.299 * p.0[0] as f64 + 0.587 * p.0[1] as f64 + 0.114 * p.0[2] as f64)
            .collect();
        Gray::new(image.width() as usize, image.height() as usize, data)
    }

    fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Gray {
        let mut data = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            data.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x0 + w]);
        }
        Gray::new(w, h, data)
    }
}

pub fn tamura(image: &RgbImage) -> Result<TamuraDescriptor> {
    tamura_with(image, &TamuraConfig::default())
}

pub fn tamura_with(image: &RgbImage, config: &TamuraConfig) -> Result<TamuraDescriptor> {
    if image.width() < 64 || image.height() < 64 {
        return Err(Error::InvalidArgument(format!(
            "Tamura features need at least 64x64 pixels, got {}x{}",
            image.width(),
            image.height()
        )));
    }
    Ok(tamura_gray(&Gray::from_rgb(image), config))
}

pub fn tamura_gray(g: &Gray, config: &TamuraConfig) -> TamuraDescriptor {
    let coarseness = coarseness(g);
    let contrast = contrast(g);
    let directionality = directionality(g, config.edge_threshold);
    let extended = config.extended.then(|| {
        [
            line_likeness(g, config.edge_threshold),
            regularity(g, config.edge_threshold),
            coarseness + contrast,
        ]
    });
    TamuraDescriptor {
        coarseness,
        contrast,
        directionality,
        extended,
    }
}

fn is_constant(g: &Gray) -> bool {
    g.data.iter().all(|&v| v == g.data[0])
}

/// Summed-area table with one row and column of zero padding.
struct Integral {
    w: usize,
    h: usize,
    sums: Vec<f64>,
}

impl Integral {
    fn new(g: &Gray) -> Self {
        let (w, h) = (g.width, g.height);
        let mut sums = vec![0.0; (w + 1) * (h + 1)];
        for y in 0..h {
            let mut row = 0.0;
            for x in 0..w {
                row += g.data[y * w + x];
                sums[(y + 1) * (w + 1) + x + 1] = sums[y * (w + 1) + x + 1] + row;
            }
        }
        Integral { w, h, sums }
    }

    /// Mean over the `size` x `size` window starting at `(x - size/2,
    /// y - size/2)`, clipped to the image.
    fn window_mean(&self, x: i64, y: i64, size: i64) -> f64 {
        let half = size / 2;
        let x0 = (x - half).clamp(0, self.w as i64) as usize;
        let x1 = (x - half + size).clamp(0, self.w as i64) as usize;
        let y0 = (y - half).clamp(0, self.h as i64) as usize;
        let y1 = (y - half + size).clamp(0, self.h as i64) as usize;
        let area = ((x1 - x0) * (y1 - y0)) as f64;
        if area == 0.0 {
            return 0.0;
        }
        let s = |x: usize, y: usize| self.sums[y * (self.w + 1) + x];
        (s(x1, y1) - s(x0, y1) - s(x1, y0) + s(x0, y0)) / area
    }
}

/// Mean over pixels of the best window size `2^k`, `k = 1..=5`: the scale
/// with the largest difference between opposite neighbouring windows.
/// Ties keep the larger scale, pixels without any difference the smallest;
/// a constant image scores the largest scale.
pub fn coarseness(g: &Gray) -> f64 {
    if is_constant(g) {
        return (1u32 << MAX_SCALE_EXP) as f64;
    }
    let integral = Integral::new(g);
    let (w, h) = (g.width as i64, g.height as i64);
    // Window means per scale, one image each.
    let means: Vec<Vec<f64>> = (1..=MAX_SCALE_EXP)
        .map(|k| {
            let size = 1i64 << k;
            let mut m = Vec::with_capacity(g.width * g.height);
            for y in 0..h {
                for x in 0..w {
                    m.push(integral.window_mean(x, y, size));
                }
            }
            m
        })
        .collect();
    let at = |m: &[f64], x: i64, y: i64| m[(y.clamp(0, h - 1) * w + x.clamp(0, w - 1)) as usize];
    // Pixels whose largest windows fit inside the image; small images fall
    // back to every pixel with clamped neighbours.
    let margin = 1i64 << MAX_SCALE_EXP;
    let range = |n: i64| if n > 2 * margin { margin..n - margin + 1 } else { 0..n };
    let mut total = 0.0;
    let mut count = 0usize;
    for y in range(h) {
        for x in range(w) {
            let mut e = [0.0; MAX_SCALE_EXP as usize];
            for (ki, m) in means.iter().enumerate() {
                let off = 1i64 << ki;
                let eh = (at(m, x + off, y) - at(m, x - off, y)).abs();
                let ev = (at(m, x, y + off) - at(m, x, y - off)).abs();
                e[ki] = eh.max(ev);
            }
            let e_max = e.iter().cloned().fold(0.0, f64::max);
            let k = if e_max <= 1e-12 {
                1
            } else {
                (1..=MAX_SCALE_EXP).rev().find(|&k| e[k as usize - 1] >= (1.0 - TIE_TOLERANCE) * e_max).unwrap()
            };
            total += (1u32 << k) as f64;
            count += 1;
        }
    }
    total / count as f64
}

/// `sigma / kurtosis^(1/4)`; 0 for a constant image.
pub fn contrast(g: &Gray) -> f64 {
    let n = g.data.len() as f64;
    let mean = g.data.iter().sum::<f64>() / n;
    let var = g.data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 {
        return 0.0;
    }
    let m4 = g.data.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let kurtosis = m4 / (var * var);
    var.sqrt() / kurtosis.powf(0.25)
}

/// Prewitt gradient `(dh, dv)` at an interior pixel, in grey levels.
fn prewitt(g: &Gray, x: usize, y: usize) -> (f64, f64) {
    let w = g.width;
    let p = |x: usize, y: usize| g.data[y * w + x];
    let mut dh = 0.0;
    let mut dv = 0.0;
    for d in 0..3 {
        dh += p(x + 1, y + d - 1) - p(x - 1, y + d - 1);
        dv += p(x + d - 1, y + 1) - p(x + d - 1, y - 1);
    }
    (dh / 3.0, dv / 3.0)
}

/// Calls `f(x, y, theta)` for interior pixels whose gradient magnitude
/// reaches `threshold`; `theta` is the edge direction in `[0, pi)`.
fn for_each_edge(g: &Gray, threshold: f64, mut f: impl FnMut(usize, usize, f64)) {
    for y in 1..g.height.saturating_sub(1) {
        for x in 1..g.width.saturating_sub(1) {
            let (dh, dv) = prewitt(g, x, y);
            if (dh.abs() + dv.abs()) / 2.0 >= threshold {
                f(x, y, (dv.atan2(dh) + FRAC_PI_2).rem_euclid(PI));
            }
        }
    }
}

fn direction_bin(theta: f64) -> usize {
    ((theta / PI * DIRECTION_BINS as f64) as usize).min(DIRECTION_BINS - 1)
}

/// Normalized histogram of edge directions, or `None` without edges.
fn direction_histogram(g: &Gray, threshold: f64) -> Option<[f64; DIRECTION_BINS]> {
    let mut hist = [0.0; DIRECTION_BINS];
    let mut total = 0.0;
    for_each_edge(g, threshold, |_, _, theta| {
        hist[direction_bin(theta)] += 1.0;
        total += 1.0;
    });
    if total == 0.0 {
        return None;
    }
    for h in &mut hist {
        *h /= total;
    }
    Some(hist)
}

/// One minus the normalized second moment of the direction histogram about
/// its peak (circular differences). A single sharp direction scores 1, a
/// flat histogram 0; images without edges score 0.
pub fn directionality(g: &Gray, threshold: f64) -> f64 {
    let Some(hist) = direction_histogram(g, threshold) else {
        return 0.0;
    };
    let peak = (0..DIRECTION_BINS).fold(0, |best, b| if hist[b] > hist[best] { b } else { best });
    let step = PI / DIRECTION_BINS as f64;
    let spread: f64 = (0..DIRECTION_BINS)
        .map(|b| {
            let d = (b as f64 - peak as f64) * step;
            let d = (d + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2;
            d * d * hist[b]
        })
        .sum();
    let uniform = FRAC_PI_2 * FRAC_PI_2 / 3.0;
    (1.0 - spread / uniform).clamp(0.0, 1.0)
}

/// Mean cosine of direction differences between edge pixels and the edge
/// pixel `LINE_DISTANCE` away along the edge; 1 for straight lines.
pub fn line_likeness(g: &Gray, threshold: f64) -> f64 {
    // Edge direction per pixel, NaN where the gradient is weak.
    let mut dir = vec![f64::NAN; g.width * g.height];
    for_each_edge(g, threshold, |x, y, theta| dir[y * g.width + x] = theta);
    let (mut num, mut den) = (0.0, 0.0);
    for y in 0..g.height {
        for x in 0..g.width {
            let theta = dir[y * g.width + x];
            if theta.is_nan() {
                continue;
            }
            let tx = x as i64 + (theta.cos() * LINE_DISTANCE as f64).round() as i64;
            let ty = y as i64 + (theta.sin() * LINE_DISTANCE as f64).round() as i64;
            if tx < 0 || ty < 0 || tx >= g.width as i64 || ty >= g.height as i64 {
                continue;
            }
            let t2 = dir[ty as usize * g.width + tx as usize];
            if t2.is_nan() {
                continue;
            }
            let diff = direction_bin(theta) as f64 - direction_bin(t2) as f64;
            num += (diff * 2.0 * PI / DIRECTION_BINS as f64).cos();
            den += 1.0;
        }
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// One minus a quarter of the summed coefficients of variation of
/// coarseness, contrast, directionality and line-likeness over a grid of
/// sub-images, clamped to `[0, 1]`.
pub fn regularity(g: &Gray, threshold: f64) -> f64 {
    let (sw, sh) = (g.width / REGULARITY_GRID, g.height / REGULARITY_GRID);
    if sw < 8 || sh < 8 {
        return 0.0;
    }
    let mut features: [Vec<f64>; 4] = Default::default();
    for j in 0..REGULARITY_GRID {
        for i in 0..REGULARITY_GRID {
            let sub = g.crop(i * sw, j * sh, sw, sh);
            features[0].push(coarseness(&sub));
            features[1].push(contrast(&sub));
            features[2].push(directionality(&sub, threshold));
            features[3].push(line_likeness(&sub, threshold));
        }
    }
    let variation: f64 = features
        .iter()
        .map(|f| {
            let n = f.len() as f64;
            let mean = f.iter().sum::<f64>() / n;
            let sd = (f.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            if mean.abs() > 1e-12 {
                sd / mean.abs()
            } else {
                0.0
            }
        })
        .sum();
    (1.0 - 0.25 * variation).clamp(0.0, 1.0)
}
