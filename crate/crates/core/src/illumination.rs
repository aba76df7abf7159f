//! Removal of smooth multiplicative illumination gradients.
//!
//! The log luminance of a stationary texture is its reflectance plus a slowly
//! varying log gain. The gain is estimated by a robust low-order polynomial
//! fit to per-cell medians of the log luminance; cells whose median flips
//! between background and texel colors are down-weighted as outliers.

use image::RgbImage;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlattenConfig {
    /// Cells per image side.
    pub cells: usize,
    /// Total polynomial degree of the log-gain surface.
    pub degree: usize,
    /// Images whose fitted gain varies by less than this ratio are left alone.
    pub min_gain_ratio: f64,
    /// Stronger variation is taken to be scene content rather than lighting.
    pub max_gain_ratio: f64,
}

impl Default for FlattenConfig {
    fn default() -> Self {
        FlattenConfig {
            cells: 16,
            degree: 4,
            min_gain_ratio: 1.15,
            max_gain_ratio: 2.6,
        }
    }
}

/// Fitted log-gain surface over normalized coordinates in [-1, 1]².
#[derive(Debug, Clone, PartialEq)]
pub struct GainField {
    degree: usize,
    coeffs: Vec<f64>,
    /// Log gain mapped to 1; the lowest fitted value on the cell grid.
    base: f64,
    /// Max over min fitted gain on the cell grid.
    pub ratio: f64,
}

impl GainField {
    /// Multiplicative gain at pixel `(x, y)` of a `w`×`h` image, ≥ 1 on the
    /// cell grid.
    pub fn gain(&self, x: f64, y: f64, w: u32, h: u32) -> f64 {
        let (u, v) = normalized(x, y, w, h);
        (eval(&self.coeffs, self.degree, u, v) - self.base).exp()
    }
}

fn normalized(x: f64, y: f64, w: u32, h: u32) -> (f64, f64) {
    (2.0 * x / w as f64 - 1.0, 2.0 * y / h as f64 - 1.0)
}

fn monomials(degree: usize, u: f64, v: f64, out: &mut Vec<f64>) {
    out.clear();
    for total in 0..=degree {
        for j in 0..=total {
            out.push(u.powi((total - j) as i32) * v.powi(j as i32));
        }
    }
}

fn eval(coeffs: &[f64], degree: usize, u: f64, v: f64) -> f64 {
    let mut m = Vec::with_capacity(coeffs.len());
    monomials(degree, u, v, &mut m);
    m.iter().zip(coeffs).map(|(a, b)| a * b).sum()
}

/// `ln(1 + mean channel)`, indexed by the channel sum.
fn log_table() -> Vec<f64> {
    (0..=765).map(|s| (1.0 + s as f64 / 3.0).ln()).collect()
}

/// Estimates the gain surface of `image`.
pub fn estimate_gain(image: &RgbImage, config: &FlattenConfig) -> GainField {
    let (w, h) = image.dimensions();
    let cells = config.cells.clamp(2, w.min(h) as usize);
    let mut samples: Vec<(f64, f64, f64)> = Vec::with_capacity(cells * cells);
    let mut values = Vec::new();
    let table = log_table();
    for cy in 0..cells {
        let (y0, y1) = (cy * h as usize / cells, (cy + 1) * h as usize / cells);
        for cx in 0..cells {
            let (x0, x1) = (cx * w as usize / cells, (cx + 1) * w as usize / cells);
            values.clear();
            for y in y0..y1 {
                for x in x0..x1 {
                    let p = image.get_pixel(x as u32, y as u32).0;
                    values.push(table[p[0] as usize + p[1] as usize + p[2] as usize]);
                }
            }
            let mid = values.len() / 2;
            let (_, m, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
            let (u, v) = normalized((x0 + x1) as f64 / 2.0, (y0 + y1) as f64 / 2.0, w, h);
            samples.push((u, v, *m));
        }
    }
    let coeffs = robust_fit(&samples, config.degree);
    let fitted: Vec<f64> = samples.iter().map(|&(u, v, _)| eval(&coeffs, config.degree, u, v)).collect();
    let lo = fitted.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = fitted.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    GainField {
        degree: config.degree,
        coeffs,
        base: lo,
        ratio: (hi - lo).exp(),
    }
}

/// Iteratively reweighted least squares with Tukey biweights.
fn robust_fit(samples: &[(f64, f64, f64)], degree: usize) -> Vec<f64> {
    let mut weights = vec![1.0; samples.len()];
    let mut coeffs = Vec::new();
    let mut m = Vec::new();
    for _ in 0..8 {
        let n = (degree + 1) * (degree + 2) / 2;
        let mut ata = vec![0.0; n * n];
        let mut atb = vec![0.0; n];
        for (&(u, v, z), &wt) in samples.iter().zip(&weights) {
            if wt == 0.0 {
                continue;
            }
            monomials(degree, u, v, &mut m);
            for i in 0..n {
                atb[i] += wt * m[i] * z;
                for j in 0..n {
                    ata[i * n + j] += wt * m[i] * m[j];
                }
            }
        }
        // a small ridge keeps the system solvable when outliers empty a region
        for i in 0..n {
            ata[i * n + i] += 1e-6;
        }
        coeffs = solve(ata, atb);
        let residuals: Vec<f64> = samples.iter().map(|&(u, v, z)| (z - eval(&coeffs, degree, u, v)).abs()).collect();
        let mut sorted = residuals.clone();
        let mid = sorted.len() / 2;
        let mad = *sorted.select_nth_unstable_by(mid, f64::total_cmp).1;
        let scale = 4.685 * (1.4826 * mad).max(0.02);
        for (wt, r) in weights.iter_mut().zip(&residuals) {
            let t = *r / scale;
            *wt = if t < 1.0 { (1.0 - t * t).powi(2) } else { 0.0 };
        }
    }
    coeffs
}

/// Solves the symmetric positive definite system by Gaussian elimination
/// with partial pivoting.
fn solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs())).unwrap();
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        let d = a[col * n + col];
        if d.abs() < 1e-300 {
            continue;
        }
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row * n + k] * x[k]).sum();
        let d = a[row * n + row];
        x[row] = if d.abs() < 1e-300 { 0.0 } else { (b[row] - s) / d };
    }
    x
}

/// Divides out the estimated gain. Returns `None` when the gain is flat
/// enough, or too strong to be lighting, and the image is used as is.
pub fn flatten(image: &RgbImage, config: &FlattenConfig) -> Option<RgbImage> {
    let field = estimate_gain(image, config);
    if field.ratio < config.min_gain_ratio || field.ratio > config.max_gain_ratio {
        return None;
    }
    let (w, h) = image.dimensions();
    let mut out = image.clone();
    let d = field.degree;
    let us: Vec<f64> = (0..w).map(|x| normalized(x as f64 + 0.5, 0.0, w, h).0).collect();
    // coefficient of u^i for the current row
    let mut row = vec![0.0; d + 1];
    for y in 0..h {
        let v = normalized(0.0, y as f64 + 0.5, w, h).1;
        row.iter_mut().for_each(|r| *r = 0.0);
        let mut k = 0;
        for total in 0..=d {
            for j in 0..=total {
                row[total - j] += field.coeffs[k] * v.powi(j as i32);
                k += 1;
            }
        }
        for (x, &u) in us.iter().enumerate() {
            let log_gain = row.iter().rev().fold(0.0, |acc, &c| acc * u + c) - field.base;
            let inv = (-log_gain).exp().min(1e3);
            let p = out.get_pixel_mut(x as u32, y);
            for c in &mut p.0 {
                *c = (*c as f64 * inv).round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    Some(out)
}
