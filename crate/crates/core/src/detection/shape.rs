//! Geometric shape measures of binary masks.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use crate::texel::TexelMask;

/// Contour length of the mask's iso-line through pixel centres (marching
/// squares over the zero-padded mask).
pub fn perimeter(mask: &TexelMask) -> f64 {
    let b = mask.bbox();
    let at = |x: i64, y: i64| x >= 0 && y >= 0 && mask.contains(b.x + x as u32, b.y + y as u32) && (x as u32) < b.w && (y as u32) < b.h;
    let mut total = 0.0;
    for y in -1..b.h as i64 {
        for x in -1..b.w as i64 {
            let tl = at(x, y);
            let tr = at(x + 1, y);
            let bl = at(x, y + 1);
            let br = at(x + 1, y + 1);
            total += match (tl as u8) + (tr as u8) + (bl as u8) + (br as u8) {
                1 | 3 => FRAC_1_SQRT_2,
                2 if tl == br => SQRT_2,
                2 => 1.0,
                _ => 0.0,
            };
        }
    }
    total
}

/// `4 pi A / P^2` with `A` the pixel count and `P` from [`perimeter`].
pub fn circularity(mask: &TexelMask) -> f64 {
    let p = perimeter(mask);
    if p <= 0.0 {
        return 1.0;
    }
    4.0 * PI * mask.area() as f64 / (p * p)
}

/// Second central moments `(mu20, mu11, mu02)` of the pixel centres.
pub(crate) fn central_moments(mask: &TexelMask) -> (f64, f64, f64) {
    let c = mask.centroid();
    let (mut m20, mut m11, mut m02, mut n) = (0.0, 0.0, 0.0, 0.0);
    for (x, y) in mask.pixels() {
        let dx = x as f64 + 0.5 - c[0];
        let dy = y as f64 + 0.5 - c[1];
        m20 += dx * dx;
        m11 += dx * dy;
        m02 += dy * dy;
        n += 1.0;
    }
    if n == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    (m20 / n, m11 / n, m02 / n)
}

/// Eigenvalues (major, minor) of the moment matrix.
pub(crate) fn principal_variances(mask: &TexelMask) -> (f64, f64) {
    let (a, b, c) = central_moments(mask);
    let mean = (a + c) / 2.0;
    let d = (((a - c) / 2.0).powi(2) + b * b).sqrt();
    (mean + d, (mean - d).max(0.0))
}

/// Major over minor principal axis length. A single-pixel-thick mask has a
/// pixel-sampling variance floor of 1/12 on its minor axis.
pub fn elongation(mask: &TexelMask) -> f64 {
    let (major, minor) = principal_variances(mask);
    let minor = minor.max(1.0 / 12.0);
    (major.max(minor) / minor).sqrt()
}
