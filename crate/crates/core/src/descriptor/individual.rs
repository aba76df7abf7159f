//! Per-texel attributes: shape label, color name, orientation and size.

use serde::{Deserialize, Serialize};

use crate::color::{ColorNamer, NUM_COLOR_NAMES};
use crate::detection::DetectedTexel;
use crate::texel::TexelMask;

/// Orientation histograms use three equal bins over `[0, 180)` degrees.
pub const ORIENTATION_BINS: usize = 3;

/// Masks whose principal variances differ by less than this ratio are
/// treated as having no orientation.
pub const ISOTROPY_RATIO: f64 = 1.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualAttributes {
    /// Fractions of circle, line and polygon texels.
    pub label_hist: [f64; 3],
    pub color_hist: [f64; NUM_COLOR_NAMES],
    pub orientation_hist: [f64; ORIENTATION_BINS],
    /// Mean mask area over canvas area.
    pub mean_size: f64,
}

impl IndividualAttributes {
    pub fn zero() -> Self {
        IndividualAttributes {
            label_hist: [0.0; 3],
            color_hist: [0.0; NUM_COLOR_NAMES],
            orientation_hist: [0.0; ORIENTATION_BINS],
            mean_size: 0.0,
        }
    }
}

/// Principal-axis angle of the mask's second central moments in degrees,
/// folded to `[0, 180)`; measured in pixel coordinates (x right, y down).
/// Near-isotropic and single-pixel masks report 0.
pub fn texel_orientation(mask: &TexelMask) -> f64 {
    if mask.area() < 2 {
        return 0.0;
    }
    let (mu20, mu11, mu02) = crate::detection::shape_moments(mask);
    let mean = (mu20 + mu02) / 2.0;
    let d = (((mu20 - mu02) / 2.0).powi(2) + mu11 * mu11).sqrt();
    let (major, minor) = (mean + d, mean - d);
    if major <= 0.0 || (minor > 0.0 && major / minor < ISOTROPY_RATIO) {
        return 0.0;
    }
    let angle = 0.5 * (2.0 * mu11).atan2(mu20 - mu02);
    fold_degrees(angle.to_degrees())
}

pub(crate) fn fold_degrees(deg: f64) -> f64 {
    let a = deg.rem_euclid(180.0);
    if a >= 180.0 {
        0.0
    } else {
        a
    }
}

pub(crate) fn orientation_bin(deg: f64) -> usize {
    ((fold_degrees(deg) / (180.0 / ORIENTATION_BINS as f64)) as usize).min(ORIENTATION_BINS - 1)
}

pub fn individual_attributes(texels: &[DetectedTexel], canvas_area: f64, namer: &ColorNamer) -> IndividualAttributes {
    if texels.is_empty() {
        return IndividualAttributes::zero();
    }
    let n = texels.len() as f64;
    let mut attrs = IndividualAttributes::zero();
    let mut area_sum = 0.0;
    for t in texels {
        attrs.label_hist[t.shape.index()] += 1.0;
        attrs.color_hist[namer.name(t.mean_color)] += 1.0;
        attrs.orientation_hist[orientation_bin(texel_orientation(&t.mask))] += 1.0;
        area_sum += t.mask.area() as f64;
    }
    for h in attrs
        .label_hist
        .iter_mut()
        .chain(attrs.color_hist.iter_mut())
        .chain(attrs.orientation_hist.iter_mut())
    {
        *h /= n;
    }
    attrs.mean_size = area_sum / n / canvas_area;
    attrs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::default_namer;
    use crate::texel::ShapeKind;

    fn stripe(angle_deg: f64, len: f64, width: f64) -> TexelMask {
        let (s, c) = angle_deg.to_radians().sin_cos();
        let mut px = Vec::new();
        for y in 0..300u32 {
            for x in 0..300u32 {
                let dx = x as f64 + 0.5 - 150.0;
                let dy = y as f64 + 0.5 - 150.0;
                let along = dx * c + dy * s;
                let across = -dx * s + dy * c;
                if along.abs() <= len / 2.0 && across.abs() <= width / 2.0 {
                    px.push((x, y));
                }
            }
        }
        TexelMask::from_pixels(&px).unwrap()
    }

    fn disk(r: f64) -> TexelMask {
        let px: Vec<_> = (0..100u32)
            .flat_map(|y| (0..100u32).map(move |x| (x, y)))
            .filter(|&(x, y)| (x as f64 + 0.5 - 50.0).powi(2) + (y as f64 + 0.5 - 50.0).powi(2) <= r * r)
            .collect();
        TexelMask::from_pixels(&px).unwrap()
    }

    #[test]
    fn orientation_examples() {
        assert_eq!(texel_orientation(&stripe(0.0, 200.0, 6.0)), 0.0);
        let a = texel_orientation(&stripe(45.0, 200.0, 6.0));
        assert!((a - 45.0).abs() <= 1.0, "{a}");
        let a = texel_orientation(&stripe(120.0, 200.0, 6.0));
        assert!((a - 120.0).abs() <= 1.0, "{a}");
        assert!((texel_orientation(&stripe(90.0, 200.0, 6.0)) - 90.0).abs() < 1e-9);
        assert_eq!(texel_orientation(&disk(20.0)), 0.0);
        assert_eq!(texel_orientation(&TexelMask::from_pixels(&[(4, 4)]).unwrap()), 0.0);
    }

    #[test]
    fn bins() {
        assert_eq!(orientation_bin(0.0), 0);
        assert_eq!(orientation_bin(59.9), 0);
        assert_eq!(orientation_bin(60.0), 1);
        assert_eq!(orientation_bin(179.99), 2);
        assert_eq!(orientation_bin(180.0), 0);
        assert_eq!(orientation_bin(-30.0), 2);
    }

    fn texel(shape: ShapeKind, color: [u8; 3], mask: TexelMask) -> DetectedTexel {
        DetectedTexel {
            shape,
            centroid: mask.centroid(),
            mask,
            mean_color: color,
            confidence: 1.0,
        }
    }

    #[test]
    fn red_circles() {
        // 200-pixel masks: a 10 x 20 block is as good as a disk for size
        let px: Vec<_> = (0..20u32).flat_map(|y| (0..10u32).map(move |x| (x, y))).collect();
        let m = TexelMask::from_pixels(&px).unwrap();
        let texels: Vec<_> = (0..1024).map(|_| texel(ShapeKind::Circle, [255, 0, 0], m.clone())).collect();
        let a = individual_attributes(&texels, 1024.0 * 1024.0, default_namer());
        assert_eq!(a.label_hist, [1.0, 0.0, 0.0]);
        let mut red = [0.0; 11];
        red[8] = 1.0;
        assert_eq!(a.color_hist, red);
        assert!((a.mean_size - 200.0 / 1_048_576.0).abs() < 1e-15);
        assert!((a.mean_size - 1.907e-4).abs() < 1e-7);
    }

    #[test]
    fn mixed_labels_and_empty() {
        let m = disk(5.0);
        let mut texels: Vec<_> = (0..50).map(|_| texel(ShapeKind::Circle, [0, 0, 0], m.clone())).collect();
        texels.extend((0..50).map(|_| texel(ShapeKind::Polygon, [0, 0, 0], m.clone())));
        let a = individual_attributes(&texels, 1e4, default_namer());
        assert_eq!(a.label_hist, [0.5, 0.0, 0.5]);
        assert_eq!(individual_attributes(&[], 1e4, default_namer()), IndividualAttributes::zero());
    }
}
