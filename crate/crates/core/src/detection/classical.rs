use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::shape::{circularity, elongation, principal_variances};
use super::{DetectedTexel, TexelDetector};
use crate::color::{default_namer, ColorNamer, NUM_COLOR_NAMES};
use crate::error::{Error, Result};
use crate::illumination::{flatten, FlattenConfig};
use crate::texel::{ShapeKind, TexelMask};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    /// `4 pi A / P^2` at or above which a compact blob is a circle.
    pub circularity_threshold: f64,
    /// Major/minor axis ratio above which a blob is a line.
    pub elongation_threshold: f64,
    /// Components smaller than this are dropped.
    pub min_component_px: usize,
    /// A border-clipped component is dropped when its area (thickness, for
    /// lines) is below this fraction of the typical unclipped one.
    pub min_visible_fraction: f64,
    /// Divide out smooth illumination gradients before naming colors;
    /// `None` names the pixels as they are.
    pub flatten: Option<FlattenConfig>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            circularity_threshold: 0.85,
            elongation_threshold: 8.0,
            min_component_px: 9,
            min_visible_fraction: 0.5,
            flatten: Some(FlattenConfig::default()),
        }
    }
}

/// Color-name segmentation, connected components and geometric shape rules.
///
/// 0. Smooth illumination gradients are divided out (see [`flatten`]).
/// 1. The background is the most frequent color name.
/// 2. Every other pixel is foreground; foreground pixels are grouped into
///    8-connected components of equal color name.
/// 3. Each component is a line if it spans the canvas between opposite
///    borders or its elongation exceeds the threshold, otherwise a circle if
///    circular enough, otherwise a polygon.
/// 4. Components clipped by the canvas border take the majority label of the
///    unclipped components of their color (of all its components when none
///    is unclipped), and are dropped when less than half of a typical texel
///    is visible.
#[derive(Debug, Default)]
pub struct ClassicalDetector {
    pub config: DetectorConfig,
    namer: Option<ColorNamer>,
}

impl ClassicalDetector {
    pub fn new(config: DetectorConfig) -> Self {
        ClassicalDetector { config, namer: None }
    }

    pub fn with_namer(mut self, namer: ColorNamer) -> Self {
        self.namer = Some(namer);
        self
    }

    fn namer(&self) -> &ColorNamer {
        self.namer.as_ref().unwrap_or_else(|| default_namer())
    }
}

struct Component {
    name: u8,
    mask: TexelMask,
    sum: [u64; 3],
    border: Border,
    shape: ShapeKind,
    margin: f64,
}

#[derive(Default, Clone, Copy)]
struct Border {
    left: bool,
    right: bool,
    top: bool,
    bottom: bool,
}

impl Border {
    fn any(&self) -> bool {
        self.left || self.right || self.top || self.bottom
    }

    fn spans(&self) -> bool {
        (self.left && self.right) || (self.top && self.bottom)
    }
}

impl TexelDetector for ClassicalDetector {
    fn detect(&self, image: &RgbImage) -> Result<Vec<DetectedTexel>> {
        let (w, h) = image.dimensions();
        if w.min(h) < 64 {
            return Err(Error::InvalidArgument(format!("image {w}x{h} smaller than 64 px")));
        }
        let flattened = self.config.flatten.as_ref().and_then(|f| flatten(image, f));
        let image = flattened.as_ref().unwrap_or(image);
        let namer = self.namer();
        let names: Vec<u8> = image.pixels().map(|p| namer.name_fast(p.0) as u8).collect();
        let mut counts = [0usize; NUM_COLOR_NAMES];
        for &n in &names {
            counts[n as usize] += 1;
        }
        let background = (0..NUM_COLOR_NAMES).max_by_key(|&i| (counts[i], std::cmp::Reverse(i))).unwrap() as u8;

        let mut components = label_components(image, &names, background, self.config.min_component_px);
        for c in &mut components {
            let (shape, margin) = self.classify(c);
            c.shape = shape;
            c.margin = margin;
        }
        self.resolve_border_components(&mut components);

        Ok(components
            .into_iter()
            .map(|c| {
                let n = c.mask.area() as f64;
                DetectedTexel {
                    shape: c.shape,
                    centroid: c.mask.centroid(),
                    mean_color: c.sum.map(|s| (s as f64 / n).round() as u8),
                    confidence: c.margin.clamp(0.0, 1.0),
                    mask: c.mask,
                }
            })
            .collect())
    }
}

impl ClassicalDetector {
    /// Shape label and a confidence in [0.5, 1] growing with the distance of
    /// the deciding measure from its threshold.
    fn classify(&self, c: &Component) -> (ShapeKind, f64) {
        let cfg = &self.config;
        let conf = |value: f64, threshold: f64| 0.5 + 0.5 * ((value - threshold).abs() / threshold).min(1.0);
        if c.border.spans() {
            return (ShapeKind::Line, 1.0);
        }
        let e = elongation(&c.mask);
        if e > cfg.elongation_threshold {
            return (ShapeKind::Line, conf(e, cfg.elongation_threshold));
        }
        let circ = circularity(&c.mask);
        if circ >= cfg.circularity_threshold {
            (ShapeKind::Circle, conf(circ, cfg.circularity_threshold))
        } else {
            (ShapeKind::Polygon, conf(circ, cfg.circularity_threshold))
        }
    }

    fn resolve_border_components(&self, components: &mut Vec<Component>) {
        let min_frac = self.config.min_visible_fraction;
        let mut keep = vec![true; components.len()];
        for name in 0..NUM_COLOR_NAMES as u8 {
            let idx: Vec<usize> = (0..components.len()).filter(|&i| components[i].name == name).collect();
            let interior: Vec<usize> = idx.iter().copied().filter(|&i| !components[i].border.any()).collect();
            // stripes are all clipped; then every component of the color votes
            let reference: Vec<usize> = if interior.is_empty() {
                idx.clone()
            } else {
                interior.clone()
            };
            if !reference.is_empty() {
                let mut votes = [0usize; 3];
                for &i in &reference {
                    votes[components[i].shape.index()] += 1;
                }
                let majority = ShapeKind::ALL[(0..3).max_by_key(|&k| (votes[k], std::cmp::Reverse(k))).unwrap()];
                let typical = if interior.is_empty() {
                    None
                } else {
                    let mut areas: Vec<usize> = interior.iter().map(|&i| components[i].mask.area()).collect();
                    Some(median(&mut areas))
                };
                for &i in &idx {
                    let c = &mut components[i];
                    if !c.border.any() || c.border.spans() {
                        continue;
                    }
                    if majority != ShapeKind::Line && typical.is_some_and(|t| (c.mask.area() as f64) < min_frac * t) {
                        keep[i] = false;
                    } else if c.shape != majority {
                        c.shape = majority;
                        c.margin = 0.5;
                    }
                }
            }
            // stripes: compare widths of the line components of this color
            let lines: Vec<usize> = idx.iter().copied().filter(|&i| components[i].shape == ShapeKind::Line).collect();
            if lines.len() >= 3 {
                let widths: Vec<f64> = lines.iter().map(|&i| stripe_width(&components[i].mask)).collect();
                let typical = median_f64(&mut widths.clone());
                for (&i, &wdt) in lines.iter().zip(&widths) {
                    if components[i].border.any() && wdt < min_frac * typical {
                        keep[i] = false;
                    }
                }
            }
        }
        let mut k = keep.into_iter();
        components.retain(|_| k.next().unwrap());
    }
}

/// Area over the major-axis length of an (approximately rectangular) mask.
fn stripe_width(mask: &TexelMask) -> f64 {
    let (major, _) = principal_variances(mask);
    let length = (12.0 * major).sqrt().max(1.0);
    mask.area() as f64 / length
}

fn median(v: &mut [usize]) -> f64 {
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

fn median_f64(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// 8-connected components of equal, non-background color name, in raster
/// order of their first pixel.
fn label_components(image: &RgbImage, names: &[u8], background: u8, min_px: usize) -> Vec<Component> {
    let (w, h) = image.dimensions();
    let (wu, hu) = (w as usize, h as usize);
    let mut seen = vec![false; names.len()];
    let mut stack = Vec::new();
    let mut pixels = Vec::new();
    let mut out = Vec::new();
    for start in 0..names.len() {
        if seen[start] || names[start] == background {
            continue;
        }
        let name = names[start];
        seen[start] = true;
        stack.push(start);
        pixels.clear();
        let mut sum = [0u64; 3];
        let mut border = Border::default();
        while let Some(i) = stack.pop() {
            let (x, y) = (i % wu, i / wu);
            pixels.push((x as u32, y as u32));
            let p = image.get_pixel(x as u32, y as u32).0;
            for c in 0..3 {
                sum[c] += p[c] as u64;
            }
            border.left |= x == 0;
            border.right |= x == wu - 1;
            border.top |= y == 0;
            border.bottom |= y == hu - 1;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let nx = x as i64 + dx;
                    let ny = y as i64 + dy;
                    if nx < 0 || ny < 0 || nx >= wu as i64 || ny >= hu as i64 {
                        continue;
                    }
                    let j = ny as usize * wu + nx as usize;
                    if !seen[j] && names[j] == name {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        if pixels.len() < min_px {
            continue;
        }
        out.push(Component {
            name,
            mask: TexelMask::from_pixels(&pixels).expect("non-empty component"),
            sum,
            border,
            shape: ShapeKind::Polygon,
            margin: 0.0,
        });
    }
    out
}
