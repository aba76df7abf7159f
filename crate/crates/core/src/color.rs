//! Nearest-prototype naming onto the 11 basic color terms.
//!
//! Colors are compared in CIELAB (D65) by Euclidean distance. The prototype
//! table can be replaced by a JSON file mapping each term to an sRGB triple.

use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_COLOR_NAMES: usize = 11;

pub const COLOR_NAMES: [&str; NUM_COLOR_NAMES] = [
    "black", "blue", "brown", "grey", "green", "orange", "pink", "purple", "red", "white", "yellow",
];

pub type Rgb = [u8; 3];

const DEFAULT_PROTOTYPES: [Rgb; NUM_COLOR_NAMES] = [
    [0, 0, 0],
    [30, 70, 200],
    [139, 69, 19],
    [128, 128, 128],
    [0, 160, 0],
    [255, 140, 0],
    [255, 160, 200],
    [128, 0, 128],
    [255, 0, 0],
    [255, 255, 255],
    [255, 255, 0],
];

/// On-disk form of a prototype table: `{"black": [0,0,0], ...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrototypeTable(pub std::collections::BTreeMap<String, Rgb>);

/// Maps sRGB colors to one of [`COLOR_NAMES`].
pub struct ColorNamer {
    prototypes: [Rgb; NUM_COLOR_NAMES],
    lab: [[f64; 3]; NUM_COLOR_NAMES],
    lut: OnceLock<Box<[u8]>>,
}

impl std::fmt::Debug for ColorNamer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ColorNamer")
            .field("prototypes", &self.prototypes)
            .finish()
    }
}

impl Default for ColorNamer {
    fn default() -> Self {
        Self::with_prototypes(DEFAULT_PROTOTYPES)
    }
}

impl ColorNamer {
    pub fn with_prototypes(prototypes: [Rgb; NUM_COLOR_NAMES]) -> Self {
        ColorNamer {
            prototypes,
            lab: prototypes.map(srgb_to_lab),
            lut: OnceLock::new(),
        }
    }

    pub fn from_table(table: &PrototypeTable) -> Result<Self> {
        let mut prototypes = [[0u8; 3]; NUM_COLOR_NAMES];
        for (i, name) in COLOR_NAMES.iter().enumerate() {
            prototypes[i] = *table.0.get(*name).ok_or_else(|| {
                Error::InvalidArgument(format!("prototype table lacks `{name}`"))
            })?;
        }
        if let Some(extra) = table.0.keys().find(|k| !COLOR_NAMES.contains(&k.as_str())) {
            return Err(Error::InvalidArgument(format!(
                "unknown color term `{extra}` in prototype table"
            )));
        }
        Ok(Self::with_prototypes(prototypes))
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let table: PrototypeTable = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_owned(),
            source,
        })?;
        Self::from_table(&table)
    }

    pub fn prototypes(&self) -> &[Rgb; NUM_COLOR_NAMES] {
        &self.prototypes
    }

    /// Index of the nearest prototype; ties go to the lower index.
    pub fn name(&self, rgb: Rgb) -> usize {
        let lab = srgb_to_lab(rgb);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.lab.iter().enumerate() {
            let d = (lab[0] - p[0]).powi(2) + (lab[1] - p[1]).powi(2) + (lab[2] - p[2]).powi(2);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Table lookup equivalent to [`ColorNamer::name`]. The 16 MiB table is
    /// built on first use.
    pub fn name_fast(&self, rgb: Rgb) -> usize {
        let lut = self.lut.get_or_init(|| self.build_lut());
        lut[((rgb[0] as usize) << 16) | ((rgb[1] as usize) << 8) | rgb[2] as usize] as usize
    }

    fn build_lut(&self) -> Box<[u8]> {
        use rayon::prelude::*;
        let mut lut = vec![0u8; 1 << 24];
        lut.par_chunks_mut(1 << 16).enumerate().for_each(|(r, chunk)| {
            for (i, slot) in chunk.iter_mut().enumerate() {
                *slot = self.name([r as u8, (i >> 8) as u8, i as u8]) as u8;
            }
        });
        lut.into_boxed_slice()
    }

    /// Normalized color-name histogram over an iterator of pixels; all zeros
    /// when the iterator is empty.
    pub fn histogram(&self, pixels: impl IntoIterator<Item = Rgb>) -> [f64; NUM_COLOR_NAMES] {
        let mut counts = [0u64; NUM_COLOR_NAMES];
        for p in pixels {
            counts[self.name_fast(p)] += 1;
        }
        normalize_counts(&counts)
    }
}

/// Process-wide namer with the built-in prototype table.
pub fn default_namer() -> &'static ColorNamer {
    static NAMER: OnceLock<ColorNamer> = OnceLock::new();
    NAMER.get_or_init(ColorNamer::default)
}

/// Names a color with the built-in prototype table.
pub fn name_color(rgb: Rgb) -> usize {
    default_namer().name(rgb)
}

pub(crate) fn normalize_counts<const N: usize>(counts: &[u64; N]) -> [f64; N] {
    let total: u64 = counts.iter().sum();
    let mut out = [0.0; N];
    if total > 0 {
        for (o, &c) in out.iter_mut().zip(counts) {
            *o = c as f64 / total as f64;
        }
    }
    out
}

fn srgb_to_linear(c: u8) -> f64 {
    let c = c as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// sRGB (D65) to CIELAB.
pub fn srgb_to_lab(rgb: Rgb) -> [f64; 3] {
    let [r, g, b] = rgb.map(srgb_to_linear);
    let x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    let f = |t: f64| {
        const DELTA: f64 = 6.0 / 29.0;
        if t > DELTA * DELTA * DELTA {
            t.cbrt()
        } else {
            t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
        }
    };
    let (fx, fy, fz) = (f(x / 0.95047), f(y), f(z / 1.08883));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(name: &str) -> usize {
        COLOR_NAMES.iter().position(|n| *n == name).unwrap()
    }

    #[test]
    fn named_examples() {
        assert_eq!(name_color([255, 0, 0]), idx("red"));
        assert_eq!(name_color([0, 0, 0]), idx("black"));
        assert_eq!(name_color([128, 128, 128]), idx("grey"));
        assert_eq!(name_color([255, 255, 255]), idx("white"));
        assert_eq!(name_color([0, 255, 0]), idx("green"));
        assert_eq!(name_color([30, 60, 200]), idx("blue"));
        assert_eq!(name_color([0, 0, 255]), idx("blue"));
        assert_eq!(name_color([120, 30, 140]), idx("purple"));
        assert_eq!(name_color([250, 230, 40]), idx("yellow"));
    }

    #[test]
    fn every_prototype_names_itself() {
        for (i, p) in DEFAULT_PROTOTYPES.iter().enumerate() {
            assert_eq!(name_color(*p), i, "{}", COLOR_NAMES[i]);
        }
    }

    #[test]
    fn grey_is_nearest_by_brute_force() {
        // independent check: distances to every prototype computed directly
        let q = srgb_to_lab([128, 128, 128]);
        let d: Vec<f64> = DEFAULT_PROTOTYPES
            .iter()
            .map(|&p| {
                let l = srgb_to_lab(p);
                ((q[0] - l[0]).powi(2) + (q[1] - l[1]).powi(2) + (q[2] - l[2]).powi(2)).sqrt()
            })
            .collect();
        let argmin = (0..11).min_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap();
        assert_eq!(argmin, idx("grey"));
    }

    #[test]
    fn lab_reference_values() {
        let w = srgb_to_lab([255, 255, 255]);
        assert!((w[0] - 100.0).abs() < 1e-3 && w[1].abs() < 1e-2 && w[2].abs() < 1e-2);
        let r = srgb_to_lab([255, 0, 0]);
        assert!((r[0] - 53.24).abs() < 0.05 && (r[1] - 80.09).abs() < 0.1);
    }

    #[test]
    fn table_override() {
        let mut table = PrototypeTable(Default::default());
        for (n, p) in COLOR_NAMES.iter().zip(DEFAULT_PROTOTYPES) {
            table.0.insert(n.to_string(), p);
        }
        table.0.insert("red".into(), [120, 0, 0]);
        let namer = ColorNamer::from_table(&table).unwrap();
        assert_eq!(namer.name([120, 0, 0]), idx("red"));
        table.0.remove("pink");
        assert!(ColorNamer::from_table(&table).is_err());
    }

    #[test]
    fn histogram_sums_to_one() {
        let h = default_namer().histogram([[0, 0, 0], [255, 255, 255], [255, 255, 255], [1, 2, 3]]);
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(h[idx("white")], 0.5);
        assert_eq!(default_namer().histogram([]), [0.0; 11]);
    }
}
