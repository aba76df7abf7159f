//! The 36-dimensional texel-attribute descriptor.
//!
//! Layout of the vector (see [`COLUMN_NAMES`]):
//!
//! | dims   | block                                 |
//! |--------|---------------------------------------|
//! | 0..3   | shape-label histogram                 |
//! | 3..14  | texel color-name histogram            |
//! | 14..17 | texel orientation histogram           |
//! | 17     | mean texel size / canvas area         |
//! | 18     | density                               |
//! | 19     | homogeneity                           |
//! | 20..23 | pair-vector orientation histogram     |
//! | 23     | local reflective symmetry             |
//! | 24     | translational symmetry                |
//! | 25..36 | background color-name histogram       |
//!
//! Layout entries that cannot be computed (too few points) are `NaN` in the
//! raw vector and become the database mean under normalization.

mod individual;
mod layout;
mod normalize;
mod points;

pub use individual::{individual_attributes, texel_orientation, IndividualAttributes, ISOTROPY_RATIO, ORIENTATION_BINS};
pub use layout::{
    aggregate_layout, density, group_layout, group_texels, homogeneity_chi2, local_reflective_symmetry,
    pair_orientation_hist, pair_orientation_hist_points, reflective_symmetry_points, translational_symmetry,
    translational_symmetry_points, Canvas, GroupLayout, LayoutAttributes, LayoutParams, TexelGroup, REFERENCE_SIDE,
};
pub use normalize::{znormalize_apply, znormalize_fit, NormalizationStats};
pub use points::PointIndex;

use std::ops::Range;
use std::path::Path;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::color::{default_namer, ColorNamer, NUM_COLOR_NAMES};
use crate::detection::DetectedTexel;
use crate::error::{Error, Result};
use crate::illumination::{flatten, FlattenConfig};

pub const DESCRIPTOR_DIM: usize = 36;

pub const LABEL_DIMS: Range<usize> = 0..3;
pub const COLOR_DIMS: Range<usize> = 3..14;
pub const ORIENTATION_DIMS: Range<usize> = 14..17;
pub const SIZE_DIM: usize = 17;
pub const DENSITY_DIM: usize = 18;
pub const HOMOGENEITY_DIM: usize = 19;
pub const PAIR_ORIENTATION_DIMS: Range<usize> = 20..23;
pub const LOCAL_SYMMETRY_DIM: usize = 23;
pub const TRANSLATIONAL_SYMMETRY_DIM: usize = 24;
pub const BACKGROUND_DIMS: Range<usize> = 25..36;

pub static COLUMN_NAMES: [&str; DESCRIPTOR_DIM] = [
    "label_circle",
    "label_line",
    "label_polygon",
    "color_black",
    "color_blue",
    "color_brown",
    "color_grey",
    "color_green",
    "color_orange",
    "color_pink",
    "color_purple",
    "color_red",
    "color_white",
    "color_yellow",
    "orient_0_60",
    "orient_60_120",
    "orient_120_180",
    "mean_size",
    "density",
    "homogeneity",
    "pair_orient_0_60",
    "pair_orient_60_120",
    "pair_orient_120_180",
    "local_symmetry",
    "translational_symmetry",
    "bg_black",
    "bg_blue",
    "bg_brown",
    "bg_grey",
    "bg_green",
    "bg_orange",
    "bg_pink",
    "bg_purple",
    "bg_red",
    "bg_white",
    "bg_yellow",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextureDescriptor {
    pub raw: Vec<f64>,
}

impl TextureDescriptor {
    pub fn new(individual: &IndividualAttributes, layout: &LayoutAttributes) -> Self {
        let mut raw = Vec::with_capacity(DESCRIPTOR_DIM);
        raw.extend_from_slice(&individual.label_hist);
        raw.extend_from_slice(&individual.color_hist);
        raw.extend_from_slice(&individual.orientation_hist);
        raw.push(individual.mean_size);
        raw.push(layout.density);
        raw.push(layout.homogeneity);
        raw.extend_from_slice(&layout.pair_orientation_hist);
        raw.push(layout.local_symmetry);
        raw.push(layout.translational_symmetry);
        raw.extend_from_slice(&layout.background_color_hist);
        debug_assert_eq!(raw.len(), DESCRIPTOR_DIM);
        TextureDescriptor { raw }
    }

    pub fn from_vec(raw: Vec<f64>) -> Result<Self> {
        if raw.len() != DESCRIPTOR_DIM {
            return Err(Error::DimensionMismatch {
                expected: DESCRIPTOR_DIM,
                got: raw.len(),
            });
        }
        Ok(TextureDescriptor { raw })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.raw
    }

    /// Dimensions holding an undefined attribute.
    pub fn missing(&self) -> Vec<usize> {
        (0..self.raw.len()).filter(|&d| self.raw[d].is_nan()).collect()
    }
}

impl AsRef<[f64]> for TextureDescriptor {
    fn as_ref(&self) -> &[f64] {
        &self.raw
    }
}

#[derive(Debug, Clone)]
pub struct DescriptorConfig {
    pub layout: LayoutParams,
    /// Overrides the built-in color prototypes.
    pub namer: Option<std::sync::Arc<ColorNamer>>,
    /// Illumination flattening applied before naming background pixels.
    pub flatten: Option<FlattenConfig>,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        DescriptorConfig {
            layout: LayoutParams::default(),
            namer: None,
            flatten: Some(FlattenConfig::default()),
        }
    }
}

impl DescriptorConfig {
    fn namer(&self) -> &ColorNamer {
        self.namer.as_deref().unwrap_or_else(|| default_namer())
    }
}

/// Descriptor of an image and its texels with default parameters.
pub fn describe(image: &RgbImage, texels: &[DetectedTexel]) -> TextureDescriptor {
    describe_with(image, texels, &DescriptorConfig::default())
}

pub fn describe_with(image: &RgbImage, texels: &[DetectedTexel], config: &DescriptorConfig) -> TextureDescriptor {
    let canvas = Canvas {
        width: image.width() as f64,
        height: image.height() as f64,
    };
    let namer = config.namer();
    let individual = individual_attributes(texels, canvas.area(), namer);
    let groups: Vec<GroupLayout> = group_texels(texels, &config.layout)
        .iter()
        .map(|g| group_layout(g, canvas, &config.layout))
        .collect();
    let flattened = config.flatten.as_ref().and_then(|f| flatten(image, f));
    let background = background_color_hist(flattened.as_ref().unwrap_or(image), texels, namer);
    let layout = aggregate_layout(&groups, background);
    TextureDescriptor::new(&individual, &layout)
}

/// Color-name histogram of the pixels not covered by any texel mask.
pub fn background_color_hist(image: &RgbImage, texels: &[DetectedTexel], namer: &ColorNamer) -> [f64; NUM_COLOR_NAMES] {
    let (w, h) = image.dimensions();
    let mut covered = vec![false; w as usize * h as usize];
    for t in texels {
        for (x, y) in t.mask.pixels() {
            if x < w && y < h {
                covered[y as usize * w as usize + x as usize] = true;
            }
        }
    }
    namer.histogram(
        image
            .enumerate_pixels()
            .filter(|(x, y, _)| !covered[*y as usize * w as usize + *x as usize])
            .map(|(_, _, p)| p.0),
    )
}

/// Reads a descriptor CSV: header `id` followed by [`COLUMN_NAMES`].
pub fn read_descriptors(path: &Path) -> Result<Vec<(String, TextureDescriptor)>> {
    let (columns, rows) = crate::io::read_vectors_csv(path)?;
    if columns.iter().map(String::as_str).ne(COLUMN_NAMES.iter().copied()) {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: "descriptor header does not match the expected column names".into(),
        });
    }
    rows.into_iter()
        .map(|(id, raw)| Ok((id, TextureDescriptor::from_vec(raw)?)))
        .collect()
}

pub fn write_descriptors(path: &Path, rows: &[(String, TextureDescriptor)]) -> Result<()> {
    let rows: Vec<(String, Vec<f64>)> = rows.iter().map(|(id, d)| (id.clone(), d.raw.clone())).collect();
    crate::io::write_vectors_csv(path, &COLUMN_NAMES, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::detect_oracle;
    use crate::synthesis::{render, ElementClassSpec, LayoutSpec, ShapeClass, Shading, TextureSpec};
    use crate::texel::{ShapeKind, TexelMask};
    use image::Rgb;

    fn dots_image() -> (RgbImage, Vec<DetectedTexel>) {
        let mut img = RgbImage::from_pixel(256, 256, Rgb([255, 255, 255]));
        let mut texels = Vec::new();
        for j in 0..8u32 {
            for i in 0..8u32 {
                let mut px = Vec::new();
                for y in 0..6 {
                    for x in 0..6 {
                        let (px_x, px_y) = (8 + 32 * i + x, 8 + 32 * j + y);
                        img.put_pixel(px_x, px_y, Rgb([0, 0, 0]));
                        px.push((px_x, px_y));
                    }
                }
                let mask = TexelMask::from_pixels(&px).unwrap();
                texels.push(DetectedTexel {
                    shape: ShapeKind::Polygon,
                    centroid: mask.centroid(),
                    mask,
                    mean_color: [0, 0, 0],
                    confidence: 1.0,
                });
            }
        }
        (img, texels)
    }

    #[test]
    fn column_names_follow_layout() {
        assert_eq!(COLUMN_NAMES[SIZE_DIM], "mean_size");
        assert_eq!(COLUMN_NAMES[DENSITY_DIM], "density");
        assert_eq!(COLUMN_NAMES[HOMOGENEITY_DIM], "homogeneity");
        assert_eq!(COLUMN_NAMES[LOCAL_SYMMETRY_DIM], "local_symmetry");
        assert_eq!(COLUMN_NAMES[TRANSLATIONAL_SYMMETRY_DIM], "translational_symmetry");
        assert_eq!(COLUMN_NAMES[COLOR_DIMS.start + 8], "color_red");
        assert_eq!(COLUMN_NAMES[BACKGROUND_DIMS.start + 9], "bg_white");
        assert_eq!(BACKGROUND_DIMS.end, DESCRIPTOR_DIM);
    }

    #[test]
    fn white_background_black_dots() {
        let (img, texels) = dots_image();
        let d = describe(&img, &texels);
        assert_eq!(d.raw.len(), DESCRIPTOR_DIM);
        let bg = &d.raw[BACKGROUND_DIMS];
        assert_eq!(bg[9], 1.0);
        assert_eq!(bg.iter().sum::<f64>(), 1.0);
        assert_eq!(d.raw[COLOR_DIMS.start], 1.0);
        assert_eq!(d.raw[LABEL_DIMS.start + 2], 1.0);
        assert!((d.raw[SIZE_DIM] - 36.0 / 65536.0).abs() < 1e-15);
        assert!((d.raw[DENSITY_DIM] - 64.0).abs() < 1e-9);
        assert_eq!(d.raw[LOCAL_SYMMETRY_DIM], 0.0);
        assert_eq!(d.raw[TRANSLATIONAL_SYMMETRY_DIM], 0.0);
        assert!(d.missing().is_empty());
        assert_eq!(describe(&img, &texels), d);
    }

    #[test]
    fn no_texels() {
        let (img, _) = dots_image();
        let d = describe(&img, &[]);
        assert_eq!(d.raw.len(), DESCRIPTOR_DIM);
        assert!(d.raw[..DENSITY_DIM].iter().all(|&v| v == 0.0));
        assert!(d.raw[DENSITY_DIM..BACKGROUND_DIMS.start].iter().all(|&v| v == 0.0));
        let bg = &d.raw[BACKGROUND_DIMS];
        assert!((bg[0] - 64.0 * 36.0 / 65536.0).abs() < 1e-12);
        assert!((bg[9] - (1.0 - 64.0 * 36.0 / 65536.0)).abs() < 1e-12);
    }

    #[test]
    fn histogram_blocks_sum_to_one() {
        let (img, texels) = dots_image();
        let d = describe(&img, &texels);
        for block in [LABEL_DIMS, COLOR_DIMS, ORIENTATION_DIMS, PAIR_ORIENTATION_DIMS, BACKGROUND_DIMS] {
            assert!((d.raw[block].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    fn circle_spec(canvas: u32, spacing: f64) -> TextureSpec {
        TextureSpec {
            canvas_px: canvas,
            background_color: [240, 240, 240],
            classes: vec![ElementClassSpec {
                shape: ShapeClass::Circle,
                size_px: (spacing * 0.4, spacing * 0.4),
                orientation_deg: (0.0, 0.0),
                color: [200, 20, 20],
                layout: LayoutSpec::grid([spacing, 0.0], [0.0, spacing], 0.0, [spacing / 2.0, spacing / 2.0]),
            }],
            shading: Shading::Flat,
            seed: 5,
        }
    }

    #[test]
    fn density_is_scale_covariant() {
        let (big, gt_big) = render(&circle_spec(1024, 40.0)).unwrap();
        let (small, gt_small) = render(&circle_spec(512, 20.0)).unwrap();
        let a = describe(&big, &detect_oracle(&gt_big)).raw[DENSITY_DIM];
        let b = describe(&small, &detect_oracle(&gt_small)).raw[DENSITY_DIM];
        assert!((a - b).abs() / a < 0.05, "{a} vs {b}");
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let (img, texels) = dots_image();
        let mut d = describe(&img, &texels);
        d.raw[LOCAL_SYMMETRY_DIM] = f64::NAN;
        write_descriptors(&path, &[("img_00000".into(), d.clone()), ("img_00001".into(), describe(&img, &[]))]).unwrap();
        let back = read_descriptors(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].0, "img_00000");
        assert_eq!(back[0].1.missing(), vec![LOCAL_SYMMETRY_DIM]);
        for (x, y) in back[0].1.raw.iter().zip(&d.raw) {
            assert!(x == y || (x.is_nan() && y.is_nan()));
        }
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("id,label_circle,label_line,label_polygon,color_black"));
    }

    #[test]
    fn csv_rejects_bad_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "id,a,b\nx,1,2\n").unwrap();
        assert!(matches!(read_descriptors(&path), Err(Error::Format { .. })));
        assert!(TextureDescriptor::from_vec(vec![0.0; 35]).is_err());
    }
}
