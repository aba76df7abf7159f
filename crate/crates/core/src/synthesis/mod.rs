//! Procedural element-based textures with exact texel ground truth.
//!
//! A [`TextureSpec`] holds one or two element classes, each a shape drawn on
//! its own (possibly jittered) lattice. [`render`] rasterizes the spec and
//! returns the image together with one [`TexelAnnotation`] per visible texel.

mod dataset;
mod raster;
mod render;
mod sample;

pub use dataset::{generate_dataset, generate_item, item_id, load_manifest, split_ids, DatasetEntry, DatasetManifest, Split};
pub use render::{render, MIN_VISIBLE_FRACTION, MAX_COLLISION_FRACTION};
pub use sample::{default_palette, expected_texel_count, sample_spec, MIN_EXPECTED_TEXELS};

use serde::{Deserialize, Serialize};

use crate::color::{name_color, Rgb};
use crate::error::{Error, Result};
use crate::texel::{BBox, ShapeKind, TexelMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolygonKind {
    Square,
    Triangle,
    Rectangle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ShapeClass {
    Circle,
    Polygon { subkind: PolygonKind },
    Line,
}

impl ShapeClass {
    pub fn kind(&self) -> ShapeKind {
        match self {
            ShapeClass::Circle => ShapeKind::Circle,
            ShapeClass::Polygon { .. } => ShapeKind::Polygon,
            ShapeClass::Line => ShapeKind::Line,
        }
    }
}

/// Lattice `phase + i * basis_u + j * basis_v`, in pixels.
///
/// Line classes use only `basis_u`: it is the translation between adjacent
/// stripes, so stripes run perpendicular to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutSpec {
    pub basis_u: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_v: Option<[f64; 2]>,
    /// Displacement radius as a fraction of the shortest basis vector.
    pub jitter: f64,
    pub phase: [f64; 2],
}

impl LayoutSpec {
    pub fn grid(basis_u: [f64; 2], basis_v: [f64; 2], jitter: f64, phase: [f64; 2]) -> Self {
        LayoutSpec {
            basis_u,
            basis_v: Some(basis_v),
            jitter,
            phase,
        }
    }

    pub fn linear(basis_u: [f64; 2], jitter: f64, phase: [f64; 2]) -> Self {
        LayoutSpec {
            basis_u,
            basis_v: None,
            jitter,
            phase,
        }
    }

    pub fn min_basis_len(&self) -> f64 {
        let u = norm(self.basis_u);
        self.basis_v.map_or(u, |v| u.min(norm(v)))
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = self.basis_u.iter().chain(&self.phase).all(|x| x.is_finite())
            && self.basis_v.is_none_or(|v| v.iter().all(|x| x.is_finite()));
        if !all_finite {
            return Err(Error::InvalidSpec("non-finite layout vector".into()));
        }
        if norm(self.basis_u) < 1.0 {
            return Err(Error::InvalidSpec("basis_u must be at least 1 px long".into()));
        }
        if let Some(v) = self.basis_v {
            let cross = self.basis_u[0] * v[1] - self.basis_u[1] * v[0];
            if cross.abs() < 1e-6 * norm(self.basis_u) * norm(v).max(1e-12) {
                return Err(Error::InvalidSpec("basis vectors are linearly dependent".into()));
            }
        }
        if !(0.0..=0.5).contains(&self.jitter) {
            return Err(Error::InvalidSpec(format!(
                "jitter {} outside [0, 0.5]",
                self.jitter
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementClassSpec {
    pub shape: ShapeClass,
    /// Circumscribed diameter for circles and polygons, stroke thickness for
    /// lines; each texel draws uniformly from `[min, max]`.
    pub size_px: (f64, f64),
    /// Rotation range in degrees within `[0, 180)`. Unused for lines, whose
    /// direction follows `layout.basis_u`.
    pub orientation_deg: (f64, f64),
    pub color: Rgb,
    pub layout: LayoutSpec,
}

impl ElementClassSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.size_px;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidSpec(format!("bad size range ({lo}, {hi})")));
        }
        let (a, b) = self.orientation_deg;
        if !((0.0..180.0).contains(&a) && (0.0..180.0).contains(&b) && a <= b) {
            return Err(Error::InvalidSpec(format!("bad orientation range ({a}, {b})")));
        }
        self.layout.validate()?;
        match (self.shape, self.layout.basis_v) {
            (ShapeClass::Line, Some(_)) => Err(Error::InvalidSpec(
                "line classes take a single basis vector".into(),
            )),
            (ShapeClass::Line, None) => Ok(()),
            (_, None) => Err(Error::InvalidSpec(
                "circle and polygon classes need two basis vectors".into(),
            )),
            (_, Some(_)) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shading {
    #[default]
    Flat,
    Perturbed,
}

pub const DEFAULT_CANVAS_PX: u32 = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextureSpec {
    pub canvas_px: u32,
    pub background_color: Rgb,
    pub classes: Vec<ElementClassSpec>,
    #[serde(default)]
    pub shading: Shading,
    pub seed: u64,
}

impl TextureSpec {
    /// The same texture drawn on a `canvas_px` canvas: every length scales
    /// by `canvas_px / self.canvas_px`.
    pub fn rescaled(&self, canvas_px: u32) -> TextureSpec {
        if canvas_px == self.canvas_px {
            return self.clone();
        }
        let k = canvas_px as f64 / self.canvas_px as f64;
        let sv = |v: [f64; 2]| [v[0] * k, v[1] * k];
        TextureSpec {
            canvas_px,
            classes: self
                .classes
                .iter()
                .map(|c| ElementClassSpec {
                    size_px: (c.size_px.0 * k, c.size_px.1 * k),
                    layout: LayoutSpec {
                        basis_u: sv(c.layout.basis_u),
                        basis_v: c.layout.basis_v.map(sv),
                        phase: sv(c.layout.phase),
                        ..c.layout
                    },
                    ..c.clone()
                })
                .collect(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.canvas_px < 16 {
            return Err(Error::InvalidSpec(format!("canvas {} px too small", self.canvas_px)));
        }
        if self.classes.is_empty() || self.classes.len() > 2 {
            return Err(Error::InvalidSpec(format!(
                "expected 1 or 2 element classes, got {}",
                self.classes.len()
            )));
        }
        for c in &self.classes {
            c.validate()?;
        }
        let mut names = vec![name_color(self.background_color)];
        names.extend(self.classes.iter().map(|c| name_color(c.color)));
        for i in 0..names.len() {
            for j in i + 1..names.len() {
                if names[i] == names[j] {
                    return Err(Error::InvalidSpec(
                        "class and background colors must have distinct color names".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// One visible texel of a rendered texture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "AnnotationRecord", try_from = "AnnotationRecord")]
pub struct TexelAnnotation {
    pub id: usize,
    pub class_index: usize,
    pub shape: ShapeKind,
    pub polygon_kind: Option<PolygonKind>,
    pub color: Rgb,
    /// Mean of the mask's pixel centres.
    pub centroid: [f64; 2],
    /// Jittered placement point the texel was drawn at.
    pub anchor: [f64; 2],
    pub mask: TexelMask,
}

impl TexelAnnotation {
    pub fn bbox(&self) -> BBox {
        self.mask.bbox()
    }
}

#[derive(Serialize, Deserialize)]
struct AnnotationRecord {
    id: usize,
    shape: ShapeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    polygon_kind: Option<PolygonKind>,
    class_index: usize,
    color: Rgb,
    centroid: [f64; 2],
    anchor: [f64; 2],
    bbox: BBox,
    mask_rle: Vec<u32>,
}

impl From<TexelAnnotation> for AnnotationRecord {
    fn from(a: TexelAnnotation) -> Self {
        AnnotationRecord {
            id: a.id,
            shape: a.shape,
            polygon_kind: a.polygon_kind,
            class_index: a.class_index,
            color: a.color,
            centroid: a.centroid,
            anchor: a.anchor,
            bbox: a.mask.bbox(),
            mask_rle: a.mask.to_rle(),
        }
    }
}

impl TryFrom<AnnotationRecord> for TexelAnnotation {
    type Error = Error;

    fn try_from(r: AnnotationRecord) -> Result<Self> {
        Ok(TexelAnnotation {
            id: r.id,
            class_index: r.class_index,
            shape: r.shape,
            polygon_kind: r.polygon_kind,
            color: r.color,
            centroid: r.centroid,
            anchor: r.anchor,
            mask: TexelMask::from_rle(r.bbox, &r.mask_rle)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub canvas_px: u32,
    pub texels: Vec<TexelAnnotation>,
    pub per_class_layout: Vec<LayoutSpec>,
}

impl GroundTruth {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        crate::io::read_json(path)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        crate::io::write_json(path, self)
    }
}

pub(crate) fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}
