//! Texel detection behind a detector-agnostic interface.
//!
//! Downstream stages only consume boxes, masks, labels and colors, so any
//! detector producing [`DetectedTexel`]s can be plugged in.

mod classical;
mod evaluate;
mod shape;

pub use classical::{ClassicalDetector, DetectorConfig};
pub use evaluate::{evaluate_detection, DetectionMatch, DetectionReport, DEFAULT_IOU_THRESHOLD};
pub use shape::{circularity, elongation, perimeter};
pub(crate) use shape::central_moments as shape_moments;

use std::path::Path;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::color::Rgb;
use crate::error::{Error, Result};
use crate::synthesis::GroundTruth;
use crate::texel::{BBox, ShapeKind, TexelMask};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "DetectionRecord", try_from = "DetectionRecord")]
pub struct DetectedTexel {
    pub shape: ShapeKind,
    pub centroid: [f64; 2],
    pub mask: TexelMask,
    pub mean_color: Rgb,
    pub confidence: f64,
}

impl DetectedTexel {
    pub fn bbox(&self) -> BBox {
        self.mask.bbox()
    }
}

pub trait TexelDetector {
    fn detect(&self, image: &RgbImage) -> Result<Vec<DetectedTexel>>;
}

/// Classical detection with default thresholds.
pub fn detect(image: &RgbImage) -> Result<Vec<DetectedTexel>> {
    ClassicalDetector::default().detect(image)
}

/// Ground-truth texels as detections with confidence 1.
pub fn detect_oracle(ground_truth: &GroundTruth) -> Vec<DetectedTexel> {
    ground_truth
        .texels
        .iter()
        .map(|t| DetectedTexel {
            shape: t.shape,
            centroid: t.centroid,
            mask: t.mask.clone(),
            mean_color: t.color,
            confidence: 1.0,
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct DetectionRecord {
    id: usize,
    shape: ShapeKind,
    centroid: [f64; 2],
    bbox: BBox,
    mask_rle: Vec<u32>,
    mean_color: Rgb,
    confidence: f64,
}

impl From<DetectedTexel> for DetectionRecord {
    fn from(d: DetectedTexel) -> Self {
        DetectionRecord {
            id: 0,
            shape: d.shape,
            centroid: d.centroid,
            bbox: d.mask.bbox(),
            mask_rle: d.mask.to_rle(),
            mean_color: d.mean_color,
            confidence: d.confidence,
        }
    }
}

impl TryFrom<DetectionRecord> for DetectedTexel {
    type Error = Error;

    fn try_from(r: DetectionRecord) -> Result<Self> {
        if !(0.0..=1.0).contains(&r.confidence) {
            return Err(Error::InvalidArgument(format!("confidence {} outside [0, 1]", r.confidence)));
        }
        Ok(DetectedTexel {
            shape: r.shape,
            centroid: r.centroid,
            mask: TexelMask::from_rle(r.bbox, &r.mask_rle)?,
            mean_color: r.mean_color,
            confidence: r.confidence,
        })
    }
}

/// On-disk detection list; `id` fields are positions in the list.
#[derive(Serialize, Deserialize)]
struct DetectionFile {
    texels: Vec<serde_json::Value>,
}

pub fn save_detections(path: &Path, detections: &[DetectedTexel]) -> Result<()> {
    let texels = detections
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let mut rec = DetectionRecord::from(d.clone());
            rec.id = i;
            serde_json::to_value(rec).expect("detection records serialize")
        })
        .collect();
    crate::io::write_json(path, &DetectionFile { texels })
}

pub fn load_detections(path: &Path) -> Result<Vec<DetectedTexel>> {
    let file: DetectionFile = crate::io::read_json(path)?;
    file.texels
        .into_iter()
        .map(|v| {
            let rec: DetectionRecord = serde_json::from_value(v).map_err(|source| Error::Json {
                path: path.to_owned(),
                source,
            })?;
            DetectedTexel::try_from(rec)
        })
        .collect()
}
