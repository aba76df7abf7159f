use serde::{Deserialize, Serialize};

use super::DetectedTexel;
use crate::error::{Error, Result};
use crate::synthesis::GroundTruth;

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionMatch {
    pub detection: usize,
    pub ground_truth: usize,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matches: Vec<DetectionMatch>,
}

/// Greedy one-to-one matching by descending bounding-box IoU. A pair can
/// match only if IoU reaches the threshold and the shape labels agree.
///
/// Precision (recall) is reported as 1 when there are no detections (no
/// ground truth), since nothing was missed.
pub fn evaluate_detection(detections: &[DetectedTexel], ground_truth: &GroundTruth, iou_threshold: f64) -> Result<DetectionReport> {
    if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!("IoU threshold {iou_threshold} outside (0, 1]")));
    }
    let gt = &ground_truth.texels;

    // sweep over boxes sorted by x to avoid testing far-apart pairs
    let mut gt_order: Vec<usize> = (0..gt.len()).collect();
    gt_order.sort_by_key(|&g| gt[g].bbox().x);
    let max_w = gt.iter().map(|t| t.bbox().w).max().unwrap_or(0);

    let mut candidates = Vec::new();
    for (d, det) in detections.iter().enumerate() {
        let db = det.bbox();
        let lo = db.x.saturating_sub(max_w);
        let start = gt_order.partition_point(|&g| gt[g].bbox().x < lo);
        for &g in &gt_order[start..] {
            let gb = gt[g].bbox();
            if gb.x >= db.x + db.w {
                break;
            }
            if gt[g].shape != det.shape {
                continue;
            }
            let iou = db.iou(&gb);
            if iou >= iou_threshold {
                candidates.push(DetectionMatch {
                    detection: d,
                    ground_truth: g,
                    iou,
                });
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.iou
            .total_cmp(&a.iou)
            .then(a.detection.cmp(&b.detection))
            .then(a.ground_truth.cmp(&b.ground_truth))
    });

    let mut det_used = vec![false; detections.len()];
    let mut gt_used = vec![false; gt.len()];
    let mut matches = Vec::new();
    for m in candidates {
        if det_used[m.detection] || gt_used[m.ground_truth] {
            continue;
        }
        det_used[m.detection] = true;
        gt_used[m.ground_truth] = true;
        matches.push(m);
    }

    let tp = matches.len();
    let fp = detections.len() - tp;
    let fn_ = gt.len() - tp;
    let precision = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 1.0 };
    let recall = if tp + fn_ > 0 { tp as f64 / (tp + fn_) as f64 } else { 1.0 };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(DetectionReport {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        precision,
        recall,
        f1,
        matches,
    })
}
