//! In-memory retrieval experiments: describe a database, distort it into
//! query sets, rank and score every (variant, method) pair.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptor::{describe_with, DescriptorConfig};
use crate::detection::{detect_oracle, ClassicalDetector, DetectedTexel, DetectorConfig, TexelDetector};
use crate::distortion::DistortionSpec;
use crate::error::{Error, Result};
use crate::retrieval::{build_index, evaluate_cmc, CmcCurve, Metric, Ranking, ReportRow};
use crate::synthesis::GroundTruth;
use crate::tamura::{tamura_with, TamuraConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    TexelAtt,
    Tamura,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::TexelAtt => "texelatt",
            Method::Tamura => "tamura",
        }
    }

    /// Metric each method is ranked with unless configured otherwise.
    pub fn default_metric(self) -> Metric {
        match self {
            Method::TexelAtt => Metric::Cosine,
            Method::Tamura => Metric::Cityblock,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "texelatt" => Ok(Method::TexelAtt),
            "tamura" => Ok(Method::Tamura),
            _ => Err(Error::InvalidArgument(format!("unknown method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DetectorChoice {
    Classical(DetectorConfig),
    /// Ground-truth texels of the (undistorted) source image.
    Oracle,
}

impl Default for DetectorChoice {
    fn default() -> Self {
        DetectorChoice::Classical(DetectorConfig::default())
    }
}

/// How a query set is derived from the database images.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum QueryVariant {
    /// Queries are the clean database images.
    Identity,
    Distorted(DistortionSpec),
}

impl QueryVariant {
    pub fn name(&self) -> String {
        match self {
            QueryVariant::Identity => "identity".into(),
            QueryVariant::Distorted(spec) => spec.name(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct MethodSettings {
    pub detector: DetectorChoice,
    pub descriptor: DescriptorConfig,
    pub tamura: TamuraConfig,
}

/// Detects texels for `image`; the oracle reads `truth` instead.
pub fn detect_for(image: &RgbImage, truth: &GroundTruth, detector: &DetectorChoice) -> Result<Vec<DetectedTexel>> {
    match detector {
        DetectorChoice::Classical(config) => ClassicalDetector::new(*config).detect(image),
        DetectorChoice::Oracle => Ok(detect_oracle(truth)),
    }
}

/// Raw descriptor of `image` under `method`.
pub fn describe_image(method: Method, image: &RgbImage, truth: &GroundTruth, settings: &MethodSettings) -> Result<Vec<f64>> {
    match method {
        Method::TexelAtt => {
            let texels = detect_for(image, truth, &settings.detector)?;
            Ok(describe_with(image, &texels, &settings.descriptor).raw)
        }
        Method::Tamura => Ok(tamura_with(image, &settings.tamura)?.to_vec()),
    }
}

/// Ranks every query against an index over `database` and scores the
/// rankings. Query ids map to their correct database ids through `truth`.
pub fn evaluate_retrieval(
    database: &[(String, Vec<f64>)],
    queries: &[(String, Vec<f64>)],
    truth: &BTreeMap<String, String>,
    metric: Metric,
) -> Result<CmcCurve> {
    let index = build_index(database, metric)?;
    let rankings: Vec<Ranking> = queries
        .par_iter()
        .map(|(id, v)| index.query(id, v))
        .collect::<Result<_>>()?;
    evaluate_cmc(&rankings, truth)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantCurve {
    pub variant: String,
    pub method: Method,
    pub metric: Metric,
    pub curve: CmcCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub curves: Vec<VariantCurve>,
    /// Raw database descriptors per method, in id order of the input.
    pub database: Vec<(Method, Vec<(String, Vec<f64>)>)>,
}

impl ExperimentReport {
    /// One row per (variant, method), in run order.
    pub fn rows(&self) -> Vec<ReportRow> {
        self.curves
            .iter()
            .map(|c| ReportRow {
                variant: c.variant.clone(),
                method: c.method.to_string(),
                metric: c.metric,
                auc: c.curve.auc,
                auc_at_200: c.curve.auc_at_200,
            })
            .collect()
    }

    pub fn get(&self, variant: &str, method: Method) -> Option<&VariantCurve> {
        self.curves.iter().find(|c| c.variant == variant && c.method == method)
    }
}

/// Descriptors of one database item and its queries, keyed by method.
struct ItemDescriptors {
    id: String,
    database: Vec<Vec<f64>>,
    /// `[variant][method]`.
    queries: Vec<Vec<Vec<f64>>>,
}

/// Runs every (variant, method) pair over the database items in `ids`.
/// `load` produces an item's clean image and ground truth; it is called once
/// per item, from several threads.
pub fn run_experiment<F>(
    ids: &[String],
    load: F,
    variants: &[QueryVariant],
    methods: &[(Method, Metric)],
    settings: &MethodSettings,
) -> Result<ExperimentReport>
where
    F: Fn(&str) -> Result<(RgbImage, GroundTruth)> + Sync,
{
    let items: Vec<ItemDescriptors> = ids
        .par_iter()
        .map(|id| {
            let (image, truth) = load(id).map_err(|e| e.in_stage("load", id))?;
            let describe = |img: &RgbImage, stage: &'static str| {
                methods
                    .iter()
                    .map(|&(m, _)| describe_image(m, img, &truth, settings))
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| e.in_stage(stage, id))
            };
            let database = describe(&image, "describe")?;
            let queries = variants
                .iter()
                .map(|v| match v {
                    // Describing is deterministic, so clean queries reuse the
                    // database descriptors.
                    QueryVariant::Identity => Ok(database.clone()),
                    QueryVariant::Distorted(spec) => {
                        let q = spec.apply(&image, id).map_err(|e| e.in_stage("distort", id))?;
                        describe(&q, "describe-query")
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ItemDescriptors {
                id: id.clone(),
                database,
                queries,
            })
        })
        .collect::<Result<_>>()?;

    let mut curves = Vec::new();
    for (vi, variant) in variants.iter().enumerate() {
        let name = variant.name();
        for (mi, &(method, metric)) in methods.iter().enumerate() {
            let db: Vec<(String, Vec<f64>)> = items.iter().map(|it| (it.id.clone(), it.database[mi].clone())).collect();
            let queries: Vec<(String, Vec<f64>)> = items
                .iter()
                .map(|it| (format!("{}_{name}", it.id), it.queries[vi][mi].clone()))
                .collect();
            let truth: BTreeMap<String, String> = items.iter().map(|it| (format!("{}_{name}", it.id), it.id.clone())).collect();
            let curve = evaluate_retrieval(&db, &queries, &truth, metric).map_err(|e| e.in_stage("retrieve", &name))?;
            curves.push(VariantCurve {
                variant: name.clone(),
                method,
                metric,
                curve,
            });
        }
    }
    let database = methods
        .iter()
        .enumerate()
        .map(|(mi, &(m, _))| (m, items.iter().map(|it| (it.id.clone(), it.database[mi].clone())).collect()))
        .collect();
    Ok(ExperimentReport { curves, database })
}
