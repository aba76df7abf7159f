//! Single-step operations shared by the subcommands and the `run` pipeline.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use texelatt::descriptor::{describe_with, DescriptorConfig, COLUMN_NAMES};
use texelatt::detection::{load_detections, save_detections, ClassicalDetector, DetectedTexel, TexelDetector};
use texelatt::experiment::{evaluate_retrieval, DetectorChoice, Method};
use texelatt::io::{read_png, read_vectors_csv, write_vectors_csv, VectorRows};
use texelatt::retrieval::{cmc_rows, write_csv, CmcCurve, CmcRow, Metric, ReportRow};
use texelatt::synthesis::GroundTruth;
use texelatt::tamura::{tamura_with, TamuraConfig, EXTENDED_COLUMNS, PRIMARY_COLUMNS};

use crate::error::{CliError, StageContext};

/// One image to process: its id, image file and the ground truth of the
/// clean image it shows.
#[derive(Debug, Clone)]
pub struct ImageItem {
    pub id: String,
    pub image: PathBuf,
    pub ground_truth: PathBuf,
}

pub fn descriptor_columns(method: Method, tamura: &TamuraConfig) -> &'static [&'static str] {
    match method {
        Method::TexelAtt => &COLUMN_NAMES,
        Method::Tamura if tamura.extended => &EXTENDED_COLUMNS,
        Method::Tamura => &PRIMARY_COLUMNS,
    }
}

pub fn detect_image(image: &Path, ground_truth: Option<&Path>, detector: &DetectorChoice) -> texelatt::Result<Vec<DetectedTexel>> {
    match (detector, ground_truth) {
        (DetectorChoice::Oracle, Some(gt)) => Ok(texelatt::detection::detect_oracle(&GroundTruth::load(gt)?)),
        (DetectorChoice::Oracle, None) => Err(texelatt::Error::InvalidArgument("the oracle detector needs ground truth".into())),
        (DetectorChoice::Classical(config), _) => ClassicalDetector::new(*config).detect(&read_png(image)?),
    }
}

/// Detects texels in every item, writing `<out_dir>/<id>.json`. Returns the
/// written paths in item order.
pub fn detect_items(stage: &str, items: &[ImageItem], detector: &DetectorChoice, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    items
        .par_iter()
        .map(|item| {
            let texels = detect_image(&item.image, Some(&item.ground_truth), detector).map_err(|e| e.in_stage("detect", &item.id))?;
            let path = out_dir.join(format!("{}.json", item.id));
            save_detections(&path, &texels)?;
            Ok(path)
        })
        .collect::<texelatt::Result<Vec<_>>>()
        .stage(stage)
}

/// Raw descriptor of one image; Texel-Att reads its texels from
/// `detections`.
pub fn describe_image(method: Method, image: &Path, detections: Option<&Path>, tamura: &TamuraConfig) -> texelatt::Result<Vec<f64>> {
    let img = read_png(image)?;
    match method {
        Method::TexelAtt => {
            let path = detections.ok_or_else(|| texelatt::Error::InvalidArgument("Texel-Att needs a detections file".into()))?;
            let texels = load_detections(path)?;
            Ok(describe_with(&img, &texels, &DescriptorConfig::default()).raw)
        }
        Method::Tamura => Ok(tamura_with(&img, tamura)?.to_vec()),
    }
}

/// Describes every item and writes one CSV row per item to `out`.
pub fn describe_items(
    stage: &str,
    method: Method,
    items: &[ImageItem],
    detections: Option<&[PathBuf]>,
    tamura: &TamuraConfig,
    out: &Path,
) -> Result<(), CliError> {
    let rows: VectorRows = items
        .par_iter()
        .enumerate()
        .map(|(i, item)| {
            let det = detections.map(|d| d[i].as_path());
            describe_image(method, &item.image, det, tamura)
                .map(|v| (item.id.clone(), v))
                .map_err(|e| e.in_stage("describe", &item.id))
        })
        .collect::<texelatt::Result<_>>()
        .stage(stage)?;
    write_vectors_csv(out, descriptor_columns(method, tamura), &rows).stage(stage)
}

pub fn read_descriptor_csv(path: &Path, method: Method, tamura: &TamuraConfig) -> texelatt::Result<VectorRows> {
    let (columns, rows) = read_vectors_csv(path)?;
    let expected = descriptor_columns(method, tamura);
    if columns.iter().map(String::as_str).ne(expected.iter().copied()) {
        return Err(texelatt::Error::Format {
            path: path.to_path_buf(),
            message: format!("columns do not match the {method} descriptor"),
        });
    }
    Ok(rows)
}

pub struct RetrievalOutputs {
    pub row: ReportRow,
    pub curve: CmcCurve,
    pub report: PathBuf,
    pub cmc: PathBuf,
}

/// Ranks the queries against the database and writes the report row and
/// CMC rows as `<prefix>_report.csv` and `<prefix>_cmc.csv`.
pub fn retrieve(
    database: &VectorRows,
    queries: &VectorRows,
    truth: &BTreeMap<String, String>,
    variant: &str,
    method: Method,
    metric: Metric,
    out_prefix: &Path,
) -> texelatt::Result<RetrievalOutputs> {
    let curve = evaluate_retrieval(database, queries, truth, metric)?;
    let row = ReportRow {
        variant: variant.to_string(),
        method: method.to_string(),
        metric,
        auc: curve.auc,
        auc_at_200: curve.auc_at_200,
    };
    let report = with_suffix(out_prefix, "_report.csv");
    let cmc = with_suffix(out_prefix, "_cmc.csv");
    write_csv(&report, std::slice::from_ref(&row))?;
    write_csv(&cmc, &cmc_rows(variant, method.as_str(), &curve))?;
    Ok(RetrievalOutputs { row, curve, report, cmc })
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Rebuilds curves from CMC rows, grouped by (variant, method) in input order.
pub fn curves_from_rows(rows: &[CmcRow]) -> Vec<((String, String), CmcCurve)> {
    let mut out: Vec<((String, String), Vec<f64>)> = Vec::new();
    for r in rows {
        let key = (r.variant.clone(), r.method.clone());
        match out.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r.recognition_rate),
            None => out.push((key, vec![r.recognition_rate])),
        }
    }
    out.into_iter()
        .map(|(k, rates)| {
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let curve = CmcCurve {
                auc: mean(&rates),
                auc_at_200: mean(&rates[..rates.len().min(texelatt::retrieval::AUC_TRUNCATION)]),
                recognition_rate: rates,
            };
            (k, curve)
        })
        .collect()
}

/// Table with one row per variant and one AUC column per method.
pub fn format_table(rows: &[ReportRow]) -> String {
    let mut methods: Vec<&str> = Vec::new();
    let mut variants: Vec<&str> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
        if !variants.contains(&r.variant.as_str()) {
            variants.push(&r.variant);
        }
    }
    let mut s = format!("{:<14}", "variant");
    for m in &methods {
        s += &format!(" {m:>10} {:>10}", "@200");
    }
    s.push('\n');
    for v in &variants {
        s += &format!("{v:<14}");
        for m in &methods {
            match rows.iter().find(|r| r.variant == *v && r.method == *m) {
                Some(r) => s += &format!(" {:>10.4} {:>10.4}", r.auc, r.auc_at_200),
                None => s += &format!(" {:>10} {:>10}", "-", "-"),
            }
        }
        s.push('\n');
    }
    s
}
