//! The `run` pipeline: synth, distort, detect, describe, normalize,
//! retrieve and eval, each a cached stage under the output directory.
//!
//! Output layout:
//!
//! ```text
//! dataset/                       manifest.json, images/, ground_truth/
//! queries/<variant>/             queries.json, images/
//! detections/<set>/<id>.json     texels per image (Texel-Att only)
//! descriptors/<set>_<method>.csv raw descriptors, one row per image
//! descriptors/database_<method>_stats.json
//! results/<variant>_<method>_{report,cmc}.csv
//! results/report.csv, results/cmc.csv, results/cmc_<variant>.svg
//! report_manifest.json           every file above, by stage
//! ```
//!
//! `<set>` is `database` (the clean test split) or a variant name.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use texelatt::descriptor::NormalizationStats;
use texelatt::distortion::{make_query_set, QueryManifest, QUERY_MANIFEST_FILE};
use texelatt::experiment::{DetectorChoice, Method};
use texelatt::io::write_json;
use texelatt::retrieval::{cmc_svg, read_csv, write_csv, CmcRow, Metric, ReportRow};
use texelatt::synthesis::{default_palette, generate_dataset, load_manifest, DatasetManifest};
use texelatt::tamura::TamuraConfig;

use crate::cache::{KeyHasher, StageCache, StageRecord, StageStatus, CACHE_DIR};
use crate::config::ExperimentConfig;
use crate::error::{CliError, StageContext};
use crate::ops::{self, ImageItem};

pub const REPORT_MANIFEST_FILE: &str = "report_manifest.json";
pub const REPORT_FILE: &str = "results/report.csv";
pub const CMC_FILE: &str = "results/cmc.csv";
pub const DATABASE_SET: &str = "database";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestStage {
    pub name: String,
    pub cached: bool,
    pub stamp: PathBuf,
    pub outputs: Vec<PathBuf>,
}

/// Index of everything a run wrote, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportManifest {
    pub config: ExperimentConfig,
    pub report: PathBuf,
    pub cmc: PathBuf,
    pub stages: Vec<ManifestStage>,
}

impl ReportManifest {
    /// Every referenced file, stamps included.
    pub fn files(&self) -> Vec<PathBuf> {
        self.stages.iter().flat_map(|s| std::iter::once(s.stamp.clone()).chain(s.outputs.iter().cloned())).collect()
    }
}

pub struct RunSummary {
    pub rows: Vec<ReportRow>,
    pub stages: Vec<StageRecord>,
    pub manifest: PathBuf,
}

impl RunSummary {
    pub fn ran(&self) -> Vec<&str> {
        self.stages.iter().filter(|s| s.status == StageStatus::Ran).map(|s| s.name.as_str()).collect()
    }
}

fn rel(root: &Path, path: &Path) -> PathBuf {
    path.strip_prefix(root).unwrap_or(path).to_path_buf()
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Removes a stage's previous output directory so that no stale files
/// outlive a rerun.
fn fresh_dir(path: &Path) -> Result<(), CliError> {
    if path.exists() {
        fs::remove_dir_all(path).map_err(|e| CliError::io(path, e))?;
    }
    create_dir(path)
}

pub fn run(config: &ExperimentConfig) -> Result<RunSummary, CliError> {
    let root = config.output_dir.clone();
    create_dir(&root)?;
    let mut cache = StageCache::new(&root);
    let tamura = TamuraConfig {
        extended: config.tamura_extended,
        ..Default::default()
    };

    // synth
    let d = &config.dataset;
    let palette = default_palette();
    let key = KeyHasher::new("synth").json(d).json(&palette).finish();
    cache.run("synth", &key, |root| {
        let dir = root.join("dataset");
        fresh_dir(&dir)?;
        let m = generate_dataset(d.n, d.seed, &dir, d.split_ratio, d.canvas, &palette).stage("synth")?;
        let mut out = vec![PathBuf::from("dataset/manifest.json")];
        for e in &m.entries {
            out.push(Path::new("dataset").join(&e.image));
            out.push(Path::new("dataset").join(&e.ground_truth));
        }
        Ok(out)
    })?;
    let dataset_dir = root.join("dataset");
    let manifest_path = dataset_dir.join("manifest.json");
    let manifest: DatasetManifest = load_manifest(&manifest_path).stage("synth")?;
    let database: Vec<ImageItem> = manifest
        .test_entries()
        .map(|e| ImageItem {
            id: e.id.clone(),
            image: dataset_dir.join(&e.image),
            ground_truth: dataset_dir.join(&e.ground_truth),
        })
        .collect();
    let database_images: Vec<&Path> = database.iter().map(|i| i.image.as_path()).collect();

    // distort
    let mut query_sets: Vec<(String, Vec<ImageItem>, PathBuf)> = Vec::new();
    for spec in &config.distortions {
        let variant = spec.name();
        let stage = format!("distort:{variant}");
        let key = KeyHasher::new(&stage).json(spec).file(&manifest_path)?.files(database_images.iter().copied())?.finish();
        let out_dir = root.join("queries").join(&variant);
        cache.run(&stage, &key, |root| {
            fresh_dir(&out_dir)?;
            let qm = make_query_set(&manifest, &dataset_dir, spec, &out_dir).stage(&stage)?;
            let mut out = vec![rel(root, &out_dir.join(QUERY_MANIFEST_FILE))];
            out.extend(qm.queries.iter().map(|q| rel(root, &out_dir.join(&q.image))));
            Ok(out)
        })?;
        let qm_path = out_dir.join(QUERY_MANIFEST_FILE);
        let qm = QueryManifest::load(&qm_path).stage(&stage)?;
        let by_id: BTreeMap<&str, &ImageItem> = database.iter().map(|i| (i.id.as_str(), i)).collect();
        let items = qm
            .queries
            .iter()
            .map(|q| {
                let source = by_id.get(q.truth.as_str()).ok_or_else(|| CliError::stage(&stage, texelatt::Error::MissingTruth(q.id.clone())))?;
                Ok(ImageItem {
                    id: q.id.clone(),
                    image: out_dir.join(&q.image),
                    ground_truth: source.ground_truth.clone(),
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        query_sets.push((variant, items, qm_path));
    }

    let mut sets: Vec<(&str, &[ImageItem])> = vec![(DATABASE_SET, &database)];
    sets.extend(query_sets.iter().map(|(v, items, _)| (v.as_str(), items.as_slice())));

    // detect (Texel-Att only)
    let mut detections: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    if config.methods.iter().any(|(m, _)| *m == Method::TexelAtt) {
        for &(set, items) in &sets {
            let stage = format!("detect:{set}");
            let mut h = KeyHasher::new(&stage);
            h.json(&config.detector);
            for item in items {
                h.text(&item.id);
                match config.detector {
                    DetectorChoice::Oracle => h.file(&item.ground_truth)?,
                    DetectorChoice::Classical(_) => h.file(&item.image)?,
                };
            }
            let key = h.finish();
            let out_dir = root.join("detections").join(set);
            let record = cache.run(&stage, &key, |root| {
                fresh_dir(&out_dir)?;
                let paths = ops::detect_items(&stage, items, &config.detector, &out_dir)?;
                Ok(paths.iter().map(|p| rel(root, p)).collect())
            })?;
            detections.insert(set.to_string(), record.outputs.iter().map(|p| root.join(p)).collect());
        }
    }

    // describe
    let descriptor_path = |set: &str, method: Method| root.join("descriptors").join(format!("{set}_{method}.csv"));
    create_dir(&root.join("descriptors"))?;
    for &(method, _) in &config.methods {
        for &(set, items) in &sets {
            let stage = format!("describe:{set}:{method}");
            let det = (method == Method::TexelAtt).then(|| detections[set].as_slice());
            let mut h = KeyHasher::new(&stage);
            h.json(&tamura);
            for (i, item) in items.iter().enumerate() {
                h.text(&item.id).file(&item.image)?;
                if let Some(d) = det {
                    h.file(&d[i])?;
                }
            }
            let key = h.finish();
            let out = descriptor_path(set, method);
            cache.run(&stage, &key, |root| {
                ops::describe_items(&stage, method, items, det, &tamura, &out)?;
                Ok(vec![rel(root, &out)])
            })?;
        }
    }

    // normalize: stats of the database descriptors, kept for inspection
    for &(method, _) in &config.methods {
        let stage = format!("normalize:{method}");
        let db = descriptor_path(DATABASE_SET, method);
        let key = KeyHasher::new(&stage).file(&db)?.finish();
        let out = root.join("descriptors").join(format!("{DATABASE_SET}_{method}_stats.json"));
        cache.run(&stage, &key, |root| {
            let rows = ops::read_descriptor_csv(&db, method, &tamura).stage(&stage)?;
            let vectors: Vec<&Vec<f64>> = rows.iter().map(|(_, v)| v).collect();
            let stats = NormalizationStats::fit(&vectors).stage(&stage)?;
            write_json(&out, &stats).stage(&stage)?;
            Ok(vec![rel(root, &out)])
        })?;
    }

    // retrieve
    create_dir(&root.join("results"))?;
    let mut retrieval_outputs: Vec<PathBuf> = Vec::new();
    for (variant, _, qm_path) in &query_sets {
        for &(method, metric) in &config.methods {
            let stage = format!("retrieve:{variant}:{method}");
            let db = descriptor_path(DATABASE_SET, method);
            let q = descriptor_path(variant, method);
            let key = KeyHasher::new(&stage).text(metric.as_str()).file(&db)?.file(&q)?.file(qm_path)?.finish();
            let prefix = root.join("results").join(format!("{variant}_{method}"));
            let record = cache.run(&stage, &key, |root| {
                let outputs = retrieve_files(&db, &q, qm_path, variant, method, metric, &tamura, &prefix).stage(&stage)?;
                Ok(vec![rel(root, &outputs.report), rel(root, &outputs.cmc)])
            })?;
            retrieval_outputs.extend(record.outputs.iter().cloned());
        }
    }

    // eval
    let key = {
        let mut h = KeyHasher::new("eval");
        for p in &retrieval_outputs {
            h.text(&p.to_string_lossy()).file(&root.join(p))?;
        }
        h.finish()
    };
    let variants: Vec<&str> = query_sets.iter().map(|(v, _, _)| v.as_str()).collect();
    cache.run("eval", &key, |root| {
        let (rows, cmc) = merge_results(root, &retrieval_outputs).stage("eval")?;
        write_csv(&root.join(REPORT_FILE), &rows).stage("eval")?;
        write_csv(&root.join(CMC_FILE), &cmc).stage("eval")?;
        let mut out = vec![PathBuf::from(REPORT_FILE), PathBuf::from(CMC_FILE)];
        let curves = ops::curves_from_rows(&cmc);
        for v in &variants {
            let named: Vec<(&str, &texelatt::retrieval::CmcCurve)> =
                curves.iter().filter(|((cv, _), _)| cv == v).map(|((_, m), c)| (m.as_str(), c)).collect();
            let path = PathBuf::from(format!("results/cmc_{v}.svg"));
            fs::write(root.join(&path), cmc_svg(v, &named)).map_err(|e| CliError::io(&root.join(&path), e))?;
            out.push(path);
        }
        Ok(out)
    })?;

    let rows: Vec<ReportRow> = read_csv(&root.join(REPORT_FILE)).stage("eval")?;
    let report_manifest = ReportManifest {
        config: config.clone(),
        report: PathBuf::from(REPORT_FILE),
        cmc: PathBuf::from(CMC_FILE),
        stages: cache
            .records
            .iter()
            .map(|r| ManifestStage {
                name: r.name.clone(),
                cached: r.status == StageStatus::Cached,
                stamp: r.stamp.clone(),
                outputs: r.outputs.clone(),
            })
            .collect(),
    };
    let manifest = root.join(REPORT_MANIFEST_FILE);
    write_json(&manifest, &report_manifest).stage("eval")?;
    prune_orphans(&root, &report_manifest)?;
    Ok(RunSummary {
        rows,
        stages: cache.records,
        manifest,
    })
}

#[allow(clippy::too_many_arguments)]
fn retrieve_files(
    db: &Path,
    queries: &Path,
    query_manifest: &Path,
    variant: &str,
    method: Method,
    metric: Metric,
    tamura: &TamuraConfig,
    prefix: &Path,
) -> texelatt::Result<ops::RetrievalOutputs> {
    let database = ops::read_descriptor_csv(db, method, tamura)?;
    let query_rows = ops::read_descriptor_csv(queries, method, tamura)?;
    let qm = QueryManifest::load(query_manifest)?;
    let truth: BTreeMap<String, String> = qm.queries.into_iter().map(|q| (q.id, q.truth)).collect();
    ops::retrieve(&database, &query_rows, &truth, variant, method, metric, prefix)
}

fn merge_results(root: &Path, files: &[PathBuf]) -> texelatt::Result<(Vec<ReportRow>, Vec<CmcRow>)> {
    let mut rows = Vec::new();
    let mut cmc = Vec::new();
    for f in files {
        let path = root.join(f);
        if f.to_string_lossy().ends_with("_report.csv") {
            rows.extend(read_csv::<ReportRow>(&path)?);
        } else {
            cmc.extend(read_csv::<CmcRow>(&path)?);
        }
    }
    Ok((rows, cmc))
}

/// Deletes files under the stage directories that the manifest does not
/// reference, such as outputs of variants dropped from the config.
fn prune_orphans(root: &Path, manifest: &ReportManifest) -> Result<(), CliError> {
    let keep: std::collections::BTreeSet<PathBuf> = manifest.files().into_iter().collect();
    for dir in ["dataset", "queries", "detections", "descriptors", "results", CACHE_DIR] {
        let mut stack = vec![root.join(dir)];
        while let Some(d) = stack.pop() {
            let Ok(entries) = fs::read_dir(&d) else { continue };
            for entry in entries {
                let entry = entry.map_err(|e| CliError::io(&d, e))?;
                let path = entry.path();
                if path.is_dir() {
                    stack.push(path);
                } else if !keep.contains(&rel(root, &path)) {
                    fs::remove_file(&path).map_err(|e| CliError::io(&path, e))?;
                }
            }
        }
    }
    Ok(())
}
