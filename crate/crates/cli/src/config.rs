//! Declarative experiment configuration (TOML).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use texelatt::distortion::{DistortionSpec, Effect, DEFAULT_NOISE_PROBABILITY, RESOLUTIONS};
use texelatt::experiment::{DetectorChoice, Method};
use texelatt::retrieval::Metric;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub n: usize,
    pub seed: u64,
    pub canvas: u32,
    /// Share of items in the train split. Nothing is trained, so the
    /// retrieval experiment only uses the test split.
    pub split_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    pub dataset: DatasetConfig,
    pub detector: DetectorChoice,
    pub distortions: Vec<DistortionSpec>,
    /// Methods in run order with their ranking metric.
    pub methods: Vec<(Method, Metric)>,
    /// Adds line-likeness, regularity and roughness to the Tamura vector.
    pub tamura_extended: bool,
}

/// File layout with every field optional, so that validation can name what
/// is missing instead of failing on the first absent key.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    output_dir: Option<PathBuf>,
    dataset: Option<RawDataset>,
    detector: Option<DetectorChoice>,
    distortions: Option<Vec<RawDistortion>>,
    methods: Option<Vec<Method>>,
    #[serde(default)]
    metrics: BTreeMap<Method, Metric>,
    #[serde(default)]
    tamura: RawTamura,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    n: Option<usize>,
    seed: Option<u64>,
    canvas: Option<u32>,
    split_ratio: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTamura {
    #[serde(default)]
    extended: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDistortion {
    resolution: Option<u32>,
    effect: Option<String>,
    p: Option<f64>,
    seed: Option<u64>,
}

impl ExperimentConfig {
    /// Reads and validates a config file. Relative `output_dir`s resolve
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self, Vec<String>> {
        let text = std::fs::read_to_string(path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
        let base = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, Vec<String>> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| vec![format!("parse error: {}", e.message())])?;
        let mut problems = Vec::new();

        let output_dir = match raw.output_dir {
            Some(dir) => {
                let dir = if dir.is_absolute() { dir } else { base.join(dir) };
                check_output_dir(&dir, &mut problems);
                dir
            }
            None => {
                problems.push("output_dir is missing".into());
                PathBuf::new()
            }
        };

        let dataset = raw.dataset.unwrap_or_default();
        let n = dataset.n;
        let seed = dataset.seed;
        let canvas = dataset.canvas;
        let split_ratio = dataset.split_ratio;
        for (field, missing) in [
            ("n", n.is_none()),
            ("seed", seed.is_none()),
            ("canvas", canvas.is_none()),
            ("split_ratio", split_ratio.is_none()),
        ] {
            if missing {
                problems.push(format!("dataset.{field} is missing"));
            }
        }
        if let Some(n) = n {
            if n < 10 {
                problems.push(format!("dataset.n = {n} is below the minimum of 10"));
            }
        }
        if let Some(c) = canvas {
            if !(64..=8192).contains(&c) {
                problems.push(format!("dataset.canvas = {c} outside [64, 8192]"));
            }
        }
        if let Some(r) = split_ratio {
            if !(0.0..1.0).contains(&r) {
                problems.push(format!("dataset.split_ratio = {r} outside [0, 1)"));
            }
        }
        if let (Some(n), Some(r)) = (n, split_ratio) {
            let test = n - ((n as f64 * r).round() as usize).min(n);
            if (0.0..1.0).contains(&r) && test < 2 {
                problems.push(format!("dataset.split_ratio = {r} leaves {test} test items; retrieval needs at least 2"));
            }
        }

        let detector = raw.detector.unwrap_or_default();
        if let DetectorChoice::Classical(d) = &detector {
            if !(d.circularity_threshold > 0.0 && d.circularity_threshold <= 1.0) {
                problems.push(format!("detector.circularity_threshold = {} outside (0, 1]", d.circularity_threshold));
            }
            if !(d.elongation_threshold >= 1.0) {
                problems.push(format!("detector.elongation_threshold = {} below 1", d.elongation_threshold));
            }
            if !(0.0..=1.0).contains(&d.min_visible_fraction) {
                problems.push(format!("detector.min_visible_fraction = {} outside [0, 1]", d.min_visible_fraction));
            }
        }

        let mut distortions = Vec::new();
        match raw.distortions {
            None => problems.push("distortions is missing".into()),
            Some(list) if list.is_empty() => problems.push("distortions is empty".into()),
            Some(list) => {
                for (i, d) in list.into_iter().enumerate() {
                    if let Some(spec) = distortion(i, d, &mut problems) {
                        distortions.push(spec);
                    }
                }
            }
        }
        if let Some(c) = canvas {
            for (i, d) in distortions.iter().enumerate() {
                if d.resolution > c {
                    problems.push(format!("distortions[{i}].resolution = {} exceeds dataset.canvas = {c}", d.resolution));
                }
            }
        }
        let mut names: Vec<String> = distortions.iter().map(DistortionSpec::name).collect();
        names.sort();
        names.dedup();
        if names.len() != distortions.len() {
            problems.push("distortions contains duplicate variants".into());
        }

        let methods = match raw.methods {
            None => {
                problems.push("methods is missing".into());
                Vec::new()
            }
            Some(list) => {
                if list.is_empty() {
                    problems.push("methods is empty".into());
                }
                let mut seen = Vec::new();
                for m in &list {
                    if seen.contains(m) {
                        problems.push(format!("methods lists {m} twice"));
                    }
                    seen.push(*m);
                }
                list.into_iter()
                    .map(|m| (m, raw.metrics.get(&m).copied().unwrap_or(m.default_metric())))
                    .collect()
            }
        };
        for m in raw.metrics.keys() {
            if !methods.iter().any(|(x, _)| x == m) {
                problems.push(format!("metrics.{m} given for a method that is not run"));
            }
        }

        if !problems.is_empty() {
            return Err(problems);
        }
        Ok(ExperimentConfig {
            output_dir,
            dataset: DatasetConfig {
                n: n.unwrap(),
                seed: seed.unwrap(),
                canvas: canvas.unwrap(),
                split_ratio: split_ratio.unwrap(),
            },
            detector,
            distortions,
            methods,
            tamura_extended: raw.tamura.extended,
        })
    }
}

fn distortion(i: usize, d: RawDistortion, problems: &mut Vec<String>) -> Option<DistortionSpec> {
    let field = |name: &str| format!("distortions[{i}].{name}");
    let before = problems.len();
    if d.resolution.is_none() {
        problems.push(format!("{} is missing", field("resolution")));
    }
    if d.seed.is_none() {
        problems.push(format!("{} is missing", field("seed")));
    }
    if let Some(r) = d.resolution {
        if !RESOLUTIONS.contains(&r) {
            problems.push(format!("{} = {r} is not one of {RESOLUTIONS:?}", field("resolution")));
        }
    }
    let effect = match d.effect.as_deref() {
        None => {
            problems.push(format!("{} is missing", field("effect")));
            None
        }
        Some("noise") => {
            let p = d.p.unwrap_or(DEFAULT_NOISE_PROBABILITY);
            if !(0.0..=1.0).contains(&p) {
                problems.push(format!("{} = {p} outside [0, 1]", field("p")));
            }
            Some(Effect::ImpulsiveNoise { p })
        }
        Some("light") => {
            if d.p.is_some() {
                problems.push(format!("{} only applies to the noise effect", field("p")));
            }
            Some(Effect::RadialLighting)
        }
        Some(other) => {
            problems.push(format!("{} = `{other}` is not `noise` or `light`", field("effect")));
            None
        }
    };
    (problems.len() == before).then(|| DistortionSpec {
        resolution: d.resolution.unwrap(),
        effect: effect.unwrap(),
        seed: d.seed.unwrap(),
    })
}

/// The directory must exist or be creatable below an existing directory.
fn check_output_dir(dir: &Path, problems: &mut Vec<String>) {
    if dir.exists() {
        if !dir.is_dir() {
            problems.push(format!("output_dir {} is not a directory", dir.display()));
        }
        return;
    }
    match dir.ancestors().skip(1).find(|a| a.exists()) {
        Some(a) if a.is_dir() => {}
        _ => problems.push(format!("output_dir {} has no existing parent directory", dir.display())),
    }
}

/// Problems in the config file at `path`; empty when it is valid.
pub fn validate(path: &Path) -> Vec<String> {
    ExperimentConfig::load(path).err().unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    const VALID: &str = r#"
output_dir = "out"
methods = ["texelatt", "tamura"]

[dataset]
n = 20
seed = 3
canvas = 320
split_ratio = 0.0

[[distortions]]
resolution = 100
effect = "noise"
seed = 5

[[distortions]]
resolution = 300
effect = "light"
seed = 5
"#;

    fn parse(text: &str) -> Result<ExperimentConfig, Vec<String>> {
        ExperimentConfig::parse(text, &std::env::temp_dir())
    }

    #[test]
    fn valid_config() {
        let c = parse(VALID).unwrap();
        assert_eq!(c.methods, vec![(Method::TexelAtt, Metric::Cosine), (Method::Tamura, Metric::Cityblock)]);
        assert_eq!(c.distortions[0].name(), "r100_noise");
        assert_eq!(c.distortions[0].effect, Effect::ImpulsiveNoise { p: 0.2 });
        assert_eq!(c.detector, DetectorChoice::default());
        assert!(c.output_dir.ends_with("out"));
    }

    #[test]
    fn resolution_above_canvas() {
        let problems = parse(&VALID.replace("canvas = 320", "canvas = 256")).unwrap_err();
        assert_eq!(problems, vec!["distortions[1].resolution = 300 exceeds dataset.canvas = 256".to_string()]);
    }

    #[test]
    fn missing_seed_is_one_problem() {
        let problems = parse(&VALID.replace("seed = 3\n", "")).unwrap_err();
        assert_eq!(problems, vec!["dataset.seed is missing".to_string()]);
    }

    #[test]
    fn split_ratio_out_of_range() {
        let problems = parse(&VALID.replace("split_ratio = 0.0", "split_ratio = 1.2")).unwrap_err();
        assert_eq!(problems.len(), 1);
        assert!(problems[0].contains("split_ratio") && problems[0].contains("outside"), "{problems:?}");
    }

    #[test]
    fn distortion_problems_name_the_entry() {
        let text = VALID.replacen("resolution = 100", "resolution = 150", 1).replacen("seed = 5\n", "", 1);
        let problems = parse(&text).unwrap_err();
        assert!(problems.iter().any(|p| p.starts_with("distortions[0].resolution")), "{problems:?}");
        assert!(problems.iter().any(|p| p == "distortions[0].seed is missing"), "{problems:?}");
    }

    #[test]
    fn oracle_detector_and_metric_override() {
        let text = VALID.replace(
            "methods = [\"texelatt\", \"tamura\"]",
            "methods = [\"texelatt\"]\n\n[metrics]\ntexelatt = \"euclidean\"\n\n[detector]\nkind = \"oracle\"",
        );
        let c = parse(&text).unwrap();
        assert_eq!(c.detector, DetectorChoice::Oracle);
        assert_eq!(c.methods, vec![(Method::TexelAtt, Metric::Euclidean)]);
    }

    #[test]
    fn unknown_keys_rejected() {
        let problems = parse(&format!("{VALID}\n[extra]\nx = 1\n")).unwrap_err();
        assert!(problems[0].contains("extra"), "{problems:?}");
    }
}
