use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use texelatt::descriptor::NormalizationStats;
use texelatt::detection::{save_detections, DetectorConfig};
use texelatt::distortion::{make_query_set, DistortionSpec, Effect, QueryManifest, DEFAULT_NOISE_PROBABILITY};
use texelatt::experiment::{DetectorChoice, Method};
use texelatt::io::{read_vectors_csv, write_json, write_vectors_csv};
use texelatt::retrieval::{read_csv, write_csv, Metric, ReportRow};
use texelatt::synthesis::{default_palette, generate_dataset, load_manifest};
use texelatt::tamura::TamuraConfig;

use crate::config::{validate, ExperimentConfig};
use crate::error::{CliError, StageContext};
use crate::ops;
use crate::pipeline;

#[derive(Debug, Parser)]
#[command(name = "texelatt", version, about = "Element-based texture description and retrieval experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset of textures with ground truth.
    Synth(SynthArgs),
    /// Detect texels in an image.
    Detect(DetectArgs),
    /// Compute descriptors of images.
    Describe(DescribeArgs),
    /// Fit normalization statistics on database descriptors.
    Normalize(NormalizeArgs),
    /// Make a distorted query set from a dataset's test split.
    Distort(DistortArgs),
    /// Rank queries against a database and score the rankings.
    Retrieve(RetrieveArgs),
    /// Print and merge retrieval reports.
    Eval(EvalArgs),
    /// Run a whole experiment from a config file.
    Run(ConfigArgs),
    /// Check a config file without running anything.
    Validate(ConfigArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1024)]
    pub canvas: u32,
    /// Share of items in the train split.
    #[arg(long, default_value_t = 0.9)]
    pub split: f64,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Read texels from ground truth instead of detecting them.
    #[arg(long, requires = "gt")]
    pub oracle: bool,
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long)]
    pub circularity_threshold: Option<f64>,
    #[arg(long)]
    pub elongation_threshold: Option<f64>,
    /// Name colors on the image as is, without removing illumination gradients.
    #[arg(long)]
    pub no_flatten: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Texelatt,
    Tamura,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Texelatt => Method::TexelAtt,
            MethodArg::Tamura => Method::Tamura,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    Cosine,
    Cityblock,
    Euclidean,
}

impl From<MetricArg> for Metric {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Cosine => Metric::Cosine,
            MetricArg::Cityblock => Metric::Cityblock,
            MetricArg::Euclidean => Metric::Euclidean,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EffectArg {
    Noise,
    Light,
}

#[derive(Debug, Args)]
pub struct DescribeArgs {
    /// Images to describe; ids are the file stems.
    #[arg(long, required = true, num_args = 1..)]
    pub image: Vec<PathBuf>,
    /// Detection files, one per image (Texel-Att only).
    #[arg(long, num_args = 1..)]
    pub detections: Vec<PathBuf>,
    /// Descriptor CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "texelatt")]
    pub method: MethodArg,
    /// Add line-likeness, regularity and roughness to Tamura descriptors.
    #[arg(long)]
    pub tamura_extended: bool,
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    /// Database descriptor CSV.
    #[arg(long)]
    pub db: PathBuf,
    /// Statistics JSON to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DistortArgs {
    /// Dataset manifest.json.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_parser = ["100", "200", "300"])]
    pub resolution: String,
    #[arg(long, value_enum)]
    pub effect: EffectArg,
    #[arg(long)]
    pub seed: u64,
    /// Impulse probability for the noise effect.
    #[arg(long, default_value_t = DEFAULT_NOISE_PROBABILITY)]
    pub p: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    /// Database descriptor CSV.
    #[arg(long)]
    pub db: PathBuf,
    /// Query descriptor CSV.
    #[arg(long)]
    pub queries: PathBuf,
    /// Query manifest mapping each query to its database id.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Defaults to cosine for texelatt and cityblock for tamura.
    #[arg(long, value_enum)]
    pub metric: Option<MetricArg>,
    #[arg(long)]
    pub tamura_extended: bool,
    /// Directory for `<variant>_<method>_report.csv` and `_cmc.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Report CSVs (variant, method, metric, auc, auc_at_200).
    #[arg(long, required = true, num_args = 1..)]
    pub report: Vec<PathBuf>,
    /// Write the merged rows here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    pub config: PathBuf,
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Detect(a) => detect(a),
        Command::Describe(a) => describe(a),
        Command::Normalize(a) => normalize(a),
        Command::Distort(a) => distort(a),
        Command::Retrieve(a) => retrieve(a),
        Command::Eval(a) => eval(a),
        Command::Run(a) => run(a),
        Command::Validate(a) => {
            let problems = validate(&a.config);
            if problems.is_empty() {
                println!("{}: ok", a.config.display());
                Ok(())
            } else {
                Err(CliError::Validation(problems))
            }
        }
    }
}

fn synth(a: SynthArgs) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&a.split) {
        return Err(CliError::invalid(format!("--split {} outside [0, 1]", a.split)));
    }
    let m = generate_dataset(a.n, a.seed, &a.out, a.split, a.canvas, &default_palette()).stage("synth")?;
    println!("{} images ({} train, {} test) in {}", m.entries.len(), m.split.train.len(), m.split.test.len(), a.out.display());
    Ok(())
}

fn detect(a: DetectArgs) -> Result<(), CliError> {
    let detector = if a.oracle {
        DetectorChoice::Oracle
    } else {
        let mut c = DetectorConfig::default();
        if let Some(t) = a.circularity_threshold {
            c.circularity_threshold = t;
        }
        if let Some(t) = a.elongation_threshold {
            c.elongation_threshold = t;
        }
        if a.no_flatten {
            c.flatten = None;
        }
        DetectorChoice::Classical(c)
    };
    let texels = ops::detect_image(&a.image, a.gt.as_deref(), &detector).stage("detect")?;
    save_detections(&a.out, &texels).stage("detect")?;
    println!("{} texels -> {}", texels.len(), a.out.display());
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn describe(a: DescribeArgs) -> Result<(), CliError> {
    let method = Method::from(a.method);
    if method == Method::TexelAtt && a.detections.len() != a.image.len() {
        return Err(CliError::invalid(format!(
            "texelatt needs one --detections file per --image ({} images, {} detection files)",
            a.image.len(),
            a.detections.len()
        )));
    }
    let tamura = TamuraConfig {
        extended: a.tamura_extended,
        ..Default::default()
    };
    let mut rows = Vec::new();
    for (i, image) in a.image.iter().enumerate() {
        let id = stem(image);
        let v = ops::describe_image(method, image, a.detections.get(i).map(PathBuf::as_path), &tamura)
            .map_err(|e| e.in_stage("describe", &id))
            .stage("describe")?;
        rows.push((id, v));
    }
    write_vectors_csv(&a.out, ops::descriptor_columns(method, &tamura), &rows).stage("describe")?;
    println!("{} descriptors -> {}", rows.len(), a.out.display());
    Ok(())
}

fn normalize(a: NormalizeArgs) -> Result<(), CliError> {
    let (_, rows) = read_vectors_csv(&a.db).stage("normalize")?;
    let vectors: Vec<&Vec<f64>> = rows.iter().map(|(_, v)| v).collect();
    let stats = NormalizationStats::fit(&vectors).stage("normalize")?;
    write_json(&a.out, &stats).stage("normalize")?;
    println!("statistics of {} descriptors -> {}", rows.len(), a.out.display());
    Ok(())
}

fn distort(a: DistortArgs) -> Result<(), CliError> {
    let effect = match a.effect {
        EffectArg::Noise => Effect::ImpulsiveNoise { p: a.p },
        EffectArg::Light => Effect::RadialLighting,
    };
    let spec = DistortionSpec {
        resolution: a.resolution.parse().expect("clap restricts the values"),
        effect,
        seed: a.seed,
    };
    spec.validate().map_err(|e| CliError::invalid(e.to_string()))?;
    let manifest = load_manifest(&a.manifest).stage("distort")?;
    let dataset_dir = a.manifest.parent().unwrap_or(Path::new("."));
    let qm = make_query_set(&manifest, dataset_dir, &spec, &a.out).stage("distort")?;
    println!("{} queries ({}) -> {}", qm.queries.len(), qm.variant, a.out.display());
    Ok(())
}

fn retrieve(a: RetrieveArgs) -> Result<(), CliError> {
    let method = Method::from(a.method);
    let metric = a.metric.map(Metric::from).unwrap_or(method.default_metric());
    let tamura = TamuraConfig {
        extended: a.tamura_extended,
        ..Default::default()
    };
    let database = ops::read_descriptor_csv(&a.db, method, &tamura).stage("retrieve")?;
    let queries = ops::read_descriptor_csv(&a.queries, method, &tamura).stage("retrieve")?;
    let qm = QueryManifest::load(&a.truth).stage("retrieve")?;
    let truth: BTreeMap<String, String> = qm.queries.iter().map(|q| (q.id.clone(), q.truth.clone())).collect();
    std::fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    let prefix = a.out.join(format!("{}_{method}", qm.variant));
    let out = ops::retrieve(&database, &queries, &truth, &qm.variant, method, metric, &prefix).stage("retrieve")?;
    println!(
        "{} {method} ({metric}): auc {:.4}, auc@200 {:.4} -> {}",
        qm.variant,
        out.row.auc,
        out.row.auc_at_200,
        out.report.display()
    );
    Ok(())
}

fn eval(a: EvalArgs) -> Result<(), CliError> {
    let mut rows: Vec<ReportRow> = Vec::new();
    for path in &a.report {
        rows.extend(read_csv::<ReportRow>(path).stage("eval")?);
    }
    if rows.is_empty() {
        return Err(CliError::invalid("the reports contain no rows"));
    }
    print!("{}", ops::format_table(&rows));
    if let Some(out) = &a.out {
        write_csv(out, &rows).stage("eval")?;
    }
    Ok(())
}

fn run(a: ConfigArgs) -> Result<(), CliError> {
    let config = ExperimentConfig::load(&a.config).map_err(CliError::Validation)?;
    let summary = pipeline::run(&config)?;
    print!("{}", ops::format_table(&summary.rows));
    println!("report manifest: {}", summary.manifest.display());
    Ok(())
}
