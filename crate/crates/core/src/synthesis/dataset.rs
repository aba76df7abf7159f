use std::path::{Path, PathBuf};

use image::RgbImage;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{render, sample_spec, GroundTruth, TextureSpec};
use crate::color::Rgb;
use crate::error::{Error, Result};
use crate::{io, rng};

const STREAM_ITEM: u64 = 0x1_0000;
const STREAM_SPLIT: u64 = 0x300;
const MAX_ATTEMPTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub id: String,
    /// Relative to the manifest's directory.
    pub image: PathBuf,
    pub ground_truth: PathBuf,
    pub spec: TextureSpec,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub canvas_px: u32,
    pub split_ratio: f64,
    pub entries: Vec<DatasetEntry>,
    pub split: Split,
}

impl DatasetManifest {
    pub fn entry(&self, id: &str) -> Option<&DatasetEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn test_entries(&self) -> impl Iterator<Item = &DatasetEntry> {
        self.split.test.iter().filter_map(|id| self.entry(id))
    }
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    io::read_json(path)
}

pub fn item_id(index: usize) -> String {
    format!("img_{index:05}")
}

/// Samples and renders item `index` of a dataset, resampling infeasible
/// specs from the item's own seed stream.
pub fn generate_item(seed: u64, index: usize, canvas_px: u32, palette: &[Rgb]) -> Result<(TextureSpec, RgbImage, GroundTruth)> {
    let mut stream = rng::stream(seed, STREAM_ITEM + index as u64);
    let mut last = None;
    for _ in 0..MAX_ATTEMPTS {
        let spec = sample_spec(stream.gen(), palette)?.rescaled(canvas_px);
        match render(&spec) {
            Ok((img, gt)) => return Ok((spec, img, gt)),
            Err(e @ Error::InfeasibleSpec { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Partitions `ids` with a seeded shuffle; the train share is
/// `round(n * ratio)`.
pub fn split_ids(ids: &[String], ratio: f64, seed: u64) -> Split {
    let mut shuffled = ids.to_vec();
    shuffled.shuffle(&mut rng::stream(seed, STREAM_SPLIT));
    let n_train = ((ids.len() as f64) * ratio).round() as usize;
    let mut train = shuffled[..n_train].to_vec();
    let mut test = shuffled[n_train..].to_vec();
    train.sort();
    test.sort();
    Split { train, test }
}

/// Writes `n` images, their ground truth and `manifest.json` under `out_dir`.
pub fn generate_dataset(n: usize, seed: u64, out_dir: &Path, split_ratio: f64, canvas_px: u32, palette: &[Rgb]) -> Result<DatasetManifest> {
    if n < 10 {
        return Err(Error::InvalidArgument(format!("dataset needs at least 10 items, got {n}")));
    }
    if !(0.0..=1.0).contains(&split_ratio) {
        return Err(Error::InvalidArgument(format!("split ratio {split_ratio} outside [0, 1]")));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let entries = (0..n)
        .into_par_iter()
        .map(|i| {
            let id = item_id(i);
            let (spec, img, gt) = generate_item(seed, i, canvas_px, palette).map_err(|e| e.in_stage("synth", &id))?;
            let image = PathBuf::from("images").join(format!("{id}.png"));
            let ground_truth = PathBuf::from("ground_truth").join(format!("{id}.json"));
            io::write_png(&out_dir.join(&image), &img)?;
            gt.save(&out_dir.join(&ground_truth))?;
            Ok(DatasetEntry {
                id,
                image,
                ground_truth,
                spec,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let ids: Vec<String> = entries.iter().map(|e| e.id.clone()).collect();
    let manifest = DatasetManifest {
        seed,
        canvas_px,
        split_ratio,
        split: split_ids(&ids, split_ratio, seed),
        entries,
    };
    io::write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}
