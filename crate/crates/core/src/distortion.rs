//! Query-image degradations: resolution loss followed by impulsive noise or
//! a radial lighting change.

use std::fmt;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthesis::DatasetManifest;
use crate::{io, rng};

pub const RESOLUTIONS: [u32; 3] = [100, 200, 300];
pub const DEFAULT_NOISE_PROBABILITY: f64 = 0.2;
/// Peak extra gain of the lighting effect.
pub const LIGHT_AMPLITUDE: f64 = 0.8;
/// Gaussian width of the lighting effect relative to the canvas side.
pub const LIGHT_SIGMA_FRACTION: f64 = 0.35;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Effect {
    ImpulsiveNoise { p: f64 },
    RadialLighting,
}

impl Effect {
    pub fn noise() -> Self {
        Effect::ImpulsiveNoise { p: DEFAULT_NOISE_PROBABILITY }
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            Effect::ImpulsiveNoise { .. } => "noise",
            Effect::RadialLighting => "light",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionSpec {
    pub resolution: u32,
    pub effect: Effect,
    pub seed: u64,
}

impl DistortionSpec {
    /// The six resolution/effect combinations, sharing one seed.
    pub fn standard_variants(seed: u64) -> Vec<DistortionSpec> {
        let mut out = Vec::new();
        for effect in [Effect::noise(), Effect::RadialLighting] {
            for resolution in RESOLUTIONS {
                out.push(DistortionSpec { resolution, effect, seed });
            }
        }
        out
    }

    /// Short variant label such as `r100_noise`.
    pub fn name(&self) -> String {
        format!("r{}_{}", self.resolution, self.effect.short_name())
    }

    pub fn validate(&self) -> Result<()> {
        if !RESOLUTIONS.contains(&self.resolution) {
            return Err(Error::InvalidArgument(format!(
                "resolution {} is not one of {RESOLUTIONS:?}",
                self.resolution
            )));
        }
        if let Effect::ImpulsiveNoise { p } = self.effect {
            check_probability(p)?;
        }
        Ok(())
    }

    /// Applies resampling and then the effect; the random stream is keyed by
    /// `key` (normally the image id).
    pub fn apply(&self, image: &RgbImage, key: &str) -> Result<RgbImage> {
        let seed = rng::seed_for_key(self.seed, &format!("{}/{key}", self.name()));
        let resampled = downsample_upsample(image, self.resolution)?;
        match self.effect {
            Effect::ImpulsiveNoise { p } => impulsive_noise(&resampled, p, seed),
            Effect::RadialLighting => Ok(radial_lighting(&resampled, seed)),
        }
    }
}

impl fmt::Display for DistortionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("noise probability {p} outside [0, 1]")))
    }
}

/// Area-average reduction to `resolution` x `resolution`, then bilinear
/// enlargement back to the input size. The reduced image is kept in
/// floating point; only the output is rounded.
pub fn downsample_upsample(image: &RgbImage, resolution: u32) -> Result<RgbImage> {
    let (w, h) = image.dimensions();
    if w != h {
        return Err(Error::InvalidArgument(format!("resampling needs a square image, got {w}x{h}")));
    }
    if resolution == 0 || resolution > w {
        return Err(Error::InvalidArgument(format!("resolution {resolution} outside 1..={w}")));
    }
    let small = area_downsample(image, resolution);
    Ok(bilinear_upsample(&small, resolution as usize, w))
}

/// Overlap of source pixels with each destination cell along one axis:
/// `(first source index, weights)`, weights summing to 1.
fn area_weights(src: usize, dst: usize) -> Vec<(usize, Vec<f64>)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let lo = i as f64 * scale;
            let hi = (i + 1) as f64 * scale;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(src);
            let weights = (first..last)
                .map(|s| ((s + 1) as f64).min(hi) - (s as f64).max(lo))
                .map(|overlap| overlap / scale)
                .collect();
            (first, weights)
        })
        .collect()
}

fn area_downsample(image: &RgbImage, r: u32) -> Vec<[f64; 3]> {
    let (w, h) = (image.width() as usize, image.height() as usize);
    let r = r as usize;
    let wx = area_weights(w, r);
    let wy = area_weights(h, r);
    // Rows first: h x r intermediate.
    let mut rows = vec![[0.0f64; 3]; h * r];
    for y in 0..h {
        for (i, (first, weights)) in wx.iter().enumerate() {
            let mut acc = [0.0; 3];
            for (k, &wgt) in weights.iter().enumerate() {
                let p = image.get_pixel((first + k) as u32, y as u32).0;
                for c in 0..3 {
                    acc[c] += wgt * p[c] as f64;
                }
            }
            rows[y * r + i] = acc;
        }
    }
    let mut out = vec![[0.0f64; 3]; r * r];
    for (j, (first, weights)) in wy.iter().enumerate() {
        for i in 0..r {
            let mut acc = [0.0; 3];
            for (k, &wgt) in weights.iter().enumerate() {
                let p = rows[(first + k) * r + i];
                for c in 0..3 {
                    acc[c] += wgt * p[c];
                }
            }
            out[j * r + i] = acc;
        }
    }
    out
}

/// Source sample positions for bilinear enlargement, pixel centres aligned
/// and clamped to the source grid: `(lower index, upper index, fraction)`.
fn bilinear_taps(src: usize, dst: u32) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|x| {
            let u = ((x as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let lo = u.floor() as usize;
            let hi = (lo + 1).min(src - 1);
            (lo, hi, u - lo as f64)
        })
        .collect()
}

fn bilinear_upsample(small: &[[f64; 3]], r: usize, side: u32) -> RgbImage {
    let taps = bilinear_taps(r, side);
    let mut out = RgbImage::new(side, side);
    for (y, &(y0, y1, fy)) in taps.iter().enumerate() {
        for (x, &(x0, x1, fx)) in taps.iter().enumerate() {
            let mut px = [0u8; 3];
            for c in 0..3 {
                let top = small[y0 * r + x0][c] * (1.0 - fx) + small[y0 * r + x1][c] * fx;
                let bottom = small[y1 * r + x0][c] * (1.0 - fx) + small[y1 * r + x1][c] * fx;
                px[c] = (top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8;
            }
            out.put_pixel(x as u32, y as u32, Rgb(px));
        }
    }
    out
}

/// Salt-and-pepper noise: each pixel independently becomes black or white
/// with probability `p`.
pub fn impulsive_noise(image: &RgbImage, p: f64, seed: u64) -> Result<RgbImage> {
    Ok(impulsive_noise_counted(image, p, seed)?.0)
}

/// As [`impulsive_noise`], also returning how many pixels were replaced
/// (including replacements that happen to keep the old value).
pub fn impulsive_noise_counted(image: &RgbImage, p: f64, seed: u64) -> Result<(RgbImage, usize)> {
    check_probability(p)?;
    let mut rng = rng::stream(seed, 0);
    let mut out = image.clone();
    let mut replaced = 0;
    for px in out.pixels_mut() {
        if rng.gen::<f64>() < p {
            *px = if rng.gen::<bool>() { Rgb([255, 255, 255]) } else { Rgb([0, 0, 0]) };
            replaced += 1;
        }
    }
    Ok((out, replaced))
}

/// Gain applied at squared distance `d2` from the light centre on a canvas
/// of side `side`.
pub fn lighting_gain(d2: f64, side: f64) -> f64 {
    let sigma = LIGHT_SIGMA_FRACTION * side;
    1.0 + LIGHT_AMPLITUDE * (-d2 / (2.0 * sigma * sigma)).exp()
}

/// Brightens the image around a uniformly drawn centre with a Gaussian gain
/// profile; channels are clipped to 255.
pub fn radial_lighting(image: &RgbImage, seed: u64) -> RgbImage {
    let (w, h) = image.dimensions();
    let mut rng = rng::stream(seed, 1);
    let centre = [rng.gen::<f64>() * w as f64, rng.gen::<f64>() * h as f64];
    radial_lighting_at(image, centre)
}

pub fn radial_lighting_at(image: &RgbImage, centre: [f64; 2]) -> RgbImage {
    let side = image.width().min(image.height()) as f64;
    let mut out = image.clone();
    for (x, y, px) in out.enumerate_pixels_mut() {
        let dx = x as f64 + 0.5 - centre[0];
        let dy = y as f64 + 0.5 - centre[1];
        let g = lighting_gain(dx * dx + dy * dy, side);
        for c in px.0.iter_mut() {
            *c = (*c as f64 * g).round().min(255.0) as u8;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryEntry {
    pub id: String,
    /// Relative to the query manifest's directory.
    pub image: PathBuf,
    /// Database id of the correct match.
    pub truth: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryManifest {
    pub variant: String,
    pub spec: DistortionSpec,
    pub queries: Vec<QueryEntry>,
}

impl QueryManifest {
    pub fn load(path: &Path) -> Result<Self> {
        io::read_json(path)
    }
}

pub const QUERY_MANIFEST_FILE: &str = "queries.json";

/// Distorts every test-split image of the dataset at `dataset_dir` and
/// writes the images plus `queries.json` under `out_dir`.
pub fn make_query_set(manifest: &DatasetManifest, dataset_dir: &Path, spec: &DistortionSpec, out_dir: &Path) -> Result<QueryManifest> {
    spec.validate()?;
    let variant = spec.name();
    let queries = manifest
        .test_entries()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|entry| {
            let img = io::read_png(&dataset_dir.join(&entry.image))?;
            let distorted = spec.apply(&img, &entry.id).map_err(|e| e.in_stage("distort", &entry.id))?;
            let id = format!("{}_{variant}", entry.id);
            let image = PathBuf::from("images").join(format!("{id}.png"));
            io::write_png(&out_dir.join(&image), &distorted)?;
            Ok(QueryEntry {
                id,
                image,
                truth: entry.id.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let qm = QueryManifest {
        variant,
        spec: *spec,
        queries,
    };
    io::write_json(&out_dir.join(QUERY_MANIFEST_FILE), &qm)?;
    Ok(qm)
}
