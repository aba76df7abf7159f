//! Shared inputs for the pipeline benchmarks.

use texelatt::image::RgbImage;
use texelatt::synthesis::{default_palette, generate_item, GroundTruth};

pub const SEED: u64 = 2024;

/// A generated texture, its ground truth and its id.
pub fn sample(index: usize, canvas: u32) -> (String, RgbImage, GroundTruth) {
    let (_, img, gt) = generate_item(SEED, index, canvas, &default_palette()).expect("generated item");
    (texelatt::synthesis::item_id(index), img, gt)
}
