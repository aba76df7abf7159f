//! Element-based texture description and retrieval.
//!
//! The crate covers the whole pipeline:
//!
//! 1. [`synthesis`] renders procedural element-based textures with exact
//!    texel ground truth.
//! 2. [`detection`] finds texels in an image (a classical color-segmentation
//!    detector, or an oracle reading ground truth) and scores detections.
//! 3. [`descriptor`] turns an image and its texels into the 36-dimensional
//!    attribute descriptor: individual texel statistics, spatial-layout
//!    statistics of texel groups and the background color.
//! 4. [`distortion`] degrades images by resampling, impulsive noise and
//!    radial lighting.
//! 5. [`retrieval`] ranks a database against queries and evaluates CMC / AUC.
//! 6. [`tamura`] computes the Tamura baseline descriptor.
//! 7. [`experiment`] ties the stages into in-memory retrieval experiments.
//!
//! [`illumination`] removes smooth lighting gradients before color naming.

pub mod color;
pub mod descriptor;
pub mod detection;
pub mod distortion;
pub mod error;
pub mod experiment;
pub mod illumination;
pub mod io;
pub mod retrieval;
pub mod rng;
pub mod synthesis;
pub mod tamura;
pub mod texel;

pub use image;

pub use descriptor::{describe, TextureDescriptor, DESCRIPTOR_DIM};
pub use detection::{detect, DetectedTexel, TexelDetector};
pub use distortion::{DistortionSpec, Effect};
pub use error::{Error, Result};
pub use experiment::Method;
pub use retrieval::{CmcCurve, Metric};
pub use synthesis::{GroundTruth, TextureSpec};
pub use tamura::{tamura, TamuraDescriptor};
pub use texel::{BBox, ShapeKind, TexelMask};
