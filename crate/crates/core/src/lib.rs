//! Ghost imaging simulation for rotating objects.
//!
//! Speckle patterns are generated deterministically from a seed, bucket
//! values come from a single-pixel forward model, and images are recovered
//! with second-order correlation. The [`fma`] module estimates rotation
//! between frames and merges rotated frames back into one orientation.

// Negated float comparisons are used on purpose so that NaN fails checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fma;
pub mod forward;
pub mod image;
pub mod io;
mod linalg;
pub mod metrics;
pub mod phantom;
pub mod reconstruct;
pub mod speckle;

pub use error::{Error, Result};
pub use forward::{
    bucket, make_bgf, make_gf, max_samples, simulate_rotation_bgfs, BatchGroupFrame, BucketSequence, GroupFrame,
    RotationTrajectory,
};
pub use image::Image;
pub use metrics::{psnr, ssim, Psnr, QualityReport};
pub use reconstruct::{gi, gi_from_gf, gi_progressive, GhostImage};
pub use speckle::{gen_speckle_set, Distribution, SpecklePattern, SpeckleSet};
