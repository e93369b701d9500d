//! Frame merging for rotating objects.
//!
//! Rotation between frames is estimated from correlation sweeps
//! ([`estimate_frame_angle`]), then every frame's planes are counter-rotated
//! to a common base orientation and the samples are concatenated
//! ([`fma_merge_within`] for one batch, [`fma_merge_across`] for all).
//!
//! Rotating a plane `S * I` by `-theta` turns a measurement of the object at
//! angle `theta` into a valid measurement of the base object under the
//! rotated pattern `R(-theta) I`, so the merged stack reconstructs the base
//! orientation without motion blur.

mod correlation;
mod merge;

pub use correlation::{ccf, ccg, estimate_angle, estimate_angle_gi, AngleEstimate, AngleGrid};
pub use merge::{
    fma_merge_across, fma_merge_within, merge_with_rotations, MergedGroupFrame, Provenance, Segment,
};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::forward::{BatchGroupFrame, GroupFrame};
use crate::image::Image;
use crate::reconstruct::{ghost_images, Selection};

/// Which images stand in for the two frames of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairPolicy {
    /// Ghost images of each frame from disjoint halves of the shared speckle
    /// set (even indices for the earlier frame, odd for the later one), so
    /// their reconstruction noise is independent.
    #[default]
    PatternHalves,
    /// Plane `i` of one frame against plane `i` of the other. The two planes
    /// differ only by the bucket scale factor, so every sweep peaks at zero
    /// regardless of motion.
    MatchedPlanes,
}

impl fmt::Display for PairPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairPolicy::PatternHalves => "halves",
            PairPolicy::MatchedPlanes => "planes",
        })
    }
}

impl FromStr for PairPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "halves" => Ok(PairPolicy::PatternHalves),
            "planes" => Ok(PairPolicy::MatchedPlanes),
            other => Err(Error::Format(format!("unknown pair policy `{other}`"))),
        }
    }
}

/// Gaussian width (pixels) applied to both images of a pair before the
/// correlation sweep. Rotating by a non-zero angle low-passes the moving
/// image through bilinear interpolation, which raises its correlation with
/// a noisy reference and drags the peak away from zero. Smoothing both
/// images first makes that extra low-pass negligible.
pub const DEFAULT_PREFILTER_SIGMA: f64 = 1.5;

/// Estimate for one frame pair; angles in degrees over the pair's span.
#[derive(Debug, Clone, PartialEq)]
pub struct PairEstimate {
    pub frame_a: usize,
    pub frame_b: usize,
    pub estimate: AngleEstimate,
}

/// Per-frame rotation from a set of equally spaced frame pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAngleEstimate {
    pub batch_index: usize,
    /// Rotation between adjacent frames.
    pub alpha_deg: f64,
    /// Frame distance `v` spanned by each pair.
    pub span: usize,
    /// Mean best score over pairs.
    pub score: f64,
    /// Pair-averaged correlation against per-frame candidate angle.
    pub curve: Vec<(f64, f64)>,
    pub pairs: Vec<PairEstimate>,
}

/// Centers an image and applies the pre-filter. Centering first keeps zero
/// padding (in the blur and in the rotation sweep) neutral, so a constant
/// added to either image cannot move the estimate.
fn prepare(img: &Image, sigma: f64) -> Result<Image> {
    let mean = img.mean();
    img.map(|v| v - mean).gaussian_blur(sigma)
}

fn pair_images(bgf: &BatchGroupFrame, pairs: &[(usize, usize)], sigma: f64) -> Result<Vec<(Image, Image)>> {
    let early: Vec<&GroupFrame> = pairs.iter().map(|&(a, _)| &bgf.frames()[a]).collect();
    let late: Vec<&GroupFrame> = pairs.iter().map(|&(_, b)| &bgf.frames()[b]).collect();
    let early = ghost_images(&early, Selection::Even)?;
    let late = ghost_images(&late, Selection::Odd)?;
    early
        .iter()
        .zip(&late)
        .map(|(a, b)| Ok((prepare(a, sigma)?, prepare(b, sigma)?)))
        .collect()
}

fn matched_plane_estimate(a: &GroupFrame, b: &GroupFrame, grid: &AngleGrid, sigma: f64) -> Result<AngleEstimate> {
    let mut curve_sum: Vec<(f64, f64)> = grid.candidates().into_iter().map(|c| (c, 0.0)).collect();
    let mut angle_sum = 0.0;
    for i in 0..a.len() {
        let est = estimate_angle(&prepare(&a.plane(i)?, sigma)?, &prepare(&b.plane(i)?, sigma)?, grid)?;
        angle_sum += est.angle_deg;
        for (acc, (_, s)) in curve_sum.iter_mut().zip(&est.curve) {
            acc.1 += s;
        }
    }
    let m = a.len() as f64;
    curve_sum.iter_mut().for_each(|c| c.1 /= m);
    let score = curve_sum.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(AngleEstimate {
        angle_deg: angle_sum / m,
        score,
        curve: curve_sum,
    })
}

/// Rotation between adjacent frames of one batch.
///
/// Pairs `(gf_a + i, gf_b + i)` for `i < v = gf_b - gf_a` (stopping at the
/// end of the batch) each span `v` frames. Each pair is swept over `grid`
/// scaled by `v`, so `grid` is expressed per adjacent frame. The per-frame
/// angle is the mean of the pairwise arg-maxes divided by `v`. Both images
/// of a pair are smoothed with [`DEFAULT_PREFILTER_SIGMA`].
pub fn estimate_frame_angle(
    bgf: &BatchGroupFrame,
    gf_a: usize,
    gf_b: usize,
    grid: &AngleGrid,
    policy: PairPolicy,
) -> Result<FrameAngleEstimate> {
    estimate_frame_angle_with(bgf, gf_a, gf_b, grid, policy, DEFAULT_PREFILTER_SIGMA)
}

/// [`estimate_frame_angle`] with an explicit pre-filter width; 0 disables it.
pub fn estimate_frame_angle_with(
    bgf: &BatchGroupFrame,
    gf_a: usize,
    gf_b: usize,
    grid: &AngleGrid,
    policy: PairPolicy,
    prefilter_sigma: f64,
) -> Result<FrameAngleEstimate> {
    let len = bgf.len();
    if gf_b >= len {
        return Err(Error::IndexOutOfRange { index: gf_b, len });
    }
    if gf_a >= gf_b {
        return Err(Error::InvalidBgf(format!("frame {gf_a} must precede frame {gf_b}")));
    }
    let span = gf_b - gf_a;
    let pairs: Vec<(usize, usize)> = (0..span)
        .map(|i| (gf_a + i, gf_b + i))
        .take_while(|&(_, b)| b < len)
        .collect();
    let span_grid = grid.scaled(span as f64);

    let estimates: Vec<AngleEstimate> = match policy {
        PairPolicy::PatternHalves => pair_images(bgf, &pairs, prefilter_sigma)?
            .iter()
            .map(|(a, b)| estimate_angle(a, b, &span_grid))
            .collect::<Result<_>>()?,
        PairPolicy::MatchedPlanes => pairs
            .iter()
            .map(|&(a, b)| matched_plane_estimate(&bgf.frames()[a], &bgf.frames()[b], &span_grid, prefilter_sigma))
            .collect::<Result<_>>()?,
    };

    let n = estimates.len() as f64;
    let alpha_deg = estimates.iter().map(|e| e.angle_deg).sum::<f64>() / n / span as f64;
    let score = estimates.iter().map(|e| e.score).sum::<f64>() / n;
    let curve = grid
        .candidates()
        .into_iter()
        .enumerate()
        .map(|(k, c)| (c, estimates.iter().map(|e| e.curve[k].1).sum::<f64>() / n))
        .collect();
    let pairs = pairs
        .into_iter()
        .zip(estimates)
        .map(|((frame_a, frame_b), estimate)| PairEstimate {
            frame_a,
            frame_b,
            estimate,
        })
        .collect();
    Ok(FrameAngleEstimate {
        batch_index: bgf.batch_index(),
        alpha_deg,
        span,
        score,
        curve,
        pairs,
    })
}

/// Settings for estimating the rotation rate over a whole acquisition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FmaConfig {
    pub grid: AngleGrid,
    pub policy: PairPolicy,
    /// Frame distance within each pair; half the batch when unset.
    pub span: Option<usize>,
    pub prefilter_sigma: f64,
}

impl Default for FmaConfig {
    fn default() -> Self {
        Self {
            grid: AngleGrid::default(),
            policy: PairPolicy::default(),
            span: None,
            prefilter_sigma: DEFAULT_PREFILTER_SIGMA,
        }
    }
}

/// Per-frame rotation for an acquisition: one [`estimate_frame_angle`] per
/// batch with pairs `(i, i + span)`, averaged over batches.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaEstimate {
    pub alpha_deg: f64,
    pub per_batch: Vec<FrameAngleEstimate>,
}

pub fn estimate_alpha(bgfs: &[BatchGroupFrame], config: &FmaConfig) -> Result<AlphaEstimate> {
    let mut per_batch = Vec::new();
    for bgf in bgfs {
        let span = config.span.unwrap_or(bgf.len() / 2);
        if span == 0 || span >= bgf.len() {
            if config.span.is_some() {
                return Err(Error::InvalidBgf(format!(
                    "span {span} does not fit batch {} of {} frames",
                    bgf.batch_index(),
                    bgf.len()
                )));
            }
            continue;
        }
        per_batch.push(estimate_frame_angle_with(
            bgf,
            0,
            span,
            &config.grid,
            config.policy,
            config.prefilter_sigma,
        )?);
    }
    if per_batch.is_empty() {
        return Err(Error::InvalidBgf("no batch has at least two frames".into()));
    }
    let alpha_deg = per_batch.iter().map(|e| e.alpha_deg).sum::<f64>() / per_batch.len() as f64;
    Ok(AlphaEstimate { alpha_deg, per_batch })
}
