//! Normalized cross-correlation under a trial rotation, and grid search for
//! its maximum.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::linalg;
use crate::reconstruct::GhostImage;

/// Closed grid `{min, min + step, ...}` up to `max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleGrid {
    min_deg: f64,
    max_deg: f64,
    step_deg: f64,
}

impl AngleGrid {
    pub fn new(min_deg: f64, max_deg: f64, step_deg: f64) -> Result<Self> {
        if !(min_deg.is_finite() && max_deg.is_finite() && step_deg.is_finite()) {
            return Err(Error::InvalidGrid("bounds and step must be finite".into()));
        }
        if !(step_deg > 0.0) {
            return Err(Error::InvalidGrid(format!("step must be positive, got {step_deg}")));
        }
        if min_deg > max_deg {
            return Err(Error::InvalidGrid(format!("min {min_deg} exceeds max {max_deg}")));
        }
        if (max_deg - min_deg) / step_deg > 1e7 {
            return Err(Error::InvalidGrid("too many candidates".into()));
        }
        Ok(Self {
            min_deg,
            max_deg,
            step_deg,
        })
    }

    pub fn min_deg(&self) -> f64 {
        self.min_deg
    }

    pub fn max_deg(&self) -> f64 {
        self.max_deg
    }

    pub fn step_deg(&self) -> f64 {
        self.step_deg
    }

    pub fn candidates(&self) -> Vec<f64> {
        // Tolerate round-off so that e.g. max = 0.5, step = 0.05 includes 0.5.
        let count = ((self.max_deg - self.min_deg) / self.step_deg + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.min_deg + k as f64 * self.step_deg).collect()
    }

    /// The same grid with every candidate multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> AngleGrid {
        AngleGrid {
            min_deg: self.min_deg * factor,
            max_deg: self.max_deg * factor,
            step_deg: self.step_deg * factor,
        }
    }
}

impl Default for AngleGrid {
    /// +-1 degree in 0.05 degree steps.
    fn default() -> Self {
        AngleGrid {
            min_deg: -1.0,
            max_deg: 1.0,
            step_deg: 0.05,
        }
    }
}

/// Arg-max of a correlation sweep, with the sweep kept for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleEstimate {
    pub angle_deg: f64,
    pub score: f64,
    pub curve: Vec<(f64, f64)>,
}

impl AngleEstimate {
    /// Picks the best candidate; ties go to the smallest `|angle|`.
    pub fn from_curve(curve: Vec<(f64, f64)>) -> Result<Self> {
        let mut best: Option<(f64, f64)> = None;
        for &(angle, score) in &curve {
            if score.is_nan() {
                continue;
            }
            best = match best {
                None => Some((angle, score)),
                Some((ba, bs)) => {
                    let better = score > bs
                        || (score == bs && (angle.abs() < ba.abs() || (angle.abs() == ba.abs() && angle < ba)));
                    if better {
                        Some((angle, score))
                    } else {
                        Some((ba, bs))
                    }
                }
            };
        }
        let (angle_deg, score) = best.ok_or_else(|| Error::InvalidGrid("empty correlation curve".into()))?;
        Ok(Self {
            angle_deg,
            score,
            curve,
        })
    }
}

/// `g1` normalized once, ready to be scored against rotated copies of
/// another image.
struct Reference {
    normalized: Image,
}

impl Reference {
    fn new(g1: &Image) -> Result<Self> {
        Ok(Self {
            normalized: g1.normalize_zscore()?,
        })
    }

    fn score(&self, moving: &Image, delta_deg: f64) -> Result<f64> {
        self.normalized.ensure_same_dims(moving)?;
        let rotated = moving.rotate(-delta_deg).normalize_zscore()?;
        Ok(linalg::dot(self.normalized.data(), rotated.data()))
    }

    fn curve(&self, moving: &Image, candidates: &[f64]) -> Result<Vec<(f64, f64)>> {
        self.normalized.ensure_same_dims(moving)?;
        candidates
            .par_iter()
            .map(|&c| self.score(moving, c).map(|s| (c, s)))
            .collect()
    }
}

/// Correlation of two ghost images under the hypothesis that `g2` is `g1`
/// rotated counterclockwise by `delta_deg`: `g2` is rotated back by
/// `delta_deg`, both are z-score normalized, and their Hadamard product is
/// summed. The result lies in `[-1, 1]`.
pub fn ccg(g1: &Image, g2: &Image, delta_deg: f64) -> Result<f64> {
    g1.ensure_same_dims(g2)?;
    Reference::new(g1)?.score(g2, delta_deg)
}

/// Frame-level correlation: the same score applied to frame images.
pub fn ccf(f1: &Image, f2: &Image, delta_deg: f64) -> Result<f64> {
    ccg(f1, f2, delta_deg)
}

/// Sweeps `grid` and returns the candidate maximizing `ccg(g1, g2, .)`.
pub fn estimate_angle(g1: &Image, g2: &Image, grid: &AngleGrid) -> Result<AngleEstimate> {
    g1.ensure_same_dims(g2)?;
    let curve = Reference::new(g1)?.curve(g2, &grid.candidates())?;
    AngleEstimate::from_curve(curve)
}

pub fn estimate_angle_gi(g1: &GhostImage, g2: &GhostImage, grid: &AngleGrid) -> Result<AngleEstimate> {
    estimate_angle(&g1.image, &g2.image, grid)
}
