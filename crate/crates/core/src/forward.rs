//! Forward model: bucket measurements, group frames and the rotating-object
//! frame simulator.

use std::borrow::Cow;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{positive, Error, Result};
use crate::image::Image;
use crate::linalg;
use crate::speckle::{bgf_speckle_policy, Distribution, SpecklePattern, SpeckleSet};

/// Bucket detector readings, one per pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketSequence(Vec<f64>);

impl BucketSequence {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for BucketSequence {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// Total intensity reaching the bucket detector: `sum T(x,y) I(x,y)`.
pub fn bucket(object: &Image, pattern: &SpecklePattern) -> Result<f64> {
    object.ensure_same_dims(&pattern.image)?;
    Ok(linalg::dot(object.data(), pattern.image.data()))
}

fn check_object(object: &Image, speckles: &SpeckleSet) -> Result<()> {
    if object.dims() != speckles.dims() {
        return Err(Error::DimensionMismatch {
            left: object.dims(),
            right: speckles.dims(),
        });
    }
    Ok(())
}

/// Buckets of every object under every pattern, one row per object.
fn bucket_rows(objects: &[&Image], speckles: &SpeckleSet) -> Vec<Vec<f64>> {
    let n = speckles.pixels();
    let m = speckles.len();
    let mut stacked = Vec::with_capacity(objects.len() * n);
    for obj in objects {
        stacked.extend_from_slice(obj.data());
    }
    let mut out = vec![0.0; objects.len() * m];
    linalg::matmul_bt(objects.len(), n, m, &stacked, speckles.matrix(), &mut out);
    out.chunks(m).map(<[f64]>::to_vec).collect()
}

/// The m-plane stack of bucket-measurement images `S_i * I_i(x,y)`.
///
/// Planes are implicit (derived from the buckets and the shared speckle set)
/// unless explicit planes were attached, e.g. when read back from a container
/// that stored them.
#[derive(Debug, Clone)]
pub struct GroupFrame {
    speckles: Arc<SpeckleSet>,
    buckets: BucketSequence,
    planes: Option<Arc<Vec<f64>>>,
    object_id: String,
}

impl GroupFrame {
    pub fn new(speckles: Arc<SpeckleSet>, buckets: BucketSequence, object_id: impl Into<String>) -> Result<Self> {
        if buckets.len() != speckles.len() {
            return Err(Error::LengthMismatch {
                expected: speckles.len(),
                actual: buckets.len(),
            });
        }
        Ok(Self {
            speckles,
            buckets,
            planes: None,
            object_id: object_id.into(),
        })
    }

    /// Attaches explicit `m x H x W` planes.
    pub fn with_planes(mut self, planes: Vec<f64>) -> Result<Self> {
        let want = self.len() * self.speckles.pixels();
        if planes.len() != want {
            return Err(Error::LengthMismatch {
                expected: want,
                actual: planes.len(),
            });
        }
        self.planes = Some(Arc::new(planes));
        Ok(self)
    }

    /// Same frame with new bucket values (and implicit planes).
    pub fn with_buckets(&self, buckets: BucketSequence) -> Result<Self> {
        Self::new(self.speckles.clone(), buckets, self.object_id.clone())
    }

    /// Applies `f` to every plane value, producing explicit planes.
    pub fn map_planes(&self, f: impl Fn(f64) -> f64) -> Self {
        let planes: Vec<f64> = (0..self.len())
            .flat_map(|i| self.plane_row(i).iter().map(|&v| f(v)).collect::<Vec<_>>())
            .collect();
        Self {
            planes: Some(Arc::new(planes)),
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.speckles.dims()
    }

    pub fn speckles(&self) -> &Arc<SpeckleSet> {
        &self.speckles
    }

    pub fn speckle_seed(&self) -> u64 {
        self.speckles.seed()
    }

    pub fn distribution(&self) -> Distribution {
        self.speckles.distribution()
    }

    pub fn buckets(&self) -> &BucketSequence {
        &self.buckets
    }

    pub fn object_id(&self) -> &str {
        &self.object_id
    }

    pub fn has_explicit_planes(&self) -> bool {
        self.planes.is_some()
    }

    pub fn explicit_planes(&self) -> Option<&[f64]> {
        self.planes.as_deref().map(Vec::as_slice)
    }

    /// Plane `i` as a flat row.
    pub fn plane_row(&self, i: usize) -> Cow<'_, [f64]> {
        let n = self.speckles.pixels();
        match &self.planes {
            Some(p) => Cow::Borrowed(&p[i * n..(i + 1) * n]),
            None => {
                let s = self.buckets.values()[i];
                Cow::Owned(self.speckles.row(i).iter().map(|v| s * v).collect())
            }
        }
    }

    pub fn plane(&self, i: usize) -> Result<Image> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.len(),
            });
        }
        let (h, w) = self.dims();
        Image::new(h, w, self.plane_row(i).into_owned())
    }
}

/// Group frame of one object under a speckle set.
pub fn make_gf(object: &Image, speckles: &Arc<SpeckleSet>, object_id: impl Into<String>) -> Result<GroupFrame> {
    check_object(object, speckles)?;
    let mut rows = bucket_rows(&[object], speckles);
    GroupFrame::new(speckles.clone(), BucketSequence(rows.remove(0)), object_id)
}

/// B group frames sharing one speckle set.
#[derive(Debug, Clone)]
pub struct BatchGroupFrame {
    frames: Vec<GroupFrame>,
    batch_index: usize,
}

impl BatchGroupFrame {
    pub fn new(frames: Vec<GroupFrame>, batch_index: usize) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::InvalidBgf("no frames".into()))?;
        for (k, f) in frames.iter().enumerate().skip(1) {
            if f.speckle_seed() != first.speckle_seed() || f.distribution() != first.distribution() {
                return Err(Error::InvalidBgf(format!("frame {k} uses a different speckle set")));
            }
            if f.dims() != first.dims() || f.len() != first.len() {
                return Err(Error::InvalidBgf(format!("frame {k} has a different shape")));
            }
        }
        Ok(Self { frames, batch_index })
    }

    pub fn frames(&self) -> &[GroupFrame] {
        &self.frames
    }

    pub fn frame(&self, k: usize) -> Result<&GroupFrame> {
        self.frames.get(k).ok_or(Error::IndexOutOfRange {
            index: k,
            len: self.frames.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn batch_index(&self) -> usize {
        self.batch_index
    }

    pub fn speckle_seed(&self) -> u64 {
        self.frames[0].speckle_seed()
    }

    pub fn speckles(&self) -> &Arc<SpeckleSet> {
        self.frames[0].speckles()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    /// Planes per frame.
    pub fn samples(&self) -> usize {
        self.frames[0].len()
    }
}

/// Assembles a batch of group frames in one pass over the speckle set.
pub fn make_bgf(
    objects: &[Image],
    speckles: &Arc<SpeckleSet>,
    batch_index: usize,
    ids: impl Fn(usize) -> String,
) -> Result<BatchGroupFrame> {
    for obj in objects {
        check_object(obj, speckles)?;
    }
    let refs: Vec<&Image> = objects.iter().collect();
    let frames = bucket_rows(&refs, speckles)
        .into_iter()
        .enumerate()
        .map(|(k, b)| GroupFrame::new(speckles.clone(), BucketSequence(b), ids(k)))
        .collect::<Result<Vec<_>>>()?;
    BatchGroupFrame::new(frames, batch_index)
}

/// Uniform rotation sampled at a fixed frame interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationTrajectory {
    pub omega_deg_per_ms: f64,
    pub frame_interval_ms: f64,
    pub n_frames: usize,
    pub n_batches: usize,
    pub start_angle_deg: f64,
}

impl RotationTrajectory {
    pub fn new(omega_deg_per_ms: f64, frame_interval_ms: f64, n_frames: usize, n_batches: usize) -> Result<Self> {
        let traj = Self {
            omega_deg_per_ms,
            frame_interval_ms,
            n_frames,
            n_batches,
            start_angle_deg: 0.0,
        };
        traj.validate()?;
        Ok(traj)
    }

    /// Frame interval of `1000 / f` ms for a sampling frequency `f` in Hz.
    pub fn from_sampling_frequency(omega_deg_per_ms: f64, freq_hz: f64, n_frames: usize, n_batches: usize) -> Result<Self> {
        let f = positive("freq_hz", freq_hz)?;
        Self::new(omega_deg_per_ms, 1000.0 / f, n_frames, n_batches)
    }

    pub fn with_start_angle(mut self, start_angle_deg: f64) -> Self {
        self.start_angle_deg = start_angle_deg;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_frames == 0 || self.n_batches == 0 {
            return Err(Error::InvalidTrajectory("frame and batch counts must be positive".into()));
        }
        if !self.n_frames.is_multiple_of(self.n_batches) {
            return Err(Error::InvalidTrajectory(format!(
                "{} frames cannot be split into {} equal batches",
                self.n_frames, self.n_batches
            )));
        }
        if !(self.frame_interval_ms.is_finite() && self.frame_interval_ms > 0.0) {
            return Err(Error::InvalidTrajectory("frame interval must be positive".into()));
        }
        if !self.omega_deg_per_ms.is_finite() || !self.start_angle_deg.is_finite() {
            return Err(Error::InvalidTrajectory("angles must be finite".into()));
        }
        Ok(())
    }

    /// Rotation between consecutive frames, in degrees.
    pub fn step_deg(&self) -> f64 {
        self.omega_deg_per_ms * self.frame_interval_ms
    }

    pub fn angle(&self, k: usize) -> f64 {
        self.start_angle_deg + self.step_deg() * k as f64
    }

    pub fn frames_per_batch(&self) -> usize {
        self.n_frames / self.n_batches
    }

    pub fn total_sweep_deg(&self) -> f64 {
        self.step_deg() * self.n_frames as f64
    }

    pub fn duration_ms(&self) -> f64 {
        self.frame_interval_ms * self.n_frames as f64
    }
}

/// Simulates a rotating object: frame `k` is the group frame of the object
/// rotated to `traj.angle(k)`; frames are split into contiguous equal batches
/// and batch `b` uses the speckle set `bgf_speckle_policy(base_seed, b)`.
pub fn simulate_rotation_bgfs(
    object: &Image,
    traj: &RotationTrajectory,
    samples_per_frame: usize,
    base_seed: u64,
    distribution: Distribution,
) -> Result<Vec<BatchGroupFrame>> {
    traj.validate()?;
    if samples_per_frame == 0 {
        return Err(Error::InvalidTrajectory("samples per frame must be positive".into()));
    }
    let (h, w) = object.dims();
    let per_batch = traj.frames_per_batch();
    (0..traj.n_batches)
        .map(|b| {
            let speckles = Arc::new(bgf_speckle_policy(base_seed, b, samples_per_frame, h, w, distribution)?);
            let objects: Vec<Image> = (0..per_batch)
                .into_par_iter()
                .map(|k| object.rotate(traj.angle(b * per_batch + k)))
                .collect();
            make_bgf(&objects, &speckles, b, |k| format!("b{b}f{k}"))
        })
        .collect()
}

/// Largest sample count for which a moving object still counts as
/// stationary: `floor(f * theta_r / w)`.
///
/// Quotients within 1e-9 (relative) of an integer are taken as that integer,
/// so decimal inputs like 0.15 do not lose a count to binary rounding.
pub fn max_samples(freq_hz: f64, omega_deg_per_s: f64, theta_r_deg: f64) -> Result<u64> {
    let f = positive("freq_hz", freq_hz)?;
    let w = positive("omega_deg_per_s", omega_deg_per_s)?;
    let t = positive("theta_r_deg", theta_r_deg)?;
    let x = f * t / w;
    let nearest = x.round();
    let n = if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        x.floor()
    };
    Ok(n as u64)
}
