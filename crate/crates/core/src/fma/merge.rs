//! Counter-rotating frames to a common orientation and stacking their
//! samples.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::forward::{BatchGroupFrame, BucketSequence, GroupFrame};
use crate::image::Image;
use crate::linalg;
use crate::reconstruct::GhostImage;

/// Where a merged plane came from and how it was rotated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    pub batch_index: usize,
    pub frame_index: usize,
    /// Counterclockwise rotation applied to every plane of the frame.
    pub rotation_deg: f64,
}

/// One source frame of a merge.
#[derive(Debug, Clone)]
pub struct Segment {
    pub frame: GroupFrame,
    pub provenance: Provenance,
}

/// Concatenation of rotated frames. Planes stay implicit: plane `j` is the
/// source plane rotated by its frame's angle, computed on demand.
#[derive(Debug, Clone)]
pub struct MergedGroupFrame {
    segments: Vec<Segment>,
    base: (usize, usize),
    offsets: Vec<usize>,
}

impl MergedGroupFrame {
    fn from_segments(segments: Vec<Segment>, base: (usize, usize)) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::InvalidBgf("nothing to merge".into()))?;
        let dims = first.frame.dims();
        let mut offsets = Vec::with_capacity(segments.len() + 1);
        let mut total = 0;
        let mut has_base = false;
        for seg in &segments {
            if seg.frame.dims() != dims {
                return Err(Error::DimensionMismatch {
                    left: dims,
                    right: seg.frame.dims(),
                });
            }
            if !seg.provenance.rotation_deg.is_finite() {
                return Err(Error::InvalidBgf("rotation must be finite".into()));
            }
            has_base |= (seg.provenance.batch_index, seg.provenance.frame_index) == base;
            offsets.push(total);
            total += seg.frame.len();
        }
        offsets.push(total);
        if !has_base {
            return Err(Error::BadBase {
                batch: base.0,
                frame: base.1,
            });
        }
        Ok(Self {
            segments,
            base,
            offsets,
        })
    }

    /// Total number of planes.
    pub fn len(&self) -> usize {
        *self.offsets.last().expect("offsets never empty")
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> (usize, usize) {
        self.segments[0].frame.dims()
    }

    /// `(batch, frame)` whose orientation the merge reconstructs.
    pub fn base(&self) -> (usize, usize) {
        self.base
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// The source frame at the base position.
    pub fn base_frame(&self) -> &GroupFrame {
        &self
            .segments
            .iter()
            .find(|s| (s.provenance.batch_index, s.provenance.frame_index) == self.base)
            .expect("base checked on construction")
            .frame
    }

    pub fn buckets(&self) -> BucketSequence {
        BucketSequence::new(
            self.segments
                .iter()
                .flat_map(|s| s.frame.buckets().values().iter().copied())
                .collect(),
        )
    }

    /// One entry per plane.
    pub fn provenance(&self) -> Vec<Provenance> {
        self.segments
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.provenance, s.frame.len()))
            .collect()
    }

    fn locate(&self, j: usize) -> Result<(&Segment, usize)> {
        if j >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: j,
                len: self.len(),
            });
        }
        let seg = self.offsets.partition_point(|&o| o <= j) - 1;
        Ok((&self.segments[seg], j - self.offsets[seg]))
    }

    /// Merged plane `j`.
    pub fn plane(&self, j: usize) -> Result<Image> {
        let (seg, i) = self.locate(j)?;
        Ok(seg.frame.plane(i)?.rotate(seg.provenance.rotation_deg))
    }

    /// The effective illumination pattern behind merged plane `j`.
    pub fn pattern(&self, j: usize) -> Result<Image> {
        let (seg, i) = self.locate(j)?;
        let (h, w) = self.dims();
        Ok(Image::new(h, w, seg.frame.speckles().row(i).to_vec())?.rotate(seg.provenance.rotation_deg))
    }

    /// Visits every merged plane in order. Avoids holding all planes at once.
    pub fn for_each_plane(&self, mut f: impl FnMut(usize, &Image) -> Result<()>) -> Result<()> {
        let mut j = 0;
        for seg in &self.segments {
            for i in 0..seg.frame.len() {
                let plane = seg.frame.plane(i)?.rotate(seg.provenance.rotation_deg);
                f(j, &plane)?;
                j += 1;
            }
        }
        Ok(())
    }

    /// All merged planes, `len() x H x W`. Memory grows with the sample count.
    pub fn planes(&self) -> Result<Vec<f64>> {
        let (h, w) = self.dims();
        let mut out = Vec::with_capacity(self.len() * h * w);
        self.for_each_plane(|_, p| {
            out.extend_from_slice(p.data());
            Ok(())
        })?;
        Ok(out)
    }

    /// Same frames ordered by `(batch, frame)`.
    pub fn sorted_by_provenance(mut self) -> Self {
        self.segments
            .sort_by_key(|s| (s.provenance.batch_index, s.provenance.frame_index));
        let base = self.base;
        Self::from_segments(self.segments, base).expect("already validated")
    }

    /// Reconstruction of the base orientation from all merged samples.
    ///
    /// Uses `T = (1/K) sum_j (S_j - <S>) R_j(I_j)`, which equals the mean
    /// plane minus `<S>` times the mean rotated pattern. Per-frame sums are
    /// formed before rotating since rotation is linear.
    pub fn ghost_image(&self) -> Result<GhostImage> {
        let k = self.len();
        if k < 2 {
            return Err(Error::TooFewSamples(k));
        }
        let (h, w) = self.dims();
        let n = h * w;
        let mean_s = self.buckets().mean();

        let mut sums: Vec<Option<Vec<f64>>> = vec![None; self.segments.len()];
        let mut implicit: Vec<usize> = Vec::new();
        for (idx, seg) in self.segments.iter().enumerate() {
            match seg.frame.explicit_planes() {
                Some(planes) => {
                    let set = seg.frame.speckles();
                    let mut acc = vec![0.0; n];
                    for i in 0..seg.frame.len() {
                        let plane = &planes[i * n..(i + 1) * n];
                        for ((a, p), q) in acc.iter_mut().zip(plane).zip(set.row(i)) {
                            *a += p - mean_s * q;
                        }
                    }
                    sums[idx] = Some(acc);
                }
                None => implicit.push(idx),
            }
        }
        while let Some(&lead) = implicit.first() {
            let set = self.segments[lead].frame.speckles().clone();
            let (group, rest): (Vec<usize>, Vec<usize>) = implicit
                .iter()
                .partition(|&&idx| Arc::ptr_eq(self.segments[idx].frame.speckles(), &set));
            implicit = rest;
            let m = set.len();
            let weights: Vec<f64> = group
                .iter()
                .flat_map(|&idx| self.segments[idx].frame.buckets().values().iter().map(|s| s - mean_s))
                .collect();
            let mut out = vec![0.0; group.len() * n];
            linalg::matmul(group.len(), m, n, &weights, m, set.matrix(), n, &mut out);
            for (g, &idx) in group.iter().enumerate() {
                sums[idx] = Some(out[g * n..(g + 1) * n].to_vec());
            }
        }

        let mut acc = Image::zeros(h, w)?;
        for (seg, sum) in self.segments.iter().zip(sums) {
            let rotated = Image::new(h, w, sum.expect("every segment summed"))?.rotate(seg.provenance.rotation_deg);
            for (a, v) in acc.data_mut().iter_mut().zip(rotated.data()) {
                *a += v;
            }
        }
        let kf = k as f64;
        acc.data_mut().iter_mut().for_each(|v| *v /= kf);
        Ok(GhostImage {
            image: acc,
            m_used: k,
            normalized: false,
        })
    }
}

/// Merges frames with explicitly given rotations. `base` must match the
/// provenance of one of the frames.
pub fn merge_with_rotations(frames: Vec<(GroupFrame, Provenance)>, base: (usize, usize)) -> Result<MergedGroupFrame> {
    let segments = frames
        .into_iter()
        .map(|(frame, provenance)| Segment { frame, provenance })
        .collect();
    MergedGroupFrame::from_segments(segments, base)
}

/// Merges the frames of one batch into the orientation of its first frame:
/// frame `k` is rotated by `-k * alpha`.
pub fn fma_merge_within(bgf: &BatchGroupFrame, alpha_deg: f64) -> Result<MergedGroupFrame> {
    fma_merge_across(std::slice::from_ref(bgf), alpha_deg, (0, 0))
}

/// Merges every frame of every batch into the orientation of the frame at
/// `base = (batch position, frame)`. Frames are numbered globally in batch
/// order, and frame `g` is rotated by `-(g - g_base) * alpha`.
pub fn fma_merge_across(bgfs: &[BatchGroupFrame], alpha_deg: f64, base: (usize, usize)) -> Result<MergedGroupFrame> {
    if !alpha_deg.is_finite() {
        return Err(Error::InvalidBgf(format!("alpha must be finite, got {alpha_deg}")));
    }
    let bad_base = Error::BadBase {
        batch: base.0,
        frame: base.1,
    };
    let Some(base_bgf) = bgfs.get(base.0) else {
        return Err(bad_base);
    };
    if base.1 >= base_bgf.len() {
        return Err(bad_base);
    }
    let g_base = bgfs[..base.0].iter().map(|b| b.len()).sum::<usize>() + base.1;
    let mut frames = Vec::new();
    let mut g = 0usize;
    for bgf in bgfs {
        for (k, frame) in bgf.frames().iter().enumerate() {
            let steps = g as f64 - g_base as f64;
            frames.push((
                frame.clone(),
                Provenance {
                    batch_index: bgf.batch_index(),
                    frame_index: k,
                    rotation_deg: -steps * alpha_deg,
                },
            ));
            g += 1;
        }
    }
    merge_with_rotations(frames, (base_bgf.batch_index(), base.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{make_gf, simulate_rotation_bgfs, RotationTrajectory};
    use crate::metrics::{ssim, to_peak_scale};
    use crate::phantom::digit;
    use crate::reconstruct::{gi, gi_from_planes};
    use crate::speckle::{gen_speckle_set, Distribution};
    use rand::rngs::StdRng;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    fn scale(img: &Image) -> f64 {
        img.data().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn bgfs(n: usize, samples: usize, frames: usize, batches: usize, step: f64) -> Vec<BatchGroupFrame> {
        let traj = RotationTrajectory::new(step, 1.0, frames, batches).unwrap();
        simulate_rotation_bgfs(&digit(7, n).unwrap(), &traj, samples, 21, Distribution::Uniform01).unwrap()
    }

    #[test]
    fn single_unrotated_frame_matches_plain_reconstruction() {
        let set = Arc::new(gen_speckle_set(8, 300, 12, 12, Distribution::Uniform01).unwrap());
        let gf = make_gf(&digit(3, 12).unwrap(), &set, "x").unwrap();
        let prov = Provenance {
            batch_index: 0,
            frame_index: 0,
            rotation_deg: 0.0,
        };
        let merged = merge_with_rotations(vec![(gf.clone(), prov)], (0, 0)).unwrap();
        let a = merged.ghost_image().unwrap();
        let b = gi(&set, gf.buckets()).unwrap();
        assert!(a.image.max_abs_diff(&b.image).unwrap() <= 1e-10 * scale(&b.image));
        assert_eq!(merged.len(), 300);
        assert_eq!(merged.buckets(), *gf.buckets());
    }

    #[test]
    fn matches_literal_plane_route() {
        let b = bgfs(16, 40, 6, 2, 2.0);
        let merged = fma_merge_across(&b, 2.0, (1, 1)).unwrap();
        let fast = merged.ghost_image().unwrap();
        let (h, w) = merged.dims();
        let slow = gi_from_planes(h, w, &merged.planes().unwrap(), merged.buckets().values()).unwrap();
        assert!(fast.image.max_abs_diff(&slow.image).unwrap() <= 1e-9 * scale(&slow.image));

        // explicit planes go through the other branch
        let explicit: Vec<BatchGroupFrame> = b
            .iter()
            .map(|bgf| BatchGroupFrame::new(bgf.frames().iter().map(|f| f.map_planes(|v| v)).collect(), bgf.batch_index()).unwrap())
            .collect();
        let again = fma_merge_across(&explicit, 2.0, (1, 1)).unwrap().ghost_image().unwrap();
        assert!(again.image.max_abs_diff(&fast.image).unwrap() <= 1e-9 * scale(&fast.image));
    }

    #[test]
    fn rotations_and_provenance() {
        let b = bgfs(12, 5, 6, 2, 1.0);
        let merged = fma_merge_across(&b, 0.5, (1, 0)).unwrap();
        let prov = merged.provenance();
        assert_eq!(prov.len(), 30);
        assert_eq!(prov[0], Provenance { batch_index: 0, frame_index: 0, rotation_deg: 1.5 });
        assert_eq!(prov[15].rotation_deg, 0.0);
        assert_eq!(prov[29], Provenance { batch_index: 1, frame_index: 2, rotation_deg: -1.0 });
        let p = merged.plane(7).unwrap();
        let expected = b[0].frames()[1].plane(2).unwrap().rotate(1.0);
        assert_eq!(p, expected);
        assert_eq!(merged.base_frame().object_id(), "b1f0");
        let pat = merged.pattern(7).unwrap();
        assert!(p.max_abs_diff(&pat.map(|v| v * merged.buckets().values()[7])).unwrap() < 1e-9);
    }

    #[test]
    fn within_uses_first_frame() {
        let b = bgfs(12, 5, 4, 1, 1.0);
        let merged = fma_merge_within(&b[0], 0.25).unwrap();
        assert_eq!(merged.base(), (0, 0));
        let rots: Vec<f64> = merged.segments().iter().map(|s| s.provenance.rotation_deg).collect();
        assert_eq!(rots, vec![0.0, -0.25, -0.5, -0.75]);
    }

    #[test]
    fn permutation_stable_after_sorting() {
        let b = bgfs(16, 20, 8, 2, 1.0);
        let ordered = fma_merge_across(&b, 1.0, (0, 0)).unwrap();
        let reference = ordered.ghost_image().unwrap();
        let mut frames: Vec<(GroupFrame, Provenance)> = ordered
            .segments()
            .iter()
            .map(|s| (s.frame.clone(), s.provenance))
            .collect();
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..5 {
            frames.shuffle(&mut rng);
            let shuffled = merge_with_rotations(frames.clone(), (0, 0)).unwrap();
            let sorted = shuffled.sorted_by_provenance().ghost_image().unwrap();
            assert_eq!(sorted, reference);
        }
    }

    #[test]
    fn merging_removes_motion_blur() {
        // 1 degree per frame over 40 frames; the naive stack smears the digit
        let b = bgfs(32, 512, 40, 1, 1.0);
        let truth = to_peak_scale(&digit(7, 32).unwrap());
        let merged = fma_merge_within(&b[0], 1.0).unwrap().ghost_image().unwrap();
        let naive = fma_merge_within(&b[0], 0.0).unwrap().ghost_image().unwrap();
        let s_merged = ssim(&truth, &to_peak_scale(&merged.image)).unwrap();
        let s_naive = ssim(&truth, &to_peak_scale(&naive.image)).unwrap();
        assert!(s_merged > s_naive, "{s_merged} vs {s_naive}");
    }

    #[test]
    fn base_shift_rotates_result() {
        // 3 batches sweeping 45 degrees; last-frame base vs first-frame base
        let b = bgfs(48, 2048, 60, 3, 0.75);
        let first = fma_merge_across(&b, 0.75, (0, 0)).unwrap().ghost_image().unwrap();
        let last = fma_merge_across(&b, 0.75, (2, 19)).unwrap().ghost_image().unwrap();
        let turned = first.image.rotate(59.0 * 0.75);
        let interior = |img: &Image| to_peak_scale(&img.crop(10, 10, 28, 28).unwrap());
        let s = ssim(&interior(&last.image), &interior(&turned)).unwrap();
        assert!(s >= 0.9, "ssim {s}");
    }

    #[test]
    fn single_frame_batch_is_that_frame() {
        let b = bgfs(16, 30, 1, 1, 1.0);
        let merged = fma_merge_within(&b[0], 0.4).unwrap();
        let gf = &b[0].frames()[0];
        assert_eq!(merged.buckets(), *gf.buckets());
        for j in 0..merged.len() {
            assert_eq!(merged.plane(j).unwrap(), gf.plane(j).unwrap());
        }
        let plain = gi(gf.speckles(), gf.buckets()).unwrap();
        assert!(merged.ghost_image().unwrap().image.max_abs_diff(&plain.image).unwrap() <= 1e-10 * scale(&plain.image));
    }

    #[test]
    fn across_one_batch_equals_within() {
        let b = bgfs(16, 12, 5, 1, 1.0);
        let within = fma_merge_within(&b[0], 0.3).unwrap();
        let across = fma_merge_across(&b, 0.3, (0, 0)).unwrap();
        assert_eq!(within.provenance(), across.provenance());
        assert_eq!(within.ghost_image().unwrap(), across.ghost_image().unwrap());
    }

    #[test]
    fn three_batches_merge_every_frame() {
        let b = bgfs(8, 4, 300, 3, 0.15);
        let merged = fma_merge_across(&b, 0.15, (0, 0)).unwrap();
        assert_eq!(merged.segments().len(), 300);
        assert_eq!(merged.len(), 1200);
        assert_eq!(merged.provenance().len(), merged.buckets().len());
        let last = merged.segments().last().unwrap().provenance;
        assert!((last.rotation_deg + 299.0 * 0.15).abs() < 1e-9);
    }

    #[test]
    fn zero_alpha_is_plain_concatenation() {
        let b = bgfs(12, 6, 4, 2, 1.0);
        let merged = fma_merge_across(&b, 0.0, (0, 0)).unwrap();
        let mut j = 0;
        for bgf in &b {
            for f in bgf.frames() {
                for i in 0..f.len() {
                    assert_eq!(merged.plane(j).unwrap(), f.plane(i).unwrap());
                    j += 1;
                }
            }
        }
    }

    #[test]
    fn errors() {
        let b = bgfs(12, 5, 4, 2, 1.0);
        assert!(matches!(fma_merge_across(&b, 1.0, (2, 0)), Err(Error::BadBase { .. })));
        assert!(matches!(fma_merge_across(&b, 1.0, (0, 2)), Err(Error::BadBase { .. })));
        assert!(fma_merge_across(&b, f64::NAN, (0, 0)).is_err());
        assert!(merge_with_rotations(vec![], (0, 0)).is_err());
        let other = bgfs(10, 5, 2, 1, 1.0);
        let mixed = vec![
            (b[0].frames()[0].clone(), Provenance { batch_index: 0, frame_index: 0, rotation_deg: 0.0 }),
            (other[0].frames()[0].clone(), Provenance { batch_index: 1, frame_index: 0, rotation_deg: 0.0 }),
        ];
        assert!(matches!(merge_with_rotations(mixed, (0, 0)), Err(Error::DimensionMismatch { .. })));
        let merged = fma_merge_within(&b[0], 1.0).unwrap();
        assert!(matches!(merged.plane(10), Err(Error::IndexOutOfRange { .. })));
    }
}
