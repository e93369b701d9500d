//! Correlation ghost imaging: `T(x,y) = <S I(x,y)> - <S><I(x,y)>`, with plain
//! averages (divisor m).

use crate::error::{Error, Result};
use crate::forward::{BucketSequence, GroupFrame};
use crate::image::Image;
use crate::linalg;
use crate::speckle::SpeckleSet;

/// Relative tolerance when checking stored planes against `S_i * I_i`.
/// Containers hold float32, so exact agreement is not expected.
pub const PLANE_CONSISTENCY_TOL: f64 = 1e-6;

/// A correlation reconstruction. Values are signed until normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostImage {
    pub image: Image,
    pub m_used: usize,
    pub normalized: bool,
}

impl GhostImage {
    /// Min-max normalized copy.
    pub fn normalized(&self) -> GhostImage {
        GhostImage {
            image: self.image.normalize_minmax(),
            m_used: self.m_used,
            normalized: true,
        }
    }
}

/// Which pattern indices of a group frame take part in a reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    All,
    Even,
    Odd,
}

impl Selection {
    fn offset_and_step(self) -> (usize, usize) {
        match self {
            Selection::All => (0, 1),
            Selection::Even => (0, 2),
            Selection::Odd => (1, 2),
        }
    }

    /// Number of selected indices out of `m`.
    pub fn count(self, m: usize) -> usize {
        let (offset, step) = self.offset_and_step();
        if m <= offset {
            0
        } else {
            (m - offset).div_ceil(step)
        }
    }

    pub fn indices(self, m: usize) -> impl Iterator<Item = usize> {
        let (offset, step) = self.offset_and_step();
        (offset..m).step_by(step)
    }
}

fn check_lengths(speckles: &SpeckleSet, buckets: &BucketSequence) -> Result<()> {
    if speckles.len() != buckets.len() {
        return Err(Error::LengthMismatch {
            expected: speckles.len(),
            actual: buckets.len(),
        });
    }
    Ok(())
}

/// Ghost image from the first `k` samples.
fn gi_prefix(speckles: &SpeckleSet, buckets: &[f64], k: usize) -> Result<GhostImage> {
    if k < 2 {
        return Err(Error::TooFewSamples(k));
    }
    let n = speckles.pixels();
    let mean = buckets[..k].iter().sum::<f64>() / k as f64;
    let weights: Vec<f64> = buckets[..k].iter().map(|s| (s - mean) / k as f64).collect();
    let mut out = vec![0.0; n];
    linalg::matmul(1, k, n, &weights, k, speckles.matrix(), n, &mut out);
    Ok(GhostImage {
        image: Image::new(speckles.height(), speckles.width(), out)?,
        m_used: k,
        normalized: false,
    })
}

/// Reconstruction from a speckle set and its bucket sequence.
pub fn gi(speckles: &SpeckleSet, buckets: &BucketSequence) -> Result<GhostImage> {
    check_lengths(speckles, buckets)?;
    gi_prefix(speckles, buckets.values(), buckets.len())
}

/// Reconstructions from growing prefixes of the sample sequence. Each entry
/// equals `gi` on the truncated inputs.
pub fn gi_progressive(
    speckles: &SpeckleSet,
    buckets: &BucketSequence,
    checkpoints: &[usize],
) -> Result<Vec<GhostImage>> {
    check_lengths(speckles, buckets)?;
    if checkpoints.is_empty() {
        return Err(Error::BadCheckpoints("no checkpoints".into()));
    }
    let m = buckets.len();
    for (i, &c) in checkpoints.iter().enumerate() {
        if c < 2 || c > m {
            return Err(Error::BadCheckpoints(format!("checkpoint {c} outside [2, {m}]")));
        }
        if i > 0 && c <= checkpoints[i - 1] {
            return Err(Error::BadCheckpoints("checkpoints must be strictly ascending".into()));
        }
    }
    checkpoints
        .iter()
        .map(|&c| gi_prefix(speckles, buckets.values(), c))
        .collect()
}

/// Largest deviation of any stored plane from `S_i * I_i`, relative to that
/// plane's scale, with the index of the worst plane.
pub fn plane_consistency(gf: &GroupFrame) -> (usize, f64) {
    let Some(planes) = gf.explicit_planes() else {
        return (0, 0.0);
    };
    let speckles = gf.speckles();
    let n = speckles.pixels();
    let mut worst = (0, 0.0);
    for (i, &s) in gf.buckets().values().iter().enumerate() {
        let pattern = speckles.row(i);
        let plane = &planes[i * n..(i + 1) * n];
        let scale = pattern.iter().fold(0.0f64, |m, v| m.max(v.abs())) * s.abs();
        let dev = plane
            .iter()
            .zip(pattern)
            .map(|(p, v)| (p - s * v).abs())
            .fold(0.0f64, f64::max);
        let rel = if scale > 0.0 { dev / scale } else if dev > 0.0 { f64::INFINITY } else { 0.0 };
        if !(rel <= worst.1) {
            worst = (i, rel);
        }
    }
    worst
}

/// Reconstruction directly from a group frame's planes: the mean plane
/// minus `<S>` times the mean (regenerated) pattern. Rejects frames whose
/// stored planes disagree with their buckets and speckle seed.
pub fn gi_from_gf(gf: &GroupFrame) -> Result<GhostImage> {
    let (plane, deviation) = plane_consistency(gf);
    if !(deviation <= PLANE_CONSISTENCY_TOL) {
        return Err(Error::CorruptGf { plane, deviation });
    }
    let image = plane_ghost(gf, Selection::All)?;
    Ok(GhostImage {
        image,
        m_used: gf.len(),
        normalized: false,
    })
}

/// `mean(planes) - mean(S) * mean(patterns)` over the selected indices,
/// without any consistency check.
pub fn plane_ghost(gf: &GroupFrame, selection: Selection) -> Result<Image> {
    let m = gf.len();
    let k = selection.count(m);
    if k < 2 {
        return Err(Error::TooFewSamples(k));
    }
    let speckles = gf.speckles();
    let n = speckles.pixels();
    let mut plane_sum = vec![0.0; n];
    let mut pattern_sum = vec![0.0; n];
    let mut bucket_sum = 0.0;
    for i in selection.indices(m) {
        let plane = gf.plane_row(i);
        for (a, p) in plane_sum.iter_mut().zip(plane.iter()) {
            *a += p;
        }
        for (a, p) in pattern_sum.iter_mut().zip(speckles.row(i)) {
            *a += p;
        }
        bucket_sum += gf.buckets().values()[i];
    }
    let kf = k as f64;
    let mean_s = bucket_sum / kf;
    let data = plane_sum
        .iter()
        .zip(&pattern_sum)
        .map(|(p, q)| p / kf - mean_s * (q / kf))
        .collect();
    let (h, w) = gf.dims();
    Image::new(h, w, data)
}

/// Subset reconstructions for several frames. Frames with implicit planes
/// that share a speckle set go through one matrix product.
pub fn ghost_images(frames: &[&GroupFrame], selection: Selection) -> Result<Vec<Image>> {
    let mut out: Vec<Option<Image>> = vec![None; frames.len()];
    let mut implicit: Vec<usize> = Vec::new();
    for (j, f) in frames.iter().enumerate() {
        if f.has_explicit_planes() {
            out[j] = Some(plane_ghost(f, selection)?);
        } else {
            implicit.push(j);
        }
    }
    while let Some(&lead) = implicit.first() {
        let set = frames[lead].speckles().clone();
        let (group, rest): (Vec<usize>, Vec<usize>) = implicit
            .iter()
            .partition(|&&j| std::sync::Arc::ptr_eq(frames[j].speckles(), &set));
        implicit = rest;

        let m = set.len();
        let k = selection.count(m);
        if k < 2 {
            return Err(Error::TooFewSamples(k));
        }
        let (offset, step) = selection.offset_and_step();
        let n = set.pixels();
        let mut weights = Vec::with_capacity(group.len() * k);
        for &j in &group {
            let s = frames[j].buckets().values();
            let mean = selection.indices(m).map(|i| s[i]).sum::<f64>() / k as f64;
            weights.extend(selection.indices(m).map(|i| (s[i] - mean) / k as f64));
        }
        let mut result = vec![0.0; group.len() * n];
        linalg::matmul(
            group.len(),
            k,
            n,
            &weights,
            k,
            &set.matrix()[offset * n..],
            step * n,
            &mut result,
        );
        for (g, &j) in group.iter().enumerate() {
            out[j] = Some(Image::new(set.height(), set.width(), result[g * n..(g + 1) * n].to_vec())?);
        }
    }
    Ok(out.into_iter().map(|o| o.expect("every frame reconstructed")).collect())
}

/// Reconstruction when only planes and buckets are known: each pattern is
/// recovered as `plane_i / S_i`. Accepts `f32` or `f64` storage.
pub fn gi_from_planes<P, B>(height: usize, width: usize, planes: &[P], buckets: &[B]) -> Result<GhostImage>
where
    P: Copy + Into<f64>,
    B: Copy + Into<f64>,
{
    let n = height * width;
    let m = buckets.len();
    if planes.len() != m * n {
        return Err(Error::LengthMismatch {
            expected: m * n,
            actual: planes.len(),
        });
    }
    if m < 2 {
        return Err(Error::TooFewSamples(m));
    }
    let mut plane_sum = vec![0.0; n];
    let mut pattern_sum = vec![0.0; n];
    let mut bucket_sum = 0.0;
    for (i, &s) in buckets.iter().enumerate() {
        let s: f64 = s.into();
        if s == 0.0 {
            return Err(Error::ZeroBucket { index: i });
        }
        bucket_sum += s;
        let plane = &planes[i * n..(i + 1) * n];
        for ((a, b), &p) in plane_sum.iter_mut().zip(pattern_sum.iter_mut()).zip(plane) {
            let p: f64 = p.into();
            *a += p;
            *b += p / s;
        }
    }
    let mf = m as f64;
    let mean_s = bucket_sum / mf;
    let data = plane_sum
        .iter()
        .zip(&pattern_sum)
        .map(|(p, q)| p / mf - mean_s * (q / mf))
        .collect();
    Ok(GhostImage {
        image: Image::new(height, width, data)?,
        m_used: m,
        normalized: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::make_gf;
    use crate::phantom::digit;
    use crate::speckle::{gen_speckle_set, Distribution};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn frame(seed: u64, m: usize, n: usize) -> GroupFrame {
        let set = Arc::new(gen_speckle_set(seed, m, n, n, Distribution::Uniform01).unwrap());
        let obj = Image::from_fn(n, n, |r, c| ((r * 5 + c * 3 + seed as usize) % 7) as f64 / 6.0).unwrap();
        make_gf(&obj, &set, "t").unwrap()
    }

    #[test]
    fn constant_buckets_give_zero_image() {
        let set = gen_speckle_set(1, 10, 6, 6, Distribution::Uniform01).unwrap();
        let g = gi(&set, &BucketSequence::new(vec![3.5; 10])).unwrap();
        assert!(g.image.data().iter().all(|v| v.abs() < 1e-15));
        assert!(!g.normalized);
        assert_eq!(g.m_used, 10);
    }

    #[test]
    fn errors() {
        let set = gen_speckle_set(1, 3, 4, 4, Distribution::Uniform01).unwrap();
        assert!(matches!(gi(&set, &BucketSequence::new(vec![1.0; 2])), Err(Error::LengthMismatch { .. })));
        let one = gen_speckle_set(1, 1, 4, 4, Distribution::Uniform01).unwrap();
        assert!(matches!(gi(&one, &BucketSequence::new(vec![1.0])), Err(Error::TooFewSamples(1))));
    }

    #[test]
    fn delta_object_peaks_at_its_pixel() {
        let n = 64;
        let set = Arc::new(gen_speckle_set(42, 4096, n, n, Distribution::Uniform01).unwrap());
        let mut obj = Image::zeros(n, n).unwrap();
        obj.set(21, 40, 1.0);
        let gf = make_gf(&obj, &set, "delta").unwrap();
        let g = gi(&set, gf.buckets()).unwrap();
        assert_eq!(g.image.argmax(), (21, 40));
    }

    #[test]
    fn plane_route_matches_covariance_route() {
        for seed in 0..4 {
            let gf = frame(seed, 40, 9);
            let a = gi(gf.speckles(), gf.buckets()).unwrap();
            let b = gi_from_gf(&gf).unwrap();
            assert!(a.image.max_abs_diff(&b.image).unwrap() < 1e-10);
        }
    }

    #[test]
    fn zero_object_zero_image() {
        let set = Arc::new(gen_speckle_set(2, 12, 5, 5, Distribution::Binary).unwrap());
        let gf = make_gf(&Image::zeros(5, 5).unwrap(), &set, "z").unwrap();
        assert!(gi_from_gf(&gf).unwrap().image.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tampered_plane_is_detected() {
        let gf = frame(3, 12, 6);
        let mut planes: Vec<f64> = (0..gf.len()).flat_map(|i| gf.plane_row(i).into_owned()).collect();
        let ok = gf.clone().with_planes(planes.clone()).unwrap();
        assert!(gi_from_gf(&ok).is_ok());
        planes[5 * 36 + 7] += 0.5;
        let bad = gf.with_planes(planes).unwrap();
        assert!(matches!(gi_from_gf(&bad), Err(Error::CorruptGf { plane: 5, .. })));
    }

    #[test]
    fn progressive_prefixes() {
        let gf = frame(4, 30, 6);
        let all = gi_progressive(gf.speckles(), gf.buckets(), &[30]).unwrap();
        assert_eq!(all[0], gi(gf.speckles(), gf.buckets()).unwrap());

        let two = gi_progressive(gf.speckles(), gf.buckets(), &[2, 30]).unwrap();
        let prefix_set = gen_speckle_set(gf.speckle_seed(), 2, 6, 6, Distribution::Uniform01).unwrap();
        let prefix = gi(&prefix_set, &BucketSequence::new(gf.buckets().values()[..2].to_vec())).unwrap();
        assert_eq!(two[0], prefix);
        assert_eq!(two[1], all[0]);

        for bad in [&[][..], &[1], &[5, 5], &[10, 4], &[31]] {
            assert!(matches!(
                gi_progressive(gf.speckles(), gf.buckets(), bad),
                Err(Error::BadCheckpoints(_))
            ));
        }
    }

    #[test]
    fn subset_reconstructions_agree_across_routes() {
        let gfs: Vec<GroupFrame> = (0..3).map(|k| {
            let set = Arc::new(gen_speckle_set(9, 21, 7, 7, Distribution::Uniform01).unwrap());
            let obj = Image::from_fn(7, 7, |r, c| ((r + c * k) % 4) as f64).unwrap();
            make_gf(&obj, &set, "s").unwrap()
        }).collect();
        // distinct Arcs with the same content exercise the grouping logic
        let refs: Vec<&GroupFrame> = gfs.iter().collect();
        for sel in [Selection::All, Selection::Even, Selection::Odd] {
            let batched = ghost_images(&refs, sel).unwrap();
            for (gf, img) in gfs.iter().zip(&batched) {
                let direct = plane_ghost(gf, sel).unwrap();
                assert!(direct.max_abs_diff(img).unwrap() < 1e-10);
            }
        }
        assert_eq!(Selection::Even.count(21), 11);
        assert_eq!(Selection::Odd.count(21), 10);
    }

    #[test]
    fn planes_only_route() {
        let gf = frame(5, 16, 8);
        let planes: Vec<f64> = (0..gf.len()).flat_map(|i| gf.plane_row(i).into_owned()).collect();
        let a = gi_from_planes(8, 8, &planes, gf.buckets().values()).unwrap();
        let b = gi(gf.speckles(), gf.buckets()).unwrap();
        assert!(a.image.max_abs_diff(&b.image).unwrap() < 1e-10);
        let mut zero = gf.buckets().values().to_vec();
        zero[3] = 0.0;
        assert!(matches!(gi_from_planes(8, 8, &planes, &zero), Err(Error::ZeroBucket { index: 3 })));
    }

    #[test]
    fn deterministic() {
        let set = gen_speckle_set(6, 64, 16, 16, Distribution::Uniform01).unwrap();
        let obj = digit(7, 16).unwrap();
        let gf = make_gf(&obj, &Arc::new(set.clone()), "d").unwrap();
        assert_eq!(gi(&set, gf.buckets()).unwrap(), gi(&set, gf.buckets()).unwrap());
    }

    proptest! {
        #[test]
        fn speckle_scale_cancels_after_normalization(c in 0.1f64..10.0, seed in 0u64..50) {
            let set = gen_speckle_set(seed, 24, 6, 6, Distribution::Uniform01).unwrap();
            let obj = Image::from_fn(6, 6, |r, cc| ((r * 2 + cc) % 5) as f64).unwrap();
            let scaled = SpeckleSet::generate(seed, 24, 6, 6, Distribution::Uniform01).unwrap();
            let base_buckets: Vec<f64> = (0..24).map(|i| crate::linalg::dot(obj.data(), set.row(i))).collect();
            let base = gi(&set, &BucketSequence::new(base_buckets)).unwrap();
            // I -> cI multiplies buckets by c and patterns by c: T_GI -> c^2 T_GI
            let scaled_buckets: Vec<f64> = (0..24).map(|i| {
                let row: Vec<f64> = scaled.row(i).iter().map(|v| c * v).collect();
                crate::linalg::dot(obj.data(), &row)
            }).collect();
            let mut raw = gi(&scaled, &BucketSequence::new(scaled_buckets)).unwrap().image;
            raw.data_mut().iter_mut().for_each(|v| *v *= c);
            let expected = base.image.map(|v| v * c * c);
            prop_assert!(raw.max_abs_diff(&expected).unwrap() <= 1e-9 * expected.max().abs().max(1.0));
            prop_assert!(raw.normalize_minmax().max_abs_diff(&base.normalized().image).unwrap() <= 1e-9);
        }
    }
}
