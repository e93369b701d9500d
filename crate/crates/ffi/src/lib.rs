//! C interface to ghostsim.
//!
//! Objects are passed as opaque handles created by `gs_*` constructors and
//! released with the matching `*_free`. Fallible calls return a
//! [`GsStatus`] and write results through out-pointers; on failure the out
//! value is left untouched and [`gs_last_error_message`] describes the
//! problem. Images are row-major `double` arrays.

#![allow(clippy::missing_safety_doc)]

mod status;

use std::ffi::{c_char, CStr};
use std::path::Path;
use std::sync::Arc;

use ghostsim::fma::{estimate_alpha, fma_merge_across, AngleGrid, FmaConfig, MergedGroupFrame};
use ghostsim::io::container::{read_container, write_container, Container, ContainerEntry};
use ghostsim::io::pgm::{read_pgm, write_pgm};
use ghostsim::{
    gi, gi_from_gf, make_gf, max_samples, psnr, simulate_rotation_bgfs, ssim, BatchGroupFrame, BucketSequence,
    Distribution, GroupFrame, Image, QualityReport, RotationTrajectory, SpeckleSet,
};

pub use status::{gs_last_error_message, GsStatus};
use status::{guard, Failure};

/// Speckle intensities uniform on [0, 1).
pub const GS_DIST_UNIFORM01: u32 = 0;
/// Speckle intensities 0 or 1 with equal probability.
pub const GS_DIST_BINARY: u32 = 1;

pub struct GsImage(Image);
pub struct GsSpeckleSet(Arc<SpeckleSet>);
pub struct GsGroupFrame(GroupFrame);
/// Batches of frames from a rotation simulation or a container.
pub struct GsBatches(Vec<BatchGroupFrame>);
pub struct GsMerged(MergedGroupFrame);
pub struct GsContainer(Container);

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::null(what))
}

unsafe fn get_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::null(what))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_box<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::null("output pointer"));
    }
    out.write(Box::into_raw(Box::new(value)));
    Ok(())
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a Path, Failure> {
    if p.is_null() {
        return Err(Failure::null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| Failure::new(GsStatus::InvalidArgument, "path is not valid UTF-8"))
}

unsafe fn text(p: *const c_char, what: &str) -> Result<String, Failure> {
    if p.is_null() {
        return Err(Failure::null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(String::from)
        .map_err(|_| Failure::new(GsStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

fn distribution(code: u32) -> Result<Distribution, Failure> {
    u8::try_from(code)
        .ok()
        .and_then(Distribution::from_code)
        .ok_or_else(|| Failure::new(GsStatus::InvalidArgument, format!("unknown distribution code {code}")))
}

unsafe fn release<T>(handle: *mut T) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Releases the handle; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn gs_image_free(handle: *mut GsImage) {
    release(handle)
}

/// Releases the handle; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn gs_speckle_set_free(handle: *mut GsSpeckleSet) {
    release(handle)
}

/// Releases the handle; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn gs_group_frame_free(handle: *mut GsGroupFrame) {
    release(handle)
}

/// Releases the handle; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn gs_batches_free(handle: *mut GsBatches) {
    release(handle)
}

/// Releases the handle; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn gs_merged_free(handle: *mut GsMerged) {
    release(handle)
}

/// Releases the handle; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn gs_container_free(handle: *mut GsContainer) {
    release(handle)
}

/// Copies `height * width` values from `data` into a new image.
#[no_mangle]
pub unsafe extern "C" fn gs_image_new(height: usize, width: usize, data: *const f64, out: *mut *mut GsImage) -> GsStatus {
    guard(|| {
        let len = height.checked_mul(width).ok_or_else(|| Failure::new(GsStatus::InvalidArgument, "size overflow"))?;
        let img = Image::new(height, width, slice(data, len, "data")?.to_vec())?;
        put_box(out, GsImage(img))
    })
}

#[no_mangle]
pub unsafe extern "C" fn gs_image_dims(image: *const GsImage, height: *mut usize, width: *mut usize) -> GsStatus {
    guard(|| {
        let (h, w) = get(image, "image")?.0.dims();
        put(height, h)?;
        put(width, w)
    })
}

/// Borrowed pointer to the pixels; valid until the image is freed. Null for
/// a null handle.
#[no_mangle]
pub unsafe extern "C" fn gs_image_data(image: *const GsImage) -> *const f64 {
    image.as_ref().map_or(std::ptr::null(), |i| i.0.data().as_ptr())
}

/// Counterclockwise rotation about the image center, bilinear, zero fill.
#[no_mangle]
pub unsafe extern "C" fn gs_image_rotate(image: *const GsImage, angle_deg: f64, out: *mut *mut GsImage) -> GsStatus {
    guard(|| {
        if !angle_deg.is_finite() {
            return Err(Failure::new(GsStatus::InvalidArgument, "angle must be finite"));
        }
        put_box(out, GsImage(get(image, "image")?.0.rotate(angle_deg)))
    })
}

/// Binary image of a digit drawn on a `size` by `size` grid.
#[no_mangle]
pub unsafe extern "C" fn gs_phantom_digit(digit: u8, size: usize, out: *mut *mut GsImage) -> GsStatus {
    guard(|| put_box(out, GsImage(ghostsim::phantom::digit(digit, size)?)))
}

/// Reads a binary PGM with values scaled to [0, 1].
#[no_mangle]
pub unsafe extern "C" fn gs_pgm_read(file: *const c_char, out: *mut *mut GsImage) -> GsStatus {
    guard(|| put_box(out, GsImage(read_pgm(path(file)?)?)))
}

/// Writes an 8-bit binary PGM after min-max normalization.
#[no_mangle]
pub unsafe extern "C" fn gs_pgm_write(image: *const GsImage, file: *const c_char) -> GsStatus {
    guard(|| Ok(write_pgm(path(file)?, &get(image, "image")?.0)?))
}

#[no_mangle]
pub unsafe extern "C" fn gs_speckle_set_generate(
    seed: u64,
    count: usize,
    height: usize,
    width: usize,
    dist: u32,
    out: *mut *mut GsSpeckleSet,
) -> GsStatus {
    guard(|| {
        let set = SpeckleSet::generate(seed, count, height, width, distribution(dist)?)?;
        put_box(out, GsSpeckleSet(Arc::new(set)))
    })
}

#[no_mangle]
pub unsafe extern "C" fn gs_speckle_set_len(set: *const GsSpeckleSet, len: *mut usize) -> GsStatus {
    guard(|| put(len, get(set, "speckle set")?.0.len()))
}

/// Simulates bucket measurements of `object` under every pattern of `set`.
#[no_mangle]
pub unsafe extern "C" fn gs_group_frame_simulate(
    object: *const GsImage,
    set: *const GsSpeckleSet,
    out: *mut *mut GsGroupFrame,
) -> GsStatus {
    guard(|| {
        let gf = make_gf(&get(object, "object")?.0, &get(set, "speckle set")?.0, "ffi")?;
        put_box(out, GsGroupFrame(gf))
    })
}

#[no_mangle]
pub unsafe extern "C" fn gs_group_frame_len(frame: *const GsGroupFrame, len: *mut usize) -> GsStatus {
    guard(|| put(len, get(frame, "group frame")?.0.len()))
}

/// Copies the bucket values into `buckets`, which must hold exactly
/// `gs_group_frame_len` values.
#[no_mangle]
pub unsafe extern "C" fn gs_group_frame_buckets(frame: *const GsGroupFrame, buckets: *mut f64, len: usize) -> GsStatus {
    guard(|| {
        let values = get(frame, "group frame")?.0.buckets().values();
        if len != values.len() {
            return Err(Failure::new(
                GsStatus::DimensionMismatch,
                format!("buffer holds {len} values, frame has {}", values.len()),
            ));
        }
        if len > 0 {
            if buckets.is_null() {
                return Err(Failure::null("buckets"));
            }
            std::slice::from_raw_parts_mut(buckets, len).copy_from_slice(values);
        }
        Ok(())
    })
}

/// Correlation image of `set` against `count` bucket values.
#[no_mangle]
pub unsafe extern "C" fn gs_gi(
    set: *const GsSpeckleSet,
    buckets: *const f64,
    count: usize,
    out: *mut *mut GsImage,
) -> GsStatus {
    guard(|| {
        let b = BucketSequence::new(slice(buckets, count, "buckets")?.to_vec());
        put_box(out, GsImage(gi(&get(set, "speckle set")?.0, &b)?.image))
    })
}

/// Correlation image computed plane by plane from a group frame.
#[no_mangle]
pub unsafe extern "C" fn gs_gi_from_gf(frame: *const GsGroupFrame, out: *mut *mut GsImage) -> GsStatus {
    guard(|| put_box(out, GsImage(gi_from_gf(&get(frame, "group frame")?.0)?.image)))
}

/// PSNR in dB of inputs already on the [0, 255] scale. Identical images give
/// positive infinity.
#[no_mangle]
pub unsafe extern "C" fn gs_psnr(reference: *const GsImage, test: *const GsImage, out: *mut f64) -> GsStatus {
    guard(|| put(out, psnr(&get(reference, "reference")?.0, &get(test, "test")?.0)?.as_f64()))
}

/// SSIM of inputs already on the [0, 255] scale.
#[no_mangle]
pub unsafe extern "C" fn gs_ssim(reference: *const GsImage, test: *const GsImage, out: *mut f64) -> GsStatus {
    guard(|| put(out, ssim(&get(reference, "reference")?.0, &get(test, "test")?.0)?))
}

/// PSNR and SSIM after min-max mapping both images onto [0, 255].
#[no_mangle]
pub unsafe extern "C" fn gs_quality(
    reference: *const GsImage,
    test: *const GsImage,
    psnr_db: *mut f64,
    ssim_out: *mut f64,
) -> GsStatus {
    guard(|| {
        let r = QualityReport::compare("ffi", &get(reference, "reference")?.0, &get(test, "test")?.0)?;
        put(psnr_db, r.psnr.as_f64())?;
        put(ssim_out, r.ssim)
    })
}

/// Largest sample count taken while the object turns by less than
/// `theta_r_deg`.
#[no_mangle]
pub unsafe extern "C" fn gs_max_samples(freq_hz: f64, omega_deg_per_s: f64, theta_r_deg: f64, out: *mut u64) -> GsStatus {
    guard(|| put(out, max_samples(freq_hz, omega_deg_per_s, theta_r_deg)?))
}

/// Frames of `object` rotating at `omega_deg_per_ms`, split into `batches`
/// equal batches that each share one speckle set.
#[no_mangle]
pub unsafe extern "C" fn gs_rotation_simulate(
    object: *const GsImage,
    omega_deg_per_ms: f64,
    frame_interval_ms: f64,
    frames: usize,
    batches: usize,
    samples_per_frame: usize,
    seed: u64,
    dist: u32,
    out: *mut *mut GsBatches,
) -> GsStatus {
    guard(|| {
        let traj = RotationTrajectory::new(omega_deg_per_ms, frame_interval_ms, frames, batches)?;
        let bgfs = simulate_rotation_bgfs(&get(object, "object")?.0, &traj, samples_per_frame, seed, distribution(dist)?)?;
        put_box(out, GsBatches(bgfs))
    })
}

#[no_mangle]
pub unsafe extern "C" fn gs_batches_count(batches: *const GsBatches, count: *mut usize) -> GsStatus {
    guard(|| put(count, get(batches, "batches")?.0.len()))
}

/// Frames in one batch.
#[no_mangle]
pub unsafe extern "C" fn gs_batches_frames(batches: *const GsBatches, batch: usize, count: *mut usize) -> GsStatus {
    guard(|| {
        let all = &get(batches, "batches")?.0;
        let b = all.get(batch).ok_or_else(|| Failure::from(ghostsim::Error::IndexOutOfRange { index: batch, len: all.len() }))?;
        put(count, b.len())
    })
}

/// Per-frame rotation in degrees, searched over `[grid_min, grid_max]` in
/// steps of `grid_step`, with default pairing and pre-filtering.
#[no_mangle]
pub unsafe extern "C" fn gs_fma_estimate_alpha(
    batches: *const GsBatches,
    grid_min: f64,
    grid_max: f64,
    grid_step: f64,
    alpha_deg: *mut f64,
) -> GsStatus {
    guard(|| {
        let config = FmaConfig {
            grid: AngleGrid::new(grid_min, grid_max, grid_step)?,
            ..FmaConfig::default()
        };
        put(alpha_deg, estimate_alpha(&get(batches, "batches")?.0, &config)?.alpha_deg)
    })
}

/// Rotates every frame back to the orientation of frame `base_frame` of
/// batch `base_batch` and concatenates them.
#[no_mangle]
pub unsafe extern "C" fn gs_fma_merge(
    batches: *const GsBatches,
    alpha_deg: f64,
    base_batch: usize,
    base_frame: usize,
    out: *mut *mut GsMerged,
) -> GsStatus {
    guard(|| {
        let merged = fma_merge_across(&get(batches, "batches")?.0, alpha_deg, (base_batch, base_frame))?;
        put_box(out, GsMerged(merged))
    })
}

/// Number of planes in the merged frame.
#[no_mangle]
pub unsafe extern "C" fn gs_merged_len(merged: *const GsMerged, len: *mut usize) -> GsStatus {
    guard(|| put(len, get(merged, "merged frame")?.0.len()))
}

#[no_mangle]
pub unsafe extern "C" fn gs_merged_ghost_image(merged: *const GsMerged, out: *mut *mut GsImage) -> GsStatus {
    guard(|| put_box(out, GsImage(get(merged, "merged frame")?.0.ghost_image()?.image)))
}

/// Empty container for `height` by `width` frames of `samples` samples each.
#[no_mangle]
pub unsafe extern "C" fn gs_container_new(height: usize, width: usize, samples: usize, out: *mut *mut GsContainer) -> GsStatus {
    guard(|| put_box(out, GsContainer(Container::new(height, width, samples))))
}

#[no_mangle]
pub unsafe extern "C" fn gs_container_read(file: *const c_char, out: *mut *mut GsContainer) -> GsStatus {
    guard(|| put_box(out, GsContainer(read_container(path(file)?)?)))
}

#[no_mangle]
pub unsafe extern "C" fn gs_container_write(container: *const GsContainer, file: *const c_char) -> GsStatus {
    guard(|| Ok(write_container(path(file)?, &get(container, "container")?.0)?))
}

#[no_mangle]
pub unsafe extern "C" fn gs_container_len(container: *const GsContainer, len: *mut usize) -> GsStatus {
    guard(|| put(len, get(container, "container")?.0.entries.len()))
}

/// Appends a group frame. With `include_planes` false the planes are
/// regenerated from the speckle seed on read.
#[no_mangle]
pub unsafe extern "C" fn gs_container_push_frame(
    container: *mut GsContainer,
    frame: *const GsGroupFrame,
    ground_truth: *const GsImage,
    include_planes: bool,
) -> GsStatus {
    guard(|| {
        let c = get_mut(container, "container")?;
        let entry = ContainerEntry::from_group_frame(
            &get(frame, "group frame")?.0,
            &get(ground_truth, "ground truth")?.0,
            include_planes,
        )?;
        Ok(c.0.push(entry)?)
    })
}

/// Appends a merged frame under `label`; its planes are always stored.
#[no_mangle]
pub unsafe extern "C" fn gs_container_push_merged(
    container: *mut GsContainer,
    merged: *const GsMerged,
    label: *const c_char,
    ground_truth: *const GsImage,
) -> GsStatus {
    guard(|| {
        let c = get_mut(container, "container")?;
        let entry = ContainerEntry::from_merged(
            &get(merged, "merged frame")?.0,
            text(label, "label")?,
            &get(ground_truth, "ground truth")?.0,
        )?;
        Ok(c.0.push(entry)?)
    })
}

/// Correlation image of one entry.
#[no_mangle]
pub unsafe extern "C" fn gs_container_ghost_image(
    container: *const GsContainer,
    index: usize,
    out: *mut *mut GsImage,
) -> GsStatus {
    guard(|| {
        let c = &get(container, "container")?.0;
        let entry = c
            .entries
            .get(index)
            .ok_or_else(|| Failure::from(ghostsim::Error::IndexOutOfRange { index, len: c.entries.len() }))?;
        put_box(out, GsImage(entry.ghost_image(c.height, c.width)?.image))
    })
}

/// Regroups consecutive non-derived entries into batches.
#[no_mangle]
pub unsafe extern "C" fn gs_container_to_batches(container: *const GsContainer, out: *mut *mut GsBatches) -> GsStatus {
    guard(|| put_box(out, GsBatches(get(container, "container")?.0.to_bgfs()?)))
}
