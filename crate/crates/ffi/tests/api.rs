use std::ffi::{CStr, CString};
use std::ptr;

use ghostsim_ffi::*;

fn last_error() -> String {
    let p = gs_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn pixels(img: *const GsImage) -> Vec<f64> {
    let (mut h, mut w) = (0, 0);
    assert_eq!(gs_image_dims(img, &mut h, &mut w), GsStatus::Ok);
    std::slice::from_raw_parts(gs_image_data(img), h * w).to_vec()
}

#[test]
fn image_round_trip_and_rotation() {
    unsafe {
        let data: Vec<f64> = (0..12).map(f64::from).collect();
        let mut img = ptr::null_mut();
        assert_eq!(gs_image_new(3, 4, data.as_ptr(), &mut img), GsStatus::Ok);
        assert_eq!(pixels(img), data);

        let mut same = ptr::null_mut();
        assert_eq!(gs_image_rotate(img, 0.0, &mut same), GsStatus::Ok);
        assert_eq!(pixels(same), data);

        let mut bad = ptr::null_mut();
        assert_eq!(gs_image_new(0, 4, data.as_ptr(), &mut bad), GsStatus::InvalidArgument);
        assert!(bad.is_null());
        assert_eq!(gs_image_new(3, 4, ptr::null(), &mut bad), GsStatus::NullPointer);
        assert!(last_error().contains("data"));
        assert_eq!(gs_image_rotate(img, f64::NAN, &mut bad), GsStatus::InvalidArgument);

        gs_image_free(img);
        gs_image_free(same);
        gs_image_free(ptr::null_mut());
    }
}

#[test]
fn correlation_paths_agree() {
    unsafe {
        let mut obj = ptr::null_mut();
        assert_eq!(gs_phantom_digit(5, 16, &mut obj), GsStatus::Ok);
        let mut set = ptr::null_mut();
        assert_eq!(gs_speckle_set_generate(3, 200, 16, 16, GS_DIST_UNIFORM01, &mut set), GsStatus::Ok);
        let mut gf = ptr::null_mut();
        assert_eq!(gs_group_frame_simulate(obj, set, &mut gf), GsStatus::Ok);

        let mut n = 0;
        assert_eq!(gs_group_frame_len(gf, &mut n), GsStatus::Ok);
        assert_eq!(n, 200);
        let mut buckets = vec![0.0; n];
        assert_eq!(gs_group_frame_buckets(gf, buckets.as_mut_ptr(), n - 1), GsStatus::DimensionMismatch);
        assert_eq!(gs_group_frame_buckets(gf, buckets.as_mut_ptr(), n), GsStatus::Ok);

        let (mut fast, mut literal) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(gs_gi(set, buckets.as_ptr(), n, &mut fast), GsStatus::Ok);
        assert_eq!(gs_gi_from_gf(gf, &mut literal), GsStatus::Ok);
        for (a, b) in pixels(fast).iter().zip(pixels(literal)) {
            assert!((a - b).abs() < 1e-10);
        }

        let mut short = ptr::null_mut();
        assert_eq!(gs_gi(set, buckets.as_ptr(), 10, &mut short), GsStatus::DimensionMismatch);
        assert_eq!(gs_speckle_set_generate(3, 2, 16, 16, 7, &mut short as *mut _ as *mut *mut GsSpeckleSet), GsStatus::InvalidArgument);
        assert!(last_error().contains("distribution"));

        let (mut p, mut s) = (0.0, 0.0);
        assert_eq!(gs_quality(obj, fast, &mut p, &mut s), GsStatus::Ok);
        assert!(p.is_finite() && s > 0.0 && s < 1.0);

        gs_image_free(fast);
        gs_image_free(literal);
        gs_group_frame_free(gf);
        gs_speckle_set_free(set);
        gs_image_free(obj);
    }
}

#[test]
fn metric_fixtures() {
    unsafe {
        let (a, b) = (vec![255.0; 256], vec![254.0; 256]);
        let (mut ia, mut ib) = (ptr::null_mut(), ptr::null_mut());
        gs_image_new(16, 16, a.as_ptr(), &mut ia);
        gs_image_new(16, 16, b.as_ptr(), &mut ib);
        let mut v = 0.0;
        assert_eq!(gs_psnr(ia, ib, &mut v), GsStatus::Ok);
        assert!((v - 48.13).abs() < 0.01);
        assert_eq!(gs_psnr(ia, ia, &mut v), GsStatus::Ok);
        assert_eq!(v, f64::INFINITY);
        assert_eq!(gs_ssim(ib, ib, &mut v), GsStatus::Ok);
        assert!((v - 1.0).abs() < 1e-9);
        assert_eq!(gs_ssim(ia, ptr::null(), &mut v), GsStatus::NullPointer);

        let mut n = 0;
        assert_eq!(gs_max_samples(250.0, 37.5, 1.5, &mut n), GsStatus::Ok);
        assert_eq!(n, 10);
        assert_eq!(gs_max_samples(0.0, 37.5, 1.5, &mut n), GsStatus::InvalidArgument);
        gs_image_free(ia);
        gs_image_free(ib);
    }
}

#[test]
fn rotation_merge_and_container() {
    let dir = tempfile::tempdir().unwrap();
    let file = CString::new(dir.path().join("m.gfb").to_str().unwrap()).unwrap();
    unsafe {
        let mut obj = ptr::null_mut();
        gs_phantom_digit(7, 24, &mut obj);
        let mut batches = ptr::null_mut();
        assert_eq!(
            gs_rotation_simulate(obj, 0.25, 4.0, 8, 2, 256, 9, GS_DIST_UNIFORM01, &mut batches),
            GsStatus::Ok
        );
        let mut n = 0;
        gs_batches_count(batches, &mut n);
        assert_eq!(n, 2);
        gs_batches_frames(batches, 1, &mut n);
        assert_eq!(n, 4);
        assert_eq!(gs_batches_frames(batches, 2, &mut n), GsStatus::InvalidArgument);

        let mut alpha = f64::NAN;
        assert_eq!(gs_fma_estimate_alpha(batches, 0.0, 2.0, 0.1, &mut alpha), GsStatus::Ok);
        assert!(alpha.is_finite());
        assert_eq!(gs_fma_estimate_alpha(batches, 1.0, 0.0, 0.1, &mut alpha), GsStatus::InvalidArgument);

        let mut merged = ptr::null_mut();
        assert_eq!(gs_fma_merge(batches, 1.0, 0, 0, &mut merged), GsStatus::Ok);
        gs_merged_len(merged, &mut n);
        assert_eq!(n, 8 * 256);
        let mut bad = ptr::null_mut();
        assert_eq!(gs_fma_merge(batches, 1.0, 5, 0, &mut bad), GsStatus::InvalidArgument);

        let mut direct = ptr::null_mut();
        assert_eq!(gs_merged_ghost_image(merged, &mut direct), GsStatus::Ok);

        let mut c = ptr::null_mut();
        gs_container_new(24, 24, 8 * 256, &mut c);
        let label = CString::new("merged/b000/f000").unwrap();
        assert_eq!(gs_container_push_merged(c, merged, label.as_ptr(), obj), GsStatus::Ok);
        assert_eq!(gs_container_write(c, file.as_ptr()), GsStatus::Ok);

        let mut back = ptr::null_mut();
        assert_eq!(gs_container_read(file.as_ptr(), &mut back), GsStatus::Ok);
        gs_container_len(back, &mut n);
        assert_eq!(n, 1);
        let mut stored = ptr::null_mut();
        assert_eq!(gs_container_ghost_image(back, 0, &mut stored), GsStatus::Ok);
        let scale = pixels(direct).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (a, b) in pixels(direct).iter().zip(pixels(stored)) {
            assert!((a - b).abs() <= 1e-5 * scale);
        }
        assert_eq!(gs_container_ghost_image(back, 1, &mut bad as *mut _ as *mut *mut GsImage), GsStatus::InvalidArgument);
        // Merged entries cannot be regrouped into batches.
        let mut regrouped = ptr::null_mut();
        assert_ne!(gs_container_to_batches(back, &mut regrouped), GsStatus::Ok);

        gs_image_free(stored);
        gs_image_free(direct);
        gs_container_free(back);
        gs_container_free(c);
        gs_merged_free(merged);
        gs_batches_free(batches);
        gs_image_free(obj);
    }
}

#[test]
fn container_of_frames_regroups() {
    let dir = tempfile::tempdir().unwrap();
    let file = CString::new(dir.path().join("f.gfb").to_str().unwrap()).unwrap();
    unsafe {
        let mut obj = ptr::null_mut();
        gs_phantom_digit(2, 16, &mut obj);
        let mut set = ptr::null_mut();
        gs_speckle_set_generate(4, 64, 16, 16, GS_DIST_BINARY, &mut set);
        let mut gf = ptr::null_mut();
        gs_group_frame_simulate(obj, set, &mut gf);

        let mut c = ptr::null_mut();
        gs_container_new(16, 16, 64, &mut c);
        assert_eq!(gs_container_push_frame(c, gf, obj, false), GsStatus::Ok);
        assert_eq!(gs_container_push_frame(c, gf, obj, true), GsStatus::Ok);
        assert_eq!(gs_container_write(c, file.as_ptr()), GsStatus::Ok);

        let mut back = ptr::null_mut();
        gs_container_read(file.as_ptr(), &mut back);
        let mut batches = ptr::null_mut();
        assert_eq!(gs_container_to_batches(back, &mut batches), GsStatus::Ok);
        let mut n = 0;
        gs_batches_frames(batches, 0, &mut n);
        assert_eq!(n, 2);

        let missing = CString::new(dir.path().join("none.gfb").to_str().unwrap()).unwrap();
        let mut none = ptr::null_mut();
        assert_eq!(gs_container_read(missing.as_ptr(), &mut none), GsStatus::Io);
        let pgm = CString::new(dir.path().join("x.pgm").to_str().unwrap()).unwrap();
        assert_eq!(gs_pgm_write(obj, pgm.as_ptr()), GsStatus::Ok);
        assert_eq!(gs_container_read(pgm.as_ptr(), &mut none), GsStatus::Format);
        let mut img = ptr::null_mut();
        assert_eq!(gs_pgm_read(pgm.as_ptr(), &mut img), GsStatus::Ok);
        assert_eq!(pixels(img), pixels(obj));

        gs_image_free(img);
        gs_batches_free(batches);
        gs_container_free(back);
        gs_container_free(c);
        gs_group_frame_free(gf);
        gs_speckle_set_free(set);
        gs_image_free(obj);
    }
}

#[test]
fn errors_are_per_thread() {
    let mut out = 0;
    assert_eq!(unsafe { gs_max_samples(-1.0, 1.0, 1.0, &mut out) }, GsStatus::InvalidArgument);
    let here = last_error();
    std::thread::spawn(|| assert!(gs_last_error_message().is_null())).join().unwrap();
    assert_eq!(last_error(), here);
}
