//! PSNR and SSIM on the 8-bit intensity scale.

use std::fmt;

use crate::error::{Error, Result};
use crate::image::Image;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
pub const PEAK: f64 = 255.0;

/// Peak signal-to-noise ratio. Identical inputs have no finite value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psnr {
    Db(f64),
    Identical,
}

impl Psnr {
    pub fn db(self) -> Option<f64> {
        match self {
            Psnr::Db(v) => Some(v),
            Psnr::Identical => None,
        }
    }

    /// Finite value, with identical images mapped to `+inf`.
    pub fn as_f64(self) -> f64 {
        self.db().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Psnr::Db(v) => write!(f, "{v:.6}"),
            Psnr::Identical => f.write_str("inf"),
        }
    }
}

/// Min-max maps an image onto `[0, 255]`.
pub fn to_peak_scale(img: &Image) -> Image {
    img.normalize_minmax().map(|v| v * PEAK)
}

/// `10 log10(255^2 / MSE)`; inputs are expected on the `[0, 255]` scale.
pub fn psnr(reference: &Image, test: &Image) -> Result<Psnr> {
    reference.ensure_same_dims(test)?;
    let mse = reference
        .data()
        .iter()
        .zip(test.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / reference.len() as f64;
    if mse == 0.0 {
        return Ok(Psnr::Identical);
    }
    Ok(Psnr::Db(10.0 * (PEAK * PEAK / mse).log10()))
}

fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= total);
    k
}

/// Separable Gaussian filter over the valid region only.
fn filter_valid(data: &[f64], height: usize, width: usize, kernel: &[f64]) -> Vec<f64> {
    let kw = kernel.len();
    let out_w = width - kw + 1;
    let out_h = height - kw + 1;
    let mut rows = vec![0.0; height * out_w];
    for r in 0..height {
        let src = &data[r * width..(r + 1) * width];
        for c in 0..out_w {
            rows[r * out_w + c] = kernel.iter().zip(&src[c..c + kw]).map(|(k, v)| k * v).sum();
        }
    }
    let mut out = vec![0.0; out_h * out_w];
    for r in 0..out_h {
        for c in 0..out_w {
            out[r * out_w + c] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * rows[(r + i) * out_w + c])
                .sum();
        }
    }
    out
}

/// Mean structural similarity with an 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03 and L = 255, averaged over window positions that fit
/// entirely inside the image.
pub fn ssim(reference: &Image, test: &Image) -> Result<f64> {
    reference.ensure_same_dims(test)?;
    let (h, w) = reference.dims();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::TooSmall {
            height: h,
            width: w,
            window: SSIM_WINDOW,
        });
    }
    let kernel = gaussian_kernel();
    let x = reference.data();
    let y = test.data();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();

    let mu_x = filter_valid(x, h, w, &kernel);
    let mu_y = filter_valid(y, h, w, &kernel);
    let e_xx = filter_valid(&xx, h, w, &kernel);
    let e_yy = filter_valid(&yy, h, w, &kernel);
    let e_xy = filter_valid(&xy, h, w, &kernel);

    let c1 = (SSIM_K1 * PEAK).powi(2);
    let c2 = (SSIM_K2 * PEAK).powi(2);
    let mut total = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let vx = e_xx[i] - mx * mx;
        let vy = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
    Ok(total / mu_x.len() as f64)
}

/// PSNR and SSIM for one reference/test pair.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    pub pair_id: String,
    pub psnr: Psnr,
    pub ssim: f64,
}

impl QualityReport {
    /// Scores `test` against `reference`, min-max mapping each onto
    /// `[0, 255]` first.
    pub fn compare(pair_id: impl Into<String>, reference: &Image, test: &Image) -> Result<Self> {
        let r = to_peak_scale(reference);
        let t = to_peak_scale(test);
        Ok(Self {
            pair_id: pair_id.into(),
            psnr: psnr(&r, &t)?,
            ssim: ssim(&r, &t)?,
        })
    }

    pub fn csv_header() -> &'static str {
        "pair_id,psnr_db,ssim"
    }

    pub fn csv_row(&self) -> String {
        format!("{},{},{:.9}", self.pair_id, self.psnr, self.ssim)
    }
}
