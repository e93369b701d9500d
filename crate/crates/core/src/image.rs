//! Grayscale image type, normalizations and rotation about the frame center.

use crate::error::{Error, Result};

/// H x W grid of real intensities, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::ZeroDimension {
                height,
                width,
                count: 1,
            });
        }
        if data.len() != height * width {
            return Err(Error::DataLength {
                height,
                width,
                len: data.len(),
            });
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, vec![0.0; height * width])
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    /// Builds an image from `f(row, col)`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Index of the largest value as `(row, col)`; first occurrence wins.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &v) in self.data.iter().enumerate() {
            if v > self.data[best] {
                best = i;
            }
        }
        (best / self.width, best % self.width)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn ensure_same_dims(&self, other: &Image) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                left: self.dims(),
                right: other.dims(),
            });
        }
        Ok(())
    }

    /// Element-wise `a * self + b * other`.
    pub fn lincomb(&self, a: f64, other: &Image, b: f64) -> Result<Image> {
        self.ensure_same_dims(other)?;
        Ok(Image {
            height: self.height,
            width: self.width,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        })
    }

    /// Largest absolute element-wise difference.
    pub fn max_abs_diff(&self, other: &Image) -> Result<f64> {
        self.ensure_same_dims(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max))
    }

    /// Sub-image of rows `[top, top + height)` and cols `[left, left + width)`.
    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Result<Image> {
        if top + height > self.height || left + width > self.width {
            return Err(Error::DimensionMismatch {
                left: self.dims(),
                right: (top + height, left + width),
            });
        }
        Image::from_fn(height, width, |r, c| self.get(top + r, left + c))
    }

    /// Affine map onto `[0, 1]`. A constant image maps to all zeros.
    pub fn normalize_minmax(&self) -> Image {
        let (lo, hi) = (self.min(), self.max());
        let range = hi - lo;
        if !(range > 0.0) {
            return self.map(|_| 0.0);
        }
        self.map(|v| ((v - lo) / range).clamp(0.0, 1.0))
    }

    /// Zero mean and unit Frobenius norm.
    pub fn normalize_zscore(&self) -> Result<Image> {
        let mean = self.mean();
        let mut out = self.map(|v| v - mean);
        let norm = out.norm();
        // Relative threshold: round-off in the mean leaves ~1e-16 residue on
        // constant inputs.
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(norm > 1e-12 * scale.max(f64::MIN_POSITIVE) * (self.len() as f64).sqrt()) {
            return Err(Error::ConstantImage);
        }
        out.data.iter_mut().for_each(|v| *v /= norm);
        Ok(out)
    }

    /// Separable Gaussian smoothing with zero padding, kernel radius
    /// `round(4 sigma)`. `sigma == 0` returns a copy.
    pub fn gaussian_blur(&self, sigma: f64) -> Result<Image> {
        if sigma == 0.0 {
            return Ok(self.clone());
        }
        crate::error::positive("sigma", sigma)?;
        let radius = (4.0 * sigma + 0.5).floor() as isize;
        let mut kernel: Vec<f64> = (-radius..=radius)
            .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
            .collect();
        let total: f64 = kernel.iter().sum();
        kernel.iter_mut().for_each(|k| *k /= total);

        let (h, w) = (self.height as isize, self.width as isize);
        let pass = |src: &[f64], along_rows: bool| -> Vec<f64> {
            let mut out = vec![0.0; src.len()];
            for r in 0..h {
                for c in 0..w {
                    let mut acc = 0.0;
                    for (k, d) in kernel.iter().zip(-radius..=radius) {
                        let (rr, cc) = if along_rows { (r, c + d) } else { (r + d, c) };
                        if rr >= 0 && rr < h && cc >= 0 && cc < w {
                            acc += k * src[(rr * w + cc) as usize];
                        }
                    }
                    out[(r * w + c) as usize] = acc;
                }
            }
            out
        };
        let data = pass(&pass(&self.data, true), false);
        Image::new(self.height, self.width, data)
    }

    /// Bilinear sample at fractional `(x, y)` = (col, row); zero outside.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let x0f = x.floor();
        let y0f = y.floor();
        let fx = x - x0f;
        let fy = y - y0f;
        let x0 = x0f as isize;
        let y0 = y0f as isize;
        let (w, h) = (self.width as isize, self.height as isize);
        if x0 < -1 || y0 < -1 || x0 >= w || y0 >= h {
            return 0.0;
        }
        let px = |xi: isize, yi: isize| -> f64 {
            if xi >= 0 && yi >= 0 && xi < w && yi < h {
                self.data[(yi * w + xi) as usize]
            } else {
                0.0
            }
        };
        let top = px(x0, y0) * (1.0 - fx) + px(x0 + 1, y0) * fx;
        let bottom = px(x0, y0 + 1) * (1.0 - fx) + px(x0 + 1, y0 + 1) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Counterclockwise rotation by `theta_deg` about the geometric center
    /// `((W-1)/2, (H-1)/2)`, as displayed with row 0 at the top. Each output
    /// pixel samples the input at the inverse-rotated coordinate with
    /// bilinear interpolation; coordinates outside the frame contribute 0.
    pub fn rotate(&self, theta_deg: f64) -> Image {
        if theta_deg == 0.0 {
            return self.clone();
        }
        let (sin, cos) = sin_cos_deg(theta_deg);
        let cx = (self.width as f64 - 1.0) * 0.5;
        let cy = (self.height as f64 - 1.0) * 0.5;
        let mut data = Vec::with_capacity(self.data.len());
        for r in 0..self.height {
            let dy = r as f64 - cy;
            for c in 0..self.width {
                let dx = c as f64 - cx;
                let sx = cx + dx * cos - dy * sin;
                let sy = cy + dx * sin + dy * cos;
                data.push(self.sample_bilinear(sx, sy));
            }
        }
        Image {
            height: self.height,
            width: self.width,
            data,
        }
    }
}

/// `(sin, cos)` of an angle in degrees, exact at multiples of 90.
pub fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let turns = deg / 90.0;
    if turns == turns.round() && turns.abs() < 1e15 {
        return match (turns as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        };
    }
    deg.to_radians().sin_cos()
}
