//! Seeded speckle illumination.
//!
//! Pattern `i` of a set with seed `s` is drawn from ChaCha8 keyed by
//! `splitmix64` expansions of `s`, on stream `i`, one 64-bit word per pixel in
//! row-major order. Patterns therefore depend only on `(seed, index, H*W,
//! distribution)`: a set of `m` patterns is a prefix of any larger set with the
//! same seed, and generation order does not matter.

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::Image;

/// Per-pixel intensity distribution of a pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Distribution {
    /// Uniform on `[0, 1)`.
    #[default]
    Uniform01,
    /// 0 or 1 with equal probability.
    Binary,
}

impl Distribution {
    pub fn code(self) -> u8 {
        match self {
            Distribution::Uniform01 => 0,
            Distribution::Binary => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Distribution::Uniform01),
            1 => Some(Distribution::Binary),
            _ => None,
        }
    }

    fn draw(self, word: u64) -> f64 {
        match self {
            Distribution::Uniform01 => (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64),
            Distribution::Binary => (word >> 63) as f64,
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distribution::Uniform01 => "uniform01",
            Distribution::Binary => "binary",
        })
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform01" => Ok(Distribution::Uniform01),
            "binary" => Ok(Distribution::Binary),
            other => Err(Error::Format(format!("unknown distribution `{other}`"))),
        }
    }
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of the speckle set used by batch `bgf_index` under `base_seed`.
pub fn derive_batch_seed(base_seed: u64, bgf_index: u64) -> u64 {
    splitmix64(base_seed ^ splitmix64(bgf_index.wrapping_add(0xA5A5_5A5A_C3C3_3C3C)))
}

fn pattern_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    let mut state = seed;
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

fn fill_pattern(seed: u64, index: usize, distribution: Distribution, out: &mut [f64]) {
    let mut rng = pattern_rng(seed, index as u64);
    for v in out.iter_mut() {
        *v = distribution.draw(rng.next_u64());
    }
}

/// One illumination pattern and where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecklePattern {
    pub image: Image,
    pub seed: u64,
    pub index: usize,
}

impl SpecklePattern {
    pub fn generate(seed: u64, index: usize, height: usize, width: usize, distribution: Distribution) -> Result<Self> {
        let mut data = vec![0.0; height * width];
        fill_pattern(seed, index, distribution, &mut data);
        Ok(Self {
            image: Image::new(height, width, data)?,
            seed,
            index,
        })
    }
}

/// An ordered set of `m` patterns sharing dimensions, stored as one
/// `m x (H*W)` row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeckleSet {
    seed: u64,
    distribution: Distribution,
    height: usize,
    width: usize,
    count: usize,
    data: Vec<f64>,
}

impl SpeckleSet {
    pub fn generate(seed: u64, count: usize, height: usize, width: usize, distribution: Distribution) -> Result<Self> {
        if count == 0 || height == 0 || width == 0 {
            return Err(Error::ZeroDimension {
                height,
                width,
                count,
            });
        }
        let pixels = height * width;
        let mut data = vec![0.0; count * pixels];
        data.par_chunks_mut(pixels)
            .enumerate()
            .for_each(|(i, row)| fill_pattern(seed, i, distribution, row));
        Ok(Self {
            seed,
            distribution,
            height,
            width,
            count,
            data,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn distribution(&self) -> Distribution {
        self.distribution
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
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

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    /// Row `i` of the pattern matrix.
    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.pixels();
        &self.data[i * p..(i + 1) * p]
    }

    /// The full `m x (H*W)` pattern matrix.
    pub fn matrix(&self) -> &[f64] {
        &self.data
    }

    pub fn pattern(&self, i: usize) -> Result<SpecklePattern> {
        if i >= self.count {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.count,
            });
        }
        Ok(SpecklePattern {
            image: Image::new(self.height, self.width, self.row(i).to_vec())?,
            seed: self.seed,
            index: i,
        })
    }

    pub fn patterns(&self) -> impl Iterator<Item = SpecklePattern> + '_ {
        (0..self.count).map(move |i| self.pattern(i).expect("index in range"))
    }

    /// Per-pixel mean over the first `k` patterns.
    pub fn mean_pattern(&self, k: usize) -> Vec<f64> {
        let mut acc = vec![0.0; self.pixels()];
        for i in 0..k {
            for (a, v) in acc.iter_mut().zip(self.row(i)) {
                *a += v;
            }
        }
        acc.iter_mut().for_each(|a| *a /= k as f64);
        acc
    }
}

/// `m` i.i.d. patterns keyed by `(seed, index)`.
pub fn gen_speckle_set(seed: u64, m: usize, h: usize, w: usize, distribution: Distribution) -> Result<SpeckleSet> {
    SpeckleSet::generate(seed, m, h, w, distribution)
}

/// Speckle set for batch `bgf_index`: the same set for every frame of one
/// batch, a different set for every batch.
pub fn bgf_speckle_policy(
    base_seed: u64,
    bgf_index: usize,
    m: usize,
    h: usize,
    w: usize,
    distribution: Distribution,
) -> Result<SpeckleSet> {
    SpeckleSet::generate(derive_batch_seed(base_seed, bgf_index as u64), m, h, w, distribution)
}
