//! Synthetic test objects: stroke-drawn digits in the style of MNIST.

use crate::error::{Error, Result};
use crate::image::Image;

type Stroke = &'static [(f64, f64)];

fn ring(cx: f64, cy: f64, rx: f64, ry: f64) -> Vec<(f64, f64)> {
    (0..=16)
        .map(|k| {
            let t = k as f64 / 16.0 * std::f64::consts::TAU;
            (cx + rx * t.cos(), cy + ry * t.sin())
        })
        .collect()
}

fn strokes(d: u8) -> Option<Vec<Vec<(f64, f64)>>> {
    const ONE: [Stroke; 2] = [&[(0.5, 0.18), (0.5, 0.82)], &[(0.37, 0.3), (0.5, 0.18)]];
    const TWO: [Stroke; 1] = [&[
        (0.28, 0.3),
        (0.4, 0.2),
        (0.6, 0.2),
        (0.72, 0.32),
        (0.68, 0.45),
        (0.28, 0.8),
        (0.74, 0.8),
    ]];
    const THREE: [Stroke; 1] = [&[
        (0.28, 0.2),
        (0.7, 0.2),
        (0.5, 0.45),
        (0.7, 0.58),
        (0.68, 0.75),
        (0.5, 0.82),
        (0.28, 0.75),
    ]];
    const FOUR: [Stroke; 1] = [&[(0.62, 0.82), (0.62, 0.18), (0.25, 0.62), (0.76, 0.62)]];
    const FIVE: [Stroke; 1] = [&[
        (0.72, 0.2),
        (0.32, 0.2),
        (0.3, 0.46),
        (0.6, 0.44),
        (0.72, 0.6),
        (0.62, 0.8),
        (0.28, 0.8),
    ]];
    const SIX: [Stroke; 1] = [&[
        (0.65, 0.2),
        (0.4, 0.35),
        (0.3, 0.6),
        (0.4, 0.8),
        (0.62, 0.8),
        (0.7, 0.62),
        (0.55, 0.5),
        (0.32, 0.58),
    ]];
    const SEVEN: [Stroke; 1] = [&[(0.25, 0.2), (0.75, 0.2), (0.42, 0.82)]];
    const NINE: [Stroke; 1] = [&[
        (0.68, 0.42),
        (0.5, 0.5),
        (0.33, 0.4),
        (0.38, 0.22),
        (0.6, 0.2),
        (0.68, 0.42),
        (0.6, 0.82),
    ]];
    let fixed = |s: &[Stroke]| s.iter().map(|p| p.to_vec()).collect::<Vec<_>>();
    Some(match d {
        0 => vec![ring(0.5, 0.5, 0.22, 0.32)],
        1 => fixed(&ONE),
        2 => fixed(&TWO),
        3 => fixed(&THREE),
        4 => fixed(&FOUR),
        5 => fixed(&FIVE),
        6 => fixed(&SIX),
        7 => fixed(&SEVEN),
        8 => vec![ring(0.5, 0.33, 0.15, 0.13), ring(0.5, 0.66, 0.19, 0.16)],
        9 => fixed(&NINE),
        _ => return None,
    })
}

fn segment_distance(px: f64, py: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (px - (a.0 + t * dx)).hypot(py - (a.1 + t * dy))
}

/// Binary `size x size` image of digit `d` drawn with a stroke half-width of
/// 6% of the frame.
pub fn digit(d: u8, size: usize) -> Result<Image> {
    digit_with_stroke(d, size, 0.06)
}

pub fn digit_with_stroke(d: u8, size: usize, half_width: f64) -> Result<Image> {
    let lines = strokes(d).ok_or_else(|| Error::Format(format!("no glyph for digit {d}")))?;
    if size < 2 {
        return Err(Error::ZeroDimension {
            height: size,
            width: size,
            count: 1,
        });
    }
    let scale = (size - 1) as f64;
    Image::from_fn(size, size, |r, c| {
        let (px, py) = (c as f64 / scale, r as f64 / scale);
        let near = lines.iter().any(|line| {
            line.windows(2)
                .any(|w| segment_distance(px, py, w[0], w[1]) < half_width)
        });
        if near {
            1.0
        } else {
            0.0
        }
    })
}

/// Isotropic Gaussian blob, peak 1.
pub fn gaussian_blob(height: usize, width: usize, center: (f64, f64), sigma: f64) -> Result<Image> {
    Image::from_fn(height, width, |r, c| {
        let d2 = (r as f64 - center.0).powi(2) + (c as f64 - center.1).powi(2);
        (-d2 / (2.0 * sigma * sigma)).exp()
    })
}
