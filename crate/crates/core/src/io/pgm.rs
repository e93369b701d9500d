//! Binary (P5) PGM images.
//!
//! Reading maps gray level `g` to `g / maxval`, so pixels land in `[0, 1]`.
//! Writing min-max normalizes the image and stores `round(255 * v)` as 8-bit
//! gray; a constant image is written as all zeros.

use std::io::{Cursor, Write};
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::atomic_write;

fn format_err(e: image::ImageError) -> Error {
    match e {
        image::ImageError::IoError(io) if io.kind() == std::io::ErrorKind::UnexpectedEof => {
            Error::TruncatedFile("pgm pixel data".into())
        }
        image::ImageError::IoError(io) => Error::Io(io),
        other => Error::Format(format!("pgm: {other}")),
    }
}

/// Decodes P5 data with 8- or 16-bit samples.
pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    if !bytes.starts_with(b"P5") {
        return Err(Error::Format("pgm: expected binary graymap (P5)".into()));
    }
    let img = image::load(Cursor::new(bytes), ImageFormat::Pnm).map_err(format_err)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f64> = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(|g| g as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(buf) => buf.into_raw().into_iter().map(|g| g as f64 / 65535.0).collect(),
        other => {
            return Err(Error::Format(format!("pgm: unsupported sample layout {:?}", other.color())));
        }
    };
    Image::new(h, w, data)
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Image> {
    decode_pgm(&std::fs::read(path)?)
}

/// 8-bit gray levels of the min-max normalized image.
pub fn to_gray8(img: &Image) -> Vec<u8> {
    img.normalize_minmax()
        .data()
        .iter()
        .map(|v| (v * 255.0).round() as u8)
        .collect()
}

pub fn encode_pgm(img: &Image, out: &mut dyn Write) -> Result<()> {
    let (h, w) = img.dims();
    let (h32, w32) = (
        u32::try_from(h).map_err(|_| Error::Format("pgm: image too tall".into()))?,
        u32::try_from(w).map_err(|_| Error::Format("pgm: image too wide".into()))?,
    );
    PnmEncoder::new(out)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(&to_gray8(img), w32, h32, ExtendedColorType::L8)
        .map_err(format_err)
}

pub fn write_pgm(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    atomic_write(path.as_ref(), |w| encode_pgm(img, w))
}
