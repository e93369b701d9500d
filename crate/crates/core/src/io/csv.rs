//! CSV tables for reports and diagnostics.

use std::path::Path;

use crate::error::{Error, Result};
use crate::fma::FrameAngleEstimate;
use crate::io::atomic_write;
use crate::metrics::QualityReport;

fn csv_err(e: ::csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            ::csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        Error::Format(format!("csv: {e}"))
    }
}

/// Writes `header` then `rows` atomically.
pub fn write_table<R, I>(path: impl AsRef<Path>, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    atomic_write(path.as_ref(), |w| {
        let mut out = ::csv::Writer::from_writer(w);
        out.write_record(header).map_err(csv_err)?;
        for row in rows {
            out.write_record(row).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    })
}

/// Reads a table with a header row.
pub fn read_table(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut rdr = ::csv::Reader::from_path(path).map_err(csv_err)?;
    let header = rdr.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|r| r.map(|rec| rec.iter().map(String::from).collect()).map_err(csv_err))
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

pub fn write_reports(path: impl AsRef<Path>, reports: &[QualityReport]) -> Result<()> {
    write_table(
        path,
        &["pair_id", "psnr_db", "ssim"],
        reports
            .iter()
            .map(|r| vec![r.pair_id.clone(), r.psnr.to_string(), format!("{:.9}", r.ssim)]),
    )
}

/// Progressive reconstruction quality: one row per sample count.
pub fn write_curve(path: impl AsRef<Path>, rows: &[(usize, QualityReport)]) -> Result<()> {
    write_table(
        path,
        &["m", "psnr_db", "ssim"],
        rows.iter()
            .map(|(m, r)| vec![m.to_string(), r.psnr.to_string(), format!("{:.9}", r.ssim)]),
    )
}

/// Every pair's correlation sweep; candidates are in degrees over the pair
/// span.
pub fn write_angle_curves(path: impl AsRef<Path>, estimates: &[FrameAngleEstimate]) -> Result<()> {
    let rows = estimates.iter().flat_map(|est| {
        est.pairs.iter().enumerate().flat_map(move |(p, pair)| {
            pair.estimate.curve.iter().map(move |(c, s)| {
                vec![
                    est.batch_index.to_string(),
                    p.to_string(),
                    pair.frame_a.to_string(),
                    pair.frame_b.to_string(),
                    format!("{c:.6}"),
                    format!("{s:.9}"),
                ]
            })
        })
    });
    write_table(
        path,
        &["batch", "pair", "frame_a", "frame_b", "candidate_deg", "score"],
        rows,
    )
}
