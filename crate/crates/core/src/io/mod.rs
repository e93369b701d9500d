//! File formats: GFB1 dataset containers, binary PGM images and CSV tables.

pub mod container;
pub mod csv;
pub mod pgm;

use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;

/// Writes through a temporary file in the destination directory and renames
/// it into place, so readers never observe a partial file.
pub(crate) fn atomic_write(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(std::fs::Permissions::from_mode(0o644));
    }
    let tmp = builder.tempfile_in(dir)?;
    {
        let mut out = BufWriter::new(tmp.as_file());
        body(&mut out)?;
        out.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
