use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use ghostsim::Error;

/// Result code of every fallible call. On anything other than `Ok` the
/// thread's last error message is set.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    /// Correlation or reconstruction is undefined for the input.
    Numeric = 4,
    CorruptData = 5,
    Format = 6,
    Io = 7,
    Panic = 99,
}

pub(crate) struct Failure {
    status: GsStatus,
    message: String,
}

impl Failure {
    pub(crate) fn new(status: GsStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    pub(crate) fn null(what: &str) -> Self {
        Self::new(GsStatus::NullPointer, format!("{what} is null"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DimensionMismatch { .. } | Error::LengthMismatch { .. } => GsStatus::DimensionMismatch,
            Error::ConstantImage | Error::ZeroBucket { .. } => GsStatus::Numeric,
            Error::CorruptGf { .. } => GsStatus::CorruptData,
            Error::BadMagic | Error::VersionUnsupported(_) | Error::TruncatedFile(_) | Error::Format(_) => {
                GsStatus::Format
            }
            Error::Io(_) => GsStatus::Io,
            _ => GsStatus::InvalidArgument,
        };
        Self::new(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, converting errors and panics into a status code.
pub(crate) fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GsStatus::Ok,
        Ok(Err(fail)) => {
            set_last_error(&fail.message);
            fail.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            GsStatus::Panic
        }
    }
}

/// Message for the most recent failure on the calling thread, or null if no
/// call has failed yet. The pointer stays valid until the next failure on
/// this thread.
#[no_mangle]
pub extern "C" fn gs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}
