//! C ABI over `zigzag-core`.
//!
//! Codecs are opaque `ZgzCodec` handles. Stripes are passed as one flat
//! buffer of `n * p` bytes, column `j` starting at offset `j * p`, with a
//! separate `present` array of `n` flags. Every function returns a
//! `ZgzStatus`; on failure `zgz_last_error` describes the cause.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use zigzag::codec::{Codec, CodecDescriptor, CodecOptions};
use zigzag::error_decoder::{
    correct_node_error, correct_node_error_generic, Diagnosis, DiagnosisKind,
};
use zigzag::{Elem, Error};

/// Result codes. Negative values are errors.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZgzStatus {
    Ok = 0,
    /// A corruption was found and repaired.
    Corrected = 1,
    NullPointer = -1,
    InvalidParameters = -2,
    DimensionMismatch = -3,
    TooManyErasures = -4,
    Uncorrectable = -5,
    Format = -6,
    SearchExhausted = -7,
    Internal = -8,
    Panic = -9,
}

/// Opaque codec handle.
pub struct ZgzCodec {
    codec: Codec,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> ZgzStatus {
    match err {
        Error::DimensionMismatch { .. } => ZgzStatus::DimensionMismatch,
        Error::TooManyErasures { .. } => ZgzStatus::TooManyErasures,
        Error::Format(_) => ZgzStatus::Format,
        Error::SearchExhausted { .. } => ZgzStatus::SearchExhausted,
        Error::Singular
        | Error::SingularErasures(_)
        | Error::SingularRebuild(_)
        | Error::ErasedRead { .. } => ZgzStatus::Internal,
        _ => ZgzStatus::InvalidParameters,
    }
}

/// Runs `f`, recording errors and panics.
fn guard(f: impl FnOnce() -> Result<ZgzStatus, (ZgzStatus, String)>) -> ZgzStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside zigzag".into());
            ZgzStatus::Panic
        }
    }
}

fn lib(err: Error) -> (ZgzStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (ZgzStatus, String) {
    (ZgzStatus::NullPointer, format!("{what} is null"))
}

unsafe fn codec_ref<'a>(codec: *const ZgzCodec) -> Result<&'a Codec, (ZgzStatus, String)> {
    codec
        .as_ref()
        .map(|c| &c.codec)
        .ok_or_else(|| null("codec"))
}

/// Splits a flat stripe buffer into columns, dropping absent ones.
unsafe fn gather(
    codec: &Codec,
    columns: *const u8,
    present: *const u8,
) -> Result<Vec<Option<Vec<Elem>>>, (ZgzStatus, String)> {
    if columns.is_null() {
        return Err(null("columns"));
    }
    if present.is_null() {
        return Err(null("present"));
    }
    let (n, p) = (codec.n(), codec.p());
    let data = slice::from_raw_parts(columns, n * p);
    let flags = slice::from_raw_parts(present, n);
    Ok((0..n)
        .map(|j| (flags[j] != 0).then(|| data[j * p..(j + 1) * p].to_vec()))
        .collect())
}

unsafe fn scatter(codec: &Codec, columns: *mut u8, node: usize, col: &[Elem]) {
    let p = codec.p();
    slice::from_raw_parts_mut(columns.add(node * p), p).copy_from_slice(col);
}

/// Builds a codec. `construction` is 1 (zigzag) or 2 (any-node); `q = 0`
/// picks the default field. On success `*out` owns a handle to release
/// with `zgz_codec_free`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn zgz_codec_new(
    construction: u8,
    r: u32,
    m: usize,
    q: u32,
    out: *mut *mut ZgzCodec,
) -> ZgzStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mut opts = CodecOptions::new(construction, r, m);
        if q != 0 {
            opts.q = Some(q);
        }
        let codec = Codec::build(&opts).map_err(lib)?;
        *out = Box::into_raw(Box::new(ZgzCodec { codec }));
        Ok(ZgzStatus::Ok)
    })
}

/// Builds a codec from a descriptor in JSON, as written by
/// `zgz_codec_descriptor`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn zgz_codec_from_json(
    json: *const c_char,
    out: *mut *mut ZgzCodec,
) -> ZgzStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (ZgzStatus::Format, e.to_string()))?;
        let d: CodecDescriptor =
            serde_json::from_str(text).map_err(|e| (ZgzStatus::Format, e.to_string()))?;
        let codec = Codec::from_descriptor(&d).map_err(lib)?;
        *out = Box::into_raw(Box::new(ZgzCodec { codec }));
        Ok(ZgzStatus::Ok)
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `codec` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn zgz_codec_free(codec: *mut ZgzCodec) {
    if !codec.is_null() {
        drop(Box::from_raw(codec));
    }
}

/// Writes the codec descriptor as JSON into `*out`; free it with
/// `zgz_string_free`.
///
/// # Safety
/// `codec` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn zgz_codec_descriptor(
    codec: *const ZgzCodec,
    out: *mut *mut c_char,
) -> ZgzStatus {
    guard(|| {
        let codec = codec_ref(codec)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = serde_json::to_string(&codec.descriptor())
            .map_err(|e| (ZgzStatus::Internal, e.to_string()))?;
        *out = CString::new(text)
            .map_err(|e| (ZgzStatus::Internal, e.to_string()))?
            .into_raw();
        Ok(ZgzStatus::Ok)
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn zgz_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Dimensions: systematic nodes `k`, total nodes `n`, rows `p`, field
/// order `q`. Any output pointer may be null.
///
/// # Safety
/// `codec` must be a live handle; non-null outputs must be valid.
#[no_mangle]
pub unsafe extern "C" fn zgz_codec_shape(
    codec: *const ZgzCodec,
    k: *mut usize,
    n: *mut usize,
    p: *mut usize,
    q: *mut u32,
) -> ZgzStatus {
    guard(|| {
        let codec = codec_ref(codec)?;
        for (ptr, v) in [(k, codec.k()), (n, codec.n()), (p, codec.p())] {
            if !ptr.is_null() {
                *ptr = v;
            }
        }
        if !q.is_null() {
            *q = codec.field().order();
        }
        Ok(ZgzStatus::Ok)
    })
}

/// Fills the parity columns of `columns` from its first `k` columns.
///
/// # Safety
/// `columns` must hold `n * p` bytes.
#[no_mangle]
pub unsafe extern "C" fn zgz_encode(codec: *const ZgzCodec, columns: *mut u8) -> ZgzStatus {
    guard(|| {
        let codec = codec_ref(codec)?;
        if columns.is_null() {
            return Err(null("columns"));
        }
        let p = codec.p();
        let data = slice::from_raw_parts(columns, codec.k() * p);
        let info: Vec<Vec<Elem>> = data.chunks(p).map(<[u8]>::to_vec).collect();
        let cw = codec.array().encode(&info).map_err(lib)?;
        for (l, col) in cw.parity.iter().enumerate() {
            scatter(codec, columns, codec.k() + l, col);
        }
        Ok(ZgzStatus::Ok)
    })
}

/// Restores the absent columns with the access-efficient rebuild. Cells
/// read and surviving cells are written to `reads` and `surviving` when
/// non-null; their quotient is the rebuilding ratio.
///
/// # Safety
/// `columns` must hold `n * p` bytes and `present` `n` bytes.
#[no_mangle]
pub unsafe extern "C" fn zgz_rebuild(
    codec: *const ZgzCodec,
    columns: *mut u8,
    present: *const u8,
    reads: *mut u64,
    surviving: *mut u64,
) -> ZgzStatus {
    guard(|| {
        let codec = codec_ref(codec)?;
        let shards = gather(codec, columns, present)?;
        let out = codec.rebuild(&shards).map_err(lib)?;
        for (&node, col) in out.erased.iter().zip(&out.columns) {
            scatter(codec, columns, node, col);
        }
        if !reads.is_null() {
            *reads = out.log.total_reads();
        }
        if !surviving.is_null() {
            *surviving = out.log.surviving_elements();
        }
        Ok(ZgzStatus::Ok)
    })
}

/// Restores the absent columns by plain erasure decoding.
///
/// # Safety
/// `columns` must hold `n * p` bytes and `present` `n` bytes.
#[no_mangle]
pub unsafe extern "C" fn zgz_decode(
    codec: *const ZgzCodec,
    columns: *mut u8,
    present: *const u8,
) -> ZgzStatus {
    guard(|| {
        let codec = codec_ref(codec)?;
        let shards = gather(codec, columns, present)?;
        let cw = codec.array().decode_erasures(&shards).map_err(lib)?;
        for (node, col) in cw.columns().iter().enumerate() {
            scatter(codec, columns, node, col);
        }
        Ok(ZgzStatus::Ok)
    })
}

/// Checks a full stripe and repairs a single corrupted column in place.
/// Returns `Ok` when clean, `Corrected` after a repair (the column index
/// goes to `*column`), `Uncorrectable` otherwise.
///
/// # Safety
/// `columns` must hold `n * p` bytes; `column` may be null.
#[no_mangle]
pub unsafe extern "C" fn zgz_correct(
    codec: *const ZgzCodec,
    columns: *mut u8,
    column: *mut i64,
) -> ZgzStatus {
    guard(|| {
        let codec = codec_ref(codec)?;
        let present = vec![1u8; codec.n()];
        let shards = gather(codec, columns, present.as_ptr())?;
        let d: Diagnosis = match codec {
            Codec::Zigzag(z) => correct_node_error(z, &shards),
            Codec::AnyNode(a) => correct_node_error_generic(a, &shards),
        }
        .map_err(lib)?;
        let col = match &d.kind {
            DiagnosisKind::Clean => return Ok(ZgzStatus::Ok),
            DiagnosisKind::NodeError { col, .. } => *col,
            DiagnosisKind::ParityError { parity, .. } => codec.k() + parity,
            DiagnosisKind::ElementError { col, .. } => *col,
            other => {
                return Err((ZgzStatus::Uncorrectable, format!("{other:?}")));
            }
        };
        let fixed = d
            .corrected
            .ok_or_else(|| (ZgzStatus::Internal, "no corrected array".to_string()))?;
        scatter(codec, columns, col, fixed.column(col));
        if !column.is_null() {
            *column = col as i64;
        }
        Ok(ZgzStatus::Corrected)
    })
}

/// Message for the last error on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn zgz_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
