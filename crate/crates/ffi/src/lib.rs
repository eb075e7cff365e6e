//! C interface to depthlab.
//!
//! Bit strings cross the boundary as NUL-terminated ASCII strings of `0` and
//! `1`. Strings handed back to the caller must be released with
//! `dl_string_free`; handles with their matching `_free` function. Every
//! function returns a `DlStatus`; on failure `dl_last_error` describes it.
//! State numbers are 1-based, as in the text formats.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};

use depthlab::bits::{parse_bits, BitString, BitsError};
use depthlab::codec::{decode_fst, encode_fst, DecodeError};
use depthlab::fst::{fst_compose, FstError, FstSpec, IlVerdict};
use depthlab::kfs::{kfs_complexity, Complexity, KfsError};
use depthlab::lz78::{lz_decode, lz_encode, LzDecodeError, Lz78State};
use depthlab::pushdown::{build_half_compressor, compose_pdc_fst, pdc_il_check, PdcError, PdcSpec};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DlStatus {
    Ok = 0,
    NullArgument = 1,
    /// Not UTF-8, or not a bit string where one was expected.
    InvalidText = 2,
    /// A machine description failed to parse or validate.
    InvalidSpec = 3,
    /// A pushdown compressor had no move for the input.
    Stuck = 4,
    /// A binary description or LZ78 code could not be decoded.
    DecodeFailed = 5,
    InvalidParameters = 6,
    /// The result would exceed a size ceiling.
    Refused = 7,
    Panic = 8,
}

/// Opaque finite-state transducer.
pub struct DlFst(FstSpec);

/// Opaque validated pushdown compressor.
pub struct DlPdc(PdcSpec);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure {
    status: DlStatus,
    message: String,
}

impl Failure {
    fn new(status: DlStatus, message: impl ToString) -> Self {
        Failure { status, message: message.to_string() }
    }
}

impl From<FstError> for Failure {
    fn from(e: FstError) -> Self {
        Failure::new(DlStatus::InvalidSpec, e)
    }
}

impl From<PdcError> for Failure {
    fn from(e: PdcError) -> Self {
        let status = match e {
            PdcError::Stuck { .. } => DlStatus::Stuck,
            PdcError::InvalidParameters(_) => DlStatus::InvalidParameters,
            PdcError::Refused { .. } => DlStatus::Refused,
            _ => DlStatus::InvalidSpec,
        };
        Failure::new(status, e)
    }
}

impl From<DecodeError> for Failure {
    fn from(e: DecodeError) -> Self {
        Failure::new(DlStatus::DecodeFailed, e)
    }
}

impl From<LzDecodeError> for Failure {
    fn from(e: LzDecodeError) -> Self {
        Failure::new(DlStatus::DecodeFailed, e)
    }
}

impl From<BitsError> for Failure {
    fn from(e: BitsError) -> Self {
        Failure::new(DlStatus::InvalidText, e)
    }
}

impl From<KfsError> for Failure {
    fn from(e: KfsError) -> Self {
        Failure::new(DlStatus::InvalidParameters, e)
    }
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DlStatus {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DlStatus::Ok,
        Ok(Err(fail)) => {
            set_error(&fail.message);
            fail.status
        }
        Err(_) => {
            set_error("internal panic");
            DlStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(DlStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::new(DlStatus::InvalidText, "argument is not UTF-8"))
}

unsafe fn bits_arg(p: *const c_char) -> Result<BitString, Failure> {
    Ok(parse_bits(text(p)?)?)
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::new(DlStatus::NullArgument, "null handle"))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(DlStatus::NullArgument, "null output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure::new(DlStatus::Panic, "interior NUL in output"))?;
    put(out, c.into_raw())
}

/// Message for the last failure on this thread, or an empty string. Valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` is null or was returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse a transducer from its text format.
///
/// # Safety
/// `spec` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dl_fst_parse(spec: *const c_char, out: *mut *mut DlFst) -> DlStatus {
    guard(|| {
        let t = FstSpec::from_text(text(spec)?)?;
        put(out, Box::into_raw(Box::new(DlFst(t))))
    })
}

/// # Safety
/// `fst` is null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn dl_fst_free(fst: *mut DlFst) {
    if !fst.is_null() {
        drop(Box::from_raw(fst));
    }
}

/// Run a transducer; `out_state` receives the final state.
///
/// # Safety
/// Pointers are valid handles, NUL-terminated strings and writable outputs.
#[no_mangle]
pub unsafe extern "C" fn dl_fst_run(
    fst: *const DlFst,
    input: *const c_char,
    out_bits: *mut *mut c_char,
    out_state: *mut usize,
) -> DlStatus {
    guard(|| {
        let r = handle(fst)?.0.run(&bits_arg(input)?);
        put(out_state, r.final_state + 1)?;
        put_string(out_bits, r.output.to_string())
    })
}

/// Binary description of a transducer.
///
/// # Safety
/// `fst` is a live handle; `out_bits` is writable.
#[no_mangle]
pub unsafe extern "C" fn dl_fst_encode(fst: *const DlFst, out_bits: *mut *mut c_char) -> DlStatus {
    guard(|| put_string(out_bits, encode_fst(&handle(fst)?.0).bits.to_string()))
}

/// Transducer from a binary description.
///
/// # Safety
/// `description` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dl_fst_decode(description: *const c_char, out: *mut *mut DlFst) -> DlStatus {
    guard(|| {
        let t = decode_fst(&bits_arg(description)?)?;
        put(out, Box::into_raw(Box::new(DlFst(t))))
    })
}

/// # Safety
/// `fst` is a live handle; `out_text` is writable.
#[no_mangle]
pub unsafe extern "C" fn dl_fst_to_text(fst: *const DlFst, out_text: *mut *mut c_char) -> DlStatus {
    guard(|| put_string(out_text, handle(fst)?.0.to_text()))
}

/// Transducer computing `outer(inner(x))`.
///
/// # Safety
/// Handles are live; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dl_fst_compose(outer: *const DlFst, inner: *const DlFst, out: *mut *mut DlFst) -> DlStatus {
    guard(|| {
        let n = fst_compose(&handle(outer)?.0, &handle(inner)?.0);
        put(out, Box::into_raw(Box::new(DlFst(n))))
    })
}

/// Shortest input length over all transducers with descriptions of at most
/// `k` bits that print `target`; -1 when none does.
///
/// # Safety
/// `target` is a NUL-terminated string; `out_value` is writable.
#[no_mangle]
pub unsafe extern "C" fn dl_kfs(target: *const c_char, k: usize, out_value: *mut i64) -> DlStatus {
    guard(|| {
        let v = match kfs_complexity(&bits_arg(target)?, k)?.value {
            Complexity::Finite(v) => v as i64,
            Complexity::Infinite => -1,
        };
        put(out_value, v)
    })
}

/// Parse and validate a pushdown compressor.
///
/// # Safety
/// `spec` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dl_pdc_parse(spec: *const c_char, out: *mut *mut DlPdc) -> DlStatus {
    guard(|| {
        let c = PdcSpec::from_text(text(spec)?)?;
        put(out, Box::into_raw(Box::new(DlPdc(c))))
    })
}

/// # Safety
/// `pdc` is null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn dl_pdc_free(pdc: *mut DlPdc) {
    if !pdc.is_null() {
        drop(Box::from_raw(pdc));
    }
}

/// The flag-and-palindrome compressor with flag length `k`, zone width `v`
/// and error-flag parameter `m`.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dl_pdc_half_compressor(k: usize, v: usize, m: usize, out: *mut *mut DlPdc) -> DlStatus {
    guard(|| {
        let c = build_half_compressor(k, v, m)?;
        put(out, Box::into_raw(Box::new(DlPdc(c))))
    })
}

/// Run a pushdown compressor. Returns `DL_STATUS_STUCK` when it has no move.
///
/// # Safety
/// Pointers are valid handles, NUL-terminated strings and writable outputs.
#[no_mangle]
pub unsafe extern "C" fn dl_pdc_run(
    pdc: *const DlPdc,
    input: *const c_char,
    out_bits: *mut *mut c_char,
    out_state: *mut usize,
) -> DlStatus {
    guard(|| {
        let r = handle(pdc)?.0.run(&bits_arg(input)?)?;
        put(out_state, r.final_state + 1)?;
        put_string(out_bits, r.output.to_string())
    })
}

/// # Safety
/// `pdc` is a live handle; `out_text` is writable.
#[no_mangle]
pub unsafe extern "C" fn dl_pdc_to_text(pdc: *const DlPdc, out_text: *mut *mut c_char) -> DlStatus {
    guard(|| put_string(out_text, handle(pdc)?.0.to_text()))
}

/// Pushdown compressor computing `pdc(fst(x))`.
///
/// # Safety
/// Handles are live; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn dl_pdc_compose_fst(pdc: *const DlPdc, fst: *const DlFst, out: *mut *mut DlPdc) -> DlStatus {
    guard(|| {
        let n = compose_pdc_fst(&handle(pdc)?.0, &handle(fst)?.0)?;
        put(out, Box::into_raw(Box::new(DlPdc(n))))
    })
}

/// Whether (output, final state) determines the input for every input of
/// at most `max_len` bits.
///
/// # Safety
/// `pdc` is a live handle; `out_lossless` is writable.
#[no_mangle]
pub unsafe extern "C" fn dl_pdc_il_check(pdc: *const DlPdc, max_len: usize, out_lossless: *mut bool) -> DlStatus {
    guard(|| {
        let v = pdc_il_check(&handle(pdc)?.0, max_len);
        if let IlVerdict::Collision(a, b) = &v {
            set_error(&format!("inputs {a} and {b} collide"));
        }
        put(out_lossless, v == IlVerdict::Pass)
    })
}

/// # Safety
/// `input` is a NUL-terminated string; `out_bits` is writable.
#[no_mangle]
pub unsafe extern "C" fn dl_lz_encode(input: *const c_char, out_bits: *mut *mut c_char) -> DlStatus {
    guard(|| put_string(out_bits, lz_encode(&bits_arg(input)?).to_string()))
}

/// # Safety
/// `code` is a NUL-terminated string; `out_bits` is writable.
#[no_mangle]
pub unsafe extern "C" fn dl_lz_decode(code: *const c_char, out_bits: *mut *mut c_char) -> DlStatus {
    guard(|| put_string(out_bits, lz_decode(&bits_arg(code)?)?.to_string()))
}

/// LZ78 code length in bits without materializing the code.
///
/// # Safety
/// `input` is a NUL-terminated string; `out_len` is writable.
#[no_mangle]
pub unsafe extern "C" fn dl_lz_length(input: *const c_char, out_len: *mut u64) -> DlStatus {
    guard(|| {
        let mut st = Lz78State::counting_only();
        st.extend(&bits_arg(input)?);
        put(out_len, st.online_len())
    })
}
