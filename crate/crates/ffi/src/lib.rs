//! C ABI for petricov.
//!
//! Instances are opaque handles created by [`petricov_instance_parse`] and
//! released with [`petricov_instance_free`]. Every fallible call returns a
//! [`PetricovStatus`]; on failure [`petricov_last_error`] describes what went
//! wrong on the calling thread. Strings handed out by the library must be
//! released with [`petricov_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::time::Duration;

use petricov::cli::report::{decide, Algorithm};
use petricov::cli::smt_for_instance;
use petricov::covercheck::{Config, Verdict};
use petricov::instance::{Format, Instance};
use petricov::net::DiscreteMarking;
use petricov::qreach;
use petricov::ratlp::PivotRule;

/// An instance: net, initial marking and targets.
pub struct PetricovInstance {
    inner: Instance,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PetricovStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    DimensionMismatch = 4,
    InvalidArgument = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PetricovVerdict {
    Safe = 0,
    Unsafe = 2,
    Unknown = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PetricovFormat {
    Mist = 0,
    Json = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PetricovAlgorithm {
    Backward = 0,
    Qcover = 1,
    Trapcegar = 2,
    QreachOnly = 3,
}

/// Search settings. Obtain defaults from [`petricov_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct PetricovOptions {
    pub use_minbottle: bool,
    pub c: usize,
    pub k: usize,
    /// Seconds; zero or negative means no limit.
    pub timeout_secs: f64,
    /// Zero means no limit.
    pub max_iterations: usize,
    pub sparse_pivots: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn guarded(f: impl FnOnce() -> PetricovStatus) -> PetricovStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "internal panic".to_string());
            set_error(msg);
            PetricovStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, PetricovStatus> {
    if s.is_null() {
        set_error("null string argument");
        return Err(PetricovStatus::NullArgument);
    }
    CStr::from_ptr(s).to_str().map_err(|e| {
        set_error(format!("invalid utf-8: {e}"));
        PetricovStatus::InvalidUtf8
    })
}

fn hand_out(s: String, out: *mut *mut c_char) -> PetricovStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            PetricovStatus::Ok
        }
        Err(_) => {
            set_error("output contains a NUL byte");
            PetricovStatus::InvalidArgument
        }
    }
}

impl From<PetricovAlgorithm> for Algorithm {
    fn from(a: PetricovAlgorithm) -> Algorithm {
        match a {
            PetricovAlgorithm::Backward => Algorithm::Backward,
            PetricovAlgorithm::Qcover => Algorithm::Qcover,
            PetricovAlgorithm::Trapcegar => Algorithm::Trapcegar,
            PetricovAlgorithm::QreachOnly => Algorithm::QreachOnly,
        }
    }
}

impl From<PetricovOptions> for Config {
    fn from(o: PetricovOptions) -> Config {
        Config {
            use_minbottle: o.use_minbottle,
            c: o.c,
            k: o.k.max(1),
            max_iterations: (o.max_iterations > 0).then_some(o.max_iterations),
            timeout: (o.timeout_secs.is_finite() && o.timeout_secs > 0.0)
                .then(|| Duration::from_secs_f64(o.timeout_secs)),
            pivot: if o.sparse_pivots {
                PivotRule::Sparse
            } else {
                PivotRule::Bland
            },
            ..Config::default()
        }
    }
}

fn verdict(v: Verdict) -> PetricovVerdict {
    match v {
        Verdict::Safe => PetricovVerdict::Safe,
        Verdict::Unsafe => PetricovVerdict::Unsafe,
        Verdict::Unknown(_) => PetricovVerdict::Unknown,
    }
}

#[no_mangle]
pub extern "C" fn petricov_options_default() -> PetricovOptions {
    let c = Config::default();
    PetricovOptions {
        use_minbottle: c.use_minbottle,
        c: c.c,
        k: c.k,
        timeout_secs: 0.0,
        max_iterations: 0,
        sparse_pivots: false,
    }
}

/// Parses `text` into a new instance stored in `*out`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn petricov_instance_parse(
    text: *const c_char,
    format: PetricovFormat,
    out: *mut *mut PetricovInstance,
) -> PetricovStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return PetricovStatus::NullArgument;
        }
        *out = ptr::null_mut();
        let text = match read_str(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let format = match format {
            PetricovFormat::Mist => Format::Mist,
            PetricovFormat::Json => Format::Json,
        };
        match Instance::parse(text, format) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(PetricovInstance { inner }));
                PetricovStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                PetricovStatus::ParseError
            }
        }
    })
}

/// # Safety
/// `inst` must come from [`petricov_instance_parse`] and not be freed yet,
/// or be null.
#[no_mangle]
pub unsafe extern "C" fn petricov_instance_free(inst: *mut PetricovInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// # Safety
/// `inst` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn petricov_instance_num_places(inst: *const PetricovInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.inner.net.num_places())
}

/// # Safety
/// `inst` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn petricov_instance_num_transitions(inst: *const PetricovInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.inner.net.num_transitions())
}

/// Decides the instance. With a non-null `report`, also hands out the JSON
/// report (release it with [`petricov_string_free`]).
///
/// # Safety
/// `inst` must be a live handle, `options` null or valid, `verdict_out`
/// valid, and `report` null or valid.
#[no_mangle]
pub unsafe extern "C" fn petricov_check(
    inst: *const PetricovInstance,
    algorithm: PetricovAlgorithm,
    options: *const PetricovOptions,
    verdict_out: *mut PetricovVerdict,
    report: *mut *mut c_char,
) -> PetricovStatus {
    guarded(|| {
        let Some(inst) = inst.as_ref() else {
            set_error("null instance");
            return PetricovStatus::NullArgument;
        };
        if verdict_out.is_null() {
            set_error("null verdict pointer");
            return PetricovStatus::NullArgument;
        }
        let opts = options.as_ref().copied().unwrap_or_else(|| petricov_options_default());
        let r = decide(&inst.inner, algorithm.into(), &opts.into());
        *verdict_out = verdict(r.verdict);
        if report.is_null() {
            PetricovStatus::Ok
        } else {
            hand_out(r.to_json(), report)
        }
    })
}

/// Whether some marking covering `target` (length = number of places) is
/// reachable from the initial marking under the continuous semantics.
///
/// # Safety
/// `inst` must be a live handle, `target` must point to `len` values and
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn petricov_q_coverable(
    inst: *const PetricovInstance,
    target: *const u64,
    len: usize,
    out: *mut bool,
) -> PetricovStatus {
    guarded(|| {
        let Some(inst) = inst.as_ref() else {
            set_error("null instance");
            return PetricovStatus::NullArgument;
        };
        if out.is_null() || (target.is_null() && len > 0) {
            set_error("null pointer argument");
            return PetricovStatus::NullArgument;
        }
        let net = &inst.inner.net;
        if len != net.num_places() {
            set_error(format!("target has {len} entries, the net has {} places", net.num_places()));
            return PetricovStatus::DimensionMismatch;
        }
        let values = if len == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(target, len).to_vec()
        };
        let m = DiscreteMarking(values).to_rational();
        match qreach::q_coverable(net, &inst.inner.initial.to_rational(), &m) {
            Ok(v) => {
                *out = v.reachable;
                PetricovStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                PetricovStatus::DimensionMismatch
            }
        }
    })
}

/// The SMT-LIB cover query for the instance's targets.
///
/// # Safety
/// `inst` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn petricov_emit_smt(
    inst: *const PetricovInstance,
    out: *mut *mut c_char,
) -> PetricovStatus {
    guarded(|| {
        let Some(inst) = inst.as_ref() else {
            set_error("null instance");
            return PetricovStatus::NullArgument;
        };
        if out.is_null() {
            set_error("null output pointer");
            return PetricovStatus::NullArgument;
        }
        *out = ptr::null_mut();
        hand_out(smt_for_instance(&inst.inner), out)
    })
}

/// # Safety
/// `s` must be a string handed out by this library, or null.
#[no_mangle]
pub unsafe extern "C" fn petricov_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// The message of the last failed call on this thread, or null. Valid until
/// the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn petricov_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn petricov_version() -> *const c_char {
    static V: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(c) => c,
        Err(_) => panic!("version string"),
    };
    V.as_ptr()
}
