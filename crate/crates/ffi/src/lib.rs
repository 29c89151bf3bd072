//! C ABI over the `fastmmd` library.
//!
//! Sample sets cross the boundary as opaque [`FastmmdSampleSet`] handles.
//! Every function returns a [`FastmmdStatus`]; on failure the message is
//! available from [`fastmmd_last_error_message`] on the same thread. Panics
//! are caught at the boundary and reported as `FASTMMD_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fastmmd::dataset::{self, LabelColumn};
use fastmmd::hypothesis::{self, Estimator};
use fastmmd::{EstimateKind, Error, KernelFamily, Label, Method, SampleSet, ShiftInvariantKernel};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FastmmdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Io = 4,
    Panic = 5,
}

/// Values of [`FastmmdOptions::method`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub enum FastmmdMethod {
    Exact = 0,
    Linear = 1,
    Btest = 2,
    Fourier = 3,
    Fastfood = 4,
    Circular = 5,
}

/// Values of [`FastmmdOptions::estimate`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub enum FastmmdEstimateKind {
    Biased = 0,
    Unbiased = 1,
}

/// Values of [`FastmmdOptions::kernel`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub enum FastmmdKernel {
    Gaussian = 0,
    Laplacian = 1,
}

/// Estimator configuration. Start from [`fastmmd_options_default`].
/// Enumerated fields hold the integer values of the matching enums.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct FastmmdOptions {
    pub method: u32,
    pub estimate: u32,
    pub kernel: u32,
    pub sigma: f64,
    pub k0: f64,
    /// Number of frequencies `L` for the fourier, fastfood and circular methods.
    pub basis: usize,
    /// B-test block size; 0 selects round(sqrt(n)).
    pub block_size: usize,
    pub seed: u64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct FastmmdTestResult {
    pub statistic: f64,
    pub threshold: f64,
    pub p_value: f64,
    /// 1 when equality of the distributions is rejected.
    pub reject: u8,
}

/// Opaque handle to an immutable labeled sample set.
pub struct FastmmdSampleSet {
    inner: SampleSet,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> FastmmdStatus {
    match e {
        Error::Numerical(_) => FastmmdStatus::Numerical,
        Error::Io { .. } | Error::Csv { .. } => FastmmdStatus::Io,
        Error::Shuffle { source, .. } => status_of(source),
        _ => FastmmdStatus::InvalidArgument,
    }
}

/// Runs `f`, recording errors and panics for `fastmmd_last_error_message`.
fn guard<F>(f: F) -> FastmmdStatus
where
    F: FnOnce() -> Result<(), (FastmmdStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            FastmmdStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(format!("panic: {message}"));
            FastmmdStatus::Panic
        }
    }
}

fn lib(e: Error) -> (FastmmdStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (FastmmdStatus, String) {
    (FastmmdStatus::NullPointer, format!("`{name}` is null"))
}

fn invalid(message: String) -> (FastmmdStatus, String) {
    (FastmmdStatus::InvalidArgument, message)
}

fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, (FastmmdStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    // SAFETY: the caller passes a NUL-terminated string that outlives the call.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| invalid(format!("`{name}` is not valid UTF-8")))
}

fn options_to_estimator(o: &FastmmdOptions) -> Result<(Estimator, u64), (FastmmdStatus, String)> {
    let method = match o.method {
        0 => Method::Exact,
        1 => Method::Linear,
        2 => Method::Btest,
        3 => Method::Fourier,
        4 => Method::Fastfood,
        5 => Method::Circular,
        m => return Err(invalid(format!("unknown method {m}"))),
    };
    let kind = match o.estimate {
        0 => EstimateKind::Biased,
        1 => EstimateKind::Unbiased,
        k => return Err(invalid(format!("unknown estimate kind {k}"))),
    };
    let family = match o.kernel {
        0 => KernelFamily::Gaussian,
        1 => KernelFamily::Laplacian,
        k => return Err(invalid(format!("unknown kernel {k}"))),
    };
    let kernel = ShiftInvariantKernel::new(family, o.sigma, o.k0).map_err(lib)?;
    let block = (o.block_size != 0).then_some(o.block_size);
    let est = Estimator::new(method, kernel, kind, o.basis).map_err(lib)?.with_block_size(block);
    Ok((est, o.seed))
}

/// Defaults: unbiased FastMMD-Fourier, Gaussian kernel with sigma 1 and
/// `K(0) = 1`, `L = 1024`, seed 0.
#[no_mangle]
pub extern "C" fn fastmmd_options_default() -> FastmmdOptions {
    FastmmdOptions {
        method: FastmmdMethod::Fourier as u32,
        estimate: FastmmdEstimateKind::Unbiased as u32,
        kernel: FastmmdKernel::Gaussian as u32,
        sigma: 1.0,
        k0: 1.0,
        basis: 1024,
        block_size: 0,
        seed: 0,
    }
}

/// Builds a sample set from `n` row-major rows of dimension `d` and `n`
/// labels, each 1 or 2. The data are copied.
///
/// # Safety
/// `data` must point to `n * d` doubles and `labels` to `n` bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastmmd_sample_set_new(
    data: *const f64,
    n: usize,
    d: usize,
    labels: *const u8,
    out: *mut *mut FastmmdSampleSet,
) -> FastmmdStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        if labels.is_null() {
            return Err(null("labels"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let len = n
            .checked_mul(d)
            .ok_or_else(|| invalid("n * d overflows".into()))?;
        // SAFETY: sizes are guaranteed by the caller per the contract above.
        let values = unsafe { std::slice::from_raw_parts(data, len) }.to_vec();
        let raw = unsafe { std::slice::from_raw_parts(labels, n) };
        let labels = raw
            .iter()
            .enumerate()
            .map(|(i, &l)| Label::from_u8(l).ok_or_else(|| invalid(format!("label {l} at row {i} is not 1 or 2"))))
            .collect::<Result<Vec<_>, _>>()?;
        let inner = SampleSet::new(values, d, labels).map_err(lib)?;
        // SAFETY: `out` is non-null and writable.
        unsafe { *out = Box::into_raw(Box::new(FastmmdSampleSet { inner })) };
        Ok(())
    })
}

/// Loads a CSV with a header row. `label_column` is a column name or a
/// 0-based index; null means `"label"`.
///
/// # Safety
/// `path` and a non-null `label_column` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastmmd_sample_set_load_csv(
    path: *const c_char,
    label_column: *const c_char,
    out: *mut *mut FastmmdSampleSet,
) -> FastmmdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = c_str(path, "path")?;
        let column = if label_column.is_null() {
            LabelColumn::default()
        } else {
            LabelColumn::parse(c_str(label_column, "label_column")?)
        };
        let inner = dataset::load_csv(path, &column).map_err(lib)?;
        // SAFETY: `out` is non-null and writable.
        unsafe { *out = Box::into_raw(Box::new(FastmmdSampleSet { inner })) };
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `set` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fastmmd_sample_set_free(set: *mut FastmmdSampleSet) {
    if !set.is_null() {
        // SAFETY: created by Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(set) });
    }
}

/// Class sizes and dimension of a sample set.
///
/// # Safety
/// `set` must be a live handle; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn fastmmd_sample_set_dims(
    set: *const FastmmdSampleSet,
    n1: *mut usize,
    n2: *mut usize,
    d: *mut usize,
) -> FastmmdStatus {
    guard(|| {
        // SAFETY: checked for null; the caller guarantees liveness.
        let set = unsafe { set.as_ref() }.ok_or_else(|| null("set"))?;
        if n1.is_null() || n2.is_null() || d.is_null() {
            return Err(null("n1/n2/d"));
        }
        let (a, b) = set.inner.class_sizes();
        // SAFETY: non-null and writable per the contract.
        unsafe {
            *n1 = a;
            *n2 = b;
            *d = set.inner.dim();
        }
        Ok(())
    })
}

/// Squared MMD of the two classes.
///
/// # Safety
/// `set` must be a live handle, `options` readable and `value_sq` writable.
#[no_mangle]
pub unsafe extern "C" fn fastmmd_estimate(
    set: *const FastmmdSampleSet,
    options: *const FastmmdOptions,
    value_sq: *mut f64,
) -> FastmmdStatus {
    guard(|| {
        // SAFETY: checked for null; the caller guarantees validity.
        let set = unsafe { set.as_ref() }.ok_or_else(|| null("set"))?;
        let options = unsafe { options.as_ref() }.ok_or_else(|| null("options"))?;
        if value_sq.is_null() {
            return Err(null("value_sq"));
        }
        let (est, seed) = options_to_estimator(options)?;
        let result = est.estimate(&set.inner, seed).map_err(lib)?;
        // SAFETY: non-null and writable per the contract.
        unsafe { *value_sq = result.value_sq };
        Ok(())
    })
}

/// Permutation two-sample test at level `alpha` with `shuffles` relabelings.
///
/// # Safety
/// `set` must be a live handle, `options` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fastmmd_two_sample_test(
    set: *const FastmmdSampleSet,
    options: *const FastmmdOptions,
    alpha: f64,
    shuffles: usize,
    out: *mut FastmmdTestResult,
) -> FastmmdStatus {
    guard(|| {
        // SAFETY: checked for null; the caller guarantees validity.
        let set = unsafe { set.as_ref() }.ok_or_else(|| null("set"))?;
        let options = unsafe { options.as_ref() }.ok_or_else(|| null("options"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let (est, seed) = options_to_estimator(options)?;
        let r = hypothesis::two_sample_test(&set.inner, &est, alpha, shuffles, seed).map_err(lib)?;
        // SAFETY: non-null and writable per the contract.
        unsafe {
            *out = FastmmdTestResult {
                statistic: r.statistic,
                threshold: r.threshold,
                p_value: r.p_value,
                reject: r.reject as u8,
            }
        };
        Ok(())
    })
}

/// In-place unnormalized Walsh-Hadamard transform; `len` must be a power of two.
///
/// # Safety
/// `data` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fastmmd_fwht(data: *mut f64, len: usize) -> FastmmdStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        // SAFETY: the caller guarantees `len` writable doubles.
        let values = unsafe { std::slice::from_raw_parts_mut(data, len) };
        fastmmd::fastfood::fwht(values).map_err(lib)
    })
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn fastmmd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}
