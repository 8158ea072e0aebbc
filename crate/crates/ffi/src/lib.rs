//! C ABI over `ising_infer`.
//!
//! Every fallible function returns an [`IsingStatus`] and writes results
//! through out-pointers. On failure the message is available from
//! [`ising_last_error_message`] on the same thread. Handles are opaque and
//! must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ising_infer::coupling::{spectrum, CouplingMatrix, Family};
use ising_infer::inference::{mle_exact, mple};
use ising_infer::sampler::{cw_log_z, glauber_sample, SpinConfiguration};
use ising_infer::stats::Quantile;
use ising_infer::theory::{sigma_sq, solve_m, CriticalLaw};
use ising_infer::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsingStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Capacity = 3,
    Construction = 4,
    Numeric = 5,
    Domain = 6,
    Unsupported = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsingFamily {
    Complete = 0,
    Bipartite = 1,
    /// `param` is the class count `q`.
    QPartite = 2,
    /// `param` is the class count `q`.
    CyclicQPartite = 3,
    /// `param` is the degree `d`.
    RandomRegular = 4,
}

/// Opaque coupling matrix.
pub struct IsingCoupling(CouplingMatrix);

/// Opaque critical limit law.
pub struct IsingCriticalLaw(CriticalLaw);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> IsingStatus {
    match e {
        Error::Parameter(_)
        | Error::Dimension { .. }
        | Error::Config { .. }
        | Error::Parse { .. } => IsingStatus::InvalidArgument,
        Error::Capacity { .. } => IsingStatus::Capacity,
        Error::Construction(_) => IsingStatus::Construction,
        Error::Numeric(_) | Error::Io { .. } => IsingStatus::Numeric,
        Error::Domain(_) => IsingStatus::Domain,
        Error::Unsupported(_) => IsingStatus::Unsupported,
    }
}

struct Fail(IsingStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(IsingStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> IsingStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IsingStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            IsingStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn spins_from<'a>(spins: *const i8, n: usize) -> Result<&'a [i8], Fail> {
    if spins.is_null() {
        return Err(null("spins"));
    }
    Ok(std::slice::from_raw_parts(spins, n))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ising_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn ising_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ising_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `splitmix64(splitmix64(master) ^ index)`.
#[no_mangle]
pub extern "C" fn ising_derive_seed(master: u64, index: u64) -> u64 {
    ising_infer::seed::derive_seed(master, index)
}

/// Builds a coupling matrix. `seed` is used by the random regular family only.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ising_coupling_new(
    family: IsingFamily,
    n: usize,
    param: usize,
    seed: u64,
    out: *mut *mut IsingCoupling,
) -> IsingStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let family = match family {
            IsingFamily::Complete => Family::Complete,
            IsingFamily::Bipartite => Family::Bipartite,
            IsingFamily::QPartite => Family::QPartite { q: param },
            IsingFamily::CyclicQPartite => Family::CyclicQPartite { q: param },
            IsingFamily::RandomRegular => Family::RandomRegular { d: param },
        };
        let q = CouplingMatrix::build(family, n, Some(seed))?;
        out.write(Box::into_raw(Box::new(IsingCoupling(q))));
        Ok(())
    })
}

/// Builds a custom matrix from `n * n` row-major entries.
///
/// # Safety
/// `entries` must point to `n * n` readable doubles and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ising_coupling_from_dense(
    n: usize,
    entries: *const f64,
    out: *mut *mut IsingCoupling,
) -> IsingStatus {
    guard(|| {
        if entries.is_null() {
            return Err(null("entries"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let len = n
            .checked_mul(n)
            .ok_or_else(|| Fail(IsingStatus::InvalidArgument, "n * n overflows".into()))?;
        let v = std::slice::from_raw_parts(entries, len).to_vec();
        let q = CouplingMatrix::from_dense(n, v)?;
        out.write(Box::into_raw(Box::new(IsingCoupling(q))));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from a constructor of this library or be null.
#[no_mangle]
pub unsafe extern "C" fn ising_coupling_free(handle: *mut IsingCoupling) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ising_coupling_n(
    handle: *const IsingCoupling,
    out: *mut usize,
) -> IsingStatus {
    guard(|| {
        let q = handle.as_ref().ok_or_else(|| null("handle"))?;
        write(out, q.0.n(), "out")
    })
}

/// # Safety
/// `handle` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ising_coupling_entry(
    handle: *const IsingCoupling,
    i: usize,
    j: usize,
    out: *mut f64,
) -> IsingStatus {
    guard(|| {
        let q = handle.as_ref().ok_or_else(|| null("handle"))?;
        if i >= q.0.n() || j >= q.0.n() {
            return Err(Fail(
                IsingStatus::InvalidArgument,
                format!("index ({i}, {j}) out of range"),
            ));
        }
        write(out, q.0.entry(i, j), "out")
    })
}

/// Writes the `n` eigenvalues, sorted by decreasing absolute value, to `out`.
///
/// # Safety
/// `handle` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ising_coupling_eigenvalues(
    handle: *const IsingCoupling,
    out: *mut f64,
    len: usize,
) -> IsingStatus {
    guard(|| {
        let q = handle.as_ref().ok_or_else(|| null("handle"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = spectrum(&q.0)?;
        if len < s.finite_eigs.len() {
            return Err(Fail(
                IsingStatus::BufferTooSmall,
                format!("need {} doubles, got {len}", s.finite_eigs.len()),
            ));
        }
        ptr::copy_nonoverlapping(s.finite_eigs.as_ptr(), out, s.finite_eigs.len());
        Ok(())
    })
}

/// MPLE of `theta`. A nonexistent estimate is reported as `+-inf` with `exists = false`.
///
/// # Safety
/// `spins` must hold `n` entries; `value` and `exists` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ising_mple(
    handle: *const IsingCoupling,
    spins: *const i8,
    n: usize,
    value: *mut f64,
    exists: *mut bool,
) -> IsingStatus {
    guard(|| {
        let q = handle.as_ref().ok_or_else(|| null("handle"))?;
        let x = SpinConfiguration::new(&q.0, spins_from(spins, n)?.to_vec())?;
        let r = mple(&x);
        write(value, r.value, "value")?;
        write(exists, r.exists, "exists")
    })
}

/// Exact MLE; fails with `Capacity` when the model cannot be enumerated.
///
/// # Safety
/// As for [`ising_mple`].
#[no_mangle]
pub unsafe extern "C" fn ising_mle_exact(
    handle: *const IsingCoupling,
    spins: *const i8,
    n: usize,
    value: *mut f64,
    exists: *mut bool,
) -> IsingStatus {
    guard(|| {
        let q = handle.as_ref().ok_or_else(|| null("handle"))?;
        let x = SpinConfiguration::new(&q.0, spins_from(spins, n)?.to_vec())?;
        let r = mle_exact(&x, &q.0)?;
        write(value, r.value, "value")?;
        write(exists, r.exists, "exists")
    })
}

/// Runs Glauber dynamics from a uniform start and writes the final spins.
///
/// # Safety
/// `out_spins` must hold `n` writable entries.
#[no_mangle]
pub unsafe extern "C" fn ising_glauber_sample(
    handle: *const IsingCoupling,
    theta: f64,
    sweeps: usize,
    burn_in: usize,
    seed: u64,
    out_spins: *mut i8,
    n: usize,
) -> IsingStatus {
    guard(|| {
        let q = handle.as_ref().ok_or_else(|| null("handle"))?;
        if out_spins.is_null() {
            return Err(null("out_spins"));
        }
        if n != q.0.n() {
            return Err(Error::Dimension {
                expected: q.0.n(),
                actual: n,
            }
            .into());
        }
        let x = glauber_sample(&q.0, theta, sweeps, burn_in, seed, None)?;
        ptr::copy_nonoverlapping(x.spins().as_ptr(), out_spins, n);
        Ok(())
    })
}

/// Log-partition function of the Curie-Weiss model with `n` spins.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ising_cw_log_z(n: usize, theta: f64, out: *mut f64) -> IsingStatus {
    guard(|| write(out, cw_log_z(n, theta)?, "out"))
}

/// Positive root of `x = tanh(theta x)`; zero for `theta <= 1`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ising_solve_m(theta: f64, out: *mut f64) -> IsingStatus {
    guard(|| {
        if !theta.is_finite() {
            return Err(Fail(
                IsingStatus::InvalidArgument,
                "theta must be finite".into(),
            ));
        }
        write(out, solve_m(theta), "out")
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ising_sigma_sq(theta: f64, out: *mut f64) -> IsingStatus {
    guard(|| write(out, sigma_sq(theta)?, "out"))
}

/// # Safety
/// `out` must be writable for one handle.
#[no_mangle]
pub unsafe extern "C" fn ising_critical_law_new(
    h: f64,
    out: *mut *mut IsingCriticalLaw,
) -> IsingStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let law = CriticalLaw::new(h)?;
        out.write(Box::into_raw(Box::new(IsingCriticalLaw(law))));
        Ok(())
    })
}

/// # Safety
/// `handle` must come from [`ising_critical_law_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn ising_critical_law_free(handle: *mut IsingCriticalLaw) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `handle` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ising_critical_law_log_normalizer(
    handle: *const IsingCriticalLaw,
    out: *mut f64,
) -> IsingStatus {
    guard(|| {
        let l = handle.as_ref().ok_or_else(|| null("handle"))?;
        write(out, l.0.log_normalizer(), "out")
    })
}

/// # Safety
/// `handle` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ising_critical_law_pdf(
    handle: *const IsingCriticalLaw,
    u: f64,
    out: *mut f64,
) -> IsingStatus {
    guard(|| {
        let l = handle.as_ref().ok_or_else(|| null("handle"))?;
        write(out, l.0.pdf(u), "out")
    })
}

/// # Safety
/// `handle` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ising_critical_law_cdf(
    handle: *const IsingCriticalLaw,
    u: f64,
    out: *mut f64,
) -> IsingStatus {
    guard(|| {
        let l = handle.as_ref().ok_or_else(|| null("handle"))?;
        write(out, l.0.cdf(u), "out")
    })
}

/// # Safety
/// `handle` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ising_critical_law_quantile(
    handle: *const IsingCriticalLaw,
    p: f64,
    out: *mut f64,
) -> IsingStatus {
    guard(|| {
        let l = handle.as_ref().ok_or_else(|| null("handle"))?;
        write(out, l.0.quantile(p)?, "out")
    })
}
