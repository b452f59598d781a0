//! C ABI over `spectraljacobi`.
//!
//! Every fallible function returns an [`SjStatus`]; on failure a message is
//! available from [`sj_last_error`] on the same thread. Objects are opaque
//! handles created by `sj_*_new`/`sj_*_from_*` and released with the matching
//! `sj_*_free`. Output arrays are caller-allocated with an explicit capacity.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use spectraljacobi::jmatrix::MorseModel;
use spectraljacobi::mvop::{mv_markov, BlockRecurrence};
use spectraljacobi::opcore::{cd_kernel, markov_stieltjes, zeros, RecurrenceCoeffs};
use spectraljacobi::qkernel::{eigenvector, eigvec_norm_sq, wronskian_closed, QParams};
use spectraljacobi::trisolve::{block_quadrature, gauss_quadrature, DiscreteMeasure, MatrixMeasure};
use spectraljacobi::{Complex64, Error};

/// Result codes shared by all entry points.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SjStatus {
    Ok = 0,
    /// Parameters outside the domain of the operation.
    Domain = 1,
    /// Malformed or structurally invalid input data.
    Data = 2,
    /// The computation could not reach its accuracy target.
    Accuracy = 3,
    /// A required pointer argument was null.
    NullPointer = 4,
    /// A caller-provided buffer is too small; the required size is reported.
    BufferTooSmall = 5,
    /// Invalid UTF-8 in a string argument.
    InvalidString = 6,
    /// Internal panic caught at the boundary.
    Panic = 7,
}

/// Scalar recurrence coefficients.
pub struct SjRecurrence(RecurrenceCoeffs);

/// Discrete scalar measure (Gauss rule).
pub struct SjMeasure(DiscreteMeasure);

/// Block recurrence with `N×N` coefficients.
pub struct SjBlockRecurrence(BlockRecurrence);

/// Discrete matrix-valued measure.
pub struct SjMatrixMeasure(MatrixMeasure);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: SjStatus, msg: impl Into<String>) -> SjStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> SjStatus {
    let status = match e {
        Error::Domain(_) => SjStatus::Domain,
        Error::Data(_) => SjStatus::Data,
        Error::Accuracy { .. } => SjStatus::Accuracy,
    };
    fail(status, e.to_string())
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), SjStatus>) -> SjStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SjStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(SjStatus::Panic, format!("panic: {msg}"))
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, SjStatus>;
}

impl<T> OrStatus<T> for spectraljacobi::Result<T> {
    fn or_status(self) -> Result<T, SjStatus> {
        self.map_err(from_error)
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, SjStatus> {
    p.as_ref().ok_or_else(|| fail(SjStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, SjStatus> {
    p.as_mut().ok_or_else(|| fail(SjStatus::NullPointer, format!("{what} is null")))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> Result<&'a str, SjStatus> {
    if p.is_null() {
        return Err(fail(SjStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(SjStatus::InvalidString, format!("{what} is not valid UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], SjStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(SjStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Copies `src` into `dst[..cap]`, always reporting the full length in `len_out`.
unsafe fn write_buf(src: &[f64], dst: *mut f64, cap: usize, len_out: *mut usize) -> Result<(), SjStatus> {
    if !len_out.is_null() {
        *len_out = src.len();
    }
    if src.len() > cap {
        return Err(fail(
            SjStatus::BufferTooSmall,
            format!("buffer holds {cap} values, {} needed", src.len()),
        ));
    }
    if !src.is_empty() {
        if dst.is_null() {
            return Err(fail(SjStatus::NullPointer, "output buffer is null"));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    }
    Ok(())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

// ---- errors and version ----

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn sj_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sj_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---- scalar recurrences ----

/// Named family: `legendre`, `chebyshev_t`, `chebyshev_u`, `hermite`,
/// `laguerre:a`, `jacobi:a,b`, `qinv_hermite:q`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sj_recurrence_from_name(name: *const c_char, out_rec: *mut *mut SjRecurrence) -> SjStatus {
    guard(|| {
        let o = out(out_rec, "out_rec")?;
        let c = RecurrenceCoeffs::from_name(string(name, "name")?).or_status()?;
        *o = boxed(SjRecurrence(c));
        Ok(())
    })
}

/// Finite coefficient table `a[0..len]`, `b[0..len]` with total mass `m0`.
///
/// # Safety
/// `a` and `b` must point to `len` readable doubles; `out_rec` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sj_recurrence_explicit(
    m0: f64,
    a: *const f64,
    b: *const f64,
    len: usize,
    out_rec: *mut *mut SjRecurrence,
) -> SjStatus {
    guard(|| {
        let o = out(out_rec, "out_rec")?;
        let a = slice(a, len, "a")?.to_vec();
        let b = slice(b, len, "b")?.to_vec();
        let c = RecurrenceCoeffs::explicit("ffi", m0, a, b).or_status()?;
        *o = boxed(SjRecurrence(c));
        Ok(())
    })
}

/// # Safety
/// `rec` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sj_recurrence_free(rec: *mut SjRecurrence) {
    free(rec)
}

/// Total mass `m0` of the orthogonality measure.
///
/// # Safety
/// `rec` must be a live handle; `m0` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sj_recurrence_m0(rec: *const SjRecurrence, m0: *mut f64) -> SjStatus {
    guard(|| {
        *out(m0, "m0")? = deref(rec, "rec")?.0.m0();
        Ok(())
    })
}

/// Zeros of `p_n`, ascending, into `buf[0..cap]`; `len_out` receives `n`.
///
/// # Safety
/// `buf` must hold `cap` doubles; `len_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn sj_zeros(
    rec: *const SjRecurrence,
    n: usize,
    buf: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> SjStatus {
    guard(|| {
        let z = zeros(&deref(rec, "rec")?.0, n).or_status()?;
        write_buf(&z, buf, cap, len_out)
    })
}

/// Markov approximant of order `n` to `∫ (x − z)⁻¹ dμ(x)/m0`.
///
/// # Safety
/// `out_re` and `out_im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sj_markov(
    rec: *const SjRecurrence,
    n: usize,
    z_re: f64,
    z_im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> SjStatus {
    guard(|| {
        let (re, im) = (out(out_re, "out_re")?, out(out_im, "out_im")?);
        let v = markov_stieltjes(&deref(rec, "rec")?.0, Complex64::new(z_re, z_im), n).or_status()?;
        (*re, *im) = (v.re, v.im);
        Ok(())
    })
}

/// Christoffel–Darboux kernel `Σ_{k<n} p_k(x) p_k(y)`.
///
/// # Safety
/// `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sj_cd_kernel(rec: *const SjRecurrence, n: usize, x: f64, y: f64, value: *mut f64) -> SjStatus {
    guard(|| {
        let o = out(value, "value")?;
        *o = cd_kernel(&deref(rec, "rec")?.0, n, x, y).or_status()?;
        Ok(())
    })
}

// ---- scalar measures ----

/// `m`-point Gauss rule with total mass `m0`.
///
/// # Safety
/// `rec` must be live; `out_measure` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sj_gauss_quadrature(
    rec: *const SjRecurrence,
    m: usize,
    m0: f64,
    out_measure: *mut *mut SjMeasure,
) -> SjStatus {
    guard(|| {
        let o = out(out_measure, "out_measure")?;
        let g = gauss_quadrature(&deref(rec, "rec")?.0, m, m0).or_status()?;
        *o = boxed(SjMeasure(g));
        Ok(())
    })
}

/// Number of nodes.
///
/// # Safety
/// `measure` must be live; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sj_measure_len(measure: *const SjMeasure, len: *mut usize) -> SjStatus {
    guard(|| {
        *out(len, "len")? = deref(measure, "measure")?.0.len();
        Ok(())
    })
}

/// Copies nodes and weights into two buffers of capacity `cap`.
///
/// # Safety
/// `nodes` and `weights` must each hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn sj_measure_copy(
    measure: *const SjMeasure,
    nodes: *mut f64,
    weights: *mut f64,
    cap: usize,
) -> SjStatus {
    guard(|| {
        let m = &deref(measure, "measure")?.0;
        write_buf(&m.nodes, nodes, cap, ptr::null_mut())?;
        write_buf(&m.weights, weights, cap, ptr::null_mut())
    })
}

/// # Safety
/// `measure` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sj_measure_free(measure: *mut SjMeasure) {
    free(measure)
}

// ---- block recurrences ----

/// Parses `{"N", "M0", "blocks": [{"A", "B"}, ...]}`; complex entries are `[re, im]`.
///
/// # Safety
/// `json` must be NUL-terminated; `out_rec` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sj_block_recurrence_from_json(
    json: *const c_char,
    out_rec: *mut *mut SjBlockRecurrence,
) -> SjStatus {
    guard(|| {
        let o = out(out_rec, "out_rec")?;
        let b = BlockRecurrence::from_json(string(json, "json")?).or_status()?;
        *o = boxed(SjBlockRecurrence(b));
        Ok(())
    })
}

/// Block size `N`.
///
/// # Safety
/// `rec` must be live; `dim` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sj_block_recurrence_dim(rec: *const SjBlockRecurrence, dim: *mut usize) -> SjStatus {
    guard(|| {
        *out(dim, "dim")? = deref(rec, "rec")?.0.dim();
        Ok(())
    })
}

/// Matrix Markov approximant `S(z)`, row-major into `re[0..N²]`, `im[0..N²]`.
///
/// # Safety
/// `re` and `im` must each hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn sj_block_markov(
    rec: *const SjBlockRecurrence,
    n: usize,
    z_re: f64,
    z_im: f64,
    re: *mut f64,
    im: *mut f64,
    cap: usize,
) -> SjStatus {
    guard(|| {
        let s = mv_markov(&deref(rec, "rec")?.0, Complex64::new(z_re, z_im), n).or_status()?;
        let (r, i) = split_row_major(&s);
        write_buf(&r, re, cap, ptr::null_mut())?;
        write_buf(&i, im, cap, ptr::null_mut())
    })
}

/// # Safety
/// `rec` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sj_block_recurrence_free(rec: *mut SjBlockRecurrence) {
    free(rec)
}

fn split_row_major(m: &spectraljacobi::CMat) -> (Vec<f64>, Vec<f64>) {
    let mut re = Vec::with_capacity(m.len());
    let mut im = Vec::with_capacity(m.len());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            re.push(m[(r, c)].re);
            im.push(m[(r, c)].im);
        }
    }
    (re, im)
}

/// Matrix Gauss rule from the `m`-block truncation.
///
/// # Safety
/// `rec` must be live; `out_measure` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sj_block_quadrature(
    rec: *const SjBlockRecurrence,
    m: usize,
    out_measure: *mut *mut SjMatrixMeasure,
) -> SjStatus {
    guard(|| {
        let o = out(out_measure, "out_measure")?;
        let mm = block_quadrature(&deref(rec, "rec")?.0, m).or_status()?;
        *o = boxed(SjMatrixMeasure(mm));
        Ok(())
    })
}

/// Number of nodes.
///
/// # Safety
/// `measure` must be live; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sj_matrix_measure_len(measure: *const SjMatrixMeasure, len: *mut usize) -> SjStatus {
    guard(|| {
        *out(len, "len")? = deref(measure, "measure")?.0.nodes.len();
        Ok(())
    })
}

/// Node `j` and its mass, row-major into `re`/`im` of capacity `cap`.
///
/// # Safety
/// `node` must be writable; `re` and `im` must each hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn sj_matrix_measure_get(
    measure: *const SjMatrixMeasure,
    j: usize,
    node: *mut f64,
    re: *mut f64,
    im: *mut f64,
    cap: usize,
) -> SjStatus {
    guard(|| {
        let mm = &deref(measure, "measure")?.0;
        let x = out(node, "node")?;
        if j >= mm.nodes.len() {
            return Err(fail(
                SjStatus::Domain,
                format!("node index {j} out of range ({} nodes)", mm.nodes.len()),
            ));
        }
        *x = mm.nodes[j];
        let (r, i) = split_row_major(&mm.masses[j]);
        write_buf(&r, re, cap, ptr::null_mut())?;
        write_buf(&i, im, cap, ptr::null_mut())
    })
}

/// # Safety
/// `measure` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sj_matrix_measure_free(measure: *mut SjMatrixMeasure) {
    free(measure)
}

// ---- q⁻¹-Hermite operator ----

/// Closed-form `‖φ_{qⁿ}‖²`.
///
/// # Safety
/// `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sj_qhermite_norm_sq(q: f64, alpha: f64, n: usize, value: *mut f64) -> SjStatus {
    guard(|| {
        let o = out(value, "value")?;
        *o = eigvec_norm_sq(&QParams::new(q, alpha).or_status()?, n).or_status()?;
        Ok(())
    })
}

/// Windowed eigenvector `φ_{qⁿ}` on `[−window, window]` into `buf` (length `2·window+1`).
///
/// # Safety
/// `buf` must hold `cap` doubles; `len_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn sj_qhermite_eigenvector(
    q: f64,
    alpha: f64,
    n: usize,
    window: i64,
    buf: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> SjStatus {
    guard(|| {
        let v = eigenvector(&QParams::new(q, alpha).or_status()?, n, window).or_status()?;
        let re: Vec<f64> = v.values.iter().map(|c| c.re).collect();
        write_buf(&re, buf, cap, len_out)
    })
}

/// Casorati determinant `[φ_z, Φ_z] = −z (1/z; q)_∞`.
///
/// # Safety
/// `out_re` and `out_im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sj_qhermite_wronskian(
    q: f64,
    alpha: f64,
    z_re: f64,
    z_im: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> SjStatus {
    guard(|| {
        let (re, im) = (out(out_re, "out_re")?, out(out_im, "out_im")?);
        let w = wronskian_closed(&QParams::new(q, alpha).or_status()?, Complex64::new(z_re, z_im)).or_status()?;
        (*re, *im) = (w.re, w.im);
        Ok(())
    })
}

// ---- Morse model ----

/// Bound-state energies `−(b − m − ½)²`, ascending; `len_out` receives their count.
///
/// # Safety
/// `buf` must hold `cap` doubles; `len_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn sj_morse_bound_states(b: f64, buf: *mut f64, cap: usize, len_out: *mut usize) -> SjStatus {
    guard(|| {
        let m = MorseModel::new(b).or_status()?;
        write_buf(&m.bound_states(), buf, cap, len_out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last() -> String {
        let p = sj_last_error();
        assert!(!p.is_null());
        unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
    }

    #[test]
    fn status_and_message_on_domain_error() {
        let mut rec = ptr::null_mut();
        let name = CString::new("jacobi:-2,0").unwrap();
        let s = unsafe { sj_recurrence_from_name(name.as_ptr(), &mut rec) };
        assert_eq!(s, SjStatus::Domain);
        assert!(rec.is_null());
        assert!(last().contains("domain"));
    }

    #[test]
    fn success_clears_the_message() {
        let mut rec = ptr::null_mut();
        let bad = CString::new("nope").unwrap();
        unsafe { sj_recurrence_from_name(bad.as_ptr(), &mut rec) };
        assert!(!sj_last_error().is_null());
        let good = CString::new("legendre").unwrap();
        assert_eq!(unsafe { sj_recurrence_from_name(good.as_ptr(), &mut rec) }, SjStatus::Ok);
        assert!(sj_last_error().is_null());
        unsafe { sj_recurrence_free(rec) };
    }

    #[test]
    fn null_pointers_are_reported() {
        assert_eq!(unsafe { sj_recurrence_from_name(ptr::null(), ptr::null_mut()) }, SjStatus::NullPointer);
        let mut v = 0.0;
        assert_eq!(unsafe { sj_cd_kernel(ptr::null(), 2, 0.0, 0.0, &mut v) }, SjStatus::NullPointer);
        unsafe { sj_recurrence_free(ptr::null_mut()) };
    }

    #[test]
    fn short_buffer_reports_required_length() {
        let mut buf = [0.0; 2];
        let mut len = 0;
        let s = unsafe { sj_morse_bound_states(3.7, buf.as_mut_ptr(), buf.len(), &mut len) };
        assert_eq!(s, SjStatus::BufferTooSmall);
        assert_eq!(len, 4);
    }

    #[test]
    fn version_is_nul_terminated() {
        let v = unsafe { CStr::from_ptr(sj_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
