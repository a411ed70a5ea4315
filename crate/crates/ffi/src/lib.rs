//! C ABI for the fpga3d flow.
//!
//! The entry point runs the full flow and hands back an opaque metrics
//! handle; scalar getters read from it and `fpga3d_metrics_free` releases
//! it. All functions return error codes (see `Fpga3dStatus`); the last
//! failure message for the calling thread is available through
//! `fpga3d_last_error`.

use fpga3d::flow::{run_flow, FlowConfig, FlowError};
use fpga3d::metrics::FlowMetrics;
use libc::c_char;
use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::path::PathBuf;

/// Status codes returned by every fallible function.
#[repr(i32)]
pub enum Fpga3dStatus {
    Ok = 0,
    /// A flow stage failed (parse, partition, place, route, timing).
    StageFailure = 1,
    /// Invalid configuration or arguments.
    ConfigError = 2,
    /// Null pointer or non-UTF-8 string argument.
    BadArgument = 3,
}

/// Opaque metrics handle.
pub struct Fpga3dMetrics {
    inner: FlowMetrics,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Message for the most recent failure on this thread, or null. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fpga3d_last_error() -> *const c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |c| c.as_ptr())
    })
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Fpga3dStatus> {
    if p.is_null() {
        set_error("null path argument".into());
        return Err(Fpga3dStatus::BadArgument);
    }
    match CStr::from_ptr(p).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_error("non-UTF-8 path argument".into());
            Err(Fpga3dStatus::BadArgument)
        }
    }
}

/// Run the full flow.
///
/// `tiers` = 0 keeps the architecture file's tier count; `width` = 0 runs
/// the minimum-channel-width search. On success `*out` owns a metrics
/// handle that must be released with `fpga3d_metrics_free`.
///
/// # Safety
/// `arch_path`, `blif_path` and `out_dir` must be valid NUL-terminated
/// strings; `out` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn fpga3d_run(
    arch_path: *const c_char,
    blif_path: *const c_char,
    out_dir: *const c_char,
    seed: u64,
    tiers: u32,
    width: u32,
    out: *mut *mut Fpga3dMetrics,
) -> i32 {
    if out.is_null() {
        set_error("null output handle".into());
        return Fpga3dStatus::BadArgument as i32;
    }
    let (arch, blif, dir) = match (path_arg(arch_path), path_arg(blif_path), path_arg(out_dir)) {
        (Ok(a), Ok(b), Ok(d)) => (a, b, d),
        _ => return Fpga3dStatus::BadArgument as i32,
    };
    let mut cfg = FlowConfig::new(arch, blif, dir);
    cfg.seed = seed;
    if tiers > 0 {
        cfg.tiers = Some(tiers as usize);
    }
    if width > 0 {
        cfg.width = Some(width as usize);
    }
    match run_flow(&cfg) {
        Ok(m) => {
            *out = Box::into_raw(Box::new(Fpga3dMetrics { inner: m }));
            Fpga3dStatus::Ok as i32
        }
        Err(e @ FlowError::Config(_)) => {
            set_error(e.to_string());
            Fpga3dStatus::ConfigError as i32
        }
        Err(e) => {
            set_error(e.to_string());
            Fpga3dStatus::StageFailure as i32
        }
    }
}

macro_rules! getter {
    ($(#[$doc:meta])* $name:ident, $ty:ty, $field:ident, $conv:expr) => {
        $(#[$doc])*
        /// Returns 0 when `m` is null.
        ///
        /// # Safety
        /// `m` must be a live handle from `fpga3d_run` or null.
        #[no_mangle]
        pub unsafe extern "C" fn $name(m: *const Fpga3dMetrics) -> $ty {
            if m.is_null() {
                return 0 as $ty;
            }
            let v = &(*m).inner;
            ($conv)(&v.$field)
        }
    };
}

getter!(
    /// Critical path delay in seconds.
    fpga3d_metrics_cpd, f64, cpd, |x: &f64| *x
);
getter!(
    /// Channel width the routing succeeded at.
    fpga3d_metrics_wmin, u32, wmin, |x: &usize| *x as u32
);
getter!(
    /// Transistor-count area over all tiers.
    fpga3d_metrics_transistors, u64, transistor_total, |x: &u64| *x
);
getter!(
    /// Total planar wirelength in unit segment lengths.
    fpga3d_metrics_wirelength, u64, total_wirelength, |x: &usize| *x as u64
);
getter!(
    /// TSV tracks occupied by routes.
    fpga3d_metrics_tsv_used, u64, tsv_used, |x: &usize| *x as u64
);
getter!(
    /// Partition cut size (inter-tier connection demand).
    fpga3d_metrics_cut, u64, tsv_cut, |x: &u64| *x
);
getter!(
    /// Tier count the flow ran with.
    fpga3d_metrics_tiers, u32, tiers, |x: &usize| *x as u32
);
getter!(
    /// Logic block count after packing.
    fpga3d_metrics_blocks, u64, blocks, |x: &usize| *x as u64
);

/// Release a metrics handle. Null is a no-op.
///
/// # Safety
/// `m` must be a handle from `fpga3d_run` not yet freed, or null.
#[no_mangle]
pub unsafe extern "C" fn fpga3d_metrics_free(m: *mut Fpga3dMetrics) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}
