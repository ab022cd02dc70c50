//! C ABI over the pairindex library.
//!
//! Every fallible call returns a [`PixStatus`]; on failure the message is
//! available from [`pix_last_error`] on the same thread. Models are opaque
//! handles created by `pix_model_new_*` and released by [`pix_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use pairindex::kspace::{chern_lattice, z2_ebz, BZGrid, BlochHamiltonian};
use pairindex::lattice::{central_dual_point, Boundary, LatticeSpec};
use pairindex::model::{build_haldane, build_kane_mele, Chirality, HaldaneParams, Hamiltonian, KaneMeleParams};
use pairindex::ncindex::{build_pair_ops, index_report, FluxUnitary};
use pairindex::spectral::{diagonalize, fermi_projection, spectral_gap};
use pairindex::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Config = 3,
    GapClosed = 4,
    Precondition = 5,
    TimeReversalViolated = 6,
    Numerical = 7,
    Io = 8,
    Panic = 9,
}

impl From<&Error> for PixStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) | Error::FluxRequiresOpenBoundary => PixStatus::Domain,
            Error::Config(_) => PixStatus::Config,
            Error::GapClosed(_) | Error::FermiLevelOnSpectrum { .. } => PixStatus::GapClosed,
            Error::Precondition(_) => PixStatus::Precondition,
            Error::TimeReversalViolated(_) => PixStatus::TimeReversalViolated,
            Error::NotHermitian { .. } | Error::Eigensolver | Error::Numerical(_) => PixStatus::Numerical,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => PixStatus::Io,
        }
    }
}

/// Box boundary condition.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixBoundary {
    Open = 0,
    Periodic = 1,
}

/// Haldane flux orientation.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixChirality {
    Plus = 0,
    Minus = 1,
}

/// Opaque Hamiltonian on an L×L box.
pub struct PixModel {
    h: Hamiltonian,
}

/// Index of the pair of projections with the flux at the central dual point.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PixIndexReport {
    pub chern: i64,
    pub z2: u8,
    pub n_plus: usize,
    pub n_minus: usize,
    pub trace_a3: f64,
    pub residual: f64,
    pub count_defect: f64,
    pub delta: f64,
    pub ambiguous_window: bool,
    pub passes_quality_gate: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Error>) -> PixStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PixStatus::Ok,
        Ok(Err(e)) => {
            set_error(e.to_string());
            PixStatus::from(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            PixStatus::Panic
        }
    }
}

fn null_error(name: &str) -> PixStatus {
    set_error(format!("{name} is null"));
    PixStatus::NullPointer
}

fn boundary(b: PixBoundary) -> Boundary {
    match b {
        PixBoundary::Open => Boundary::Open,
        PixBoundary::Periodic => Boundary::Periodic,
    }
}

fn chirality(c: PixChirality) -> Chirality {
    match c {
        PixChirality::Plus => Chirality::Plus,
        PixChirality::Minus => Chirality::Minus,
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn pix_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pix_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Spinless Haldane model on an L×L box.
///
/// # Safety
/// `out` must be NULL or valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn pix_model_new_haldane(
    t: f64,
    t_prime: f64,
    lambda_v: f64,
    chir: PixChirality,
    size: usize,
    bc: PixBoundary,
    out: *mut *mut PixModel,
) -> PixStatus {
    if out.is_null() {
        return null_error("out");
    }
    guard(|| {
        let spec = LatticeSpec::spinless(size, size, boundary(bc), 2)?;
        let params = HaldaneParams { t, t_prime, lambda_v };
        let h = build_haldane(&params, &spec, chirality(chir))?;
        *out = Box::into_raw(Box::new(PixModel { h }));
        Ok(())
    })
}

/// Kane-Mele model with Rashba coupling and on-site disorder of amplitude
/// `disorder_w` drawn from `seed`.
///
/// # Safety
/// `out` must be NULL or valid for writing one pointer.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn pix_model_new_kane_mele(
    t: f64,
    t_prime: f64,
    lambda_v: f64,
    lambda_r: f64,
    disorder_w: f64,
    seed: u64,
    size: usize,
    bc: PixBoundary,
    out: *mut *mut PixModel,
) -> PixStatus {
    if out.is_null() {
        return null_error("out");
    }
    guard(|| {
        let spec = LatticeSpec::new(size, size, boundary(bc), 2)?;
        let params = KaneMeleParams { haldane: HaldaneParams { t, t_prime, lambda_v }, lambda_r, disorder_w, seed };
        let h = build_kane_mele(&params, &spec)?;
        *out = Box::into_raw(Box::new(PixModel { h }));
        Ok(())
    })
}

/// Release a model. NULL is ignored.
///
/// # Safety
/// `model` must be NULL or a handle from `pix_model_new_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pix_model_free(model: *mut PixModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Hilbert-space dimension of the model, 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pix_model_dim(model: *const PixModel) -> usize {
    model.as_ref().map_or(0, |m| m.h.dim())
}

/// Gap of the spectrum at `e_f`.
///
/// # Safety
/// `model` must be a live handle and `out` valid for writing one double.
#[no_mangle]
pub unsafe extern "C" fn pix_spectral_gap(model: *const PixModel, e_f: f64, out: *mut f64) -> PixStatus {
    let (Some(m), false) = (model.as_ref(), out.is_null()) else {
        return null_error("model or out");
    };
    guard(|| {
        *out = spectral_gap(&diagonalize(&m.h)?, e_f).gap;
        Ok(())
    })
}

/// Eigenvalues of the Hamiltonian in ascending order into `buf`, which holds
/// `len` doubles and must hold at least `pix_model_dim` of them.
///
/// # Safety
/// `model` must be a live handle and `buf` valid for writing `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pix_spectrum(model: *const PixModel, buf: *mut f64, len: usize) -> PixStatus {
    let (Some(m), false) = (model.as_ref(), buf.is_null()) else {
        return null_error("model or buf");
    };
    guard(|| {
        if len < m.h.dim() {
            return Err(Error::Domain(format!("buffer holds {len} values, need {}", m.h.dim())));
        }
        let d = diagonalize(&m.h)?;
        std::slice::from_raw_parts_mut(buf, len)[..d.dim()].copy_from_slice(d.eigenvalues());
        Ok(())
    })
}

/// Index report of an open-box model at Fermi energy `e_f` with window
/// half-width `delta`.
///
/// # Safety
/// `model` must be a live handle and `out` valid for writing one report.
#[no_mangle]
pub unsafe extern "C" fn pix_index_report(
    model: *const PixModel,
    e_f: f64,
    delta: f64,
    out: *mut PixIndexReport,
) -> PixStatus {
    let (Some(m), false) = (model.as_ref(), out.is_null()) else {
        return null_error("model or out");
    };
    guard(|| {
        let spec = m.h.spec();
        let p = fermi_projection(&diagonalize(&m.h)?, e_f)?;
        let u = FluxUnitary::new(spec, central_dual_point(spec))?;
        let r = index_report(&build_pair_ops(&p, &u)?, delta)?;
        *out = PixIndexReport {
            chern: r.chern,
            z2: r.z2,
            n_plus: r.n_plus,
            n_minus: r.n_minus,
            trace_a3: r.trace_a3,
            residual: r.residual,
            count_defect: r.count_defect,
            delta: r.delta,
            ambiguous_window: r.ambiguous_window,
            passes_quality_gate: r.passes_quality_gate(),
        };
        Ok(())
    })
}

/// Lattice Chern number of the clean Haldane model's lower band on an n×n grid.
///
/// # Safety
/// `out` must be valid for writing one integer.
#[no_mangle]
pub unsafe extern "C" fn pix_chern_lattice(
    t: f64,
    t_prime: f64,
    lambda_v: f64,
    chir: PixChirality,
    n: usize,
    out: *mut i64,
) -> PixStatus {
    if out.is_null() {
        return null_error("out");
    }
    guard(|| {
        let bh = BlochHamiltonian::haldane(HaldaneParams { t, t_prime, lambda_v }, chirality(chir));
        *out = chern_lattice(&bh, &BZGrid::new(n)?)?;
        Ok(())
    })
}

/// Z₂ index of the clean Kane-Mele model over the effective Brillouin zone
/// on an n×n grid (n even).
///
/// # Safety
/// `out` must be valid for writing one byte.
#[no_mangle]
pub unsafe extern "C" fn pix_z2_ebz(
    t: f64,
    t_prime: f64,
    lambda_v: f64,
    lambda_r: f64,
    n: usize,
    out: *mut u8,
) -> PixStatus {
    if out.is_null() {
        return null_error("out");
    }
    guard(|| {
        let mut p = KaneMeleParams::clean(HaldaneParams { t, t_prime, lambda_v });
        p.lambda_r = lambda_r;
        *out = z2_ebz(&BlochHamiltonian::kane_mele(&p)?, &BZGrid::new(n)?)?;
        Ok(())
    })
}
