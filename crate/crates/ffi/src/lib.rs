//! C ABI for the `ltgl` solver.
//!
//! Every entry point returns an [`LtglStatus`]; on failure a description is
//! available from [`ltgl_last_error_message`] until the next call on the same
//! thread. Matrices cross the boundary as contiguous row-major `double`
//! arrays, `T` matrices of `d × d` back to back. Handles returned through out
//! pointers are owned by the caller and released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ltgl::datagen::{self, GeneratorConfig, Perturbation};
use ltgl::evaluation;
use ltgl::{
    empirical_covariances, solver, CovarianceSequence, Error, GroundTruth, Hyperparameters,
    NetworkEstimate, PenaltyKind, StoppingRule, SymmetricMatrix, TimeSeriesDataset,
};
use nalgebra::DMatrix;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LtglStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    ShapeMismatch = 3,
    InvalidData = 4,
    NotPositiveDefinite = 5,
    NumericalFailure = 6,
    NoFeasibleCandidate = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LtglPenalty {
    L1 = 0,
    GroupL2 = 1,
    Laplacian = 2,
    LInf = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LtglStopping {
    Squared = 0,
    Unsquared = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LtglPerturbation {
    P2 = 0,
    P1 = 1,
}

/// Mirrors the library hyperparameters. `tau = INFINITY` disables the
/// latent component.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LtglHyperparameters {
    pub alpha: f64,
    pub tau: f64,
    pub beta: f64,
    pub eta: f64,
    pub rho: f64,
    pub psi: LtglPenalty,
    pub phi: LtglPenalty,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iter: usize,
    pub stopping: LtglStopping,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LtglGeneratorConfig {
    pub d: usize,
    pub latent: usize,
    pub time_points: usize,
    pub n: usize,
    pub kind: LtglPerturbation,
    pub epsilon: f64,
    pub sparsity: f64,
    pub seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LtglScores {
    pub f1: f64,
    pub accuracy: f64,
    pub mre: f64,
    pub mse: f64,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

/// Opaque fitted model.
pub struct LtglEstimate(NetworkEstimate);
/// Opaque generated ground truth.
pub struct LtglTruth(GroundTruth);
/// Opaque sample blocks.
pub struct LtglDataset(TimeSeriesDataset);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(LtglStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Shape(_) => LtglStatus::ShapeMismatch,
            Error::InvalidParameter { .. } => LtglStatus::InvalidParameter,
            Error::InvalidData(_) | Error::Io { .. } | Error::Format { .. } => {
                LtglStatus::InvalidData
            }
            Error::NotPositiveDefinite(_) => LtglStatus::NotPositiveDefinite,
            Error::EigenFailure { .. } | Error::NonFinite { .. } => LtglStatus::NumericalFailure,
            Error::NoFeasibleCandidate(_) => LtglStatus::NoFeasibleCandidate,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(LtglStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LtglStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LtglStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            LtglStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn penalty_from(p: LtglPenalty) -> PenaltyKind {
    match p {
        LtglPenalty::L1 => PenaltyKind::ElementwiseL1,
        LtglPenalty::GroupL2 => PenaltyKind::GroupL2,
        LtglPenalty::Laplacian => PenaltyKind::LaplacianSq,
        LtglPenalty::LInf => PenaltyKind::LInfRow,
    }
}

fn penalty_to(p: PenaltyKind) -> LtglPenalty {
    match p {
        PenaltyKind::ElementwiseL1 => LtglPenalty::L1,
        PenaltyKind::GroupL2 => LtglPenalty::GroupL2,
        PenaltyKind::LaplacianSq => LtglPenalty::Laplacian,
        PenaltyKind::LInfRow => LtglPenalty::LInf,
    }
}

impl From<&LtglHyperparameters> for Hyperparameters {
    fn from(h: &LtglHyperparameters) -> Self {
        Hyperparameters {
            alpha: h.alpha,
            tau: h.tau,
            beta: h.beta,
            eta: h.eta,
            rho: h.rho,
            psi: penalty_from(h.psi),
            phi: penalty_from(h.phi),
            eps_abs: h.eps_abs,
            eps_rel: h.eps_rel,
            max_iter: h.max_iter,
            stopping: match h.stopping {
                LtglStopping::Squared => StoppingRule::Squared,
                LtglStopping::Unsquared => StoppingRule::Unsquared,
            },
        }
    }
}

impl From<&Hyperparameters> for LtglHyperparameters {
    fn from(h: &Hyperparameters) -> Self {
        LtglHyperparameters {
            alpha: h.alpha,
            tau: h.tau,
            beta: h.beta,
            eta: h.eta,
            rho: h.rho,
            psi: penalty_to(h.psi),
            phi: penalty_to(h.phi),
            eps_abs: h.eps_abs,
            eps_rel: h.eps_rel,
            max_iter: h.max_iter,
            stopping: match h.stopping {
                StoppingRule::Squared => LtglStopping::Squared,
                StoppingRule::Unsquared => LtglStopping::Unsquared,
            },
        }
    }
}

fn sequence_from(values: &[f64], t: usize, d: usize) -> Result<Vec<SymmetricMatrix>, Failure> {
    if t == 0 || d == 0 {
        return Err(Error::Shape("T and d must be positive".into()).into());
    }
    values
        .chunks_exact(d * d)
        .map(|m| SymmetricMatrix::from_row_slice(d, m).map_err(Failure::from))
        .collect()
}

fn copy_sequence(seq: &[SymmetricMatrix], out: *mut f64, len: usize) -> Result<(), Failure> {
    let needed: usize = seq.iter().map(|m| m.dim() * m.dim()).sum();
    if len < needed {
        return Err(Failure(
            LtglStatus::BufferTooSmall,
            format!("buffer holds {len} values, need {needed}"),
        ));
    }
    if out.is_null() {
        return Err(null("out"));
    }
    // SAFETY: `out` is non-null and the caller promises room for `len >= needed` doubles.
    let dst = unsafe { std::slice::from_raw_parts_mut(out, needed) };
    let mut k = 0;
    for m in seq {
        for v in m.to_row_major() {
            dst[k] = v;
            k += 1;
        }
    }
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ltgl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message describing the last failure on this thread, or NULL. The pointer
/// stays valid until the next `ltgl_*` call on the same thread.
#[no_mangle]
pub extern "C" fn ltgl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Fills `out` with the library defaults.
///
/// # Safety
/// `out` must be NULL or point to writable memory for one struct.
#[no_mangle]
pub unsafe extern "C" fn ltgl_hyperparameters_default(out: *mut LtglHyperparameters) -> LtglStatus {
    guard(|| {
        *out_ref(out, "out")? = (&Hyperparameters::default()).into();
        Ok(())
    })
}

/// Fits the model to `T` covariance matrices (`covs` holds `T·d·d` doubles).
///
/// # Safety
/// Pointers must be NULL or valid for the stated lengths; `out` receives a
/// new handle on success.
#[no_mangle]
pub unsafe extern "C" fn ltgl_fit_covariances(
    covs: *const f64,
    t: usize,
    d: usize,
    params: *const LtglHyperparameters,
    out: *mut *mut LtglEstimate,
) -> LtglStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let hp: Hyperparameters = handle(params, "params")?.into();
        let values = slice(covs, t.saturating_mul(d).saturating_mul(d), "covs")?;
        let seq = CovarianceSequence::new(sequence_from(values, t, d)?)?;
        let est = solver::fit(&seq, &hp, None)?;
        *out = Box::into_raw(Box::new(LtglEstimate(est)));
        Ok(())
    })
}

/// Fits the model to raw samples. Block `i` has `rows[i]` rows of `d`
/// values; blocks are stored back to back in row-major order. With
/// `center != 0` each block is column-centered first.
///
/// # Safety
/// Pointers must be NULL or valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn ltgl_fit_samples(
    data: *const f64,
    rows: *const usize,
    t: usize,
    d: usize,
    center: i32,
    params: *const LtglHyperparameters,
    out: *mut *mut LtglEstimate,
) -> LtglStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let hp: Hyperparameters = handle(params, "params")?.into();
        let rows = slice(rows, t, "rows")?;
        let total = rows
            .iter()
            .try_fold(0usize, |acc, &r| acc.checked_add(r.checked_mul(d)?));
        let total = total.ok_or_else(|| {
            Failure(
                LtglStatus::InvalidParameter,
                "sample count overflows".into(),
            )
        })?;
        let values = slice(data, total, "data")?;
        let mut blocks = Vec::with_capacity(t);
        let mut offset = 0;
        for &n in rows {
            blocks.push(DMatrix::from_row_slice(
                n,
                d,
                &values[offset..offset + n * d],
            ));
            offset += n * d;
        }
        let dataset = TimeSeriesDataset::from_blocks(blocks)?;
        let covs = if center != 0 {
            empirical_covariances(&dataset.centered())
        } else {
            empirical_covariances(&dataset)
        };
        let est = solver::fit(&covs, &hp, None)?;
        *out = Box::into_raw(Box::new(LtglEstimate(est)));
        Ok(())
    })
}

/// # Safety
/// `est` must be a handle from this library or NULL; the out pointers must be
/// NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn ltgl_estimate_dims(
    est: *const LtglEstimate,
    t: *mut usize,
    d: *mut usize,
) -> LtglStatus {
    guard(|| {
        let e = &handle(est, "est")?.0;
        *out_ref(t, "t")? = e.time_points();
        *out_ref(d, "d")? = e.dim();
        Ok(())
    })
}

/// Copies the `T·d·d` entries of the sparse component into `out`.
///
/// # Safety
/// `out` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ltgl_estimate_theta(
    est: *const LtglEstimate,
    out: *mut f64,
    len: usize,
) -> LtglStatus {
    guard(|| copy_sequence(&handle(est, "est")?.0.theta_seq, out, len))
}

/// Copies the `T·d·d` entries of the low-rank component into `out`.
///
/// # Safety
/// `out` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ltgl_estimate_lowrank(
    est: *const LtglEstimate,
    out: *mut f64,
    len: usize,
) -> LtglStatus {
    guard(|| copy_sequence(&handle(est, "est")?.0.lowrank_seq, out, len))
}

/// Iteration count, convergence flag and objective (NaN when infeasible).
///
/// # Safety
/// Out pointers must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn ltgl_estimate_summary(
    est: *const LtglEstimate,
    iterations: *mut usize,
    converged: *mut i32,
    objective: *mut f64,
) -> LtglStatus {
    guard(|| {
        let e = &handle(est, "est")?.0;
        *out_ref(iterations, "iterations")? = e.iterations;
        *out_ref(converged, "converged")? = i32::from(e.converged);
        *out_ref(objective, "objective")? = e.objective_value;
        Ok(())
    })
}

/// # Safety
/// `est` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ltgl_estimate_free(est: *mut LtglEstimate) {
    if !est.is_null() {
        drop(Box::from_raw(est));
    }
}

/// Generates ground truth and samples from it.
///
/// # Safety
/// `cfg` must be valid; `truth` and `data` receive new handles on success.
#[no_mangle]
pub unsafe extern "C" fn ltgl_generate(
    cfg: *const LtglGeneratorConfig,
    truth: *mut *mut LtglTruth,
    data: *mut *mut LtglDataset,
) -> LtglStatus {
    guard(|| {
        let c = handle(cfg, "cfg")?;
        let truth = out_ref(truth, "truth")?;
        let data = out_ref(data, "data")?;
        let cfg = GeneratorConfig {
            d: c.d,
            latent: c.latent,
            time_points: c.time_points,
            n: c.n,
            kind: match c.kind {
                LtglPerturbation::P2 => Perturbation::P2,
                LtglPerturbation::P1 => Perturbation::P1,
            },
            epsilon: c.epsilon,
            sparsity: c.sparsity,
            seed: c.seed,
            ..Default::default()
        };
        let (t, x) = datagen::generate_dataset(&cfg)?;
        *truth = Box::into_raw(Box::new(LtglTruth(t)));
        *data = Box::into_raw(Box::new(LtglDataset(x)));
        Ok(())
    })
}

/// Default generator settings.
///
/// # Safety
/// `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn ltgl_generator_default(out: *mut LtglGeneratorConfig) -> LtglStatus {
    guard(|| {
        let g = GeneratorConfig::default();
        *out_ref(out, "out")? = LtglGeneratorConfig {
            d: g.d,
            latent: g.latent,
            time_points: g.time_points,
            n: g.n,
            kind: LtglPerturbation::P2,
            epsilon: g.epsilon,
            sparsity: g.sparsity,
            seed: g.seed,
        };
        Ok(())
    })
}

/// # Safety
/// `truth` must be a live handle; `out` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ltgl_truth_theta(
    truth: *const LtglTruth,
    out: *mut f64,
    len: usize,
) -> LtglStatus {
    guard(|| copy_sequence(&handle(truth, "truth")?.0.theta_seq, out, len))
}

/// # Safety
/// `truth` must be a live handle; `out` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ltgl_truth_lowrank(
    truth: *const LtglTruth,
    out: *mut f64,
    len: usize,
) -> LtglStatus {
    guard(|| copy_sequence(&handle(truth, "truth")?.0.lowrank_seq, out, len))
}

/// # Safety
/// `truth` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ltgl_truth_free(truth: *mut LtglTruth) {
    if !truth.is_null() {
        drop(Box::from_raw(truth));
    }
}

/// Number of blocks and variables.
///
/// # Safety
/// Pointers must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn ltgl_dataset_dims(
    data: *const LtglDataset,
    t: *mut usize,
    d: *mut usize,
) -> LtglStatus {
    guard(|| {
        let x = &handle(data, "data")?.0;
        *out_ref(t, "t")? = x.time_points();
        *out_ref(d, "d")? = x.dim();
        Ok(())
    })
}

/// Row count of block `index`.
///
/// # Safety
/// Pointers must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn ltgl_dataset_block_rows(
    data: *const LtglDataset,
    index: usize,
    rows: *mut usize,
) -> LtglStatus {
    guard(|| {
        let x = &handle(data, "data")?.0;
        let block = x.blocks().get(index).ok_or_else(|| {
            Failure(
                LtglStatus::InvalidParameter,
                format!("block {index} out of range"),
            )
        })?;
        *out_ref(rows, "rows")? = block.nrows();
        Ok(())
    })
}

/// Copies block `index` in row-major order.
///
/// # Safety
/// `out` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ltgl_dataset_block(
    data: *const LtglDataset,
    index: usize,
    out: *mut f64,
    len: usize,
) -> LtglStatus {
    guard(|| {
        let x = &handle(data, "data")?.0;
        let block = x.blocks().get(index).ok_or_else(|| {
            Failure(
                LtglStatus::InvalidParameter,
                format!("block {index} out of range"),
            )
        })?;
        let needed = block.len();
        if len < needed {
            return Err(Failure(
                LtglStatus::BufferTooSmall,
                format!("buffer holds {len} values, need {needed}"),
            ));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let dst = std::slice::from_raw_parts_mut(out, needed);
        let cols = block.ncols();
        for i in 0..block.nrows() {
            for j in 0..cols {
                dst[i * cols + j] = block[(i, j)];
            }
        }
        Ok(())
    })
}

/// # Safety
/// `data` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ltgl_dataset_free(data: *mut LtglDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Scores an estimate against a reference. All four arrays hold `T·d·d`
/// row-major values.
///
/// # Safety
/// Array pointers must be valid for `T·d·d` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ltgl_score(
    truth_theta: *const f64,
    truth_lowrank: *const f64,
    est_theta: *const f64,
    est_lowrank: *const f64,
    t: usize,
    d: usize,
    out: *mut LtglScores,
) -> LtglStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let len = t.saturating_mul(d).saturating_mul(d);
        let load = |p: *const f64, what: &str| -> Result<Vec<SymmetricMatrix>, Failure> {
            sequence_from(slice(p, len, what)?, t, d)
        };
        let s = evaluation::score(
            &load(truth_theta, "truth_theta")?,
            &load(truth_lowrank, "truth_lowrank")?,
            &load(est_theta, "est_theta")?,
            &load(est_lowrank, "est_lowrank")?,
        )?;
        *out = LtglScores {
            f1: s.f1,
            accuracy: s.accuracy,
            mre: s.mre,
            mse: s.mse,
            tp: s.counts.tp,
            fp: s.counts.fp,
            tn: s.counts.tn,
            fn_: s.counts.fn_,
        };
        Ok(())
    })
}
