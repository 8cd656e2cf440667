//! C interface to `chainkit`.
//!
//! Objects are opaque handles created by the `_from_*`, `_build`, `_load` and `simulate`
//! functions and released with the matching `_free`. Every fallible call
//! returns a [`ChainkitStatus`]; on failure the message is available from
//! [`chainkit_last_error`] until the next failing call on the same thread.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use chainkit::bounds::{self, BoundParams, Prefactor};
use chainkit::chaining::{validate_family, ChainingFamily};
use chainkit::covering::{covering_number, CoverOptions};
use chainkit::metric_space::FiniteMetricSpace;
use chainkit::pair_reduction::{build_pair_set, PairReduction};
use chainkit::simulate::{simulate, PathEnsemble, ProcessKind};
use chainkit::verify;
use chainkit::Error;

/// Result codes. Zero means success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainkitStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NotAMetric = 3,
    ParamViolation = 4,
    TooLarge = 5,
    Numeric = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainkitPrefactor {
    Statement = 0,
    Proof = 1,
}

/// Moment and entropy constants; field meaning as in the Rust `BoundParams`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ChainkitBoundParams {
    pub m: f64,
    pub p: f64,
    pub q: f64,
    pub c: f64,
    pub t: f64,
    pub beta: f64,
    pub diam: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ChainkitHolderConstant {
    pub l: f64,
    pub l1: f64,
    pub l2: f64,
    pub tail_bound: f64,
    pub k0: u32,
    pub terms_used: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ChainkitEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub replications: usize,
    /// Nonzero when the supremum ran over an empty pair set.
    pub empty_sup: bool,
}

pub struct ChainkitSpace(FiniteMetricSpace);
pub struct ChainkitFamily(ChainingFamily);
pub struct ChainkitPairSet(PairReduction);
pub struct ChainkitEnsemble(PathEnsemble);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> ChainkitStatus {
    match err {
        Error::NotAMetric { .. } | Error::DuplicatePoint(..) => ChainkitStatus::NotAMetric,
        Error::ParamViolation(_) | Error::BadParameters(_) => ChainkitStatus::ParamViolation,
        Error::TooLarge { .. } => ChainkitStatus::TooLarge,
        Error::Io { .. } => ChainkitStatus::Io,
        e if e.exit_code() == 3 => ChainkitStatus::Numeric,
        _ => ChainkitStatus::InvalidInput,
    }
}

struct Fail(ChainkitStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(ChainkitStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(ChainkitStatus::InvalidInput, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ChainkitStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ChainkitStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            ChainkitStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn floats<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

fn cover_options(greedy: bool, exact_limit: usize) -> CoverOptions {
    let base = if greedy {
        CoverOptions::greedy()
    } else {
        CoverOptions::exact()
    };
    if exact_limit == 0 {
        base
    } else {
        base.with_exact_limit(exact_limit)
    }
}

impl From<ChainkitBoundParams> for BoundParams {
    fn from(p: ChainkitBoundParams) -> Self {
        BoundParams {
            m: p.m,
            p: p.p,
            q: p.q,
            c: p.c,
            t: p.t,
            beta: p.beta,
            diam: p.diam,
        }
    }
}

fn prefactor(v: ChainkitPrefactor) -> Prefactor {
    match v {
        ChainkitPrefactor::Statement => Prefactor::Statement,
        ChainkitPrefactor::Proof => Prefactor::Proof,
    }
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

// ---------------------------------------------------------------- errors

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn chainkit_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn chainkit_status_str(status: ChainkitStatus) -> *const c_char {
    let s: &'static CStr = match status {
        ChainkitStatus::Ok => c"ok",
        ChainkitStatus::NullPointer => c"null pointer",
        ChainkitStatus::InvalidInput => c"invalid input",
        ChainkitStatus::NotAMetric => c"not a metric",
        ChainkitStatus::ParamViolation => c"parameter violation",
        ChainkitStatus::TooLarge => c"too large for exact covering",
        ChainkitStatus::Numeric => c"numeric failure",
        ChainkitStatus::Io => c"io error",
        ChainkitStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

// ---------------------------------------------------------------- spaces

/// Euclidean space from `n` points of dimension `dim`, row-major.
#[no_mangle]
pub unsafe extern "C" fn chainkit_space_from_coords(
    coords: *const f64,
    n: usize,
    dim: usize,
    out: *mut *mut ChainkitSpace,
) -> ChainkitStatus {
    guard(|| {
        if dim == 0 {
            return Err(invalid("dim must be >= 1"));
        }
        let flat = floats(
            coords,
            n.checked_mul(dim).ok_or_else(|| invalid("size overflow"))?,
            "coords",
        )?;
        let rows = flat.chunks(dim).map(<[f64]>::to_vec).collect();
        let space = FiniteMetricSpace::euclidean(rows)?;
        put(out, boxed(ChainkitSpace(space)), "out")
    })
}

/// Space from an `n × n` row-major distance matrix, checked for the metric axioms.
#[no_mangle]
pub unsafe extern "C" fn chainkit_space_from_matrix(
    dist: *const f64,
    n: usize,
    out: *mut *mut ChainkitSpace,
) -> ChainkitStatus {
    guard(|| {
        let flat = floats(
            dist,
            n.checked_mul(n).ok_or_else(|| invalid("size overflow"))?,
            "dist",
        )?;
        let rows = flat.chunks(n.max(1)).map(<[f64]>::to_vec).collect();
        let labels = (0..n).map(|i| i.to_string()).collect();
        let space = FiniteMetricSpace::from_matrix(labels, rows)?;
        put(out, boxed(ChainkitSpace(space)), "out")
    })
}

/// `points` equally spaced points on `[start, end]`.
#[no_mangle]
pub unsafe extern "C" fn chainkit_space_uniform_grid(
    points: usize,
    start: f64,
    end: f64,
    out: *mut *mut ChainkitSpace,
) -> ChainkitStatus {
    guard(|| {
        let space = FiniteMetricSpace::uniform_grid(points, start, end)?;
        put(out, boxed(ChainkitSpace(space)), "out")
    })
}

/// Loads a JSON or CSV space file.
#[no_mangle]
pub unsafe extern "C" fn chainkit_space_load(
    path: *const c_char,
    out: *mut *mut ChainkitSpace,
) -> ChainkitStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| invalid("path is not UTF-8"))?;
        let space = FiniteMetricSpace::load(Path::new(path))?;
        put(out, boxed(ChainkitSpace(space)), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn chainkit_space_free(space: *mut ChainkitSpace) {
    free(space)
}

/// Number of points, zero for a null handle.
#[no_mangle]
pub unsafe extern "C" fn chainkit_space_len(space: *const ChainkitSpace) -> usize {
    space.as_ref().map_or(0, |s| s.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn chainkit_space_distance(
    space: *const ChainkitSpace,
    i: usize,
    j: usize,
    out: *mut f64,
) -> ChainkitStatus {
    guard(|| {
        let s = &get(space, "space")?.0;
        if i >= s.len() || j >= s.len() {
            return Err(invalid(format!(
                "index out of range for {} points",
                s.len()
            )));
        }
        put(out, s.d(i, j), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn chainkit_space_diameter(
    space: *const ChainkitSpace,
    out: *mut f64,
) -> ChainkitStatus {
    guard(|| put(out, get(space, "space")?.0.diameter(), "out"))
}

#[no_mangle]
pub unsafe extern "C" fn chainkit_space_min_gap(
    space: *const ChainkitSpace,
    out: *mut f64,
) -> ChainkitStatus {
    guard(|| put(out, get(space, "space")?.0.min_gap()?, "out"))
}

// ---------------------------------------------------------------- covering

/// Internal covering number at radius `eta`. `exact_limit == 0` keeps the default.
#[no_mangle]
pub unsafe extern "C" fn chainkit_covering_number(
    space: *const ChainkitSpace,
    eta: f64,
    greedy: bool,
    exact_limit: usize,
    out: *mut usize,
) -> ChainkitStatus {
    guard(|| {
        let s = &get(space, "space")?.0;
        let cover = covering_number(s, eta, &cover_options(greedy, exact_limit))?;
        put(out, cover.count, "out")
    })
}

// ---------------------------------------------------------------- chaining

#[no_mangle]
pub unsafe extern "C" fn chainkit_family_build(
    space: *const ChainkitSpace,
    greedy: bool,
    exact_limit: usize,
    out: *mut *mut ChainkitFamily,
) -> ChainkitStatus {
    guard(|| {
        let s = &get(space, "space")?.0;
        let family = ChainingFamily::build(s, &cover_options(greedy, exact_limit))?;
        put(out, boxed(ChainkitFamily(family)), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn chainkit_family_free(family: *mut ChainkitFamily) {
    free(family)
}

#[no_mangle]
pub unsafe extern "C" fn chainkit_family_levels(
    family: *const ChainkitFamily,
    n0: *mut i32,
    n1: *mut i32,
) -> ChainkitStatus {
    guard(|| {
        let f = &get(family, "family")?.0;
        put(n0, f.n0, "n0")?;
        put(n1, f.n1, "n1")
    })
}

/// `φ_level(point)`.
#[no_mangle]
pub unsafe extern "C" fn chainkit_family_phi(
    family: *const ChainkitFamily,
    level: i32,
    point: usize,
    out: *mut usize,
) -> ChainkitStatus {
    guard(|| {
        let f = &get(family, "family")?.0;
        let map = f.maps.get(&level).ok_or(Error::LevelOutOfRange {
            level,
            lo: f.n0,
            hi: f.n1,
        })?;
        let v = *map
            .get(point)
            .ok_or_else(|| invalid(format!("point {point} out of range")))?;
        put(out, v, "out")
    })
}

/// Size of the net at `level`.
#[no_mangle]
pub unsafe extern "C" fn chainkit_family_net_len(
    family: *const ChainkitFamily,
    level: i32,
    out: *mut usize,
) -> ChainkitStatus {
    guard(|| {
        let f = &get(family, "family")?.0;
        let net = f.nets.get(&level).ok_or(Error::LevelOutOfRange {
            level,
            lo: f.n0,
            hi: f.n1,
        })?;
        put(out, net.len(), "out")
    })
}

/// Runs all structural checks; `out` receives whether every one passed.
#[no_mangle]
pub unsafe extern "C" fn chainkit_family_validate(
    space: *const ChainkitSpace,
    family: *const ChainkitFamily,
    out: *mut bool,
) -> ChainkitStatus {
    guard(|| {
        let s = &get(space, "space")?.0;
        let f = &get(family, "family")?.0;
        put(out, validate_family(s, f)?.all_pass(), "out")
    })
}

// ---------------------------------------------------------------- pair sets

#[no_mangle]
pub unsafe extern "C" fn chainkit_pairs_build(
    space: *const ChainkitSpace,
    a: f64,
    r: u32,
    c: f64,
    out: *mut *mut ChainkitPairSet,
) -> ChainkitStatus {
    guard(|| {
        let s = &get(space, "space")?.0;
        put(
            out,
            boxed(ChainkitPairSet(build_pair_set(s, a, r, c)?)),
            "out",
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn chainkit_pairs_free(pairs: *mut ChainkitPairSet) {
    free(pairs)
}

#[no_mangle]
pub unsafe extern "C" fn chainkit_pairs_len(pairs: *const ChainkitPairSet) -> usize {
    pairs.as_ref().map_or(0, |p| p.0.pairs.len())
}

#[no_mangle]
pub unsafe extern "C" fn chainkit_pairs_get(
    pairs: *const ChainkitPairSet,
    index: usize,
    first: *mut usize,
    second: *mut usize,
) -> ChainkitStatus {
    guard(|| {
        let p = &get(pairs, "pairs")?.0;
        let &(i, j) = p
            .pairs
            .get(index)
            .ok_or_else(|| invalid(format!("pair index {index} out of range")))?;
        put(first, i, "first")?;
        put(second, j, "second")
    })
}

/// Whether every structural invariant of the pair set holds.
#[no_mangle]
pub unsafe extern "C" fn chainkit_pairs_check(
    pairs: *const ChainkitPairSet,
    space: *const ChainkitSpace,
    out: *mut bool,
) -> ChainkitStatus {
    guard(|| {
        let p = &get(pairs, "pairs")?.0;
        let s = &get(space, "space")?.0;
        put(out, p.check_invariants(s).iter().all(|c| c.pass), "out")
    })
}

/// Domination check for one assignment of `dim`-dimensional values, point-major.
#[no_mangle]
pub unsafe extern "C" fn chainkit_pairs_check_domination(
    pairs: *const ChainkitPairSet,
    space: *const ChainkitSpace,
    values: *const f64,
    len: usize,
    dim: usize,
    out: *mut bool,
) -> ChainkitStatus {
    guard(|| {
        let p = &get(pairs, "pairs")?.0;
        let s = &get(space, "space")?.0;
        let v = floats(values, len, "values")?;
        put(out, p.check_domination(s, v, dim, p.c)?.pass, "out")
    })
}

// ---------------------------------------------------------------- bounds

#[no_mangle]
pub unsafe extern "C" fn chainkit_lemma_b27_bound(
    space: *const ChainkitSpace,
    delta: f64,
    params: *const ChainkitBoundParams,
    variant: ChainkitPrefactor,
    exact_limit: usize,
    out: *mut f64,
) -> ChainkitStatus {
    guard(|| {
        let s = &get(space, "space")?.0;
        let params: BoundParams = (*get(params, "params")?).into();
        let opts = cover_options(false, exact_limit);
        let v = bounds::lemma_b27_bound(s, delta, &params, prefactor(variant), &opts)?;
        put(out, v, "out")
    })
}

/// Same bound from a known covering number `n4` at `delta / 4`.
#[no_mangle]
pub unsafe extern "C" fn chainkit_lemma_b27_from_count(
    n4: usize,
    delta: f64,
    params: *const ChainkitBoundParams,
    variant: ChainkitPrefactor,
    out: *mut f64,
) -> ChainkitStatus {
    guard(|| {
        let params: BoundParams = (*get(params, "params")?).into();
        let v = bounds::lemma_b27_from_count(n4, delta, &params, prefactor(variant))?;
        put(out, v, "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn chainkit_net_deviation_bound(
    n: i32,
    n1: i32,
    params: *const ChainkitBoundParams,
    out: *mut f64,
) -> ChainkitStatus {
    guard(|| {
        let params: BoundParams = (*get(params, "params")?).into();
        put(out, bounds::net_deviation_bound(n, n1, &params)?, "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn chainkit_holder_constant(
    params: *const ChainkitBoundParams,
    tol: f64,
    out: *mut ChainkitHolderConstant,
) -> ChainkitStatus {
    guard(|| {
        let params: BoundParams = (*get(params, "params")?).into();
        let h = bounds::holder_constant(&params, tol)?;
        let v = ChainkitHolderConstant {
            l: h.l,
            l1: h.l1,
            l2: h.l2,
            tail_bound: h.tail_bound,
            k0: h.k0,
            terms_used: h.terms_used,
        };
        put(out, v, "out")
    })
}

/// `L·δ^{βp}`.
#[no_mangle]
pub extern "C" fn chainkit_corollary_bound(l: f64, delta: f64, beta: f64, p: f64) -> f64 {
    bounds::corollary_bound(l, delta, beta, p)
}

// ---------------------------------------------------------------- simulation

unsafe fn simulate_into(
    space: *const ChainkitSpace,
    kind: ProcessKind,
    replications: usize,
    seed: u64,
    out: *mut *mut ChainkitEnsemble,
) -> ChainkitStatus {
    guard(|| {
        let s = &get(space, "space")?.0;
        let ens = simulate(s, &kind, replications, seed)?;
        put(out, boxed(ChainkitEnsemble(ens)), "out")
    })
}

/// Fractional Brownian field with Hurst index `hurst` on a Euclidean space.
#[no_mangle]
pub unsafe extern "C" fn chainkit_simulate_fbm(
    space: *const ChainkitSpace,
    hurst: f64,
    replications: usize,
    seed: u64,
    out: *mut *mut ChainkitEnsemble,
) -> ChainkitStatus {
    simulate_into(space, ProcessKind::Fbm { hurst }, replications, seed, out)
}

/// Compensated unit-rate Poisson process on a one-dimensional space.
#[no_mangle]
pub unsafe extern "C" fn chainkit_simulate_poisson(
    space: *const ChainkitSpace,
    replications: usize,
    seed: u64,
    out: *mut *mut ChainkitEnsemble,
) -> ChainkitStatus {
    simulate_into(space, ProcessKind::Poisson, replications, seed, out)
}

#[no_mangle]
pub unsafe extern "C" fn chainkit_ensemble_free(ens: *mut ChainkitEnsemble) {
    free(ens)
}

#[no_mangle]
pub unsafe extern "C" fn chainkit_ensemble_replications(ens: *const ChainkitEnsemble) -> usize {
    ens.as_ref().map_or(0, |e| e.0.replications)
}

#[no_mangle]
pub unsafe extern "C" fn chainkit_ensemble_points(ens: *const ChainkitEnsemble) -> usize {
    ens.as_ref().map_or(0, |e| e.0.points)
}

/// Borrowed pointer to path `r` (`points` values), null when out of range.
/// Valid until the ensemble is freed.
#[no_mangle]
pub unsafe extern "C" fn chainkit_ensemble_path(
    ens: *const ChainkitEnsemble,
    r: usize,
) -> *const f64 {
    match ens.as_ref() {
        Some(e) if r < e.0.replications => e.0.path(r).as_ptr(),
        _ => ptr::null(),
    }
}

// ---------------------------------------------------------------- estimators

fn estimate(e: verify::McEstimate) -> ChainkitEstimate {
    ChainkitEstimate {
        mean: e.mean,
        std_error: e.std_error,
        replications: e.replications,
        empty_sup: e.empty_sup,
    }
}

/// Monte Carlo estimate of `E sup_{d ≤ δ} |X_θ − X_ϑ|^p`.
#[no_mangle]
pub unsafe extern "C" fn chainkit_estimate_sup_increment(
    space: *const ChainkitSpace,
    ens: *const ChainkitEnsemble,
    delta: f64,
    p: f64,
    out: *mut ChainkitEstimate,
) -> ChainkitStatus {
    guard(|| {
        let s = &get(space, "space")?.0;
        let e = &get(ens, "ensemble")?.0;
        let est = verify::estimate_sup_increment_moment(s, e, delta, p)?;
        put(out, estimate(est), "out")
    })
}

/// Monte Carlo estimate of `E sup_{θ ≠ ϑ} |X_θ − X_ϑ|^p / d^{βp}`.
#[no_mangle]
pub unsafe extern "C" fn chainkit_estimate_holder_quotient(
    space: *const ChainkitSpace,
    ens: *const ChainkitEnsemble,
    beta: f64,
    p: f64,
    out: *mut ChainkitEstimate,
) -> ChainkitStatus {
    guard(|| {
        let s = &get(space, "space")?.0;
        let e = &get(ens, "ensemble")?.0;
        let est = verify::estimate_holder_quotient_moment(s, e, beta, p)?;
        put(out, estimate(est), "out")
    })
}
