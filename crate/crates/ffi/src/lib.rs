//! C interface to `decoymap`.
//!
//! Graphs and corpora are opaque handles created by the `dm_graph_from_*`
//! and `dm_corpus_*` constructors and released with the matching `dm_*_free`.
//! Every fallible call returns a [`DmStatus`]; on failure
//! `dm_last_error_message` describes the error for the calling thread.
//! Strings returned to the caller must be released with `dm_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use decoymap::analysis::spearman_rank;
use decoymap::inference::{build_corpus, parse_paths, write_paths, PathCorpus};
use decoymap::ingest::{
    parse_censors, parse_countries, parse_prefixes, parse_relationships, parse_rib, read_file,
    CountryMap,
};
use decoymap::placement::{find_key_ases, rank_ases};
use decoymap::topology::{build_graph, RelationshipGraph};
use decoymap::{Asn, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    UnknownAs = 5,
    EmptyCorpus = 6,
    InvalidArgument = 7,
    Undefined = 8,
    Internal = 9,
}

/// Relationship graph handle.
pub struct DmGraph(RelationshipGraph);

/// Inferred path corpus handle.
pub struct DmCorpus(PathCorpus);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

struct Failure(DmStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => DmStatus::Io,
            Error::ConflictingRelationship { .. }
            | Error::AliasOverlap { .. }
            | Error::ConflictingPrefixOrigin { .. }
            | Error::Malformed { .. } => DmStatus::Parse,
            Error::UnknownAs(_) => DmStatus::UnknownAs,
            Error::EmptyCorpus => DmStatus::EmptyCorpus,
            Error::UndefinedCorrelation(_) => DmStatus::Undefined,
            _ => DmStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn fail<T>(status: DmStatus, message: &str) -> Result<T, Failure> {
    Err(Failure(status, message.to_string()))
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            DmStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DmStatus::Internal
        }
    }
}

unsafe fn text_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(DmStatus::NullArgument, &format!("{what} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(DmStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn file_arg(p: *const c_char, what: &str) -> Result<String, Failure> {
    let path = text_arg(p, what)?;
    Ok(read_file(Path::new(path))?)
}

unsafe fn out_arg<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(DmStatus::NullArgument, "output pointer is null".into()))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(DmStatus::NullArgument, "handle is null".into()))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn dm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn dm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn graph_from_text(text: &str) -> Result<Box<DmGraph>, Failure> {
    let (edges, _) = parse_relationships(text)?;
    let (g, _) = build_graph(&edges)?;
    Ok(Box::new(DmGraph(g)))
}

/// Builds a graph from a `ASN|ASN|CODE` relationships file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dm_graph_from_file(
    path: *const c_char,
    out: *mut *mut DmGraph,
) -> DmStatus {
    guard(|| {
        let out = out_arg(out)?;
        *out = ptr::null_mut();
        let text = file_arg(path, "path")?;
        *out = Box::into_raw(graph_from_text(&text)?);
        Ok(())
    })
}

/// Builds a graph from relationships text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn dm_graph_from_text(
    text: *const c_char,
    out: *mut *mut DmGraph,
) -> DmStatus {
    guard(|| {
        let out = out_arg(out)?;
        *out = ptr::null_mut();
        *out = Box::into_raw(graph_from_text(text_arg(text, "text")?)?);
        Ok(())
    })
}

/// # Safety
/// `g` must be null or a handle from `dm_graph_from_*`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dm_graph_free(g: *mut DmGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Number of ASes, 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn dm_graph_len(g: *const DmGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.len())
}

/// # Safety
/// `g` must be a live graph handle, `asns` must point to `len` values and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dm_graph_is_valley_free(
    g: *const DmGraph,
    asns: *const u32,
    len: usize,
    out: *mut bool,
) -> DmStatus {
    guard(|| {
        let g = handle(g)?;
        let out = out_arg(out)?;
        if asns.is_null() {
            return fail(DmStatus::NullArgument, "asns is null");
        }
        let path: Option<Vec<Asn>> = std::slice::from_raw_parts(asns, len)
            .iter()
            .map(|&a| Asn::new(a))
            .collect();
        let Some(path) = path else {
            return fail(DmStatus::InvalidArgument, "AS number 0");
        };
        *out = g.0.is_valley_free(&path);
        Ok(())
    })
}

/// # Safety
/// `g` must be a live graph handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dm_graph_cone_size(
    g: *const DmGraph,
    asn: u32,
    out: *mut usize,
) -> DmStatus {
    guard(|| {
        let g = handle(g)?;
        let out = out_arg(out)?;
        let Some(asn) = Asn::new(asn) else {
            return fail(DmStatus::InvalidArgument, "AS number 0");
        };
        *out = g.0.customer_cone(asn)?.len();
        Ok(())
    })
}

fn infer(g: &RelationshipGraph, rib: &str, prefixes: &str) -> Box<DmCorpus> {
    let (entries, _) = parse_rib(rib);
    let (targets, _) = parse_prefixes(prefixes);
    Box::new(DmCorpus(build_corpus(&targets, &entries, g)))
}

/// Infers paths from a RIB file toward the prefixes of a prefix file.
///
/// # Safety
/// `g` must be a live graph handle, the paths NUL-terminated strings and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dm_corpus_infer_files(
    g: *const DmGraph,
    rib_path: *const c_char,
    prefixes_path: *const c_char,
    out: *mut *mut DmCorpus,
) -> DmStatus {
    guard(|| {
        let out = out_arg(out)?;
        *out = ptr::null_mut();
        let g = handle(g)?;
        let rib = file_arg(rib_path, "rib_path")?;
        let prefixes = file_arg(prefixes_path, "prefixes_path")?;
        *out = Box::into_raw(infer(&g.0, &rib, &prefixes));
        Ok(())
    })
}

/// Same as `dm_corpus_infer_files` with the file contents passed directly.
///
/// # Safety
/// As for `dm_corpus_infer_files`.
#[no_mangle]
pub unsafe extern "C" fn dm_corpus_infer_text(
    g: *const DmGraph,
    rib: *const c_char,
    prefixes: *const c_char,
    out: *mut *mut DmCorpus,
) -> DmStatus {
    guard(|| {
        let out = out_arg(out)?;
        *out = ptr::null_mut();
        let g = handle(g)?;
        *out = Box::into_raw(infer(
            &g.0,
            text_arg(rib, "rib")?,
            text_arg(prefixes, "prefixes")?,
        ));
        Ok(())
    })
}

/// Loads a corpus from a paths file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dm_corpus_from_file(
    path: *const c_char,
    out: *mut *mut DmCorpus,
) -> DmStatus {
    guard(|| {
        let out = out_arg(out)?;
        *out = ptr::null_mut();
        let text = file_arg(path, "path")?;
        *out = Box::into_raw(Box::new(DmCorpus(parse_paths(&text)?)));
        Ok(())
    })
}

/// # Safety
/// `c` must be null or a live corpus handle.
#[no_mangle]
pub unsafe extern "C" fn dm_corpus_free(c: *mut DmCorpus) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Number of stored paths, 0 for a null handle.
///
/// # Safety
/// `c` must be null or a live corpus handle.
#[no_mangle]
pub unsafe extern "C" fn dm_corpus_path_count(c: *const DmCorpus) -> usize {
    c.as_ref().map_or(0, |c| c.0.total_paths())
}

/// Writes the corpus as a paths file.
///
/// # Safety
/// `c` must be a live corpus handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn dm_corpus_write(c: *const DmCorpus, path: *const c_char) -> DmStatus {
    guard(|| {
        let c = handle(c)?;
        let path = text_arg(path, "path")?;
        std::fs::write(path, write_paths(&c.0))
            .map_err(|e| Failure(DmStatus::Io, format!("cannot write {path}: {e}")))
    })
}

/// Selects key ASes and returns the placement report as JSON. The country
/// and censor files may be null.
///
/// # Safety
/// `c` must be a live corpus handle, non-null paths NUL-terminated strings
/// and `out_json` writable. Release the result with `dm_string_free`.
#[no_mangle]
pub unsafe extern "C" fn dm_find_key_ases(
    c: *const DmCorpus,
    threshold: f64,
    countries_path: *const c_char,
    censors_path: *const c_char,
    out_json: *mut *mut c_char,
) -> DmStatus {
    guard(|| {
        let out = out_arg(out_json)?;
        *out = ptr::null_mut();
        let c = handle(c)?;
        let mut countries = CountryMap::default();
        if !countries_path.is_null() {
            countries.mapping = parse_countries(&file_arg(countries_path, "countries_path")?).0;
        }
        if !censors_path.is_null() {
            countries.censor_set = parse_censors(&file_arg(censors_path, "censors_path")?).0;
        }
        let report = find_key_ases(&rank_ases(&c.0), &c.0, threshold, &countries)?;
        let json = serde_json::to_string(&report)
            .map_err(|e| Failure(DmStatus::Internal, e.to_string()))?;
        *out = CString::new(json)
            .map_err(|e| Failure(DmStatus::Internal, e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// Key ASes without country information, as a plain array: writes up to
/// `cap` ASNs into `asns` and the full count into `count`.
///
/// # Safety
/// `c` must be a live corpus handle, `asns` valid for `cap` writes (or null
/// with `cap == 0`) and `count` writable.
#[no_mangle]
pub unsafe extern "C" fn dm_key_as_list(
    c: *const DmCorpus,
    threshold: f64,
    asns: *mut u32,
    cap: usize,
    count: *mut usize,
) -> DmStatus {
    guard(|| {
        let c = handle(c)?;
        let count = out_arg(count)?;
        if asns.is_null() && cap > 0 {
            return fail(DmStatus::NullArgument, "asns is null");
        }
        let report = find_key_ases(&rank_ases(&c.0), &c.0, threshold, &CountryMap::default())?;
        let selected = report.selected_asns();
        *count = selected.len();
        for (i, a) in selected.iter().take(cap).enumerate() {
            *asns.add(i) = a.get();
        }
        Ok(())
    })
}

/// Spearman rank correlation with average ranks for ties.
///
/// # Safety
/// `x` and `y` must point to `len` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dm_spearman(
    x: *const f64,
    y: *const f64,
    len: usize,
    out: *mut f64,
) -> DmStatus {
    guard(|| {
        let out = out_arg(out)?;
        if x.is_null() || y.is_null() {
            return fail(DmStatus::NullArgument, "input is null");
        }
        let x = std::slice::from_raw_parts(x, len);
        let y = std::slice::from_raw_parts(y, len);
        *out = spearman_rank(x, y)?;
        Ok(())
    })
}

/// Deployment cost in USD. Fails with `InvalidArgument` if the product does
/// not fit in 64 bits.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dm_cost_estimate(
    routers: u64,
    unit_cost_usd: u64,
    out: *mut u64,
) -> DmStatus {
    guard(|| {
        let out = out_arg(out)?;
        let total = decoymap::analysis::cost_estimate(routers, unit_cost_usd);
        *out = u64::try_from(total)
            .map_err(|_| Failure(DmStatus::InvalidArgument, "cost overflows 64 bits".into()))?;
        Ok(())
    })
}
