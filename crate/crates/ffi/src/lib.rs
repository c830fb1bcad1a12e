//! C interface to the lineage pipeline, trained models and metrics.
//!
//! Every fallible function returns an [`RddlStatus`]; on failure the
//! message is available from [`rddl_last_error`] on the same thread.
//! Handles are opaque and must be released with their `_free` function.
//! Strings returned to the caller are released with [`rddl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use rddl_lineage::eval::{hits_at_k, pr_auc, TaskResult};
use rddl_lineage::ontology::ProfileName;
use rddl_lineage::pipeline::{run_pipeline, PipelineError, Preset, RunManifest};
use rddl_lineage::siamese::{read_checkpoint, Model};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RddlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Rejected manifest or argument.
    InvalidArgument = 3,
    /// A pipeline stage failed.
    StageFailed = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RddlProfile {
    Baseline = 0,
    Rddl = 1,
}

/// Metrics of one task and profile.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RddlMetrics {
    pub profile: RddlProfile,
    pub precision: f64,
    pub recall: f64,
    pub pr_auc: f64,
    pub hits_at_10: f64,
    pub positives: u64,
    pub negatives: u64,
}

/// Opaque run manifest.
pub struct RddlManifest(RunManifest);

/// Opaque list of task results.
pub struct RddlResults {
    rows: Vec<TaskResult>,
    tasks: Vec<CString>,
}

/// Opaque trained model.
pub struct RddlModel(Model);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(RddlStatus, String);

impl Failure {
    fn arg(msg: impl Into<String>) -> Self {
        Failure(RddlStatus::InvalidArgument, msg.into())
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let status = match e {
            PipelineError::Validation(_) => RddlStatus::InvalidArgument,
            PipelineError::Stage { .. } => RddlStatus::StageFailed,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, recording its error message and converting panics.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RddlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RddlStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RddlStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(RddlStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(RddlStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(RddlStatus::NullPointer, format!("{what} is null")))
}

unsafe fn mut_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(RddlStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure(RddlStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failed call on this thread, or null after a
/// successful call. Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn rddl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn rddl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rddl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Manifest from a preset name, `"desk"` or `"paper"`.
///
/// # Safety
/// `preset` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rddl_manifest_preset(
    preset: *const c_char,
    out: *mut *mut RddlManifest,
) -> RddlStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        let p: Preset = str_arg(preset, "preset")?.parse()?;
        *out = boxed(RddlManifest(RunManifest::preset(p)));
        Ok(())
    })
}

/// Manifest parsed and validated from TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rddl_manifest_from_toml(
    toml: *const c_char,
    out: *mut *mut RddlManifest,
) -> RddlStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        let m = RunManifest::from_toml(str_arg(toml, "toml")?)?;
        *out = boxed(RddlManifest(m));
        Ok(())
    })
}

/// The manifest as TOML, to be released with [`rddl_string_free`].
///
/// # Safety
/// `m` must be a live manifest handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rddl_manifest_to_toml(
    m: *const RddlManifest,
    out: *mut *mut c_char,
) -> RddlStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        let text = ref_arg(m, "manifest")?.0.to_toml();
        *out = CString::new(text)
            .map_err(|_| Failure::arg("manifest contains NUL"))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `m` must be a live manifest handle.
#[no_mangle]
pub unsafe extern "C" fn rddl_manifest_set_seed(m: *mut RddlManifest, seed: u64) -> RddlStatus {
    guard(|| {
        mut_arg(m, "manifest")?.0.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `m` must be a live manifest handle; `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rddl_manifest_set_out(
    m: *mut RddlManifest,
    dir: *const c_char,
) -> RddlStatus {
    guard(|| {
        let dir = PathBuf::from(str_arg(dir, "dir")?);
        mut_arg(m, "manifest")?.0.out = dir;
        Ok(())
    })
}

/// Restricts the run to one task, or all tasks for `"all"`.
///
/// # Safety
/// `m` must be a live manifest handle; `task` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rddl_manifest_set_task(
    m: *mut RddlManifest,
    task: *const c_char,
) -> RddlStatus {
    guard(|| {
        let task = str_arg(task, "task")?;
        let m = &mut mut_arg(m, "manifest")?.0;
        let mut next = m.clone();
        next.tasks = if task == "all" {
            RunManifest::default().tasks
        } else {
            vec![task.to_string()]
        };
        next.validate()?;
        *m = next;
        Ok(())
    })
}

/// Restricts the run to one profile.
///
/// # Safety
/// `m` must be a live manifest handle.
#[no_mangle]
pub unsafe extern "C" fn rddl_manifest_set_profile(
    m: *mut RddlManifest,
    profile: RddlProfile,
) -> RddlStatus {
    guard(|| {
        mut_arg(m, "manifest")?.0.profiles = vec![profile_name(profile)];
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a manifest handle, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rddl_manifest_free(m: *mut RddlManifest) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

fn profile_name(p: RddlProfile) -> ProfileName {
    match p {
        RddlProfile::Baseline => ProfileName::Baseline,
        RddlProfile::Rddl => ProfileName::Rddl,
    }
}

/// Runs every stage of the manifest, skipping up-to-date ones, and returns
/// the collected results.
///
/// # Safety
/// `m` must be a live manifest handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rddl_run_pipeline(
    m: *const RddlManifest,
    out: *mut *mut RddlResults,
) -> RddlStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        let summary = run_pipeline(&ref_arg(m, "manifest")?.0)?;
        let tasks = summary
            .results
            .iter()
            .map(|r| CString::new(r.task.clone()).unwrap_or_default())
            .collect();
        *out = boxed(RddlResults {
            rows: summary.results,
            tasks,
        });
        Ok(())
    })
}

/// # Safety
/// `r` must be a live results handle.
#[no_mangle]
pub unsafe extern "C" fn rddl_results_len(r: *const RddlResults) -> usize {
    r.as_ref().map_or(0, |r| r.rows.len())
}

/// Metrics of row `i`.
///
/// # Safety
/// `r` must be a live results handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rddl_results_get(
    r: *const RddlResults,
    i: usize,
    out: *mut RddlMetrics,
) -> RddlStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        let row = ref_arg(r, "results")?
            .rows
            .get(i)
            .ok_or_else(|| Failure::arg(format!("row {i} out of range")))?;
        *out = RddlMetrics {
            profile: match row.profile {
                ProfileName::Baseline => RddlProfile::Baseline,
                ProfileName::Rddl => RddlProfile::Rddl,
            },
            precision: row.precision,
            recall: row.recall,
            pr_auc: row.pr_auc,
            hits_at_10: row.hits_at_10,
            positives: row.positives as u64,
            negatives: row.negatives as u64,
        };
        Ok(())
    })
}

/// Task name of row `i`, owned by the results handle; null when out of
/// range.
///
/// # Safety
/// `r` must be a live results handle.
#[no_mangle]
pub unsafe extern "C" fn rddl_results_task(r: *const RddlResults, i: usize) -> *const c_char {
    r.as_ref()
        .and_then(|r| r.tasks.get(i))
        .map_or(ptr::null(), |c| c.as_ptr())
}

/// # Safety
/// `r` must be null or a results handle, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rddl_results_free(r: *mut RddlResults) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Loads a model checkpoint written by the train stage.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rddl_model_load(
    path: *const c_char,
    out: *mut *mut RddlModel,
) -> RddlStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let f = std::fs::File::open(path)
            .map_err(|e| Failure(RddlStatus::Io, format!("{path}: {e}")))?;
        let model = read_checkpoint(std::io::BufReader::new(f))
            .map_err(|e| Failure(RddlStatus::Io, format!("{path}: {e}")))?;
        *out = boxed(RddlModel(model));
        Ok(())
    })
}

/// Scores `num_paths` token sequences of `path_len` tokens each, stored
/// row-major in `tokens`, against `relation`.
///
/// # Safety
/// `model` must be a live model handle, `tokens` must hold
/// `num_paths * path_len` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rddl_model_score(
    model: *const RddlModel,
    tokens: *const u32,
    num_paths: usize,
    path_len: usize,
    relation: u32,
    out: *mut f64,
) -> RddlStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        let model = &ref_arg(model, "model")?.0;
        let n = num_paths
            .checked_mul(path_len)
            .ok_or_else(|| Failure::arg("token count overflows"))?;
        let flat = slice_arg(tokens, n, "tokens")?;
        let paths: Vec<Vec<u32>> = if path_len == 0 {
            vec![Vec::new(); num_paths]
        } else {
            flat.chunks(path_len).map(<[u32]>::to_vec).collect()
        };
        *out = model
            .forward(&paths, relation)
            .map_err(|e| Failure::arg(e.to_string()))?
            .probability;
        Ok(())
    })
}

/// # Safety
/// `model` must be a live model handle.
#[no_mangle]
pub unsafe extern "C" fn rddl_model_num_paths(model: *const RddlModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.cfg.num_paths)
}

/// # Safety
/// `model` must be null or a model handle, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rddl_model_free(model: *mut RddlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Area under the precision-recall curve of `n` scores with 0/1 labels.
///
/// # Safety
/// `scores` and `labels` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rddl_pr_auc(
    scores: *const f64,
    labels: *const u8,
    n: usize,
    out: *mut f64,
) -> RddlStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        let s = slice_arg(scores, n, "scores")?;
        let l = slice_arg(labels, n, "labels")?;
        let scored: Vec<(f64, bool)> = s.iter().zip(l).map(|(&s, &l)| (s, l != 0)).collect();
        *out = pr_auc(&scored).map_err(|e| Failure::arg(e.to_string()))?;
        Ok(())
    })
}

/// Fraction of positives ranked within the top `k` against all negatives,
/// ties counted against the positive.
///
/// # Safety
/// `positives` must hold `n_pos` values and `negatives` `n_neg`; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn rddl_hits_at_k(
    positives: *const f64,
    n_pos: usize,
    negatives: *const f64,
    n_neg: usize,
    k: usize,
    out: *mut f64,
) -> RddlStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        let p = slice_arg(positives, n_pos, "positives")?;
        let n = slice_arg(negatives, n_neg, "negatives")?;
        if p.is_empty() {
            return Err(Failure::arg("no positives"));
        }
        *out = hits_at_k(p, n, k);
        Ok(())
    })
}
