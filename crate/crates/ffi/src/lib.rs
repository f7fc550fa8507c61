//! C ABI for the comve harness.
//!
//! Every function returns a [`ComveStatus`]. On failure the message is
//! available from [`comve_last_error`] on the same thread until the next
//! call. Objects are opaque handles created by `*_new` or `*_load`
//! functions and released with the matching `*_free`; results are written
//! through out-pointers. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use comve::choice_scoring::{self, LossTable};
use comve::ensemble::{self, Objective, ProbabilityMatrix, SearchOptions};
use comve::metrics::{self, PredictionVector};

/// Outcome of an FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComveStatus {
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// An argument was malformed: bad UTF-8, a zero count, an unknown enum.
    InvalidArgument = 2,
    /// A file could not be read or written.
    Io = 3,
    /// Input data failed validation.
    Invalid = 4,
    /// An external process broke its protocol.
    Contract = 5,
    /// An internal panic was caught.
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComveObjective {
    Accuracy = 0,
    F1 = 1,
}

/// Per-model class probabilities.
pub struct ComveProbMatrix(ProbabilityMatrix);

/// Labels keyed by example id (gold answers or predictions).
pub struct ComveLabels(PredictionVector);

/// Per-option losses for three-way choice examples.
pub struct ComveLossTable(LossTable);

/// Outcome of a subset search.
pub struct ComveEnsembleResult {
    members: Vec<CString>,
    score: f64,
    subsets_evaluated: u64,
    averaged: ProbabilityMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: ComveStatus,
    message: String,
}

impl Failure {
    fn new(status: ComveStatus, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }
}

impl From<comve::Error> for Failure {
    fn from(e: comve::Error) -> Self {
        let status = if e.is_contract() {
            ComveStatus::Contract
        } else if matches!(e, comve::Error::Io { .. }) {
            ComveStatus::Io
        } else {
            ComveStatus::Invalid
        };
        Failure::new(status, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ComveStatus {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ComveStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal panic: {message}"));
            ComveStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::new(ComveStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

unsafe fn string<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    non_null(p, name)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(ComveStatus::InvalidArgument, format!("{name} is not valid UTF-8")))
}

unsafe fn strings(p: *const *const c_char, n: usize, name: &str) -> Result<Vec<String>, Failure> {
    if n == 0 {
        return Ok(Vec::new());
    }
    non_null(p, name)?;
    std::slice::from_raw_parts(p, n)
        .iter()
        .enumerate()
        .map(|(i, &s)| string(s, &format!("{name}[{i}]")).map(str::to_string))
        .collect()
}

unsafe fn slice<'a, T>(p: *const T, n: usize, name: &str) -> Result<&'a [T], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    non_null(p, name)?;
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn write<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    non_null(out, name)?;
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn comve_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn comve_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Free a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn comve_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Corpus BLEU (0-100). `refs` holds `n * refs_per_hyp` entries, row by
/// row; null entries are skipped so hypotheses may have fewer references.
///
/// # Safety
/// Arrays must hold the stated number of valid NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn comve_corpus_bleu(
    hyps: *const *const c_char,
    n: usize,
    refs: *const *const c_char,
    refs_per_hyp: usize,
    out_score: *mut f64,
) -> ComveStatus {
    guard(|| {
        let hyps = strings(hyps, n, "hyps")?;
        let flat = slice(refs, n * refs_per_hyp, "refs")?;
        let mut grouped = Vec::with_capacity(n);
        for (i, row) in flat.chunks(refs_per_hyp.max(1)).enumerate().take(n) {
            let mut group = Vec::new();
            for (j, &r) in row.iter().enumerate() {
                if !r.is_null() {
                    group.push(string(r, &format!("refs[{}]", i * refs_per_hyp + j))?.to_string());
                }
            }
            grouped.push(group);
        }
        grouped.resize(n, Vec::new());
        let bleu = metrics::corpus_bleu(&hyps, &grouped)?;
        write(out_score, bleu.score, "out_score")
    })
}

/// Pearson correlation of two series of length `n`.
///
/// # Safety
/// `xs` and `ys` must point to `n` doubles each.
#[no_mangle]
pub unsafe extern "C" fn comve_pearson(xs: *const f64, ys: *const f64, n: usize, out_r: *mut f64) -> ComveStatus {
    guard(|| {
        let r = metrics::pearson(slice(xs, n, "xs")?, slice(ys, n, "ys")?)?;
        write(out_r, r, "out_r")
    })
}

/// Normalize a sentence for round-trip comparison. The result must be
/// released with [`comve_string_free`].
///
/// # Safety
/// `sentence` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn comve_normalize(sentence: *const c_char, out: *mut *mut c_char) -> ComveStatus {
    guard(|| {
        let normalized = comve::augment::normalize(string(sentence, "sentence")?)?;
        let c = CString::new(normalized)
            .map_err(|_| Failure::new(ComveStatus::InvalidArgument, "sentence contains NUL"))?;
        write(out, c.into_raw(), "out")
    })
}

/// Build a probability matrix from `rows * classes` row-major values.
///
/// # Safety
/// `ids` must hold `rows` strings and `values` `rows * classes` doubles.
#[no_mangle]
pub unsafe extern "C" fn comve_prob_matrix_new(
    model_id: *const c_char,
    ids: *const *const c_char,
    values: *const f64,
    rows: usize,
    classes: usize,
    out: *mut *mut ComveProbMatrix,
) -> ComveStatus {
    guard(|| {
        if classes == 0 {
            return Err(Failure::new(ComveStatus::InvalidArgument, "classes must be positive"));
        }
        let model_id = string(model_id, "model_id")?;
        let ids = strings(ids, rows, "ids")?;
        let values = slice(values, rows * classes, "values")?;
        let matrix = ProbabilityMatrix::new(
            model_id,
            ids.into_iter().zip(values.chunks(classes).map(<[f64]>::to_vec)),
        )?;
        write(out, Box::into_raw(Box::new(ComveProbMatrix(matrix))), "out")
    })
}

/// Load a probability file; the model id is the file stem.
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn comve_prob_matrix_load(path: *const c_char, out: *mut *mut ComveProbMatrix) -> ComveStatus {
    guard(|| {
        let matrix = ensemble::load_probabilities(string(path, "path")?)?;
        write(out, Box::into_raw(Box::new(ComveProbMatrix(matrix))), "out")
    })
}

/// # Safety
/// `m` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn comve_prob_matrix_free(m: *mut ComveProbMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Labels from parallel arrays of ids and class indices.
///
/// # Safety
/// `ids` and `labels` must hold `n` entries each.
#[no_mangle]
pub unsafe extern "C" fn comve_labels_new(
    ids: *const *const c_char,
    labels: *const usize,
    n: usize,
    out: *mut *mut ComveLabels,
) -> ComveStatus {
    guard(|| {
        let ids = strings(ids, n, "ids")?;
        let labels = slice(labels, n, "labels")?;
        let v = PredictionVector::new(ids.into_iter().zip(labels.iter().copied()).collect())?;
        write(out, Box::into_raw(Box::new(ComveLabels(v))), "out")
    })
}

/// Load an answers CSV (`id,label`) with labels in `0..classes`.
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn comve_labels_load_answers(
    path: *const c_char,
    classes: usize,
    out: *mut *mut ComveLabels,
) -> ComveStatus {
    guard(|| {
        let v = comve::dataset::load_answers(string(path, "path")?, classes)?;
        write(out, Box::into_raw(Box::new(ComveLabels(v))), "out")
    })
}

/// Number of labels held.
///
/// # Safety
/// `labels` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn comve_labels_len(labels: *const ComveLabels, out: *mut usize) -> ComveStatus {
    guard(|| {
        non_null(labels, "labels")?;
        write(out, (*labels).0.len(), "out")
    })
}

/// Label of `id`; fails with `Invalid` when the id is absent.
///
/// # Safety
/// `labels` must be a live handle and `id` a valid string.
#[no_mangle]
pub unsafe extern "C" fn comve_labels_get(
    labels: *const ComveLabels,
    id: *const c_char,
    out: *mut usize,
) -> ComveStatus {
    guard(|| {
        non_null(labels, "labels")?;
        let id = string(id, "id")?;
        let label = (*labels)
            .0
            .get(id)
            .ok_or_else(|| Failure::new(ComveStatus::Invalid, format!("no label for id {id:?}")))?;
        write(out, label, "out")
    })
}

/// # Safety
/// `labels` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn comve_labels_free(labels: *mut ComveLabels) {
    if !labels.is_null() {
        drop(Box::from_raw(labels));
    }
}

/// Accuracy of `preds` against `golds`; both must cover the same ids.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn comve_accuracy(
    preds: *const ComveLabels,
    golds: *const ComveLabels,
    out: *mut f64,
) -> ComveStatus {
    guard(|| {
        non_null(preds, "preds")?;
        non_null(golds, "golds")?;
        write(out, metrics::accuracy(&(*preds).0, &(*golds).0)?, "out")
    })
}

/// Argmax predictions of a probability matrix.
///
/// # Safety
/// `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn comve_predict(m: *const ComveProbMatrix, out: *mut *mut ComveLabels) -> ComveStatus {
    guard(|| {
        non_null(m, "matrix")?;
        write(out, Box::into_raw(Box::new(ComveLabels(ensemble::predict(&(*m).0)))), "out")
    })
}

/// Exhaustive search for the subset of models whose averaged probabilities
/// score best. `workers` 0 uses all cores; `max_members` 0 means no limit.
///
/// # Safety
/// `matrices` must hold `k` live handles and `golds` must be live.
#[no_mangle]
pub unsafe extern "C" fn comve_ensemble_search(
    matrices: *const *const ComveProbMatrix,
    k: usize,
    golds: *const ComveLabels,
    objective: ComveObjective,
    workers: usize,
    max_members: usize,
    out: *mut *mut ComveEnsembleResult,
) -> ComveStatus {
    guard(|| {
        non_null(golds, "golds")?;
        let handles = slice(matrices, k, "matrices")?;
        let mut owned = Vec::with_capacity(k);
        for (i, &h) in handles.iter().enumerate() {
            non_null(h, &format!("matrices[{i}]"))?;
            owned.push((*h).0.clone());
        }
        let objective = match objective {
            ComveObjective::Accuracy => Objective::Accuracy,
            ComveObjective::F1 => Objective::F1,
        };
        let options = SearchOptions {
            workers: (workers > 0).then_some(workers),
            max_members: (max_members > 0).then_some(max_members),
        };
        let r = ensemble::search_best_subset(&owned, &(*golds).0, objective, &options)?;
        let members = r
            .member_ids
            .into_iter()
            .map(|id| CString::new(id).map_err(|_| Failure::new(ComveStatus::Invalid, "model id contains NUL")))
            .collect::<Result<_, _>>()?;
        let result = ComveEnsembleResult {
            members,
            score: r.dev_score,
            subsets_evaluated: r.subsets_evaluated,
            averaged: r.averaged,
        };
        write(out, Box::into_raw(Box::new(result)), "out")
    })
}

/// Objective value of the best subset.
///
/// # Safety
/// `r` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn comve_ensemble_result_score(r: *const ComveEnsembleResult, out: *mut f64) -> ComveStatus {
    guard(|| {
        non_null(r, "result")?;
        write(out, (*r).score, "out")
    })
}

/// Number of subsets scored during the search.
///
/// # Safety
/// `r` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn comve_ensemble_result_subsets_evaluated(
    r: *const ComveEnsembleResult,
    out: *mut u64,
) -> ComveStatus {
    guard(|| {
        non_null(r, "result")?;
        write(out, (*r).subsets_evaluated, "out")
    })
}

/// Number of models in the best subset.
///
/// # Safety
/// `r` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn comve_ensemble_result_member_count(
    r: *const ComveEnsembleResult,
    out: *mut usize,
) -> ComveStatus {
    guard(|| {
        non_null(r, "result")?;
        write(out, (*r).members.len(), "out")
    })
}

/// Model id of member `i` (sorted order). The string is owned by the result.
///
/// # Safety
/// `r` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn comve_ensemble_result_member(
    r: *const ComveEnsembleResult,
    i: usize,
    out: *mut *const c_char,
) -> ComveStatus {
    guard(|| {
        non_null(r, "result")?;
        let members = &(*r).members;
        let member = members.get(i).ok_or_else(|| {
            Failure::new(ComveStatus::InvalidArgument, format!("member index {i} out of range"))
        })?;
        write(out, member.as_ptr(), "out")
    })
}

/// Copy of the averaged probabilities of the best subset.
///
/// # Safety
/// `r` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn comve_ensemble_result_averaged(
    r: *const ComveEnsembleResult,
    out: *mut *mut ComveProbMatrix,
) -> ComveStatus {
    guard(|| {
        non_null(r, "result")?;
        write(out, Box::into_raw(Box::new(ComveProbMatrix((*r).averaged.clone()))), "out")
    })
}

/// # Safety
/// `r` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn comve_ensemble_result_free(r: *mut ComveEnsembleResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Build a loss table from `n` ids and `3 * n` losses, row by row.
///
/// # Safety
/// `ids` must hold `n` strings and `losses` `3 * n` doubles.
#[no_mangle]
pub unsafe extern "C" fn comve_loss_table_new(
    source_model: *const c_char,
    ids: *const *const c_char,
    losses: *const f64,
    n: usize,
    out: *mut *mut ComveLossTable,
) -> ComveStatus {
    guard(|| {
        let source = string(source_model, "source_model")?;
        let ids = strings(ids, n, "ids")?;
        let losses = slice(losses, 3 * n, "losses")?;
        let rows = ids.into_iter().zip(losses.chunks(3).map(|c| [c[0], c[1], c[2]]));
        write(out, Box::into_raw(Box::new(ComveLossTable(LossTable::new(source, rows)?))), "out")
    })
}

/// Load a loss file; the source model is the file stem.
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn comve_loss_table_load(path: *const c_char, out: *mut *mut ComveLossTable) -> ComveStatus {
    guard(|| {
        let table = choice_scoring::load_losses(string(path, "path")?)?;
        write(out, Box::into_raw(Box::new(ComveLossTable(table))), "out")
    })
}

/// # Safety
/// `t` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn comve_loss_table_free(t: *mut ComveLossTable) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Pick the option with the lowest loss for every row.
///
/// # Safety
/// `t` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn comve_select_by_min_loss(t: *const ComveLossTable, out: *mut *mut ComveLabels) -> ComveStatus {
    guard(|| {
        non_null(t, "table")?;
        let preds = choice_scoring::select_by_min_loss(&(*t).0);
        write(out, Box::into_raw(Box::new(ComveLabels(preds))), "out")
    })
}
