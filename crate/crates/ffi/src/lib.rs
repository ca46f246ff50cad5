//! C ABI over `dxcover`.
//!
//! Every fallible function returns a [`DxStatus`]; on failure the message is
//! available from [`dx_last_error`] on the same thread. Strings returned
//! through `char **` out-parameters are owned by the caller and must be
//! released with [`dx_string_free`]. Handles are opaque and released with
//! their matching `_free` function.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use dxcover::dataset::encode_findings;
use dxcover::ehr::{Finding, SymptomUniverse};
use dxcover::metrics::{rank_probabilities, top_k_accuracy, RankedPrediction};
use dxcover::models::{forward, Dropout, ModelParams};
use dxcover::text::{FindingExtractor, NegationRules};
use dxcover::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    Parse = 5,
    Model = 6,
    Panic = 7,
}

/// Result of an OLS slope fit.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DxSlopeFit {
    pub beta_d: f64,
    pub beta_m: f64,
    pub std_err: f64,
    pub t_value: f64,
    pub p_value: f64,
    pub n_points: usize,
}

/// A loaded model together with the universe it was trained on.
pub struct DxModel {
    params: ModelParams,
    universe: SymptomUniverse,
    labels: Vec<CString>,
}

/// Symptom matcher and negation rules over one universe.
pub struct DxExtractor {
    extractor: FindingExtractor,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("nul bytes removed"));
}

fn status_of(e: &Error) -> DxStatus {
    match e {
        Error::Io { .. } => DxStatus::Io,
        Error::Parse { .. } | Error::Json(_) | Error::Toml(_) => DxStatus::Parse,
        Error::Artifact(_) => DxStatus::Model,
        Error::Run { source, .. } => status_of(source),
        _ => DxStatus::InvalidArgument,
    }
}

struct Failure(DxStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail(status: DxStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            DxStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DxStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(DxStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(DxStatus::InvalidUtf8, format!("`{name}` is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(DxStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(DxStatus::NullPointer, format!("`{name}` is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(DxStatus::NullPointer, format!("`{name}` is null")));
    }
    out.write(value);
    Ok(())
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("nul bytes removed")
        .into_raw()
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn dx_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dx_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn dx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a model artifact. The universe is rebuilt from the symptom list
/// stored in the artifact.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dx_model_load(path: *const c_char, out: *mut *mut DxModel) -> DxStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(DxStatus::NullPointer, "`out` is null"));
        }
        out.write(ptr::null_mut());
        let path = str_arg(path, "path")?;
        let params = ModelParams::load(Path::new(path))?;
        let universe = SymptomUniverse::from_names(params.symptoms.iter().cloned())?;
        if 2 * universe.len() != params.spec.input_dim {
            return Err(fail(
                DxStatus::Model,
                "model has no symptom list matching its input size",
            ));
        }
        let labels = params
            .label_index
            .iter()
            .map(|l| CString::new(l.replace('\0', " ")).expect("nul bytes removed"))
            .collect();
        out.write(Box::into_raw(Box::new(DxModel {
            params,
            universe,
            labels,
        })));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from [`dx_model_load`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn dx_model_free(model: *mut DxModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of diagnosis labels; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dx_model_n_labels(model: *const DxModel) -> usize {
    model.as_ref().map_or(0, |m| m.labels.len())
}

/// Label `index`, borrowed from the handle; null when out of range.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dx_model_label(model: *const DxModel, index: usize) -> *const c_char {
    match model.as_ref().and_then(|m| m.labels.get(index)) {
        Some(l) => l.as_ptr(),
        None => ptr::null(),
    }
}

/// Class probabilities for a feature vector given as active indices into the
/// `2K` input (`i` = symptom `i` present, `K + i` = absent). Writes
/// `dx_model_n_labels` values into `probs`.
///
/// # Safety
/// `active` must hold `n_active` values; `probs` must hold `probs_len`.
#[no_mangle]
pub unsafe extern "C" fn dx_model_predict(
    model: *const DxModel,
    active: *const u32,
    n_active: usize,
    probs: *mut f64,
    probs_len: usize,
) -> DxStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let active = slice_arg(active, n_active, "active")?;
        if probs.is_null() {
            return Err(fail(DxStatus::NullPointer, "`probs` is null"));
        }
        if probs_len < m.labels.len() {
            return Err(fail(
                DxStatus::InvalidArgument,
                format!("`probs` holds {probs_len} values, {} needed", m.labels.len()),
            ));
        }
        let z = dxcover::dataset::FeatureVector::from_indices(active.to_vec(), m.params.spec.input_dim)?;
        let p = forward(&m.params, &z, Dropout::Off)?;
        std::slice::from_raw_parts_mut(probs, p.len()).copy_from_slice(&p);
        Ok(())
    })
}

/// Ranks diagnoses for findings given as a JSON array of
/// `{"symptom": ..., "polarity": "present"|"absent"}`. Symptoms outside the
/// model's universe are ignored. Writes a JSON array of the best `k`
/// `{"label": ..., "probability": ...}` objects to `out_json`.
///
/// # Safety
/// `findings_json` must be a NUL-terminated string; `out_json` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn dx_model_rank_json(
    model: *const DxModel,
    findings_json: *const c_char,
    k: usize,
    out_json: *mut *mut c_char,
) -> DxStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let text = str_arg(findings_json, "findings_json")?;
        if out_json.is_null() {
            return Err(fail(DxStatus::NullPointer, "`out_json` is null"));
        }
        let findings: Vec<Finding> = serde_json::from_str(text).map_err(Error::from)?;
        let known: BTreeSet<Finding> = findings
            .into_iter()
            .filter(|f| m.universe.contains(&f.symptom))
            .collect();
        let z = encode_findings(&known, &m.universe)?;
        let p = forward(&m.params, &z, Dropout::Off)?;
        let ranked: Vec<serde_json::Value> = rank_probabilities(&p)
            .into_iter()
            .take(k)
            .map(|i| serde_json::json!({ "label": m.params.label_index[i], "probability": p[i] }))
            .collect();
        out_json.write(into_c_string(serde_json::Value::Array(ranked).to_string()));
        Ok(())
    })
}

/// Builds a finding extractor with the default negation rules over the
/// symptom universe stored at `universe_path` (JSON).
///
/// # Safety
/// `universe_path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dx_extractor_new(universe_path: *const c_char, out: *mut *mut DxExtractor) -> DxStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(DxStatus::NullPointer, "`out` is null"));
        }
        out.write(ptr::null_mut());
        let path = str_arg(universe_path, "universe_path")?;
        let universe = SymptomUniverse::load(Path::new(path))?;
        let extractor = FindingExtractor::new(&universe, &NegationRules::default());
        out.write(Box::into_raw(Box::new(DxExtractor { extractor })));
        Ok(())
    })
}

/// Releases an extractor. Null is ignored.
///
/// # Safety
/// `extractor` must come from [`dx_extractor_new`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn dx_extractor_free(extractor: *mut DxExtractor) {
    if !extractor.is_null() {
        drop(Box::from_raw(extractor));
    }
}

/// Extracts findings from a clinical note as a JSON array of
/// `{"symptom", "polarity"}` objects.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dx_extract_findings_json(
    extractor: *const DxExtractor,
    text: *const c_char,
    out_json: *mut *mut c_char,
) -> DxStatus {
    guard(|| {
        let ex = ref_arg(extractor, "extractor")?;
        let text = str_arg(text, "text")?;
        if out_json.is_null() {
            return Err(fail(DxStatus::NullPointer, "`out_json` is null"));
        }
        let findings: Vec<Finding> = ex.extractor.findings(text).into_iter().collect();
        let json = serde_json::to_string(&findings).map_err(Error::from)?;
        out_json.write(into_c_string(json));
        Ok(())
    })
}

/// OLS fit of `y = beta_d * x + beta_m` with the two-sided p-value of the
/// slope.
///
/// # Safety
/// `x` and `y` must each hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dx_fit_slope(x: *const f64, y: *const f64, n: usize, out: *mut DxSlopeFit) -> DxStatus {
    guard(|| {
        let x = slice_arg(x, n, "x")?;
        let y = slice_arg(y, n, "y")?;
        let points: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
        let f = dxcover::stats::fit_slope(&points)?;
        write_out(
            out,
            DxSlopeFit {
                beta_d: f.beta_d,
                beta_m: f.beta_m,
                std_err: f.std_err,
                t_value: f.t_value,
                p_value: f.p_value,
                n_points: f.n_points,
            },
            "out",
        )
    })
}

/// Top-`k` accuracy of `n_cases` rankings stored row-major in `ranked`
/// (`n_cases * n_labels` label indices, best first) against `gold`.
///
/// # Safety
/// `ranked` must hold `n_cases * n_labels` values and `gold` `n_cases`;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dx_top_k_accuracy(
    ranked: *const u32,
    gold: *const u32,
    n_cases: usize,
    n_labels: usize,
    k: usize,
    out: *mut f64,
) -> DxStatus {
    guard(|| {
        let total = n_cases
            .checked_mul(n_labels)
            .ok_or_else(|| fail(DxStatus::InvalidArgument, "n_cases * n_labels overflows"))?;
        let ranked = slice_arg(ranked, total, "ranked")?;
        let gold = slice_arg(gold, n_cases, "gold")?;
        let preds: Vec<RankedPrediction> = ranked
            .chunks(n_labels.max(1))
            .take(n_cases)
            .map(|row| RankedPrediction {
                case_id: String::new(),
                ranked_labels: row.iter().map(|&l| l as usize).collect(),
            })
            .collect();
        let gold: Vec<usize> = gold.iter().map(|&g| g as usize).collect();
        let acc = top_k_accuracy(&preds, &gold, &[k])?;
        write_out(out, acc[&k], "out")
    })
}
