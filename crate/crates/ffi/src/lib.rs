//! C ABI for `mtmeval`.
//!
//! Every function returns an [`MtmStatus`]; results are written through out
//! pointers. On failure, [`mtm_last_error`] returns a message for the calling
//! thread. Objects are opaque handles released by their `*_free` function,
//! and strings returned by the library are released with [`mtm_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use mtmeval::corpus::{load_corpus, CorpusError, CorpusPaths, EvaluationSet};
use mtmeval::metaeval::{
    kendall_tau, pairwise_accuracy_vec, perm_both_test, relative_change, robustness_report,
    segment_tau, RobustnessOptions, StatError,
};
use mtmeval::metrics::{
    as_strs, chrf, prism_score, sentence_bleu, sequence_score, Tokenizer, ToyScorer,
};

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// malformed input file or text
    Parse = 3,
    /// well-formed input that cannot support the computation
    Data = 4,
    /// the statistic is undefined for this input (e.g. constant scores)
    Undefined = 5,
    /// NaN or infinity encountered
    Numeric = 6,
    Io = 7,
    Panic = 8,
}

/// Loaded evaluation corpus.
pub struct MtmCorpus {
    set: EvaluationSet,
}

/// Loaded sequence scorer.
pub struct MtmScorer {
    scorer: ToyScorer,
    tokenizer: Tokenizer,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Failure(MtmStatus, String);

impl From<StatError> for Failure {
    fn from(e: StatError) -> Self {
        let status = match e {
            StatError::Undefined(_) => MtmStatus::Undefined,
            StatError::NonFinite => MtmStatus::Numeric,
            StatError::LengthMismatch(..)
            | StatError::TooFew { .. }
            | StatError::InvalidArgument(_) => MtmStatus::InvalidArgument,
            _ => MtmStatus::Data,
        };
        Failure(status, e.to_string())
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        let status = match e {
            CorpusError::Io { .. } => MtmStatus::Io,
            CorpusError::Integrity { .. } => MtmStatus::Data,
            _ => MtmStatus::Parse,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(message: &str) -> Failure {
    Failure(MtmStatus::InvalidArgument, message.to_string())
}

/// Runs `body`, translating errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> MtmStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            MtmStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MtmStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(MtmStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(MtmStatus::Parse, format!("`{name}` is not valid UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, n: usize, name: &str) -> Result<&'a [f64], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure(MtmStatus::NullPointer, format!("`{name}` is null")));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

fn check_out<T>(out: *mut T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(
            MtmStatus::NullPointer,
            "output pointer is null".into(),
        ));
    }
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    check_out(out)?;
    out.write(value);
    Ok(())
}

/// Message describing the last failed call on this thread, or null. Valid
/// until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn mtm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mtm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn mtm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Kendall tau-b between two score vectors oriented the same way.
///
/// # Safety
/// `a` and `b` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mtm_kendall_tau(
    a: *const f64,
    b: *const f64,
    n: usize,
    out: *mut f64,
) -> MtmStatus {
    guard(|| {
        check_out(out)?;
        let tau = kendall_tau(slice(a, n, "a")?, slice(b, n, "b")?)?;
        write(out, tau)
    })
}

/// Segment-level tau between metric scores and MQM penalties (lower is
/// better); penalties are negated internally.
///
/// # Safety
/// `metric` and `penalty` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mtm_segment_tau(
    metric: *const f64,
    penalty: *const f64,
    n: usize,
    out: *mut f64,
) -> MtmStatus {
    guard(|| {
        check_out(out)?;
        let tau = segment_tau(slice(metric, n, "metric")?, slice(penalty, n, "penalty")?)?;
        write(out, tau)
    })
}

/// System-level pairwise accuracy; `human` is oriented higher-is-better.
///
/// # Safety
/// `metric` and `human` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mtm_pairwise_accuracy(
    metric: *const f64,
    human: *const f64,
    n: usize,
    out: *mut f64,
) -> MtmStatus {
    guard(|| {
        check_out(out)?;
        let acc = pairwise_accuracy_vec(slice(metric, n, "metric")?, slice(human, n, "human")?)?;
        write(out, acc)
    })
}

/// perm-both p-value for the difference in segment-level tau of two metrics
/// against the same MQM penalties.
///
/// # Safety
/// The three arrays must hold `n` readable doubles; `out_p` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mtm_perm_both_segment_tau(
    metric_a: *const f64,
    metric_b: *const f64,
    penalty: *const f64,
    n: usize,
    n_resamples: usize,
    seed: u64,
    out_p: *mut f64,
) -> MtmStatus {
    guard(|| {
        check_out(out_p)?;
        let test = perm_both_test(
            slice(metric_a, n, "metric_a")?,
            slice(metric_b, n, "metric_b")?,
            slice(penalty, n, "penalty")?,
            segment_tau,
            n_resamples,
            seed,
        )?;
        write(out_p, test.p_value)
    })
}

/// `100 (mt - std) / std` rounded to one decimal; `Undefined` when `std` is 0.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mtm_relative_change(std: f64, mt: f64, out: *mut f64) -> MtmStatus {
    guard(|| {
        let change = relative_change(std, mt).ok_or_else(|| {
            Failure(
                MtmStatus::Undefined,
                "relative change against a zero or non-finite value".into(),
            )
        })?;
        write(out, change)
    })
}

/// Smoothed sentence BLEU (0 to 100) over whitespace tokens.
///
/// # Safety
/// `hyp` and `reference` must be NUL-terminated UTF-8; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mtm_sentence_bleu(
    hyp: *const c_char,
    reference: *const c_char,
    out: *mut f64,
) -> MtmStatus {
    guard(|| {
        let t = Tokenizer::default();
        let h = t.tokenize(text(hyp, "hyp")?);
        let r = t.tokenize(text(reference, "reference")?);
        write(out, sentence_bleu(&as_strs(&h), &as_strs(&r)))
    })
}

/// chrF (0 to 100).
///
/// # Safety
/// `hyp` and `reference` must be NUL-terminated UTF-8; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mtm_chrf(
    hyp: *const c_char,
    reference: *const c_char,
    out: *mut f64,
) -> MtmStatus {
    guard(|| write(out, chrf(text(hyp, "hyp")?, text(reference, "reference")?)))
}

/// Loads a corpus directory holding the four TSV tables.
///
/// # Safety
/// `dir` must be NUL-terminated UTF-8; `out` must be writable. Release the
/// handle with [`mtm_corpus_free`].
#[no_mangle]
pub unsafe extern "C" fn mtm_corpus_load(
    dir: *const c_char,
    out: *mut *mut MtmCorpus,
) -> MtmStatus {
    guard(|| {
        check_out(out)?;
        let set = load_corpus(&CorpusPaths::in_dir(Path::new(text(dir, "dir")?)))?;
        write(out, Box::into_raw(Box::new(MtmCorpus { set })))
    })
}

/// # Safety
/// `corpus` must be null or a handle from [`mtm_corpus_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mtm_corpus_free(corpus: *mut MtmCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Segment, system translation, reference and rating counts.
///
/// # Safety
/// `corpus` must be a live handle; every out pointer must be writable.
#[no_mangle]
pub unsafe extern "C" fn mtm_corpus_counts(
    corpus: *const MtmCorpus,
    segments: *mut usize,
    translations: *mut usize,
    references: *mut usize,
    ratings: *mut usize,
) -> MtmStatus {
    guard(|| {
        let c = corpus
            .as_ref()
            .ok_or_else(|| Failure(MtmStatus::NullPointer, "`corpus` is null".into()))?;
        write(segments, c.set.segment_count())?;
        write(translations, c.set.translation_count())?;
        write(references, c.set.reference_count())?;
        write(ratings, c.set.rating_count())
    })
}

/// Loads a scorer saved by `mtmeval train`.
///
/// # Safety
/// `path` must be NUL-terminated UTF-8; `out` must be writable. Release the
/// handle with [`mtm_scorer_free`].
#[no_mangle]
pub unsafe extern "C" fn mtm_scorer_load(
    path: *const c_char,
    out: *mut *mut MtmScorer,
) -> MtmStatus {
    guard(|| {
        check_out(out)?;
        let scorer = ToyScorer::load(Path::new(text(path, "path")?)).map_err(|e| {
            let status = match e {
                mtmeval::metrics::ToyScorerError::Io { .. } => MtmStatus::Io,
                _ => MtmStatus::Parse,
            };
            Failure(status, e.to_string())
        })?;
        let handle = MtmScorer {
            scorer,
            tokenizer: Tokenizer::default(),
        };
        write(out, Box::into_raw(Box::new(handle)))
    })
}

/// # Safety
/// `scorer` must be null or a handle from [`mtm_scorer_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mtm_scorer_free(scorer: *mut MtmScorer) {
    if !scorer.is_null() {
        drop(Box::from_raw(scorer));
    }
}

/// Sequence score `S(y | x)`: mean base-2 log-probability per token of `y`,
/// end-of-sequence included.
///
/// # Safety
/// `scorer` must be a live handle; `y`, `x` NUL-terminated UTF-8; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mtm_scorer_sequence_score(
    scorer: *const MtmScorer,
    y: *const c_char,
    x: *const c_char,
    out: *mut f64,
) -> MtmStatus {
    guard(|| {
        let s = scorer
            .as_ref()
            .ok_or_else(|| Failure(MtmStatus::NullPointer, "`scorer` is null".into()))?;
        let y = s.tokenizer.tokenize(text(y, "y")?);
        let x = s.tokenizer.tokenize(text(x, "x")?);
        write(out, sequence_score(&s.scorer, &as_strs(&y), &as_strs(&x)))
    })
}

/// Prism score: `½ S(hyp | ref) + ½ S(ref | hyp)`.
///
/// # Safety
/// `scorer` must be a live handle; `hyp`, `reference` NUL-terminated UTF-8;
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mtm_scorer_prism(
    scorer: *const MtmScorer,
    hyp: *const c_char,
    reference: *const c_char,
    out: *mut f64,
) -> MtmStatus {
    guard(|| {
        let s = scorer
            .as_ref()
            .ok_or_else(|| Failure(MtmStatus::NullPointer, "`scorer` is null".into()))?;
        let h = s.tokenizer.tokenize(text(hyp, "hyp")?);
        let r = s.tokenizer.tokenize(text(reference, "reference")?);
        write(out, prism_score(&s.scorer, &as_strs(&h), &as_strs(&r)))
    })
}

/// Robustness report (JSON) for BLEU and chrF on a loaded corpus, plus the
/// Prism score of `scorer` when it is not null.
///
/// # Safety
/// `corpus` must be a live handle, `scorer` null or a live handle and
/// `out_json` writable. Free the returned string with [`mtm_string_free`].
#[no_mangle]
pub unsafe extern "C" fn mtm_robustness_report_json(
    corpus: *const MtmCorpus,
    scorer: *const MtmScorer,
    seed: u64,
    n_resamples: usize,
    out_json: *mut *mut c_char,
) -> MtmStatus {
    guard(|| {
        check_out(out_json)?;
        let c = corpus
            .as_ref()
            .ok_or_else(|| Failure(MtmStatus::NullPointer, "`corpus` is null".into()))?;
        if n_resamples == 0 {
            return Err(invalid("n_resamples must be >= 1"));
        }
        let bleu = mtmeval::metrics::BleuMetric::default();
        let chrf = mtmeval::metrics::ChrfMetric;
        let prism = scorer
            .as_ref()
            .map(|s| mtmeval::metrics::PrismMetric::new("prism", s.scorer.clone(), s.tokenizer));
        let mut metrics: Vec<&dyn mtmeval::metrics::Metric> = vec![&bleu, &chrf];
        if let Some(p) = &prism {
            metrics.push(p);
        }
        let options = RobustnessOptions {
            n_resamples,
            ..RobustnessOptions::new(seed)
        };
        let report = robustness_report(&c.set, &metrics, &options)?;
        let json = serde_json::to_string_pretty(&report)
            .map_err(|e| Failure(MtmStatus::Data, e.to_string()))?;
        let s = CString::new(json).map_err(|_| invalid("report contains NUL"))?;
        write(out_json, s.into_raw())
    })
}
