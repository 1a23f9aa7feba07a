use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use mtmeval::metaeval::{kendall_tau, robustness_report, RobustnessOptions};
use mtmeval::metrics::{BleuMetric, ChrfMetric, Metric, ToyScorer};
use mtmeval::synthetic::{generate, SyntheticConfig};
use mtmeval_ffi::*;

fn last_error() -> String {
    let p = mtm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn small_config() -> SyntheticConfig {
    SyntheticConfig {
        lang_pairs: vec!["en-de".parse().unwrap()],
        segments: 20,
        systems: 4,
        seed: 3,
        ..Default::default()
    }
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(mtm_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn kendall_tau_matches_the_library() {
    let a = [1.0, 2.0, 3.0, 4.0, 4.0];
    let b = [1.0, 3.0, 2.0, 4.0, 5.0];
    let mut out = f64::NAN;
    let status = unsafe { mtm_kendall_tau(a.as_ptr(), b.as_ptr(), a.len(), &mut out) };
    assert_eq!(status, MtmStatus::Ok);
    assert_eq!(out, kendall_tau(&a, &b).unwrap());
    assert!(mtm_last_error().is_null());
}

#[test]
fn status_codes_and_messages() {
    let a = [1.0, 1.0, 1.0];
    let b = [1.0, 2.0, 3.0];
    let mut out = 0.0;
    let status = unsafe { mtm_kendall_tau(a.as_ptr(), b.as_ptr(), 3, &mut out) };
    assert_eq!(status, MtmStatus::Undefined);
    assert!(!last_error().is_empty());

    let nan = [1.0, f64::NAN, 3.0];
    assert_eq!(
        unsafe { mtm_kendall_tau(nan.as_ptr(), b.as_ptr(), 3, &mut out) },
        MtmStatus::Numeric
    );
    assert_eq!(
        unsafe { mtm_kendall_tau(ptr::null(), b.as_ptr(), 3, &mut out) },
        MtmStatus::NullPointer
    );
    assert_eq!(
        unsafe { mtm_kendall_tau(a.as_ptr(), b.as_ptr(), 3, ptr::null_mut()) },
        MtmStatus::NullPointer
    );
    assert_eq!(
        unsafe { mtm_kendall_tau(a.as_ptr(), b.as_ptr(), 1, &mut out) },
        MtmStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { mtm_relative_change(0.0, 1.0, &mut out) },
        MtmStatus::Undefined
    );
}

#[test]
fn segment_tau_and_accuracy_orientation() {
    let metric = [0.9, 0.5, 0.1];
    let penalty = [0.0, 1.0, 5.0];
    let mut out = 0.0;
    assert_eq!(
        unsafe { mtm_segment_tau(metric.as_ptr(), penalty.as_ptr(), 3, &mut out) },
        MtmStatus::Ok
    );
    assert_eq!(out, 1.0);
    let human = [3.0, 2.0, 1.0];
    assert_eq!(
        unsafe { mtm_pairwise_accuracy(metric.as_ptr(), human.as_ptr(), 3, &mut out) },
        MtmStatus::Ok
    );
    assert_eq!(out, 1.0);
    assert_eq!(
        unsafe { mtm_relative_change(24.9, 24.4, &mut out) },
        MtmStatus::Ok
    );
    assert_eq!(out, -2.0);
}

#[test]
fn perm_both_identical_metrics() {
    let m: Vec<f64> = (0..30).map(|i| ((i * 7) % 11) as f64).collect();
    let h: Vec<f64> = (0..30).map(|i| ((i * 5) % 13) as f64).collect();
    let mut p = 0.0;
    let status = unsafe {
        mtm_perm_both_segment_tau(m.as_ptr(), m.as_ptr(), h.as_ptr(), m.len(), 200, 1, &mut p)
    };
    assert_eq!(status, MtmStatus::Ok);
    assert_eq!(p, 1.0);
}

#[test]
fn sentence_metrics() {
    let h = CString::new("a b c d").unwrap();
    let mut out = 0.0;
    assert_eq!(
        unsafe { mtm_sentence_bleu(h.as_ptr(), h.as_ptr(), &mut out) },
        MtmStatus::Ok
    );
    assert!((out - 100.0).abs() < 1e-9);
    assert_eq!(
        unsafe { mtm_chrf(h.as_ptr(), h.as_ptr(), &mut out) },
        MtmStatus::Ok
    );
    assert!((out - 100.0).abs() < 1e-9);
    let bad = [0xffu8, 0];
    assert_eq!(
        unsafe { mtm_chrf(bad.as_ptr().cast(), h.as_ptr(), &mut out) },
        MtmStatus::Parse
    );
}

fn cstr(p: &Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

#[test]
fn corpus_handle_lifecycle() {
    let dir = tempfile::tempdir().unwrap();
    let synthetic = generate(&small_config());
    synthetic.write(dir.path()).unwrap();
    let set = synthetic.parse().unwrap();

    let mut corpus = ptr::null_mut();
    assert_eq!(
        unsafe { mtm_corpus_load(cstr(dir.path()).as_ptr(), &mut corpus) },
        MtmStatus::Ok
    );
    let (mut s, mut t, mut r, mut q) = (0, 0, 0, 0);
    assert_eq!(
        unsafe { mtm_corpus_counts(corpus, &mut s, &mut t, &mut r, &mut q) },
        MtmStatus::Ok
    );
    assert_eq!(
        (s, t, r, q),
        (
            set.segment_count(),
            set.translation_count(),
            set.reference_count(),
            set.rating_count()
        )
    );
    unsafe { mtm_corpus_free(corpus) };
    unsafe { mtm_corpus_free(ptr::null_mut()) };

    let missing = dir.path().join("nope");
    let mut none = ptr::null_mut();
    assert_eq!(
        unsafe { mtm_corpus_load(cstr(&missing).as_ptr(), &mut none) },
        MtmStatus::Io
    );
    assert!(none.is_null());
    assert!(last_error().contains("nope"));

    std::fs::write(dir.path().join("segments.tsv"), "not\ta header\n").unwrap();
    assert_eq!(
        unsafe { mtm_corpus_load(cstr(dir.path()).as_ptr(), &mut none) },
        MtmStatus::Parse
    );
}

#[test]
fn scorer_handle_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let scorer = ToyScorer::fit([vec!["a", "b", "c"], vec!["b", "c", "d"]]);
    let path = dir.path().join("scorer.json");
    scorer.save(&path).unwrap();

    let mut handle = ptr::null_mut();
    assert_eq!(
        unsafe { mtm_scorer_load(cstr(&path).as_ptr(), &mut handle) },
        MtmStatus::Ok
    );
    let y = CString::new("a b c").unwrap();
    let x = CString::new("b c d").unwrap();
    let mut s = 0.0;
    assert_eq!(
        unsafe { mtm_scorer_sequence_score(handle, y.as_ptr(), x.as_ptr(), &mut s) },
        MtmStatus::Ok
    );
    assert_eq!(
        s,
        mtmeval::metrics::sequence_score(&scorer, &["a", "b", "c"], &["b", "c", "d"])
    );
    let mut p = 0.0;
    assert_eq!(
        unsafe { mtm_scorer_prism(handle, y.as_ptr(), x.as_ptr(), &mut p) },
        MtmStatus::Ok
    );
    assert_eq!(
        p,
        mtmeval::metrics::prism_score(&scorer, &["a", "b", "c"], &["b", "c", "d"])
    );
    unsafe { mtm_scorer_free(handle) };

    std::fs::write(&path, "{}").unwrap();
    let mut none = ptr::null_mut();
    assert_eq!(
        unsafe { mtm_scorer_load(cstr(&path).as_ptr(), &mut none) },
        MtmStatus::Parse
    );
}

#[test]
fn robustness_report_json_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let synthetic = generate(&small_config());
    synthetic.write(dir.path()).unwrap();
    let set = synthetic.parse().unwrap();

    let mut corpus = ptr::null_mut();
    assert_eq!(
        unsafe { mtm_corpus_load(cstr(dir.path()).as_ptr(), &mut corpus) },
        MtmStatus::Ok
    );
    let mut json = ptr::null_mut();
    let status = unsafe { mtm_robustness_report_json(corpus, ptr::null(), 11, 50, &mut json) };
    assert_eq!(status, MtmStatus::Ok, "{}", last_error());
    let text = unsafe { CStr::from_ptr(json) }
        .to_str()
        .unwrap()
        .to_string();
    unsafe { mtm_string_free(json) };
    unsafe { mtm_corpus_free(corpus) };

    let bleu = BleuMetric::default();
    let chrf = ChrfMetric;
    let metrics: Vec<&dyn Metric> = vec![&bleu, &chrf];
    let options = RobustnessOptions {
        n_resamples: 50,
        ..RobustnessOptions::new(11)
    };
    let expected = robustness_report(&set, &metrics, &options).unwrap();
    assert_eq!(text, serde_json::to_string_pretty(&expected).unwrap());
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"mtmeval.h\"\nint main(void) { MtmCorpus *c = 0; (void)c; return mtm_version() ? MTM_STATUS_OK : 1; }\n",
    )
    .unwrap();
    for (compiler, extra) in [("cc", vec!["-xc", "-std=c99"]), ("c++", vec!["-xc++"])] {
        let result = std::process::Command::new(compiler)
            .args(&extra)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
            .arg(&header)
            .arg(&src)
            .output();
        match result {
            Ok(out) => assert!(
                out.status.success(),
                "{compiler}: {}",
                String::from_utf8_lossy(&out.stderr)
            ),
            Err(e) => eprintln!("skipping {compiler}: {e}"),
        }
    }
}
