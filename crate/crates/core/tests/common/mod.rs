//! Independent oracles and fixtures shared by the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mtmeval::corpus::{parse_corpus, EvaluationSet, LangPair};
use mtmeval::rankings::RelativeRanking;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Tau-b by enumerating every pair.
pub fn brute_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    let (mut conc, mut disc, mut tie_x, mut tie_y) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 && dy == 0.0 {
                tie_x += 1;
                tie_y += 1;
            } else if dx == 0.0 {
                tie_x += 1;
            } else if dy == 0.0 {
                tie_y += 1;
            } else if (dx > 0.0) == (dy > 0.0) {
                conc += 1;
            } else {
                disc += 1;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as i64;
    let denom = (((pairs - tie_x) as f64) * ((pairs - tie_y) as f64)).sqrt();
    if denom == 0.0 {
        None
    } else {
        Some((conc - disc) as f64 / denom)
    }
}

/// Pairwise accuracy by enumerating system pairs.
pub fn brute_accuracy(metric: &[f64], human: &[f64]) -> Option<f64> {
    let mut hits = 0;
    let mut total = 0;
    for i in 0..metric.len() {
        for j in 0..metric.len() {
            if human[i] > human[j] {
                total += 1;
                if metric[i] > metric[j] {
                    hits += 1;
                }
            }
        }
    }
    (total > 0).then(|| hits as f64 / total as f64)
}

fn occurrences<T: PartialEq>(haystack: &[T], needle: &[T]) -> usize {
    if needle.len() > haystack.len() {
        return 0;
    }
    (0..=haystack.len() - needle.len())
        .filter(|&i| &haystack[i..i + needle.len()] == needle)
        .count()
}

/// Clipped matches and hypothesis n-gram total, by scanning.
fn clipped<T: PartialEq + Clone>(hyp: &[T], reference: &[T], n: usize) -> (usize, usize) {
    if hyp.len() < n {
        return (0, 0);
    }
    let mut seen: Vec<&[T]> = Vec::new();
    let mut matches = 0;
    for i in 0..=hyp.len() - n {
        let g = &hyp[i..i + n];
        if seen.contains(&g) {
            continue;
        }
        seen.push(g);
        matches += occurrences(hyp, g).min(occurrences(reference, g));
    }
    (matches, hyp.len() - n + 1)
}

/// BLEU (0-100) from pooled statistics, optionally add-one smoothed for n >= 2.
pub fn brute_bleu(pairs: &[(Vec<&str>, Vec<&str>)], smooth: bool) -> f64 {
    let mut m = [0usize; 4];
    let mut t = [0usize; 4];
    let (mut hl, mut rl) = (0usize, 0usize);
    for (h, r) in pairs {
        hl += h.len();
        rl += r.len();
        for n in 1..=4 {
            let (a, b) = clipped(h, r, n);
            m[n - 1] += a;
            t[n - 1] += b;
        }
    }
    if hl == 0 {
        return 0.0;
    }
    let mut product = 1.0f64;
    for n in 0..4 {
        let (a, b) = if smooth && n > 0 {
            (m[n] + 1, t[n] + 1)
        } else {
            (m[n], t[n])
        };
        if a == 0 {
            return 0.0;
        }
        product *= a as f64 / b as f64;
    }
    let bp = if hl > rl {
        1.0
    } else {
        (1.0 - rl as f64 / hl as f64).exp()
    };
    100.0 * bp * product.powf(0.25)
}

/// chrF with β = 2 over character 1..6-grams, whitespace removed.
pub fn brute_chrf(hyp: &str, reference: &str) -> f64 {
    let h: Vec<char> = hyp.chars().filter(|c| !c.is_whitespace()).collect();
    let r: Vec<char> = reference.chars().filter(|c| !c.is_whitespace()).collect();
    if h.is_empty() && r.is_empty() {
        return 100.0;
    }
    let (mut p_sum, mut r_sum, mut orders) = (0.0, 0.0, 0);
    for n in 1..=6 {
        if r.len() < n {
            continue;
        }
        orders += 1;
        let (m, ht) = clipped(&h, &r, n);
        let rt = r.len() - n + 1;
        if ht > 0 {
            p_sum += m as f64 / ht as f64;
        }
        r_sum += m as f64 / rt as f64;
    }
    if orders == 0 {
        return 0.0;
    }
    let p = p_sum / orders as f64;
    let rc = r_sum / orders as f64;
    if p + rc == 0.0 {
        return 0.0;
    }
    500.0 * p * rc / (4.0 * p + rc)
}

pub fn random_sentence(rng: &mut ChaCha8Rng, vocab: usize, max_len: usize) -> String {
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| format!("t{}", rng.gen_range(0..vocab)))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn random_chars(rng: &mut ChaCha8Rng, alphabet: &[char], max_len: usize) -> String {
    let len = rng.gen_range(0..=max_len);
    (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

/// One rated error in a random MQM fixture: (category, severity).
pub type FixtureError = (&'static str, &'static str);

/// A random MQM corpus plus its ground truth, kept apart from the parser.
pub struct MqmFixture {
    pub set: EvaluationSet,
    /// (lang_pair, seg, annotator, system) -> errors
    pub ratings: BTreeMap<(String, String, String, String), Vec<FixtureError>>,
    /// (lang_pair, seg) without a standard reference
    pub no_reference: BTreeSet<(String, String)>,
    pub human_systems: BTreeSet<String>,
}

const CATEGORIES: [&str; 3] = [
    "Accuracy/Mistranslation",
    "Fluency/Grammar",
    "Fluency/Punctuation",
];

/// Random corpus with up to 3 language pairs, 6 segments, 5 systems and 3
/// annotators per segment; some segments lack a reference, some translations
/// are unrated and one system may be human.
pub fn random_mqm_fixture(seed: u64) -> MqmFixture {
    let mut rng = rng(seed);
    let lps = ["en-de", "zh-en", "en-ru"];
    let n_lp = rng.gen_range(1..=3);
    let n_seg = rng.gen_range(1..=6);
    let n_sys = rng.gen_range(2..=5);
    let human = rng.gen_bool(0.3);
    let systems: Vec<String> = (0..n_sys).map(|k| format!("S{k}")).collect();
    let human_systems: BTreeSet<String> = if human {
        [systems[0].clone()].into()
    } else {
        BTreeSet::new()
    };

    let mut segments = String::from("lang_pair\tdomain\tdoc_id\tseg_id\tsource_text\n");
    let mut outputs = String::from("lang_pair\tdomain\tsystem_id\tseg_id\tis_human\ttext\n");
    let mut refs = String::from("lang_pair\tdomain\tref_id\tseg_id\ttext\n");
    let mut mqm =
        String::from("lang_pair\tdomain\tsystem_id\tseg_id\tannotator_id\tcategory\tseverity\tspan_start\tspan_end\n");
    let mut ratings = BTreeMap::new();
    let mut no_reference = BTreeSet::new();

    for lp in &lps[..n_lp] {
        for s in 0..n_seg {
            let seg = format!("g{s}");
            segments.push_str(&format!("{lp}\tnews\td\t{seg}\tsource {s}\n"));
            if rng.gen_bool(0.85) {
                refs.push_str(&format!("{lp}\tnews\tref-A\t{seg}\treference {s}\n"));
            } else {
                no_reference.insert((lp.to_string(), seg.clone()));
            }
            for sys in &systems {
                let flag = if human_systems.contains(sys) { 1 } else { 0 };
                outputs.push_str(&format!(
                    "{lp}\tnews\t{sys}\t{seg}\t{flag}\toutput of {sys} for {s}\n"
                ));
            }
            for a in 0..3 {
                let annotator = format!("r{a}");
                for sys in &systems {
                    if !rng.gen_bool(0.7) {
                        continue;
                    }
                    let n_err = rng.gen_range(0..=4);
                    let mut errors = Vec::new();
                    for _ in 0..n_err {
                        let category = CATEGORIES[rng.gen_range(0..3)];
                        let severity = if rng.gen_bool(0.3) { "major" } else { "minor" };
                        errors.push((category, severity));
                        mqm.push_str(&format!(
                            "{lp}\tnews\t{sys}\t{seg}\t{annotator}\t{category}\t{severity}\t\t\n"
                        ));
                    }
                    if errors.is_empty() {
                        mqm.push_str(&format!(
                            "{lp}\tnews\t{sys}\t{seg}\t{annotator}\tno-error\tno-error\t\t\n"
                        ));
                    }
                    ratings.insert(
                        (lp.to_string(), seg.clone(), annotator.clone(), sys.clone()),
                        errors,
                    );
                }
            }
        }
    }
    MqmFixture {
        set: parse_corpus(&segments, &outputs, &refs, &mqm).expect("fixture parses"),
        ratings,
        no_reference,
        human_systems,
    }
}

/// Penalty in tenths of a point under the default weights (exact integers).
pub fn penalty_tenths(errors: &[FixtureError]) -> i64 {
    errors
        .iter()
        .map(|&(category, severity)| match (severity, category) {
            ("major", _) => 50,
            ("minor", "Fluency/Punctuation") => 1,
            _ => 10,
        })
        .sum()
}

/// Number of rankings the derivation must produce for threshold 0.1.
pub fn ranking_count_oracle(fixture: &MqmFixture, exclude_human: bool) -> usize {
    let mut groups: BTreeMap<(String, String, String), Vec<i64>> = BTreeMap::new();
    for ((lp, seg, annotator, sys), errors) in &fixture.ratings {
        if fixture.no_reference.contains(&(lp.clone(), seg.clone())) {
            continue;
        }
        if exclude_human && fixture.human_systems.contains(sys) {
            continue;
        }
        groups
            .entry((lp.clone(), seg.clone(), annotator.clone()))
            .or_default()
            .push(penalty_tenths(errors));
    }
    let mut count = 0;
    for penalties in groups.values() {
        for i in 0..penalties.len() {
            for j in i + 1..penalties.len() {
                if (penalties[i] - penalties[j]).abs() > 1 {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Rankings in which `sys_plus` is a reordering of reference words and
/// `sys_minus` shares no word with the reference, so the copy feature alone
/// separates every pair.
pub fn separable_rankings(lang_pair: &str, n: usize, seed: u64) -> Vec<RelativeRanking> {
    let mut rng = rng(seed);
    let lp: LangPair = lang_pair.parse().unwrap();
    (0..n)
        .map(|i| {
            let words: Vec<usize> = (0..8).map(|_| rng.gen_range(0..150)).collect();
            let reference: Vec<String> = words.iter().map(|w| format!("w{w}")).collect();
            let mut plus = reference.clone();
            plus.shuffle(&mut rng);
            let minus: Vec<String> = (0..8)
                .map(|_| format!("w{}", rng.gen_range(150..300)))
                .collect();
            RelativeRanking {
                lang_pair: lp.clone(),
                annotator_id: "r0".into(),
                seg_id: format!("s{i:05}"),
                src: words
                    .iter()
                    .map(|w| format!("{}{w}", lp.source))
                    .collect::<Vec<_>>()
                    .join(" "),
                reference: reference.join(" "),
                sys_plus: plus.join(" "),
                sys_minus: minus.join(" "),
                score_delta: 5.0,
            }
        })
        .collect()
}

/// Every file below `root` with its bytes, keyed by relative path.
pub fn tree_contents(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .replace('\\', "/");
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Differences between two trees: paths present in one only or with different bytes.
pub fn tree_diff(a: &BTreeMap<String, Vec<u8>>, b: &BTreeMap<String, Vec<u8>>) -> Vec<String> {
    let keys: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    keys.into_iter()
        .filter(|k| a.get(*k) != b.get(*k))
        .map(|k| k.to_string())
        .collect()
}
