//! Property bodies shared by the `properties` test and the acceptance runner.

use hausa_noise::calibrate::{calibrate, js_distance, CalibrationOptions};
use hausa_noise::metrics::{bleu_corpus, evaluate_corpus, token_f1, MetricAccumulator};
use hausa_noise::profile::{histogram_from_samples, DistanceHistogram};
use hausa_noise::strdist::{align, levenshtein, normalized_levenshtein, AlignOp};
use hausa_noise::SentenceRecord;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub const CASES: u32 = 1000;

pub fn runner() -> TestRunner {
    // no persistence: the runner is also used outside the test harness
    TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    })
}

pub fn text() -> impl Strategy<Value = String> {
    proptest::string::string_regex("[abdkɓɗƙƴ' ]{0,12}").unwrap()
}

/// A sentence of 1–9 Hausa-ish tokens.
pub fn sentence() -> impl Strategy<Value = String> {
    proptest::collection::vec(
        proptest::string::string_regex("[a-zɗƙɓ']{1,7}|[.,?]").unwrap(),
        1..10,
    )
    .prop_map(|toks| toks.join(" "))
}

pub fn corpus() -> impl Strategy<Value = Vec<String>> {
    proptest::collection::vec(sentence(), 1..8)
}

// --- strdist -------------------------------------------------------------

pub fn levenshtein_symmetric_triangle(a: &str, b: &str, c: &str) -> Result<(), TestCaseError> {
    let (a, b, c): (Vec<char>, Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect(), c.chars().collect());
    let ab = levenshtein(&a, &b);
    prop_assert_eq!(ab, levenshtein(&b, &a));
    prop_assert!(levenshtein(&a, &c) <= ab + levenshtein(&b, &c));
    Ok(())
}

pub fn normalized_bounded(a: &str, b: &str) -> Result<(), TestCaseError> {
    let d = normalized_levenshtein(a, b);
    prop_assert!((0.0..=1.0).contains(&d));
    let (ac, bc): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    if ac.len() == bc.len() && d == 1.0 {
        let matched = align(&ac, &bc).iter().any(|op| matches!(op, AlignOp::Match { .. }));
        prop_assert!(!matched);
        prop_assert!(ac.iter().zip(&bc).all(|(x, y)| x != y));
    }
    Ok(())
}

// --- calibrate -----------------------------------------------------------

pub fn masses() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..16).prop_flat_map(|bins| {
        let m = proptest::collection::vec(prop_oneof![Just(0.0), 0.0..1.0f64], bins)
            .prop_filter("needs mass", |v| v.iter().sum::<f64>() > 1e-6)
            .prop_map(|v| {
                let s: f64 = v.iter().sum();
                v.into_iter().map(|x| x / s).collect::<Vec<_>>()
            });
        (m.clone(), m)
    })
}

pub fn histogram(mass: &[f64]) -> DistanceHistogram {
    let bins = mass.len();
    DistanceHistogram {
        bin_edges: (0..=bins).map(|i| i as f64 / bins as f64).collect(),
        mass: mass.to_vec(),
        sample_count: 1,
    }
}

pub fn js_properties(p: &[f64], q: &[f64]) -> Result<(), TestCaseError> {
    let (hp, hq) = (histogram(p), histogram(q));
    let pq = js_distance(&hp, &hq).unwrap();
    prop_assert!((0.0..=1.0).contains(&pq));
    prop_assert_eq!(pq, js_distance(&hq, &hp).unwrap());
    prop_assert_eq!(js_distance(&hp, &hp).unwrap(), 0.0);
    let equal = p.iter().zip(q).all(|(a, b)| (a - b).abs() < 1e-12);
    if pq == 0.0 {
        prop_assert!(p.iter().zip(q).all(|(a, b)| (a - b).abs() < 1e-9));
    }
    if equal {
        prop_assert!(pq < 1e-6);
    }
    Ok(())
}

pub struct Pools {
    pub one: rayon::ThreadPool,
    pub four: rayon::ThreadPool,
}

impl Pools {
    pub fn new() -> Self {
        let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
        Pools { one: pool(1), four: pool(4) }
    }
}

/// Small calibrations: deterministic across reruns and worker counts, and a
/// non-increasing best-so-far trajectory.
pub fn calibration_properties(
    pools: &Pools,
    sentences: &[String],
    target_samples: &[f64],
    seed: u64,
    iterations: usize,
) -> Result<(), TestCaseError> {
    let corpus: Vec<SentenceRecord> = sentences
        .iter()
        .enumerate()
        .map(|(i, s)| SentenceRecord::new(i as u64, s.clone(), ""))
        .collect();
    let target = histogram_from_samples(target_samples, 20);
    let options = CalibrationOptions {
        iterations,
        seed,
        min_sentences: 1,
        sample_size: corpus.len(),
        ..Default::default()
    };
    let serial = pools.one.install(|| calibrate(&target, &corpus, &options)).unwrap();
    let again = pools.one.install(|| calibrate(&target, &corpus, &options)).unwrap();
    let parallel = pools.four.install(|| calibrate(&target, &corpus, &options)).unwrap();
    prop_assert_eq!(&serial, &again);
    prop_assert_eq!(&serial, &parallel);
    prop_assert_eq!(serial.trajectory.len(), iterations);
    prop_assert!(serial.trajectory.windows(2).all(|w| w[1] <= w[0]));
    prop_assert_eq!(serial.trajectory.last().copied(), Some(serial.js));
    prop_assert_eq!(serial.converged, serial.js <= options.threshold);
    Ok(())
}

// --- metrics -------------------------------------------------------------

pub fn identity_bundle(x: &[String]) -> Result<(), TestCaseError> {
    let r = evaluate_corpus(x, x).unwrap();
    prop_assert_eq!(r.wer, 0.0);
    prop_assert_eq!(r.cer, 0.0);
    prop_assert_eq!(r.token_f1, 1.0);
    prop_assert!((0.0..=1.0).contains(&r.meteor) && r.meteor > 0.0);
    // BLEU needs at least one 4-gram somewhere; without one the reference
    // scorer reports 0 even for identical text.
    let has_4gram = x.iter().any(|s| hausa_noise::metrics::tokenize_13a(s).len() >= 4);
    if has_4gram {
        prop_assert!((r.bleu - 1.0).abs() < 1e-12, "bleu {}", r.bleu);
    } else {
        prop_assert_eq!(r.bleu, 0.0);
    }
    Ok(())
}

pub fn concatenation_scale_free(
    refs1: &[String],
    hyps1: &[String],
    refs2: &[String],
    hyps2: &[String],
) -> Result<(), TestCaseError> {
    let n1 = refs1.len().min(hyps1.len());
    let n2 = refs2.len().min(hyps2.len());
    let (r1, h1, r2, h2) = (&refs1[..n1], &hyps1[..n1], &refs2[..n2], &hyps2[..n2]);
    let acc = |r: &[String], h: &[String]| {
        let mut a = MetricAccumulator::new();
        a.add_batch(r, h).unwrap();
        a
    };
    let (a1, a2) = (acc(r1, h1), acc(r2, h2));
    let whole_refs: Vec<String> = r1.iter().chain(r2).cloned().collect();
    let whole_hyps: Vec<String> = h1.iter().chain(h2).cloned().collect();
    let whole = evaluate_corpus(&whole_refs, &whole_hyps).unwrap();

    let (c1, c2) = (a1.char_counts(), a2.char_counts());
    let (w1, w2) = (a1.word_counts(), a2.word_counts());
    let cer = (c1.rate().unwrap() * c1.reference_len as f64 + c2.rate().unwrap() * c2.reference_len as f64)
        / (c1.reference_len + c2.reference_len) as f64;
    let wer = (w1.rate().unwrap() * w1.reference_len as f64 + w2.rate().unwrap() * w2.reference_len as f64)
        / (w1.reference_len + w2.reference_len) as f64;
    prop_assert!((whole.cer - cer).abs() < 1e-12);
    prop_assert!((whole.wer - wer).abs() < 1e-12);
    Ok(())
}

pub fn f1_permutation_invariant(reference: &str, hypothesis: &str, perm_seed: u64) -> Result<(), TestCaseError> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut toks: Vec<&str> = hypothesis.split_whitespace().collect();
    toks.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed));
    let shuffled = toks.join(" ");
    prop_assert_eq!(token_f1(reference, hypothesis), token_f1(reference, &shuffled));
    Ok(())
}

/// The witness that BLEU, unlike token F1, sees word order.
pub fn bleu_order_witness() -> bool {
    let reference = "abincin ba shi da daɗi sosai";
    let permuted = "sosai daɗi da shi ba abincin";
    token_f1(reference, permuted) == 1.0
        && bleu_corpus(&[reference], &[permuted]).unwrap() < 0.5
        && (bleu_corpus(&[reference], &[reference]).unwrap() - 1.0).abs() < 1e-12
}

pub fn metrics_parallel_independent(pools: &Pools, refs: &[String], hyps: &[String]) -> Result<(), TestCaseError> {
    let n = refs.len().min(hyps.len());
    let (r, h) = (&refs[..n], &hyps[..n]);
    let a = pools.one.install(|| evaluate_corpus(r, h)).unwrap();
    let b = pools.four.install(|| evaluate_corpus(r, h)).unwrap();
    prop_assert_eq!(a, b);
    prop_assert!(a.wer >= 0.0 && a.cer >= 0.0);
    for v in [a.bleu, a.meteor, a.token_f1] {
        prop_assert!((0.0..=1.0).contains(&v));
    }
    Ok(())
}

/// Hand-derived values; each entry is (label, got, expected, tolerance).
pub fn hand_values() -> Vec<(&'static str, f64, f64, f64)> {
    use hausa_noise::metrics::{cer, meteor, wer};
    let js = js_distance(&histogram(&[1.0, 0.0]), &histogram(&[0.5, 0.5])).unwrap();
    vec![
        ("meteor(daɗi, daɗi)", meteor("daɗi", "daɗi"), 0.5, 1e-12),
        ("meteor(ba shi da daɗi ×2)", meteor("ba shi da daɗi", "ba shi da daɗi"), 1.0 - 0.5 / 64.0, 1e-12),
        ("token_f1(ba shi da daɗi, bashi da daɗi)", token_f1("ba shi da daɗi", "bashi da daɗi"), 4.0 / 7.0, 1e-12),
        ("wer(ba shi da daɗi, bashi da daɗi)", wer("ba shi da daɗi", "bashi da daɗi").unwrap(), 0.5, 1e-12),
        ("wer(a b, c d e f)", wer("a b", "c d e f").unwrap(), 2.0, 1e-12),
        ("cer(daɗi, dadi)", cer("daɗi", "dadi").unwrap(), 0.25, 1e-12),
        ("levenshtein(ƙasa, kasa)", hausa_noise::strdist::levenshtein_str("ƙasa", "kasa") as f64, 1.0, 0.0),
        ("js((1,0), (0.5,0.5))", js, 0.5579, 5e-5),
        ("js((1,0), (0,1))", js_distance(&histogram(&[1.0, 0.0]), &histogram(&[0.0, 1.0])).unwrap(), 1.0, 1e-9),
    ]
}
