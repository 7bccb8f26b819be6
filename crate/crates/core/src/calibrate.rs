//! Random search over noise probabilities, scored by Jensen–Shannon distance
//! between the synthetic changed-word distance histogram and a target.

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::SentenceRecord;
use crate::error::{Error, Result};
use crate::noise::{apply_noise, sentence_seed, NoiseConfig, NoiseRng};
use crate::profile::{changed_word_distances, DistanceHistogram, HistogramCounts};

/// Mass given to empty bins before the divergences are taken.
pub const EMPTY_BIN_MASS: f64 = 1e-12;

fn smoothed(mass: &[f64]) -> Vec<f64> {
    let raw: Vec<f64> = mass
        .iter()
        .map(|&m| if m > 0.0 { m } else { EMPTY_BIN_MASS })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|m| m / total).collect()
}

fn kl_bits(p: &[f64], m: &[f64]) -> f64 {
    p.iter()
        .zip(m)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &mi)| pi * (pi / mi).log2())
        .sum()
}

/// Jensen–Shannon distance in bits: `sqrt(KL(P‖M)/2 + KL(Q‖M)/2)` with
/// `M = (P + Q)/2`, so the value lies in [0, 1].
pub fn js_distance(p: &DistanceHistogram, q: &DistanceHistogram) -> Result<f64> {
    if p.bin_edges.len() != q.bin_edges.len()
        || p.bin_edges.iter().zip(&q.bin_edges).any(|(a, b)| (a - b).abs() > 1e-12)
    {
        return Err(Error::Validation("histograms have different bin edges".into()));
    }
    p.validate()?;
    q.validate()?;
    Ok(js_from_masses(&p.mass, &q.mass))
}

pub(crate) fn js_from_masses(p: &[f64], q: &[f64]) -> f64 {
    let p = smoothed(p);
    let q = smoothed(q);
    let m: Vec<f64> = p.iter().zip(&q).map(|(a, b)| 0.5 * (a + b)).collect();
    let divergence = 0.5 * kl_bits(&p, &m) + 0.5 * kl_bits(&q, &m);
    divergence.max(0.0).sqrt().min(1.0)
}

/// Per-key sampling interval; draws are log-uniform within it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub low: f64,
    pub high: f64,
}

pub const BOUND_FLOOR: f64 = 1e-4;

/// `[1e-4, max(4 × reference, 1e-4)]` for each key.
pub fn default_bounds(reference: &NoiseConfig) -> [Bound; 9] {
    reference.probabilities().map(|v| Bound {
        low: BOUND_FLOOR,
        high: (4.0 * v).clamp(BOUND_FLOOR, 1.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub iterations: usize,
    pub threshold: f64,
    /// Drives both candidate sampling and the noise applied to the sample.
    pub seed: u64,
    pub min_sentences: usize,
    /// Sentences taken from the head of the corpus for every evaluation.
    pub sample_size: usize,
    /// Returned (and scored) when the budget is zero.
    pub initial: NoiseConfig,
    pub bounds: [Bound; 9],
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            iterations: 500,
            threshold: 0.15,
            seed: 0,
            min_sentences: 2000,
            sample_size: 2000,
            initial: NoiseConfig::TWEET_PROFILE,
            bounds: default_bounds(&NoiseConfig::TWEET_PROFILE),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub config: NoiseConfig,
    pub js: f64,
    pub iterations: usize,
    /// Iteration (0-based) that produced `config`; `None` for the initial config.
    pub best_iteration: Option<usize>,
    pub converged: bool,
    pub threshold: f64,
    pub target_hash: String,
    /// Best js after each iteration.
    pub trajectory: Vec<f64>,
}

/// SHA-256 of the target's canonical JSON form.
pub fn histogram_digest(h: &DistanceHistogram) -> String {
    let bytes = serde_json::to_vec(h).expect("histogram serializes");
    hex::encode(Sha256::digest(bytes))
}

/// Draws candidate `index` independently of every other candidate, so
/// batching and worker count cannot change the sequence.
pub fn sample_candidate(bounds: &[Bound; 9], seed: u64, index: usize) -> NoiseConfig {
    let mut rng = NoiseRng::seed_from_u64(sentence_seed(seed ^ 0xC0FF_EE00_CA11_B8A7, index as u64));
    let p = bounds.map(|b| {
        if b.high <= b.low {
            return b.low;
        }
        let (lo, hi) = (b.low.ln(), b.high.ln());
        (lo + rng.gen::<f64>() * (hi - lo)).exp()
    });
    NoiseConfig::from_probabilities(p, seed)
}

/// JS distance between the target and the synthetic histogram that `config`
/// produces on `sample`. No changed words at all scores 1.
pub fn score_config(target: &DistanceHistogram, sample: &[SentenceRecord], config: &NoiseConfig) -> f64 {
    let bins = target.bins();
    let counts = sample
        .par_iter()
        .fold(
            || HistogramCounts::new(bins),
            |mut acc, s| {
                let pair = apply_noise(s, config);
                for d in changed_word_distances(&pair.clean, &pair.noisy) {
                    acc.add(d);
                }
                acc
            },
        )
        .reduce(|| HistogramCounts::new(bins), |a, b| a.merge(&b));
    if counts.total() == 0 {
        return 1.0;
    }
    js_from_masses(&target.mass, &counts.to_histogram().mass)
}

pub fn calibrate(
    target: &DistanceHistogram,
    corpus: &[SentenceRecord],
    options: &CalibrationOptions,
) -> Result<CalibrationResult> {
    target.validate()?;
    if target.sample_count == 0 {
        return Err(Error::EmptyProfile("the target histogram has no samples".into()));
    }
    if corpus.len() < options.min_sentences || corpus.is_empty() {
        return Err(Error::Validation(format!(
            "calibration needs at least {} sentences, got {}",
            options.min_sentences.max(1),
            corpus.len()
        )));
    }
    if options.threshold.is_nan() || options.threshold <= 0.0 {
        return Err(Error::Validation("threshold must be positive".into()));
    }
    for (b, key) in options.bounds.iter().zip(crate::noise::NOISE_KEYS) {
        if !(b.low > 0.0 && b.low <= b.high && b.high <= 1.0) {
            return Err(Error::Validation(format!("bad search bound for `{key}`")));
        }
    }
    let initial = options.initial.with_seed(options.seed);
    initial.validate()?;

    let sample = &corpus[..options.sample_size.clamp(1, corpus.len())];
    let target_hash = histogram_digest(target);

    if options.iterations == 0 {
        let js = score_config(target, sample, &initial);
        return Ok(CalibrationResult {
            config: initial,
            js,
            iterations: 0,
            best_iteration: None,
            converged: false,
            threshold: options.threshold,
            target_hash,
            trajectory: Vec::new(),
        });
    }

    let scores: Vec<(f64, NoiseConfig)> = (0..options.iterations)
        .into_par_iter()
        .map(|i| {
            let candidate = sample_candidate(&options.bounds, options.seed, i);
            (score_config(target, sample, &candidate), candidate)
        })
        .collect();

    // ties resolve to the earliest iteration
    let mut best = 0;
    let mut trajectory = Vec::with_capacity(scores.len());
    for (i, (js, _)) in scores.iter().enumerate() {
        if *js < scores[best].0 {
            best = i;
        }
        trajectory.push(scores[best].0);
    }
    let (js, config) = scores[best];
    Ok(CalibrationResult {
        config,
        js,
        iterations: options.iterations,
        best_iteration: Some(best),
        converged: js <= options.threshold,
        threshold: options.threshold,
        target_hash,
        trajectory,
    })
}
