//! Corpus metrics for text correction: BLEU, METEOR, token F1, WER and CER.
//!
//! All values are on the [0, 1] scale except WER and CER, which exceed 1
//! when hypotheses run much longer than their references.

use std::collections::HashMap;
use std::sync::OnceLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::tokenize_words;
use crate::error::{Error, Result};
use crate::strdist::{levenshtein, token_edit_distance};

pub const BLEU_SIGNATURE: &str = "nrefs:1|case:mixed|eff:no|tok:13a|smooth:exp";
pub const MAX_NGRAM_ORDER: usize = 4;

/// Symbol edits and reference length for one reference/hypothesis pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCounts {
    pub edits: usize,
    pub reference_len: usize,
}

impl ErrorCounts {
    pub fn rate(&self) -> Result<f64> {
        if self.reference_len == 0 {
            return Err(Error::UndefinedMetric("reference is empty".into()));
        }
        Ok(self.edits as f64 / self.reference_len as f64)
    }

    fn merge(self, other: ErrorCounts) -> ErrorCounts {
        ErrorCounts {
            edits: self.edits + other.edits,
            reference_len: self.reference_len + other.reference_len,
        }
    }
}

pub fn char_errors(reference: &str, hypothesis: &str) -> ErrorCounts {
    let r: Vec<char> = reference.chars().collect();
    let h: Vec<char> = hypothesis.chars().collect();
    ErrorCounts {
        edits: levenshtein(&r, &h),
        reference_len: r.len(),
    }
}

/// Word errors over whitespace-delimited tokens.
pub fn word_errors(reference: &str, hypothesis: &str) -> ErrorCounts {
    let r: Vec<&str> = reference.split_whitespace().collect();
    let h: Vec<&str> = hypothesis.split_whitespace().collect();
    ErrorCounts {
        edits: token_edit_distance(&r, &h),
        reference_len: r.len(),
    }
}

/// Character error rate, spaces included.
pub fn cer(reference: &str, hypothesis: &str) -> Result<f64> {
    char_errors(reference, hypothesis).rate()
}

/// Word error rate.
pub fn wer(reference: &str, hypothesis: &str) -> Result<f64> {
    word_errors(reference, hypothesis).rate()
}

fn punct_re() -> &'static [(Regex, &'static str); 4] {
    static RES: OnceLock<[(Regex, &'static str); 4]> = OnceLock::new();
    RES.get_or_init(|| {
        [
            (Regex::new(r"([{-~\[-`\x20-&(-+:-@/])").unwrap(), " ${1} "),
            (Regex::new(r"([^0-9])([.,])").unwrap(), "${1} ${2} "),
            (Regex::new(r"([.,])([^0-9])").unwrap(), " ${1} ${2}"),
            (Regex::new(r"([0-9])(-)").unwrap(), "${1} ${2} "),
        ]
    })
}

fn is_py_whitespace(c: char) -> bool {
    c.is_whitespace() || ('\u{1c}'..='\u{1f}').contains(&c)
}

/// The `13a` tokenization used by WMT's mteval-v13a script.
pub fn tokenize_13a(line: &str) -> Vec<String> {
    let line = line.trim_end_matches(is_py_whitespace);
    let mut line = line
        .replace("<skipped>", "")
        .replace("-\n", "")
        .replace('\n', " ");
    if line.contains('&') {
        line = line
            .replace("&quot;", "\"")
            .replace("&amp;", "&")
            .replace("&lt;", "<")
            .replace("&gt;", ">");
    }
    let mut line = format!(" {line} ");
    for (re, rep) in punct_re() {
        line = re.replace_all(&line, *rep).into_owned();
    }
    line.split(is_py_whitespace)
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

/// BLEU sufficient statistics; they add across segments.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BleuStats {
    pub correct: [usize; MAX_NGRAM_ORDER],
    pub total: [usize; MAX_NGRAM_ORDER],
    pub sys_len: usize,
    pub ref_len: usize,
}

impl BleuStats {
    pub fn segment(reference: &str, hypothesis: &str) -> Self {
        let r = tokenize_13a(reference);
        let h = tokenize_13a(hypothesis);
        let mut stats = BleuStats {
            sys_len: h.len(),
            ref_len: r.len(),
            ..Default::default()
        };
        for n in 1..=MAX_NGRAM_ORDER {
            let mut ref_counts: HashMap<&[String], usize> = HashMap::new();
            for g in r.windows(n) {
                *ref_counts.entry(g).or_default() += 1;
            }
            let mut hyp_counts: HashMap<&[String], usize> = HashMap::new();
            for g in h.windows(n) {
                *hyp_counts.entry(g).or_default() += 1;
            }
            for (g, c) in hyp_counts {
                stats.total[n - 1] += c;
                stats.correct[n - 1] += c.min(ref_counts.get(g).copied().unwrap_or(0));
            }
        }
        stats
    }

    pub fn merge(mut self, other: &BleuStats) -> Self {
        for n in 0..MAX_NGRAM_ORDER {
            self.correct[n] += other.correct[n];
            self.total[n] += other.total[n];
        }
        self.sys_len += other.sys_len;
        self.ref_len += other.ref_len;
        self
    }

    /// Corpus BLEU with exponential smoothing of zero-match orders and the
    /// multiplicative brevity penalty, on [0, 1].
    pub fn score(&self) -> f64 {
        let bp = if self.sys_len < self.ref_len {
            if self.sys_len > 0 {
                (1.0 - self.ref_len as f64 / self.sys_len as f64).exp()
            } else {
                0.0
            }
        } else {
            1.0
        };
        if self.correct.iter().all(|&c| c == 0) {
            return 0.0;
        }
        let mut precisions = [0.0f64; MAX_NGRAM_ORDER];
        let mut smooth = 1.0;
        for n in 0..MAX_NGRAM_ORDER {
            if self.total[n] == 0 {
                break;
            }
            precisions[n] = if self.correct[n] == 0 {
                smooth *= 2.0;
                100.0 / (smooth * self.total[n] as f64)
            } else {
                100.0 * self.correct[n] as f64 / self.total[n] as f64
            };
        }
        // mteval's stand-in for log(0)
        let log = |p: f64| if p == 0.0 { -9_999_999_999.0 } else { p.ln() };
        let mean = precisions.iter().map(|&p| log(p)).sum::<f64>() / MAX_NGRAM_ORDER as f64;
        bp * mean.exp() / 100.0
    }
}

pub fn bleu_corpus<S: AsRef<str> + Sync>(references: &[S], hypotheses: &[S]) -> Result<f64> {
    check_aligned(references, hypotheses)?;
    let stats = references
        .par_iter()
        .zip(hypotheses)
        .map(|(r, h)| BleuStats::segment(r.as_ref(), h.as_ref()))
        .reduce(BleuStats::default, |a, b| a.merge(&b));
    Ok(stats.score())
}

/// Exact-match unigram alignment as `(hyp index, ref index)` pairs, sorted
/// by hypothesis position.
///
/// Every matchable token gets aligned, so the match count is maximal. Chunks
/// are kept few by repeatedly aligning the longest remaining common run of
/// unaligned tokens; this is exact whenever no token repeats.
pub fn meteor_alignment<S: AsRef<str>>(reference: &[S], hypothesis: &[S]) -> Vec<(usize, usize)> {
    let r: Vec<&str> = reference.iter().map(AsRef::as_ref).collect();
    let h: Vec<&str> = hypothesis.iter().map(AsRef::as_ref).collect();
    let (n, m) = (h.len(), r.len());
    let mut h_used = vec![false; n];
    let mut r_used = vec![false; m];
    let mut pairs = Vec::new();
    let mut run = vec![0usize; (n + 1) * (m + 1)];
    loop {
        // (length, end in hyp, end in ref); ties prefer runs that stay on the
        // diagonal, then earlier positions
        let mut best: Option<(usize, usize, usize)> = None;
        for i in 1..=n {
            for j in 1..=m {
                let k = if !h_used[i - 1] && !r_used[j - 1] && h[i - 1] == r[j - 1] {
                    run[(i - 1) * (m + 1) + j - 1] + 1
                } else {
                    0
                };
                run[i * (m + 1) + j] = k;
                if k == 0 {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bk, bi, bj)) => {
                        k > bk || (k == bk && i.abs_diff(j) < bi.abs_diff(bj))
                    }
                };
                if better {
                    best = Some((k, i, j));
                }
            }
        }
        let Some((k, i, j)) = best else { break };
        for t in 0..k {
            h_used[i - k + t] = true;
            r_used[j - k + t] = true;
            pairs.push((i - k + t, j - k + t));
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Number of runs contiguous in both the hypothesis and the reference.
pub fn count_chunks(alignment: &[(usize, usize)]) -> usize {
    if alignment.is_empty() {
        return 0;
    }
    1 + alignment
        .windows(2)
        .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
        .count()
}

/// METEOR with exact matching only: `Fmean = 10PR / (R + 9P)`,
/// `penalty = 0.5 (chunks / matches)^3`, score `Fmean (1 - penalty)`.
pub fn meteor(reference: &str, hypothesis: &str) -> f64 {
    let r = tokenize_words(reference);
    let h = tokenize_words(hypothesis);
    let alignment = meteor_alignment(&r, &h);
    let matches = alignment.len();
    if matches == 0 {
        return 0.0;
    }
    let precision = matches as f64 / h.len() as f64;
    let recall = matches as f64 / r.len() as f64;
    let fmean = 10.0 * precision * recall / (recall + 9.0 * precision);
    let fragmentation = count_chunks(&alignment) as f64 / matches as f64;
    fmean * (1.0 - 0.5 * fragmentation.powi(3))
}

/// Multiset token overlap F1.
pub fn token_f1(reference: &str, hypothesis: &str) -> f64 {
    let r = tokenize_words(reference);
    let h = tokenize_words(hypothesis);
    match (r.is_empty(), h.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let mut counts: HashMap<&str, isize> = HashMap::new();
    for t in &r {
        *counts.entry(t).or_default() += 1;
    }
    let mut overlap = 0usize;
    for t in &h {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / h.len() as f64;
    let rc = overlap as f64 / r.len() as f64;
    2.0 * p * rc / (p + rc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub bleu: f64,
    pub meteor: f64,
    pub token_f1: f64,
    pub wer: f64,
    pub cer: f64,
    pub pair_count: usize,
}

impl MetricReport {
    pub fn table(&self) -> String {
        format!(
            "{:<8} {:>8}\n{:<8} {:>8.4}\n{:<8} {:>8.4}\n{:<8} {:>8.4}\n{:<8} {:>8.4}\n{:<8} {:>8.4}\n",
            "pairs", self.pair_count,
            "BLEU", self.bleu,
            "METEOR", self.meteor,
            "F1", self.token_f1,
            "WER", self.wer,
            "CER", self.cer,
        )
    }
}

#[derive(Debug, Clone, Copy)]
struct PairScores {
    chars: ErrorCounts,
    words: ErrorCounts,
    bleu: BleuStats,
    meteor: f64,
    f1: f64,
}

fn score_pair(index: usize, reference: &str, hypothesis: &str) -> Result<PairScores> {
    let chars = char_errors(reference, hypothesis);
    let words = word_errors(reference, hypothesis);
    if chars.reference_len == 0 || words.reference_len == 0 {
        return Err(Error::UndefinedMetric(format!("reference {index} is empty")));
    }
    Ok(PairScores {
        chars,
        words,
        bleu: BleuStats::segment(reference, hypothesis),
        meteor: meteor(reference, hypothesis),
        f1: token_f1(reference, hypothesis),
    })
}

/// Running corpus totals. Batches are scored in parallel; floating-point
/// sums are folded in input order so the result never depends on the
/// number of workers.
#[derive(Debug, Clone, Default)]
pub struct MetricAccumulator {
    chars: ErrorCounts,
    words: ErrorCounts,
    bleu: BleuStats,
    meteor_sum: f64,
    f1_sum: f64,
    pairs: usize,
}

impl MetricAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_batch<S: AsRef<str> + Sync>(&mut self, references: &[S], hypotheses: &[S]) -> Result<()> {
        check_aligned(references, hypotheses)?;
        let offset = self.pairs;
        let scores: Vec<PairScores> = references
            .par_iter()
            .zip(hypotheses)
            .enumerate()
            .map(|(i, (r, h))| score_pair(offset + i, r.as_ref(), h.as_ref()))
            .collect::<Result<_>>()?;
        for s in scores {
            self.chars = self.chars.merge(s.chars);
            self.words = self.words.merge(s.words);
            self.bleu = self.bleu.merge(&s.bleu);
            self.meteor_sum += s.meteor;
            self.f1_sum += s.f1;
            self.pairs += 1;
        }
        Ok(())
    }

    pub fn report(&self) -> Result<MetricReport> {
        if self.pairs == 0 {
            return Err(Error::UndefinedMetric("no pairs were scored".into()));
        }
        Ok(MetricReport {
            bleu: self.bleu.score(),
            meteor: self.meteor_sum / self.pairs as f64,
            token_f1: self.f1_sum / self.pairs as f64,
            wer: self.words.rate()?,
            cer: self.chars.rate()?,
            pair_count: self.pairs,
        })
    }

    pub fn char_counts(&self) -> ErrorCounts {
        self.chars
    }

    pub fn word_counts(&self) -> ErrorCounts {
        self.words
    }
}

fn check_aligned<S>(references: &[S], hypotheses: &[S]) -> Result<()> {
    if references.len() != hypotheses.len() {
        return Err(Error::Validation(format!(
            "{} references but {} hypotheses",
            references.len(),
            hypotheses.len()
        )));
    }
    Ok(())
}

/// All five metrics for aligned reference and hypothesis lists.
pub fn evaluate_corpus<S: AsRef<str> + Sync>(references: &[S], hypotheses: &[S]) -> Result<MetricReport> {
    if references.is_empty() {
        return Err(Error::Validation("nothing to evaluate".into()));
    }
    let mut acc = MetricAccumulator::new();
    acc.add_batch(references, hypotheses)?;
    acc.report()
}
