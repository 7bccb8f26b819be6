//! MinHash-LSH overlap audit between two corpora.
//!
//! Sentences are reduced to sets of word shingles. Each of the `K` hash
//! functions is a universal hash `(a·x + b) mod (2^61 − 1)` applied to a
//! 64-bit FNV-1a fingerprint of the shingle, with `a` and `b` drawn from a
//! seeded generator. Signatures are split into bands for candidate lookup,
//! and candidates are kept when their estimated Jaccard similarity reaches
//! the threshold.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize_words, SentenceRecord};
use crate::error::{Error, Result};

pub const DEFAULT_NUM_PERM: usize = 128;
pub const DEFAULT_SHINGLE: usize = 3;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

const MERSENNE_61: u64 = (1 << 61) - 1;

pub type Shingle = Vec<String>;

/// Contiguous `k`-token windows. A text with fewer than `k` tokens yields
/// its whole token tuple; an empty text yields nothing.
pub fn shingle(text: &str, k: usize) -> BTreeSet<Shingle> {
    let k = k.max(1);
    let tokens = tokenize_words(text);
    if tokens.is_empty() {
        return BTreeSet::new();
    }
    if tokens.len() < k {
        return BTreeSet::from([tokens]);
    }
    tokens.windows(k).map(<[String]>::to_vec).collect()
}

fn fnv1a(bytes: impl IntoIterator<Item = u8>, mut h: u64) -> u64 {
    for b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

const FNV_OFFSET: u64 = 0xCBF2_9CE4_8422_2325;

fn fingerprint(shingle: &[String]) -> u64 {
    let mut h = FNV_OFFSET;
    for (i, token) in shingle.iter().enumerate() {
        if i > 0 {
            h = fnv1a([0x1F], h);
        }
        h = fnv1a(token.bytes(), h);
    }
    h
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinHashSignature {
    pub hashes: Vec<u64>,
    pub shingle_size: usize,
}

impl MinHashSignature {
    /// Fraction of positions where the two signatures agree.
    pub fn jaccard(&self, other: &MinHashSignature) -> f64 {
        assert_eq!(self.hashes.len(), other.hashes.len(), "signature lengths differ");
        let same = self
            .hashes
            .iter()
            .zip(&other.hashes)
            .filter(|(a, b)| a == b)
            .count();
        same as f64 / self.hashes.len() as f64
    }
}

/// `K` seeded hash functions.
#[derive(Debug, Clone)]
pub struct MinHasher {
    coefficients: Vec<(u64, u64)>,
    shingle_size: usize,
}

impl MinHasher {
    pub fn new(num_perm: usize, shingle_size: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coefficients = (0..num_perm)
            .map(|_| (rng.gen_range(1..MERSENNE_61), rng.gen_range(0..MERSENNE_61)))
            .collect();
        MinHasher {
            coefficients,
            shingle_size,
        }
    }

    pub fn num_perm(&self) -> usize {
        self.coefficients.len()
    }

    fn permute(&self, i: usize, x: u64) -> u64 {
        let (a, b) = self.coefficients[i];
        let x = u128::from(x % MERSENNE_61);
        ((u128::from(a) * x + u128::from(b)) % u128::from(MERSENNE_61)) as u64
    }

    /// Signature over raw 64-bit element ids.
    pub fn signature_of_ids(&self, ids: impl IntoIterator<Item = u64>) -> Result<MinHashSignature> {
        let mut hashes = vec![u64::MAX; self.num_perm()];
        let mut any = false;
        for x in ids {
            any = true;
            for (i, slot) in hashes.iter_mut().enumerate() {
                *slot = (*slot).min(self.permute(i, x));
            }
        }
        if !any {
            return Err(Error::Validation("cannot sign an empty shingle set".into()));
        }
        Ok(MinHashSignature {
            hashes,
            shingle_size: self.shingle_size,
        })
    }

    pub fn signature(&self, shingles: &BTreeSet<Shingle>) -> Result<MinHashSignature> {
        self.signature_of_ids(shingles.iter().map(|s| fingerprint(s)))
    }
}

/// One-shot signature of a shingle set.
pub fn minhash(shingles: &BTreeSet<Shingle>, num_perm: usize, seed: u64) -> Result<MinHashSignature> {
    let k = shingles.iter().next().map_or(0, Vec::len);
    MinHasher::new(num_perm, k, seed).signature(shingles)
}

pub fn exact_jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// `(bands, rows)` with `bands × rows = num_perm` whose S-curve midpoint
/// `(1/bands)^(1/rows)` is closest to `threshold`.
pub fn choose_banding(num_perm: usize, threshold: f64) -> (usize, usize) {
    (1..=num_perm)
        .filter(|r| num_perm.is_multiple_of(*r))
        .map(|r| (num_perm / r, r))
        .min_by(|&(b1, r1), &(b2, r2)| {
            let mid = |b: usize, r: usize| (1.0 / b as f64).powf(1.0 / r as f64);
            (mid(b1, r1) - threshold)
                .abs()
                .total_cmp(&(mid(b2, r2) - threshold).abs())
        })
        .unwrap_or((1, 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditOptions {
    pub threshold: f64,
    pub num_perm: usize,
    pub shingle_size: usize,
    pub seed: u64,
    /// Also require the exact shingle Jaccard to reach the threshold.
    pub exact_recheck: bool,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            threshold: DEFAULT_THRESHOLD,
            num_perm: DEFAULT_NUM_PERM,
            shingle_size: DEFAULT_SHINGLE,
            seed: 0,
            exact_recheck: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapPair {
    pub a: u64,
    pub b: u64,
    pub estimate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub pairs: Vec<OverlapPair>,
    pub threshold: f64,
    pub num_perm: usize,
    pub bands: usize,
    pub rows: usize,
    pub shingle_size: usize,
    pub seed: u64,
}

struct Signed {
    id: u64,
    shingles: BTreeSet<Shingle>,
    signature: MinHashSignature,
}

fn sign_all(corpus: &[SentenceRecord], hasher: &MinHasher, k: usize) -> Vec<Signed> {
    corpus
        .par_iter()
        .filter_map(|s| {
            let shingles = shingle(&s.text, k);
            let signature = hasher.signature(&shingles).ok()?;
            Some(Signed {
                id: s.id,
                shingles,
                signature,
            })
        })
        .collect()
}

fn band_key(band: usize, rows: &[u64]) -> (usize, u64) {
    (band, fnv1a(rows.iter().flat_map(|r| r.to_le_bytes()), FNV_OFFSET))
}

/// Sentence pairs across the two corpora whose estimated Jaccard similarity
/// reaches the threshold, sorted by estimate (descending), then ids.
pub fn audit_overlap(
    corpus_a: &[SentenceRecord],
    corpus_b: &[SentenceRecord],
    options: &AuditOptions,
) -> Result<OverlapReport> {
    if corpus_a.is_empty() || corpus_b.is_empty() {
        return Err(Error::Validation("both corpora must be non-empty".into()));
    }
    if !(options.threshold > 0.0 && options.threshold <= 1.0) {
        return Err(Error::Validation(format!("threshold {} is outside (0, 1]", options.threshold)));
    }
    if options.num_perm == 0 || options.shingle_size == 0 {
        return Err(Error::Validation("num_perm and shingle size must be positive".into()));
    }

    let hasher = MinHasher::new(options.num_perm, options.shingle_size, options.seed);
    let (bands, rows) = choose_banding(options.num_perm, options.threshold);
    let signed_a = sign_all(corpus_a, &hasher, options.shingle_size);
    let signed_b = sign_all(corpus_b, &hasher, options.shingle_size);

    let mut index: HashMap<(usize, u64), Vec<usize>> = HashMap::new();
    for (k, s) in signed_b.iter().enumerate() {
        for band in 0..bands {
            let key = band_key(band, &s.signature.hashes[band * rows..(band + 1) * rows]);
            index.entry(key).or_default().push(k);
        }
    }

    let mut pairs: Vec<OverlapPair> = signed_a
        .par_iter()
        .flat_map_iter(|sa| {
            let mut candidates = BTreeSet::new();
            for band in 0..bands {
                let key = band_key(band, &sa.signature.hashes[band * rows..(band + 1) * rows]);
                if let Some(hits) = index.get(&key) {
                    candidates.extend(hits.iter().copied());
                }
            }
            let mut found = Vec::new();
            for k in candidates {
                let sb = &signed_b[k];
                let estimate = sa.signature.jaccard(&sb.signature);
                if estimate < options.threshold {
                    continue;
                }
                let exact = if options.exact_recheck {
                    let j = exact_jaccard(&sa.shingles, &sb.shingles);
                    if j < options.threshold {
                        continue;
                    }
                    Some(j)
                } else {
                    None
                };
                found.push(OverlapPair {
                    a: sa.id,
                    b: sb.id,
                    estimate,
                    exact,
                });
            }
            found
        })
        .collect();
    pairs.sort_by(|x, y| {
        y.estimate
            .total_cmp(&x.estimate)
            .then(x.a.cmp(&y.a))
            .then(x.b.cmp(&y.b))
    });

    Ok(OverlapReport {
        pairs,
        threshold: options.threshold,
        num_perm: options.num_perm,
        bands,
        rows,
        shingle_size: options.shingle_size,
        seed: options.seed,
    })
}
