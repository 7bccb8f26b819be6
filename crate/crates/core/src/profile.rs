//! Empirical error-distance profiling of a naturally noisy corpus.
//!
//! Out-of-vocabulary words longer than two symbols are grouped into
//! overlapping length buckets. Within a bucket every pair of words gets a
//! normalized Levenshtein distance, DBSCAN clusters the precomputed matrix,
//! and the distances between members of the same cluster form the
//! empirical distribution. Noise points are ignored.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize_words, Lexicon};
use crate::error::{Error, Result};
use crate::noise::ParallelPair;
use crate::strdist::{align, normalized_levenshtein, AlignOp, EditCost};

pub const DEFAULT_EPS: f64 = 0.4;
pub const DEFAULT_MIN_SAMPLES: usize = 2;
pub const DEFAULT_BINS: usize = 20;
pub const DEFAULT_MATRIX_CAP: usize = 20_000;

/// Distinct words whose length lies within one symbol of `center`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthBucket {
    pub center: usize,
    pub members: Vec<String>,
}

/// Case-folded OOV words longer than two symbols. Tokens without any
/// letter (numbers, punctuation) are never flagged.
pub fn flag_oov<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> Result<BTreeSet<String>> {
    if lexicon.is_empty() {
        return Err(Error::Config("the lexicon is empty".into()));
    }
    Ok(tokens
        .iter()
        .map(|t| t.as_ref().to_lowercase())
        .filter(|t| t.chars().count() > 2 && t.chars().any(char::is_alphabetic))
        .filter(|t| !lexicon.contains(t))
        .collect())
}

/// One bucket per observed length, ascending. A word can sit in up to three
/// buckets; members are sorted.
pub fn bucket_by_length<S: AsRef<str>>(words: &[S]) -> Vec<LengthBucket> {
    let mut by_len: BTreeMap<usize, BTreeSet<&str>> = BTreeMap::new();
    for w in words {
        let w = w.as_ref();
        by_len.entry(w.chars().count()).or_default().insert(w);
    }
    by_len
        .keys()
        .map(|&center| {
            let members = by_len
                .range(center.saturating_sub(1)..=center + 1)
                .flat_map(|(_, ws)| ws.iter().map(|w| w.to_string()))
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            LengthBucket { center, members }
        })
        .collect()
}

/// Dense symmetric matrix of pairwise distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Validation("distance matrix is not square".into()));
        }
        Ok(DistanceMatrix {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Exact symmetry, finite non-negative entries, zero diagonal.
    pub fn validate(&self) -> Result<()> {
        for i in 0..self.n {
            if self.get(i, i) != 0.0 {
                return Err(Error::Validation(format!("diagonal entry {i} is not zero")));
            }
            for j in i + 1..self.n {
                let d = self.get(i, j);
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::Validation(format!("entry ({i}, {j}) = {d} is not a distance")));
                }
                if d != self.get(j, i) {
                    return Err(Error::Validation(format!("entries ({i}, {j}) and ({j}, {i}) differ")));
                }
            }
        }
        Ok(())
    }
}

/// Pairwise normalized Levenshtein distances between bucket members.
pub fn distance_matrix(bucket: &LengthBucket, cap: usize) -> Result<DistanceMatrix> {
    let n = bucket.members.len();
    if n == 0 {
        return Err(Error::Validation("cannot build a matrix for an empty bucket".into()));
    }
    if n > cap {
        return Err(Error::BucketTooLarge { size: n, cap });
    }
    let words: Vec<Vec<char>> = bucket.members.iter().map(|w| w.chars().collect()).collect();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| {
                    let d = crate::strdist::levenshtein(&words[i], &words[j]);
                    crate::strdist::normalize(d, words[i].len(), words[j].len())
                })
                .collect()
        })
        .collect();
    let mut data = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (k, &d) in row.iter().enumerate() {
            let j = i + 1 + k;
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { n, data })
}

/// DBSCAN labels: `Some(cluster)` or `None` for noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSet {
    pub labels: Vec<Option<usize>>,
    pub eps: f64,
    pub min_samples: usize,
}

impl ClusterSet {
    pub fn cluster_count(&self) -> usize {
        self.labels.iter().flatten().max().map_or(0, |&m| m + 1)
    }

    /// Member indices of each cluster, in cluster-id order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cluster_count()];
        for (i, label) in self.labels.iter().enumerate() {
            if let Some(c) = label {
                out[*c].push(i);
            }
        }
        out
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }
}

/// Standard DBSCAN over a precomputed metric. A point is a core point when
/// at least `min_samples` points, itself included, lie within `eps`.
/// Clusters are numbered in the order of their lowest-index core point; a
/// border point reachable from several clusters joins the first one.
pub fn dbscan(matrix: &DistanceMatrix, eps: f64, min_samples: usize) -> Result<ClusterSet> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::Validation(format!("eps must be positive, got {eps}")));
    }
    if min_samples == 0 {
        return Err(Error::Validation("min_samples must be at least 1".into()));
    }
    matrix.validate()?;

    let n = matrix.len();
    let neighbors: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            matrix
                .row(i)
                .iter()
                .enumerate()
                .filter(|&(_, &d)| d <= eps)
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_samples).collect();

    let mut labels = vec![None; n];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if !core[seed] || labels[seed].is_some() {
            continue;
        }
        labels[seed] = Some(next);
        queue.push_back(seed);
        while let Some(p) = queue.pop_front() {
            for &q in &neighbors[p] {
                if labels[q].is_none() {
                    labels[q] = Some(next);
                    if core[q] {
                        queue.push_back(q);
                    }
                }
            }
        }
        next += 1;
    }
    Ok(ClusterSet {
        labels,
        eps,
        min_samples,
    })
}

/// Binned distribution over [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceHistogram {
    pub bin_edges: Vec<f64>,
    pub mass: Vec<f64>,
    pub sample_count: u64,
}

impl DistanceHistogram {
    pub fn bins(&self) -> usize {
        self.mass.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.bin_edges.len() != self.mass.len() + 1 || self.mass.is_empty() {
            return Err(Error::Validation("histogram needs B masses and B+1 edges".into()));
        }
        if self.bin_edges.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
            return Err(Error::Validation("bin edges must increase strictly".into()));
        }
        if self.mass.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::Validation("bin masses must be non-negative".into()));
        }
        let total: f64 = self.mass.iter().sum();
        if self.sample_count > 0 && (total - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!("bin masses sum to {total}, not 1")));
        }
        Ok(())
    }
}

/// Integer bin counts; merging is associative and commutative, so parallel
/// reductions are order-independent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistogramCounts {
    counts: Vec<u64>,
}

impl HistogramCounts {
    pub fn new(bins: usize) -> Self {
        assert!(bins > 0, "histogram needs at least one bin");
        HistogramCounts {
            counts: vec![0; bins],
        }
    }

    pub fn bin_of(&self, x: f64) -> usize {
        let bins = self.counts.len();
        // nudge so k/n distances that land on an edge are not lost to rounding
        let k = (x.clamp(0.0, 1.0) * bins as f64 + 1e-9).floor() as usize;
        k.min(bins - 1)
    }

    pub fn add(&mut self, x: f64) {
        let k = self.bin_of(x);
        self.counts[k] += 1;
    }

    pub fn merge(mut self, other: &HistogramCounts) -> Self {
        assert_eq!(self.counts.len(), other.counts.len());
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn to_histogram(&self) -> DistanceHistogram {
        let bins = self.counts.len();
        let total = self.total();
        let mass = self
            .counts
            .iter()
            .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
            .collect();
        DistanceHistogram {
            bin_edges: (0..=bins).map(|k| k as f64 / bins as f64).collect(),
            mass,
            sample_count: total,
        }
    }
}

pub fn histogram_from_samples(samples: &[f64], bins: usize) -> DistanceHistogram {
    let mut counts = HistogramCounts::new(bins);
    for &x in samples {
        counts.add(x);
    }
    counts.to_histogram()
}

/// A clustered bucket: the matrix and the labels computed from it.
#[derive(Debug, Clone)]
pub struct BucketClusters {
    pub words: Vec<String>,
    pub matrix: DistanceMatrix,
    pub clusters: ClusterSet,
}

impl BucketClusters {
    /// Distances between every pair of points sharing a cluster.
    pub fn intra_cluster_distances(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for members in self.clusters.clusters() {
            for (k, &i) in members.iter().enumerate() {
                for &j in &members[k + 1..] {
                    out.push(self.matrix.get(i, j));
                }
            }
        }
        out
    }
}

/// Histogram of all intra-cluster pairwise distances across buckets.
pub fn empirical_histogram(sets: &[BucketClusters], bins: usize) -> Result<DistanceHistogram> {
    if sets.iter().all(|s| s.clusters.cluster_count() == 0) {
        return Err(Error::EmptyProfile("no clusters in any bucket".into()));
    }
    let counts = sets
        .par_iter()
        .map(|s| {
            let mut c = HistogramCounts::new(bins);
            for d in s.intra_cluster_distances() {
                c.add(d);
            }
            c
        })
        .reduce(|| HistogramCounts::new(bins), |a, b| a.merge(&b));
    Ok(counts.to_histogram())
}

/// Character distances of the words a noisy sentence substitutes for clean
/// ones, under a word-level alignment. Unchanged words contribute nothing.
pub fn changed_word_distances(clean: &str, noisy: &str) -> Vec<f64> {
    let src = tokenize_words(clean);
    let tgt = tokenize_words(noisy);
    align(&src, &tgt)
        .into_iter()
        .filter_map(|op| match op {
            AlignOp::Substitute { src: i, tgt: j } => Some(normalized_levenshtein(&src[i], &tgt[j])),
            _ => None,
        })
        .filter(|&d| d > 0.0)
        .collect()
}

/// Histogram of changed-word distances over `(clean, noisy)` pairs.
pub fn synthetic_histogram_texts<'a, I>(pairs: I, bins: usize) -> Result<DistanceHistogram>
where
    I: IntoParallelIterator<Item = (&'a str, &'a str)>,
{
    let counts = pairs
        .into_par_iter()
        .fold(
            || HistogramCounts::new(bins),
            |mut acc, (clean, noisy)| {
                for d in changed_word_distances(clean, noisy) {
                    acc.add(d);
                }
                acc
            },
        )
        .reduce(|| HistogramCounts::new(bins), |a, b| a.merge(&b));
    if counts.total() == 0 {
        return Err(Error::EmptyProfile("no changed words in any pair".into()));
    }
    Ok(counts.to_histogram())
}

pub fn synthetic_histogram(pairs: &[ParallelPair], bins: usize) -> Result<DistanceHistogram> {
    if pairs.is_empty() {
        return Err(Error::Validation("no pairs to profile".into()));
    }
    synthetic_histogram_texts(
        pairs.par_iter().map(|p| (p.clean.as_str(), p.noisy.as_str())),
        bins,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    pub eps: f64,
    pub min_samples: usize,
    pub bins: usize,
    pub matrix_cap: usize,
}

impl Default for ProfileParams {
    fn default() -> Self {
        ProfileParams {
            eps: DEFAULT_EPS,
            min_samples: DEFAULT_MIN_SAMPLES,
            bins: DEFAULT_BINS,
            matrix_cap: DEFAULT_MATRIX_CAP,
        }
    }
}

/// OOV word and its closest lexicon entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearestEntry {
    pub word: String,
    pub nearest: String,
    pub distance: f64,
}

/// Profile document consumed by calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub kind: ProfileKind,
    pub histogram: DistanceHistogram,
    /// cluster size -> number of clusters of that size
    pub cluster_sizes: BTreeMap<usize, usize>,
    pub eps: f64,
    pub min_samples: usize,
    pub bins: usize,
    pub oov_words: usize,
    pub buckets: usize,
    pub clusters: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nearest: Vec<NearestEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Empirical,
    Synthetic,
}

impl Profile {
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let profile: Profile = serde_json::from_str(&text)?;
        profile.histogram.validate()?;
        Ok(profile)
    }

    /// Wraps a synthetic-side histogram so it can serve as a calibration target.
    pub fn synthetic(histogram: DistanceHistogram) -> Self {
        let bins = histogram.bins();
        Profile {
            kind: ProfileKind::Synthetic,
            histogram,
            cluster_sizes: BTreeMap::new(),
            eps: DEFAULT_EPS,
            min_samples: DEFAULT_MIN_SAMPLES,
            bins,
            oov_words: 0,
            buckets: 0,
            clusters: 0,
            nearest: Vec::new(),
        }
    }
}

/// Full empirical pipeline over the sentences of a noisy corpus.
pub fn profile_corpus<S: AsRef<str> + Sync>(
    sentences: &[S],
    lexicon: &Lexicon,
    params: &ProfileParams,
) -> Result<Profile> {
    let tokens: Vec<String> = sentences
        .par_iter()
        .flat_map_iter(|s| tokenize_words(s.as_ref()))
        .collect();
    let oov: Vec<String> = flag_oov(&tokens, lexicon)?.into_iter().collect();
    let buckets = bucket_by_length(&oov);
    let clustered: Vec<BucketClusters> = buckets
        .into_iter()
        .map(|b| {
            let matrix = distance_matrix(&b, params.matrix_cap)?;
            let clusters = dbscan(&matrix, params.eps, params.min_samples)?;
            Ok(BucketClusters {
                words: b.members,
                matrix,
                clusters,
            })
        })
        .collect::<Result<_>>()?;

    let histogram = empirical_histogram(&clustered, params.bins)?;
    let mut cluster_sizes = BTreeMap::new();
    let mut clusters = 0;
    for set in &clustered {
        for members in set.clusters.clusters() {
            *cluster_sizes.entry(members.len()).or_default() += 1;
            clusters += 1;
        }
    }
    Ok(Profile {
        kind: ProfileKind::Empirical,
        histogram,
        cluster_sizes,
        eps: params.eps,
        min_samples: params.min_samples,
        bins: params.bins,
        oov_words: oov.len(),
        buckets: clustered.len(),
        clusters,
        nearest: Vec::new(),
    })
}

/// Closest lexicon entry for each OOV word. Only entries whose length is
/// within two symbols are compared.
pub fn nearest_vocabulary<S: AsRef<str> + Sync>(oov: &[S], lexicon: &Lexicon) -> Vec<NearestEntry> {
    let mut by_len: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for entry in lexicon.iter() {
        by_len.entry(entry.chars().count()).or_default().push(entry);
    }
    for entries in by_len.values_mut() {
        entries.sort_unstable();
    }
    oov.par_iter()
        .filter_map(|w| {
            let w = w.as_ref();
            let len = w.chars().count();
            by_len
                .range(len.saturating_sub(2)..=len + 2)
                .flat_map(|(_, es)| es.iter())
                .map(|e| (EditCost::between(w, e).normalized, *e))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)))
                .map(|(distance, e)| NearestEntry {
                    word: w.to_string(),
                    nearest: e.to_string(),
                    distance,
                })
        })
        .collect()
}
