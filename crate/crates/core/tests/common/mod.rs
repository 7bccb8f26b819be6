#![allow(dead_code)]

pub mod props;

use std::path::Path;

use hausa_noise::SentenceRecord;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn vocabulary() -> Vec<String> {
    std::fs::read_to_string(fixture("hausa_words.txt"))
        .expect("vocabulary fixture")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

/// Hausa-like sentences of 6–16 words with punctuation split off by spaces.
pub fn hausa_corpus(n: usize, seed: u64) -> Vec<SentenceRecord> {
    let words = vocabulary();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let len = rng.gen_range(6..=16);
            let mut toks: Vec<String> = Vec::with_capacity(len + 2);
            for k in 0..len {
                let mut w = words.choose(&mut rng).unwrap().clone();
                if k == 0 {
                    let mut cs = w.chars();
                    if let Some(c) = cs.next() {
                        w = c.to_uppercase().chain(cs).collect();
                    }
                }
                toks.push(w);
                if k + 1 < len && rng.gen_bool(0.08) {
                    toks.push(",".into());
                }
            }
            toks.push(if rng.gen_bool(0.85) { "." } else { "?" }.into());
            SentenceRecord::new(i as u64, toks.join(" "), "synthetic")
        })
        .collect()
}

pub fn write_lines(path: &Path, records: &[SentenceRecord]) {
    let body: String = records.iter().map(|r| format!("{}\n", r.text)).collect();
    std::fs::write(path, body).unwrap();
}

/// Symmetric matrix with zero diagonal and uniform off-diagonal distances.
pub fn random_matrix(n: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d: f64 = rng.gen();
            m[i][j] = d;
            m[j][i] = d;
        }
    }
    m
}

/// Exhaustive density-connectivity oracle.
///
/// Returns the partition of core points (each sorted, ordered by first
/// member) and, for each point, the admissible clusters: `None` for cores,
/// the indices of clusters of its core neighbours otherwise (empty = noise).
pub struct DbscanOracle {
    pub core_clusters: Vec<Vec<usize>>,
    pub admissible: Vec<Option<Vec<usize>>>,
}

pub fn dbscan_oracle(m: &[Vec<f64>], eps: f64, min_samples: usize) -> DbscanOracle {
    let n = m.len();
    let core: Vec<bool> = (0..n)
        .map(|i| (0..n).filter(|&j| m[i][j] <= eps).count() >= min_samples)
        .collect();
    // Transitive closure of core-core reachability by repeated relaxation.
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            reach[i][j] = core[i] && core[j] && m[i][j] <= eps;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    let mut cluster_of = vec![None; n];
    let mut core_clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        if !core[i] || cluster_of[i].is_some() {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&j| j == i || reach[i][j]).collect();
        for &j in &members {
            cluster_of[j] = Some(core_clusters.len());
        }
        core_clusters.push(members);
    }
    let admissible = (0..n)
        .map(|i| {
            if core[i] {
                return None;
            }
            let mut ks: Vec<usize> = (0..n)
                .filter(|&j| core[j] && m[i][j] <= eps)
                .filter_map(|j| cluster_of[j])
                .collect();
            ks.sort_unstable();
            ks.dedup();
            Some(ks)
        })
        .collect();
    DbscanOracle { core_clusters, admissible }
}

/// Compares labels against the oracle up to label permutation.
pub fn matches_oracle(labels: &[Option<usize>], oracle: &DbscanOracle) -> Result<(), String> {
    // Oracle cluster index -> implementation label, fixed by the core points.
    let mut map: Vec<Option<usize>> = vec![None; oracle.core_clusters.len()];
    let mut used = std::collections::BTreeSet::new();
    for (k, members) in oracle.core_clusters.iter().enumerate() {
        let label = labels[members[0]].ok_or_else(|| format!("core {} is noise", members[0]))?;
        if members.iter().any(|&j| labels[j] != Some(label)) {
            return Err(format!("oracle cluster {k} is split"));
        }
        if !used.insert(label) {
            return Err(format!("label {label} merges two oracle clusters"));
        }
        map[k] = Some(label);
    }
    for (i, adm) in oracle.admissible.iter().enumerate() {
        let Some(adm) = adm else { continue };
        match labels[i] {
            None if adm.is_empty() => {}
            None => return Err(format!("border point {i} left as noise")),
            Some(l) if adm.iter().any(|&k| map[k] == Some(l)) => {}
            Some(l) => return Err(format!("point {i} has inadmissible label {l}")),
        }
    }
    Ok(())
}

/// Two id sets over a universe of `union` ids sharing exactly `inter`.
pub fn set_pair(union: usize, inter: usize, rng: &mut impl Rng) -> (Vec<u64>, Vec<u64>) {
    let mut ids: Vec<u64> = Vec::with_capacity(union);
    let mut seen = std::collections::HashSet::new();
    while ids.len() < union {
        let x: u64 = rng.gen();
        if seen.insert(x) {
            ids.push(x);
        }
    }
    let only = union - inter;
    let split = inter + only / 2;
    let a = ids[..split].to_vec();
    let mut b = ids[..inter].to_vec();
    b.extend_from_slice(&ids[split..]);
    (a, b)
}

#[derive(serde::Deserialize)]
pub struct BleuCorpusCase {
    pub file: String,
    pub score: f64,
    pub counts: [usize; 4],
    pub totals: [usize; 4],
    pub sys_len: usize,
    pub ref_len: usize,
}

#[derive(serde::Deserialize)]
pub struct BleuEdgeCase {
    pub hyp: String,
    #[serde(rename = "ref")]
    pub reference: String,
    pub score: f64,
}

#[derive(serde::Deserialize)]
pub struct BleuExpected {
    pub corpora: Vec<BleuCorpusCase>,
    pub edge: Vec<BleuEdgeCase>,
}

pub fn bleu_expected() -> BleuExpected {
    let text = std::fs::read_to_string(fixture("bleu_expected.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// `(references, hypotheses)` of a `noisy<TAB>clean` fixture.
pub fn bleu_pairs(file: &str) -> (Vec<String>, Vec<String>) {
    let reader = std::io::BufReader::new(std::fs::File::open(fixture(file)).unwrap());
    let pairs = hausa_noise::noise::read_pairs_tsv(reader).unwrap();
    pairs.into_iter().map(|(noisy, clean)| (clean, noisy)).unzip()
}

pub fn bin() -> std::process::Command {
    std::process::Command::new(env!("CARGO_BIN_EXE_hausa-noise"))
}

/// Runs the CLI and returns `(status code, stdout, stderr)`.
pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().expect("spawn hausa-noise");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Mean signed deviation of the 128-permutation estimate from the exact
/// Jaccard over `pairs` random set pairs at each of 0.2, 1/3, 0.5, 0.8.
/// Returns `(J, mean deviation, 3-sigma bound)` per level.
pub fn minhash_deviation(pairs_per_level: usize, seed: u64) -> Vec<(f64, f64, f64)> {
    let hasher = hausa_noise::dedup::MinHasher::new(128, 3, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    [(60, 12), (60, 20), (60, 30), (60, 48)]
        .into_iter()
        .map(|(union, inter)| {
            let j = inter as f64 / union as f64;
            let mut signed = 0.0;
            for _ in 0..pairs_per_level {
                let (a, b) = set_pair(union, inter, &mut rng);
                let est = hasher
                    .signature_of_ids(a)
                    .unwrap()
                    .jaccard(&hasher.signature_of_ids(b).unwrap());
                signed += est - j;
            }
            (j, signed / pairs_per_level as f64, 3.0 * (j * (1.0 - j) / 128.0).sqrt())
        })
        .collect()
}

/// Two corpora where every third sentence of `a` reappears in `b` with one
/// of its last two words replaced. Returns the corpora and the planted
/// `(a id, b id)` pairs whose exact shingle Jaccard is at least 0.8.
pub fn planted_fixture(n: usize, seed: u64) -> (Vec<SentenceRecord>, Vec<SentenceRecord>, Vec<(u64, u64)>) {
    use hausa_noise::dedup::{exact_jaccard, shingle};
    let words = vocabulary();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sentence = |rng: &mut ChaCha8Rng| -> Vec<String> {
        let len = rng.gen_range(15..=30);
        (0..len).map(|_| words.choose(rng).unwrap().clone()).collect()
    };
    let (mut a, mut b, mut planted) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..n as u64 {
        let base = sentence(&mut rng);
        a.push(SentenceRecord::new(i, base.join(" "), "a"));
        let text = if i % 3 == 0 {
            let mut copy = base.clone();
            let k = copy.len() - 1 - rng.gen_range(0..2);
            copy[k] = words.choose(&mut rng).unwrap().clone();
            let copy = copy.join(" ");
            if exact_jaccard(&shingle(&base.join(" "), 3), &shingle(&copy, 3)) >= 0.8 {
                planted.push((i, b.len() as u64));
            }
            copy
        } else {
            sentence(&mut rng).join(" ")
        };
        b.push(SentenceRecord::new(b.len() as u64, text, "b"));
    }
    (a, b, planted)
}
