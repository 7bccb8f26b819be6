//! Edit-distance kernels.
//!
//! Strings are compared as sequences of Unicode scalar values, so a hooked
//! letter such as `ɗ` (U+0257) is one symbol even though it takes two bytes
//! in UTF-8. Token sequences reuse the same kernel with whole tokens as
//! symbols.

use serde::{Deserialize, Serialize};

/// Raw and length-normalized edit distance between two sequences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EditCost {
    pub distance: usize,
    pub normalized: f64,
}

impl EditCost {
    pub fn between(a: &str, b: &str) -> Self {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let distance = levenshtein(&a, &b);
        EditCost {
            distance,
            normalized: normalize(distance, a.len(), b.len()),
        }
    }
}

/// Minimum number of single-symbol insertions, deletions and substitutions
/// turning `a` into `b`.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    // keep the shorter sequence on the row axis
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    if b.is_empty() {
        return a.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = diag + usize::from(x != y);
            diag = row[j + 1];
            row[j + 1] = sub.min(row[j] + 1).min(diag + 1);
        }
    }
    row[b.len()]
}

/// Levenshtein distance over the Unicode scalars of two strings.
pub fn levenshtein_str(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein(&a, &b)
}

/// Edit distance divided by the longer length; `0.0` when both are empty.
pub fn normalized_levenshtein(a: &str, b: &str) -> f64 {
    EditCost::between(a, b).normalized
}

pub(crate) fn normalize(distance: usize, len_a: usize, len_b: usize) -> f64 {
    let longest = len_a.max(len_b);
    if longest == 0 {
        0.0
    } else {
        distance as f64 / longest as f64
    }
}

/// Word-level edit distance with whole tokens as symbols.
pub fn token_edit_distance<S: AsRef<str>>(reference: &[S], hypothesis: &[S]) -> usize {
    let r: Vec<&str> = reference.iter().map(AsRef::as_ref).collect();
    let h: Vec<&str> = hypothesis.iter().map(AsRef::as_ref).collect();
    levenshtein(&r, &h)
}

/// One step of an optimal alignment between a source and a target sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignOp {
    Match { src: usize, tgt: usize },
    Substitute { src: usize, tgt: usize },
    Delete { src: usize },
    Insert { tgt: usize },
}

/// Full-table Levenshtein with a backtrace. Ties prefer the diagonal, then
/// deletion, then insertion, so the alignment is deterministic.
pub fn align<T: PartialEq>(src: &[T], tgt: &[T]) -> Vec<AlignOp> {
    let (n, m) = (src.len(), tgt.len());
    let width = m + 1;
    let mut table = vec![0usize; (n + 1) * width];
    for j in 0..=m {
        table[j] = j;
    }
    for i in 1..=n {
        table[i * width] = i;
        for j in 1..=m {
            let sub = table[(i - 1) * width + j - 1] + usize::from(src[i - 1] != tgt[j - 1]);
            let del = table[(i - 1) * width + j] + 1;
            let ins = table[i * width + j - 1] + 1;
            table[i * width + j] = sub.min(del).min(ins);
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = table[i * width + j];
        if i > 0 && j > 0 {
            let same = src[i - 1] == tgt[j - 1];
            if table[(i - 1) * width + j - 1] + usize::from(!same) == here {
                i -= 1;
                j -= 1;
                ops.push(if same {
                    AlignOp::Match { src: i, tgt: j }
                } else {
                    AlignOp::Substitute { src: i, tgt: j }
                });
                continue;
            }
        }
        if i > 0 && table[(i - 1) * width + j] + 1 == here {
            i -= 1;
            ops.push(AlignOp::Delete { src: i });
        } else {
            j -= 1;
            ops.push(AlignOp::Insert { tgt: j });
        }
    }
    ops.reverse();
    ops
}
