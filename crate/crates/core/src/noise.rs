//! Probabilistic writing-noise model and parallel corpus generation.
//!
//! Every sentence gets its own ChaCha8 generator seeded from
//! [`sentence_seed`]`(config.seed, sentence.id)`, so the noisy text depends
//! only on the clean text, the sentence id and the configuration. Corpus
//! generation can therefore fan out over any number of workers.
//!
//! A sentence passes through four stages in a fixed order:
//!
//! 1. hooked-letter substitution (`incorrect_characters`)
//! 2. per-symbol character edits (delete, duplicate, substitute, transpose)
//! 3. per-word two-symbol chunk deletion and insertion
//! 4. spacing edits (`random_spacing` inserts, `remove_spaces` removes)
//!
//! Each fired edit is recorded in a [`NoiseTrace`]; replaying the trace on
//! the clean sentence reproduces the noisy one.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{for_each_line, SentenceRecord};
use crate::error::{Error, Result};

pub type NoiseRng = ChaCha8Rng;

/// The nine per-site probabilities plus the generation seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub random_spacing: f64,
    pub remove_spaces: f64,
    pub incorrect_characters: f64,
    pub delete_characters: f64,
    pub duplicate_characters: f64,
    pub substitute_characters: f64,
    pub transpose_characters: f64,
    pub delete_chunk: f64,
    pub insert_chunk: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Probability keys in their serialized spelling.
pub const NOISE_KEYS: [&str; 9] = [
    "random_spacing",
    "remove_spaces",
    "incorrect_characters",
    "delete_characters",
    "duplicate_characters",
    "substitute_characters",
    "transpose_characters",
    "delete_chunk",
    "insert_chunk",
];

impl NoiseConfig {
    /// The reference configuration derived from naturally noisy Hausa tweets.
    pub const TWEET_PROFILE: NoiseConfig = NoiseConfig {
        random_spacing: 0.02,
        remove_spaces: 0.15,
        incorrect_characters: 0.02,
        delete_characters: 0.005,
        duplicate_characters: 0.01,
        substitute_characters: 0.001,
        transpose_characters: 0.01,
        delete_chunk: 0.0015,
        insert_chunk: 0.001,
        seed: 0,
    };

    pub fn zero() -> Self {
        Self::from_probabilities([0.0; 9], 0)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Probabilities in [`NOISE_KEYS`] order.
    pub fn probabilities(&self) -> [f64; 9] {
        [
            self.random_spacing,
            self.remove_spaces,
            self.incorrect_characters,
            self.delete_characters,
            self.duplicate_characters,
            self.substitute_characters,
            self.transpose_characters,
            self.delete_chunk,
            self.insert_chunk,
        ]
    }

    pub fn from_probabilities(p: [f64; 9], seed: u64) -> Self {
        NoiseConfig {
            random_spacing: p[0],
            remove_spaces: p[1],
            incorrect_characters: p[2],
            delete_characters: p[3],
            duplicate_characters: p[4],
            substitute_characters: p[5],
            transpose_characters: p[6],
            delete_chunk: p[7],
            insert_chunk: p[8],
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (key, value) in NOISE_KEYS.iter().zip(self.probabilities()) {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::Probability {
                    key: (*key).to_string(),
                    value,
                });
            }
        }
        Ok(())
    }

    /// Parses and validates a TOML document with exactly the nine probability
    /// keys and an optional `seed`.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: NoiseConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Fails only for seeds above `i64::MAX`, which TOML cannot represent.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_toml_str(&text)
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self::TWEET_PROFILE
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-sentence seed: `splitmix64(seed XOR splitmix64(id))`.
pub fn sentence_seed(seed: u64, id: u64) -> u64 {
    splitmix64(seed ^ splitmix64(id))
}

pub fn sentence_rng(seed: u64, id: u64) -> NoiseRng {
    NoiseRng::seed_from_u64(sentence_seed(seed, id))
}

/// Which noise operation produced a trace entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseOp {
    RandomSpacing,
    RemoveSpaces,
    IncorrectCharacters,
    DeleteCharacters,
    DuplicateCharacters,
    SubstituteCharacters,
    TransposeCharacters,
    DeleteChunk,
    InsertChunk,
}

/// One fired edit. `position` is a symbol index into the text as it stands
/// just before this edit, so traces replay strictly in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceOp {
    pub op: NoiseOp,
    pub position: usize,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseTrace {
    pub ops: Vec<TraceOp>,
}

impl NoiseTrace {
    /// Applies the recorded edits to `clean`, checking each `before` span.
    pub fn replay(&self, clean: &str) -> Result<String> {
        let mut text: Vec<char> = clean.chars().collect();
        for (k, op) in self.ops.iter().enumerate() {
            let before: Vec<char> = op.before.chars().collect();
            let end = op.position + before.len();
            if end > text.len() || text[op.position..end] != before[..] {
                return Err(Error::Validation(format!(
                    "trace op {k} ({:?}) does not match the text at symbol {}",
                    op.op, op.position
                )));
            }
            text.splice(op.position..end, op.after.chars());
        }
        Ok(text.into_iter().collect())
    }

    pub fn count(&self, op: NoiseOp) -> usize {
        self.ops.iter().filter(|o| o.op == op).count()
    }
}

/// An aligned clean/noisy sentence pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelPair {
    pub id: u64,
    pub clean: String,
    pub noisy: String,
    pub trace: NoiseTrace,
}

const HOOKED: [(char, char); 8] = [
    ('ɓ', 'b'),
    ('ɗ', 'd'),
    ('ƙ', 'k'),
    ('ƴ', 'y'),
    ('Ɓ', 'B'),
    ('Ɗ', 'D'),
    ('Ƙ', 'K'),
    ('Ƴ', 'Y'),
];

fn plain_form(c: char) -> Option<char> {
    HOOKED.iter().find(|(h, _)| *h == c).map(|&(_, p)| p)
}

/// Letters a random substitution may produce: basic Latin in both cases,
/// the hooked letters in both cases, and the apostrophe.
pub const SUBSTITUTION_ALPHABET: &str =
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZɓɗƙƴƁƊƘƳ'";

fn substitution_alphabet() -> &'static [char] {
    static ALPHABET: std::sync::OnceLock<Vec<char>> = std::sync::OnceLock::new();
    ALPHABET.get_or_init(|| SUBSTITUTION_ALPHABET.chars().collect())
}

fn fires(rng: &mut impl Rng, p: f64) -> bool {
    p > 0.0 && rng.gen::<f64>() < p
}

fn record(trace: &mut Vec<TraceOp>, op: NoiseOp, position: usize, before: &[char], after: &[char]) {
    trace.push(TraceOp {
        op,
        position,
        before: before.iter().collect(),
        after: after.iter().collect(),
    });
}

fn hooked_pass(text: &[char], p: f64, rng: &mut impl Rng, trace: &mut Vec<TraceOp>) -> Vec<char> {
    let mut out = Vec::with_capacity(text.len());
    for &c in text {
        match plain_form(c) {
            Some(plain) if fires(rng, p) => {
                record(trace, NoiseOp::IncorrectCharacters, out.len(), &[c], &[plain]);
                out.push(plain);
            }
            _ => out.push(c),
        }
    }
    out
}

fn character_pass(
    text: &[char],
    config: &NoiseConfig,
    rng: &mut impl Rng,
    trace: &mut Vec<TraceOp>,
) -> Vec<char> {
    let mut out = Vec::with_capacity(text.len() + 8);
    let mut i = 0;
    while i < text.len() {
        let c = text[i];
        if c.is_whitespace() {
            out.push(c);
            i += 1;
            continue;
        }
        let pos = out.len();
        if fires(rng, config.delete_characters) {
            record(trace, NoiseOp::DeleteCharacters, pos, &[c], &[]);
        } else if fires(rng, config.duplicate_characters) {
            record(trace, NoiseOp::DuplicateCharacters, pos, &[c], &[c, c]);
            out.extend([c, c]);
        } else if fires(rng, config.substitute_characters) {
            let alphabet = substitution_alphabet();
            let mut pick = alphabet[rng.gen_range(0..alphabet.len())];
            while pick == c {
                pick = alphabet[rng.gen_range(0..alphabet.len())];
            }
            record(trace, NoiseOp::SubstituteCharacters, pos, &[c], &[pick]);
            out.push(pick);
        } else if i + 1 < text.len()
            && !text[i + 1].is_whitespace()
            && fires(rng, config.transpose_characters)
        {
            let next = text[i + 1];
            record(trace, NoiseOp::TransposeCharacters, pos, &[c, next], &[next, c]);
            out.extend([next, c]);
            i += 1;
        } else {
            out.push(c);
        }
        i += 1;
    }
    out
}

fn chunk_pass(
    text: &[char],
    p_delete: f64,
    p_insert: f64,
    rng: &mut impl Rng,
    trace: &mut Vec<TraceOp>,
) -> Vec<char> {
    let mut out = Vec::with_capacity(text.len() + 4);
    let mut i = 0;
    while i < text.len() {
        if text[i].is_whitespace() {
            out.push(text[i]);
            i += 1;
            continue;
        }
        let end = text[i..]
            .iter()
            .position(|c| c.is_whitespace())
            .map_or(text.len(), |k| i + k);
        let mut word = text[i..end].to_vec();
        let start = out.len();
        if word.len() >= 3 && fires(rng, p_delete) {
            let offset = rng.gen_range(0..=word.len() - 2);
            let removed: Vec<char> = word.drain(offset..offset + 2).collect();
            record(trace, NoiseOp::DeleteChunk, start + offset, &removed, &[]);
        }
        if word.len() >= 2 && fires(rng, p_insert) {
            let from = rng.gen_range(0..=word.len() - 2);
            let chunk = [word[from], word[from + 1]];
            let at = rng.gen_range(0..=word.len());
            record(trace, NoiseOp::InsertChunk, start + at, &[], &chunk);
            word.splice(at..at, chunk);
        }
        out.extend(word);
        i = end;
    }
    out
}

fn spacing_pass(
    text: &[char],
    p_insert: f64,
    p_remove: f64,
    rng: &mut impl Rng,
    trace: &mut Vec<TraceOp>,
) -> Vec<char> {
    let mut out = Vec::with_capacity(text.len() + 4);
    for (i, &c) in text.iter().enumerate() {
        if c == ' ' {
            if fires(rng, p_remove) {
                record(trace, NoiseOp::RemoveSpaces, out.len(), &[' '], &[]);
            } else {
                out.push(c);
            }
            continue;
        }
        let intra_word = i > 0 && !text[i - 1].is_whitespace() && !c.is_whitespace();
        if intra_word && fires(rng, p_insert) {
            record(trace, NoiseOp::RandomSpacing, out.len(), &[], &[' ']);
            out.push(' ');
        }
        out.push(c);
    }
    out
}

/// Replaces each hooked letter with its plain counterpart with probability `p`.
pub fn substitute_hooked(text: &str, p: f64, rng: &mut impl Rng) -> String {
    let chars: Vec<char> = text.chars().collect();
    hooked_pass(&chars, p, rng, &mut Vec::new()).into_iter().collect()
}

/// Removes each existing space with `p_remove`; inserts a space at each
/// boundary between two non-space symbols with `p_insert`.
pub fn perturb_spacing(text: &str, p_insert: f64, p_remove: f64, rng: &mut impl Rng) -> String {
    let chars: Vec<char> = text.chars().collect();
    spacing_pass(&chars, p_insert, p_remove, rng, &mut Vec::new())
        .into_iter()
        .collect()
}

/// One left-to-right pass over non-space symbols. At most one edit fires per
/// position, tried in the order delete, duplicate, substitute, transpose.
/// A transposed pair is consumed as a whole.
pub fn perturb_characters(text: &str, config: &NoiseConfig, rng: &mut impl Rng) -> String {
    let chars: Vec<char> = text.chars().collect();
    character_pass(&chars, config, rng, &mut Vec::new())
        .into_iter()
        .collect()
}

/// Per word: drop a two-symbol chunk with `p_delete` (words shorter than
/// three symbols are exempt), then copy a two-symbol chunk of the word to a
/// random offset within it with `p_insert`.
pub fn perturb_chunks(text: &str, p_delete: f64, p_insert: f64, rng: &mut impl Rng) -> String {
    let chars: Vec<char> = text.chars().collect();
    chunk_pass(&chars, p_delete, p_insert, rng, &mut Vec::new())
        .into_iter()
        .collect()
}

/// Corrupts one sentence with its own seeded generator.
pub fn apply_noise(sentence: &SentenceRecord, config: &NoiseConfig) -> ParallelPair {
    let mut rng = sentence_rng(config.seed, sentence.id);
    let mut ops = Vec::new();
    let text: Vec<char> = sentence.text.chars().collect();
    let text = hooked_pass(&text, config.incorrect_characters, &mut rng, &mut ops);
    let text = character_pass(&text, config, &mut rng, &mut ops);
    let text = chunk_pass(&text, config.delete_chunk, config.insert_chunk, &mut rng, &mut ops);
    let text = spacing_pass(
        &text,
        config.random_spacing,
        config.remove_spaces,
        &mut rng,
        &mut ops,
    );
    ParallelPair {
        id: sentence.id,
        clean: sentence.text.clone(),
        noisy: text.into_iter().collect(),
        trace: NoiseTrace { ops },
    }
}

/// Sidecar document describing how a parallel corpus was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub tool: String,
    pub version: String,
    pub config: NoiseConfig,
    pub seed: u64,
    pub sentences: usize,
    pub changed: usize,
    pub sources: BTreeMap<String, usize>,
    pub op_counts: BTreeMap<NoiseOp, usize>,
}

impl CorpusManifest {
    pub fn new(config: &NoiseConfig) -> Self {
        CorpusManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: *config,
            seed: config.seed,
            sentences: 0,
            changed: 0,
            sources: BTreeMap::new(),
            op_counts: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, source: &str, pair: &ParallelPair) {
        self.sentences += 1;
        if pair.noisy != pair.clean {
            self.changed += 1;
        }
        *self.sources.entry(source.to_string()).or_default() += 1;
        for op in &pair.trace.ops {
            *self.op_counts.entry(op.op).or_default() += 1;
        }
    }
}

/// Corrupts a batch of sentences on the current rayon pool, preserving order.
pub fn noise_batch(batch: &[SentenceRecord], config: &NoiseConfig) -> Vec<ParallelPair> {
    batch.par_iter().map(|s| apply_noise(s, config)).collect()
}

/// One pair per sentence plus the manifest.
pub fn generate_parallel_corpus(
    corpus: &[SentenceRecord],
    config: &NoiseConfig,
) -> Result<(Vec<ParallelPair>, CorpusManifest)> {
    if corpus.is_empty() {
        return Err(Error::Validation("cannot generate pairs from an empty corpus".into()));
    }
    config.validate()?;
    let pairs = noise_batch(corpus, config);
    let mut manifest = CorpusManifest::new(config);
    for (s, pair) in corpus.iter().zip(&pairs) {
        manifest.add(&s.source, pair);
    }
    Ok((pairs, manifest))
}

/// `noisy<TAB>clean` lines.
pub fn write_pairs_tsv<'a, W: Write>(
    mut writer: W,
    pairs: impl IntoIterator<Item = &'a ParallelPair>,
) -> Result<()> {
    for pair in pairs {
        writeln!(writer, "{}\t{}", pair.noisy, pair.clean)?;
    }
    Ok(())
}

/// One JSON trace per line: `{"id":..,"ops":[..]}`.
pub fn write_traces_jsonl<'a, W: Write>(
    mut writer: W,
    pairs: impl IntoIterator<Item = &'a ParallelPair>,
) -> Result<()> {
    #[derive(Serialize)]
    struct Line<'b> {
        id: u64,
        ops: &'b [TraceOp],
    }
    for pair in pairs {
        serde_json::to_writer(
            &mut writer,
            &Line {
                id: pair.id,
                ops: &pair.trace.ops,
            },
        )?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads `noisy<TAB>clean` lines into `(noisy, clean)` tuples.
pub fn read_pairs_tsv<R: BufRead>(reader: R) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for_each_line(reader, |n, line| {
        if line.is_empty() {
            return Ok(());
        }
        let (noisy, clean) = line.split_once('\t').ok_or_else(|| {
            Error::Validation(format!("line {}: expected noisy<TAB>clean", n + 1))
        })?;
        pairs.push((noisy.to_string(), clean.to_string()));
        Ok(())
    })?;
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn rng(seed: u64) -> NoiseRng {
        NoiseRng::seed_from_u64(seed)
    }

    fn only(f: impl FnOnce(&mut NoiseConfig)) -> NoiseConfig {
        let mut c = NoiseConfig::zero();
        f(&mut c);
        c
    }

    #[test]
    fn tweet_profile_values() {
        let c = NoiseConfig::TWEET_PROFILE;
        assert_eq!(
            c.probabilities(),
            [0.02, 0.15, 0.02, 0.005, 0.01, 0.001, 0.01, 0.0015, 0.001]
        );
        c.validate().unwrap();
    }

    #[test]
    fn hooked_substitution() {
        assert_eq!(substitute_hooked("ƙasa ɗaya", 1.0, &mut rng(1)), "kasa daya");
        assert_eq!(substitute_hooked("Wannan ƴa ta ce", 1.0, &mut rng(1)), "Wannan ya ta ce");
        assert_eq!(substitute_hooked("ƁƊƘƳ", 1.0, &mut rng(1)), "BDKY");
        assert_eq!(substitute_hooked("ƙasa ɗaya", 0.0, &mut rng(1)), "ƙasa ɗaya");
    }

    #[test]
    fn hooked_substitution_is_idempotent_at_one() {
        let once = substitute_hooked("ɓarawo ya ɗauki ƴaƴa", 1.0, &mut rng(3));
        assert_eq!(substitute_hooked(&once, 1.0, &mut rng(4)), once);
        assert!(once.chars().all(|c| plain_form(c).is_none()));
    }

    #[test]
    fn spacing_extremes() {
        let s = "abincin ba shi da daɗi";
        assert_eq!(perturb_spacing(s, 0.0, 1.0, &mut rng(1)), "abincinbashidadaɗi");
        assert_eq!(perturb_spacing(s, 0.0, 0.0, &mut rng(1)), s);
        assert_eq!(perturb_spacing("ab cd", 1.0, 0.0, &mut rng(1)), "a b c d");
    }

    #[test]
    fn space_removal_produces_merged_words() {
        // somewhere in the seed space the middle space alone is dropped
        let found = (0..500).any(|seed| {
            perturb_spacing("abincin ba shi da daɗi", 0.0, 0.3, &mut rng(seed)) == "abincin bashi da daɗi"
        });
        assert!(found);
    }

    #[test]
    fn character_extremes() {
        let zero = NoiseConfig::zero();
        assert_eq!(perturb_characters("ƙasa ɗaya", &zero, &mut rng(1)), "ƙasa ɗaya");
        let delete = only(|c| c.delete_characters = 1.0);
        assert_eq!(perturb_characters("abc", &delete, &mut rng(1)), "");
        let swap = only(|c| c.transpose_characters = 1.0);
        assert_eq!(perturb_characters("ab", &swap, &mut rng(1)), "ba");
        assert_eq!(perturb_characters("abcd", &swap, &mut rng(1)), "badc");
        let dup = only(|c| c.duplicate_characters = 1.0);
        assert_eq!(perturb_characters("ɗa b", &dup, &mut rng(1)), "ɗɗaa bb");
    }

    #[test]
    fn substitution_always_changes_the_symbol() {
        let sub = only(|c| c.substitute_characters = 1.0);
        for seed in 0..50 {
            let out: Vec<char> = perturb_characters("aaaa ɗɗ", &sub, &mut rng(seed)).chars().collect();
            assert_eq!(out.len(), 7);
            assert_eq!(out[4], ' ');
            for (k, c) in out.iter().enumerate() {
                assert!(k == 4 || SUBSTITUTION_ALPHABET.contains(*c));
            }
            assert!(out[..4].iter().all(|&c| c != 'a'));
            assert!(out[5..].iter().all(|&c| c != 'ɗ'));
        }
    }

    #[test]
    fn earlier_character_ops_take_precedence() {
        let all = only(|c| {
            c.delete_characters = 1.0;
            c.duplicate_characters = 1.0;
            c.transpose_characters = 1.0;
        });
        assert_eq!(perturb_characters("abc", &all, &mut rng(1)), "");
    }

    #[test]
    fn chunk_deletion_outcomes() {
        // brute-force every offset of a length-4 word
        let word: Vec<char> = "daɗi".chars().collect();
        let expected: BTreeSet<String> = (0..=word.len() - 2)
            .map(|k| {
                let mut w = word.clone();
                w.drain(k..k + 2);
                w.into_iter().collect()
            })
            .collect();
        assert_eq!(expected, BTreeSet::from(["ɗi".to_string(), "di".into(), "da".into()]));
        let seen: BTreeSet<String> = (0..200).map(|s| perturb_chunks("daɗi", 1.0, 0.0, &mut rng(s))).collect();
        assert_eq!(seen, expected);

        let seen: BTreeSet<String> = (0..200).map(|s| perturb_chunks("abcd", 1.0, 0.0, &mut rng(s))).collect();
        assert!(seen.contains("cd"));
        assert_eq!(seen, BTreeSet::from(["cd".to_string(), "ad".into(), "ab".into()]));
    }

    #[test]
    fn chunk_rules() {
        assert_eq!(perturb_chunks("ya zo", 1.0, 0.0, &mut rng(1)), "ya zo");
        assert_eq!(perturb_chunks("ƙasa ɗaya", 0.0, 0.0, &mut rng(1)), "ƙasa ɗaya");
        for seed in 0..100 {
            let out = perturb_chunks("kasa", 0.0, 1.0, &mut rng(seed));
            assert_eq!(out.chars().count(), 6);
        }
    }

    #[test]
    fn zero_config_is_identity() {
        let s = SentenceRecord::new(4, "Wannan ƴa ta ce , abincin ba shi da daɗi .", "t");
        let pair = apply_noise(&s, &NoiseConfig::zero());
        assert_eq!(pair.noisy, pair.clean);
        assert!(pair.trace.ops.is_empty());
    }

    #[test]
    fn generation_is_deterministic() {
        let s = SentenceRecord::new(9, "An haifi Abubakar Malami a ranar 17 ga Afrilu .", "t");
        let c = NoiseConfig::TWEET_PROFILE.with_seed(7);
        let a = apply_noise(&s, &c);
        let b = apply_noise(&s, &c);
        assert_eq!(a, b);
    }

    #[test]
    fn config_round_trip_and_rejections() {
        let text = NoiseConfig::TWEET_PROFILE.with_seed(5).to_toml_string().unwrap();
        assert_eq!(NoiseConfig::from_toml_str(&text).unwrap(), NoiseConfig::TWEET_PROFILE.with_seed(5));

        let bad = text.replace("remove_spaces = 0.15", "remove_spaces = 1.2");
        match NoiseConfig::from_toml_str(&bad) {
            Err(Error::Probability { key, .. }) => assert_eq!(key, "remove_spaces"),
            other => panic!("unexpected {other:?}"),
        }
        let unknown = format!("{text}\nswap_words = 0.1\n");
        assert!(matches!(NoiseConfig::from_toml_str(&unknown), Err(Error::Config(_))));
        let missing = text.replace("insert_chunk = 0.001\n", "");
        assert!(matches!(NoiseConfig::from_toml_str(&missing), Err(Error::Config(_))));
    }

    #[test]
    fn corpus_generation() {
        let corpus: Vec<_> = ["Ya zo .", "Ta tafi .", "Ƙasa ɗaya ce ."]
            .iter()
            .enumerate()
            .map(|(i, t)| SentenceRecord::new(i as u64, *t, if i == 2 { "b" } else { "a" }))
            .collect();
        let (pairs, manifest) = generate_parallel_corpus(&corpus, &NoiseConfig::zero()).unwrap();
        assert_eq!(pairs.len(), 3);
        assert!(pairs.iter().all(|p| p.noisy == p.clean));
        assert_eq!(manifest.sentences, 3);
        assert_eq!(manifest.changed, 0);
        assert_eq!(manifest.sources["a"], 2);
        assert!(generate_parallel_corpus(&[], &NoiseConfig::zero()).is_err());
    }

    #[test]
    fn tsv_round_trip() {
        let s = SentenceRecord::new(0, "ba shi", "");
        let pair = apply_noise(&s, &only(|c| c.remove_spaces = 1.0));
        let mut buf = Vec::new();
        write_pairs_tsv(&mut buf, [&pair]).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "bashi\tba shi\n");
        assert_eq!(read_pairs_tsv(&buf[..]).unwrap(), vec![("bashi".into(), "ba shi".into())]);
        assert!(read_pairs_tsv(&b"no tab here\n"[..]).is_err());
    }

    #[test]
    fn removal_rate_is_binomial() {
        let p = 0.15;
        let text = "a ".repeat(1000);
        let text = text.trim_end();
        let spaces = 999usize;
        let mut removed = 0usize;
        let mut total = 0usize;
        let mut r = rng(2024);
        while total < 100_000 {
            let out = perturb_spacing(text, 0.0, p, &mut r);
            removed += spaces - out.matches(' ').count();
            total += spaces;
        }
        let n = total as f64;
        let rate = removed as f64 / n;
        let sd = (p * (1.0 - p) / n).sqrt();
        assert!((rate - p).abs() < 3.0 * sd, "rate {rate} vs {p} (sd {sd})");
    }

    fn sentence() -> impl Strategy<Value = String> {
        proptest::string::string_regex("[a-zɓɗƙƴƘ']{1,8}( [a-zɓɗƙƴ,.]{1,8}){0,10}").unwrap()
    }

    fn probability() -> impl Strategy<Value = f64> {
        prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0]
    }

    proptest! {
        #[test]
        fn trace_replays_exactly(
            text in sentence(),
            id in any::<u64>(),
            seed in any::<u64>(),
            p in proptest::array::uniform9(probability()),
        ) {
            let config = NoiseConfig::from_probabilities(p, seed);
            let pair = apply_noise(&SentenceRecord::new(id, text.clone(), ""), &config);
            prop_assert_eq!(&pair.clean, &text);
            prop_assert_eq!(pair.trace.replay(&text).unwrap(), pair.noisy);
        }
    }
}
