//! Corpus cleaning, sentence segmentation, tokenization and lexicon I/O.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A cleaned, single-line sentence with its provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub id: u64,
    pub text: String,
    pub source: String,
}

impl SentenceRecord {
    pub fn new(id: u64, text: impl Into<String>, source: impl Into<String>) -> Self {
        SentenceRecord {
            id,
            text: text.into(),
            source: source.into(),
        }
    }
}

fn hashtag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"#\S+").unwrap())
}

fn citation_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\[[0-9]+\]").unwrap())
}

fn clean_once(text: &str) -> String {
    let text = text.replace(['\u{00A0}'], " ").replace("NBSP", " ");
    let text = hashtag_re().replace_all(&text, "");
    let text = citation_re().replace_all(&text, "");
    let mut out = String::with_capacity(text.len());
    for word in text
        .split(|c: char| c.is_whitespace() || c.is_control())
        .filter(|w| !w.is_empty())
    {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Removes hashtags, non-breaking spaces (the character and the literal
/// `NBSP` marker) and `[digits]` citations, then collapses whitespace.
///
/// Removing one artifact can expose another (`NB[1]SP`, `[[1]2]`), so the
/// rules are reapplied until the text stops changing.
pub fn clean_text(raw: &str) -> String {
    let mut current = clean_once(raw);
    loop {
        let next = clean_once(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

/// [`clean_text`] over raw bytes, reporting where decoding failed.
pub fn clean_bytes(raw: &[u8]) -> Result<String> {
    let text = std::str::from_utf8(raw).map_err(|e| Error::Decode {
        offset: e.valid_up_to(),
    })?;
    Ok(clean_text(text))
}

/// Splits cleaned text after `.`, `!` or `?` when followed by whitespace and
/// an uppercase letter, or by the end of the text. Ids start at 0.
pub fn segment_sentences(text: &str) -> Vec<SentenceRecord> {
    segment_sentences_from(text, 0, "")
}

/// Like [`segment_sentences`] with an explicit first id and source tag.
pub fn segment_sentences_from(text: &str, first_id: u64, source: &str) -> Vec<SentenceRecord> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut pieces = Vec::new();
    let mut start = 0;
    for (k, &(offset, c)) in chars.iter().enumerate() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let end = offset + c.len_utf8();
        let mut rest = chars[k + 1..].iter().map(|&(_, ch)| ch);
        let boundary = match rest.next() {
            Some(ws) if ws.is_whitespace() => rest
                .find(|ch| !ch.is_whitespace())
                .is_some_and(char::is_uppercase),
            Some(_) => false,
            None => true,
        };
        if boundary {
            pieces.push(&text[start..end]);
            start = end;
        }
    }
    pieces.push(&text[start..]);

    pieces
        .into_iter()
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .zip(first_id..)
        .map(|(p, id)| SentenceRecord::new(id, p, source))
        .collect()
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Whitespace tokenization with leading and trailing punctuation split off
/// as one-symbol tokens. Inner punctuation (`ka-ayyana`, `jama'a`) stays.
pub fn tokenize_words(sentence: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in sentence.split_whitespace() {
        let Some(first) = chunk.find(is_word_char) else {
            tokens.extend(chunk.chars().map(String::from));
            continue;
        };
        let last = chunk.rfind(is_word_char).unwrap();
        let last_end = last + chunk[last..].chars().next().unwrap().len_utf8();
        tokens.extend(chunk[..first].chars().map(String::from));
        tokens.push(chunk[first..last_end].to_string());
        tokens.extend(chunk[last_end..].chars().map(String::from));
    }
    tokens
}

/// A set of case-folded word forms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: HashSet<String>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a word; entries containing whitespace are rejected.
    pub fn insert(&mut self, word: &str) -> Result<bool> {
        let word = word.trim();
        if word.is_empty() || word.chars().any(char::is_whitespace) {
            return Err(Error::Validation(format!(
                "lexicon entry {word:?} is empty or contains whitespace"
            )));
        }
        Ok(self.entries.insert(word.to_lowercase()))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }

    /// One word per line; blank lines and `#` comment lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lexicon = Lexicon::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            lexicon.insert(line)?;
        }
        Ok(lexicon)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::Decode {
            offset: e.valid_up_to(),
        })?;
        Self::parse(text)
    }
}

impl<'a> FromIterator<&'a str> for Lexicon {
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        let mut lexicon = Lexicon::new();
        for word in iter {
            // whitespace-bearing words are not representable; skip them
            let _ = lexicon.insert(word);
        }
        lexicon
    }
}

/// Reads a corpus file, one sentence per line. Line `n` (0-based) becomes
/// sentence id `n`; blank lines keep their id but produce no record.
pub fn read_corpus(path: impl AsRef<Path>, source: &str) -> Result<Vec<SentenceRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    let mut records = Vec::new();
    for_each_line(BufReader::new(file), |id, line| {
        let line = line.trim();
        if !line.is_empty() {
            records.push(SentenceRecord::new(id, line, source));
        }
        Ok(())
    })?;
    Ok(records)
}

/// Streams lines from a reader, decoding each as UTF-8. Decode errors carry
/// the absolute byte offset within the stream.
pub fn for_each_line<R: BufRead>(
    mut reader: R,
    mut f: impl FnMut(u64, &str) -> Result<()>,
) -> Result<()> {
    let mut buf = Vec::new();
    let mut offset = 0usize;
    let mut index = 0u64;
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf)?;
        if n == 0 {
            return Ok(());
        }
        let line = std::str::from_utf8(&buf).map_err(|e| Error::Decode {
            offset: offset + e.valid_up_to(),
        })?;
        f(index, line.trim_end_matches(['\n', '\r']))?;
        offset += n;
        index += 1;
    }
}

/// Writes one sentence per line.
pub fn write_corpus<'a, W: Write>(
    writer: W,
    sentences: impl IntoIterator<Item = &'a SentenceRecord>,
) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for s in sentences {
        writeln!(w, "{}", s.text)?;
    }
    w.flush()?;
    Ok(())
}
