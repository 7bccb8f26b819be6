//! Writing-noise tooling for low-resource text normalization.
//!
//! The pipeline profiles the error distribution of a naturally noisy
//! corpus ([`profile`]), searches for noise probabilities that reproduce it
//! ([`calibrate`]), corrupts clean text into noisy/clean pairs ([`noise`]),
//! scores correction output ([`metrics`]) and audits train/test overlap
//! ([`dedup`]).

pub mod calibrate;
pub mod corpus;
pub mod dedup;
pub mod error;
pub mod manifest;
pub mod metrics;
pub mod noise;
pub mod profile;
pub mod strdist;

pub use calibrate::{calibrate, js_distance, CalibrationOptions, CalibrationResult};
pub use corpus::{clean_text, segment_sentences, tokenize_words, Lexicon, SentenceRecord};
pub use dedup::{audit_overlap, AuditOptions, MinHashSignature, OverlapReport};
pub use error::{Error, Result};
pub use metrics::{evaluate_corpus, MetricReport};
pub use noise::{apply_noise, generate_parallel_corpus, NoiseConfig, NoiseTrace, ParallelPair};
pub use profile::{dbscan, ClusterSet, DistanceHistogram, LengthBucket, Profile};
pub use strdist::{levenshtein, normalized_levenshtein, token_edit_distance, EditCost};
