use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hausa_noise::calibrate::{calibrate, CalibrationOptions};
use hausa_noise::corpus::{clean_text, for_each_line, read_corpus, segment_sentences_from, Lexicon, SentenceRecord};
use hausa_noise::dedup::{audit_overlap, AuditOptions};
use hausa_noise::manifest::RunManifest;
use hausa_noise::metrics::MetricAccumulator;
use hausa_noise::noise::{noise_batch, read_pairs_tsv, write_pairs_tsv, write_traces_jsonl, CorpusManifest, NoiseConfig};
use hausa_noise::profile::{nearest_vocabulary, profile_corpus, synthetic_histogram_texts, Profile, ProfileParams};
use hausa_noise::Error;

const BATCH: usize = 4096;

#[derive(Debug, Parser)]
#[command(name = "hausa-noise", version, about = "Profile, calibrate, generate and evaluate writing noise")]
struct Cli {
    /// Worker threads; outputs do not depend on this value.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clean raw text and write one sentence per line.
    Clean(CleanArgs),
    /// Profile the error-distance distribution of a noisy corpus.
    Profile(ProfileArgs),
    /// Search noise probabilities matching a target profile.
    Calibrate(CalibrateArgs),
    /// Corrupt a clean corpus into noisy<TAB>clean pairs.
    Corrupt(CorruptArgs),
    /// Score hypotheses against references.
    Evaluate(EvaluateArgs),
    /// Find near-duplicate sentences across two corpora.
    Audit(AuditArgs),
}

#[derive(Debug, Args, Serialize)]
struct CleanArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Provenance tag recorded in the manifest.
    #[arg(long, default_value = "")]
    source: String,
}

#[derive(Debug, Args, Serialize)]
struct ProfileArgs {
    /// Naturally noisy corpus, one text per line.
    #[arg(long, required_unless_present = "pairs")]
    corpus: Option<PathBuf>,
    #[arg(long, env = "HAUSA_NOISE_LEXICON", required_unless_present = "pairs")]
    lexicon: Option<PathBuf>,
    /// Profile the changed words of a noisy<TAB>clean file instead.
    #[arg(long, conflicts_with_all = ["corpus", "lexicon"])]
    pairs: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.4)]
    eps: f64,
    #[arg(long, default_value_t = 2)]
    min_samples: usize,
    #[arg(long, default_value_t = 20)]
    bins: usize,
    #[arg(long, default_value_t = 20_000)]
    matrix_cap: usize,
    /// Also report the nearest lexicon entry of every OOV word.
    #[arg(long)]
    nearest: bool,
}

#[derive(Debug, Args, Serialize)]
struct CalibrateArgs {
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 500)]
    iterations: usize,
    #[arg(long, default_value_t = 0.15)]
    threshold: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    sample_size: usize,
    #[arg(long, default_value_t = 2000)]
    min_sentences: usize,
    /// CalibrationResult document.
    #[arg(long)]
    out: PathBuf,
    /// Winning noise configuration, usable by `corrupt`.
    #[arg(long)]
    config_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct CorruptArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the configuration file.
    #[arg(long)]
    seed: Option<u64>,
    /// One JSON trace per line.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct EvaluateArgs {
    #[arg(long = "ref", required_unless_present = "pairs", requires = "hyp")]
    reference: Option<PathBuf>,
    #[arg(long, requires = "reference")]
    hyp: Option<PathBuf>,
    /// noisy<TAB>clean file: the noisy side is scored against the clean side.
    #[arg(long, conflicts_with_all = ["reference", "hyp"])]
    pairs: Option<PathBuf>,
    /// MetricReport document.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the report as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args, Serialize)]
struct AuditArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, default_value_t = 128)]
    num_perm: usize,
    #[arg(long, default_value_t = 3)]
    shingle: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Confirm candidates with the exact shingle Jaccard.
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    out: PathBuf,
}

/// Exit status 3: calibration ran out of budget.
struct NotConverged;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(NotConverged)) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return if e.is_io() { 2 } else { 1 };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn run(cli: Cli) -> Result<Option<NotConverged>> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Error::Validation("--workers must be at least 1".into()).into());
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    let workers = cli.workers;
    pool.install(|| match cli.command {
        Command::Clean(args) => clean(args, workers).map(|_| None),
        Command::Profile(args) => profile(args, workers).map(|_| None),
        Command::Calibrate(args) => calibrate_cmd(args, workers),
        Command::Corrupt(args) => corrupt(args, workers).map(|_| None),
        Command::Evaluate(args) => evaluate(args, workers).map(|_| None),
        Command::Audit(args) => audit(args, workers).map(|_| None),
    })
}

fn flags<T: Serialize>(args: &T, workers: Option<usize>) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    if let Ok(serde_json::Value::Object(map)) = serde_json::to_value(args) {
        for (k, v) in map {
            if v.is_null() {
                continue;
            }
            let v = match v {
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            };
            out.insert(k, v);
        }
    }
    if let Some(n) = workers {
        out.insert("workers".into(), n.to_string());
    }
    out
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).map_err(|e| Error::File {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(BufWriter::new(file))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).map_err(|e| Error::File {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(BufReader::new(file))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn finish(mut manifest: RunManifest, outputs: &[&Path], primary: &Path, started: Instant) -> Result<()> {
    for out in outputs {
        manifest.add_output(out)?;
    }
    manifest.wall_time_secs = started.elapsed().as_secs_f64();
    manifest.write(&RunManifest::path_for(primary))?;
    Ok(())
}

fn clean(args: CleanArgs, workers: Option<usize>) -> Result<()> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("clean", flags(&args, workers), None);
    manifest.add_input(&args.input)?;
    let mut out = create(&args.out)?;
    let mut next_id = 0u64;
    for_each_line(open(&args.input)?, |_, line| {
        let cleaned = clean_text(line);
        for s in segment_sentences_from(&cleaned, next_id, &args.source) {
            writeln!(out, "{}", s.text)?;
            next_id = s.id + 1;
        }
        Ok(())
    })?;
    out.flush()?;
    drop(out);
    manifest.details = Some(serde_json::json!({ "sentences": next_id }));
    finish(manifest, &[&args.out], &args.out, started)
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let mut lines = Vec::new();
    for_each_line(open(path)?, |_, line| {
        lines.push(line.to_string());
        Ok(())
    })?;
    Ok(lines)
}

fn profile(args: ProfileArgs, workers: Option<usize>) -> Result<()> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("profile", flags(&args, workers), None);
    let profile = if let Some(pairs_path) = &args.pairs {
        manifest.add_input(pairs_path)?;
        let pairs = read_pairs_tsv(open(pairs_path)?)?;
        let texts: Vec<(&str, &str)> = pairs.iter().map(|(n, c)| (c.as_str(), n.as_str())).collect();
        let mut p = Profile::synthetic(synthetic_histogram_texts(texts, args.bins)?);
        p.eps = args.eps;
        p.min_samples = args.min_samples;
        p
    } else {
        let corpus = args.corpus.as_ref().ok_or_else(|| anyhow!("--corpus is required"))?;
        let lexicon_path = args.lexicon.as_ref().ok_or_else(|| anyhow!("--lexicon is required"))?;
        manifest.add_input(corpus)?;
        manifest.add_input(lexicon_path)?;
        let lexicon = Lexicon::load(lexicon_path)?;
        let texts: Vec<String> = read_lines(corpus)?.iter().map(|l| clean_text(l)).collect();
        let params = ProfileParams {
            eps: args.eps,
            min_samples: args.min_samples,
            bins: args.bins,
            matrix_cap: args.matrix_cap,
        };
        let mut p = profile_corpus(&texts, &lexicon, &params)?;
        if args.nearest {
            let tokens: Vec<String> = texts.iter().flat_map(|t| hausa_noise::tokenize_words(t)).collect();
            let oov: Vec<String> = hausa_noise::profile::flag_oov(&tokens, &lexicon)?.into_iter().collect();
            p.nearest = nearest_vocabulary(&oov, &lexicon);
        }
        p
    };
    write_json(&args.out, &profile)?;
    finish(manifest, &[&args.out], &args.out, started)
}

fn calibrate_cmd(args: CalibrateArgs, workers: Option<usize>) -> Result<Option<NotConverged>> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("calibrate", flags(&args, workers), Some(args.seed));
    manifest.add_input(&args.target)?;
    manifest.add_input(&args.corpus)?;
    let target = Profile::load(&args.target)?;
    let corpus = read_corpus(&args.corpus, "")?;
    let options = CalibrationOptions {
        iterations: args.iterations,
        threshold: args.threshold,
        seed: args.seed,
        min_sentences: args.min_sentences,
        sample_size: args.sample_size,
        ..Default::default()
    };
    let result = calibrate(&target.histogram, &corpus, &options)?;
    write_json(&args.out, &result)?;
    let mut outputs = vec![args.out.as_path()];
    if let Some(path) = &args.config_out {
        let text = result.config.to_toml_string()?;
        std::fs::write(path, text).map_err(|e| Error::File {
            path: path.clone(),
            source: e,
        })?;
        outputs.push(path);
    }
    eprintln!(
        "js = {:.4} after {} iterations ({})",
        result.js,
        result.iterations,
        if result.converged { "converged" } else { "not converged" }
    );
    finish(manifest, &outputs, &args.out, started)?;
    Ok((!result.converged).then_some(NotConverged))
}

fn corrupt(args: CorruptArgs, workers: Option<usize>) -> Result<()> {
    let started = Instant::now();
    let mut config = NoiseConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let mut manifest = RunManifest::new("corrupt", flags(&args, workers), Some(config.seed));
    manifest.add_input(&args.config)?;
    manifest.add_input(&args.input)?;

    let mut out = create(&args.out)?;
    let mut trace = args.trace.as_deref().map(create).transpose()?;
    let mut details = CorpusManifest::new(&config);
    let mut batch: Vec<SentenceRecord> = Vec::with_capacity(BATCH);

    let mut flush = |batch: &mut Vec<SentenceRecord>| -> hausa_noise::Result<()> {
        let pairs = noise_batch(batch, &config);
        for pair in &pairs {
            details.add("", pair);
        }
        write_pairs_tsv(&mut out, &pairs)?;
        if let Some(t) = trace.as_mut() {
            write_traces_jsonl(t, &pairs)?;
        }
        batch.clear();
        Ok(())
    };
    for_each_line(open(&args.input)?, |id, line| {
        let line = line.trim();
        if line.is_empty() {
            return Ok(());
        }
        batch.push(SentenceRecord::new(id, line, ""));
        if batch.len() == BATCH {
            flush(&mut batch)?;
        }
        Ok(())
    })?;
    flush(&mut batch)?;
    out.flush()?;
    if let Some(t) = trace.as_mut() {
        t.flush()?;
    }
    drop(out);
    drop(trace);
    if details.sentences == 0 {
        bail!(Error::Validation("the input corpus is empty".into()));
    }

    manifest.details = Some(serde_json::to_value(&details)?);
    let mut outputs = vec![args.out.as_path()];
    if let Some(t) = &args.trace {
        outputs.push(t);
    }
    finish(manifest, &outputs, &args.out, started)
}

fn evaluate(args: EvaluateArgs, workers: Option<usize>) -> Result<()> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("evaluate", flags(&args, workers), None);
    let mut acc = MetricAccumulator::new();
    if let Some(pairs_path) = &args.pairs {
        manifest.add_input(pairs_path)?;
        let pairs = read_pairs_tsv(open(pairs_path)?)?;
        for chunk in pairs.chunks(BATCH) {
            let hyps: Vec<&str> = chunk.iter().map(|(n, _)| n.as_str()).collect();
            let refs: Vec<&str> = chunk.iter().map(|(_, c)| c.as_str()).collect();
            acc.add_batch(&refs, &hyps)?;
        }
    } else {
        let ref_path = args.reference.as_ref().context("--ref is required")?;
        let hyp_path = args.hyp.as_ref().context("--hyp is required")?;
        manifest.add_input(ref_path)?;
        manifest.add_input(hyp_path)?;
        let mut refs_in = open(ref_path)?;
        let mut hyps_in = open(hyp_path)?;
        loop {
            let refs = read_batch(&mut refs_in, BATCH)?;
            let hyps = read_batch(&mut hyps_in, BATCH)?;
            if refs.len() != hyps.len() {
                bail!(Error::Validation("reference and hypothesis files differ in line count".into()));
            }
            if refs.is_empty() {
                break;
            }
            acc.add_batch(&refs, &hyps)?;
        }
    }
    let report = acc.report()?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", report.table());
    }
    if let Some(out) = &args.out {
        write_json(out, &report)?;
        finish(manifest, &[out], out, started)?;
    }
    Ok(())
}

fn read_batch<R: BufRead>(reader: &mut R, n: usize) -> Result<Vec<String>> {
    let mut lines = Vec::with_capacity(n);
    let mut buf = Vec::new();
    while lines.len() < n {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        let line = String::from_utf8(std::mem::take(&mut buf))
            .map_err(|e| Error::Decode { offset: e.utf8_error().valid_up_to() })?;
        lines.push(line.trim_end_matches(['\n', '\r']).to_string());
    }
    Ok(lines)
}

fn audit(args: AuditArgs, workers: Option<usize>) -> Result<()> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("audit", flags(&args, workers), Some(args.seed));
    manifest.add_input(&args.a)?;
    manifest.add_input(&args.b)?;
    let a = read_corpus(&args.a, "a")?;
    let b = read_corpus(&args.b, "b")?;
    let options = AuditOptions {
        threshold: args.threshold,
        num_perm: args.num_perm,
        shingle_size: args.shingle,
        seed: args.seed,
        exact_recheck: args.exact,
    };
    let report = audit_overlap(&a, &b, &options)?;
    eprintln!("{} overlapping pairs at threshold {}", report.pairs.len(), report.threshold);
    write_json(&args.out, &report)?;
    finish(manifest, &[&args.out], &args.out, started)
}
