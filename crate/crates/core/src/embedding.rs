//! Subword skip-gram embeddings with negative sampling.
//!
//! A word is represented by its own vocabulary row plus one hashed row per
//! character n-gram of `<word>`; its vector is the mean of those rows, so
//! out-of-vocabulary tokens (romanized spellings, typos) still get a vector
//! from their n-grams.
//!
//! Storage is `f32`; the per-update arithmetic is done in `f64`.

use std::collections::HashMap;
use std::io::{BufRead, Read, Write};

use sha2::{Digest, Sha256};

use crate::corpus::TokenizedSentence;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub const BUCKET_MAGIC: &[u8; 4] = b"CMSE";
pub const BUCKET_VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbedConfig {
    pub dim: usize,
    pub minn: usize,
    pub maxn: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub bucket_count: usize,
    pub min_count: u64,
    pub subsample_t: f64,
    pub seed: u64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            dim: 100,
            minn: 3,
            maxn: 6,
            window: 5,
            negatives: 5,
            epochs: 5,
            initial_lr: 0.05,
            bucket_count: 100_000,
            min_count: 1,
            subsample_t: 1e-4,
            seed: 0,
        }
    }
}

impl EmbedConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be > 0");
        }
        if self.minn == 0 || self.minn > self.maxn {
            return bad("need 0 < minn <= maxn");
        }
        if self.bucket_count == 0 {
            return bad("bucket_count must be > 0");
        }
        if self.window == 0 {
            return bad("window must be > 0");
        }
        if !(self.initial_lr.is_finite() && self.initial_lr >= 0.0) {
            return bad("learning rate must be finite and non-negative");
        }
        if !(self.subsample_t.is_finite() && self.subsample_t > 0.0) {
            return bad("subsample_t must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubwordVocab {
    words: Vec<String>,
    counts: Vec<u64>,
    word_to_id: HashMap<String, usize>,
    pub min_count: u64,
}

impl SubwordVocab {
    fn from_parts(words: Vec<String>, counts: Vec<u64>, min_count: u64) -> Self {
        let word_to_id = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        SubwordVocab {
            words,
            counts,
            word_to_id,
            min_count,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.word_to_id.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn count(&self, id: usize) -> u64 {
        self.counts[id]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Counts words and keeps those with frequency `>= min_count`; ids are
/// assigned by descending frequency, ties broken lexicographically.
pub fn build_vocab(corpus: &[TokenizedSentence], cfg: &EmbedConfig) -> Result<SubwordVocab> {
    if corpus.iter().all(|s| s.tokens.is_empty()) {
        return Err(Error::InvalidArgument(
            "cannot build a vocabulary from an empty corpus".into(),
        ));
    }
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for s in corpus {
        for t in &s.tokens {
            *freq.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let mut entries: Vec<(&str, u64)> = freq
        .into_iter()
        .filter(|&(_, c)| c >= cfg.min_count)
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let (words, counts) = entries
        .into_iter()
        .map(|(w, c)| (w.to_string(), c))
        .unzip();
    Ok(SubwordVocab::from_parts(words, counts, cfg.min_count))
}

/// Character n-grams of `<word>` with lengths `minn..=maxn`, shortest
/// first and left to right within each length.
pub fn extract_ngrams(word: &str, minn: usize, maxn: usize) -> Vec<String> {
    let wrapped: Vec<char> = std::iter::once('<')
        .chain(word.chars())
        .chain(std::iter::once('>'))
        .collect();
    let len = wrapped.len();
    let mut out = Vec::new();
    for n in minn..=maxn.min(len) {
        for start in 0..=len - n {
            out.push(wrapped[start..start + n].iter().collect());
        }
    }
    out
}

/// 32-bit FNV-1a.
pub fn fnv1a32(bytes: &[u8]) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for &b in bytes {
        h ^= b as u32;
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

/// Row index of an n-gram in the input matrix: bucket rows follow the
/// `vocab_size` word rows.
pub fn hash_ngram(ngram: &str, vocab_size: usize, bucket_count: usize) -> usize {
    vocab_size + (fnv1a32(ngram.as_bytes()) as usize % bucket_count)
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-log σ(x)` without overflow.
fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// Loss and `d loss / d score` for one target with logit `score`.
/// Positive targets contribute `-log σ(s)`, negatives `-log σ(-s)`.
#[inline]
fn pair_loss_grad(score: f64, positive: bool) -> (f64, f64) {
    if positive {
        (neg_log_sigmoid(score), sigmoid(score) - 1.0)
    } else {
        (neg_log_sigmoid(-score), sigmoid(score))
    }
}

/// Gradients of one negative-sampling objective.
#[derive(Debug, Clone, PartialEq)]
pub struct NsGradients {
    pub loss: f64,
    /// `d loss / d h`.
    pub hidden: Vec<f64>,
    /// One entry per input row; each equals `d loss / d h` divided by the
    /// number of rows, since `h` is their mean.
    pub input_rows: Vec<Vec<f64>>,
    pub output_rows: Vec<Vec<f64>>,
}

/// Negative-sampling loss `-log σ(h·u_o) - Σ log σ(-h·u_k)` where `h` is the
/// mean of `input_rows`, and its gradient with respect to every row.
/// `positive[j]` marks which of `output_rows` is an observed context.
pub fn negative_sampling_objective(
    input_rows: &[Vec<f64>],
    output_rows: &[Vec<f64>],
    positive: &[bool],
) -> NsGradients {
    let dim = input_rows[0].len();
    let k = input_rows.len() as f64;
    let mut h = vec![0.0; dim];
    for row in input_rows {
        for (a, b) in h.iter_mut().zip(row) {
            *a += b;
        }
    }
    h.iter_mut().for_each(|a| *a /= k);

    let mut loss = 0.0;
    let mut grad_h = vec![0.0; dim];
    let mut output_grads = Vec::with_capacity(output_rows.len());
    for (u, &pos) in output_rows.iter().zip(positive) {
        let score: f64 = h.iter().zip(u).map(|(a, b)| a * b).sum();
        let (l, g) = pair_loss_grad(score, pos);
        loss += l;
        for (gh, ui) in grad_h.iter_mut().zip(u) {
            *gh += g * ui;
        }
        output_grads.push(h.iter().map(|hi| g * hi).collect());
    }
    let per_row: Vec<f64> = grad_h.iter().map(|g| g / k).collect();
    NsGradients {
        loss,
        hidden: grad_h,
        input_rows: vec![per_row; input_rows.len()],
        output_rows: output_grads,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub vocab: SubwordVocab,
    /// `(|V| + bucket_count) × dim`, row-major.
    pub input_vectors: Vec<f32>,
    /// `|V| × dim`, row-major.
    pub output_vectors: Vec<f32>,
    pub config: EmbedConfig,
}

impl EmbeddingModel {
    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn input_row(&self, row: usize) -> &[f32] {
        let d = self.config.dim;
        &self.input_vectors[row * d..(row + 1) * d]
    }

    /// Input rows that make up `word`: its vocabulary row (if any) followed
    /// by one hashed row per n-gram.
    pub fn subword_rows(&self, word: &str) -> Vec<usize> {
        let v = self.vocab.len();
        let b = self.config.bucket_count;
        self.vocab
            .id(word)
            .into_iter()
            .chain(
                extract_ngrams(word, self.config.minn, self.config.maxn)
                    .iter()
                    .map(|g| hash_ngram(g, v, b)),
            )
            .collect()
    }

    /// Mean of the word's subword rows.
    pub fn word_vector(&self, word: &str) -> Vec<f32> {
        let rows = self.subword_rows(word);
        let d = self.config.dim;
        let mut acc = vec![0.0f64; d];
        for &r in &rows {
            for (a, &x) in acc.iter_mut().zip(self.input_row(r)) {
                *a += x as f64;
            }
        }
        let k = rows.len().max(1) as f64;
        acc.into_iter().map(|a| (a / k) as f32).collect()
    }

    /// SHA-256 over the serialized text and bucket files, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut text = Vec::new();
        let mut bin = Vec::new();
        save_text(self, &mut text, &mut bin).expect("writing to memory cannot fail");
        let mut hasher = Sha256::new();
        hasher.update(&text);
        hasher.update(&bin);
        hex_string(&hasher.finalize())
    }
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn init_model(vocab: SubwordVocab, cfg: &EmbedConfig, rng: &mut SplitMix64) -> EmbeddingModel {
    let d = cfg.dim;
    let rows = vocab.len() + cfg.bucket_count;
    let bound = 1.0 / d as f64;
    let input_vectors = (0..rows * d)
        .map(|_| rng.uniform(-bound, bound) as f32)
        .collect();
    let output_vectors = vec![0.0f32; vocab.len() * d];
    EmbeddingModel {
        vocab,
        input_vectors,
        output_vectors,
        config: cfg.clone(),
    }
}

/// Per-epoch bookkeeping from [`train_skipgram_with_stats`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SkipgramStats {
    pub tokens: u64,
    /// Mean negative-sampling loss per (center, context) update, per epoch.
    pub epoch_losses: Vec<f64>,
}

struct NegativeTable {
    cumulative: Vec<f64>,
}

impl NegativeTable {
    fn new(vocab: &SubwordVocab) -> Self {
        let mut acc = 0.0;
        let cumulative = (0..vocab.len())
            .map(|i| {
                acc += (vocab.count(i) as f64).powf(0.75);
                acc
            })
            .collect();
        NegativeTable { cumulative }
    }

    fn sample(&self, rng: &mut SplitMix64) -> usize {
        let total = *self.cumulative.last().unwrap_or(&0.0);
        let u = rng.next_f64() * total;
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }
}

pub fn train_skipgram(corpus: &[TokenizedSentence], cfg: &EmbedConfig) -> Result<EmbeddingModel> {
    train_skipgram_with_stats(corpus, cfg).map(|(m, _)| m)
}

/// Skip-gram with negative sampling over subword-averaged inputs.
///
/// For each kept center token a window size is drawn uniformly from
/// `1..=window`; every context in range gets one positive and `negatives`
/// negative updates (negatives from the unigram^0.75 distribution, never the
/// context word itself). Each of the center's subword rows is moved by the
/// full `lr · d loss / d h`, as fastText does, rather than by its `1/k`
/// share; the descent direction is the same. The learning rate decays linearly from
/// `initial_lr` to 0 over `epochs × tokens`. Tokens are dropped with the
/// usual `1 - (sqrt(t/f) + t/f)` subsampling rule. Single-threaded and
/// bit-reproducible for a given seed.
pub fn train_skipgram_with_stats(
    corpus: &[TokenizedSentence],
    cfg: &EmbedConfig,
) -> Result<(EmbeddingModel, SkipgramStats)> {
    cfg.validate()?;
    let vocab = build_vocab(corpus, cfg)?;
    let mut rng = SplitMix64::new(cfg.seed);
    let mut model = init_model(vocab, cfg, &mut rng);

    let d = cfg.dim;
    let v = model.vocab.len();
    let subwords: Vec<Vec<usize>> = (0..v)
        .map(|i| model.subword_rows(model.vocab.word(i)))
        .collect();
    let total = model.vocab.total_count();
    let keep_prob: Vec<f64> = (0..v)
        .map(|i| {
            let f = model.vocab.count(i) as f64 / total as f64;
            let r = cfg.subsample_t / f;
            (r.sqrt() + r).min(1.0)
        })
        .collect();
    let negatives = NegativeTable::new(&model.vocab);
    let sentences: Vec<Vec<usize>> = corpus
        .iter()
        .map(|s| s.tokens.iter().filter_map(|t| model.vocab.id(t)).collect())
        .collect();
    let total_tokens: u64 = sentences.iter().map(|s| s.len() as u64).sum();
    let schedule_len = (cfg.epochs as u64 * total_tokens).max(1) as f64;

    let mut stats = SkipgramStats {
        tokens: total_tokens,
        epoch_losses: Vec::with_capacity(cfg.epochs),
    };
    let mut processed: u64 = 0;
    let mut h = vec![0.0f64; d];
    let mut grad_h = vec![0.0f64; d];
    let mut targets: Vec<(usize, bool)> = Vec::with_capacity(cfg.negatives + 1);
    let mut kept: Vec<usize> = Vec::new();

    for _epoch in 0..cfg.epochs {
        let mut epoch_loss = 0.0;
        let mut updates: u64 = 0;
        for sentence in &sentences {
            kept.clear();
            for &w in sentence {
                if rng.next_f64() < keep_prob[w] {
                    kept.push(w);
                }
            }
            for (pos, &center) in kept.iter().enumerate() {
                let lr = cfg.initial_lr * (1.0 - processed as f64 / schedule_len).max(0.0);
                let span = 1 + rng.below(cfg.window);
                let lo = pos.saturating_sub(span);
                let hi = (pos + span).min(kept.len() - 1);
                let rows = &subwords[center];
                let k = rows.len() as f64;
                for (ctx_pos, &context) in kept.iter().enumerate().take(hi + 1).skip(lo) {
                    if ctx_pos == pos {
                        continue;
                    }
                    targets.clear();
                    targets.push((context, true));
                    if v > 1 {
                        for _ in 0..cfg.negatives {
                            let mut n = negatives.sample(&mut rng);
                            while n == context {
                                n = negatives.sample(&mut rng);
                            }
                            targets.push((n, false));
                        }
                    }

                    h.iter_mut().for_each(|x| *x = 0.0);
                    for &r in rows {
                        for (a, &x) in h.iter_mut().zip(model.input_row(r)) {
                            *a += x as f64;
                        }
                    }
                    h.iter_mut().for_each(|x| *x /= k);
                    grad_h.iter_mut().for_each(|x| *x = 0.0);

                    for &(t, positive) in &targets {
                        let u = &mut model.output_vectors[t * d..(t + 1) * d];
                        let score: f64 = h.iter().zip(u.iter()).map(|(a, &b)| a * b as f64).sum();
                        let (l, g) = pair_loss_grad(score, positive);
                        epoch_loss += l;
                        for ((gh, ui), hi) in grad_h.iter_mut().zip(u.iter_mut()).zip(&h) {
                            *gh += g * *ui as f64;
                            *ui = (*ui as f64 - lr * g * hi) as f32;
                        }
                    }
                    for &r in rows {
                        let row = &mut model.input_vectors[r * d..(r + 1) * d];
                        for (x, g) in row.iter_mut().zip(&grad_h) {
                            *x = (*x as f64 - lr * g) as f32;
                        }
                    }
                    updates += 1;
                }
            }
            processed += sentence.len() as u64;
        }
        stats
            .epoch_losses
            .push(if updates > 0 { epoch_loss / updates as f64 } else { 0.0 });
    }
    Ok((model, stats))
}

/// Writes the word rows as text and the rest of the model as a binary
/// companion.
///
/// Text: header `|V| dim`, then `word v1 … vdim` per vocabulary word in id
/// order. Values use Rust's shortest round-trip `f32` formatting, so parsing
/// them back yields the identical bits.
///
/// Binary (all little-endian): magic `CMSE`, version byte `1`, then u64
/// fields `dim minn maxn window negatives epochs bucket_count min_count seed
/// vocab_len`, f64 fields `initial_lr subsample_t`, `vocab_len` u64 word
/// counts, `bucket_count × dim` f32 n-gram rows, `vocab_len × dim` f32
/// output rows.
pub fn save_text<W1: Write, W2: Write>(model: &EmbeddingModel, mut text: W1, mut bin: W2) -> Result<()> {
    let d = model.dim();
    let v = model.vocab.len();
    writeln!(text, "{v} {d}")?;
    for (i, w) in model.vocab.words().iter().enumerate() {
        text.write_all(w.as_bytes())?;
        for x in model.input_row(i) {
            write!(text, " {x}")?;
        }
        text.write_all(b"\n")?;
    }

    let c = &model.config;
    let mut buf = Vec::with_capacity(128 + 4 * (c.bucket_count + v) * d + 8 * v);
    buf.extend_from_slice(BUCKET_MAGIC);
    buf.push(BUCKET_VERSION);
    for x in [
        c.dim as u64,
        c.minn as u64,
        c.maxn as u64,
        c.window as u64,
        c.negatives as u64,
        c.epochs as u64,
        c.bucket_count as u64,
        c.min_count,
        c.seed,
        v as u64,
    ] {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    buf.extend_from_slice(&c.initial_lr.to_le_bytes());
    buf.extend_from_slice(&c.subsample_t.to_le_bytes());
    for i in 0..v {
        buf.extend_from_slice(&model.vocab.count(i).to_le_bytes());
    }
    for x in &model.input_vectors[v * d..] {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    for x in &model.output_vectors {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    bin.write_all(&buf)?;
    Ok(())
}

struct ByteCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteCursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Truncated(format!("bucket file ends inside {what}")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize, out: &mut Vec<f32>, what: &str) -> Result<()> {
        let bytes = self.take(n * 4, what)?;
        out.extend(
            bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap())),
        );
        Ok(())
    }
}

/// Inverse of [`save_text`].
pub fn load_text<R1: BufRead, R2: Read>(text: R1, mut bin: R2) -> Result<EmbeddingModel> {
    let mut bytes = Vec::new();
    bin.read_to_end(&mut bytes)?;
    let mut cur = ByteCursor { bytes: &bytes, pos: 0 };
    let magic = cur.take(4, "magic")?;
    if magic != BUCKET_MAGIC {
        return Err(Error::BadMagic {
            expected: String::from_utf8_lossy(BUCKET_MAGIC).into_owned(),
            found: String::from_utf8_lossy(magic).into_owned(),
        });
    }
    let version = cur.take(1, "version")?[0];
    if version != BUCKET_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version as u32,
            supported: BUCKET_VERSION as u32,
        });
    }
    let mut fields = [0u64; 10];
    for f in fields.iter_mut() {
        *f = cur.u64("header")?;
    }
    let [dim, minn, maxn, window, negatives, epochs, bucket_count, min_count, seed, vocab_len] =
        fields;
    let config = EmbedConfig {
        dim: dim as usize,
        minn: minn as usize,
        maxn: maxn as usize,
        window: window as usize,
        negatives: negatives as usize,
        epochs: epochs as usize,
        initial_lr: cur.f64("header")?,
        bucket_count: bucket_count as usize,
        min_count,
        subsample_t: cur.f64("header")?,
        seed,
    };
    config.validate()?;
    let d = config.dim;
    let v = vocab_len as usize;

    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Truncated("vector file is empty".into()))??;
    let mut parts = header.split_whitespace();
    let parse_header = |p: Option<&str>| -> Result<usize> {
        p.and_then(|s| s.parse().ok()).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("bad header {header:?}"),
        })
    };
    let text_v = parse_header(parts.next())?;
    let text_d = parse_header(parts.next())?;
    if text_d != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: text_d,
        });
    }
    if text_v != v {
        return Err(Error::DimensionMismatch {
            expected: v,
            found: text_v,
        });
    }

    let mut words = Vec::with_capacity(v);
    let mut input_vectors = Vec::with_capacity((v + config.bucket_count) * d);
    for i in 0..v {
        let line = match lines.next() {
            Some(l) => l?,
            None => {
                return Err(Error::Truncated(format!(
                    "header promises {v} vectors, found {i}"
                )))
            }
        };
        let mut parts = line.split(' ');
        let word = parts.next().unwrap_or_default();
        let before = input_vectors.len();
        for p in parts {
            let x: f32 = p.parse().map_err(|_| Error::Parse {
                line: i + 2,
                message: format!("bad number {p:?}"),
            })?;
            input_vectors.push(x);
        }
        let found = input_vectors.len() - before;
        if found != d {
            return Err(Error::DimensionMismatch { expected: d, found });
        }
        words.push(word.to_string());
    }

    let mut counts = Vec::with_capacity(v);
    for _ in 0..v {
        counts.push(cur.u64("word counts")?);
    }
    cur.f32s(config.bucket_count * d, &mut input_vectors, "n-gram rows")?;
    let mut output_vectors = Vec::with_capacity(v * d);
    cur.f32s(v * d, &mut output_vectors, "output rows")?;
    if cur.pos != bytes.len() {
        return Err(Error::Parse {
            line: 0,
            message: "trailing bytes after bucket data".into(),
        });
    }

    Ok(EmbeddingModel {
        vocab: SubwordVocab::from_parts(words, counts, config.min_count),
        input_vectors,
        output_vectors,
        config,
    })
}
