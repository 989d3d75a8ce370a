//! End-to-end wiring: per-token features (word vector, optionally followed
//! by the one-hot language tag), padded batches, the training loop, the
//! four-variant ablation, prediction and the checkpoint file format.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::{
    split_validation, tokenize, DatasetSplit, LabeledExample, SentimentLabel, TokenizedSentence,
    LABEL_CODEC_VERSION, NUM_LABELS,
};
use crate::embedding::{hex_string, train_skipgram, EmbedConfig, EmbeddingModel};
use crate::error::{Error, Result};
use crate::eval::{confusion, metrics, MetricsReport};
use crate::langid::{tag_token, LanguageTag, Wordlist};
use crate::model::{
    adam_step, backward, forward_batch, init_params, mean_loss, AdamState, Batch, ClassifierParams,
    ClassifierShape,
};
use crate::rng::{derive_seed, SplitMix64};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"CMSC";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Which of the four model variants to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub use_lang_tag: bool,
    pub bidirectional: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            use_lang_tag: true,
            bidirectional: true,
        }
    }
}

impl FeatureConfig {
    /// The ablation grid, in report order.
    pub const VARIANTS: [FeatureConfig; 4] = [
        FeatureConfig { use_lang_tag: true, bidirectional: true },
        FeatureConfig { use_lang_tag: false, bidirectional: true },
        FeatureConfig { use_lang_tag: true, bidirectional: false },
        FeatureConfig { use_lang_tag: false, bidirectional: false },
    ];

    pub fn feature_dim(&self, embed_dim: usize) -> usize {
        embed_dim + if self.use_lang_tag { LanguageTag::DIM } else { 0 }
    }

    pub fn variant_name(&self) -> &'static str {
        match (self.bidirectional, self.use_lang_tag) {
            (true, true) => "Bi-LSTM+ln tag",
            (true, false) => "Bi-LSTM",
            (false, true) => "LSTM+ln tag",
            (false, false) => "LSTM",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub val_fraction: f64,
    pub max_seq_len: usize,
    pub seed: u64,
    pub hidden: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            epochs: 50,
            val_fraction: 0.1,
            max_seq_len: 60,
            seed: 0,
            hidden: 64,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
        }
        if self.max_seq_len == 0 {
            return Err(Error::InvalidArgument("max_seq_len must be >= 1".into()));
        }
        if self.hidden == 0 {
            return Err(Error::InvalidArgument("hidden must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::InvalidArgument(format!(
                "val_fraction {} not in [0, 1)",
                self.val_fraction
            )));
        }
        Ok(())
    }
}

/// Tokenizes every example; used for the unlabeled embedding corpus and for
/// classifier data alike.
pub fn tokenize_examples(examples: &[LabeledExample]) -> Vec<TokenizedSentence> {
    examples.iter().map(TokenizedSentence::from_example).collect()
}

/// Trains embeddings on the concatenation of several corpora, ignoring
/// labels.
pub fn train_embedding(corpora: &[Vec<LabeledExample>], cfg: &EmbedConfig) -> Result<EmbeddingModel> {
    let sentences: Vec<TokenizedSentence> = corpora
        .iter()
        .flat_map(|c| c.iter())
        .map(|e| TokenizedSentence {
            tokens: tokenize(&e.text),
            label: None,
        })
        .collect();
    train_skipgram(&sentences, cfg)
}

fn token_features(token: &str, emb: &EmbeddingModel, wl: &Wordlist, fc: &FeatureConfig) -> Result<Vec<f64>> {
    let mut v: Vec<f64> = emb.word_vector(token).into_iter().map(f64::from).collect();
    if fc.use_lang_tag {
        v.extend(tag_token(token, wl)?.one_hot());
    }
    Ok(v)
}

/// One feature vector per token: the word vector, then the language tag
/// one-hot when enabled. Not truncated here.
pub fn featurize(
    sentence: &TokenizedSentence,
    emb: &EmbeddingModel,
    wl: &Wordlist,
    fc: &FeatureConfig,
) -> Result<Vec<Vec<f64>>> {
    sentence
        .tokens
        .iter()
        .map(|t| token_features(t, emb, wl, fc))
        .collect()
}

/// Memoizes per-token features; a token's features depend only on the
/// token.
struct Featurizer<'a> {
    emb: &'a EmbeddingModel,
    wl: &'a Wordlist,
    fc: FeatureConfig,
    cache: HashMap<String, Vec<f64>>,
}

impl<'a> Featurizer<'a> {
    fn new(emb: &'a EmbeddingModel, wl: &'a Wordlist, fc: FeatureConfig) -> Self {
        Featurizer {
            emb,
            wl,
            fc,
            cache: HashMap::new(),
        }
    }

    fn sentence(&mut self, tokens: &[String], max_len: usize) -> Result<Vec<Vec<f64>>> {
        tokens
            .iter()
            .take(max_len)
            .map(|t| {
                if let Some(v) = self.cache.get(t) {
                    return Ok(v.clone());
                }
                let v = token_features(t, self.emb, self.wl, &self.fc)?;
                self.cache.insert(t.clone(), v.clone());
                Ok(v)
            })
            .collect()
    }
}

/// Truncates each sequence to its first `max_seq_len` steps and zero-pads
/// to the longest retained length.
pub fn pad_batch(sequences: &[Vec<Vec<f64>>], labels: &[usize], max_seq_len: usize) -> Result<Batch> {
    if sequences.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} sequences with {} labels",
            sequences.len(),
            labels.len()
        )));
    }
    if max_seq_len == 0 {
        return Err(Error::InvalidArgument("max_seq_len must be >= 1".into()));
    }
    if let Some(i) = sequences.iter().position(Vec::is_empty) {
        return Err(Error::InvalidArgument(format!("sequence {i} is empty")));
    }
    let dim = sequences.first().map_or(0, |s| s[0].len());
    let lens: Vec<usize> = sequences.iter().map(|s| s.len().min(max_seq_len)).collect();
    let max_len = lens.iter().copied().max().unwrap_or(0);
    let mut data = vec![0.0; sequences.len() * max_len * dim];
    for (i, (seq, &len)) in sequences.iter().zip(&lens).enumerate() {
        for (t, x) in seq[..len].iter().enumerate() {
            if x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: x.len(),
                });
            }
            let o = (i * max_len + t) * dim;
            data[o..o + dim].copy_from_slice(x);
        }
    }
    Ok(Batch {
        data,
        dim,
        max_len,
        lens,
        labels: labels.to_vec(),
    })
}

/// A trained classifier together with everything needed to rebuild its
/// inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ClassifierParams,
    pub features: FeatureConfig,
    pub train: TrainConfig,
    pub embedding_path: String,
    /// Hex SHA-256 of the embedding files, see
    /// [`EmbeddingModel::content_hash`].
    pub embedding_hash: String,
    pub label_codec_version: u32,
    pub format_version: u32,
}

impl Checkpoint {
    pub fn verify_embedding(&self, emb: &EmbeddingModel) -> Result<()> {
        self.verify_hash(&emb.content_hash())?;
        let dim = self.features.feature_dim(emb.dim());
        if dim != self.params.shape.input {
            return Err(Error::DimensionMismatch {
                expected: self.params.shape.input,
                found: dim,
            });
        }
        Ok(())
    }

    fn verify_hash(&self, hash: &str) -> Result<()> {
        if hash != self.embedding_hash {
            return Err(Error::HashMismatch {
                expected: self.embedding_hash.clone(),
                found: hash.to_string(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub heldout_accuracy: Option<f64>,
    pub heldout_weighted_f1: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Result of one training run, including the split it used.
#[derive(Debug, Clone)]
pub struct TrainRun {
    pub checkpoint: Checkpoint,
    pub history: TrainHistory,
    /// Metrics of the final model on the heldout split.
    pub heldout: MetricsReport,
}

fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

fn labeled(sentences: &[TokenizedSentence]) -> Result<Vec<usize>> {
    sentences
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.label
                .map(SentimentLabel::index)
                .ok_or_else(|| Error::InvalidArgument(format!("example {i} has no label")))
        })
        .collect()
}

const EVAL_CHUNK: usize = 256;

fn predict_indices(
    params: &ClassifierParams,
    sentences: &[&TokenizedSentence],
    featurizer: &mut Featurizer<'_>,
    max_seq_len: usize,
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(sentences.len());
    for chunk in sentences.chunks(EVAL_CHUNK) {
        let seqs = chunk
            .iter()
            .map(|s| featurizer.sentence(&s.tokens, max_seq_len))
            .collect::<Result<Vec<_>>>()?;
        let batch = pad_batch(&seqs, &vec![0; seqs.len()], max_seq_len)?;
        out.extend(forward_batch(params, &batch)?.probs);
    }
    Ok(out)
}

fn score(
    params: &ClassifierParams,
    sentences: &[TokenizedSentence],
    featurizer: &mut Featurizer<'_>,
    max_seq_len: usize,
) -> Result<MetricsReport> {
    let golds = labeled(sentences)?;
    let refs: Vec<&TokenizedSentence> = sentences.iter().collect();
    let preds: Vec<usize> = predict_indices(params, &refs, featurizer, max_seq_len)?
        .iter()
        .map(|p| argmax(p))
        .collect();
    Ok(metrics(&confusion(&golds, &preds)?))
}

/// Drops sentences that tokenized to nothing, then splits off the heldout
/// portion with the `"split"` sub-seed.
pub fn prepare_split(data: &[TokenizedSentence], tc: &TrainConfig) -> Result<DatasetSplit<TokenizedSentence>> {
    tc.validate()?;
    labeled(data)?;
    let usable: Vec<TokenizedSentence> = data.iter().filter(|s| !s.tokens.is_empty()).cloned().collect();
    split_validation(usable, tc.val_fraction, derive_seed(tc.seed, "split"))
}

/// Trains one classifier on a prepared split.
pub fn train_on_split(
    split: &DatasetSplit<TokenizedSentence>,
    emb: &EmbeddingModel,
    embedding_hash: &str,
    wl: &Wordlist,
    fc: FeatureConfig,
    tc: &TrainConfig,
) -> Result<TrainRun> {
    tc.validate()?;
    let train_labels = labeled(&split.train)?;
    let dim = fc.feature_dim(emb.dim());
    let mut params = init_params(tc.hidden, dim, fc.bidirectional, derive_seed(tc.seed, "init"))?;
    let mut adam = AdamState::new(params.flat().len());
    let mut shuffle = SplitMix64::new(derive_seed(tc.seed, "shuffle"));
    let mut featurizer = Featurizer::new(emb, wl, fc);
    let mut history = TrainHistory::default();
    let mut order: Vec<usize> = (0..split.train.len()).collect();

    for epoch in 0..tc.epochs {
        shuffle.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for (b, idx) in order.chunks(tc.batch_size).enumerate() {
            let seqs = idx
                .iter()
                .map(|&i| featurizer.sentence(&split.train[i].tokens, tc.max_seq_len))
                .collect::<Result<Vec<_>>>()?;
            let labels: Vec<usize> = idx.iter().map(|&i| train_labels[i]).collect();
            let batch = pad_batch(&seqs, &labels, tc.max_seq_len)?;
            let out = forward_batch(&params, &batch)?;
            let loss = mean_loss(&out.probs, &labels)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            let grads = backward(&params, &out.cache, &labels)?;
            if grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss { epoch, batch: b });
            }
            adam_step(params.flat_mut(), &grads, &mut adam)?;
            loss_sum += loss * idx.len() as f64;
        }
        let train_metrics = score(&params, &split.train, &mut featurizer, tc.max_seq_len)?;
        let heldout = if split.heldout.is_empty() {
            None
        } else {
            Some(score(&params, &split.heldout, &mut featurizer, tc.max_seq_len)?)
        };
        history.epochs.push(EpochRecord {
            epoch: epoch + 1,
            train_loss: if order.is_empty() { 0.0 } else { loss_sum / order.len() as f64 },
            train_accuracy: train_metrics.accuracy,
            heldout_accuracy: heldout.as_ref().map(|m| m.accuracy),
            heldout_weighted_f1: heldout.as_ref().map(|m| m.weighted.f1),
        });
    }

    let heldout = score(&params, &split.heldout, &mut featurizer, tc.max_seq_len)?;
    // fresh generation counter so identical runs compare equal
    let params = ClassifierParams::from_flat(params.shape, params.flat().to_vec())?;
    Ok(TrainRun {
        checkpoint: Checkpoint {
            params,
            features: fc,
            train: tc.clone(),
            embedding_path: String::new(),
            embedding_hash: embedding_hash.to_string(),
            label_codec_version: LABEL_CODEC_VERSION,
            format_version: CHECKPOINT_VERSION,
        },
        history,
        heldout,
    })
}

/// Splits `data`, then runs minibatch Adam on sparse categorical
/// cross-entropy for `tc.epochs` epochs, recording per-epoch metrics. The
/// final-epoch model is returned.
pub fn train(
    data: &[TokenizedSentence],
    emb: &EmbeddingModel,
    wl: &Wordlist,
    fc: FeatureConfig,
    tc: &TrainConfig,
) -> Result<(Checkpoint, TrainHistory)> {
    let split = prepare_split(data, tc)?;
    let run = train_on_split(&split, emb, &emb.content_hash(), wl, fc, tc)?;
    Ok((run.checkpoint, run.history))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: SentimentLabel,
    pub probs: Vec<f64>,
    /// The text had no tokens; label and probabilities are placeholders.
    pub empty_input: bool,
}

/// Checkpoint bound to a verified embedding and wordlist.
pub struct Predictor<'a> {
    checkpoint: &'a Checkpoint,
    featurizer: Featurizer<'a>,
}

impl<'a> Predictor<'a> {
    pub fn new(checkpoint: &'a Checkpoint, emb: &'a EmbeddingModel, wl: &'a Wordlist) -> Result<Self> {
        checkpoint.verify_embedding(emb)?;
        Ok(Predictor {
            checkpoint,
            featurizer: Featurizer::new(emb, wl, checkpoint.features),
        })
    }

    pub fn predict_sentences(&mut self, sentences: &[TokenizedSentence]) -> Result<Vec<Prediction>> {
        let nonempty: Vec<&TokenizedSentence> = sentences.iter().filter(|s| !s.tokens.is_empty()).collect();
        let mut probs = predict_indices(
            &self.checkpoint.params,
            &nonempty,
            &mut self.featurizer,
            self.checkpoint.train.max_seq_len,
        )?
        .into_iter();
        Ok(sentences
            .iter()
            .map(|s| {
                if s.tokens.is_empty() {
                    Prediction {
                        label: SentimentLabel::UnknownState,
                        probs: vec![1.0 / NUM_LABELS as f64; NUM_LABELS],
                        empty_input: true,
                    }
                } else {
                    let p = probs.next().expect("one prediction per non-empty sentence");
                    Prediction {
                        label: SentimentLabel::ALL[argmax(&p)],
                        probs: p,
                        empty_input: false,
                    }
                }
            })
            .collect())
    }

    pub fn predict<S: AsRef<str>>(&mut self, texts: &[S]) -> Result<Vec<Prediction>> {
        let sentences: Vec<TokenizedSentence> = texts
            .iter()
            .map(|t| TokenizedSentence {
                tokens: tokenize(t.as_ref()),
                label: None,
            })
            .collect();
        self.predict_sentences(&sentences)
    }

    /// Predicts and scores labeled examples.
    pub fn evaluate(&mut self, examples: &[LabeledExample]) -> Result<MetricsReport> {
        let sentences = tokenize_examples(examples);
        let golds = labeled(&sentences)?;
        let preds: Vec<usize> = self
            .predict_sentences(&sentences)?
            .iter()
            .map(|p| p.label.index())
            .collect();
        Ok(metrics(&confusion(&golds, &preds)?))
    }
}

/// Tokenize, featurize, encode and classify; ties go to the lower label
/// index. Empty texts yield `UnknownState` with uniform probabilities and
/// `empty_input` set.
pub fn predict<S: AsRef<str>>(
    checkpoint: &Checkpoint,
    emb: &EmbeddingModel,
    wl: &Wordlist,
    texts: &[S],
) -> Result<Vec<Prediction>> {
    Predictor::new(checkpoint, emb, wl)?.predict(texts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    pub accuracy: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub split_seed: u64,
    pub train_size: usize,
    pub heldout_size: usize,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn format_table(&self) -> String {
        let mut out = format!(
            "{:<16}{:>10}{:>11}{:>10}{:>10}\n",
            "model", "accuracy", "precision", "recall", "f1-score"
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{:<16}{:>9.2}%{:>11.4}{:>10.4}{:>10.4}\n",
                r.variant,
                100.0 * r.accuracy,
                r.weighted_precision,
                r.weighted_recall,
                r.weighted_f1
            ));
        }
        out
    }
}

/// Trains the four feature variants on one shared split and scores each on
/// the heldout portion. Variants train concurrently; each is independent and
/// deterministic, so the result does not depend on scheduling.
pub fn ablate(
    data: &[TokenizedSentence],
    emb: &EmbeddingModel,
    wl: &Wordlist,
    tc: &TrainConfig,
) -> Result<AblationReport> {
    let split = prepare_split(data, tc)?;
    let hash = emb.content_hash();
    let runs: Vec<Result<TrainRun>> = std::thread::scope(|scope| {
        let handles: Vec<_> = FeatureConfig::VARIANTS
            .iter()
            .map(|&fc| {
                let (split, hash) = (&split, &hash);
                scope.spawn(move || train_on_split(split, emb, hash, wl, fc, tc))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect()
    });
    let mut rows = Vec::with_capacity(4);
    for (fc, run) in FeatureConfig::VARIANTS.iter().zip(runs) {
        let report = run?.heldout;
        rows.push(AblationRow {
            variant: fc.variant_name().to_string(),
            accuracy: report.accuracy,
            weighted_precision: report.weighted.precision,
            weighted_recall: report.weighted.recall,
            weighted_f1: report.weighted.f1,
            report,
        });
    }
    Ok(AblationReport {
        split_seed: split.seed,
        train_size: split.train.len(),
        heldout_size: split.heldout.len(),
        rows,
    })
}

/// Binary checkpoint, little-endian:
///
/// ```text
/// "CMSC"  u32 format_version  u32 label_codec_version
/// u8 use_lang_tag  u8 bidirectional  u64 input_dim  u64 hidden
/// u64 batch_size  u64 epochs  f64 val_fraction  u64 max_seq_len  u64 seed
/// u32 path_len  path bytes (UTF-8)  32 bytes embedding SHA-256
/// u64 param_count  param_count × f64
/// ```
pub fn save_checkpoint<W: Write>(ck: &Checkpoint, mut w: W) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&ck.format_version.to_le_bytes());
    buf.extend_from_slice(&ck.label_codec_version.to_le_bytes());
    buf.push(ck.features.use_lang_tag as u8);
    buf.push(ck.features.bidirectional as u8);
    buf.extend_from_slice(&(ck.params.shape.input as u64).to_le_bytes());
    buf.extend_from_slice(&(ck.params.shape.hidden as u64).to_le_bytes());
    buf.extend_from_slice(&(ck.train.batch_size as u64).to_le_bytes());
    buf.extend_from_slice(&(ck.train.epochs as u64).to_le_bytes());
    buf.extend_from_slice(&ck.train.val_fraction.to_le_bytes());
    buf.extend_from_slice(&(ck.train.max_seq_len as u64).to_le_bytes());
    buf.extend_from_slice(&ck.train.seed.to_le_bytes());
    buf.extend_from_slice(&(ck.embedding_path.len() as u32).to_le_bytes());
    buf.extend_from_slice(ck.embedding_path.as_bytes());
    buf.extend_from_slice(&decode_hash(&ck.embedding_hash)?);
    buf.extend_from_slice(&(ck.params.flat().len() as u64).to_le_bytes());
    for p in ck.params.flat() {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn decode_hash(hex: &str) -> Result<[u8; 32]> {
    let mut out = [0u8; 32];
    if hex.len() != 64 {
        return Err(Error::InvalidArgument(format!("embedding hash {hex:?} is not 64 hex digits")));
    }
    for (i, byte) in out.iter_mut().enumerate() {
        *byte = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16)
            .map_err(|_| Error::InvalidArgument(format!("embedding hash {hex:?} is not hex")))?;
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Truncated(format!("checkpoint ends inside {what}")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }
    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
    fn usize(&mut self, what: &str) -> Result<usize> {
        usize::try_from(self.u64(what)?).map_err(|_| Error::InvalidArgument(format!("{what} too large")))
    }
    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn load_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut rd = Reader { bytes: &bytes, pos: 0 };
    let magic = rd.take(4, "magic")?;
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::BadMagic {
            expected: String::from_utf8_lossy(CHECKPOINT_MAGIC).into_owned(),
            found: String::from_utf8_lossy(magic).into_owned(),
        });
    }
    let format_version = rd.u32("version")?;
    if format_version != CHECKPOINT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: format_version,
            supported: CHECKPOINT_VERSION,
        });
    }
    let label_codec_version = rd.u32("label codec version")?;
    if label_codec_version != LABEL_CODEC_VERSION {
        return Err(Error::UnsupportedVersion {
            found: label_codec_version,
            supported: LABEL_CODEC_VERSION,
        });
    }
    let features = FeatureConfig {
        use_lang_tag: rd.u8("feature config")? != 0,
        bidirectional: rd.u8("feature config")? != 0,
    };
    let input = rd.usize("input dim")?;
    let hidden = rd.usize("hidden size")?;
    let train = TrainConfig {
        batch_size: rd.usize("train config")?,
        epochs: rd.usize("train config")?,
        val_fraction: rd.f64("train config")?,
        max_seq_len: rd.usize("train config")?,
        seed: rd.u64("train config")?,
        hidden,
    };
    let path_len = rd.u32("embedding path")? as usize;
    let embedding_path = String::from_utf8(rd.take(path_len, "embedding path")?.to_vec()).map_err(|_| {
        Error::Parse {
            line: 0,
            message: "embedding path is not UTF-8".into(),
        }
    })?;
    let embedding_hash = hex_string(rd.take(32, "embedding hash")?);
    let shape = ClassifierShape {
        input,
        hidden,
        bidirectional: features.bidirectional,
    };
    let count = rd.usize("parameter count")?;
    if count != shape.param_count() {
        return Err(Error::DimensionMismatch {
            expected: shape.param_count(),
            found: count,
        });
    }
    let raw = rd.take(count.checked_mul(8).ok_or_else(|| Error::Truncated("parameters".into()))?, "parameters")?;
    let data: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if rd.pos != bytes.len() {
        return Err(Error::Parse {
            line: 0,
            message: "trailing bytes after checkpoint parameters".into(),
        });
    }
    Ok(Checkpoint {
        params: ClassifierParams::from_flat(shape, data)?,
        features,
        train,
        embedding_path,
        embedding_hash,
        label_codec_version,
        format_version,
    })
}
