//! Dataset ingestion: TSV reading and writing, the rule tokenizer, the
//! sentiment label codec, seeded train/heldout splitting and a synthetic
//! corpus generator with the same shape as the shared-task data.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Version of the label codec below; recorded in checkpoints.
pub const LABEL_CODEC_VERSION: u32 = 1;

pub const NUM_LABELS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SentimentLabel {
    Positive,
    Negative,
    MixedFeelings,
    NotTamil,
    UnknownState,
}

impl SentimentLabel {
    pub const ALL: [SentimentLabel; NUM_LABELS] = [
        SentimentLabel::Positive,
        SentimentLabel::Negative,
        SentimentLabel::MixedFeelings,
        SentimentLabel::NotTamil,
        SentimentLabel::UnknownState,
    ];

    pub fn index(self) -> usize {
        label_to_index(self)
    }

    pub fn name(self) -> &'static str {
        match self {
            SentimentLabel::Positive => "Positive",
            SentimentLabel::Negative => "Negative",
            SentimentLabel::MixedFeelings => "Mixed Feelings",
            SentimentLabel::NotTamil => "Not Tamil",
            SentimentLabel::UnknownState => "Unknown State",
        }
    }
}

pub fn label_to_index(label: SentimentLabel) -> usize {
    match label {
        SentimentLabel::Positive => 0,
        SentimentLabel::Negative => 1,
        SentimentLabel::MixedFeelings => 2,
        SentimentLabel::NotTamil => 3,
        SentimentLabel::UnknownState => 4,
    }
}

pub fn index_to_label(index: usize) -> Result<SentimentLabel> {
    SentimentLabel::ALL
        .get(index)
        .copied()
        .ok_or_else(|| Error::InvalidArgument(format!("label index {index} out of range 0..5")))
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SentimentLabel {
    type Err = Error;

    /// Case-insensitive; whitespace, `_` and `-` are ignored, so
    /// `"Mixed_feelings"`, `"mixed feelings"` and `"not-Tamil"` all parse.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '_' && *c != '-')
            .flat_map(char::to_lowercase)
            .collect();
        match key.as_str() {
            "positive" => Ok(SentimentLabel::Positive),
            "negative" => Ok(SentimentLabel::Negative),
            "mixedfeelings" => Ok(SentimentLabel::MixedFeelings),
            "nottamil" => Ok(SentimentLabel::NotTamil),
            "unknownstate" => Ok(SentimentLabel::UnknownState),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledExample {
    pub text: String,
    pub label: Option<SentimentLabel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenizedSentence {
    pub tokens: Vec<String>,
    pub label: Option<SentimentLabel>,
}

impl TokenizedSentence {
    pub fn from_example(example: &LabeledExample) -> Self {
        TokenizedSentence {
            tokens: tokenize(&example.text),
            label: example.label,
        }
    }
}

/// Reads `text<TAB>label` or bare `text` lines. Blank lines are skipped;
/// `\r\n` endings are accepted.
pub fn read_tsv<R: BufRead>(reader: R) -> Result<Vec<LabeledExample>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => Error::Parse {
                line: line_no,
                message: "invalid UTF-8".into(),
            },
            _ => Error::Stream(e),
        })?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let text = fields.next().unwrap_or_default();
        let label_field = fields.next();
        if fields.next().is_some() {
            return Err(Error::Parse {
                line: line_no,
                message: "expected at most one tab".into(),
            });
        }
        let text = text.trim();
        if text.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty text field".into(),
            });
        }
        let label = match label_field.map(str::trim) {
            None | Some("") => None,
            Some(l) => Some(l.parse()?),
        };
        out.push(LabeledExample {
            text: text.to_string(),
            label,
        });
    }
    Ok(out)
}

/// Writes examples in the format accepted by [`read_tsv`], with canonical
/// label names.
pub fn write_tsv<W: Write>(mut writer: W, examples: &[LabeledExample]) -> Result<()> {
    for ex in examples {
        match ex.label {
            Some(l) => writeln!(writer, "{}\t{}", ex.text, l)?,
            None => writeln!(writer, "{}", ex.text)?,
        }
    }
    Ok(())
}

fn is_punct_or_symbol(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
            | MathSymbol
            | CurrencySymbol
            | ModifierSymbol
            | OtherSymbol
    )
}

/// Unicode simple lowercase mapping. The only character whose full mapping
/// is longer than one char is U+0130, whose simple mapping is the first char
/// of the full one.
fn simple_lowercase(c: char) -> char {
    c.to_lowercase().next().unwrap_or(c)
}

/// Splits `chars` into leading punctuation runs, a core, and trailing runs.
fn split_chunk(chars: &[char], out: &mut Vec<String>) {
    let mut start = 0;
    let mut end = chars.len();
    while start < end && is_punct_or_symbol(chars[start]) {
        let c = chars[start];
        let run = chars[start..end].iter().take_while(|&&x| x == c).count();
        out.push(chars[start..start + run].iter().collect());
        start += run;
    }
    let mut trailing = Vec::new();
    while end > start && is_punct_or_symbol(chars[end - 1]) {
        let c = chars[end - 1];
        let run = chars[start..end].iter().rev().take_while(|&&x| x == c).count();
        trailing.push(chars[end - run..end].iter().collect::<String>());
        end -= run;
    }
    if start < end {
        out.push(chars[start..end].iter().collect());
    }
    out.extend(trailing.into_iter().rev());
}

/// Deterministic rule tokenizer.
///
/// Splits on whitespace, then peels leading and trailing punctuation or
/// symbol characters (Unicode categories P* and S*, which includes emoji)
/// off each chunk as separate tokens. A run of one repeated character such
/// as `"!!"` or `"..."` stays one token. Tokens are lowercased with the
/// simple case mapping.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().map(simple_lowercase).collect();
        split_chunk(&chars, &mut out);
    }
    out.retain(|t| !t.is_empty());
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit<T> {
    pub train: Vec<T>,
    pub heldout: Vec<T>,
    pub seed: u64,
}

/// Seeded shuffle followed by moving the last `round(fraction * N)` items
/// to the heldout set.
pub fn split_validation<T>(data: Vec<T>, fraction: f64, seed: u64) -> Result<DatasetSplit<T>> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!(
            "validation fraction {fraction} not in [0, 1)"
        )));
    }
    let mut data = data;
    SplitMix64::new(seed).shuffle(&mut data);
    let heldout_len = (fraction * data.len() as f64).round() as usize;
    let heldout = data.split_off(data.len() - heldout_len);
    Ok(DatasetSplit {
        train: data,
        heldout,
        seed,
    })
}

/// Per-class marker tokens used by [`synth_fixture`], indexed by label code.
pub const SYNTH_MARKERS: [&str; NUM_LABELS] = ["semma", "mokka", "paravala", "bahut", "enna"];

const SYNTH_FILLER: [&str; 28] = [
    "movie", "trailer", "padam", "thalaivar", "song", "bgm", "vera", "level", "scene",
    "director", "music", "anna", "da", "intha", "hero", "waiting", "first", "day", "show",
    "nalla", "iruku", "story", "fans", "theatre", "release", "teaser", "kandippa", "paakanum",
];

// Filler words class k leans on: SYNTH_FILLER[k * LEANING..(k + 1) * LEANING].
const LEANING: usize = 5;

const SYNTH_PUNCT: [&str; 4] = ["!", "!!", "...", "?"];

/// Generates `n` labeled sentences, cycling through the five classes.
///
/// Each sentence holds 3 to 10 filler words (romanized Tamil and English,
/// randomly capitalized) with its class marker inserted at a random position,
/// and sometimes trailing punctuation. Three in four filler words come from a
/// five-word slice of the shared vocabulary that belongs to the class, the rest
/// from the whole vocabulary, so every filler word can show up under every
/// class. Markers never occur as filler, so the task is separable.
pub fn synth_fixture(seed: u64, n: usize) -> Result<Vec<LabeledExample>> {
    if n < NUM_LABELS {
        return Err(Error::InvalidArgument(format!(
            "synthetic corpus needs at least {NUM_LABELS} examples, got {n}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % NUM_LABELS;
        let len = 3 + rng.below(8);
        let mut words: Vec<String> = (0..len)
            .map(|_| {
                let w = if rng.below(4) == 0 {
                    SYNTH_FILLER[rng.below(SYNTH_FILLER.len())]
                } else {
                    SYNTH_FILLER[class * LEANING + rng.below(LEANING)]
                };
                if rng.below(4) == 0 {
                    let mut cs = w.chars();
                    match cs.next() {
                        Some(f) => f.to_uppercase().chain(cs).collect(),
                        None => String::new(),
                    }
                } else {
                    w.to_string()
                }
            })
            .collect();
        let pos = rng.below(len + 1);
        words.insert(pos, SYNTH_MARKERS[class].to_string());
        let mut text = words.join(" ");
        if rng.below(3) == 0 {
            text.push_str(SYNTH_PUNCT[rng.below(SYNTH_PUNCT.len())]);
        }
        out.push(LabeledExample {
            text,
            label: Some(SentimentLabel::ALL[class]),
        });
    }
    Ok(out)
}
