//! The `cmsent` command line.
//!
//! Settings resolve as flag, then `--config` file, then built-in default.
//! Every command writes its artifacts under `--out-dir`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::corpus::{read_tsv, LabeledExample};
use crate::embedding::{load_text, save_text, EmbeddingModel};
use crate::error::{Error, Result};
use crate::eval::format_report;
use crate::langid::{load_wordlist, Wordlist};
use crate::pipeline::{
    ablate, load_checkpoint, prepare_split, save_checkpoint, tokenize_examples, train_embedding,
    train_on_split, Checkpoint, Predictor,
};

#[derive(Debug, Parser)]
#[command(name = "cmsent", version, about = "Code-mixed sentiment classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train subword embeddings on one or more corpus files (labels ignored).
    Embed {
        #[arg(required = true)]
        corpora: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Train a classifier; writes model.ckpt, history.json and metrics.json.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        embedding: PathBuf,
        #[arg(long)]
        wordlist: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Score a checkpoint on labeled data; writes eval.json.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        embedding: PathBuf,
        #[arg(long)]
        wordlist: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Train all four variants on one split; writes ablation.json.
    Ablate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        embedding: PathBuf,
        #[arg(long)]
        wordlist: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Label one text per line, printing TSV to stdout.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        embedding: PathBuf,
        #[arg(long)]
        wordlist: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// key = value settings file
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Classifier epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub embed_epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub max_seq_len: Option<usize>,
    #[arg(long)]
    pub no_lang_tag: bool,
    #[arg(long)]
    pub unidirectional: bool,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

impl Common {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_text(&read_string(path)?)?;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.dim {
            cfg.embed.dim = v;
        }
        if let Some(v) = self.epochs {
            cfg.train.epochs = v;
        }
        if let Some(v) = self.embed_epochs {
            cfg.embed.epochs = v;
        }
        if let Some(v) = self.batch_size {
            cfg.train.batch_size = v;
        }
        if let Some(v) = self.hidden {
            cfg.train.hidden = v;
        }
        if let Some(v) = self.max_seq_len {
            cfg.train.max_seq_len = v;
        }
        if self.no_lang_tag {
            cfg.features.use_lang_tag = false;
        }
        if self.unidirectional {
            cfg.features.bidirectional = false;
        }
        if let Some(v) = &self.out_dir {
            cfg.out_dir = v.clone();
        }
        Ok(cfg)
    }
}

/// Binary companion of an embedding text file: same path, `.bin` extension.
pub fn companion_path(text: &Path) -> PathBuf {
    text.with_extension("bin")
}

fn read_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path.display().to_string(), e))
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(cfg.out_dir.display().to_string(), e))?;
    Ok(&cfg.out_dir)
}

fn read_examples(path: &Path) -> Result<Vec<LabeledExample>> {
    read_tsv(open(path)?).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

pub fn load_embedding(text: &Path) -> Result<EmbeddingModel> {
    load_text(open(text)?, open(&companion_path(text))?)
}

fn wordlist_for(path: Option<&Path>, needed: bool) -> Result<Wordlist> {
    match path {
        Some(p) => load_wordlist(open(p)?, &p.display().to_string()),
        None if needed => Err(Error::InvalidArgument(
            "language tags are enabled but no --wordlist was given".into(),
        )),
        None => Ok(Wordlist::default()),
    }
}

fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    load_checkpoint(open(path)?)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Embed { corpora, common } => cmd_embed(&corpora, &common.resolve()?),
        Command::Train {
            data,
            embedding,
            wordlist,
            common,
        } => cmd_train(&data, &embedding, wordlist.as_deref(), &common.resolve()?),
        Command::Eval {
            checkpoint,
            embedding,
            wordlist,
            data,
            common,
        } => cmd_eval(&checkpoint, &embedding, wordlist.as_deref(), &data, &common.resolve()?),
        Command::Ablate {
            data,
            embedding,
            wordlist,
            common,
        } => cmd_ablate(&data, &embedding, &wordlist, &common.resolve()?),
        Command::Predict {
            checkpoint,
            embedding,
            wordlist,
            input,
            common,
        } => {
            common.resolve()?;
            cmd_predict(&checkpoint, &embedding, wordlist.as_deref(), &input)
        }
    }
}

pub fn cmd_embed(corpora: &[PathBuf], cfg: &RunConfig) -> Result<()> {
    let start = Instant::now();
    let texts = corpora.iter().map(|p| read_examples(p)).collect::<Result<Vec<_>>>()?;
    let model = train_embedding(&texts, &cfg.embed_config())?;
    let dir = out_dir(cfg)?;
    let (mut text, mut bin) = (Vec::new(), Vec::new());
    save_text(&model, &mut text, &mut bin)?;
    let text_path = dir.join("vectors.txt");
    write_file(&text_path, &text)?;
    write_file(&companion_path(&text_path), &bin)?;
    println!("vocabulary: {} words", model.vocab.len());
    println!("tokens: {}", model.vocab.total_count());
    println!("wall time: {:.2} s", start.elapsed().as_secs_f64());
    Ok(())
}

pub fn cmd_train(data: &Path, embedding: &Path, wordlist: Option<&Path>, cfg: &RunConfig) -> Result<()> {
    let examples = read_examples(data)?;
    let emb = load_embedding(embedding)?;
    let wl = wordlist_for(wordlist, cfg.features.use_lang_tag)?;
    let tc = cfg.train_config();
    let split = prepare_split(&tokenize_examples(&examples), &tc)?;
    let mut run = train_on_split(&split, &emb, &emb.content_hash(), &wl, cfg.features, &tc)?;
    run.checkpoint.embedding_path = embedding.display().to_string();

    let dir = out_dir(cfg)?;
    let mut ck = Vec::new();
    save_checkpoint(&run.checkpoint, &mut ck)?;
    write_file(&dir.join("model.ckpt"), &ck)?;
    write_file(&dir.join("history.json"), run.history.to_json()?.as_bytes())?;
    let (table, json) = format_report(&run.heldout)?;
    write_file(&dir.join("metrics.json"), json.as_bytes())?;
    println!(
        "{} on {} training / {} heldout examples",
        cfg.features.variant_name(),
        split.train.len(),
        split.heldout.len()
    );
    print!("{table}");
    Ok(())
}

pub fn cmd_eval(
    checkpoint: &Path,
    embedding: &Path,
    wordlist: Option<&Path>,
    data: &Path,
    cfg: &RunConfig,
) -> Result<()> {
    let ck = read_checkpoint(checkpoint)?;
    let emb = load_embedding(embedding)?;
    let wl = wordlist_for(wordlist, ck.features.use_lang_tag)?;
    let examples = read_examples(data)?;
    if examples.is_empty() {
        return Err(Error::InvalidArgument(format!("{} holds no examples", data.display())));
    }
    let report = Predictor::new(&ck, &emb, &wl)?.evaluate(&examples)?;
    let (table, json) = format_report(&report)?;
    write_file(&out_dir(cfg)?.join("eval.json"), json.as_bytes())?;
    print!("{table}");
    Ok(())
}

pub fn cmd_ablate(data: &Path, embedding: &Path, wordlist: &Path, cfg: &RunConfig) -> Result<()> {
    let examples = read_examples(data)?;
    let emb = load_embedding(embedding)?;
    let wl = wordlist_for(Some(wordlist), true)?;
    let report = ablate(&tokenize_examples(&examples), &emb, &wl, &cfg.train_config())?;
    let json = serde_json::to_string_pretty(&report)?;
    write_file(&out_dir(cfg)?.join("ablation.json"), json.as_bytes())?;
    println!(
        "split seed {}: {} training / {} heldout examples",
        report.split_seed, report.train_size, report.heldout_size
    );
    print!("{}", report.format_table());
    Ok(())
}

pub fn cmd_predict(
    checkpoint: &Path,
    embedding: &Path,
    wordlist: Option<&Path>,
    input: &Path,
) -> Result<()> {
    let ck = read_checkpoint(checkpoint)?;
    let emb = load_embedding(embedding)?;
    let wl = wordlist_for(wordlist, ck.features.use_lang_tag)?;
    let text = read_string(input)?;
    let lines: Vec<&str> = text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l)).collect();
    let preds = Predictor::new(&ck, &emb, &wl)?.predict(&lines)?;
    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for (line, p) in lines.iter().zip(&preds) {
        let probs: Vec<String> = p.probs.iter().map(|x| format!("{x:.4}")).collect();
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            line.replace('\t', " "),
            p.label,
            probs.join("\t"),
            if p.empty_input { "empty input" } else { "" }
        )?;
    }
    out.flush()?;
    Ok(())
}
