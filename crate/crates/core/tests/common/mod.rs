#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cmsent::corpus::{synth_fixture, write_tsv};

/// Subsampling threshold for corpora of a few thousand tokens. The default
/// 1e-4 keeps only a few percent of the tokens at this size.
pub const SMALL_CORPUS_SUBSAMPLE: f64 = 1e-2;

pub fn wordlist_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/wordlist_en.txt")
}

pub fn write_synth(path: &Path, seed: u64, n: usize) {
    let mut f = std::fs::File::create(path).unwrap();
    write_tsv(&mut f, &synth_fixture(seed, n).unwrap()).unwrap();
}

pub fn cmsent(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmsent")).args(args).output().unwrap()
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited normally")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}
