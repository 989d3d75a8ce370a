//! English / non-English token tagging by wordlist lookup.

use std::collections::HashSet;
use std::io::BufRead;

use crate::error::{Error, Result};

/// Set of lowercase ASCII words treated as English.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Wordlist {
    entries: HashSet<String>,
    pub source_name: String,
    /// Lines dropped on load because they were not `[a-z]+` after lowercasing.
    pub skipped: usize,
}

impl Wordlist {
    pub fn from_words<I, S>(words: I, source_name: &str) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut wl = Wordlist {
            source_name: source_name.to_string(),
            ..Default::default()
        };
        for w in words {
            wl.insert(w.as_ref());
        }
        wl
    }

    /// Adds `word` after normalization; returns false if it was rejected.
    pub fn insert(&mut self, word: &str) -> bool {
        let w = word.trim().to_ascii_lowercase();
        if !w.is_empty() && w.bytes().all(|b| b.is_ascii_lowercase()) {
            self.entries.insert(w);
            true
        } else {
            false
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Loads one word per line; `#` lines are comments. Lines that are not
/// alphabetic ASCII after trimming and lowercasing are counted in
/// [`Wordlist::skipped`].
pub fn load_wordlist<R: BufRead>(reader: R, source_name: &str) -> Result<Wordlist> {
    let mut wl = Wordlist {
        source_name: source_name.to_string(),
        ..Default::default()
    };
    for line in reader.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !wl.insert(trimmed) {
            wl.skipped += 1;
        }
    }
    Ok(wl)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LanguageTag {
    English,
    NonEnglish,
}

impl LanguageTag {
    pub const DIM: usize = 2;

    pub fn one_hot(self) -> [f64; 2] {
        match self {
            LanguageTag::English => [1.0, 0.0],
            LanguageTag::NonEnglish => [0.0, 1.0],
        }
    }
}

/// English iff the token is all ASCII letters and its lowercase form is in
/// the wordlist. Numbers, punctuation and non-Latin script are NonEnglish.
pub fn tag_token(token: &str, wl: &Wordlist) -> Result<LanguageTag> {
    if token.is_empty() {
        return Err(Error::InvalidArgument("cannot tag an empty token".into()));
    }
    if token.bytes().all(|b| b.is_ascii_alphabetic()) && wl.contains(&token.to_ascii_lowercase()) {
        Ok(LanguageTag::English)
    } else {
        Ok(LanguageTag::NonEnglish)
    }
}

pub fn tag_sentence<S: AsRef<str>>(tokens: &[S], wl: &Wordlist) -> Result<Vec<LanguageTag>> {
    tokens.iter().map(|t| tag_token(t.as_ref(), wl)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fixture() -> Wordlist {
        load_wordlist(
            include_str!("../data/wordlist_en.txt").as_bytes(),
            "wordlist_en.txt",
        )
        .unwrap()
    }

    #[test]
    fn load_normalizes() {
        let wl = load_wordlist("Movie\nthe\n".as_bytes(), "t").unwrap();
        assert_eq!(wl.len(), 2);
        assert!(wl.contains("movie") && wl.contains("the"));
        let wl = load_wordlist("".as_bytes(), "empty").unwrap();
        assert!(wl.is_empty());
        assert_eq!(tag_token("the", &wl).unwrap(), LanguageTag::NonEnglish);
        let wl = load_wordlist("a\na\nA\n# comment\nx1\nnaïve\n".as_bytes(), "t").unwrap();
        assert_eq!(wl.len(), 1);
        assert_eq!(wl.skipped, 2);
    }

    #[test]
    fn fixture_size() {
        let wl = fixture();
        assert!(wl.len() > 20_000, "{}", wl.len());
        assert_eq!(wl.skipped, 0);
    }

    #[test]
    fn tags_tokens() {
        let wl = Wordlist::from_words(["movie"], "t");
        assert_eq!(tag_token("movie", &wl).unwrap(), LanguageTag::English);
        assert_eq!(tag_token("Movie", &wl).unwrap(), LanguageTag::English);
        assert_eq!(tag_token("படம்", &wl).unwrap(), LanguageTag::NonEnglish);
        assert!(tag_token("", &wl).is_err());
        let wl = fixture();
        assert_eq!(tag_token("semma", &wl).unwrap(), LanguageTag::NonEnglish);
        assert_eq!(tag_token("123", &wl).unwrap(), LanguageTag::NonEnglish);
    }

    #[test]
    fn tags_sentences() {
        let wl = fixture();
        // "mass" is an ordinary English word and is in the fixture list.
        assert_eq!(
            tag_sentence(&["trailer", "semma", "mass"], &wl).unwrap(),
            vec![LanguageTag::English, LanguageTag::NonEnglish, LanguageTag::English]
        );
        assert_eq!(
            tag_sentence(&["vera", "level", "bgm"], &wl).unwrap(),
            vec![LanguageTag::NonEnglish, LanguageTag::English, LanguageTag::NonEnglish]
        );
        assert!(tag_sentence::<&str>(&[], &wl).unwrap().is_empty());
        assert!(tag_sentence(&["!!", ",", "..."], &wl)
            .unwrap()
            .iter()
            .all(|t| *t == LanguageTag::NonEnglish));
    }

    #[test]
    fn one_hot_encoding() {
        let e = LanguageTag::English.one_hot();
        let n = LanguageTag::NonEnglish.one_hot();
        assert_eq!([e[0] + n[0], e[1] + n[1]], [1.0, 1.0]);
        assert_eq!(e.iter().sum::<f64>(), 1.0);
        assert_eq!(n.iter().sum::<f64>(), 1.0);
    }

    proptest! {
        #[test]
        fn adding_words_is_monotone(
            words in proptest::collection::vec("[a-z]{1,6}", 0..20),
            extra in "[a-z]{1,6}",
            probes in proptest::collection::vec("[a-zA-Z0-9]{1,6}", 1..20),
        ) {
            let small = Wordlist::from_words(&words, "s");
            let mut big = small.clone();
            big.insert(&extra);
            for p in &probes {
                if tag_token(p, &small).unwrap() == LanguageTag::English {
                    prop_assert_eq!(tag_token(p, &big).unwrap(), LanguageTag::English);
                }
            }
        }
    }
}
