//! The ordered word list that indexes every matrix in the toolkit.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::{Error, Result};

/// Case-folds and trims a word. No lemmatization.
pub fn normalize_word(raw: &str) -> String {
    raw.trim().to_lowercase()
}

/// Ordered list of unique, normalized words with stable 0-based ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from words in order. Each word is normalized;
    /// blank entries are skipped. Line numbers in errors are 1-based
    /// positions in the input sequence.
    pub fn from_words<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out = Vec::new();
        let mut index = BTreeMap::new();
        let mut lines = BTreeMap::new();
        for (pos, raw) in words.into_iter().enumerate() {
            let line = pos + 1;
            let word = normalize_word(raw.as_ref());
            if word.is_empty() {
                continue;
            }
            if word.chars().any(char::is_whitespace) {
                return Err(Error::InvalidWord { word, line, reason: "contains whitespace" });
            }
            if let Some(&first_line) = lines.get(&word) {
                return Err(Error::DuplicateWord { word, first_line, second_line: line });
            }
            lines.insert(word.clone(), line);
            index.insert(word.clone(), out.len());
            out.push(word);
        }
        match out.len() {
            0 => Err(Error::EmptyVocabulary),
            1 => Err(Error::VocabularyTooSmall(1)),
            _ => Ok(Vocabulary { words: out, index }),
        }
    }

    /// Parses the one-word-per-line text format.
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_words(text.lines())
    }

    /// Renders the one-word-per-line text format (trailing newline included).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for w in &self.words {
            s.push_str(w);
            s.push('\n');
        }
        s
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    /// Looks a word up after normalizing it.
    pub fn id(&self, word: &str) -> Option<usize> {
        match self.index.get(word) {
            Some(&id) => Some(id),
            None => self.index.get(&normalize_word(word)).copied(),
        }
    }

    pub fn require_id(&self, word: &str) -> Result<usize> {
        self.id(word).ok_or_else(|| Error::UnknownCue(word.to_string()))
    }

    pub fn check_id(&self, id: usize) -> Result<()> {
        if id < self.len() {
            Ok(())
        } else {
            Err(Error::IdOutOfRange { id, size: self.len() })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_in_order() {
        let v = Vocabulary::from_words(["dog", "cat", "leash"]).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v.id("cat"), Some(1));
        for (i, w) in v.words().iter().enumerate() {
            assert_eq!(v.id(w), Some(i));
        }
    }

    #[test]
    fn case_folded_duplicates_rejected() {
        let err = Vocabulary::from_words(["dog", "Dog"]).unwrap_err();
        assert_eq!(err, Error::DuplicateWord { word: "dog".into(), first_line: 1, second_line: 2 });
        assert!(Vocabulary::from_words(["dog", " DOG "]).is_err());
    }

    #[test]
    fn empty_and_singleton_rejected() {
        assert_eq!(Vocabulary::parse(""), Err(Error::EmptyVocabulary));
        assert_eq!(Vocabulary::parse("\n\n"), Err(Error::EmptyVocabulary));
        assert_eq!(Vocabulary::parse("dog\n"), Err(Error::VocabularyTooSmall(1)));
    }

    #[test]
    fn inner_whitespace_rejected() {
        assert!(matches!(Vocabulary::parse("ice cream\ndog"), Err(Error::InvalidWord { line: 1, .. })));
    }

    #[test]
    fn text_round_trip() {
        let v = Vocabulary::parse("Dog\n  cat \nleash").unwrap();
        assert_eq!(v.words(), ["dog", "cat", "leash"]);
        assert_eq!(Vocabulary::parse(&v.to_text()).unwrap(), v);
    }

    #[test]
    fn lookup_normalizes() {
        let v = Vocabulary::parse("dog\ncat").unwrap();
        assert_eq!(v.id(" CAT"), Some(1));
        assert!(v.require_id("cow").is_err());
    }
}
