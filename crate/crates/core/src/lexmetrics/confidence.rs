//! Lexical confidence proxy: certainty cues minus hedging cues, normalized by
//! utterance length.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primitives::{tokenize, Token};

/// Certainty phrases seeding the default lexicon.
pub const DEFAULT_CERTAINTY: &[&str] = &[
    "definitely",
    "must",
    "undoubtedly",
    "always",
    "clearly",
    "certainly",
    "absolutely",
    "without a doubt",
    "unquestionably",
    "conclusively",
    "positively",
    "with certainty",
    "no doubt",
    "undeniably",
    "strongly",
];

/// Hedging phrases seeding the default lexicon.
pub const DEFAULT_HEDGING: &[&str] = &[
    "might",
    "possibly",
    "could",
    "likely",
    "seems",
    "apparently",
    "perhaps",
    "maybe",
    "presumably",
    "arguably",
    "supposedly",
    "relatively",
    "somewhat",
    "in theory",
    "reportedly",
    "one might argue",
    "from what i gather",
    "i guess",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexiconError {
    #[error("lexicon_parse_error: line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("lexicon_conflict: {phrase:?} appears in both certainty and hedging")]
    Conflict { phrase: String },
    #[error("io_error: {0}")]
    Io(String),
}

impl LexiconError {
    pub fn code(&self) -> &'static str {
        match self {
            LexiconError::Parse { .. } => "lexicon_parse_error",
            LexiconError::Conflict { .. } => "lexicon_conflict",
            LexiconError::Io(_) => "io_error",
        }
    }
}

type Phrase = Vec<Token>;

/// Tokenized certainty and hedging phrase sets, disjoint by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    certainty: BTreeSet<Phrase>,
    hedging: BTreeSet<Phrase>,
    longest: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cue {
    Certainty,
    Hedging,
}

impl Lexicon {
    pub fn new<S: AsRef<str>>(certainty: &[S], hedging: &[S]) -> Result<Self, LexiconError> {
        let tokenize_all = |phrases: &[S]| -> Result<BTreeSet<Phrase>, LexiconError> {
            phrases
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let tokens = tokenize(p.as_ref());
                    if tokens.is_empty() {
                        Err(LexiconError::Parse {
                            line: i + 1,
                            message: format!("phrase {:?} has no tokens", p.as_ref()),
                        })
                    } else {
                        Ok(tokens)
                    }
                })
                .collect()
        };
        let certainty = tokenize_all(certainty)?;
        let hedging = tokenize_all(hedging)?;
        if let Some(shared) = certainty.intersection(&hedging).next() {
            return Err(LexiconError::Conflict {
                phrase: crate::primitives::join_tokens(shared),
            });
        }
        let longest = certainty.iter().chain(&hedging).map(Vec::len).max().unwrap_or(0);
        Ok(Self {
            certainty,
            hedging,
            longest,
        })
    }

    pub fn certainty(&self) -> impl Iterator<Item = &[Token]> {
        self.certainty.iter().map(Vec::as_slice)
    }

    pub fn hedging(&self) -> impl Iterator<Item = &[Token]> {
        self.hedging.iter().map(Vec::as_slice)
    }

    pub fn contains_certainty(&self, phrase: &str) -> bool {
        self.certainty.contains(&tokenize(phrase))
    }

    pub fn contains_hedging(&self, phrase: &str) -> bool {
        self.hedging.contains(&tokenize(phrase))
    }

    /// Parses the `[certainty]` / `[hedging]` section format. `#` starts a
    /// comment; blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut certainty: Vec<String> = Vec::new();
        let mut hedging: Vec<String> = Vec::new();
        let mut section: Option<Cue> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                section = match line {
                    "[certainty]" => Some(Cue::Certainty),
                    "[hedging]" => Some(Cue::Hedging),
                    other => {
                        return Err(LexiconError::Parse {
                            line: line_no,
                            message: format!("unknown section {other}"),
                        })
                    }
                };
                continue;
            }
            if tokenize(line).is_empty() {
                return Err(LexiconError::Parse {
                    line: line_no,
                    message: format!("phrase {line:?} has no tokens"),
                });
            }
            match section {
                Some(Cue::Certainty) => certainty.push(line.to_owned()),
                Some(Cue::Hedging) => hedging.push(line.to_owned()),
                None => {
                    return Err(LexiconError::Parse {
                        line: line_no,
                        message: "phrase before any section header".into(),
                    })
                }
            }
        }
        Self::new(&certainty, &hedging)
    }

    /// counts `(certainty, hedging)` hits using longest-match, non-overlapping,
    /// left-to-right scanning over both phrase sets at once.
    pub fn count_cues(&self, tokens: &[Token]) -> (usize, usize) {
        let mut certain = 0;
        let mut hedged = 0;
        let mut i = 0;
        while i < tokens.len() {
            let max_len = self.longest.min(tokens.len() - i);
            let hit = (1..=max_len).rev().find_map(|len| {
                let window = &tokens[i..i + len];
                if self.certainty.contains(window) {
                    Some((len, Cue::Certainty))
                } else if self.hedging.contains(window) {
                    Some((len, Cue::Hedging))
                } else {
                    None
                }
            });
            match hit {
                Some((len, cue)) => {
                    match cue {
                        Cue::Certainty => certain += 1,
                        Cue::Hedging => hedged += 1,
                    }
                    i += len;
                }
                None => i += 1,
            }
        }
        (certain, hedged)
    }
}

impl Default for Lexicon {
    fn default() -> Self {
        Self::new(DEFAULT_CERTAINTY, DEFAULT_HEDGING).expect("built-in lexicon is valid")
    }
}

/// Built-in lexicon when `path` is `None`; otherwise the file's contents
/// replace the defaults entirely.
pub fn load_lexicon(path: Option<&Path>) -> Result<Lexicon, LexiconError> {
    match path {
        None => Ok(Lexicon::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| LexiconError::Io(format!("{}: {e}", path.display())))?;
            Lexicon::parse(&text)
        }
    }
}

/// Denominator of the confidence score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Word tokens from the shared tokenizer. Keeps scores within [-1, 1].
    #[default]
    Tokens,
    /// Sentence count (runs of text ended by `.`, `!` or `?`). Not bounded.
    Sentences,
}

fn sentence_count(text: &str) -> usize {
    text.split(['.', '!', '?'])
        .filter(|s| !tokenize(s).is_empty())
        .count()
}

pub fn confidence(text: &str, lexicon: &Lexicon) -> f64 {
    confidence_with(text, lexicon, Normalization::Tokens)
}

pub fn confidence_with(text: &str, lexicon: &Lexicon, normalization: Normalization) -> f64 {
    let tokens = tokenize(text);
    let denominator = match normalization {
        Normalization::Tokens => tokens.len(),
        Normalization::Sentences => sentence_count(text),
    };
    if denominator == 0 {
        return 0.0;
    }
    let (certain, hedged) = lexicon.count_cues(&tokens);
    (certain as f64 - hedged as f64) / denominator as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_counted_examples() {
        let lex = Lexicon::default();
        assert_eq!(confidence("this is clearly correct", &lex), 0.25);
        assert_eq!(confidence("might possibly", &lex), -1.0);
        assert_eq!(confidence("a plain code label", &lex), 0.0);
        assert_eq!(confidence("", &lex), 0.0);
    }

    #[test]
    fn multi_word_phrases_match_once() {
        let lex = Lexicon::default();
        // "without a doubt" is one certainty hit, not three tokens of noise.
        assert_eq!(lex.count_cues(&tokenize("Without a doubt, yes")), (1, 0));
        // "one might argue" consumes "might".
        assert_eq!(lex.count_cues(&tokenize("one might argue it could be")), (0, 2));
        assert_eq!(lex.count_cues(&tokenize("From what I gather, no doubt")), (1, 1));
    }

    #[test]
    fn default_lexicon_has_every_seed_phrase() {
        let lex = Lexicon::default();
        assert!(lex.contains_certainty("without a doubt"));
        assert_eq!(lex.certainty().find(|p| p.len() == 3).map(|p| p.len()), Some(3));
        assert!(lex.contains_hedging("one might argue"));
        assert!(DEFAULT_CERTAINTY.iter().all(|p| lex.contains_certainty(p)));
        assert!(DEFAULT_HEDGING.iter().all(|p| lex.contains_hedging(p)));
        assert_eq!(lex.certainty().count(), 15);
        assert_eq!(lex.hedging().count(), 18);
    }

    #[test]
    fn parses_file_format() {
        let lex = Lexicon::parse(
            "# custom\n[certainty]\nsurely\nbeyond question # trailing comment\n\n[hedging]\nkind of\n",
        )
        .unwrap();
        assert!(lex.contains_certainty("beyond question"));
        assert!(lex.contains_hedging("kind of"));
        assert!(!lex.contains_certainty("definitely"));
        assert_eq!(confidence("surely kind of", &lex), 0.0);
    }

    #[test]
    fn parse_errors() {
        let err = Lexicon::parse("[certainty]\nmaybe\n[hedging]\nMaybe\n").unwrap_err();
        assert_eq!(err.code(), "lexicon_conflict");
        assert_eq!(Lexicon::parse("maybe\n").unwrap_err().code(), "lexicon_parse_error");
        assert_eq!(Lexicon::parse("[doubt]\nx\n").unwrap_err().code(), "lexicon_parse_error");
        assert_eq!(Lexicon::parse("[hedging]\n---\n").unwrap_err().code(), "lexicon_parse_error");
        assert_eq!(load_lexicon(Some(Path::new("/no/such/file"))).unwrap_err().code(), "io_error");
    }

    #[test]
    fn sentence_normalization() {
        let lex = Lexicon::default();
        let text = "This is clearly right. It must be.";
        assert_eq!(confidence_with(text, &lex, Normalization::Sentences), 1.0);
        assert_eq!(confidence_with(text, &lex, Normalization::Tokens), 2.0 / 7.0);
    }
}
