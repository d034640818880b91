//! Shared text machinery: tokenizer, part-of-speech lexicon, rule-based
//! noun-phrase chunker, and fuzzy token-set similarity.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::path::Path;

use thiserror::Error;

/// Coarse part-of-speech tags used by the chunker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PosTag {
    Noun,
    Verb,
    Adjective,
    Determiner,
    Preposition,
    Pronoun,
    Other,
}

impl PosTag {
    fn parse(s: &str) -> Option<PosTag> {
        match s {
            "noun" => Some(PosTag::Noun),
            "verb" => Some(PosTag::Verb),
            "adjective" | "adj" => Some(PosTag::Adjective),
            "determiner" | "det" => Some(PosTag::Determiner),
            "preposition" | "prep" => Some(PosTag::Preposition),
            "pronoun" => Some(PosTag::Pronoun),
            "other" => Some(PosTag::Other),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("failed to read lexicon: {0}")]
    Io(#[from] std::io::Error),
    #[error("lexicon line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

/// Word -> part-of-speech tag sets, loaded from a flat TSV file.
///
/// Lookups are case-insensitive; unknown words return the empty set.
#[derive(Debug, Clone, Default)]
pub struct PosLexicon {
    entries: BTreeMap<String, BTreeSet<PosTag>>,
}

impl PosLexicon {
    /// Load a lexicon from `word<TAB>tag,tag,...` lines.
    pub fn load(path: &Path) -> Result<PosLexicon, LexiconError> {
        let file = std::fs::File::open(path)?;
        let mut entries: BTreeMap<String, BTreeSet<PosTag>> = BTreeMap::new();
        for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, tags) = line.split_once('\t').ok_or_else(|| LexiconError::Malformed {
                line: idx + 1,
                msg: "expected word<TAB>tags".into(),
            })?;
            let set = entries.entry(word.trim().to_lowercase()).or_default();
            for tag in tags.split(',') {
                let tag = tag.trim();
                if tag.is_empty() {
                    continue;
                }
                set.insert(PosTag::parse(tag).ok_or_else(|| LexiconError::Malformed {
                    line: idx + 1,
                    msg: format!("unknown tag {tag:?}"),
                })?);
            }
        }
        Ok(PosLexicon { entries })
    }

    /// Build a lexicon from in-memory (word, tags) pairs. Mostly for tests.
    pub fn from_entries<I, S>(pairs: I) -> PosLexicon
    where
        I: IntoIterator<Item = (S, Vec<PosTag>)>,
        S: AsRef<str>,
    {
        let mut entries: BTreeMap<String, BTreeSet<PosTag>> = BTreeMap::new();
        for (word, tags) in pairs {
            entries
                .entry(word.as_ref().to_lowercase())
                .or_default()
                .extend(tags);
        }
        PosLexicon { entries }
    }

    /// Tag set for a word; empty when the word is unknown.
    pub fn tags(&self, word: &str) -> BTreeSet<PosTag> {
        self.entries
            .get(&word.to_lowercase())
            .cloned()
            .unwrap_or_default()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.contains_key(&word.to_lowercase())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Lowercase tokens: alphanumeric runs with internal hyphens and apostrophes
/// preserved ("song-bird", "can't"); punctuation split off and dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if (c == '-' || c == '\'')
            && !current.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric())
        {
            current.push(c);
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// A chunked noun phrase: adjectives plus head noun(s), determiners stripped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NounPhrase {
    /// Normalized phrase text (space-joined tokens, determiners removed).
    pub text: String,
    /// Head token (the final token of the phrase).
    pub head: String,
    /// Token index range `[start, end)` into the tokenized source.
    pub span: (usize, usize),
}

/// Maximum number of noun phrases returned per call; bounds examination cost.
pub const MAX_NOUN_PHRASES: usize = 20;

/// Extract maximal `determiner? adjective* noun+` chunks from `text`.
///
/// A token absent from the lexicon that directly follows a determiner or
/// adjective is treated as a noun, since games freely invent proper nouns.
/// Duplicates are removed preserving first occurrence; at most
/// [`MAX_NOUN_PHRASES`] phrases are returned.
pub fn extract_noun_phrases(text: &str, lexicon: &PosLexicon) -> Vec<NounPhrase> {
    let tokens = tokenize(text);
    let mut phrases: Vec<NounPhrase> = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut i = 0;
    while i < tokens.len() && phrases.len() < MAX_NOUN_PHRASES {
        let start = i;
        let mut j = i;
        // Optional determiner.
        if lexicon.tags(&tokens[j]).contains(&PosTag::Determiner) {
            j += 1;
        }
        let mut prev_modifier = j > start;
        // Adjectives.
        let adj_start = j;
        while j < tokens.len() {
            let tags = lexicon.tags(&tokens[j]);
            if tags.contains(&PosTag::Adjective) && !tags.contains(&PosTag::Noun) {
                j += 1;
                prev_modifier = true;
            } else {
                break;
            }
        }
        // Nouns: lexicon nouns, or an unknown token directly after a modifier.
        let noun_start = j;
        while j < tokens.len() {
            let tags = lexicon.tags(&tokens[j]);
            let is_noun = tags.contains(&PosTag::Noun);
            let unknown_as_noun = tags.is_empty() && prev_modifier;
            if is_noun || unknown_as_noun {
                j += 1;
                prev_modifier = false;
            } else {
                break;
            }
        }
        if j > noun_start {
            // Keep adjectives and nouns; the determiner is stripped.
            let phrase_tokens = &tokens[adj_start..j];
            let text = phrase_tokens.join(" ");
            let head = phrase_tokens.last().expect("non-empty phrase").clone();
            if seen.insert(text.clone()) {
                phrases.push(NounPhrase {
                    text,
                    head,
                    span: (adj_start, j),
                });
            }
            i = j;
        } else {
            i = start + 1;
        }
    }
    phrases
}

/// Token-set similarity in `[0, 1]`.
///
/// Both strings are tokenized into unique token sets `A` and `B`; the score
/// is the mean of the two containment fractions
/// `(|A∩B|/|A| + |A∩B|/|B|) / 2`. Appending sentences to a description only
/// dilutes one side, so the score degrades gracefully; it is symmetric and
/// equals 1.0 exactly when the token sets are identical.
pub fn fuzzy_ratio(a: &str, b: &str) -> f64 {
    let set_a: BTreeSet<String> = tokenize(a).into_iter().collect();
    let set_b: BTreeSet<String> = tokenize(b).into_iter().collect();
    match (set_a.is_empty(), set_b.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let common = set_a.intersection(&set_b).count() as f64;
    let frac_a = common / set_a.len() as f64;
    let frac_b = common / set_b.len() as f64;
    (frac_a + frac_b) / 2.0
}
