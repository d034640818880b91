//! Backoff n-gram language model used as a prior over candidate actions.
//!
//! Scoring follows the stupid-backoff scheme: the highest-order observed
//! n-gram contributes its relative frequency; otherwise the score falls back
//! to the next lower order multiplied by a fixed backoff factor. Scores are
//! unnormalized, which is fine because only the ranking is consumed.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use thiserror::Error;

use crate::textutils::tokenize;

/// Multiplicative penalty applied per backoff step.
pub const BACKOFF_FACTOR: f64 = 0.4;

/// Default model order (5-grams).
pub const DEFAULT_ORDER: usize = 5;

const START_MARKER: &str = "<s>";

#[derive(Debug, Error)]
pub enum LmError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("order must be at least 2, got {0}")]
    OrderTooSmall(usize),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

type TokenId = u32;

const UNKNOWN_ID: TokenId = u32::MAX;

/// Counting n-gram model with stupid-backoff scoring.
#[derive(Debug, Clone)]
pub struct NGramModel {
    order: usize,
    backoff_factor: f64,
    token_ids: HashMap<String, TokenId>,
    token_names: Vec<String>,
    /// Index `n-1` holds counts of n-grams.
    counts: Vec<HashMap<Box<[TokenId]>, u64>>,
    total_unigrams: u64,
    vocab_size: usize,
    start_id: TokenId,
}

impl NGramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Distinct non-marker tokens observed in training.
    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Raw count of an n-gram given as tokens.
    pub fn count(&self, ngram: &[&str]) -> u64 {
        if ngram.is_empty() || ngram.len() > self.order {
            return 0;
        }
        let mut ids = Vec::with_capacity(ngram.len());
        for tok in ngram {
            match self.id_of(tok) {
                Some(id) => ids.push(id),
                None => return 0,
            }
        }
        self.counts[ngram.len() - 1]
            .get(ids.as_slice())
            .copied()
            .unwrap_or(0)
    }

    fn id_of(&self, token: &str) -> Option<TokenId> {
        if token == START_MARKER {
            Some(self.start_id)
        } else {
            self.token_ids.get(token).copied()
        }
    }

    /// Backoff-smoothed conditional score of `token` after `context`.
    fn cond_score(&self, context: &[TokenId], token: TokenId) -> f64 {
        if context.is_empty() {
            let count = if token == UNKNOWN_ID {
                0
            } else {
                self.counts[0]
                    .get(std::slice::from_ref(&token) as &[TokenId])
                    .copied()
                    .unwrap_or(0)
            };
            if count > 0 {
                count as f64 / self.total_unigrams as f64
            } else {
                1.0 / (self.vocab_size as f64 + 1.0)
            }
        } else {
            let n = context.len() + 1;
            let mut ngram = Vec::with_capacity(n);
            ngram.extend_from_slice(context);
            ngram.push(token);
            let num = self.counts[n - 1].get(ngram.as_slice()).copied().unwrap_or(0);
            if num > 0 {
                let den = self.counts[n - 2]
                    .get(context)
                    .copied()
                    .expect("prefix of an observed n-gram is observed");
                num as f64 / den as f64
            } else {
                self.backoff_factor * self.cond_score(&context[1..], token)
            }
        }
    }

    /// Natural-log score of a phrase; empty phrases score 0.0 by convention.
    ///
    /// Each token is conditioned on up to `order − 1` preceding tokens, with
    /// the phrase start padded by boundary markers. Never returns −∞.
    pub fn log_prob(&self, phrase: &str) -> f64 {
        let tokens = tokenize(phrase);
        if tokens.is_empty() {
            return 0.0;
        }
        let mut padded: Vec<TokenId> = vec![self.start_id; self.order - 1];
        padded.extend(tokens.iter().map(|t| self.id_of(t).unwrap_or(UNKNOWN_ID)));
        let mut total = 0.0;
        for pos in (self.order - 1)..padded.len() {
            let context = &padded[pos - (self.order - 1)..pos];
            total += self.cond_score(context, padded[pos]).ln();
        }
        total
    }

    /// Sort candidates by descending log-probability, ties lexicographic.
    pub fn rank_actions(&self, candidates: &[String]) -> Vec<String> {
        let mut scored: Vec<(f64, &String)> =
            candidates.iter().map(|c| (self.log_prob(c), c)).collect();
        scored.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.1.cmp(b.1))
        });
        scored.into_iter().map(|(_, c)| c.clone()).collect()
    }
}

/// Count all n-grams up to `order` over the boundary-padded corpus.
pub fn train_lm<S: AsRef<str>>(corpus: &[S], order: usize) -> Result<NGramModel, LmError> {
    if order < 2 {
        return Err(LmError::OrderTooSmall(order));
    }
    if corpus.is_empty() {
        return Err(LmError::EmptyCorpus);
    }
    let mut token_ids: HashMap<String, TokenId> = HashMap::new();
    let mut token_names: Vec<String> = Vec::new();
    let mut intern = |tok: &str, ids: &mut HashMap<String, TokenId>, names: &mut Vec<String>| {
        if let Some(&id) = ids.get(tok) {
            id
        } else {
            let id = names.len() as TokenId;
            names.push(tok.to_string());
            ids.insert(tok.to_string(), id);
            id
        }
    };
    let start_id = intern(START_MARKER, &mut token_ids, &mut token_names);
    token_ids.remove(START_MARKER); // markers are not vocabulary

    let mut counts: Vec<HashMap<Box<[TokenId]>, u64>> = vec![HashMap::new(); order];
    let mut total_unigrams: u64 = 0;
    let mut any_tokens = false;
    for sentence in corpus {
        let tokens = tokenize(sentence.as_ref());
        if tokens.is_empty() {
            continue;
        }
        any_tokens = true;
        let mut padded: Vec<TokenId> = vec![start_id; order - 1];
        for tok in &tokens {
            padded.push(intern(tok, &mut token_ids, &mut token_names));
        }
        for n in 1..=order {
            for window in padded.windows(n) {
                *counts[n - 1].entry(window.into()).or_insert(0) += 1;
            }
        }
        total_unigrams += padded.len() as u64;
    }
    if !any_tokens {
        return Err(LmError::EmptyCorpus);
    }
    let vocab_size = token_ids.len();
    Ok(NGramModel {
        order,
        backoff_factor: BACKOFF_FACTOR,
        token_ids,
        token_names,
        counts,
        total_unigrams,
        vocab_size,
        start_id,
    })
}

/// Train from a plain-text corpus file, one sentence per line.
pub fn train_lm_from_file(path: &Path, order: usize) -> Result<NGramModel, LmError> {
    let file = std::fs::File::open(path)?;
    let mut sentences = Vec::new();
    for line in std::io::BufReader::new(file).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            sentences.push(line);
        }
    }
    train_lm(&sentences, order)
}

/// Persist as sorted `n-gram<TAB>count` lines per order, after a small header.
pub fn save_lm(model: &NGramModel, path: &Path) -> Result<(), LmError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "order\t{}", model.order)?;
    writeln!(out, "backoff\t{}", model.backoff_factor)?;
    for n in 1..=model.order {
        let mut lines: Vec<String> = model.counts[n - 1]
            .iter()
            .map(|(gram, count)| {
                let words: Vec<&str> = gram
                    .iter()
                    .map(|&id| model.token_names[id as usize].as_str())
                    .collect();
                format!("{}\t{}", words.join(" "), count)
            })
            .collect();
        lines.sort();
        for line in lines {
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

/// Load a model produced by [`save_lm`].
pub fn load_lm(path: &Path) -> Result<NGramModel, LmError> {
    let file = std::fs::File::open(path)?;
    let mut order = 0usize;
    let mut backoff_factor = BACKOFF_FACTOR;
    let mut token_ids: HashMap<String, TokenId> = HashMap::new();
    let mut token_names: Vec<String> = vec![START_MARKER.to_string()];
    let start_id = 0;
    let mut counts: Vec<HashMap<Box<[TokenId]>, u64>> = Vec::new();
    let mut total_unigrams = 0u64;
    for (idx, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let (left, right) = line.split_once('\t').ok_or_else(|| LmError::Malformed {
            line: idx + 1,
            msg: "expected <TAB>".into(),
        })?;
        match left {
            "order" => {
                order = right.parse().map_err(|_| LmError::Malformed {
                    line: idx + 1,
                    msg: "bad order".into(),
                })?;
                if order < 2 {
                    return Err(LmError::OrderTooSmall(order));
                }
                counts = vec![HashMap::new(); order];
            }
            "backoff" => {
                backoff_factor = right.parse().map_err(|_| LmError::Malformed {
                    line: idx + 1,
                    msg: "bad backoff".into(),
                })?;
            }
            gram => {
                if counts.is_empty() {
                    return Err(LmError::Malformed {
                        line: idx + 1,
                        msg: "n-gram before order header".into(),
                    });
                }
                let count: u64 = right.parse().map_err(|_| LmError::Malformed {
                    line: idx + 1,
                    msg: "bad count".into(),
                })?;
                let mut ids = Vec::new();
                for word in gram.split(' ') {
                    let id = if word == START_MARKER {
                        start_id
                    } else if let Some(&id) = token_ids.get(word) {
                        id
                    } else {
                        let id = token_names.len() as TokenId;
                        token_names.push(word.to_string());
                        token_ids.insert(word.to_string(), id);
                        id
                    };
                    ids.push(id);
                }
                if ids.is_empty() || ids.len() > order {
                    return Err(LmError::Malformed {
                        line: idx + 1,
                        msg: "n-gram length out of range".into(),
                    });
                }
                if ids.len() == 1 {
                    total_unigrams += count;
                }
                counts[ids.len() - 1].insert(ids.into_boxed_slice(), count);
            }
        }
    }
    if counts.is_empty() {
        return Err(LmError::EmptyCorpus);
    }
    let vocab_size = token_ids.len();
    Ok(NGramModel {
        order,
        backoff_factor,
        token_ids,
        token_names,
        counts,
        total_unigrams,
        vocab_size,
        start_id,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bigram_counts() {
        let model = train_lm(&["open the door"], 2).unwrap();
        assert_eq!(model.count(&["open", "the"]), 1);
        assert_eq!(model.count(&["the", "door"]), 1);
        assert_eq!(model.count(&["open", "door"]), 0);
    }

    #[test]
    fn order_one_rejected() {
        assert!(matches!(
            train_lm(&["open the door"], 1),
            Err(LmError::OrderTooSmall(1))
        ));
    }

    #[test]
    fn empty_corpus_rejected() {
        let empty: Vec<String> = Vec::new();
        assert!(matches!(train_lm(&empty, 2), Err(LmError::EmptyCorpus)));
    }

    #[test]
    fn empty_phrase_scores_zero() {
        let model = train_lm(&["open the door"], 3).unwrap();
        assert_eq!(model.log_prob(""), 0.0);
    }

    #[test]
    fn unseen_token_closed_form() {
        let model = train_lm(&["open the door", "close the window"], 5).unwrap();
        let expected =
            (BACKOFF_FACTOR.powi(4) / (model.vocab_size() as f64 + 1.0)).ln();
        let got = model.log_prob("zzyq");
        assert!((got - expected).abs() < 1e-12, "got {got}, want {expected}");
    }

    #[test]
    fn observed_ngram_is_relative_frequency() {
        let model = train_lm(&["open the door", "open the box"], 3).unwrap();
        // P(open|<s><s>) = 1, P(the|<s> open) = 1, P(door|open the) = 1/2.
        let got = model.log_prob("open the door");
        assert!((got - 0.5f64.ln()).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn ranking_orders_by_score_then_lexicographic() {
        let corpus = vec!["open the door", "open the door", "light the torch"];
        let model = train_lm(&corpus, 3).unwrap();
        let ranked = model.rank_actions(&[
            "light the door".to_string(),
            "open the door".to_string(),
        ]);
        assert_eq!(ranked, vec!["open the door", "light the door"]);
    }

    #[test]
    fn ranking_ties_and_duplicates() {
        let model = train_lm(&["alpha beta"], 2).unwrap();
        let ranked = model.rank_actions(&[
            "zzz".to_string(),
            "aaa".to_string(),
            "zzz".to_string(),
        ]);
        // Unseen singletons tie; lexicographic order breaks the tie and
        // duplicates end up adjacent.
        assert_eq!(ranked, vec!["aaa", "zzz", "zzz"]);
    }

    #[test]
    fn empty_candidates() {
        let model = train_lm(&["alpha beta"], 2).unwrap();
        assert!(model.rank_actions(&[]).is_empty());
    }

    #[test]
    fn persist_roundtrip() {
        let corpus = vec!["open the door", "open the box", "light the torch"];
        let model = train_lm(&corpus, 3).unwrap();
        let dir = std::env::temp_dir().join("nail-lm-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.tsv");
        save_lm(&model, &path).unwrap();
        let loaded = load_lm(&path).unwrap();
        assert_eq!(loaded.order(), model.order());
        assert_eq!(loaded.vocab_size(), model.vocab_size());
        for phrase in ["open the door", "light the box", "zzyq", "open"] {
            let a = model.log_prob(phrase);
            let b = loaded.log_prob(phrase);
            assert!((a - b).abs() < 1e-12, "{phrase}: {a} vs {b}");
        }
    }

    #[test]
    fn shorter_phrases_score_higher() {
        let corpus = vec![
            "open the door",
            "open the door with the key",
            "take the lamp",
        ];
        let model = train_lm(&corpus, 5).unwrap();
        assert!(model.log_prob("open the door") > model.log_prob("open the door with the key"));
    }

    #[test]
    fn prefix_count_invariant_smoke() {
        let corpus = vec!["a b c d e", "a b c", "b c d", "e a b c d"];
        let model = train_lm(&corpus, 4).unwrap();
        for n in 2..=4 {
            for (gram, &count) in &model.counts[n - 1] {
                let prefix = &gram[..n - 1];
                let prefix_count = model.counts[n - 2].get(prefix).copied().unwrap_or(0);
                assert!(
                    count <= prefix_count,
                    "{gram:?}: {count} > prefix {prefix_count}"
                );
            }
        }
    }
}
