//! WordPiece vocabulary training and encoding.
//!
//! The tokenizer is BERT's greedy longest-match-first decomposition over
//! whitespace-delimited words; word-internal pieces carry the `##` prefix
//! and a word with any unmatchable segment collapses to a single `[UNK]`.
//! Vocabulary training is iterative pair merging by frequency, which is the
//! simplest trainer that yields realistic subword inventories at small
//! scale.
//!
//! Vocabulary files hold one token per line, UTF-8, with the line number as
//! the id and the special tokens on the first five lines.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::error::{Error, Result};

/// The special tokens, in reserved-id order 0..=4.
pub const SPECIALS: [&str; 5] = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"];

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const CLS: usize = 2;
pub const SEP: usize = 3;
pub const MASK: usize = 4;

/// An immutable subword inventory with the five specials at ids 0..=4.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    id_of: HashMap<String, usize>,
}

impl Vocabulary {
    /// Build a vocabulary from an ordered token list. The first five entries
    /// must be the specials in reserved order; tokens must be unique and
    /// non-empty.
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < SPECIALS.len() {
            return Err(Error::InvalidVocab(format!(
                "need at least {} tokens for the specials, got {}",
                SPECIALS.len(),
                tokens.len()
            )));
        }
        for (i, expected) in SPECIALS.iter().enumerate() {
            if tokens[i] != *expected {
                return Err(Error::InvalidVocab(format!(
                    "token {} must be {expected}, got {:?}",
                    i, tokens[i]
                )));
            }
        }
        let mut id_of = HashMap::with_capacity(tokens.len());
        for (id, token) in tokens.iter().enumerate() {
            if id >= SPECIALS.len() && token.is_empty() {
                return Err(Error::InvalidVocab(format!("token {} is empty", id)));
            }
            if id_of.insert(token.clone(), id).is_some() {
                return Err(Error::InvalidVocab(format!("duplicate token {:?}", token)));
            }
        }
        Ok(Vocabulary { tokens, id_of })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.id_of.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(|s| s.as_str())
    }

    pub fn contains(&self, token: &str) -> bool {
        self.id_of.contains_key(token)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// One token per line, line number = id.
    pub fn write_file(&self, path: &Path) -> Result<()> {
        let mut text = self.tokens.join("\n");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Vocabulary::new(text.lines().map(|l| l.to_string()).collect())
    }
}

/// A fixed-length id sequence: `[CLS] tokens… [SEP]` left-aligned, padded
/// with `[PAD]`, plus the matching prefix mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    pub ids: Vec<usize>,
    /// true = real token, false = padding; always a prefix of trues.
    pub mask: Vec<bool>,
    /// Count of real tokens, CLS and SEP included.
    pub length: usize,
}

impl TokenSequence {
    /// Assemble a sequence from interior token ids (no specials), truncating
    /// to fit `max_len` and padding to exactly `max_len`.
    pub fn from_interior_ids(interior: &[usize], max_len: usize) -> Result<Self> {
        if max_len < 3 {
            return Err(Error::MaxLenTooSmall(max_len));
        }
        let keep = interior.len().min(max_len - 2);
        let mut ids = Vec::with_capacity(max_len);
        ids.push(CLS);
        ids.extend_from_slice(&interior[..keep]);
        ids.push(SEP);
        let length = ids.len();
        ids.resize(max_len, PAD);
        let mask = (0..max_len).map(|i| i < length).collect();
        Ok(TokenSequence { ids, mask, length })
    }
}

/// Train a WordPiece vocabulary by greedy pair merging.
///
/// The result contains the specials, every observed single-character piece
/// (initial and `##` continuation forms as observed), and merged pieces
/// added most-frequent-first until `target_size` is reached or no pair
/// occurs more than once.
pub fn train_vocab(corpus: &[String], target_size: usize) -> Result<Vocabulary> {
    if corpus.iter().all(|line| line.split_whitespace().next().is_none()) {
        return Err(Error::EmptyCorpus);
    }

    // Word frequencies; BTreeMap keeps every later iteration order-stable.
    let mut word_freq: BTreeMap<String, u64> = BTreeMap::new();
    for line in corpus {
        for word in line.split_whitespace() {
            *word_freq.entry(word.to_string()).or_insert(0) += 1;
        }
    }

    // Each word starts as single-character pieces.
    let mut words: Vec<(Vec<String>, u64)> = word_freq
        .iter()
        .map(|(word, &freq)| {
            let pieces = word
                .chars()
                .enumerate()
                .map(|(i, c)| {
                    if i == 0 {
                        c.to_string()
                    } else {
                        format!("##{c}")
                    }
                })
                .collect();
            (pieces, freq)
        })
        .collect();

    let mut tokens: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
    let mut seen: BTreeMap<String, ()> = BTreeMap::new();
    for (pieces, _) in &words {
        for piece in pieces {
            seen.entry(piece.clone()).or_insert(());
        }
    }
    let needed = tokens.len() + seen.len();
    if needed > target_size {
        return Err(Error::VocabTargetTooSmall {
            target: target_size,
            needed,
        });
    }
    tokens.extend(seen.keys().cloned());

    while tokens.len() < target_size {
        // Count adjacent pairs across all word representations.
        let mut pair_freq: BTreeMap<(String, String), u64> = BTreeMap::new();
        for (pieces, freq) in &words {
            for pair in pieces.windows(2) {
                *pair_freq
                    .entry((pair[0].clone(), pair[1].clone()))
                    .or_insert(0) += freq;
            }
        }
        // Highest count wins; ties fall back to the lexicographically
        // smallest merged token so training is deterministic.
        let best = pair_freq
            .iter()
            .map(|((a, b), &count)| (count, merge_token(a, b), (a.clone(), b.clone())))
            .max_by(|x, y| x.0.cmp(&y.0).then_with(|| y.1.cmp(&x.1)));
        let Some((count, merged, (left, right))) = best else {
            break;
        };
        if count < 2 {
            break;
        }
        for (pieces, _) in &mut words {
            let mut i = 0;
            while i + 1 < pieces.len() {
                if pieces[i] == left && pieces[i + 1] == right {
                    pieces[i] = merged.clone();
                    pieces.remove(i + 1);
                } else {
                    i += 1;
                }
            }
        }
        if !tokens.contains(&merged) {
            tokens.push(merged);
        }
    }

    Vocabulary::new(tokens)
}

fn merge_token(left: &str, right: &str) -> String {
    format!("{left}{}", right.strip_prefix("##").unwrap_or(right))
}

/// Greedy longest-match-first decomposition of one word. Returns `None`
/// when some position has no matching piece, in which case the word maps
/// to `[UNK]`.
fn match_word(word: &str, vocab: &Vocabulary) -> Option<Vec<String>> {
    let chars: Vec<char> = word.chars().collect();
    let mut pieces = Vec::new();
    let mut start = 0;
    while start < chars.len() {
        let mut end = chars.len();
        let mut found = None;
        while end > start {
            let mut candidate: String = chars[start..end].iter().collect();
            if start > 0 {
                candidate = format!("##{candidate}");
            }
            if vocab.contains(&candidate) {
                found = Some((candidate, end));
                break;
            }
            end -= 1;
        }
        let (piece, next) = found?;
        pieces.push(piece);
        start = next;
    }
    Some(pieces)
}

/// WordPiece-tokenize whitespace-split text into subword strings.
pub fn tokenize(text: &str, vocab: &Vocabulary) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        match match_word(word, vocab) {
            Some(pieces) => out.extend(pieces),
            None => out.push(SPECIALS[UNK].to_string()),
        }
    }
    out
}

/// Tokenize and frame as `[CLS] … [SEP]`, truncated and padded to exactly
/// `max_len` ids.
pub fn encode(text: &str, vocab: &Vocabulary, max_len: usize) -> Result<TokenSequence> {
    if max_len < 3 {
        return Err(Error::MaxLenTooSmall(max_len));
    }
    let interior: Vec<usize> = tokenize(text, vocab)
        .iter()
        .map(|piece| vocab.id(piece).expect("tokenize only emits vocab pieces"))
        .collect();
    TokenSequence::from_interior_ids(&interior, max_len)
}

/// Inverse id lookup with `[PAD]` entries dropped.
pub fn decode(ids: &[usize], vocab: &Vocabulary) -> Result<Vec<String>> {
    let mut out = Vec::with_capacity(ids.len());
    for &id in ids {
        let token = vocab.token(id).ok_or(Error::UnknownId(id))?;
        if id != PAD {
            out.push(token.to_string());
        }
    }
    Ok(out)
}
