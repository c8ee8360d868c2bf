//! Tweet text normalization.
//!
//! Every dataset and every prediction input passes through the same
//! deterministic pipeline before tokenization: username removal, URL
//! removal, Arabic diacritic removal, repeated-character squashing, and
//! whitespace collapsing. Each step is a pure deletion; the pipeline never
//! introduces characters that were not in the input (whitespace collapse
//! aside). Steps run in a fixed order and the pipeline is re-applied until
//! the text is stable, so a later deletion cannot re-expose a pattern an
//! earlier step would have removed.
//!
//! Minimum-word filtering ([`passes_min_words`]) and retweet detection
//! ([`is_retweet`]) are dataset-level predicates used at ingestion time;
//! they never mutate text.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};

/// Default diacritic set: Arabic harakat/tanween U+064B..U+0652, the dagger
/// alif U+0670 and the tatweel U+0640.
pub fn default_diacritics() -> BTreeSet<char> {
    let mut set: BTreeSet<char> = ('\u{064B}'..='\u{0652}').collect();
    set.insert('\u{0670}');
    set.insert('\u{0640}');
    set
}

/// Flags controlling the normalization pipeline for one task.
///
/// `min_words` and `drop_retweets` are ingestion-time filters, not text
/// mutations; they live here because they are configured per task alongside
/// the mutation flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizeConfig {
    pub strip_usernames: bool,
    pub strip_urls: bool,
    pub strip_diacritics: bool,
    pub squash_repeats: bool,
    /// Minimum whitespace-delimited word count; 0 disables filtering.
    pub min_words: usize,
    /// Drop samples whose raw text starts with the literal prefix `RT `.
    pub drop_retweets: bool,
    /// Code points deleted by [`strip_diacritics`].
    pub diacritics: BTreeSet<char>,
}

impl Default for NormalizeConfig {
    fn default() -> Self {
        NormalizeConfig {
            strip_usernames: true,
            strip_urls: true,
            strip_diacritics: true,
            squash_repeats: false,
            min_words: 0,
            drop_retweets: false,
            diacritics: default_diacritics(),
        }
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Remove `@handle` tokens: an `@` at a word boundary followed by one or
/// more word characters (letters, digits, underscore — Arabic letters
/// included). A mid-word `@`, as in an email address, is preserved.
pub fn strip_usernames(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut kept = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let at_boundary = i == 0 || !is_word_char(chars[i - 1]);
        if c == '@' && at_boundary {
            let mut j = i + 1;
            while j < chars.len() && is_word_char(chars[j]) {
                j += 1;
            }
            if j > i + 1 {
                // Skip the whole handle.
                i = j;
                continue;
            }
        }
        kept.push(c);
        i += 1;
    }
    collapse_whitespace(&kept)
}

const URL_PREFIXES: [&str; 3] = ["http://", "https://", "www."];

/// Remove substrings beginning `http://`, `https://` or `www.` up to the
/// next whitespace character.
pub fn strip_urls(text: &str) -> String {
    let mut kept = String::with_capacity(text.len());
    let mut rest = text;
    while !rest.is_empty() {
        let start = URL_PREFIXES
            .iter()
            .filter_map(|p| rest.find(p))
            .min();
        match start {
            Some(at) => {
                kept.push_str(&rest[..at]);
                let tail = &rest[at..];
                let end = tail
                    .char_indices()
                    .find(|(_, c)| c.is_whitespace())
                    .map(|(i, _)| i)
                    .unwrap_or(tail.len());
                rest = &tail[end..];
            }
            None => {
                kept.push_str(rest);
                break;
            }
        }
    }
    collapse_whitespace(&kept)
}

/// Delete every code point in the configured diacritic set; all other code
/// points are preserved in order.
pub fn strip_diacritics(text: &str, diacritics: &BTreeSet<char>) -> String {
    text.chars().filter(|c| !diacritics.contains(c)).collect()
}

/// Reduce every run of 3 or more identical code points to exactly 2.
/// Runs of length 1 or 2 are untouched.
pub fn squash_repeats(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut prev: Option<char> = None;
    let mut run = 0usize;
    for c in text.chars() {
        if Some(c) == prev {
            run += 1;
        } else {
            prev = Some(c);
            run = 1;
        }
        if run <= 2 {
            out.push(c);
        }
    }
    out
}

fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn normalize_pass(text: &str, config: &NormalizeConfig) -> String {
    let mut t = text.to_string();
    if config.strip_usernames {
        t = strip_usernames(&t);
    }
    if config.strip_urls {
        t = strip_urls(&t);
    }
    if config.strip_diacritics {
        t = strip_diacritics(&t, &config.diacritics);
    }
    if config.squash_repeats {
        t = squash_repeats(&t);
    }
    collapse_whitespace(&t)
}

/// Apply the enabled steps in fixed order (usernames, URLs, diacritics,
/// repeats, whitespace collapse), repeating the pass until the text is
/// stable. Deleting diacritics can expose a handle or URL that the earlier
/// steps must then see; iterating to a fixpoint keeps the whole pipeline
/// idempotent. Each pass only deletes, so the loop terminates.
pub fn normalize(text: &str, config: &NormalizeConfig) -> String {
    let mut current = normalize_pass(text, config);
    loop {
        let next = normalize_pass(&current, config);
        if next == current {
            return current;
        }
        current = next;
    }
}

/// True iff the whitespace-delimited word count is at least `min_words`.
pub fn passes_min_words(text: &str, min_words: usize) -> bool {
    text.split_whitespace().count() >= min_words
}

/// Retweets are detected on the raw text by the literal `RT ` prefix
/// (ignoring leading whitespace).
pub fn is_retweet(raw: &str) -> bool {
    raw.trim_start().starts_with("RT ")
}

/// Per-task overrides loaded from a normalization config file.
///
/// The file is line-oriented `key=value` text. `#` starts a comment.
/// Recognized keys:
///
/// ```text
/// diacritics=064B-0652,0670,0640        # hex code points or ranges
/// task.<name>.strip_usernames=true
/// task.<name>.strip_urls=true
/// task.<name>.strip_diacritics=true
/// task.<name>.squash_repeats=false
/// task.<name>.min_words=3
/// task.<name>.drop_retweets=true
/// ```
#[derive(Debug, Clone, Default)]
pub struct NormalizeOverrides {
    pub diacritics: Option<BTreeSet<char>>,
    pub per_task: Vec<(String, String, String)>, // (task, key, value)
}

impl NormalizeOverrides {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut overrides = NormalizeOverrides::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::BadManifest {
                path: path.to_path_buf(),
                reason: format!("line {}: expected key=value", lineno + 1),
            })?;
            let key = key.trim();
            let value = value.trim();
            if key == "diacritics" {
                overrides.diacritics = Some(parse_codepoint_set(value).map_err(|reason| {
                    Error::BadManifest {
                        path: path.to_path_buf(),
                        reason: format!("line {}: {}", lineno + 1, reason),
                    }
                })?);
            } else if let Some(rest) = key.strip_prefix("task.") {
                let (task, flag) = rest.split_once('.').ok_or_else(|| Error::BadManifest {
                    path: path.to_path_buf(),
                    reason: format!("line {}: expected task.<name>.<flag>", lineno + 1),
                })?;
                overrides
                    .per_task
                    .push((task.to_string(), flag.to_string(), value.to_string()));
            } else {
                return Err(Error::BadManifest {
                    path: path.to_path_buf(),
                    reason: format!("line {}: unknown key {:?}", lineno + 1, key),
                });
            }
        }
        Ok(overrides)
    }

    /// Apply the overrides recorded for `task` on top of `config`.
    pub fn apply(&self, task: &str, config: &mut NormalizeConfig) -> Result<()> {
        if let Some(set) = &self.diacritics {
            config.diacritics = set.clone();
        }
        for (t, key, value) in &self.per_task {
            if t != task {
                continue;
            }
            let parse_bool = |v: &str| -> Result<bool> {
                v.parse::<bool>()
                    .map_err(|_| Error::InvalidConfig(format!("{}: expected true/false, got {:?}", key, v)))
            };
            match key.as_str() {
                "strip_usernames" => config.strip_usernames = parse_bool(value)?,
                "strip_urls" => config.strip_urls = parse_bool(value)?,
                "strip_diacritics" => config.strip_diacritics = parse_bool(value)?,
                "squash_repeats" => config.squash_repeats = parse_bool(value)?,
                "drop_retweets" => config.drop_retweets = parse_bool(value)?,
                "min_words" => {
                    config.min_words = value.parse().map_err(|_| {
                        Error::InvalidConfig(format!("min_words: expected integer, got {:?}", value))
                    })?
                }
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown normalization flag {:?}",
                        other
                    )))
                }
            }
        }
        Ok(())
    }
}

fn parse_codepoint_set(spec: &str) -> std::result::Result<BTreeSet<char>, String> {
    let mut set = BTreeSet::new();
    for part in spec.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let parse_one = |s: &str| -> std::result::Result<u32, String> {
            u32::from_str_radix(s.trim(), 16).map_err(|_| format!("bad code point {:?}", s))
        };
        let (lo, hi) = match part.split_once('-') {
            Some((a, b)) => (parse_one(a)?, parse_one(b)?),
            None => {
                let v = parse_one(part)?;
                (v, v)
            }
        };
        for cp in lo..=hi {
            set.insert(char::from_u32(cp).ok_or_else(|| format!("invalid code point U+{:04X}", cp))?);
        }
    }
    Ok(set)
}
