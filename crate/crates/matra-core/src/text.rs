//! Unicode-aware tokenization and light morphology.
//!
//! All text entering the pipeline is normalized to NFC and split into
//! tokens by one rule used everywhere: whitespace separates tokens and
//! every punctuation character becomes a token of its own. On top of the
//! token stream this module provides n-gram windows, suffix-stripping
//! stemming, stopword filtering and lexicon-based POS tagging.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use unicode_normalization::UnicodeNormalization;
use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

use crate::error::{MatraError, Result};

/// A sentence as an ordered list of tokens.
///
/// Invariants: no token is empty and no token contains whitespace. Both
/// are guaranteed by [`tokenize`] and checked by [`TokenSequence::new`],
/// which makes space-joined n-gram keys unambiguous downstream.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct TokenSequence {
    tokens: Vec<String>,
}

impl TokenSequence {
    /// Build a sequence from pre-split tokens, validating the invariants.
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        for t in &tokens {
            if t.is_empty() {
                return Err(MatraError::invalid("token sequence contains an empty token"));
            }
            if t.chars().any(char::is_whitespace) {
                return Err(MatraError::invalid(format!(
                    "token {t:?} contains whitespace"
                )));
            }
        }
        Ok(TokenSequence { tokens })
    }

    /// The empty sequence.
    pub fn empty() -> Self {
        TokenSequence { tokens: Vec::new() }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, String> {
        self.tokens.iter()
    }
}

impl std::ops::Deref for TokenSequence {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.tokens
    }
}

impl fmt::Display for TokenSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tokens.join(" "))
    }
}

/// True when `c` is punctuation (Unicode general category P*).
pub fn is_punctuation(c: char) -> bool {
    c.general_category_group() == GeneralCategoryGroup::Punctuation
}

/// True when every character of a non-empty token is punctuation.
pub fn is_punctuation_token(token: &str) -> bool {
    !token.is_empty() && token.chars().all(is_punctuation)
}

/// Normalize to NFC and split into tokens.
///
/// Whitespace separates tokens and never appears inside one; each
/// punctuation character becomes a single-character token. Everything
/// else (letters, digits, marks, symbols) accumulates into word tokens.
/// Runs of whitespace produce no empty tokens, so `tokenize("")` and
/// whitespace-only input yield the empty sequence.
pub fn tokenize(text: &str) -> TokenSequence {
    let normalized: String = text.nfc().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in normalized.chars() {
        if c.is_whitespace() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        } else if is_punctuation(c) {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            tokens.push(c.to_string());
        } else {
            current.push(c);
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    TokenSequence { tokens }
}

/// All contiguous n-grams of `tokens` as borrowed windows, in order.
///
/// Returns an empty list when the sequence is shorter than `n`.
/// Panics if `n == 0`: there is no meaningful 0-gram.
pub fn ngrams(tokens: &TokenSequence, n: usize) -> Vec<&[String]> {
    assert!(n >= 1, "n-gram order must be at least 1");
    if tokens.len() < n {
        return Vec::new();
    }
    tokens.tokens.windows(n).collect()
}

/// Join an n-gram window into a single map key.
///
/// Tokens never contain whitespace, so the space-joined form is a
/// collision-free key for any order.
pub fn ngram_key(gram: &[String]) -> String {
    gram.join(" ")
}

/// One suffix-stripping rule: drop `suffix` when at least
/// `min_stem_length` characters would remain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StemRule {
    pub suffix: String,
    pub min_stem_length: usize,
}

/// An ordered list of suffix-stripping rules.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StemRules {
    rules: Vec<StemRule>,
}

impl StemRules {
    /// Build from `(suffix, min_stem_length)` pairs, keeping order.
    pub fn new(rules: Vec<(String, usize)>) -> Result<Self> {
        let mut out = Vec::with_capacity(rules.len());
        for (suffix, min_stem_length) in rules {
            if suffix.is_empty() {
                return Err(MatraError::invalid("stem rule has an empty suffix"));
            }
            if min_stem_length == 0 {
                return Err(MatraError::invalid(format!(
                    "stem rule {suffix:?} has min_stem_length 0; must be at least 1"
                )));
            }
            out.push(StemRule {
                suffix,
                min_stem_length,
            });
        }
        Ok(StemRules { rules: out })
    }

    /// No rules: stemming is the identity.
    pub fn empty() -> Self {
        StemRules::default()
    }

    /// Load rules from a TSV file of `suffix<TAB>min_stem_length` lines.
    /// Blank lines and lines starting with `#` are skipped; rule order is
    /// file order.
    pub fn load(path: &Path) -> Result<Self> {
        let content =
            std::fs::read_to_string(path).map_err(|e| MatraError::io(path, e))?;
        let mut pairs = Vec::new();
        for (idx, line) in content.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut parts = trimmed.splitn(2, '\t');
            let suffix = parts.next().unwrap_or_default().trim();
            let min = parts.next().ok_or_else(|| {
                MatraError::parse(path, line_no, "expected suffix<TAB>min_stem_length")
            })?;
            let min: usize = min.trim().parse().map_err(|_| {
                MatraError::parse(path, line_no, format!("bad min_stem_length {min:?}"))
            })?;
            pairs.push((suffix.to_string(), min));
        }
        StemRules::new(pairs).map_err(|e| match e {
            MatraError::InvalidArgument { message } => MatraError::parse(path, 0, message),
            other => other,
        })
    }

    pub fn rules(&self) -> &[StemRule] {
        &self.rules
    }
}

/// Strip the first matching suffix whose remaining stem is long enough.
///
/// Rules are tried in list order; a rule whose suffix matches but whose
/// stem would be too short is skipped and later rules still apply. At
/// most one rule fires. A token equal to its suffix is never reduced to
/// the empty string because `min_stem_length >= 1`. Lengths are counted
/// in characters, not bytes, so multi-byte scripts behave correctly.
pub fn stem(token: &str, rules: &StemRules) -> String {
    for rule in &rules.rules {
        if let Some(stripped) = token.strip_suffix(rule.suffix.as_str()) {
            if stripped.chars().count() >= rule.min_stem_length {
                return stripped.to_string();
            }
        }
    }
    token.to_string()
}

/// A case-insensitive stopword list tagged with its language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopwordList {
    words: HashSet<String>,
    language: String,
}

impl StopwordList {
    /// Build from an iterator of words; entries are lowercased on insert
    /// and empty entries are rejected.
    pub fn new(words: impl IntoIterator<Item = String>, language: impl Into<String>) -> Result<Self> {
        let mut set = HashSet::new();
        for w in words {
            if w.trim().is_empty() {
                return Err(MatraError::invalid("stopword list contains an empty entry"));
            }
            set.insert(w.trim().to_lowercase());
        }
        Ok(StopwordList {
            words: set,
            language: language.into(),
        })
    }

    /// An empty list (nothing is a stopword).
    pub fn empty(language: impl Into<String>) -> Self {
        StopwordList {
            words: HashSet::new(),
            language: language.into(),
        }
    }

    /// Load one word per line; blank lines and `#` comments are skipped.
    pub fn load(path: &Path, language: impl Into<String>) -> Result<Self> {
        let content =
            std::fs::read_to_string(path).map_err(|e| MatraError::io(path, e))?;
        let words = content
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_string);
        StopwordList::new(words, language)
    }

    /// Membership test; the probe is lowercased before lookup.
    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(&token.to_lowercase())
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Keep tokens that are neither stopwords nor pure punctuation.
///
/// Order and duplicates are preserved; the result is a (possibly empty)
/// subsequence of the input.
pub fn content_words(tokens: &TokenSequence, stopwords: &StopwordList) -> TokenSequence {
    let kept = tokens
        .iter()
        .filter(|t| !is_punctuation_token(t) && !stopwords.contains(t))
        .cloned()
        .collect();
    TokenSequence { tokens: kept }
}

/// A word -> POS-tag lookup table with a default tag for unknown words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosLexicon {
    entries: HashMap<String, String>,
    default_tag: String,
}

impl PosLexicon {
    pub fn new(entries: HashMap<String, String>, default_tag: impl Into<String>) -> Result<Self> {
        let default_tag = default_tag.into();
        if default_tag.is_empty() {
            return Err(MatraError::invalid("POS lexicon default tag must be non-empty"));
        }
        Ok(PosLexicon {
            entries,
            default_tag,
        })
    }

    /// Load a TSV of `token<TAB>tag` lines. The reserved token `DEFAULT`
    /// sets the tag for out-of-lexicon words and must appear exactly once.
    /// Blank lines and `#` comments are skipped.
    pub fn load(path: &Path) -> Result<Self> {
        let content =
            std::fs::read_to_string(path).map_err(|e| MatraError::io(path, e))?;
        let mut entries = HashMap::new();
        let mut default_tag: Option<String> = None;
        for (idx, line) in content.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut parts = trimmed.splitn(2, '\t');
            let token = parts.next().unwrap_or_default().trim();
            let tag = parts
                .next()
                .ok_or_else(|| MatraError::parse(path, line_no, "expected token<TAB>tag"))?
                .trim();
            if token.is_empty() || tag.is_empty() {
                return Err(MatraError::parse(path, line_no, "token and tag must be non-empty"));
            }
            if token == "DEFAULT" {
                if default_tag.is_some() {
                    return Err(MatraError::parse(path, line_no, "duplicate DEFAULT entry"));
                }
                default_tag = Some(tag.to_string());
            } else {
                entries.insert(token.to_string(), tag.to_string());
            }
        }
        let default_tag = default_tag.ok_or_else(|| {
            MatraError::parse(path, 0, "missing DEFAULT entry for out-of-lexicon words")
        })?;
        PosLexicon::new(entries, default_tag)
    }

    pub fn tag_of(&self, token: &str) -> &str {
        self.entries
            .get(token)
            .map(String::as_str)
            .unwrap_or(&self.default_tag)
    }

    pub fn default_tag(&self) -> &str {
        &self.default_tag
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Tag every token via lexicon lookup; unknown words get the default tag.
/// The output has exactly one tag per input token.
pub fn pos_tag(tokens: &TokenSequence, lexicon: &PosLexicon) -> Vec<String> {
    tokens.iter().map(|t| lexicon.tag_of(t).to_string()).collect()
}
