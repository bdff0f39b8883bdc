//! Corpus-level lexical statistics.
//!
//! From a tokenized training corpus this module builds two artifacts
//! that later feed feature extraction: frequency tables for n-grams up
//! to order 3 with quartile cutoffs over the distinct-type frequency
//! distribution, and an add-k smoothed trigram language model. Both
//! serialize together into one versioned JSON artifact whose counts
//! round-trip bit for bit.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::write_atomic;
use crate::error::{MatraError, Result};
use crate::text::{ngram_key, ngrams, TokenSequence};

/// Highest n-gram order tracked by [`NgramStatistics`] and the feature
/// set built on it.
pub const MAX_ORDER: usize = 3;

/// Frequency quartile of an n-gram relative to a training corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quartile {
    /// Rarest quarter; also the home of n-grams never seen in training.
    Q1,
    Q2,
    Q3,
    /// Most frequent quarter.
    Q4,
}

impl Quartile {
    /// Zero-based index, Q1 -> 0 .. Q4 -> 3.
    pub fn index(self) -> usize {
        match self {
            Quartile::Q1 => 0,
            Quartile::Q2 => 1,
            Quartile::Q3 => 2,
            Quartile::Q4 => 3,
        }
    }

    pub const ALL: [Quartile; 4] = [Quartile::Q1, Quartile::Q2, Quartile::Q3, Quartile::Q4];
}

/// Counts and quartile cutoffs for one n-gram order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct OrderStatistics {
    /// Occurrence count per space-joined n-gram.
    counts: BTreeMap<String, u64>,
    /// 25th / 50th / 75th percentile of the distinct-type frequency
    /// distribution, nondecreasing.
    cutoffs: (u64, u64, u64),
}

/// Nearest-rank percentile over an ascending-sorted non-empty list:
/// the element at rank `max(1, floor(p * N + 0.5))`, clamped to `N`.
fn nearest_rank(sorted: &[u64], p: f64) -> u64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    let rank = ((p * n as f64 + 0.5).floor() as usize).clamp(1, n);
    sorted[rank - 1]
}

impl OrderStatistics {
    fn build(counts: BTreeMap<String, u64>) -> OrderStatistics {
        let mut freqs: Vec<u64> = counts.values().copied().collect();
        freqs.sort_unstable();
        let cutoffs = if freqs.is_empty() {
            (0, 0, 0)
        } else {
            (
                nearest_rank(&freqs, 0.25),
                nearest_rank(&freqs, 0.50),
                nearest_rank(&freqs, 0.75),
            )
        };
        OrderStatistics { counts, cutoffs }
    }
}

/// N-gram frequency tables (orders 1..=3) over a training corpus,
/// with per-order quartile cutoffs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramStatistics {
    unigrams: OrderStatistics,
    bigrams: OrderStatistics,
    trigrams: OrderStatistics,
    total_tokens: u64,
}

impl NgramStatistics {
    fn order_stats(&self, order: usize) -> &OrderStatistics {
        match order {
            1 => &self.unigrams,
            2 => &self.bigrams,
            3 => &self.trigrams,
            _ => panic!("n-gram order {order} outside 1..={MAX_ORDER}"),
        }
    }

    /// Training-corpus occurrence count of a space-joined n-gram
    /// (0 when unseen).
    pub fn frequency(&self, order: usize, key: &str) -> u64 {
        self.order_stats(order).counts.get(key).copied().unwrap_or(0)
    }

    /// The (25th, 50th, 75th) percentile cutoffs for an order.
    pub fn cutoffs(&self, order: usize) -> (u64, u64, u64) {
        self.order_stats(order).cutoffs
    }

    /// Number of distinct n-gram types at an order.
    pub fn distinct(&self, order: usize) -> usize {
        self.order_stats(order).counts.len()
    }

    /// Total running tokens in the training corpus.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Quartile of a frequency value at an order. Unseen n-grams
    /// (frequency 0) land in Q1 with the rarest types.
    pub fn quartile_of(&self, order: usize, frequency: u64) -> Quartile {
        let (c1, c2, c3) = self.cutoffs(order);
        if frequency <= c1 {
            Quartile::Q1
        } else if frequency <= c2 {
            Quartile::Q2
        } else if frequency <= c3 {
            Quartile::Q3
        } else {
            Quartile::Q4
        }
    }
}

/// Count n-grams and derive quartile cutoffs from a tokenized corpus.
///
/// The corpus must contain at least one token overall; counts are summed
/// across sentences (n-grams never cross sentence boundaries).
pub fn build_statistics(corpus: &[TokenSequence]) -> Result<NgramStatistics> {
    if corpus.is_empty() {
        return Err(MatraError::invalid("statistics corpus is empty"));
    }
    let total_tokens: u64 = corpus.iter().map(|s| s.len() as u64).sum();
    if total_tokens == 0 {
        return Err(MatraError::invalid("statistics corpus has no tokens"));
    }
    let mut tables: [BTreeMap<String, u64>; MAX_ORDER] = Default::default();
    for sentence in corpus {
        for (order, table) in (1..=MAX_ORDER).zip(tables.iter_mut()) {
            for gram in ngrams(sentence, order) {
                *table.entry(ngram_key(gram)).or_insert(0) += 1;
            }
        }
    }
    let [uni, bi, tri] = tables;
    Ok(NgramStatistics {
        unigrams: OrderStatistics::build(uni),
        bigrams: OrderStatistics::build(bi),
        trigrams: OrderStatistics::build(tri),
        total_tokens,
    })
}

/// Fraction of a sentence's n-gram occurrences falling in each quartile,
/// indexed Q1..Q4.
///
/// Occurrences, not types: a repeated n-gram counts every time. The four
/// fractions sum to 1 when the sentence has at least `order` tokens and
/// are all zero otherwise.
pub fn quartile_fractions(
    tokens: &TokenSequence,
    statistics: &NgramStatistics,
    order: usize,
) -> [f64; 4] {
    let grams = ngrams(tokens, order);
    if grams.is_empty() {
        return [0.0; 4];
    }
    let mut counts = [0usize; 4];
    for gram in &grams {
        let freq = statistics.frequency(order, &ngram_key(gram));
        counts[statistics.quartile_of(order, freq).index()] += 1;
    }
    let total = grams.len() as f64;
    counts.map(|c| c as f64 / total)
}

/// Sentence-start padding symbol.
pub const START_SYMBOL: &str = "<s>";
/// Sentence-end symbol; the model predicts it after the last word.
pub const END_SYMBOL: &str = "</s>";
/// Stand-in for words outside the training vocabulary.
pub const UNK_SYMBOL: &str = "<unk>";

/// Add-k smoothed trigram language model.
///
/// Sentences are padded with two start symbols and one end symbol; words
/// outside the training vocabulary map to [`UNK_SYMBOL`] before lookup.
/// The prediction vocabulary is the training vocabulary plus the end and
/// unknown symbols (the start symbol is never predicted), and every
/// conditional distribution sums to one under the smoothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageModel {
    k: f64,
    vocabulary: BTreeSet<String>,
    /// Space-joined `h2 h1 w` -> count.
    trigram_counts: BTreeMap<String, u64>,
    /// Space-joined `h2 h1` -> count (sum of continuations).
    context_counts: BTreeMap<String, u64>,
}

/// Train a trigram model with additive smoothing constant `k` (> 0).
pub fn lm_train(corpus: &[TokenSequence], k: f64) -> Result<LanguageModel> {
    if !(k.is_finite() && k > 0.0) {
        return Err(MatraError::invalid(format!(
            "smoothing constant must be finite and positive, got {k}"
        )));
    }
    if corpus.is_empty() {
        return Err(MatraError::invalid("language-model corpus is empty"));
    }
    let mut vocabulary = BTreeSet::new();
    let mut trigram_counts = BTreeMap::new();
    let mut context_counts = BTreeMap::new();
    for sentence in corpus {
        for tok in sentence.iter() {
            vocabulary.insert(tok.clone());
        }
        let mut padded: Vec<&str> = vec![START_SYMBOL, START_SYMBOL];
        padded.extend(sentence.iter().map(String::as_str));
        padded.push(END_SYMBOL);
        for w in padded.windows(3) {
            *trigram_counts
                .entry(format!("{} {} {}", w[0], w[1], w[2]))
                .or_insert(0) += 1;
            *context_counts
                .entry(format!("{} {}", w[0], w[1]))
                .or_insert(0) += 1;
        }
    }
    Ok(LanguageModel {
        k,
        vocabulary,
        trigram_counts,
        context_counts,
    })
}

impl LanguageModel {
    pub fn order(&self) -> usize {
        3
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Training vocabulary size (boundary symbols excluded).
    pub fn vocabulary_size(&self) -> usize {
        self.vocabulary.len()
    }

    /// Size of the set of predictable symbols: the vocabulary plus the
    /// end and unknown symbols. This is the `V` in the smoothing
    /// denominator `count(context) + k * V`.
    pub fn prediction_vocab_size(&self) -> usize {
        self.vocabulary.len() + 2
    }

    /// All predictable symbols, for exhaustively summing a conditional
    /// distribution.
    pub fn prediction_symbols(&self) -> Vec<&str> {
        let mut syms: Vec<&str> = self.vocabulary.iter().map(String::as_str).collect();
        syms.push(END_SYMBOL);
        syms.push(UNK_SYMBOL);
        syms
    }

    /// Map a word to itself if known (or a boundary symbol), else to the
    /// unknown symbol.
    fn normalize<'a>(&self, word: &'a str) -> &'a str {
        if word == START_SYMBOL || word == END_SYMBOL || word == UNK_SYMBOL {
            word
        } else if self.vocabulary.contains(word) {
            word
        } else {
            UNK_SYMBOL
        }
    }

    /// Smoothed probability of `word` following the context
    /// `(history2, history1)`. All three are vocabulary-normalized first.
    pub fn conditional(&self, history2: &str, history1: &str, word: &str) -> f64 {
        let h2 = self.normalize(history2);
        let h1 = self.normalize(history1);
        let w = self.normalize(word);
        let tri = self
            .trigram_counts
            .get(&format!("{h2} {h1} {w}"))
            .copied()
            .unwrap_or(0) as f64;
        let ctx = self
            .context_counts
            .get(&format!("{h2} {h1}"))
            .copied()
            .unwrap_or(0) as f64;
        (tri + self.k) / (ctx + self.k * self.prediction_vocab_size() as f64)
    }

    /// Geometric mean of the per-position conditionals over the padded
    /// sentence, end symbol included. Always in (0, 1); the empty
    /// sentence scores the single prediction of the end symbol.
    pub fn score(&self, tokens: &TokenSequence) -> f64 {
        let mut padded: Vec<&str> = vec![START_SYMBOL, START_SYMBOL];
        padded.extend(tokens.iter().map(String::as_str));
        padded.push(END_SYMBOL);
        let predictions = (padded.len() - 2) as f64;
        let mut log_sum = 0.0;
        for w in padded.windows(3) {
            log_sum += self.conditional(w[0], w[1], w[2]).ln();
        }
        (log_sum / predictions).exp()
    }
}

/// Current artifact schema version.
pub const STATS_ARTIFACT_VERSION: u32 = 1;

/// The serialized bundle produced by `matra stats`: n-gram statistics
/// and the language model trained on the same corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsArtifact {
    pub version: u32,
    pub statistics: NgramStatistics,
    pub language_model: LanguageModel,
}

impl StatsArtifact {
    pub fn new(statistics: NgramStatistics, language_model: LanguageModel) -> Self {
        StatsArtifact {
            version: STATS_ARTIFACT_VERSION,
            statistics,
            language_model,
        }
    }

    /// Write as pretty JSON (atomically).
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut json = serde_json::to_string_pretty(self)
            .map_err(|e| MatraError::parse(path, 0, e.to_string()))?;
        json.push('\n');
        write_atomic(path, json.as_bytes())
    }

    /// Read back an artifact, rejecting unknown schema versions.
    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| MatraError::io(path, e))?;
        let artifact: StatsArtifact = serde_json::from_str(&content)
            .map_err(|e| MatraError::parse(path, 0, e.to_string()))?;
        if artifact.version != STATS_ARTIFACT_VERSION {
            return Err(MatraError::ArtifactFormat {
                path: path.into(),
                message: format!(
                    "unsupported statistics artifact version {} (expected {STATS_ARTIFACT_VERSION})",
                    artifact.version
                ),
            });
        }
        Ok(artifact)
    }
}
