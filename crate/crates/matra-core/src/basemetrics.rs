//! Native baseline metrics and composite similarity features.
//!
//! Sentence/corpus BLEU, chrF++, a lightweight METEOR (exact + stem
//! matching, no synonym stage) and basic LEPOR are implemented here from
//! their published formulas; REKHA-1 and REKHA-2 are cosine composites
//! over the lexical, stem, POS, word-vector and sentence-embedding
//! views of a segment. Everything returns a value in [0, 1]. Scores for
//! metrics not implemented natively (COMET, official METEOR) enter the
//! pipeline through score files instead — see [`crate::corpus`].

use std::collections::BTreeMap;

use unicode_normalization::UnicodeNormalization;

pub use crate::corpus::MetricScore;

use crate::corpus::EvalSegment;
use crate::error::Result;
use crate::text::{ngram_key, ngrams, pos_tag, stem, tokenize, PosLexicon, StemRules, TokenSequence};
use crate::vectors::{
    bag_cosine, cosine, sentence_vector, SentenceEmbeddingProvider, Side, WordVectorStore,
};

/// Canonical metric names used in score files and reports.
pub mod metric_names {
    pub const BLEU: &str = "BLEU";
    pub const CHRF: &str = "chrF++";
    pub const METEOR_LITE: &str = "METEOR-lite";
    pub const LEPOR: &str = "LEPOR";
    pub const REKHA1: &str = "REKHA-1";
    pub const REKHA2: &str = "REKHA-2";
    pub const MATRA1: &str = "MaTrA-1";
    pub const MATRA2: &str = "MaTrA-2";
}

/// Default highest n-gram order for BLEU.
pub const BLEU_MAX_N: usize = 4;
/// Default highest character n-gram order for chrF++.
pub const CHRF_CHAR_N: usize = 6;
/// Default highest word n-gram order for chrF++.
pub const CHRF_WORD_N: usize = 2;
/// Default recall weight for chrF++ (beta = 2 weights recall twice).
pub const CHRF_BETA: f64 = 2.0;
/// Default precision weight in the METEOR-style F-mean.
pub const METEOR_ALPHA: f64 = 0.9;
/// Default fragmentation-penalty exponent.
pub const METEOR_BETA: f64 = 3.0;
/// Default fragmentation-penalty weight.
pub const METEOR_GAMMA: f64 = 0.5;
/// Default recall weight in LEPOR's harmonic mean.
pub const LEPOR_ALPHA: f64 = 1.0;
/// Default precision weight in LEPOR's harmonic mean.
pub const LEPOR_BETA: f64 = 1.0;

pub(crate) fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Occurrence counts of the order-`n` n-grams of a sequence.
fn ngram_counts(tokens: &TokenSequence, n: usize) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for gram in ngrams(tokens, n) {
        *counts.entry(ngram_key(gram)).or_insert(0) += 1;
    }
    counts
}

/// Clipped multiset overlap: candidate counts capped by reference counts.
fn clipped_overlap(cand: &BTreeMap<String, u64>, refr: &BTreeMap<String, u64>) -> u64 {
    cand.iter()
        .map(|(k, &c)| refr.get(k).map_or(0, |&r| c.min(r)))
        .sum()
}

/// Sentence BLEU with the default maximum order 4.
pub fn bleu_sentence(candidate: &TokenSequence, reference: &TokenSequence) -> f64 {
    bleu_sentence_n(candidate, reference, BLEU_MAX_N)
}

/// Sentence BLEU: geometric mean of modified n-gram precisions times the
/// brevity penalty.
///
/// Precision at order 1 is the raw clipped ratio; orders >= 2 are
/// smoothed add-one on both numerator and denominator. Orders the
/// candidate is too short to instantiate are excluded from the mean
/// rather than scored zero. The brevity penalty is
/// `min(1, e^(1 - r/c))`. An empty candidate or zero unigram overlap
/// scores 0.
pub fn bleu_sentence_n(candidate: &TokenSequence, reference: &TokenSequence, max_n: usize) -> f64 {
    assert!(max_n >= 1, "BLEU needs at least order 1");
    let c = candidate.len();
    let r = reference.len();
    if c == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    let mut orders = 0u32;
    for n in 1..=max_n.min(c) {
        let cand_counts = ngram_counts(candidate, n);
        let ref_counts = ngram_counts(reference, n);
        let total: u64 = cand_counts.values().sum();
        let clipped = clipped_overlap(&cand_counts, &ref_counts);
        let p = if n == 1 {
            clipped as f64 / total as f64
        } else {
            (clipped + 1) as f64 / (total + 1) as f64
        };
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln();
        orders += 1;
    }
    let bp = if c < r {
        (1.0 - r as f64 / c as f64).exp()
    } else {
        1.0
    };
    bp * (log_sum / f64::from(orders)).exp()
}

/// Corpus BLEU with the default maximum order 4.
pub fn bleu_corpus(pairs: &[(TokenSequence, TokenSequence)]) -> f64 {
    bleu_corpus_n(pairs, BLEU_MAX_N)
}

/// Corpus BLEU: clipped counts and totals are pooled over all
/// (candidate, reference) pairs per order, then the sentence formula
/// (same smoothing, brevity penalty on total lengths) is applied once.
/// Orders with no pooled candidate n-grams are excluded; no candidate
/// tokens at all scores 0.
pub fn bleu_corpus_n(pairs: &[(TokenSequence, TokenSequence)], max_n: usize) -> f64 {
    assert!(max_n >= 1, "BLEU needs at least order 1");
    let c_total: usize = pairs.iter().map(|(c, _)| c.len()).sum();
    let r_total: usize = pairs.iter().map(|(_, r)| r.len()).sum();
    if c_total == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    let mut orders = 0u32;
    for n in 1..=max_n {
        let mut clipped = 0u64;
        let mut total = 0u64;
        for (cand, refr) in pairs {
            let cand_counts = ngram_counts(cand, n);
            total += cand_counts.values().sum::<u64>();
            clipped += clipped_overlap(&cand_counts, &ngram_counts(refr, n));
        }
        if total == 0 {
            continue;
        }
        let p = if n == 1 {
            clipped as f64 / total as f64
        } else {
            (clipped + 1) as f64 / (total + 1) as f64
        };
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln();
        orders += 1;
    }
    if orders == 0 {
        return 0.0;
    }
    let bp = if c_total < r_total {
        (1.0 - r_total as f64 / c_total as f64).exp()
    } else {
        1.0
    };
    bp * (log_sum / f64::from(orders)).exp()
}

/// NFC-normalized characters with all whitespace removed, the alphabet
/// for chrF character n-grams.
fn char_stream(text: &str) -> Vec<char> {
    text.nfc().filter(|c| !c.is_whitespace()).collect()
}

/// Occurrence counts of character n-grams over a whitespace-free stream.
fn char_ngram_counts(chars: &[char], n: usize) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    if chars.len() >= n {
        for w in chars.windows(n) {
            *counts.entry(w.iter().collect::<String>()).or_insert(0) += 1;
        }
    }
    counts
}

/// F_beta of one n-gram order's clipped precision and recall; 0 when
/// there is nothing to divide by.
fn f_beta_order(cand: &BTreeMap<String, u64>, refr: &BTreeMap<String, u64>, beta: f64) -> f64 {
    let overlap = clipped_overlap(cand, refr) as f64;
    let total_c: u64 = cand.values().sum();
    let total_r: u64 = refr.values().sum();
    let p = if total_c > 0 {
        overlap / total_c as f64
    } else {
        0.0
    };
    let r = if total_r > 0 {
        overlap / total_r as f64
    } else {
        0.0
    };
    let b2 = beta * beta;
    let denom = b2 * p + r;
    if denom == 0.0 {
        0.0
    } else {
        (1.0 + b2) * p * r / denom
    }
}

/// chrF++ with the default orders (character 1..6, word 1..2) and beta 2.
pub fn chrf(candidate_text: &str, reference_text: &str) -> f64 {
    chrf_params(candidate_text, reference_text, CHRF_CHAR_N, CHRF_WORD_N, CHRF_BETA)
}

/// chrF++: the mean of per-order F_beta scores over character n-gram
/// orders `1..=char_n` (computed on NFC text with whitespace removed)
/// and word n-gram orders `1..=word_n` (on the shared tokenization).
///
/// An order is skipped only when neither side has n-grams of that order;
/// if one side has them the order counts with F = 0. All orders skipped
/// (two effectively empty strings) scores 0.
pub fn chrf_params(
    candidate_text: &str,
    reference_text: &str,
    char_n: usize,
    word_n: usize,
    beta: f64,
) -> f64 {
    let cand_chars = char_stream(candidate_text);
    let ref_chars = char_stream(reference_text);
    let cand_tokens = tokenize(candidate_text);
    let ref_tokens = tokenize(reference_text);

    let mut f_sum = 0.0;
    let mut included = 0u32;
    for n in 1..=char_n {
        let cc = char_ngram_counts(&cand_chars, n);
        let rc = char_ngram_counts(&ref_chars, n);
        if cc.is_empty() && rc.is_empty() {
            continue;
        }
        f_sum += f_beta_order(&cc, &rc, beta);
        included += 1;
    }
    for n in 1..=word_n {
        let cc = ngram_counts(&cand_tokens, n);
        let rc = ngram_counts(&ref_tokens, n);
        if cc.is_empty() && rc.is_empty() {
            continue;
        }
        f_sum += f_beta_order(&cc, &rc, beta);
        included += 1;
    }
    if included == 0 {
        0.0
    } else {
        f_sum / f64::from(included)
    }
}

/// Greedy one-to-one unigram alignment: an exact-match pass, then a
/// stem-match pass over the leftovers. Both passes scan candidate tokens
/// left to right and take the leftmost free reference position.
/// Returns (candidate index, reference index) pairs in candidate order.
fn meteor_align(
    candidate: &TokenSequence,
    reference: &TokenSequence,
    stems: &StemRules,
) -> Vec<(usize, usize)> {
    let mut ref_used = vec![false; reference.len()];
    let mut matched: Vec<Option<usize>> = vec![None; candidate.len()];
    for (i, ct) in candidate.iter().enumerate() {
        for (j, rt) in reference.iter().enumerate() {
            if !ref_used[j] && ct == rt {
                matched[i] = Some(j);
                ref_used[j] = true;
                break;
            }
        }
    }
    let cand_stems: Vec<String> = candidate.iter().map(|t| stem(t, stems)).collect();
    let ref_stems: Vec<String> = reference.iter().map(|t| stem(t, stems)).collect();
    for (i, cs) in cand_stems.iter().enumerate() {
        if matched[i].is_some() {
            continue;
        }
        for (j, rs) in ref_stems.iter().enumerate() {
            if !ref_used[j] && cs == rs {
                matched[i] = Some(j);
                ref_used[j] = true;
                break;
            }
        }
    }
    matched
        .iter()
        .enumerate()
        .filter_map(|(i, m)| m.map(|j| (i, j)))
        .collect()
}

/// Number of chunks: maximal runs of matches contiguous and ascending on
/// both sides, scanned in candidate order.
fn count_chunks(pairs: &[(usize, usize)]) -> usize {
    let mut chunks = 0;
    let mut prev: Option<(usize, usize)> = None;
    for &(c, r) in pairs {
        match prev {
            Some((pc, pr)) if c == pc + 1 && r == pr + 1 => {}
            _ => chunks += 1,
        }
        prev = Some((c, r));
    }
    chunks
}

/// METEOR-lite with default weights (alpha 0.9, beta 3, gamma 0.5).
pub fn meteor_lite(candidate: &TokenSequence, reference: &TokenSequence, stems: &StemRules) -> f64 {
    meteor_lite_params(candidate, reference, stems, METEOR_ALPHA, METEOR_BETA, METEOR_GAMMA)
}

/// METEOR-lite: `F * (1 - penalty)` where
/// `F = P*R / (alpha*P + (1-alpha)*R)` over the greedy exact+stem
/// alignment and `penalty = gamma * (chunks/matches)^beta_pen`.
/// No matches scores 0. The synonym stage of full METEOR is omitted.
pub fn meteor_lite_params(
    candidate: &TokenSequence,
    reference: &TokenSequence,
    stems: &StemRules,
    alpha: f64,
    beta_pen: f64,
    gamma: f64,
) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let pairs = meteor_align(candidate, reference, stems);
    let m = pairs.len();
    if m == 0 {
        return 0.0;
    }
    let p = m as f64 / candidate.len() as f64;
    let r = m as f64 / reference.len() as f64;
    let f = (p * r) / (alpha * p + (1.0 - alpha) * r);
    let chunks = count_chunks(&pairs);
    let penalty = gamma * (chunks as f64 / m as f64).powf(beta_pen);
    clamp01(f * (1.0 - penalty))
}

/// LEPOR-basic with equal harmonic weights.
pub fn lepor_basic(candidate: &TokenSequence, reference: &TokenSequence) -> f64 {
    lepor_params(candidate, reference, LEPOR_ALPHA, LEPOR_BETA)
}

/// LEPOR-basic: length penalty x position penalty x weighted harmonic
/// mean of unigram precision and recall.
///
/// - length penalty: `e^(1 - r/c)` when the candidate is shorter,
///   `e^(1 - c/r)` when longer, 1 at equal length;
/// - position penalty: `e^(-NPD)`, NPD the mean over matched tokens of
///   `|i/len_c - j/len_r|` with 1-based positions; matches are chosen
///   greedily left to right, each candidate token taking the free
///   reference occurrence nearest in normalized position (ties to the
///   leftmost);
/// - harmonic term: `(alpha+beta) / (alpha/R + beta/P)`, alpha weighting
///   recall (the LEPOR convention).
///
/// No matched tokens (or an empty side) scores 0.
pub fn lepor_params(
    candidate: &TokenSequence,
    reference: &TokenSequence,
    alpha: f64,
    beta: f64,
) -> f64 {
    let c = candidate.len();
    let r = reference.len();
    if c == 0 || r == 0 {
        return 0.0;
    }
    let mut ref_used = vec![false; r];
    let mut distances = Vec::new();
    for (i, ct) in candidate.iter().enumerate() {
        let pos_c = (i + 1) as f64 / c as f64;
        let mut best: Option<(usize, f64)> = None;
        for (j, rt) in reference.iter().enumerate() {
            if ref_used[j] || rt != ct {
                continue;
            }
            let d = (pos_c - (j + 1) as f64 / r as f64).abs();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        if let Some((j, d)) = best {
            ref_used[j] = true;
            distances.push(d);
        }
    }
    let m = distances.len();
    if m == 0 {
        return 0.0;
    }
    let lp = if c < r {
        (1.0 - r as f64 / c as f64).exp()
    } else if c > r {
        (1.0 - c as f64 / r as f64).exp()
    } else {
        1.0
    };
    let npd = distances.iter().sum::<f64>() / m as f64;
    let precision = m as f64 / c as f64;
    let recall = m as f64 / r as f64;
    let harmonic = (alpha + beta) / (alpha / recall + beta / precision);
    lp * (-npd).exp() * harmonic
}

/// Borrowed bundle of the similarity resources REKHA composites need.
#[derive(Clone, Copy)]
pub struct SimilarityResources<'a> {
    pub stem_rules: &'a StemRules,
    pub pos_lexicon: &'a PosLexicon,
    pub word_vectors: &'a WordVectorStore,
    pub embeddings: &'a SentenceEmbeddingProvider,
}

/// POS tags for one side of a segment: the stored annotation when the
/// corpus provides one, otherwise lexicon tagging of the tokenized text.
pub fn segment_pos_tags(segment: &EvalSegment, side: Side, lexicon: &PosLexicon) -> Vec<String> {
    let (stored, text) = match side {
        Side::Candidate => (&segment.candidate_pos, &segment.candidate_text),
        Side::Reference => (&segment.reference_pos, &segment.reference_text),
    };
    match stored {
        Some(tags) => tags.clone(),
        None => pos_tag(&tokenize(text), lexicon),
    }
}

/// REKHA-1: the mean of four candidate-vs-reference cosines — surface
/// tokens, stems, POS tags, and averaged word vectors — each clamped to
/// [0, 1]. A reconstruction of the original composite, which is not
/// publicly specified.
pub fn rekha1(segment: &EvalSegment, resources: &SimilarityResources<'_>) -> f64 {
    let cand = tokenize(&segment.candidate_text);
    let refr = tokenize(&segment.reference_text);

    let lexical = bag_cosine(cand.tokens(), refr.tokens());
    let cand_stems: Vec<String> = cand.iter().map(|t| stem(t, resources.stem_rules)).collect();
    let ref_stems: Vec<String> = refr.iter().map(|t| stem(t, resources.stem_rules)).collect();
    let stem_sim = bag_cosine(&cand_stems, &ref_stems);
    let pos_sim = bag_cosine(
        &segment_pos_tags(segment, Side::Candidate, resources.pos_lexicon),
        &segment_pos_tags(segment, Side::Reference, resources.pos_lexicon),
    );
    let w2v = cosine(
        &sentence_vector(&cand, resources.word_vectors),
        &sentence_vector(&refr, resources.word_vectors),
    )
    .expect("sentence vectors from one store share its dimension");

    (clamp01(lexical) + clamp01(stem_sim) + clamp01(pos_sim) + clamp01(w2v)) / 4.0
}

/// REKHA-2: the mean of REKHA-1 and the sentence-embedding cosine
/// (clamped to [0, 1]). Fails when a segment has no stored embedding and
/// the provider's fallback is disabled.
pub fn rekha2(segment: &EvalSegment, resources: &SimilarityResources<'_>) -> Result<f64> {
    let cand = tokenize(&segment.candidate_text);
    let refr = tokenize(&segment.reference_text);
    let emb_c = resources.embeddings.embedding(
        &segment.segment_id,
        Side::Candidate,
        &cand,
        resources.word_vectors,
    )?;
    let emb_r = resources.embeddings.embedding(
        &segment.segment_id,
        Side::Reference,
        &refr,
        resources.word_vectors,
    )?;
    let emb_cos = clamp01(cosine(&emb_c, &emb_r)?);
    Ok((rekha1(segment, resources) + emb_cos) / 2.0)
}
