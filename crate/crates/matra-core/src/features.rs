//! The 24-dimensional segment feature vector.
//!
//! Every (source, candidate, reference) segment maps to a fixed-order
//! vector: nine similarity/fluency scores, three content-word counts,
//! and twelve n-gram frequency-quartile fractions. The order is a
//! frozen public contract — serialized feature files, trained models
//! and reports all rely on it. This module also carries z-score
//! normalization statistics and the feature-file TSV format.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::basemetrics::{bleu_sentence, clamp01, rekha1, rekha2, SimilarityResources};
use crate::corpus::{write_atomic, EvalSegment};
use crate::error::{MatraError, Result};
use crate::lexstats::{quartile_fractions, LanguageModel, NgramStatistics, StatsArtifact};
use crate::text::{
    content_words, pos_tag, stem, tokenize, PosLexicon, StemRules, StopwordList,
};
use crate::vectors::{
    bag_cosine, cosine, sentence_vector, SentenceEmbeddingProvider, Side, WordVectorStore,
};

/// Number of features per segment.
pub const FEATURE_COUNT: usize = 24;

/// Canonical column labels, in the frozen serialization order.
pub const FEATURE_LABELS: [&str; FEATURE_COUNT] = [
    "f1", "f2", "f3", "f4", "f5", "f6", "f7", "f8", "f9", "f10", "f11", "f12", "f13", "f14",
    "f15", "f16", "f17", "f18", "f19", "f20", "f21", "f22", "f23", "f24",
];

/// One segment's features, in serialization order:
///
/// | field | meaning |
/// |---|---|
/// | f1  | token bag cosine, candidate vs reference |
/// | f2  | POS-tag bag cosine |
/// | f3  | stem bag cosine |
/// | f4  | averaged-word-vector cosine |
/// | f5  | sentence-embedding cosine |
/// | f6  | trigram language-model score of the candidate |
/// | f7  | REKHA-1 composite |
/// | f8  | REKHA-2 composite |
/// | f9  | sentence BLEU |
/// | f10 | content words in the reference |
/// | f11 | content words in the candidate |
/// | f12 | content words in the source |
/// | f13..f15 | unigram/bigram/trigram fraction in frequency quartile Q1 |
/// | f16..f18 | same for Q2 |
/// | f19..f21 | same for Q3 |
/// | f22..f24 | same for Q4 |
///
/// f1–f9 live in [0,1]; f10–f12 are nonnegative integers; each
/// order's four quartile fractions sum to 1 (or to 0 for sentences
/// shorter than the order).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub lexical_cosine: f64,
    pub pos_cosine: f64,
    pub stem_cosine: f64,
    pub word2vec_cosine: f64,
    pub sent_embed_cosine: f64,
    pub lm_probability: f64,
    pub rekha1: f64,
    pub rekha2: f64,
    pub bleu: f64,
    pub content_words_reference: u32,
    pub content_words_candidate: u32,
    pub content_words_source: u32,
    pub unigram_q1: f64,
    pub bigram_q1: f64,
    pub trigram_q1: f64,
    pub unigram_q2: f64,
    pub bigram_q2: f64,
    pub trigram_q2: f64,
    pub unigram_q3: f64,
    pub bigram_q3: f64,
    pub trigram_q3: f64,
    pub unigram_q4: f64,
    pub bigram_q4: f64,
    pub trigram_q4: f64,
}

impl FeatureVector {
    /// The vector in serialization order.
    pub fn as_array(&self) -> [f64; FEATURE_COUNT] {
        [
            self.lexical_cosine,
            self.pos_cosine,
            self.stem_cosine,
            self.word2vec_cosine,
            self.sent_embed_cosine,
            self.lm_probability,
            self.rekha1,
            self.rekha2,
            self.bleu,
            f64::from(self.content_words_reference),
            f64::from(self.content_words_candidate),
            f64::from(self.content_words_source),
            self.unigram_q1,
            self.bigram_q1,
            self.trigram_q1,
            self.unigram_q2,
            self.bigram_q2,
            self.trigram_q2,
            self.unigram_q3,
            self.bigram_q3,
            self.trigram_q3,
            self.unigram_q4,
            self.bigram_q4,
            self.trigram_q4,
        ]
    }

    /// Rebuild from serialization order, validating that every value is
    /// finite and the count slots hold nonnegative integers.
    pub fn from_array(values: &[f64; FEATURE_COUNT]) -> Result<Self> {
        for (label, v) in FEATURE_LABELS.iter().zip(values) {
            if !v.is_finite() {
                return Err(MatraError::invalid(format!("{label} is not finite: {v}")));
            }
        }
        let count_at = |i: usize| -> Result<u32> {
            let v = values[i];
            if v < 0.0 || v.fract() != 0.0 || v > f64::from(u32::MAX) {
                return Err(MatraError::invalid(format!(
                    "{} must be a nonnegative integer, got {v}",
                    FEATURE_LABELS[i]
                )));
            }
            Ok(v as u32)
        };
        Ok(FeatureVector {
            lexical_cosine: values[0],
            pos_cosine: values[1],
            stem_cosine: values[2],
            word2vec_cosine: values[3],
            sent_embed_cosine: values[4],
            lm_probability: values[5],
            rekha1: values[6],
            rekha2: values[7],
            bleu: values[8],
            content_words_reference: count_at(9)?,
            content_words_candidate: count_at(10)?,
            content_words_source: count_at(11)?,
            unigram_q1: values[12],
            bigram_q1: values[13],
            trigram_q1: values[14],
            unigram_q2: values[15],
            bigram_q2: values[16],
            trigram_q2: values[17],
            unigram_q3: values[18],
            bigram_q3: values[19],
            trigram_q3: values[20],
            unigram_q4: values[21],
            bigram_q4: values[22],
            trigram_q4: values[23],
        })
    }
}

/// Which text the quartile features (f13..f24) are computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuartileSide {
    /// Candidate translation — the fluency reading (default).
    #[default]
    Candidate,
    /// Source sentence — for statistics built on source-language text.
    Source,
}

/// Everything [`extract`] needs, loaded once and shared across segments.
pub struct Resources {
    pub statistics: NgramStatistics,
    pub language_model: LanguageModel,
    pub word_vectors: WordVectorStore,
    pub embeddings: SentenceEmbeddingProvider,
    pub stopwords_source: StopwordList,
    pub stopwords_target: StopwordList,
    pub stem_rules: StemRules,
    pub pos_lexicon: PosLexicon,
    pub quartile_side: QuartileSide,
}

/// File locations for [`Resources::load`]. Only the statistics artifact
/// is mandatory; omitted resources degrade gracefully (empty stopword
/// lists, identity stemming, a single-tag POS lexicon, no word vectors,
/// embedding fallback to averaged word vectors).
#[derive(Debug, Clone, Default)]
pub struct ResourcePaths {
    pub stats_artifact: PathBuf,
    pub word_vectors: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    /// Allow averaged word vectors to stand in for missing sentence
    /// embeddings.
    pub embedding_fallback: bool,
    pub stopwords_source: Option<PathBuf>,
    pub stopwords_target: Option<PathBuf>,
    pub stem_rules: Option<PathBuf>,
    pub pos_lexicon: Option<PathBuf>,
    pub quartile_side: QuartileSide,
}

impl Resources {
    /// Load every resource named in `paths`, substituting neutral
    /// defaults for the optional ones.
    pub fn load(paths: &ResourcePaths) -> Result<Self> {
        let artifact = StatsArtifact::load(&paths.stats_artifact)?;
        let word_vectors = match &paths.word_vectors {
            Some(p) => WordVectorStore::load(p)?,
            None => WordVectorStore::new(0),
        };
        let embeddings = match &paths.embeddings {
            Some(p) => SentenceEmbeddingProvider::load(p, paths.embedding_fallback)?,
            None => SentenceEmbeddingProvider::empty(paths.embedding_fallback),
        };
        let stopwords_source = match &paths.stopwords_source {
            Some(p) => StopwordList::load(p, "source")?,
            None => StopwordList::empty("source"),
        };
        let stopwords_target = match &paths.stopwords_target {
            Some(p) => StopwordList::load(p, "target")?,
            None => StopwordList::empty("target"),
        };
        let stem_rules = match &paths.stem_rules {
            Some(p) => StemRules::load(p)?,
            None => StemRules::empty(),
        };
        let pos_lexicon = match &paths.pos_lexicon {
            Some(p) => PosLexicon::load(p)?,
            None => PosLexicon::new(HashMap::new(), "X")?,
        };
        Ok(Resources {
            statistics: artifact.statistics,
            language_model: artifact.language_model,
            word_vectors,
            embeddings,
            stopwords_source,
            stopwords_target,
            stem_rules,
            pos_lexicon,
            quartile_side: paths.quartile_side,
        })
    }

    /// The borrowed subset REKHA composites operate on.
    pub fn similarity(&self) -> SimilarityResources<'_> {
        SimilarityResources {
            stem_rules: &self.stem_rules,
            pos_lexicon: &self.pos_lexicon,
            word_vectors: &self.word_vectors,
            embeddings: &self.embeddings,
        }
    }
}

/// Compute all 24 features of one segment.
///
/// Pure given identical inputs — repeated calls return bitwise-identical
/// vectors. Fails only when a sentence embedding is missing and the
/// provider's fallback is disabled.
pub fn extract(segment: &EvalSegment, resources: &Resources) -> Result<FeatureVector> {
    let cand = tokenize(&segment.candidate_text);
    let refr = tokenize(&segment.reference_text);
    let src = tokenize(&segment.source_text);

    let cand_pos = match &segment.candidate_pos {
        Some(tags) => tags.clone(),
        None => pos_tag(&cand, &resources.pos_lexicon),
    };
    let ref_pos = match &segment.reference_pos {
        Some(tags) => tags.clone(),
        None => pos_tag(&refr, &resources.pos_lexicon),
    };
    let cand_stems: Vec<String> = cand.iter().map(|t| stem(t, &resources.stem_rules)).collect();
    let ref_stems: Vec<String> = refr.iter().map(|t| stem(t, &resources.stem_rules)).collect();

    let emb_c = resources.embeddings.embedding(
        &segment.segment_id,
        Side::Candidate,
        &cand,
        &resources.word_vectors,
    )?;
    let emb_r = resources.embeddings.embedding(
        &segment.segment_id,
        Side::Reference,
        &refr,
        &resources.word_vectors,
    )?;

    let similarity = resources.similarity();
    let quartile_tokens = match resources.quartile_side {
        QuartileSide::Candidate => &cand,
        QuartileSide::Source => &src,
    };
    let q1 = quartile_fractions(quartile_tokens, &resources.statistics, 1);
    let q2 = quartile_fractions(quartile_tokens, &resources.statistics, 2);
    let q3 = quartile_fractions(quartile_tokens, &resources.statistics, 3);

    Ok(FeatureVector {
        lexical_cosine: clamp01(bag_cosine(cand.tokens(), refr.tokens())),
        pos_cosine: clamp01(bag_cosine(&cand_pos, &ref_pos)),
        stem_cosine: clamp01(bag_cosine(&cand_stems, &ref_stems)),
        word2vec_cosine: clamp01(cosine(
            &sentence_vector(&cand, &resources.word_vectors),
            &sentence_vector(&refr, &resources.word_vectors),
        )?),
        sent_embed_cosine: clamp01(cosine(&emb_c, &emb_r)?),
        lm_probability: resources.language_model.score(&cand),
        rekha1: rekha1(segment, &similarity),
        rekha2: rekha2(segment, &similarity)?,
        bleu: bleu_sentence(&cand, &refr),
        content_words_reference: content_words(&refr, &resources.stopwords_target).len() as u32,
        content_words_candidate: content_words(&cand, &resources.stopwords_target).len() as u32,
        content_words_source: content_words(&src, &resources.stopwords_source).len() as u32,
        unigram_q1: q1[0],
        bigram_q1: q2[0],
        trigram_q1: q3[0],
        unigram_q2: q1[1],
        bigram_q2: q2[1],
        trigram_q2: q3[1],
        unigram_q3: q1[2],
        bigram_q3: q2[2],
        trigram_q3: q3[2],
        unigram_q4: q1[3],
        bigram_q4: q2[3],
        trigram_q4: q3[3],
    })
}

/// Per-component mean and standard deviation for z-scoring.
///
/// Standard deviations are population (divide by n) and never zero:
/// constant components get 1 so normalization leaves them at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureNormalization {
    pub mean: Vec<f64>,
    pub stddev: Vec<f64>,
}

/// Fit normalization statistics over feature vectors.
pub fn fit_normalization(vectors: &[FeatureVector]) -> Result<FeatureNormalization> {
    let rows: Vec<Vec<f64>> = vectors.iter().map(|v| v.as_array().to_vec()).collect();
    fit_normalization_rows(&rows)
}

/// Fit normalization statistics over raw rows of any fixed width.
pub fn fit_normalization_rows(rows: &[Vec<f64>]) -> Result<FeatureNormalization> {
    let n = rows.len();
    if n == 0 {
        return Err(MatraError::invalid("cannot fit normalization on no rows"));
    }
    let dim = rows[0].len();
    if dim == 0 {
        return Err(MatraError::invalid("cannot fit normalization on empty rows"));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(MatraError::dimension(format!(
                "row {i} has {} components, expected {dim}",
                row.len()
            )));
        }
    }
    let nf = n as f64;
    let mut mean = vec![0.0; dim];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= nf;
    }
    let mut stddev = vec![0.0; dim];
    for row in rows {
        for ((s, v), m) in stddev.iter_mut().zip(row).zip(&mean) {
            let d = v - m;
            *s += d * d;
        }
    }
    for s in &mut stddev {
        *s = (*s / nf).sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    Ok(FeatureNormalization { mean, stddev })
}

/// Z-score a row: `(v - mean) / stddev` componentwise.
pub fn apply_normalization(values: &[f64], norm: &FeatureNormalization) -> Result<Vec<f64>> {
    if values.len() != norm.mean.len() {
        return Err(MatraError::dimension(format!(
            "normalizing {} components with statistics for {}",
            values.len(),
            norm.mean.len()
        )));
    }
    Ok(values
        .iter()
        .zip(&norm.mean)
        .zip(&norm.stddev)
        .map(|((v, m), s)| (v - m) / s)
        .collect())
}

/// One row of a feature file.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub segment_id: String,
    pub system_id: String,
    pub features: FeatureVector,
    /// Human score in [0,1] when the file was extracted with human
    /// records joined.
    pub target: Option<f64>,
}

/// The exact header line of a feature file, with or without the
/// trailing target column.
pub fn feature_file_header(with_target: bool) -> String {
    let mut h = String::from("segment_id\tsystem_id");
    for label in FEATURE_LABELS {
        h.push('\t');
        h.push_str(label);
    }
    if with_target {
        h.push_str("\ttarget");
    }
    h
}

/// Write rows as TSV. All rows must agree on whether a target is
/// present; numbers are written in shortest round-trip form so reading
/// back reproduces them bit for bit.
pub fn write_feature_file(rows: &[FeatureRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(MatraError::invalid("no feature rows to write"));
    }
    let with_target = rows[0].target.is_some();
    let mut out = feature_file_header(with_target);
    out.push('\n');
    for row in rows {
        if row.target.is_some() != with_target {
            return Err(MatraError::invalid(format!(
                "segment {:?} disagrees with the rest of the file about having a target",
                row.segment_id
            )));
        }
        out.push_str(&row.segment_id);
        out.push('\t');
        out.push_str(&row.system_id);
        for v in row.features.as_array() {
            out.push('\t');
            out.push_str(&format!("{v}"));
        }
        if let Some(t) = row.target {
            out.push_str(&format!("\t{t}"));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Read a feature file written by [`write_feature_file`]. The header
/// must match exactly (determining whether targets are expected).
pub fn read_feature_file(path: &Path) -> Result<Vec<FeatureRow>> {
    let content = std::fs::read_to_string(path).map_err(|e| MatraError::io(path, e))?;
    let mut lines = content.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| MatraError::parse(path, 0, "empty file; expected a header row"))?;
    let with_target = if header.trim_end() == feature_file_header(true) {
        true
    } else if header.trim_end() == feature_file_header(false) {
        false
    } else {
        return Err(MatraError::parse(
            path,
            1,
            "header does not match the feature-file format",
        ));
    };
    let expected_cols = 2 + FEATURE_COUNT + usize::from(with_target);
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != expected_cols {
            return Err(MatraError::parse(
                path,
                line_no,
                format!("expected {expected_cols} columns, got {}", cols.len()),
            ));
        }
        let mut values = [0.0; FEATURE_COUNT];
        for (slot, raw) in values.iter_mut().zip(&cols[2..2 + FEATURE_COUNT]) {
            *slot = raw
                .parse()
                .map_err(|_| MatraError::parse(path, line_no, format!("bad value {raw:?}")))?;
        }
        let features = FeatureVector::from_array(&values)
            .map_err(|e| MatraError::parse(path, line_no, e.to_string()))?;
        let target = if with_target {
            let t: f64 = cols[expected_cols - 1].parse().map_err(|_| {
                MatraError::parse(
                    path,
                    line_no,
                    format!("bad target {:?}", cols[expected_cols - 1]),
                )
            })?;
            if !t.is_finite() {
                return Err(MatraError::parse(path, line_no, "target is not finite"));
            }
            Some(t)
        } else {
            None
        };
        rows.push(FeatureRow {
            segment_id: cols[0].to_string(),
            system_id: cols[1].to_string(),
            features,
            target,
        });
    }
    Ok(rows)
}
