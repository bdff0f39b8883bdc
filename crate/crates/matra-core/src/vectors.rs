//! Vector similarity utilities.
//!
//! Three vector spaces meet here: sparse bag-of-items count vectors
//! (over tokens, stems or POS tags), dense distributional word vectors
//! loaded from a text file, and per-segment sentence embeddings supplied
//! by a sidecar file, with averaged word vectors as an optional
//! fallback. All of them are compared with the same cosine.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{MatraError, Result};
use crate::text::TokenSequence;

/// Cosine similarity of two equal-length dense vectors.
///
/// Returns 0 when either vector has zero norm (the conventional value
/// for "no information"). The denominator is computed as
/// `sqrt(|u|^2 * |v|^2)` in one square root, which keeps
/// `cosine(x, x)` at exactly 1 for count vectors.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(MatraError::dimension(format!(
            "cosine of vectors with lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (nu * nv).sqrt())
}

/// Count vector of a list of items (tokens, stems, tags, ...).
pub fn bag_vector<S: AsRef<str>>(items: &[S]) -> BTreeMap<String, f64> {
    let mut bag = BTreeMap::new();
    for item in items {
        *bag.entry(item.as_ref().to_string()).or_insert(0.0) += 1.0;
    }
    bag
}

/// Cosine similarity of the count vectors of two item lists, over the
/// implicit union vocabulary.
///
/// Identical non-empty lists score exactly 1.0; if either list is empty
/// the similarity is 0.
pub fn bag_cosine<A: AsRef<str>, B: AsRef<str>>(a: &[A], b: &[B]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let bag_a = bag_vector(a);
    let bag_b = bag_vector(b);
    let mut dot = 0.0;
    for (key, ca) in &bag_a {
        if let Some(cb) = bag_b.get(key) {
            dot += ca * cb;
        }
    }
    let na: f64 = bag_a.values().map(|c| c * c).sum();
    let nb: f64 = bag_b.values().map(|c| c * c).sum();
    dot / (na * nb).sqrt()
}

/// Dense word vectors keyed by surface form, all of one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectorStore {
    dimension: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl WordVectorStore {
    /// An empty store of the given dimension.
    pub fn new(dimension: usize) -> Self {
        WordVectorStore {
            dimension,
            vectors: HashMap::new(),
        }
    }

    /// Add or replace a word's vector; its length must match the store.
    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dimension {
            return Err(MatraError::dimension(format!(
                "word vector of length {} in a store of dimension {}",
                vector.len(),
                self.dimension
            )));
        }
        self.vectors.insert(word.into(), vector);
        Ok(())
    }

    /// Load the plain-text format: a `count dimension` header line, then
    /// one `word v1 v2 ... vd` line per word (space-separated). The
    /// declared count must match the number of data lines.
    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| MatraError::io(path, e))?;
        let mut lines = content.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| MatraError::parse(path, 0, "empty file; expected `count dimension`"))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(MatraError::parse(
                path,
                1,
                "header must be `count dimension`",
            ));
        }
        let declared: usize = parts[0]
            .parse()
            .map_err(|_| MatraError::parse(path, 1, format!("bad count {:?}", parts[0])))?;
        let dimension: usize = parts[1]
            .parse()
            .map_err(|_| MatraError::parse(path, 1, format!("bad dimension {:?}", parts[1])))?;
        if dimension == 0 {
            return Err(MatraError::parse(path, 1, "dimension must be at least 1"));
        }
        let mut store = WordVectorStore::new(dimension);
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().unwrap_or_default();
            let values: Vec<f64> = fields
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| MatraError::parse(path, line_no, format!("bad value {f:?}")))
                })
                .collect::<Result<_>>()?;
            if values.len() != dimension {
                return Err(MatraError::parse(
                    path,
                    line_no,
                    format!(
                        "word {word:?} has {} values, expected {dimension}",
                        values.len()
                    ),
                ));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(MatraError::parse(
                    path,
                    line_no,
                    format!("word {word:?} has a non-finite value"),
                ));
            }
            store.vectors.insert(word.to_string(), values);
        }
        if store.vectors.len() != declared {
            return Err(MatraError::parse(
                path,
                1,
                format!(
                    "header declares {declared} words but the file holds {}",
                    store.vectors.len()
                ),
            ));
        }
        Ok(store)
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vectors.contains_key(word)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Mean of the vectors of in-vocabulary tokens; the zero vector when no
/// token is covered (or the sequence is empty).
pub fn sentence_vector(tokens: &TokenSequence, store: &WordVectorStore) -> Vec<f64> {
    let mut sum = vec![0.0; store.dimension()];
    let mut covered = 0usize;
    for tok in tokens.iter() {
        if let Some(v) = store.get(tok) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            covered += 1;
        }
    }
    if covered > 0 {
        let n = covered as f64;
        for s in &mut sum {
            *s /= n;
        }
    }
    sum
}

/// Which side of a segment an embedding belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Candidate,
    Reference,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Candidate => write!(f, "candidate"),
            Side::Reference => write!(f, "reference"),
        }
    }
}

#[derive(Deserialize)]
struct RawEmbeddingRow {
    segment_id: String,
    side: Side,
    vector: Vec<f64>,
}

/// Per-segment sentence embeddings from a sidecar file, with an optional
/// fallback to averaged word vectors for segments the file misses.
///
/// All stored vectors share one dimension (enforced on load and insert).
/// With fallback disabled, a missing embedding is an error rather than a
/// silently degraded similarity.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceEmbeddingProvider {
    dimension: Option<usize>,
    vectors: HashMap<(String, Side), Vec<f64>>,
    fallback_enabled: bool,
}

impl SentenceEmbeddingProvider {
    /// A provider with no stored embeddings; useful when running from
    /// word vectors alone (fallback enabled) or in strict tests
    /// (fallback disabled).
    pub fn empty(fallback_enabled: bool) -> Self {
        SentenceEmbeddingProvider {
            dimension: None,
            vectors: HashMap::new(),
            fallback_enabled,
        }
    }

    /// Load a JSONL sidecar of
    /// `{"segment_id": ..., "side": "candidate"|"reference", "vector": [...]}`
    /// rows. Duplicate (segment, side) pairs and mixed dimensions are
    /// errors.
    pub fn load(path: &Path, fallback_enabled: bool) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| MatraError::io(path, e))?;
        let mut provider = SentenceEmbeddingProvider::empty(fallback_enabled);
        for (idx, line) in content.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let row: RawEmbeddingRow = serde_json::from_str(line)
                .map_err(|e| MatraError::parse(path, line_no, e.to_string()))?;
            if row.vector.is_empty() {
                return Err(MatraError::parse(path, line_no, "empty embedding vector"));
            }
            if row.vector.iter().any(|v| !v.is_finite()) {
                return Err(MatraError::parse(path, line_no, "non-finite embedding value"));
            }
            match provider.dimension {
                None => provider.dimension = Some(row.vector.len()),
                Some(d) if d != row.vector.len() => {
                    return Err(MatraError::parse(
                        path,
                        line_no,
                        format!("embedding of length {} after length {d}", row.vector.len()),
                    ));
                }
                Some(_) => {}
            }
            let key = (row.segment_id.clone(), row.side);
            if provider.vectors.contains_key(&key) {
                return Err(MatraError::DuplicateId {
                    path: path.into(),
                    line: line_no,
                    id: format!("{} ({})", row.segment_id, row.side),
                });
            }
            provider.vectors.insert(key, row.vector);
        }
        Ok(provider)
    }

    /// Add one embedding programmatically (same checks as `load`).
    pub fn insert(&mut self, segment_id: impl Into<String>, side: Side, vector: Vec<f64>) -> Result<()> {
        if vector.is_empty() {
            return Err(MatraError::invalid("empty embedding vector"));
        }
        match self.dimension {
            None => self.dimension = Some(vector.len()),
            Some(d) if d != vector.len() => {
                return Err(MatraError::dimension(format!(
                    "embedding of length {} in a provider of dimension {d}",
                    vector.len()
                )));
            }
            Some(_) => {}
        }
        self.vectors.insert((segment_id.into(), side), vector);
        Ok(())
    }

    pub fn fallback_enabled(&self) -> bool {
        self.fallback_enabled
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// The embedding for one side of a segment: the stored vector when
    /// present, otherwise (with fallback enabled) the averaged word
    /// vectors of `tokens`, otherwise an error naming the segment.
    pub fn embedding(
        &self,
        segment_id: &str,
        side: Side,
        tokens: &TokenSequence,
        store: &WordVectorStore,
    ) -> Result<Vec<f64>> {
        if let Some(v) = self.vectors.get(&(segment_id.to_string(), side)) {
            return Ok(v.clone());
        }
        if self.fallback_enabled {
            return Ok(sentence_vector(tokens, store));
        }
        Err(MatraError::MissingEmbedding {
            segment_id: segment_id.to_string(),
            side: side.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;
    use proptest::prelude::*;

    #[test]
    fn cosine_of_identical_vectors_is_one() {
        let v = vec![0.5, -2.0, 3.25];
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_of_orthogonal_vectors_is_zero() {
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn cosine_of_opposite_vectors_is_minus_one() {
        let u = [1.0, 2.0];
        let v = [-1.0, -2.0];
        assert!((cosine(&u, &v).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_zero_norm_yields_zero() {
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(cosine(&[1.0], &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn cosine_rejects_mismatched_lengths() {
        assert!(cosine(&[1.0], &[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn cosine_is_symmetric_and_bounded(
            (u, v) in (1usize..8).prop_flat_map(|n| (
                proptest::collection::vec(-100.0f64..100.0, n),
                proptest::collection::vec(-100.0f64..100.0, n),
            )),
        ) {
            let ab = cosine(&u, &v).unwrap();
            let ba = cosine(&v, &u).unwrap();
            prop_assert_eq!(ab.to_bits(), ba.to_bits());
            prop_assert!(ab.abs() <= 1.0 + 1e-12);
        }

        #[test]
        fn cosine_is_scale_invariant(
            v in proptest::collection::vec(-10.0f64..10.0, 2..6),
            scale in 0.01f64..50.0,
        ) {
            prop_assume!(v.iter().any(|x| x.abs() > 1e-6));
            let scaled: Vec<f64> = v.iter().map(|x| x * scale).collect();
            let c = cosine(&v, &scaled).unwrap();
            prop_assert!((c - 1.0).abs() < 1e-12, "cosine {}", c);
        }
    }

    #[test]
    fn bag_cosine_of_identical_sequences_is_exactly_one() {
        let items = ["the", "cat", "sat", "the"];
        assert_eq!(bag_cosine(&items, &items), 1.0);
        let single = ["x"];
        assert_eq!(bag_cosine(&single, &single), 1.0);
    }

    #[test]
    fn bag_cosine_is_order_insensitive() {
        let a = ["b", "a", "c"];
        let b = ["c", "b", "a"];
        assert_eq!(bag_cosine(&a, &b), 1.0);
    }

    #[test]
    fn bag_cosine_matches_hand_computation() {
        // a = {x:2, y:1}, b = {x:1, z:1}. dot = 2, |a|^2 = 5, |b|^2 = 2,
        // cosine = 2/sqrt(10).
        let a = ["x", "x", "y"];
        let b = ["x", "z"];
        let expected = 2.0 / 10.0f64.sqrt();
        assert!((bag_cosine(&a, &b) - expected).abs() < 1e-15);
    }

    #[test]
    fn bag_cosine_of_disjoint_sequences_is_zero() {
        assert_eq!(bag_cosine(&["a", "b"], &["c", "d"]), 0.0);
    }

    #[test]
    fn bag_cosine_with_empty_side_is_zero() {
        let empty: [&str; 0] = [];
        assert_eq!(bag_cosine(&empty, &["a"]), 0.0);
        assert_eq!(bag_cosine(&["a"], &empty), 0.0);
        assert_eq!(bag_cosine(&empty, &empty), 0.0);
    }

    proptest! {
        #[test]
        fn bag_cosine_stays_in_unit_interval(
            a in proptest::collection::vec("[a-e]", 0..10),
            b in proptest::collection::vec("[a-e]", 0..10),
        ) {
            let c = bag_cosine(&a, &b);
            prop_assert!((0.0..=1.0).contains(&c), "cosine {}", c);
        }

        #[test]
        fn bag_cosine_identity_always_exact(
            a in proptest::collection::vec("[a-e]", 1..12),
        ) {
            prop_assert_eq!(bag_cosine(&a, &a), 1.0);
        }
    }

    fn store_ab() -> WordVectorStore {
        let mut s = WordVectorStore::new(2);
        s.insert("a", vec![1.0, 0.0]).unwrap();
        s.insert("b", vec![0.0, 1.0]).unwrap();
        s
    }

    #[test]
    fn sentence_vector_averages_covered_tokens() {
        let s = store_ab();
        let v = sentence_vector(&tokenize("a b"), &s);
        assert_eq!(v, vec![0.5, 0.5]);
        // Out-of-vocabulary tokens are skipped, not zero-averaged.
        let v = sentence_vector(&tokenize("a zzz"), &s);
        assert_eq!(v, vec![1.0, 0.0]);
    }

    #[test]
    fn sentence_vector_of_repeated_token_is_that_tokens_vector() {
        let mut s = WordVectorStore::new(3);
        s.insert("w", vec![0.25, -1.5, 2.0]).unwrap();
        for text in ["w", "w w", "w w w", "w w w w w"] {
            let v = sentence_vector(&tokenize(text), &s);
            assert_eq!(v, vec![0.25, -1.5, 2.0], "text {text:?}");
        }
    }

    #[test]
    fn sentence_vector_uncovered_is_zero() {
        let s = store_ab();
        assert_eq!(sentence_vector(&tokenize("x y z"), &s), vec![0.0, 0.0]);
        assert_eq!(sentence_vector(&TokenSequence::empty(), &s), vec![0.0, 0.0]);
    }

    #[test]
    fn word_vector_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("vecs.txt");
        std::fs::write(&p, "2 3\nhello 0.1 0.2 0.3\nworld -1 0 2.5\n").unwrap();
        let s = WordVectorStore::load(&p).unwrap();
        assert_eq!(s.dimension(), 3);
        assert_eq!(s.len(), 2);
        assert_eq!(s.get("hello"), Some(&[0.1, 0.2, 0.3][..]));
        assert_eq!(s.get("world"), Some(&[-1.0, 0.0, 2.5][..]));
        assert_eq!(s.get("missing"), None);
    }

    #[test]
    fn word_vector_file_rejects_inconsistencies() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("vecs.txt");
        // Wrong value count on a row.
        std::fs::write(&p, "1 3\nhello 0.1 0.2\n").unwrap();
        assert!(WordVectorStore::load(&p).is_err());
        // Header/count mismatch.
        std::fs::write(&p, "2 2\nhello 0.1 0.2\n").unwrap();
        assert!(WordVectorStore::load(&p).is_err());
        // Unparseable value.
        std::fs::write(&p, "1 2\nhello 0.1 abc\n").unwrap();
        assert!(WordVectorStore::load(&p).is_err());
        // Missing header.
        std::fs::write(&p, "").unwrap();
        assert!(WordVectorStore::load(&p).is_err());
    }

    #[test]
    fn embedding_provider_prefers_stored_vectors() {
        let mut p = SentenceEmbeddingProvider::empty(true);
        p.insert("s1", Side::Candidate, vec![9.0, 9.0]).unwrap();
        let store = store_ab();
        let v = p.embedding("s1", Side::Candidate, &tokenize("a"), &store).unwrap();
        assert_eq!(v, vec![9.0, 9.0]);
    }

    #[test]
    fn embedding_provider_falls_back_to_word_vectors() {
        let p = SentenceEmbeddingProvider::empty(true);
        let store = store_ab();
        let v = p.embedding("s1", Side::Reference, &tokenize("a b"), &store).unwrap();
        assert_eq!(v, vec![0.5, 0.5]);
    }

    #[test]
    fn embedding_provider_without_fallback_errors_on_missing() {
        let p = SentenceEmbeddingProvider::empty(false);
        let store = store_ab();
        let err = p
            .embedding("seg-9", Side::Candidate, &tokenize("a"), &store)
            .unwrap_err();
        match err {
            MatraError::MissingEmbedding { segment_id, side } => {
                assert_eq!(segment_id, "seg-9");
                assert_eq!(side, "candidate");
            }
            other => panic!("expected MissingEmbedding, got {other}"),
        }
    }

    #[test]
    fn embedding_sidecar_loads_and_validates() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("emb.jsonl");
        std::fs::write(
            &p,
            concat!(
                "{\"segment_id\":\"s1\",\"side\":\"candidate\",\"vector\":[1.0,2.0]}\n",
                "{\"segment_id\":\"s1\",\"side\":\"reference\",\"vector\":[3.0,4.0]}\n",
            ),
        )
        .unwrap();
        let prov = SentenceEmbeddingProvider::load(&p, false).unwrap();
        assert_eq!(prov.len(), 2);
        let store = WordVectorStore::new(2);
        let v = prov
            .embedding("s1", Side::Reference, &TokenSequence::empty(), &store)
            .unwrap();
        assert_eq!(v, vec![3.0, 4.0]);

        // Mixed dimensions rejected.
        std::fs::write(
            &p,
            concat!(
                "{\"segment_id\":\"s1\",\"side\":\"candidate\",\"vector\":[1.0,2.0]}\n",
                "{\"segment_id\":\"s2\",\"side\":\"candidate\",\"vector\":[1.0]}\n",
            ),
        )
        .unwrap();
        assert!(SentenceEmbeddingProvider::load(&p, false).is_err());

        // Duplicate (segment, side) rejected.
        std::fs::write(
            &p,
            concat!(
                "{\"segment_id\":\"s1\",\"side\":\"candidate\",\"vector\":[1.0,2.0]}\n",
                "{\"segment_id\":\"s1\",\"side\":\"candidate\",\"vector\":[5.0,6.0]}\n",
            ),
        )
        .unwrap();
        assert!(SentenceEmbeddingProvider::load(&p, false).is_err());

        // Unknown side label rejected.
        std::fs::write(
            &p,
            "{\"segment_id\":\"s1\",\"side\":\"src\",\"vector\":[1.0]}\n",
        )
        .unwrap();
        assert!(SentenceEmbeddingProvider::load(&p, false).is_err());
    }
}
