//! Evaluation corpora and score files.
//!
//! A corpus is a list of segments, each pairing a source sentence with
//! one system's candidate translation and a reference translation.
//! Corpora live in JSONL (full fidelity, including optional POS
//! annotations) or TSV (the six text columns). Alongside the corpus
//! readers this module handles per-segment human adequacy records and
//! generic `segment_id / metric_name / score` files.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{MatraError, Result};
use crate::text::tokenize;

/// One evaluation unit: a source sentence, a candidate translation
/// produced by `system_id`, and a reference translation.
///
/// `candidate_pos` / `reference_pos`, when present, carry one POS tag per
/// token of the corresponding text (token counts are validated on load).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSegment {
    pub segment_id: String,
    pub system_id: String,
    pub domain_tag: String,
    pub source_text: String,
    pub candidate_text: String,
    pub reference_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_pos: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_pos: Option<Vec<String>>,
}

/// On-disk corpus encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One JSON object per line; preserves POS annotations.
    Jsonl,
    /// Tab-separated with a header; text columns only.
    Tsv,
}

const TSV_HEADER: &str =
    "segment_id\tsystem_id\tdomain_tag\tsource_text\tcandidate_text\treference_text";

fn validate_segment(seg: &EvalSegment, path: &Path, line: usize) -> Result<()> {
    if seg.segment_id.trim().is_empty() {
        return Err(MatraError::EmptyField {
            path: path.into(),
            line,
            field: "segment_id".into(),
        });
    }
    for (field, text) in [
        ("source_text", &seg.source_text),
        ("candidate_text", &seg.candidate_text),
        ("reference_text", &seg.reference_text),
    ] {
        if text.trim().is_empty() {
            return Err(MatraError::EmptyField {
                path: path.into(),
                line,
                field: field.into(),
            });
        }
    }
    for (field, tags, text) in [
        ("candidate_pos", &seg.candidate_pos, &seg.candidate_text),
        ("reference_pos", &seg.reference_pos, &seg.reference_text),
    ] {
        if let Some(tags) = tags {
            let expected = tokenize(text).len();
            if tags.len() != expected {
                return Err(MatraError::parse(
                    path,
                    line,
                    format!(
                        "{field} has {} tags but the text tokenizes to {expected} tokens",
                        tags.len()
                    ),
                ));
            }
        }
    }
    Ok(())
}

/// Load a corpus, validating every segment.
///
/// Checks per segment: non-empty id and texts (after trimming), POS tag
/// counts matching tokenization, and id uniqueness across the file.
/// Errors cite the 1-based line number.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<EvalSegment>> {
    let content = std::fs::read_to_string(path).map_err(|e| MatraError::io(path, e))?;
    let mut segments = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    match format {
        CorpusFormat::Jsonl => {
            for (idx, line) in content.lines().enumerate() {
                let line_no = idx + 1;
                if line.trim().is_empty() {
                    continue;
                }
                let seg: EvalSegment = serde_json::from_str(line)
                    .map_err(|e| MatraError::parse(path, line_no, e.to_string()))?;
                validate_segment(&seg, path, line_no)?;
                if !seen.insert(seg.segment_id.clone()) {
                    return Err(MatraError::DuplicateId {
                        path: path.into(),
                        line: line_no,
                        id: seg.segment_id,
                    });
                }
                segments.push(seg);
            }
        }
        CorpusFormat::Tsv => {
            let mut lines = content.lines().enumerate();
            let header = lines
                .next()
                .ok_or_else(|| MatraError::parse(path, 0, "empty file; expected a header row"))?;
            if header.1.trim_end() != TSV_HEADER {
                return Err(MatraError::parse(
                    path,
                    1,
                    format!("bad header; expected {TSV_HEADER:?}"),
                ));
            }
            for (idx, line) in lines {
                let line_no = idx + 1;
                if line.trim().is_empty() {
                    continue;
                }
                let cols: Vec<&str> = line.split('\t').collect();
                if cols.len() != 6 {
                    return Err(MatraError::parse(
                        path,
                        line_no,
                        format!("expected 6 tab-separated columns, got {}", cols.len()),
                    ));
                }
                let seg = EvalSegment {
                    segment_id: cols[0].to_string(),
                    system_id: cols[1].to_string(),
                    domain_tag: cols[2].to_string(),
                    source_text: cols[3].to_string(),
                    candidate_text: cols[4].to_string(),
                    reference_text: cols[5].to_string(),
                    candidate_pos: None,
                    reference_pos: None,
                };
                validate_segment(&seg, path, line_no)?;
                if !seen.insert(seg.segment_id.clone()) {
                    return Err(MatraError::DuplicateId {
                        path: path.into(),
                        line: line_no,
                        id: seg.segment_id,
                    });
                }
                segments.push(seg);
            }
        }
    }
    Ok(segments)
}

/// Write a corpus in the given format.
///
/// TSV cannot represent tabs or newlines inside fields (nor POS arrays);
/// segments containing them are rejected rather than silently mangled.
pub fn save_corpus(segments: &[EvalSegment], path: &Path, format: CorpusFormat) -> Result<()> {
    let mut out = String::new();
    match format {
        CorpusFormat::Jsonl => {
            for seg in segments {
                let line = serde_json::to_string(seg)
                    .map_err(|e| MatraError::parse(path, 0, e.to_string()))?;
                out.push_str(&line);
                out.push('\n');
            }
        }
        CorpusFormat::Tsv => {
            out.push_str(TSV_HEADER);
            out.push('\n');
            for seg in segments {
                let fields = [
                    &seg.segment_id,
                    &seg.system_id,
                    &seg.domain_tag,
                    &seg.source_text,
                    &seg.candidate_text,
                    &seg.reference_text,
                ];
                for f in fields {
                    if f.contains('\t') || f.contains('\n') {
                        return Err(MatraError::invalid(format!(
                            "segment {:?} contains a tab or newline; use JSONL",
                            seg.segment_id
                        )));
                    }
                }
                out.push_str(&fields.map(String::as_str).join("\t"));
                out.push('\n');
            }
        }
    }
    write_atomic(path, out.as_bytes())
}

/// Write `bytes` to `path` via a sibling temp file and rename, so readers
/// never observe a half-written artifact.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => tempfile::NamedTempFile::new_in(d),
        None => tempfile::NamedTempFile::new_in("."),
    }
    .map_err(|e| MatraError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| MatraError::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| MatraError::io(path, e.error))?;
    Ok(())
}

/// Maximum value of a single human adequacy parameter.
pub const HEVAL_PARAM_MAX: u8 = 4;
/// Number of adequacy parameters in one human record.
pub const HEVAL_PARAM_COUNT: usize = 11;

/// One segment's human adequacy annotation: eleven ratings on a 0..=4
/// scale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HEvalRecord {
    segment_id: String,
    params: Vec<u8>,
}

impl HEvalRecord {
    /// Validate the parameter count and range.
    pub fn new(segment_id: impl Into<String>, params: Vec<u8>) -> Result<Self> {
        let segment_id = segment_id.into();
        if segment_id.trim().is_empty() {
            return Err(MatraError::invalid("human record needs a segment id"));
        }
        if params.len() != HEVAL_PARAM_COUNT {
            return Err(MatraError::invalid(format!(
                "segment {segment_id:?}: expected {HEVAL_PARAM_COUNT} adequacy parameters, got {}",
                params.len()
            )));
        }
        if let Some(bad) = params.iter().find(|&&p| p > HEVAL_PARAM_MAX) {
            return Err(MatraError::invalid(format!(
                "segment {segment_id:?}: parameter value {bad} exceeds {HEVAL_PARAM_MAX}"
            )));
        }
        Ok(HEvalRecord { segment_id, params })
    }

    pub fn segment_id(&self) -> &str {
        &self.segment_id
    }

    pub fn params(&self) -> &[u8] {
        &self.params
    }
}

/// Collapse a human record to a single score in [0, 1]: the mean of the
/// eleven parameters divided by the per-parameter maximum.
pub fn heval_target(record: &HEvalRecord) -> f64 {
    let sum: u32 = record.params.iter().map(|&p| u32::from(p)).sum();
    f64::from(sum) / (HEVAL_PARAM_COUNT as f64 * f64::from(HEVAL_PARAM_MAX))
}

#[derive(Deserialize)]
struct RawHumanRecord {
    segment_id: String,
    params: Vec<i64>,
}

/// Load human adequacy records from JSONL
/// (`{"segment_id": ..., "params": [..11 ints..]}` per line), keyed and
/// ordered by segment id. Duplicate ids are an error.
pub fn load_human_scores(path: &Path) -> Result<BTreeMap<String, HEvalRecord>> {
    let content = std::fs::read_to_string(path).map_err(|e| MatraError::io(path, e))?;
    let mut records = BTreeMap::new();
    for (idx, line) in content.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawHumanRecord = serde_json::from_str(line)
            .map_err(|e| MatraError::parse(path, line_no, e.to_string()))?;
        let mut params = Vec::with_capacity(raw.params.len());
        for p in &raw.params {
            let byte = u8::try_from(*p).ok().filter(|&b| b <= HEVAL_PARAM_MAX);
            match byte {
                Some(b) => params.push(b),
                None => {
                    return Err(MatraError::parse(
                        path,
                        line_no,
                        format!("parameter value {p} outside 0..={HEVAL_PARAM_MAX}"),
                    ))
                }
            }
        }
        let record = HEvalRecord::new(raw.segment_id, params)
            .map_err(|e| MatraError::parse(path, line_no, e.to_string()))?;
        if records.contains_key(record.segment_id()) {
            return Err(MatraError::DuplicateId {
                path: path.into(),
                line: line_no,
                id: record.segment_id().to_string(),
            });
        }
        records.insert(record.segment_id().to_string(), record);
    }
    Ok(records)
}

/// One metric value for one segment, as exchanged through score files.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricScore {
    pub segment_id: String,
    pub metric_name: String,
    pub value: f64,
}

const SCORE_HEADER: &str = "segment_id\tmetric_name\tscore";

/// Load a `segment_id / metric_name / score` TSV (with header). Scores
/// must parse as finite numbers. Row order is preserved.
pub fn load_metric_scores(path: &Path) -> Result<Vec<MetricScore>> {
    let content = std::fs::read_to_string(path).map_err(|e| MatraError::io(path, e))?;
    let mut lines = content.lines().enumerate();
    let header = lines
        .next()
        .ok_or_else(|| MatraError::parse(path, 0, "empty file; expected a header row"))?;
    if header.1.trim_end() != SCORE_HEADER {
        return Err(MatraError::parse(
            path,
            1,
            format!("bad header; expected {SCORE_HEADER:?}"),
        ));
    }
    let mut scores = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(MatraError::parse(
                path,
                line_no,
                format!("expected 3 tab-separated columns, got {}", cols.len()),
            ));
        }
        if cols[0].trim().is_empty() || cols[1].trim().is_empty() {
            return Err(MatraError::parse(
                path,
                line_no,
                "segment_id and metric_name must be non-empty",
            ));
        }
        let value: f64 = cols[2]
            .trim()
            .parse()
            .map_err(|_| MatraError::parse(path, line_no, format!("bad score {:?}", cols[2])))?;
        if !value.is_finite() {
            return Err(MatraError::parse(
                path,
                line_no,
                format!("score {value} is not finite"),
            ));
        }
        scores.push(MetricScore {
            segment_id: cols[0].to_string(),
            metric_name: cols[1].to_string(),
            value,
        });
    }
    Ok(scores)
}

/// Write scores as the TSV read back by [`load_metric_scores`]. Numbers
/// use the shortest decimal form that round-trips to the same `f64`, so
/// save/load preserves values bit for bit.
pub fn save_metric_scores(scores: &[MetricScore], path: &Path) -> Result<()> {
    let mut out = String::from(SCORE_HEADER);
    out.push('\n');
    for s in scores {
        if s.segment_id.contains(['\t', '\n']) || s.metric_name.contains(['\t', '\n']) {
            return Err(MatraError::invalid(format!(
                "score row for {:?} contains a tab or newline",
                s.segment_id
            )));
        }
        out.push_str(&format!("{}\t{}\t{}\n", s.segment_id, s.metric_name, s.value));
    }
    write_atomic(path, out.as_bytes())
}
