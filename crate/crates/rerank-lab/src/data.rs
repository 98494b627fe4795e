//! Corpora, queries, relevance judgments, and run files in standard
//! TREC-style formats.
//!
//! - Corpus: JSON Lines, one object per line with `doc_id`, `text`, optional `title`.
//! - Queries: TSV, `query_id<TAB>text`.
//! - Qrels: TREC 4-column whitespace format, `qid iter docid grade`.
//! - Runs: TREC 6-column format, `qid Q0 docid rank score tag`.
//!
//! Loaders are pure functions; the loaded structures are immutable after
//! construction and freely shareable across threads. All text is treated as
//! UTF-8 and invalid sequences are a load error, not silently replaced.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tag written into run files when none is given.
pub const DEFAULT_RUN_TAG: &str = "rerank-lab";

/// One retrievable passage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub doc_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
}

/// An immutable set of passages with unique doc_ids.
#[derive(Debug, Clone)]
pub struct Corpus {
    passages: Vec<Passage>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus from passages, rejecting duplicate doc_ids.
    pub fn from_passages(passages: Vec<Passage>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(passages.len());
        for (i, p) in passages.iter().enumerate() {
            if p.doc_id.is_empty() {
                return Err(Error::InvalidConfig("empty doc_id in corpus".into()));
            }
            if by_id.insert(p.doc_id.clone(), i).is_some() {
                return Err(Error::DuplicateDocId(p.doc_id.clone()));
            }
        }
        Ok(Self { passages, by_id })
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&Passage> {
        self.by_id.get(doc_id).map(|&i| &self.passages[i])
    }

    /// Passage by build ordinal (the order of lines in the source file).
    pub fn by_ordinal(&self, ordinal: usize) -> &Passage {
        &self.passages[ordinal]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Passage> {
        self.passages.iter()
    }
}

/// A search query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: String,
    pub text: String,
}

/// Graded relevance judgments: (query_id, doc_id) -> grade >= 0.
///
/// Unjudged pairs are treated as grade 0 everywhere downstream.
#[derive(Debug, Clone, Default)]
pub struct Qrels {
    by_query: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one judgment; a second grade for the same pair is an error.
    pub fn insert(&mut self, query_id: &str, doc_id: &str, grade: u32) -> Result<()> {
        let docs = self.by_query.entry(query_id.to_string()).or_default();
        if docs.insert(doc_id.to_string(), grade).is_some() {
            return Err(Error::DuplicateJudgment {
                query_id: query_id.to_string(),
                doc_id: doc_id.to_string(),
            });
        }
        Ok(())
    }

    /// Judged grade for the pair, if any.
    pub fn grade(&self, query_id: &str, doc_id: &str) -> Option<u32> {
        self.by_query
            .get(query_id)
            .and_then(|d| d.get(doc_id))
            .copied()
    }

    /// The TREC convention: unjudged means grade 0.
    pub fn grade_or_zero(&self, query_id: &str, doc_id: &str) -> u32 {
        self.grade(query_id, doc_id).unwrap_or(0)
    }

    /// All judged grades for a query, in doc_id order. Empty if unjudged.
    pub fn judged_grades(&self, query_id: &str) -> Vec<u32> {
        self.by_query
            .get(query_id)
            .map(|d| d.values().copied().collect())
            .unwrap_or_default()
    }

    /// Whether the query has any judgment at all.
    pub fn has_query(&self, query_id: &str) -> bool {
        self.by_query.contains_key(query_id)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.by_query.keys().map(|s| s.as_str())
    }

    pub fn num_judgments(&self) -> usize {
        self.by_query.values().map(|d| d.len()).sum()
    }
}

/// One line of a TREC run file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub query_id: String,
    pub doc_id: String,
    /// 1-based rank within the query.
    pub rank: u32,
    pub score: f64,
    pub tag: String,
}

/// Reads UTF-8 lines from a file, reporting the offending line number on
/// invalid byte sequences.
fn read_lines(path: &Path) -> Result<Vec<String>> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = Vec::new();
    for (i, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
        let line = std::str::from_utf8(raw).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: format!("invalid UTF-8: {e}"),
        })?;
        lines.push(line.to_string());
    }
    // A trailing newline yields one empty final element; drop it.
    if lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    Ok(lines)
}

/// Loads a JSON Lines corpus. Blank lines are skipped; a duplicate doc_id or
/// a malformed line (reported with its line number) is an error.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let mut passages = Vec::new();
    for (i, line) in read_lines(path)?.into_iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let passage: Passage = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        passages.push(passage);
    }
    Corpus::from_passages(passages)
}

/// Writes a corpus back out as JSON Lines.
pub fn write_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for p in corpus.iter() {
        out.push_str(&serde_json::to_string(p).expect("passage serializes"));
        out.push('\n');
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

/// Loads a TSV query file (`query_id<TAB>text`). Duplicate ids are an error.
pub fn load_queries(path: impl AsRef<Path>) -> Result<Vec<Query>> {
    let path = path.as_ref();
    let mut queries = Vec::new();
    let mut seen = HashMap::new();
    for (i, line) in read_lines(path)?.into_iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (query_id, text) = line.split_once('\t').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: "expected `query_id<TAB>text`".into(),
        })?;
        if query_id.is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: "empty query_id".into(),
            });
        }
        if seen.insert(query_id.to_string(), i).is_some() {
            return Err(Error::DuplicateQueryId(query_id.to_string()));
        }
        queries.push(Query {
            query_id: query_id.to_string(),
            text: text.to_string(),
        });
    }
    Ok(queries)
}

/// Loads TREC 4-column qrels (`qid iter docid grade`). Grades must be
/// non-negative integers and each (qid, docid) pair may appear once.
pub fn load_qrels(path: impl AsRef<Path>) -> Result<Qrels> {
    let path = path.as_ref();
    let mut qrels = Qrels::new();
    for (i, line) in read_lines(path)?.into_iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 4 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("expected 4 columns, got {}", cols.len()),
            });
        }
        let grade: i64 = cols[3].parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: format!("grade must be an integer, got {:?}", cols[3]),
        })?;
        if grade < 0 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("grade must be non-negative, got {grade}"),
            });
        }
        qrels.insert(cols[0], cols[2], grade as u32)?;
    }
    Ok(qrels)
}

/// Validates that each query's ranks form exactly 1..m with no gaps.
fn validate_ranks(entries: &[RunEntry]) -> Result<()> {
    let mut per_query: BTreeMap<&str, Vec<u32>> = BTreeMap::new();
    for e in entries {
        per_query.entry(&e.query_id).or_default().push(e.rank);
    }
    for (qid, mut ranks) in per_query {
        ranks.sort_unstable();
        for (i, r) in ranks.iter().enumerate() {
            let expected = (i + 1) as u32;
            if *r != expected {
                let what = if ranks[..i].contains(r) {
                    "duplicate"
                } else {
                    "gap at"
                };
                return Err(Error::InvalidRun(format!(
                    "query {qid:?}: {what} rank {r} (expected {expected})"
                )));
            }
        }
    }
    Ok(())
}

/// Writes a TREC 6-column run file (`qid Q0 docid rank score tag`).
///
/// Scores use the shortest round-trip float representation, so re-parsing
/// recovers them exactly.
pub fn write_run(entries: &[RunEntry], path: impl AsRef<Path>) -> Result<()> {
    validate_ranks(entries)?;
    let mut out = String::new();
    for e in entries {
        out.push_str(&format!(
            "{} Q0 {} {} {} {}\n",
            e.query_id, e.doc_id, e.rank, e.score, e.tag
        ));
    }
    write_atomic(path.as_ref(), out.as_bytes())
}

/// Reads a TREC run file back into entries, validating rank structure.
pub fn load_run(path: impl AsRef<Path>) -> Result<Vec<RunEntry>> {
    let path = path.as_ref();
    let mut entries = Vec::new();
    for (i, line) in read_lines(path)?.into_iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 6 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("expected 6 columns, got {}", cols.len()),
            });
        }
        let rank: u32 = cols[3].parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: format!("rank must be a positive integer, got {:?}", cols[3]),
        })?;
        let score: f64 = cols[4].parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: format!("score must be a number, got {:?}", cols[4]),
        })?;
        entries.push(RunEntry {
            query_id: cols[0].to_string(),
            doc_id: cols[2].to_string(),
            rank,
            score,
            tag: cols[5].to_string(),
        });
    }
    validate_ranks(&entries)?;
    Ok(entries)
}

/// Groups run entries by query, each group sorted by ascending rank.
/// Queries appear in first-seen order.
pub fn group_run_by_query(entries: &[RunEntry]) -> Vec<(String, Vec<&RunEntry>)> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<&RunEntry>> = HashMap::new();
    for e in entries {
        if !groups.contains_key(&e.query_id) {
            order.push(e.query_id.clone());
        }
        groups.entry(e.query_id.clone()).or_default().push(e);
    }
    order
        .into_iter()
        .map(|qid| {
            let mut g = groups.remove(&qid).unwrap();
            g.sort_by_key(|e| e.rank);
            (qid, g)
        })
        .collect()
}

/// Writes bytes to `path` atomically (temp file in the same directory, then
/// rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(io_err)?;
    f.write_all(bytes).map_err(io_err)?;
    f.sync_all().map_err(io_err)?;
    drop(f);
    fs::rename(&tmp, path).map_err(io_err)
}
