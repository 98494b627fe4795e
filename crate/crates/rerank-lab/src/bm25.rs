//! First-stage lexical retrieval over an inverted index.
//!
//! Scoring follows the Lucene/Anserini flavor of BM25:
//!
//! ```text
//! score(D,Q) = sum over query terms t of
//!     idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * |D| / avgdl))
//! idf(t)    = ln(1 + (N - df + 0.5) / (df + 0.5))
//! ```
//!
//! The +1 inside the log keeps idf positive even for terms present in every
//! document. Defaults are k1 = 0.9, b = 0.4. Results are ordered by
//! descending score with ties broken by ascending doc_id; zero-score
//! documents are omitted.

use std::collections::HashMap;

use crate::data::Corpus;
use crate::error::{Error, Result};
use crate::porter;

pub const DEFAULT_K1: f64 = 0.9;
pub const DEFAULT_B: f64 = 0.4;

/// Text analysis settings. Analysis is deterministic given the config:
/// split on non-alphanumeric runs, optionally lowercase, optionally apply
/// Porter stemming.
#[derive(Debug, Clone)]
pub struct AnalyzerConfig {
    pub lowercase: bool,
    pub stem: bool,
}

impl Default for AnalyzerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            stem: true,
        }
    }
}

impl AnalyzerConfig {
    /// Tokenizes `text` into index terms.
    pub fn analyze(&self, text: &str) -> Vec<String> {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(|t| {
                let t = if self.lowercase {
                    t.to_lowercase()
                } else {
                    t.to_string()
                };
                if self.stem {
                    porter::stem(&t)
                } else {
                    t
                }
            })
            .collect()
    }
}

/// An immutable inverted index; safe for concurrent searches.
#[derive(Debug)]
pub struct Index {
    /// term -> postings of (doc ordinal, term frequency), ascending ordinal.
    postings: HashMap<String, Vec<(u32, u32)>>,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    k1: f64,
    b: f64,
    analyzer: AnalyzerConfig,
}

impl Index {
    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_lengths(&self) -> &[u32] {
        &self.doc_lengths
    }

    pub fn analyzer(&self) -> &AnalyzerConfig {
        &self.analyzer
    }

    fn idf(&self, term: &str) -> f64 {
        let df = self.postings.get(term).map_or(0, |p| p.len());
        if df == 0 {
            return 0.0;
        }
        let n = self.doc_count() as f64;
        let df = df as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    fn tf_norm(&self, tf: u32, doc_len: u32) -> f64 {
        let tf = tf as f64;
        let len_ratio = doc_len as f64 / self.avg_doc_length;
        tf * (self.k1 + 1.0) / (tf + self.k1 * (1.0 - self.b + self.b * len_ratio))
    }

    /// Scores one document against pre-analyzed query terms; the reference
    /// path used both by `search` and by the brute-force test oracle.
    pub fn score_doc(&self, ordinal: usize, query_terms: &[String]) -> f64 {
        let mut score = 0.0;
        for term in query_terms {
            let Some(postings) = self.postings.get(term) else {
                continue;
            };
            let Ok(pos) = postings.binary_search_by_key(&(ordinal as u32), |&(d, _)| d) else {
                continue;
            };
            let tf = postings[pos].1;
            score += self.idf(term) * self.tf_norm(tf, self.doc_lengths[ordinal]);
        }
        score
    }
}

/// Builds an index over `corpus`. Passage text and title are concatenated
/// before analysis.
pub fn build_index(corpus: &Corpus, analyzer: AnalyzerConfig, k1: f64, b: f64) -> Result<Index> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if k1 < 0.0 || k1.is_nan() {
        return Err(Error::InvalidConfig(format!("k1 must be >= 0, got {k1}")));
    }
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::InvalidConfig(format!(
            "b must be in [0, 1], got {b}"
        )));
    }

    let mut postings: HashMap<String, Vec<(u32, u32)>> = HashMap::new();
    let mut doc_ids = Vec::with_capacity(corpus.len());
    let mut doc_lengths = Vec::with_capacity(corpus.len());
    let mut total_len: u64 = 0;

    for (ordinal, passage) in corpus.iter().enumerate() {
        let mut text = passage.text.clone();
        if let Some(title) = &passage.title {
            text.push(' ');
            text.push_str(title);
        }
        let terms = analyzer.analyze(&text);
        total_len += terms.len() as u64;
        doc_lengths.push(terms.len() as u32);
        doc_ids.push(passage.doc_id.clone());

        let mut freqs: HashMap<String, u32> = HashMap::new();
        for t in terms {
            *freqs.entry(t).or_insert(0) += 1;
        }
        for (term, tf) in freqs {
            postings.entry(term).or_default().push((ordinal as u32, tf));
        }
    }
    for p in postings.values_mut() {
        p.sort_unstable_by_key(|&(d, _)| d);
    }

    Ok(Index {
        postings,
        avg_doc_length: total_len as f64 / corpus.len() as f64,
        doc_ids,
        doc_lengths,
        k1,
        b,
        analyzer,
    })
}

/// Top-k search. Documents matching no query term are omitted; ties are
/// broken by ascending doc_id.
pub fn search(index: &Index, query_text: &str, k: usize) -> Vec<(String, f64)> {
    let query_terms = index.analyzer.analyze(query_text);
    if query_terms.is_empty() || k == 0 {
        return Vec::new();
    }

    let mut scores: HashMap<u32, f64> = HashMap::new();
    for term in &query_terms {
        let idf = index.idf(term);
        let Some(postings) = index.postings.get(term) else {
            continue;
        };
        for &(doc, tf) in postings {
            *scores.entry(doc).or_insert(0.0) +=
                idf * index.tf_norm(tf, index.doc_lengths[doc as usize]);
        }
    }

    let mut hits: Vec<(String, f64)> = scores
        .into_iter()
        .filter(|&(_, s)| s > 0.0)
        .map(|(doc, s)| (index.doc_ids[doc as usize].clone(), s))
        .collect();
    hits.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    hits.truncate(k);
    hits
}
