//! Run evaluation: NDCG@k per query with the full-qrels ideal.

use serde::Serialize;

use crate::data::{group_run_by_query, Qrels, RunEntry};
use crate::error::{Error, Result};
use crate::metrics::{dcg_at_k, ideal_dcg};

#[derive(Debug, Clone, Serialize)]
pub struct QueryEval {
    pub query_id: String,
    pub ndcg: f64,
    /// False when the query has no judgments at all; such queries score 0.
    pub judged: bool,
}

/// Aggregate call counters copied out of the engine's per-query logs.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CallStats {
    pub total_calls: usize,
    /// Set when every query saw the same number of windows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub windows_per_query: Option<usize>,
    pub repaired_windows: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub k: usize,
    pub num_queries: usize,
    pub mean_ndcg: f64,
    pub per_query: Vec<QueryEval>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub unjudged_queries: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calls: Option<CallStats>,
    /// Echo of the settings that produced the evaluated run.
    #[serde(skip_serializing_if = "serde_json::Map::is_empty")]
    pub config: serde_json::Map<String, serde_json::Value>,
}

impl EvalReport {
    /// Plain-text table, one aligned row per query plus the mean.
    pub fn table(&self) -> String {
        let id_width = self
            .per_query
            .iter()
            .map(|q| q.query_id.len())
            .max()
            .unwrap_or(5)
            .max("query".len());
        let mut out = String::new();
        out.push_str(&format!(
            "{:<id_width$}  ndcg@{:<3}  judged\n",
            "query", self.k
        ));
        for q in &self.per_query {
            out.push_str(&format!(
                "{:<id_width$}  {:<8.4}  {}\n",
                q.query_id,
                q.ndcg,
                if q.judged { "yes" } else { "NO" }
            ));
        }
        out.push_str(&format!(
            "{:<id_width$}  {:<8.4}  ({} queries)\n",
            "mean", self.mean_ndcg, self.num_queries
        ));
        out
    }
}

/// Scores a run against qrels at cutoff `k`. Queries present in the run but
/// absent from the qrels contribute 0 and are flagged.
pub fn evaluate_run(entries: &[RunEntry], qrels: &Qrels, k: usize) -> Result<EvalReport> {
    if entries.is_empty() {
        return Err(Error::EmptyRun);
    }
    let mut per_query = Vec::new();
    let mut unjudged = Vec::new();
    for (query_id, group) in group_run_by_query(entries) {
        let judged = qrels.has_query(&query_id);
        let ndcg = if judged {
            let ideal = ideal_dcg(qrels, &query_id, k);
            if ideal == 0.0 {
                0.0
            } else {
                let grades: Vec<u32> = group
                    .iter()
                    .map(|e| qrels.grade_or_zero(&query_id, &e.doc_id))
                    .collect();
                dcg_at_k(&grades, k) / ideal
            }
        } else {
            unjudged.push(query_id.clone());
            0.0
        };
        per_query.push(QueryEval {
            query_id,
            ndcg,
            judged,
        });
    }
    per_query.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    unjudged.sort();
    let mean_ndcg = per_query.iter().map(|q| q.ndcg).sum::<f64>() / per_query.len() as f64;
    Ok(EvalReport {
        k,
        num_queries: per_query.len(),
        mean_ndcg,
        per_query,
        unjudged_queries: unjudged,
        backend: None,
        seed: None,
        calls: None,
        config: serde_json::Map::new(),
    })
}
