//! Sliding-window reranking over pluggable ranker backends.
//!
//! The candidate list is processed back-to-front in overlapping windows of
//! size `w` shifted by `stride` (default w/2), so strong candidates bubble
//! toward the top; a window anchored at index 0 is always emitted, which
//! guarantees every candidate is seen at least once per pass. Windows within
//! one query are strictly sequential because each rewrites the working order
//! the next window reads; parallelism belongs across queries.
//!
//! A backend is anything that maps a window to a raw response string the
//! rollout parser can consume: a chat-completion HTTP endpoint, or one of
//! the deterministic synthetic rankers (oracle, identity, seeded random,
//! lexical overlap).

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bm25::AnalyzerConfig;
use crate::data::Query;
use crate::error::{BackendError, Error, Result};
use crate::metrics::Permutation;
use crate::rollout::{self, MessageSequence, PromptStyle};
use crate::seeding;

/// Sliding-window geometry.
#[derive(Debug, Clone, Serialize)]
pub struct WindowConfig {
    pub window_size: usize,
    pub stride: usize,
    pub passes: usize,
    /// Reporting cutoff carried alongside the geometry.
    pub top_k: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            window_size: 20,
            stride: 10,
            passes: 1,
            top_k: 10,
        }
    }
}

impl WindowConfig {
    /// Window of size `w` with the default stride of w/2.
    pub fn with_window(w: usize) -> Self {
        Self {
            window_size: w,
            stride: (w / 2).max(1),
            ..Self::default()
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.stride < 1 || self.stride > self.window_size {
            return Err(Error::InvalidConfig(format!(
                "stride must be in 1..=window_size, got stride={} window={}",
                self.stride, self.window_size
            )));
        }
        if self.window_size > n {
            return Err(Error::InvalidConfig(format!(
                "window_size {} exceeds candidate count {n}",
                self.window_size
            )));
        }
        if self.passes < 1 {
            return Err(Error::InvalidConfig("passes must be >= 1".into()));
        }
        if self.top_k < 1 {
            return Err(Error::InvalidConfig("top_k must be >= 1".into()));
        }
        Ok(())
    }
}

/// Prompt rendering settings for backends that consume messages.
#[derive(Debug, Clone, Serialize)]
pub struct PromptConfig {
    pub style: PromptStyle,
    pub truncate_tokens: usize,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self {
            style: PromptStyle::Reasoning,
            truncate_tokens: rollout::DEFAULT_TRUNCATE_TOKENS,
        }
    }
}

/// The window schedule: [start, end) ranges from the end of the list toward
/// the beginning, stepping by `stride`, with a final window clamped to 0.
pub fn window_schedule(n: usize, w: usize, stride: usize) -> Result<Vec<(usize, usize)>> {
    if w < 1 || stride < 1 || stride > w {
        return Err(Error::InvalidConfig(format!(
            "invalid schedule: n={n} w={w} stride={stride}"
        )));
    }
    if w > n {
        return Err(Error::InvalidConfig(format!(
            "window size {w} exceeds candidate count {n}"
        )));
    }
    let mut out = Vec::new();
    let mut start = n - w;
    loop {
        out.push((start, start + w));
        if start == 0 {
            break;
        }
        start = start.saturating_sub(stride);
    }
    Ok(out)
}

/// One candidate passage as seen by the engine. The grade is the judged
/// relevance (0 when unjudged); only synthetic backends look at it.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub doc_id: String,
    pub text: String,
    pub grade: u32,
}

/// A backend's view of one window, in the current working order.
#[derive(Debug)]
pub struct WindowView<'a> {
    pub query: &'a Query,
    pub doc_ids: Vec<&'a str>,
    pub texts: Vec<&'a str>,
    pub grades: Vec<u32>,
    /// [start, end) of this window in the working list.
    pub start: usize,
    pub end: usize,
    /// 0-based position of this call in the query's schedule across passes.
    pub ordinal: usize,
}

impl WindowView<'_> {
    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }
}

/// An LLM-style permutation function over one window.
pub trait RankerBackend: Send + Sync {
    fn name(&self) -> &str;

    /// Whether the engine should render chat messages for this backend.
    /// Synthetic rankers work straight off the window view.
    fn wants_messages(&self) -> bool {
        false
    }

    /// The verbatim request body this backend would send for `messages`;
    /// used by tracing.
    fn wire_request(&self, messages: &MessageSequence) -> serde_json::Value {
        serde_json::json!({ "messages": messages })
    }

    /// Produces a raw response string for the window.
    fn rank_window(
        &self,
        messages: &MessageSequence,
        window: &WindowView<'_>,
    ) -> std::result::Result<String, BackendError>;
}

/// Bookkeeping for one backend call.
#[derive(Debug, Clone)]
pub struct WindowCall {
    pub start: usize,
    pub end: usize,
    pub latency: Duration,
    pub has_think_and_answer: bool,
    pub answer_well_formed: bool,
    pub repaired: bool,
}

/// Per-query call accounting. `total_calls` equals schedule length times
/// passes once a rerank completes.
#[derive(Debug, Clone, Default)]
pub struct CallLog {
    pub calls: Vec<WindowCall>,
    pub total_calls: usize,
}

impl CallLog {
    pub fn merge(&mut self, other: CallLog) {
        self.calls.extend(other.calls);
        self.total_calls += other.total_calls;
    }

    pub fn repaired_count(&self) -> usize {
        self.calls.iter().filter(|c| c.repaired).count()
    }
}

/// Errors from a sliding rerank; a backend failure carries the calls
/// completed before it.
#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] Error),
    #[error("backend failed on window [{start}, {end}): {source}")]
    Backend {
        start: usize,
        end: usize,
        #[source]
        source: BackendError,
        partial_log: CallLog,
    },
}

/// Reranks `pool` for `query`, returning the final permutation relative to
/// the input order together with the call log.
pub fn slide_rerank(
    pool: &[Candidate],
    query: &Query,
    cfg: &WindowConfig,
    prompt: &PromptConfig,
    backend: &dyn RankerBackend,
) -> std::result::Result<(Permutation, CallLog), EngineError> {
    let n = pool.len();
    cfg.validate(n)?;
    let schedule = window_schedule(n, cfg.window_size, cfg.stride)?;

    let mut working: Vec<usize> = (0..n).collect();
    let mut log = CallLog::default();
    let mut ordinal = 0usize;

    for _pass in 0..cfg.passes {
        for &(start, end) in &schedule {
            let slice: Vec<usize> = working[start..end].to_vec();
            let texts: Vec<&str> = slice.iter().map(|&i| pool[i].text.as_str()).collect();
            let view = WindowView {
                query,
                doc_ids: slice.iter().map(|&i| pool[i].doc_id.as_str()).collect(),
                grades: slice.iter().map(|&i| pool[i].grade).collect(),
                texts,
                start,
                end,
                ordinal,
            };
            let messages = if backend.wants_messages() {
                rollout::build_messages(&view.texts, query, prompt.style, prompt.truncate_tokens)
            } else {
                MessageSequence::new()
            };

            let t0 = Instant::now();
            let response = backend.rank_window(&messages, &view).map_err(|source| {
                let mut partial_log = log.clone();
                partial_log.total_calls = partial_log.calls.len();
                EngineError::Backend {
                    start,
                    end,
                    source,
                    partial_log,
                }
            })?;
            let latency = t0.elapsed();

            let parsed = rollout::parse_response(&response, end - start);
            for (j, &p) in parsed.permutation.order().iter().enumerate() {
                working[start + j] = slice[p - 1];
            }
            log.calls.push(WindowCall {
                start,
                end,
                latency,
                has_think_and_answer: parsed.has_think_and_answer,
                answer_well_formed: parsed.answer_well_formed,
                repaired: parsed.repaired,
            });
            ordinal += 1;
        }
    }

    log.total_calls = log.calls.len();
    let perm = Permutation::from_one_based(working.iter().map(|&i| i + 1).collect())
        .expect("window rewrites preserve the permutation invariant");
    Ok((perm, log))
}

fn wrap_answer(order_one_based: &[usize], note: &str) -> String {
    let body = order_one_based
        .iter()
        .map(|i| format!("[{i}]"))
        .collect::<Vec<_>>()
        .join(" > ");
    format!("<think>{note}</think><answer>{body}</answer>")
}

/// Response text for the in-window argmax: indices sorted by grade
/// descending, ties by ascending original index.
pub fn oracle_rank(grades: &[u32]) -> String {
    let mut idx: Vec<usize> = (1..=grades.len()).collect();
    idx.sort_by(|&a, &b| grades[b - 1].cmp(&grades[a - 1]).then(a.cmp(&b)));
    wrap_answer(&idx, "Ranking by graded relevance.")
}

/// Sorts each window by judged grade; the in-window optimum.
pub struct OracleBackend;

impl RankerBackend for OracleBackend {
    fn name(&self) -> &str {
        "oracle"
    }

    fn rank_window(
        &self,
        _messages: &MessageSequence,
        window: &WindowView<'_>,
    ) -> std::result::Result<String, BackendError> {
        Ok(oracle_rank(&window.grades))
    }
}

/// Leaves every window unchanged.
pub struct IdentityBackend;

impl RankerBackend for IdentityBackend {
    fn name(&self) -> &str {
        "identity"
    }

    fn rank_window(
        &self,
        _messages: &MessageSequence,
        window: &WindowView<'_>,
    ) -> std::result::Result<String, BackendError> {
        let idx: Vec<usize> = (1..=window.len()).collect();
        Ok(wrap_answer(&idx, "Keeping the current order."))
    }
}

/// Shuffles each window with a seed derived from (root seed, query, call
/// ordinal), so runs are reproducible under any thread schedule.
pub struct RandomBackend {
    pub seed: u64,
}

impl RankerBackend for RandomBackend {
    fn name(&self) -> &str {
        "random"
    }

    fn rank_window(
        &self,
        _messages: &MessageSequence,
        window: &WindowView<'_>,
    ) -> std::result::Result<String, BackendError> {
        let seed = seeding::derive_seed(self.seed, &window.query.query_id, window.ordinal as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx: Vec<usize> = (1..=window.len()).collect();
        idx.shuffle(&mut rng);
        Ok(wrap_answer(&idx, "Shuffling."))
    }
}

/// Sorts each window by distinct-term overlap with the query; a cheap
/// no-network baseline.
pub struct LexicalBackend {
    analyzer: AnalyzerConfig,
}

impl LexicalBackend {
    pub fn new() -> Self {
        Self {
            analyzer: AnalyzerConfig::default(),
        }
    }
}

impl Default for LexicalBackend {
    fn default() -> Self {
        Self::new()
    }
}

impl RankerBackend for LexicalBackend {
    fn name(&self) -> &str {
        "lexical"
    }

    fn rank_window(
        &self,
        _messages: &MessageSequence,
        window: &WindowView<'_>,
    ) -> std::result::Result<String, BackendError> {
        let query_terms: std::collections::HashSet<String> = self
            .analyzer
            .analyze(&window.query.text)
            .into_iter()
            .collect();
        let overlaps: Vec<usize> = window
            .texts
            .iter()
            .map(|t| {
                let terms: std::collections::HashSet<String> =
                    self.analyzer.analyze(t).into_iter().collect();
                query_terms.intersection(&terms).count()
            })
            .collect();
        let mut idx: Vec<usize> = (1..=window.len()).collect();
        idx.sort_by(|&a, &b| overlaps[b - 1].cmp(&overlaps[a - 1]).then(a.cmp(&b)));
        Ok(wrap_answer(&idx, "Ranking by query-term overlap."))
    }
}

/// Records every (request, response) pair a backend sees; used by `--trace`.
pub struct Traced<'a> {
    inner: &'a dyn RankerBackend,
    records: std::sync::Mutex<Vec<TraceRecord>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    pub query_id: String,
    pub window: (usize, usize),
    pub ordinal: usize,
    pub request: serde_json::Value,
    pub response: String,
}

impl<'a> Traced<'a> {
    pub fn new(inner: &'a dyn RankerBackend) -> Self {
        Self {
            inner,
            records: std::sync::Mutex::new(Vec::new()),
        }
    }

    pub fn into_records(self) -> Vec<TraceRecord> {
        self.records.into_inner().unwrap()
    }
}

impl RankerBackend for Traced<'_> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn wants_messages(&self) -> bool {
        // Render messages even for synthetic backends so traces show the
        // verbatim request bodies.
        true
    }

    fn wire_request(&self, messages: &MessageSequence) -> serde_json::Value {
        self.inner.wire_request(messages)
    }

    fn rank_window(
        &self,
        messages: &MessageSequence,
        window: &WindowView<'_>,
    ) -> std::result::Result<String, BackendError> {
        let response = self.inner.rank_window(messages, window)?;
        self.records.lock().unwrap().push(TraceRecord {
            query_id: window.query.query_id.clone(),
            window: (window.start, window.end),
            ordinal: window.ordinal,
            request: self.inner.wire_request(messages),
            response: response.clone(),
        });
        Ok(response)
    }
}
