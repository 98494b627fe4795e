//! Ranking quality metrics and the composite reward signal.
//!
//! NDCG@k uses linear gain with a log2 position discount:
//!
//! ```text
//! DCG@k  = sum_{i=1..k} rel_i / log2(i + 1)
//! NDCG@k = DCG@k / IDCG@k
//! ```
//!
//! IDCG is computed from the query's full judged set, not from the candidate
//! set at hand, so the best achievable NDCG of a sampled candidate set can be
//! well below 1. The ranking reward is the min-max normalized improvement
//! over the initial order:
//!
//! ```text
//! r_rank = (r_rerank - r_init) / (r* - r_init)
//! r      = 0.8 * r_rank + 0.1 * r_format1 + 0.1 * r_format2
//! ```
//!
//! where r* is the best achievable NDCG@k for the candidate set. Two ablation
//! variants of r_rank (raw score, unnormalized difference) are selectable via
//! [`RewardMode`].

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::data::Qrels;
use crate::error::{Error, Result};
use crate::rollout::ParsedRollout;

/// Degenerate-denominator guard for `ranking_reward`.
pub const IMPROVEMENT_EPSILON: f64 = 1e-9;

/// Weights of the composite reward.
pub const RANK_WEIGHT: f64 = 0.8;
pub const FORMAT_WEIGHT: f64 = 0.1;

/// A query plus an ordered candidate list with per-candidate grades; the
/// order of `doc_ids` is the initial ranking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    pub query_id: String,
    pub doc_ids: Vec<String>,
    pub grades: Vec<u32>,
}

impl CandidateSet {
    /// Builds a candidate set with explicit grades.
    pub fn new(
        query_id: impl Into<String>,
        doc_ids: Vec<String>,
        grades: Vec<u32>,
    ) -> Result<Self> {
        if doc_ids.len() != grades.len() {
            return Err(Error::InvalidConfig(format!(
                "candidate set has {} doc_ids but {} grades",
                doc_ids.len(),
                grades.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for id in &doc_ids {
            if !seen.insert(id) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate candidate doc_id {id:?}"
                )));
            }
        }
        Ok(Self {
            query_id: query_id.into(),
            doc_ids,
            grades,
        })
    }

    /// Builds a candidate set, grading each doc from qrels (unjudged -> 0).
    pub fn from_qrels(
        query_id: impl Into<String>,
        doc_ids: Vec<String>,
        qrels: &Qrels,
    ) -> Result<Self> {
        let query_id = query_id.into();
        let grades = doc_ids
            .iter()
            .map(|d| qrels.grade_or_zero(&query_id, d))
            .collect();
        Self::new(query_id, doc_ids, grades)
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }
}

/// A reordering of a candidate set: 1-based indices, each exactly once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self((1..=n).collect())
    }

    /// Validates that `order` is a permutation of 1..=n.
    pub fn from_one_based(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &i in &order {
            if i == 0 || i > n {
                return Err(Error::InvalidPermutation(format!(
                    "index {i} out of range 1..={n}"
                )));
            }
            if seen[i - 1] {
                return Err(Error::InvalidPermutation(format!("index {i} repeated")));
            }
            seen[i - 1] = true;
        }
        Ok(Self(order))
    }

    /// The 1-based order; entry `i` is the original position ranked at `i+1`.
    pub fn order(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &v)| v == i + 1)
    }

    /// Reorders `items` so that `result[i] = items[order[i] - 1]`.
    pub fn apply<T: Clone>(&self, items: &[T]) -> Vec<T> {
        self.0.iter().map(|&i| items[i - 1].clone()).collect()
    }
}

/// DCG@k of grades already in rank order.
pub fn dcg_at_k(grades_in_rank_order: &[u32], k: usize) -> f64 {
    grades_in_rank_order
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| g as f64 / (i as f64 + 2.0).log2())
        .sum()
}

/// IDCG@k for a query: DCG of all its judged grades sorted descending.
/// Zero when the query has no judged positive documents.
pub fn ideal_dcg(qrels: &Qrels, query_id: &str, k: usize) -> f64 {
    let mut grades = qrels.judged_grades(query_id);
    grades.sort_unstable_by(|a, b| b.cmp(a));
    dcg_at_k(&grades, k)
}

/// NDCG@k of a permuted candidate set, normalized by the query's full-qrels
/// IDCG. Returns 0 when IDCG is 0.
pub fn ndcg_at_k(perm: &Permutation, cs: &CandidateSet, qrels: &Qrels, k: usize) -> Result<f64> {
    if perm.len() != cs.len() {
        return Err(Error::InvalidPermutation(format!(
            "permutation of length {} applied to candidate set of size {}",
            perm.len(),
            cs.len()
        )));
    }
    let ideal = ideal_dcg(qrels, &cs.query_id, k);
    if ideal == 0.0 {
        return Ok(0.0);
    }
    let permuted = perm.apply(&cs.grades);
    Ok(dcg_at_k(&permuted, k) / ideal)
}

/// Best achievable NDCG@k for the candidate set: the candidates sorted by
/// grade descending, which maximizes DCG by the rearrangement inequality.
pub fn best_achievable_ndcg(cs: &CandidateSet, qrels: &Qrels, k: usize) -> f64 {
    let ideal = ideal_dcg(qrels, &cs.query_id, k);
    if ideal == 0.0 {
        return 0.0;
    }
    let mut grades = cs.grades.clone();
    grades.sort_unstable_by(|a, b| b.cmp(a));
    dcg_at_k(&grades, k) / ideal
}

/// NDCG@k of the candidate set in its given order (the initial ranking).
pub fn initial_ndcg(cs: &CandidateSet, qrels: &Qrels, k: usize) -> f64 {
    let ideal = ideal_dcg(qrels, &cs.query_id, k);
    if ideal == 0.0 {
        return 0.0;
    }
    dcg_at_k(&cs.grades, k) / ideal
}

/// Relative-improvement ranking reward. Returns 0 when nothing is improvable
/// (r* within [`IMPROVEMENT_EPSILON`] of r_init); otherwise the unclamped
/// ratio, which is negative for regressions.
pub fn ranking_reward(r_rerank: f64, r_init: f64, r_star: f64) -> f64 {
    let denom = r_star - r_init;
    if denom < IMPROVEMENT_EPSILON {
        return 0.0;
    }
    (r_rerank - r_init) / denom
}

/// Variants of the ranking reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// (r_rerank - r_init) / (r* - r_init)
    #[default]
    Normalized,
    /// r_rerank
    Absolute,
    /// r_rerank - r_init
    Difference,
}

impl RewardMode {
    pub fn rank_reward(&self, r_rerank: f64, r_init: f64, r_star: f64) -> f64 {
        match self {
            RewardMode::Normalized => ranking_reward(r_rerank, r_init, r_star),
            RewardMode::Absolute => r_rerank,
            RewardMode::Difference => r_rerank - r_init,
        }
    }
}

impl std::str::FromStr for RewardMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normalized" => Ok(Self::Normalized),
            "absolute" => Ok(Self::Absolute),
            "difference" => Ok(Self::Difference),
            other => Err(Error::InvalidConfig(format!(
                "unknown reward mode {other:?} (expected normalized|absolute|difference)"
            ))),
        }
    }
}

static RANKING_LIST_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*\[\d+\](?:\s*>\s*\[\d+\])*\s*$").unwrap());

/// Whether an answer body is a ranking list of bracketed integer
/// identifiers, e.g. `[3] > [1] > [2]`.
pub fn is_ranking_list(answer_body: &str) -> bool {
    RANKING_LIST_RE.is_match(answer_body)
}

/// Binary format rewards: r_format1 = 1 iff both think and answer tag pairs
/// are present; r_format2 = 1 iff the answer body is a ranking list.
pub fn format_rewards(parsed: &ParsedRollout) -> (f64, f64) {
    (
        if parsed.has_think_and_answer {
            1.0
        } else {
            0.0
        },
        if parsed.answer_well_formed { 1.0 } else { 0.0 },
    )
}

/// Composite reward: 0.8 * r_rank + 0.1 * r_format1 + 0.1 * r_format2.
pub fn composite_reward(r_rank: f64, r_format1: f64, r_format2: f64) -> f64 {
    RANK_WEIGHT * r_rank + FORMAT_WEIGHT * r_format1 + FORMAT_WEIGHT * r_format2
}

/// All reward components for one scored rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_rerank: f64,
    pub r_init: f64,
    pub r_star: f64,
    pub r_rank: f64,
    pub r_format1: f64,
    pub r_format2: f64,
    pub r_total: f64,
}

/// Scores a parsed rollout against a candidate set at cutoff `k`.
pub fn score_rollout(
    parsed: &ParsedRollout,
    cs: &CandidateSet,
    qrels: &Qrels,
    mode: RewardMode,
    k: usize,
) -> Result<RewardBreakdown> {
    let r_rerank = ndcg_at_k(&parsed.permutation, cs, qrels, k)?;
    let r_init = initial_ndcg(cs, qrels, k);
    let r_star = best_achievable_ndcg(cs, qrels, k);
    let r_rank = mode.rank_reward(r_rerank, r_init, r_star);
    let (r_format1, r_format2) = format_rewards(parsed);
    Ok(RewardBreakdown {
        r_rerank,
        r_init,
        r_star,
        r_rank,
        r_format1,
        r_format2,
        r_total: composite_reward(r_rank, r_format1, r_format2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rollout::parse_response;
    use proptest::prelude::*;

    fn qrels_of(query_id: &str, grades: &[(&str, u32)]) -> Qrels {
        let mut q = Qrels::new();
        for (doc, g) in grades {
            q.insert(query_id, doc, *g).unwrap();
        }
        q
    }

    #[test]
    fn dcg_single_term() {
        assert_eq!(dcg_at_k(&[3], 10), 3.0);
    }

    #[test]
    fn dcg_hand_value() {
        // 0 + 2/log2(3) + 3/2
        assert!((dcg_at_k(&[0, 2, 3], 10) - 2.761859507142915).abs() < 1e-12);
    }

    #[test]
    fn dcg_empty_and_truncation() {
        assert_eq!(dcg_at_k(&[], 10), 0.0);
        assert_eq!(dcg_at_k(&[1, 1, 1], 1), 1.0);
    }

    #[test]
    fn ideal_dcg_hand_value() {
        let q = qrels_of("q1", &[("a", 3), ("b", 3), ("c", 2), ("d", 1), ("e", 0)]);
        // 3 + 3/log2(3) + 2/2 + 1/log2(5)
        assert!((ideal_dcg(&q, "q1", 10) - 6.323465818787765).abs() < 1e-12);
    }

    #[test]
    fn ideal_dcg_degenerate_cases() {
        let q = qrels_of("q1", &[("a", 0), ("b", 0)]);
        assert_eq!(ideal_dcg(&q, "q1", 10), 0.0);
        let q = qrels_of("q1", &[("a", 2)]);
        assert_eq!(ideal_dcg(&q, "q1", 10), 2.0);
        assert_eq!(ideal_dcg(&q, "missing", 10), 0.0);
    }

    #[test]
    fn ndcg_ideal_order_is_one() {
        let q = qrels_of("q1", &[("a", 3), ("b", 2), ("c", 0)]);
        let cs =
            CandidateSet::from_qrels("q1", vec!["a".into(), "b".into(), "c".into()], &q).unwrap();
        let ndcg = ndcg_at_k(&Permutation::identity(3), &cs, &q, 10).unwrap();
        assert!((ndcg - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ndcg_hand_value() {
        // Candidate order yields grades [0, 2, 3]; qrels are those three docs.
        let q = qrels_of("q1", &[("a", 0), ("b", 2), ("c", 3)]);
        let cs =
            CandidateSet::from_qrels("q1", vec!["a".into(), "b".into(), "c".into()], &q).unwrap();
        let ndcg = ndcg_at_k(&Permutation::identity(3), &cs, &q, 10).unwrap();
        assert!((ndcg - 0.6480409554829326).abs() < 1e-9);
    }

    #[test]
    fn ndcg_zero_ideal_guard() {
        let q = qrels_of("q1", &[("a", 0)]);
        let cs = CandidateSet::from_qrels("q1", vec!["a".into()], &q).unwrap();
        assert_eq!(
            ndcg_at_k(&Permutation::identity(1), &cs, &q, 10).unwrap(),
            0.0
        );
    }

    #[test]
    fn ndcg_rejects_mismatched_permutation() {
        let q = qrels_of("q1", &[("a", 1)]);
        let cs = CandidateSet::from_qrels("q1", vec!["a".into()], &q).unwrap();
        assert!(ndcg_at_k(&Permutation::identity(2), &cs, &q, 10).is_err());
    }

    #[test]
    fn best_achievable_hand_value() {
        // Candidates carry grades {2, 1, 0}; the query also has judged 3s
        // outside the candidate set.
        let q = qrels_of("q1", &[("x", 3), ("y", 3), ("a", 2), ("b", 1), ("c", 0)]);
        let cs =
            CandidateSet::from_qrels("q1", vec!["c".into(), "a".into(), "b".into()], &q).unwrap();
        let got = best_achievable_ndcg(&cs, &q, 10);
        assert!((got - 0.4160581916572798).abs() < 1e-9);
    }

    #[test]
    fn best_achievable_with_all_positives_is_one() {
        let q = qrels_of("q1", &[("a", 3), ("b", 1)]);
        let cs = CandidateSet::from_qrels("q1", vec!["b".into(), "a".into()], &q).unwrap();
        assert!((best_achievable_ndcg(&cs, &q, 10) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn best_achievable_all_zero_grades() {
        let q = qrels_of("q1", &[("z", 1)]);
        let cs = CandidateSet::new("q1", vec!["a".into(), "b".into()], vec![0, 0]).unwrap();
        assert_eq!(best_achievable_ndcg(&cs, &q, 10), 0.0);
    }

    #[test]
    fn ranking_reward_basics() {
        assert!((ranking_reward(0.75, 0.5, 1.0) - 0.5).abs() < 1e-12);
        assert_eq!(ranking_reward(0.5, 0.5, 1.0), 0.0);
        assert!((ranking_reward(1.0, 0.5, 1.0) - 1.0).abs() < 1e-12);
        // Degenerate: nothing improvable.
        assert_eq!(ranking_reward(0.7, 0.7, 0.7), 0.0);
        // Regressions stay negative.
        assert!(ranking_reward(0.25, 0.5, 1.0) < 0.0);
    }

    #[test]
    fn reward_modes() {
        assert_eq!(RewardMode::Absolute.rank_reward(0.6, 0.2, 0.8), 0.6);
        assert!((RewardMode::Difference.rank_reward(0.6, 0.2, 0.8) - 0.4).abs() < 1e-12);
        assert!((RewardMode::Normalized.rank_reward(0.6, 0.2, 0.8) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(
            "difference".parse::<RewardMode>().unwrap(),
            RewardMode::Difference
        );
        assert!("nope".parse::<RewardMode>().is_err());
    }

    #[test]
    fn format_reward_rules() {
        let p = parse_response("<think>x</think><answer>[3] > [1] >[2]</answer>", 3);
        assert_eq!(format_rewards(&p), (1.0, 1.0));

        let p = parse_response("<answer>[1] > [2]</answer>", 2);
        assert_eq!(format_rewards(&p), (0.0, 1.0));

        let p = parse_response("<think>x</think><answer>first, then third</answer>", 3);
        assert_eq!(format_rewards(&p), (1.0, 0.0));
    }

    #[test]
    fn ranking_list_shapes() {
        assert!(is_ranking_list("[1]"));
        assert!(is_ranking_list(" [3] > [1] >[2] "));
        assert!(is_ranking_list("[10] > [2]"));
        assert!(!is_ranking_list(""));
        assert!(!is_ranking_list("[1] >"));
        assert!(!is_ranking_list("1 > 2"));
        assert!(!is_ranking_list("[1] , [2]"));
    }

    #[test]
    fn composite_reward_values() {
        assert!((composite_reward(1.0, 1.0, 1.0) - 1.0).abs() < 1e-12);
        assert_eq!(composite_reward(0.0, 0.0, 0.0), 0.0);
        assert!((composite_reward(0.5, 1.0, 0.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn permutation_validation() {
        assert!(Permutation::from_one_based(vec![2, 1, 3]).is_ok());
        assert!(Permutation::from_one_based(vec![2, 2, 3]).is_err());
        assert!(Permutation::from_one_based(vec![0, 1]).is_err());
        assert!(Permutation::from_one_based(vec![1, 4, 2]).is_err());
        assert!(Permutation::identity(3).is_identity());
    }

    proptest! {
        /// NDCG stays in [0, 1] for any grades/permutation/qrels layout that
        /// grades candidates from the query's judged set.
        #[test]
        fn ndcg_in_unit_interval(
            grades in proptest::collection::vec(0u32..=3, 1..8),
            extra in proptest::collection::vec(0u32..=3, 0..4),
            seed in 0u64..1000,
        ) {
            let n = grades.len();
            let mut q = Qrels::new();
            let mut doc_ids = Vec::new();
            for (i, g) in grades.iter().enumerate() {
                let id = format!("d{i}");
                q.insert("q", &id, *g).unwrap();
                doc_ids.push(id);
            }
            for (i, g) in extra.iter().enumerate() {
                q.insert("q", &format!("x{i}"), *g).unwrap();
            }
            let cs = CandidateSet::from_qrels("q", doc_ids, &q).unwrap();
            // Deterministic pseudo-random permutation from the seed.
            let mut order: Vec<usize> = (1..=n).collect();
            let mut s = seed.wrapping_add(0x9e3779b97f4a7c15);
            for i in (1..n).rev() {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                order.swap(i, (s as usize) % (i + 1));
            }
            let perm = Permutation::from_one_based(order).unwrap();
            let v = ndcg_at_k(&perm, &cs, &q, 10).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
            let best = best_achievable_ndcg(&cs, &q, 10);
            prop_assert!(v <= best + 1e-12);
        }

        /// Min-max normalization is invariant to affine rescaling.
        #[test]
        fn ranking_reward_affine_invariant(
            r_init in 0.0f64..0.9,
            gap in 0.01f64..0.5,
            frac in -0.5f64..1.5,
            a in 0.1f64..10.0,
            c in -5.0f64..5.0,
        ) {
            let r_star = (r_init + gap).min(1.0);
            let r_rerank = r_init + frac * (r_star - r_init);
            let base = ranking_reward(r_rerank, r_init, r_star);
            let scaled = ranking_reward(a * r_rerank + c, a * r_init + c, a * r_star + c);
            prop_assert!((base - scaled).abs() < 1e-6, "base={base} scaled={scaled}");
        }

        /// Composite reward is monotone nondecreasing in each argument.
        #[test]
        fn composite_monotone(
            r1 in -1.0f64..1.0,
            r2 in -1.0f64..1.0,
            f1 in 0u8..=1,
            f2 in 0u8..=1,
        ) {
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            let f1 = f1 as f64;
            let f2 = f2 as f64;
            prop_assert!(composite_reward(lo, f1, f2) <= composite_reward(hi, f1, f2) + 1e-12);
            prop_assert!(composite_reward(lo, 0.0, f2) <= composite_reward(lo, 1.0, f2));
            prop_assert!(composite_reward(lo, f1, 0.0) <= composite_reward(lo, f1, 1.0));
        }
    }
}
