//! Training-data synthesis by initial-state expansion.
//!
//! Each annotated query is expanded into many training instances by drawing
//! independent uniform samples without replacement from its BM25 top-100
//! pool; the draw order of each sample is kept as the initial ranking, so
//! one query yields many distinct (candidate set, initial order) states
//! scored against the same judgments.
//!
//! Two filters curate the output: instances whose candidates carry no
//! positive grade are dropped, and instances whose score (initial or best
//! achievable NDCG@10, configurable) falls below a threshold are dropped.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{write_atomic, Qrels, Query};
use crate::error::{Error, Result};
use crate::metrics::{best_achievable_ndcg, initial_ndcg, CandidateSet};
use crate::seeding;

/// NDCG cutoff used for instance scoring.
pub const NDCG_CUTOFF: usize = 10;

/// Which score the threshold filter inspects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterOn {
    Initial,
    #[default]
    BestAchievable,
}

impl std::str::FromStr for FilterOn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "initial" => Ok(Self::Initial),
            "best_achievable" | "best-achievable" => Ok(Self::BestAchievable),
            other => Err(Error::InvalidConfig(format!(
                "unknown filter target {other:?} (expected initial|best_achievable)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SynthConfig {
    /// Candidates per sampled instance.
    pub m: usize,
    /// Samples drawn per query.
    pub repeats: usize,
    /// Drop instances with no positively graded candidate.
    pub filter_relevant: bool,
    /// Keep only instances whose selected score is at least this; 0 disables.
    pub filter_threshold: f64,
    pub filter_on: FilterOn,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            m: 20,
            repeats: 50,
            filter_relevant: true,
            filter_threshold: 0.1,
            filter_on: FilterOn::default(),
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 || self.m > 100 {
            return Err(Error::InvalidConfig(format!(
                "m must be in 1..=100, got {}",
                self.m
            )));
        }
        if self.repeats < 1 {
            return Err(Error::InvalidConfig("repeats must be >= 1".into()));
        }
        Ok(())
    }
}

/// One synthesized training record: a sampled candidate list in draw order
/// with its grades and reward normalizers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingInstance {
    pub query_id: String,
    pub query: String,
    pub doc_ids: Vec<String>,
    pub grades: Vec<u32>,
    pub r_init: f64,
    pub r_star: f64,
    pub sample_seed: u64,
}

impl TrainingInstance {
    pub fn candidate_set(&self) -> Result<CandidateSet> {
        CandidateSet::new(
            self.query_id.clone(),
            self.doc_ids.clone(),
            self.grades.clone(),
        )
    }
}

/// Uniform ordered sample without replacement: the first `m` entries of a
/// partial Fisher-Yates shuffle.
fn sample_without_replacement<'a>(
    pool: &'a [String],
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<&'a String> {
    let mut indices: Vec<usize> = (0..pool.len()).collect();
    for i in 0..m {
        let j = rng.random_range(i..indices.len());
        indices.swap(i, j);
    }
    indices[..m].iter().map(|&i| &pool[i]).collect()
}

/// Whether an instance survives the configured filters.
pub fn filter_instance(inst: &TrainingInstance, cfg: &SynthConfig) -> bool {
    if cfg.filter_relevant && inst.grades.iter().all(|&g| g == 0) {
        return false;
    }
    let score = match cfg.filter_on {
        FilterOn::Initial => inst.r_init,
        FilterOn::BestAchievable => inst.r_star,
    };
    score >= cfg.filter_threshold
}

/// Expands one query into up to `repeats` training instances sampled from
/// its retrieval pool. Deterministic given the seed: each repeat draws from
/// a seed derived from (root seed, query_id, repeat index).
pub fn expand_states(
    query: &Query,
    qrels: &Qrels,
    pool: &[String],
    cfg: &SynthConfig,
) -> Result<Vec<TrainingInstance>> {
    cfg.validate()?;
    if pool.len() < cfg.m {
        return Err(Error::InvalidConfig(format!(
            "query {:?} has {} retrievable candidates, need m={}",
            query.query_id,
            pool.len(),
            cfg.m
        )));
    }

    let mut out = Vec::new();
    for rep in 0..cfg.repeats {
        let sample_seed = seeding::derive_seed(cfg.seed, &query.query_id, rep as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
        let doc_ids: Vec<String> = sample_without_replacement(pool, cfg.m, &mut rng)
            .into_iter()
            .cloned()
            .collect();
        let cs = CandidateSet::from_qrels(query.query_id.clone(), doc_ids, qrels)?;
        let inst = TrainingInstance {
            query_id: query.query_id.clone(),
            query: query.text.clone(),
            r_init: initial_ndcg(&cs, qrels, NDCG_CUTOFF),
            r_star: best_achievable_ndcg(&cs, qrels, NDCG_CUTOFF),
            doc_ids: cs.doc_ids,
            grades: cs.grades,
            sample_seed,
        };
        if filter_instance(&inst, cfg) {
            out.push(inst);
        }
    }
    Ok(out)
}

/// Serializes instances as JSON Lines.
pub fn instances_to_jsonl(instances: &[TrainingInstance]) -> String {
    let mut out = String::new();
    for inst in instances {
        out.push_str(&serde_json::to_string(inst).expect("instance serializes"));
        out.push('\n');
    }
    out
}

pub fn write_instances(instances: &[TrainingInstance], path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), instances_to_jsonl(instances).as_bytes())
}

/// Reads a JSON Lines instance file.
pub fn load_instances(path: impl AsRef<Path>) -> Result<Vec<TrainingInstance>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let inst: TrainingInstance = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push(inst);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(num_pool: usize, positives: &[(usize, u32)]) -> (Query, Qrels, Vec<String>) {
        let query = Query {
            query_id: "q1".into(),
            text: "test query".into(),
        };
        let pool: Vec<String> = (0..num_pool).map(|i| format!("d{i}")).collect();
        let mut qrels = Qrels::new();
        for &(i, g) in positives {
            qrels.insert("q1", &format!("d{i}"), g).unwrap();
        }
        (query, qrels, pool)
    }

    #[test]
    fn deterministic_given_seed() {
        let (query, qrels, pool) = setup(100, &[(0, 3), (5, 2), (17, 1), (40, 3)]);
        let cfg = SynthConfig {
            repeats: 10,
            ..Default::default()
        };
        let a = expand_states(&query, &qrels, &pool, &cfg).unwrap();
        let b = expand_states(&query, &qrels, &pool, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(instances_to_jsonl(&a), instances_to_jsonl(&b));
    }

    #[test]
    fn no_duplicates_within_instance() {
        let (query, qrels, pool) = setup(50, &[(0, 3), (1, 2)]);
        let cfg = SynthConfig {
            m: 20,
            repeats: 20,
            filter_threshold: 0.0,
            ..Default::default()
        };
        for inst in expand_states(&query, &qrels, &pool, &cfg).unwrap() {
            let mut ids = inst.doc_ids.clone();
            ids.sort();
            ids.dedup();
            assert_eq!(ids.len(), inst.doc_ids.len());
            assert!(inst.doc_ids.iter().all(|d| pool.contains(d)));
        }
    }

    #[test]
    fn r_star_dominates_r_init() {
        let (query, qrels, pool) = setup(60, &[(0, 3), (3, 1), (9, 2), (12, 3), (33, 1)]);
        let cfg = SynthConfig {
            repeats: 30,
            filter_threshold: 0.0,
            filter_relevant: false,
            ..Default::default()
        };
        let instances = expand_states(&query, &qrels, &pool, &cfg).unwrap();
        assert_eq!(instances.len(), 30);
        for inst in instances {
            assert!(inst.r_star >= inst.r_init - 1e-12);
        }
    }

    #[test]
    fn distinct_sample_seeds() {
        let (query, qrels, pool) = setup(40, &[(0, 3)]);
        let cfg = SynthConfig {
            repeats: 25,
            filter_threshold: 0.0,
            filter_relevant: false,
            ..Default::default()
        };
        let instances = expand_states(&query, &qrels, &pool, &cfg).unwrap();
        let mut seeds: Vec<u64> = instances.iter().map(|i| i.sample_seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 25);
    }

    #[test]
    fn filters_off_keep_everything() {
        let (query, qrels, pool) = setup(30, &[]);
        let cfg = SynthConfig {
            repeats: 15,
            filter_relevant: false,
            filter_threshold: 0.0,
            ..Default::default()
        };
        assert_eq!(
            expand_states(&query, &qrels, &pool, &cfg).unwrap().len(),
            15
        );
    }

    #[test]
    fn no_positives_all_filtered() {
        let (query, qrels, pool) = setup(30, &[]);
        let cfg = SynthConfig {
            repeats: 15,
            ..Default::default()
        };
        assert!(expand_states(&query, &qrels, &pool, &cfg)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn threshold_filter_on_best_achievable() {
        let inst = TrainingInstance {
            query_id: "q".into(),
            query: "t".into(),
            doc_ids: vec!["a".into()],
            grades: vec![3],
            r_init: 0.02,
            r_star: 0.05,
            sample_seed: 1,
        };
        let cfg = SynthConfig::default();
        assert!(!filter_instance(&inst, &cfg), "r_star below 0.1 drops");
        let keep = TrainingInstance {
            r_star: 0.9,
            ..inst.clone()
        };
        assert!(filter_instance(&keep, &cfg));
        let on_init = SynthConfig {
            filter_on: FilterOn::Initial,
            ..cfg
        };
        assert!(
            !filter_instance(&keep, &on_init),
            "r_init 0.02 drops under initial filter"
        );
    }

    #[test]
    fn pool_too_small() {
        let (query, qrels, pool) = setup(10, &[(0, 1)]);
        let cfg = SynthConfig::default();
        assert!(matches!(
            expand_states(&query, &qrels, &pool, &cfg).unwrap_err(),
            Error::InvalidConfig(_)
        ));
    }

    #[test]
    fn jsonl_round_trip() {
        let (query, qrels, pool) = setup(25, &[(0, 3), (2, 1)]);
        let cfg = SynthConfig {
            m: 5,
            repeats: 4,
            filter_threshold: 0.0,
            ..Default::default()
        };
        let instances = expand_states(&query, &qrels, &pool, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.jsonl");
        write_instances(&instances, &path).unwrap();
        assert_eq!(load_instances(&path).unwrap(), instances);
    }
}
