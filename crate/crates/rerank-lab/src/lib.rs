//! A listwise-reranking laboratory.
//!
//! End-to-end tooling for sliding-window listwise reranking experiments on
//! TREC-format data: BM25 first-stage retrieval, window orchestration over
//! pluggable ranker backends (chat-completion HTTP endpoint or deterministic
//! synthetic rankers), NDCG-based reward shaping with format rewards,
//! GRPO advantage/objective math, and training-data synthesis by
//! initial-state expansion.

pub mod bm25;
pub mod data;
pub mod engine;
pub mod error;
pub mod eval;
pub mod grpo;
pub mod http;
pub mod metrics;
pub mod porter;
pub mod rollout;
pub mod seeding;
pub mod synth;

pub use error::{BackendError, Error, Result};
