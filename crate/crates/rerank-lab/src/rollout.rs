//! Prompt construction and response parsing for listwise ranking calls.
//!
//! A ranking call is a chat message sequence: a system prompt, one
//! user/assistant turn per passage (`[i] <passage>` / `Received passage
//! [i].`), and a post prompt carrying the query and the output format
//! instructions. Two styles are built in: a reasoning style that asks for
//! `<think>`/`<answer>` blocks and a zero-shot style that asks for the bare
//! ranking list.
//!
//! Parsing never fails: whatever the model returns is reduced to a valid
//! permutation of the window, with format flags recording how well-formed
//! the output was.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::data::Query;
use crate::metrics::{self, Permutation};

/// Default passage truncation, in whitespace tokens.
pub const DEFAULT_TRUNCATE_TOKENS: usize = 512;

pub const REASONING_SYSTEM_TEMPLATE: &str = "You are DeepRerank, an intelligent assistant that can rank passages based on their relevancy to the search query. You first thinks about the reasoning process in the mind and then provides the user with the answer.\n\nI will provide you with passages, each indicated by number identifier []. Rank the passages based on their relevance to the search query.\nSearch Query: [QUERY].\nRank the [NUM] passages above based on their relevance to the search query.\nThe passages should be listed in descending order using identifiers. The most relevant passages should be listed first. The output format should be <answer> [] > [] </answer>, e.g., <answer> [1] > [2] </answer>.";

pub const REASONING_POST_TEMPLATE: &str = "Please rank these passages according to their relevance to the search query: \"[QUERY]\"\nFollow these steps exactly:\n1. First, within <think> tags, analyze EACH passage individually:\n   - Evaluate how well it addresses the query\n   - Note specific relevant information\n2. Then, within <answer> tags, provide ONLY the final ranking in descending order of relevance using the format: [X] > [Y] > [Z]";

pub const ZERO_SHOT_SYSTEM_TEMPLATE: &str = "You are RankGPT, an intelligent assistant that can rank passages based on their relevancy to the query. I will provide you with [NUM] passages, each indicated by number identifier [].\nRank the passages based on their relevance to query: [QUERY].";

pub const ZERO_SHOT_POST_TEMPLATE: &str = "Search Query: [QUERY].\nRank the [NUM] passages above based on their relevance to the search query. The passages should be listed in descending order using identifiers. The most relevant passages should be listed first. The output format should be [] > [], e.g., [1] > [2]. Only response the ranking results, do not say any word or explain.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// The full chat transcript sent to a ranker backend.
pub type MessageSequence = Vec<ChatMessage>;

/// Which prompt template family to render.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStyle {
    #[default]
    Reasoning,
    ZeroShot,
}

impl std::str::FromStr for PromptStyle {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reasoning" => Ok(Self::Reasoning),
            "zero_shot" | "zero-shot" => Ok(Self::ZeroShot),
            other => Err(crate::error::Error::InvalidConfig(format!(
                "unknown prompt style {other:?} (expected reasoning|zero_shot)"
            ))),
        }
    }
}

/// Truncates to the first `max_tokens` whitespace tokens. Text within the
/// budget is returned unchanged.
pub fn truncate_tokens(text: &str, max_tokens: usize) -> String {
    let mut iter = text.split_whitespace();
    let count = iter.by_ref().take(max_tokens + 1).count();
    if count <= max_tokens {
        return text.to_string();
    }
    text.split_whitespace()
        .take(max_tokens)
        .collect::<Vec<_>>()
        .join(" ")
}

fn fill(template: &str, query: &str, num: usize) -> String {
    template
        .replace("[QUERY]", query)
        .replace("[NUM]", &num.to_string())
}

/// Renders the message sequence for one window of passages.
///
/// Layout: system prompt, then per passage a `[i] <text>` user turn and a
/// `Received passage [i].` assistant turn, then the style's post prompt.
pub fn build_messages(
    passages: &[impl AsRef<str>],
    query: &Query,
    style: PromptStyle,
    truncate: usize,
) -> MessageSequence {
    let num = passages.len();
    let (system_t, post_t) = match style {
        PromptStyle::Reasoning => (REASONING_SYSTEM_TEMPLATE, REASONING_POST_TEMPLATE),
        PromptStyle::ZeroShot => (ZERO_SHOT_SYSTEM_TEMPLATE, ZERO_SHOT_POST_TEMPLATE),
    };
    let mut messages = Vec::with_capacity(2 * num + 2);
    messages.push(ChatMessage::system(fill(system_t, &query.text, num)));
    for (i, passage) in passages.iter().enumerate() {
        let rank = i + 1;
        let body = truncate_tokens(passage.as_ref(), truncate);
        messages.push(ChatMessage::user(format!("[{rank}] {body}")));
        messages.push(ChatMessage::assistant(format!(
            "Received passage [{rank}]."
        )));
    }
    messages.push(ChatMessage::user(fill(post_t, &query.text, num)));
    messages
}

/// A model response reduced to a usable permutation plus format flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRollout {
    pub think_text: Option<String>,
    pub answer_text: Option<String>,
    /// Bracketed integers exactly as written, before any repair.
    pub raw_indices: Vec<u64>,
    /// Always a valid permutation of 1..=n.
    pub permutation: Permutation,
    /// Both think and answer tag pairs present.
    pub has_think_and_answer: bool,
    /// Answer body matches the `[i] > [j] > ...` list format.
    pub answer_well_formed: bool,
    /// The raw indices needed repair to become a valid permutation.
    pub repaired: bool,
}

static BRACKET_INT_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[(\d+)\]").unwrap());

/// Extracts the first `<tag>...</tag>` span. Trained models sometimes close
/// with `<|tag|>` instead, so both closers are accepted.
fn extract_span<'a>(text: &'a str, tag: &str) -> Option<&'a str> {
    let open = format!("<{tag}>");
    let start = text.find(&open)? + open.len();
    let rest = &text[start..];
    let closers = [format!("</{tag}>"), format!("<|{tag}|>")];
    let end = closers.iter().filter_map(|c| rest.find(c.as_str())).min()?;
    Some(&rest[..end])
}

/// Pulls the bracketed integer identifiers out of a span, in order.
fn bracketed_integers(text: &str) -> Vec<u64> {
    BRACKET_INT_RE
        .captures_iter(text)
        .map(|c| c[1].parse::<u64>().unwrap_or(u64::MAX))
        .collect()
}

/// Parses a raw model response for a window of size `n`. Never fails:
/// unparseable text yields format flags 0 and the identity permutation.
///
/// Ranking indices are taken from the `<answer>` body when present; a bare
/// response without tags (the zero-shot output format) is scanned whole.
/// Format flags follow the reward rules either way.
pub fn parse_response(text: &str, n: usize) -> ParsedRollout {
    let think_text = extract_span(text, "think").map(str::to_string);
    let answer_text = extract_span(text, "answer").map(str::to_string);

    let raw_indices = match &answer_text {
        Some(body) => bracketed_integers(body),
        None => bracketed_integers(text),
    };

    let has_think_and_answer = think_text.is_some() && answer_text.is_some();
    let answer_well_formed = answer_text.as_deref().is_some_and(metrics::is_ranking_list);

    let permutation = repair_permutation(&raw_indices, n);
    let repaired = raw_indices.len() != n
        || raw_indices
            .iter()
            .zip(permutation.order())
            .any(|(&raw, &fixed)| raw != fixed as u64);

    ParsedRollout {
        think_text,
        answer_text,
        raw_indices,
        permutation,
        has_think_and_answer,
        answer_well_formed,
        repaired,
    }
}

/// Repairs raw ranking indices into a valid permutation of 1..=n: drops
/// out-of-range indices, keeps the first occurrence of duplicates, and
/// appends missing indices in ascending order.
pub fn repair_permutation(raw_indices: &[u64], n: usize) -> Permutation {
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for &raw in raw_indices {
        if raw == 0 || raw > n as u64 {
            continue;
        }
        let idx = raw as usize;
        if !seen[idx - 1] {
            seen[idx - 1] = true;
            order.push(idx);
        }
    }
    for (i, present) in seen.iter().enumerate() {
        if !present {
            order.push(i + 1);
        }
    }
    Permutation::from_one_based(order).expect("repair yields a valid permutation")
}

/// Formats a permutation as the answer list, e.g. `[2] > [1] > [3]`.
pub fn format_ranking(perm: &Permutation) -> String {
    perm.order()
        .iter()
        .map(|i| format!("[{i}]"))
        .collect::<Vec<_>>()
        .join(" > ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn query() -> Query {
        Query {
            query_id: "q1".into(),
            text: "how do sliding windows work".into(),
        }
    }

    #[test]
    fn message_layout_two_passages() {
        let msgs = build_messages(
            &["first text", "second text"],
            &query(),
            PromptStyle::Reasoning,
            512,
        );
        assert_eq!(msgs.len(), 6);
        assert_eq!(msgs[0].role, Role::System);
        assert_eq!(msgs[1].content, "[1] first text");
        assert_eq!(msgs[2].content, "Received passage [1].");
        assert_eq!(msgs[3].content, "[2] second text");
        assert_eq!(msgs[4].content, "Received passage [2].");
        assert_eq!(msgs[5].role, Role::User);
        assert!(msgs[5].content.contains("how do sliding windows work"));
    }

    #[test]
    fn reasoning_system_prompt_substitutes_query_and_count() {
        let msgs = build_messages(&["a", "b", "c"], &query(), PromptStyle::Reasoning, 512);
        assert!(msgs[0].content.starts_with("You are DeepRerank"));
        assert!(msgs[0]
            .content
            .contains("Search Query: how do sliding windows work."));
        assert!(msgs[0].content.contains("Rank the 3 passages"));
        assert!(!msgs[0].content.contains("[QUERY]"));
        assert!(!msgs[0].content.contains("[NUM]"));
    }

    #[test]
    fn zero_shot_post_prompt_wording() {
        let msgs = build_messages(&["a", "b"], &query(), PromptStyle::ZeroShot, 512);
        assert!(msgs[0].content.starts_with("You are RankGPT"));
        let post = &msgs.last().unwrap().content;
        assert!(post.contains("Only response the ranking results"));
        assert!(post.contains("do not say any word"));
    }

    #[test]
    fn short_passage_untruncated() {
        let msgs = build_messages(
            &["only three tokens"],
            &query(),
            PromptStyle::Reasoning,
            512,
        );
        assert_eq!(msgs[1].content, "[1] only three tokens");
    }

    #[test]
    fn long_passage_truncated() {
        let text = (0..600)
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        let out = truncate_tokens(&text, 512);
        assert_eq!(out.split_whitespace().count(), 512);
        assert!(out.ends_with("511"));
        // Within budget: returned byte-identical, whitespace preserved.
        assert_eq!(truncate_tokens("a  b", 512), "a  b");
    }

    #[test]
    fn build_is_deterministic() {
        let a = build_messages(&["x", "y"], &query(), PromptStyle::Reasoning, 512);
        let b = build_messages(&["x", "y"], &query(), PromptStyle::Reasoning, 512);
        assert_eq!(a, b);
    }

    #[test]
    fn parse_well_formed() {
        let p = parse_response("<think>t</think><answer>[2] > [1]</answer>", 2);
        assert_eq!(p.permutation.order(), &[2, 1]);
        assert!(p.has_think_and_answer);
        assert!(p.answer_well_formed);
        assert!(!p.repaired);
        assert_eq!(p.think_text.as_deref(), Some("t"));
    }

    #[test]
    fn parse_garbage_falls_back_to_identity() {
        let p = parse_response("no ranking here at all", 3);
        assert!(p.permutation.is_identity());
        assert!(!p.has_think_and_answer);
        assert!(!p.answer_well_formed);
        assert!(p.repaired);
    }

    #[test]
    fn parse_duplicates_and_out_of_range() {
        let p = parse_response("<think>t</think><answer>[2] > [2] > [9]</answer>", 3);
        assert_eq!(p.raw_indices, vec![2, 2, 9]);
        assert_eq!(p.permutation.order(), &[2, 1, 3]);
        // The shape still matches the list format even though indices are bad.
        assert!(p.answer_well_formed);
        assert!(p.repaired);
    }

    #[test]
    fn parse_bare_list_without_tags() {
        // Zero-shot responses carry no tags; the permutation is still usable
        // but both format flags stay 0.
        let p = parse_response("[3] > [1] > [2]", 3);
        assert_eq!(p.permutation.order(), &[3, 1, 2]);
        assert!(!p.has_think_and_answer);
        assert!(!p.answer_well_formed);
    }

    #[test]
    fn parse_accepts_pipe_closers() {
        let p = parse_response("<think>t<|think|><answer>[1] > [2]<|answer|>", 2);
        assert!(p.has_think_and_answer);
        assert_eq!(p.permutation.order(), &[1, 2]);
        assert!(p.answer_well_formed);
    }

    #[test]
    fn parse_unclosed_tag_is_absent() {
        let p = parse_response("<think>t</think><answer>[2] > [1]", 2);
        assert!(!p.has_think_and_answer);
        assert!(p.answer_text.is_none());
        // Bracketed integers are still scavenged from the raw text.
        assert_eq!(p.permutation.order(), &[2, 1]);
    }

    #[test]
    fn parse_huge_numbers_do_not_panic() {
        let p = parse_response("<answer>[99999999999999999999999] > [1]</answer>", 2);
        assert_eq!(p.permutation.order(), &[1, 2]);
    }

    #[test]
    fn repair_rules() {
        assert_eq!(repair_permutation(&[2, 2, 9], 3).order(), &[2, 1, 3]);
        assert_eq!(repair_permutation(&[3, 1, 2], 3).order(), &[3, 1, 2]);
        assert_eq!(repair_permutation(&[], 2).order(), &[1, 2]);
        assert_eq!(repair_permutation(&[0, 4], 3).order(), &[1, 2, 3]);
    }

    #[test]
    fn round_trip_formatting() {
        let perm = Permutation::from_one_based(vec![3, 1, 2]).unwrap();
        let text = format!(
            "<think>ok</think><answer>{}</answer>",
            format_ranking(&perm)
        );
        let p = parse_response(&text, 3);
        assert_eq!(p.permutation, perm);
        assert!(p.answer_well_formed);
        assert!(!p.repaired);
    }

    proptest! {
        /// Whatever the input, parsing yields a valid permutation of 1..=n.
        #[test]
        fn parse_never_fails(text in ".{0,200}", n in 1usize..=12) {
            let p = parse_response(&text, n);
            prop_assert_eq!(p.permutation.len(), n);
            let mut sorted = p.permutation.order().to_vec();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (1..=n).collect::<Vec<_>>());
        }

        /// Repair is idempotent.
        #[test]
        fn repair_idempotent(raw in proptest::collection::vec(0u64..16, 0..16), n in 1usize..=10) {
            let once = repair_permutation(&raw, n);
            let raw_again: Vec<u64> = once.order().iter().map(|&i| i as u64).collect();
            let twice = repair_permutation(&raw_again, n);
            prop_assert_eq!(once, twice);
        }

        /// Formatting a valid permutation and re-parsing recovers it with the
        /// well-formed answer flag set.
        #[test]
        fn round_trip_any_permutation(seed in 0u64..500, n in 1usize..=20) {
            let mut order: Vec<usize> = (1..=n).collect();
            let mut s = seed.wrapping_add(1);
            for i in (1..n).rev() {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                order.swap(i, (s as usize) % (i + 1));
            }
            let perm = Permutation::from_one_based(order).unwrap();
            let text = format!("<answer>{}</answer>", format_ranking(&perm));
            let p = parse_response(&text, n);
            prop_assert_eq!(p.permutation, perm);
            prop_assert!(p.answer_well_formed);
        }
    }
}
