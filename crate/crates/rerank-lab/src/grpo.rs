//! Group-relative policy optimization math, as verifiable numeric values.
//!
//! Advantages are z-scores of rewards within a rollout group:
//!
//! ```text
//! A_i = (r_i - mean(r)) / std(r)
//! ```
//!
//! with population std by default and all-zero advantages when the group is
//! degenerate. The per-token loss uses the detached-ratio form, whose ratio
//! factor is identically 1 in value, and a k3 KL estimate against a fixed
//! reference policy:
//!
//! ```text
//! kl(t)  = exp(logp_ref - logp_theta) - (logp_ref - logp_theta) - 1
//! l_it   = A_i - beta * kl(t)
//! J      = -(1/|G|) sum_i (1/|o_i|) sum_t l_it
//! ```
//!
//! This module computes values only; no gradients or parameter updates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_STD_EPSILON: f64 = 1e-8;
pub const DEFAULT_BETA: f64 = 0.04;

/// One sampled output with its reward and an optional per-token log-prob
/// trace. Serialized one-per-line in group files, with the trace as two
/// parallel arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    #[serde(default)]
    pub response: String,
    pub reward: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logp_theta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logp_ref: Option<Vec<f64>>,
}

impl Rollout {
    /// Checks trace shape: both arrays present together, equal nonzero
    /// lengths, finite, and nonpositive.
    pub fn validate_trace(&self) -> Result<()> {
        match (&self.logp_theta, &self.logp_ref) {
            (None, None) => Ok(()),
            (Some(t), Some(r)) => {
                if t.len() != r.len() {
                    return Err(Error::InvalidConfig(format!(
                        "trace length mismatch: logp_theta has {}, logp_ref has {}",
                        t.len(),
                        r.len()
                    )));
                }
                if t.is_empty() {
                    return Err(Error::InvalidConfig("empty token trace".into()));
                }
                for &v in t.iter().chain(r.iter()) {
                    if !v.is_finite() {
                        return Err(Error::NonFinite(format!("log-probability {v}")));
                    }
                    if v > 0.0 {
                        return Err(Error::InvalidConfig(format!(
                            "log-probability {v} is positive"
                        )));
                    }
                }
                Ok(())
            }
            _ => Err(Error::InvalidConfig(
                "logp_theta and logp_ref must be given together".into(),
            )),
        }
    }
}

/// G rollouts sampled for one input.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RolloutGroup {
    /// Descriptor of the input (query plus window), for reports.
    #[serde(default)]
    pub input: String,
    pub rollouts: Vec<Rollout>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrpoConfig {
    /// KL penalty coefficient.
    pub beta: f64,
    /// Below this population/sample std the group counts as degenerate.
    pub std_epsilon: f64,
    /// Use the sample (n-1) standard deviation instead of population.
    pub sample_std: bool,
}

impl Default for GrpoConfig {
    fn default() -> Self {
        Self {
            beta: DEFAULT_BETA,
            std_epsilon: DEFAULT_STD_EPSILON,
            sample_std: false,
        }
    }
}

impl GrpoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beta < 0.0 || self.beta.is_nan() {
            return Err(Error::InvalidConfig(format!(
                "beta must be >= 0, got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

fn advantages_impl(rewards: &[f64], std_epsilon: f64, sample_std: bool) -> Result<Vec<f64>> {
    if rewards.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "a rollout group needs at least 2 rewards, got {}",
            rewards.len()
        )));
    }
    for &r in rewards {
        if !r.is_finite() {
            return Err(Error::NonFinite(format!("reward {r}")));
        }
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let denom = if sample_std { n - 1.0 } else { n };
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / denom;
    let std = var.sqrt();
    if std < std_epsilon {
        return Ok(vec![0.0; rewards.len()]);
    }
    Ok(rewards.iter().map(|r| (r - mean) / std).collect())
}

/// Z-score advantages with population std; all zeros for degenerate groups.
pub fn group_advantages(rewards: &[f64]) -> Result<Vec<f64>> {
    advantages_impl(rewards, DEFAULT_STD_EPSILON, false)
}

/// Per-token k3 KL estimate of the current policy against the reference:
/// exp(d) - d - 1 with d = logp_ref - logp_theta. Nonnegative, and zero iff
/// the log-probabilities agree.
pub fn kl_value(logp_theta: f64, logp_ref: f64) -> Result<f64> {
    if !logp_theta.is_finite() || !logp_ref.is_finite() {
        return Err(Error::NonFinite(format!(
            "kl_value inputs ({logp_theta}, {logp_ref})"
        )));
    }
    let d = logp_ref - logp_theta;
    Ok((d.exp_m1() - d).max(0.0))
}

/// The objective value and its pieces for one group.
#[derive(Debug, Clone, Serialize)]
pub struct GrpoOutcome {
    pub objective: f64,
    pub advantages: Vec<f64>,
    pub token_losses: Vec<Vec<f64>>,
}

/// Evaluates the token-level objective over a rollout group. Every rollout
/// must carry a token trace.
pub fn grpo_objective(group: &RolloutGroup, cfg: &GrpoConfig) -> Result<GrpoOutcome> {
    cfg.validate()?;
    for (i, r) in group.rollouts.iter().enumerate() {
        r.validate_trace()?;
        if r.logp_theta.is_none() {
            return Err(Error::InvalidConfig(format!(
                "rollout {i} is missing its token trace"
            )));
        }
    }
    let rewards: Vec<f64> = group.rollouts.iter().map(|r| r.reward).collect();
    let advantages = advantages_impl(&rewards, cfg.std_epsilon, cfg.sample_std)?;

    let mut token_losses = Vec::with_capacity(group.rollouts.len());
    let mut objective = 0.0;
    for (rollout, &adv) in group.rollouts.iter().zip(&advantages) {
        let theta = rollout.logp_theta.as_ref().unwrap();
        let reference = rollout.logp_ref.as_ref().unwrap();
        let mut losses = Vec::with_capacity(theta.len());
        let mut sum = 0.0;
        for (&t, &r) in theta.iter().zip(reference) {
            let l = adv - cfg.beta * kl_value(t, r)?;
            losses.push(l);
            sum += l;
        }
        objective -= sum / theta.len() as f64;
        token_losses.push(losses);
    }
    objective /= group.rollouts.len() as f64;

    Ok(GrpoOutcome {
        objective,
        advantages,
        token_losses,
    })
}

/// Parses a JSON Lines group file: one rollout object per line.
pub fn load_group(path: impl AsRef<std::path::Path>) -> Result<RolloutGroup> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rollouts = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rollout: Rollout = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        rollout.validate_trace().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        rollouts.push(rollout);
    }
    Ok(RolloutGroup {
        input: path.display().to_string(),
        rollouts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn traced(reward: f64, theta: &[f64], reference: &[f64]) -> Rollout {
        Rollout {
            response: String::new(),
            reward,
            logp_theta: Some(theta.to_vec()),
            logp_ref: Some(reference.to_vec()),
        }
    }

    #[test]
    fn advantages_two_point() {
        let a = group_advantages(&[0.0, 1.0]).unwrap();
        assert!((a[0] + 1.0).abs() < 1e-12);
        assert!((a[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn advantages_degenerate_group() {
        assert_eq!(
            group_advantages(&[0.5, 0.5, 0.5]).unwrap(),
            vec![0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn advantages_three_point() {
        let a = group_advantages(&[1.0, 2.0, 3.0]).unwrap();
        assert!((a[0] + 1.224744871391589).abs() < 1e-12);
        assert!(a[1].abs() < 1e-12);
        assert!((a[2] - 1.224744871391589).abs() < 1e-12);
    }

    #[test]
    fn advantages_need_two() {
        assert!(group_advantages(&[1.0]).is_err());
        assert!(group_advantages(&[]).is_err());
    }

    #[test]
    fn sample_std_variant() {
        let a = advantages_impl(&[1.0, 2.0, 3.0], DEFAULT_STD_EPSILON, true).unwrap();
        // sample std = 1.0 exactly
        assert!((a[0] + 1.0).abs() < 1e-12);
        assert!((a[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kl_zero_for_equal_policies() {
        assert_eq!(kl_value(-1.5, -1.5).unwrap(), 0.0);
    }

    #[test]
    fn kl_hand_values() {
        let ln2 = std::f64::consts::LN_2;
        // logp_ref - logp_theta = ln 2
        let k = kl_value(-2.0 - ln2, -2.0).unwrap();
        assert!((k - 0.3068528194400546).abs() < 1e-12);
        // logp_ref - logp_theta = -ln 2
        let k = kl_value(-2.0, -2.0 - ln2).unwrap();
        assert!((k - 0.1931471805599454).abs() < 1e-12);
    }

    #[test]
    fn kl_rejects_non_finite() {
        assert!(kl_value(f64::NAN, -1.0).is_err());
        assert!(kl_value(-1.0, f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn objective_hand_case() {
        let group = RolloutGroup {
            input: "x".into(),
            rollouts: vec![
                traced(0.0, &[-1.0, -1.0, -1.0], &[-1.0, -1.0, -1.0]),
                traced(1.0, &[-1.0, -1.0, -1.0], &[-1.0, -1.0, -1.0]),
            ],
        };
        let cfg = GrpoConfig {
            beta: 0.0,
            ..Default::default()
        };
        let out = grpo_objective(&group, &cfg).unwrap();
        assert_eq!(out.token_losses[0], vec![-1.0, -1.0, -1.0]);
        assert_eq!(out.token_losses[1], vec![1.0, 1.0, 1.0]);
        assert!(out.objective.abs() < 1e-12);
    }

    #[test]
    fn objective_zero_kl_matches_beta_zero() {
        let group = RolloutGroup {
            input: "x".into(),
            rollouts: vec![
                traced(0.2, &[-1.0, -2.0], &[-1.0, -2.0]),
                traced(0.9, &[-0.5], &[-0.5]),
            ],
        };
        let a = grpo_objective(
            &group,
            &GrpoConfig {
                beta: 0.0,
                ..Default::default()
            },
        )
        .unwrap();
        let b = grpo_objective(
            &group,
            &GrpoConfig {
                beta: 0.7,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((a.objective - b.objective).abs() < 1e-12);
    }

    #[test]
    fn objective_kl_only_case() {
        // All advantages 0 (equal rewards), every token KL = 2 - ln2 - 1.
        let ln2 = std::f64::consts::LN_2;
        let theta = [-1.0 - ln2, -1.0 - ln2];
        let reference = [-1.0, -1.0];
        let group = RolloutGroup {
            input: "x".into(),
            rollouts: vec![
                traced(0.5, &theta, &reference),
                traced(0.5, &theta, &reference),
            ],
        };
        let cfg = GrpoConfig {
            beta: 0.1,
            ..Default::default()
        };
        let out = grpo_objective(&group, &cfg).unwrap();
        assert!((out.objective - 0.030685281944005462).abs() < 1e-12);
    }

    #[test]
    fn objective_requires_traces() {
        let group = RolloutGroup {
            input: "x".into(),
            rollouts: vec![
                Rollout {
                    response: String::new(),
                    reward: 0.1,
                    logp_theta: None,
                    logp_ref: None,
                },
                traced(0.9, &[-0.5], &[-0.5]),
            ],
        };
        assert!(grpo_objective(&group, &GrpoConfig::default()).is_err());
    }

    #[test]
    fn trace_validation() {
        let bad_len = Rollout {
            response: String::new(),
            reward: 0.0,
            logp_theta: Some(vec![-1.0, -2.0]),
            logp_ref: Some(vec![-1.0]),
        };
        assert!(bad_len.validate_trace().is_err());
        let positive = Rollout {
            response: String::new(),
            reward: 0.0,
            logp_theta: Some(vec![0.5]),
            logp_ref: Some(vec![-1.0]),
        };
        assert!(positive.validate_trace().is_err());
        let half = Rollout {
            response: String::new(),
            reward: 0.0,
            logp_theta: Some(vec![-1.0]),
            logp_ref: None,
        };
        assert!(half.validate_trace().is_err());
    }

    proptest! {
        /// Non-degenerate advantages are zero-mean with unit population std.
        #[test]
        fn zscore_statistics(rewards in proptest::collection::vec(-10.0f64..10.0, 2..32)) {
            let a = group_advantages(&rewards).unwrap();
            if a.iter().any(|&v| v != 0.0) {
                let n = a.len() as f64;
                let mean = a.iter().sum::<f64>() / n;
                let std = (a.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                prop_assert!(mean.abs() < 1e-9);
                prop_assert!((std - 1.0).abs() < 1e-9);
            }
        }

        /// kl is nonnegative and zero only at equality.
        #[test]
        fn kl_nonnegative(a in -30.0f64..0.0, b in -30.0f64..0.0) {
            let k = kl_value(a, b).unwrap();
            prop_assert!(k >= 0.0);
            if (a - b).abs() > 1e-6 {
                prop_assert!(k > 0.0);
            }
        }

        /// Shifting or positively scaling all rewards leaves the objective
        /// unchanged.
        #[test]
        fn objective_shift_scale_invariant(
            rewards in proptest::collection::vec(0.0f64..1.0, 2..8),
            shift in -3.0f64..3.0,
            scale in 0.1f64..10.0,
        ) {
            // Skip degenerate groups where the scaled std crosses epsilon.
            let n = rewards.len() as f64;
            let mean = rewards.iter().sum::<f64>() / n;
            let std = (rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n).sqrt();
            prop_assume!(std > 1e-6);

            let mk = |rs: &[f64]| RolloutGroup {
                input: "x".into(),
                rollouts: rs.iter().map(|&r| traced(r, &[-1.0, -2.0], &[-1.1, -1.9])).collect(),
            };
            let cfg = GrpoConfig::default();
            let base = grpo_objective(&mk(&rewards), &cfg).unwrap().objective;
            let shifted: Vec<f64> = rewards.iter().map(|r| r + shift).collect();
            let scaled: Vec<f64> = rewards.iter().map(|r| r * scale).collect();
            let j_shift = grpo_objective(&mk(&shifted), &cfg).unwrap().objective;
            let j_scale = grpo_objective(&mk(&scaled), &cfg).unwrap().objective;
            prop_assert!((base - j_shift).abs() < 1e-9, "shift changed J: {base} vs {j_shift}");
            prop_assert!((base - j_scale).abs() < 1e-9, "scale changed J: {base} vs {j_scale}");
        }
    }
}
