//! Fidelity filtering and greedy unique-n-gram selection for one seed.
//!
//! Candidates whose similarity to the seed is not strictly above `theta`
//! are dropped. The survivors are then picked greedily: each round takes
//! the candidate adding the most unseen n-grams to the selected set (ties
//! to the earliest input position), keeps it only if that gain exceeds
//! `gamma`, and discards it from the pool either way. The loop ends when
//! `target_size` sentences are selected or the pool is empty.
//!
//! Gains never grow as the selected set grows, so once the best gain is at
//! most `gamma` nothing later can be accepted and the loop stops early.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::generation::CandidateSentence;
use crate::text::{tokenize, Similarity, TokenSeq};

pub const DEFAULT_THETA: f64 = 0.4;
pub const DEFAULT_GAMMA: usize = 1;
pub const DEFAULT_TARGET_SIZE: usize = 5;

fn default_theta() -> f64 {
    DEFAULT_THETA
}
fn default_gamma() -> usize {
    DEFAULT_GAMMA
}
fn default_target() -> usize {
    DEFAULT_TARGET_SIZE
}
fn default_orders() -> Vec<usize> {
    vec![1, 2, 3]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_gamma")]
    pub gamma: usize,
    #[serde(default = "default_target")]
    pub target_size: usize,
    #[serde(default = "default_orders")]
    pub ngram_orders: Vec<usize>,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            theta: DEFAULT_THETA,
            gamma: DEFAULT_GAMMA,
            target_size: DEFAULT_TARGET_SIZE,
            ngram_orders: default_orders(),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SelectionConfigError {
    #[error("theta {0} is outside [0, 1]")]
    ThetaOutOfRange(f64),
    #[error("target size must be at least 1")]
    ZeroTarget,
    #[error("n-gram orders must be non-empty and positive")]
    BadOrders,
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<(), SelectionConfigError> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(SelectionConfigError::ThetaOutOfRange(self.theta));
        }
        if self.target_size == 0 {
            return Err(SelectionConfigError::ZeroTarget);
        }
        if self.ngram_orders.is_empty() || self.ngram_orders.contains(&0) {
            return Err(SelectionConfigError::BadOrders);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredOut {
    pub candidate: CandidateSentence,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub candidate: CandidateSentence,
    pub delta_ngram: usize,
    pub accepted: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub filtered_out: Vec<FilteredOut>,
    pub steps: Vec<SelectionStep>,
    pub selected: Vec<CandidateSentence>,
}

/// Keep candidates with similarity to `seed` strictly above `theta`,
/// recording the similarity on each survivor.
pub fn fidelity_filter<S: Similarity + ?Sized>(
    candidates: &[CandidateSentence],
    seed: &str,
    theta: f64,
    similarity: &S,
) -> Vec<CandidateSentence> {
    partition_by_fidelity(candidates, seed, theta, similarity).0
}

fn partition_by_fidelity<S: Similarity + ?Sized>(
    candidates: &[CandidateSentence],
    seed: &str,
    theta: f64,
    similarity: &S,
) -> (Vec<CandidateSentence>, Vec<FilteredOut>) {
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for c in candidates {
        let sim = similarity.similarity(&c.text, seed);
        let mut c = c.clone();
        c.similarity_to_seed = Some(sim);
        if sim > theta {
            kept.push(c);
        } else {
            dropped.push(FilteredOut {
                candidate: c,
                similarity: sim,
            });
        }
    }
    (kept, dropped)
}

/// Greedy selection for one seed. Does not validate `config`; a zero target
/// selects nothing.
pub fn select_sentences<S: Similarity + ?Sized>(
    candidates: &[CandidateSentence],
    seed: &str,
    config: &SelectionConfig,
    similarity: &S,
) -> SelectionTrace {
    let (pool, filtered_out) = partition_by_fidelity(candidates, seed, config.theta, similarity);
    let tokens: Vec<TokenSeq> = pool.iter().map(|c| tokenize(&c.text)).collect();
    // n-grams of each pooled candidate, deduplicated per sentence
    let grams: Vec<Vec<&[String]>> = tokens
        .iter()
        .map(|t| {
            let mut seen = HashSet::new();
            config
                .ngram_orders
                .iter()
                .flat_map(|&n| t.ngrams(n))
                .filter(|g| seen.insert(*g))
                .collect()
        })
        .collect();

    let mut covered: HashSet<&[String]> = HashSet::new();
    let mut remaining: Vec<usize> = (0..pool.len()).collect();
    let mut steps = Vec::new();
    let mut selected = Vec::new();
    while selected.len() < config.target_size && !remaining.is_empty() {
        let mut best_pos = 0;
        let mut best_gain = 0;
        for (pos, &i) in remaining.iter().enumerate() {
            let gain = grams[i].iter().filter(|g| !covered.contains(*g)).count();
            if pos == 0 || gain > best_gain {
                best_pos = pos;
                best_gain = gain;
            }
        }
        let chosen = remaining.remove(best_pos);
        let accepted = best_gain > config.gamma;
        steps.push(SelectionStep {
            candidate: pool[chosen].clone(),
            delta_ngram: best_gain,
            accepted,
        });
        if !accepted {
            break;
        }
        covered.extend(grams[chosen].iter().copied());
        selected.push(pool[chosen].clone());
    }
    SelectionTrace {
        filtered_out,
        steps,
        selected,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::HashEmbedder;

    /// Token-set Jaccard similarity.
    struct Jaccard;

    impl Similarity for Jaccard {
        fn similarity(&self, a: &str, b: &str) -> f64 {
            let a: HashSet<String> = tokenize(a).into_inner().into_iter().collect();
            let b: HashSet<String> = tokenize(b).into_inner().into_iter().collect();
            let union = a.union(&b).count();
            if union == 0 {
                return 0.0;
            }
            a.intersection(&b).count() as f64 / union as f64
        }
    }

    fn cands(texts: &[&str]) -> Vec<CandidateSentence> {
        texts
            .iter()
            .map(|t| CandidateSentence::new(t, "g", "seed", "intent"))
            .collect()
    }

    #[test]
    fn filter_examples() {
        let c = cands(&["show the open invoices please"]);
        assert!(fidelity_filter(&c, "list the open invoices", 0.5, &Jaccard).is_empty());
        let kept = fidelity_filter(&c, "list the open invoices", 0.49, &Jaccard);
        assert_eq!(kept[0].similarity_to_seed, Some(0.5));

        let c = cands(&["list the open invoices"]);
        let kept = fidelity_filter(&c, "list the open invoices", 0.99, &HashEmbedder::default());
        assert_eq!(kept.len(), 1);

        let c = cands(&["a b", "b c"]);
        assert_eq!(fidelity_filter(&c, "a b c", 0.0, &Jaccard).len(), 2);
    }

    #[test]
    fn worked_example() {
        let c = cands(&[
            "show the open invoices",
            "display open invoices",
            "show the open invoices please",
        ]);
        let config = SelectionConfig {
            theta: 0.35,
            gamma: 0,
            target_size: 2,
            ngram_orders: vec![1, 2, 3],
        };
        let trace = select_sentences(&c, "list the open invoices", &config, &Jaccard);
        assert!(trace.filtered_out.is_empty());
        let texts: Vec<&str> = trace.selected.iter().map(|c| c.text.as_str()).collect();
        assert_eq!(texts, vec!["show the open invoices please", "display open invoices"]);
        assert_eq!(trace.steps[0].delta_ngram, 12);
        assert_eq!(trace.steps[1].delta_ngram, 3);
        assert_eq!(trace.selected[0].similarity_to_seed, Some(0.5));
    }

    #[test]
    fn empty_and_singleton() {
        let config = SelectionConfig::default();
        let trace = select_sentences(&[], "x", &config, &Jaccard);
        assert!(trace.selected.is_empty() && trace.steps.is_empty());

        let config = SelectionConfig {
            theta: 0.0,
            gamma: 1,
            target_size: 1,
            ngram_orders: vec![1, 2, 3],
        };
        let c = cands(&["list all invoices", "list invoices"]);
        let trace = select_sentences(&c, "list invoices", &config, &Jaccard);
        assert_eq!(trace.selected.len(), 1);
        assert_eq!(trace.selected[0].text, "list all invoices");
    }

    #[test]
    fn early_exit_records_rejected_step() {
        let config = SelectionConfig {
            theta: 0.0,
            gamma: 2,
            target_size: 5,
            ngram_orders: vec![1],
        };
        let c = cands(&["a b c", "a b", "c"]);
        let trace = select_sentences(&c, "a b c", &config, &Jaccard);
        assert_eq!(trace.selected.len(), 1);
        assert_eq!(trace.steps.len(), 2);
        assert!(!trace.steps[1].accepted);
    }

    #[test]
    fn trace_json_keys() {
        let trace = select_sentences(&cands(&["a b"]), "a b", &SelectionConfig::default(), &Jaccard);
        let json = serde_json::to_value(&trace).unwrap();
        for key in ["filtered_out", "steps", "selected"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn config_validation() {
        assert!(SelectionConfig::default().validate().is_ok());
        let bad = SelectionConfig {
            theta: 1.5,
            ..Default::default()
        };
        assert_eq!(bad.validate(), Err(SelectionConfigError::ThetaOutOfRange(1.5)));
        let bad = SelectionConfig {
            target_size: 0,
            ..Default::default()
        };
        assert_eq!(bad.validate(), Err(SelectionConfigError::ZeroTarget));
        let c: SelectionConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, SelectionConfig::default());
    }
}
