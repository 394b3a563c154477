//! Multinomial naive Bayes intent classifier over word unigrams and bigrams.
//!
//! Likelihoods are add-one smoothed over the vocabulary plus one extra
//! "unseen" slot, so each intent's row sums to one and an unseen feature
//! costs `1 / (N_c + V + 1)`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::tokenize;

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum ClassifierError {
    #[error("training needs at least two intents")]
    TooFewIntents,
    #[error("intent {0} has no examples")]
    EmptyIntent(String),
    #[error("text is empty")]
    EmptyText,
    #[error("test set is empty")]
    EmptyTest,
    #[error("test intent {0} is unknown to the model")]
    UnknownIntentInTest(String),
    #[error("invalid model file: {0}")]
    InvalidModel(String),
}

impl ClassifierError {
    pub fn code(&self) -> &'static str {
        match self {
            ClassifierError::TooFewIntents => "TooFewIntents",
            ClassifierError::EmptyIntent(_) => "EmptyIntent",
            ClassifierError::EmptyText => "EmptyText",
            ClassifierError::EmptyTest => "EmptyTest",
            ClassifierError::UnknownIntentInTest(_) => "UnknownIntentInTest",
            ClassifierError::InvalidModel(_) => "InvalidModel",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub text: String,
    pub intent: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IntentDataset {
    examples: Vec<Example>,
    intent_ids: Vec<String>,
}

impl IntentDataset {
    /// Examples with blank text are dropped.
    pub fn new<I, T, L>(examples: I) -> Self
    where
        I: IntoIterator<Item = (T, L)>,
        T: Into<String>,
        L: Into<String>,
    {
        Self::with_intents(examples, std::iter::empty::<String>())
    }

    /// Like [`IntentDataset::new`], also declaring intents that may have no
    /// examples.
    pub fn with_intents<I, T, L, D, S>(examples: I, declared: D) -> Self
    where
        I: IntoIterator<Item = (T, L)>,
        T: Into<String>,
        L: Into<String>,
        D: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let examples: Vec<Example> = examples
            .into_iter()
            .map(|(t, l)| Example {
                text: t.into(),
                intent: l.into(),
            })
            .filter(|e| !e.text.trim().is_empty())
            .collect();
        let mut ids: BTreeSet<String> = declared.into_iter().map(Into::into).collect();
        ids.extend(examples.iter().map(|e| e.intent.clone()));
        Self {
            examples,
            intent_ids: ids.into_iter().collect(),
        }
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn intent_ids(&self) -> &[String] {
        &self.intent_ids
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// Unigram and bigram features of `text`.
pub fn features(text: &str) -> Vec<String> {
    let tokens = tokenize(text).into_inner();
    let bigrams: Vec<String> = tokens.windows(2).map(|w| format!("{} {}", w[0], w[1])).collect();
    tokens.into_iter().chain(bigrams).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    vocabulary: BTreeMap<String, usize>,
    intent_ids: Vec<String>,
    log_priors: Vec<f64>,
    /// `[intent][feature]`
    log_likelihoods: Vec<Vec<f64>>,
    log_unseen: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedIntent {
    pub intent_id: String,
    pub probability: f64,
    pub log_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub intent_id: String,
    pub confidence: f64,
    pub ranked: Vec<RankedIntent>,
}

/// Sum in a fixed order so equal multisets of terms give equal bits.
fn stable_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.into_iter().sum()
}

impl ClassifierModel {
    pub fn train(data: &IntentDataset) -> Result<Self, ClassifierError> {
        let intent_ids = data.intent_ids.clone();
        if intent_ids.len() < 2 {
            return Err(ClassifierError::TooFewIntents);
        }
        let index_of: BTreeMap<&str, usize> = intent_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut doc_counts = vec![0usize; intent_ids.len()];
        let mut counts: Vec<BTreeMap<String, usize>> = vec![BTreeMap::new(); intent_ids.len()];
        let mut vocab: BTreeSet<String> = BTreeSet::new();
        for ex in &data.examples {
            let c = index_of[ex.intent.as_str()];
            doc_counts[c] += 1;
            for f in features(&ex.text) {
                *counts[c].entry(f.clone()).or_default() += 1;
                vocab.insert(f);
            }
        }
        if let Some(i) = doc_counts.iter().position(|&n| n == 0) {
            return Err(ClassifierError::EmptyIntent(intent_ids[i].clone()));
        }
        let vocabulary: BTreeMap<String, usize> =
            vocab.into_iter().enumerate().map(|(i, f)| (f, i)).collect();
        let v = vocabulary.len() as f64;
        let total_docs: usize = doc_counts.iter().sum();
        let log_priors = doc_counts
            .iter()
            .map(|&n| (n as f64 / total_docs as f64).ln())
            .collect();
        let mut log_likelihoods = Vec::with_capacity(intent_ids.len());
        let mut log_unseen = Vec::with_capacity(intent_ids.len());
        for class_counts in &counts {
            let total: usize = class_counts.values().sum();
            let denom = total as f64 + v + 1.0;
            let row = vocabulary
                .keys()
                .map(|f| ((class_counts.get(f).copied().unwrap_or(0) as f64 + 1.0) / denom).ln())
                .collect();
            log_likelihoods.push(row);
            log_unseen.push((1.0 / denom).ln());
        }
        Ok(Self {
            vocabulary,
            intent_ids,
            log_priors,
            log_likelihoods,
            log_unseen,
        })
    }

    pub fn intent_ids(&self) -> &[String] {
        &self.intent_ids
    }

    pub fn vocabulary_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn log_priors(&self) -> &[f64] {
        &self.log_priors
    }

    /// Likelihood row of one intent over the vocabulary, followed by the
    /// unseen slot.
    pub fn likelihood_row(&self, intent: usize) -> impl Iterator<Item = f64> + '_ {
        self.log_likelihoods[intent]
            .iter()
            .copied()
            .chain(std::iter::once(self.log_unseen[intent]))
    }

    /// Unnormalized log posteriors, one per intent. Inputs with no known
    /// feature score by prior alone.
    pub fn log_scores(&self, text: &str) -> Result<Vec<f64>, ClassifierError> {
        let feats = features(text);
        if feats.is_empty() {
            return Err(ClassifierError::EmptyText);
        }
        let known: Vec<Option<usize>> = feats.iter().map(|f| self.vocabulary.get(f).copied()).collect();
        if known.iter().all(Option::is_none) {
            return Ok(self.log_priors.clone());
        }
        Ok((0..self.intent_ids.len())
            .map(|c| {
                let mut terms: Vec<f64> = known
                    .iter()
                    .map(|k| match k {
                        Some(i) => self.log_likelihoods[c][*i],
                        None => self.log_unseen[c],
                    })
                    .collect();
                terms.push(self.log_priors[c]);
                stable_sum(terms)
            })
            .collect())
    }

    /// Best intent, its softmax confidence and the full ranking. Ties go to
    /// the lexicographically smallest intent id.
    pub fn predict(&self, text: &str) -> Result<Prediction, ClassifierError> {
        let scores = self.log_scores(text)?;
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = scores.iter().map(|s| (s - max).exp()).sum();
        let mut ranked: Vec<RankedIntent> = self
            .intent_ids
            .iter()
            .zip(&scores)
            .map(|(id, &s)| RankedIntent {
                intent_id: id.clone(),
                probability: (s - max).exp() / z,
                log_score: s,
            })
            .collect();
        ranked.sort_by(|a, b| {
            b.log_score
                .total_cmp(&a.log_score)
                .then_with(|| a.intent_id.cmp(&b.intent_id))
        });
        Ok(Prediction {
            intent_id: ranked[0].intent_id.clone(),
            confidence: ranked[0].probability,
            ranked,
        })
    }

    pub fn evaluate(&self, test: &IntentDataset) -> Result<EvalReport, ClassifierError> {
        if test.is_empty() {
            return Err(ClassifierError::EmptyTest);
        }
        if let Some(unknown) = test
            .intent_ids
            .iter()
            .find(|id| self.intent_ids.binary_search(id).is_err())
        {
            return Err(ClassifierError::UnknownIntentInTest(unknown.clone()));
        }
        let mut confusion: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
        let mut totals: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        let mut correct = 0;
        for ex in &test.examples {
            let predicted = match self.predict(&ex.text) {
                Ok(p) => p.intent_id,
                Err(ClassifierError::EmptyText) => self.predict_prior(),
                Err(e) => return Err(e),
            };
            let hit = predicted == ex.intent;
            correct += usize::from(hit);
            let entry = totals.entry(ex.intent.clone()).or_default();
            entry.0 += usize::from(hit);
            entry.1 += 1;
            *confusion
                .entry(ex.intent.clone())
                .or_default()
                .entry(predicted)
                .or_default() += 1;
        }
        let n_test = test.len();
        Ok(EvalReport {
            accuracy: correct as f64 / n_test as f64,
            correct,
            n_test,
            per_intent_accuracy: totals
                .into_iter()
                .map(|(id, (hit, n))| (id, hit as f64 / n as f64))
                .collect(),
            confusion,
        })
    }

    fn predict_prior(&self) -> String {
        let mut best = 0;
        for (i, p) in self.log_priors.iter().enumerate() {
            if *p > self.log_priors[best] {
                best = i;
            }
        }
        self.intent_ids[best].clone()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelFile::from(self)).expect("model serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, ClassifierError> {
        let file: ModelFile =
            serde_json::from_str(json).map_err(|e| ClassifierError::InvalidModel(e.to_string()))?;
        file.try_into()
    }
}

/// On-disk model. Reals are decimal strings so they round-trip exactly.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    model_version: u32,
    intent_ids: Vec<String>,
    vocabulary: Vec<String>,
    log_priors: Vec<String>,
    log_likelihoods: Vec<Vec<String>>,
    log_unseen: Vec<String>,
}

fn reals_to_strings(values: &[f64]) -> Vec<String> {
    values.iter().map(f64::to_string).collect()
}

fn strings_to_reals(values: &[String]) -> Result<Vec<f64>, ClassifierError> {
    values
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| ClassifierError::InvalidModel(format!("bad number {s:?}")))
        })
        .collect()
}

impl From<&ClassifierModel> for ModelFile {
    fn from(m: &ClassifierModel) -> Self {
        let mut vocabulary = vec![String::new(); m.vocabulary.len()];
        for (f, &i) in &m.vocabulary {
            vocabulary[i] = f.clone();
        }
        Self {
            model_version: MODEL_VERSION,
            intent_ids: m.intent_ids.clone(),
            vocabulary,
            log_priors: reals_to_strings(&m.log_priors),
            log_likelihoods: m.log_likelihoods.iter().map(|r| reals_to_strings(r)).collect(),
            log_unseen: reals_to_strings(&m.log_unseen),
        }
    }
}

impl TryFrom<ModelFile> for ClassifierModel {
    type Error = ClassifierError;

    fn try_from(f: ModelFile) -> Result<Self, Self::Error> {
        if f.model_version != MODEL_VERSION {
            return Err(ClassifierError::InvalidModel(format!(
                "unsupported model_version {}",
                f.model_version
            )));
        }
        let n = f.intent_ids.len();
        let v = f.vocabulary.len();
        if f.log_priors.len() != n
            || f.log_unseen.len() != n
            || f.log_likelihoods.len() != n
            || f.log_likelihoods.iter().any(|r| r.len() != v)
        {
            return Err(ClassifierError::InvalidModel("array shapes disagree".into()));
        }
        Ok(Self {
            vocabulary: f.vocabulary.into_iter().enumerate().map(|(i, w)| (w, i)).collect(),
            intent_ids: f.intent_ids,
            log_priors: strings_to_reals(&f.log_priors)?,
            log_likelihoods: f
                .log_likelihoods
                .iter()
                .map(|r| strings_to_reals(r))
                .collect::<Result<_, _>>()?,
            log_unseen: strings_to_reals(&f.log_unseen)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub correct: usize,
    pub n_test: usize,
    pub per_intent_accuracy: BTreeMap<String, f64>,
    /// true intent → predicted intent → count
    pub confusion: BTreeMap<String, BTreeMap<String, usize>>,
}
