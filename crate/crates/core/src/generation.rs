//! Paraphrase candidate generation.
//!
//! An [`Ensemble`] runs every generator over every seed and pools the
//! results. Generators are either the built-in rule paraphraser or remote
//! backends speaking the protocol in [`crate::wire`]. A failing remote
//! backend contributes zero candidates and a warning; it never fails the run
//! unless nothing else could produce anything.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::extract::SeedUtterance;
use crate::lexicon::lines_of;
use crate::text::{fnv1a64, normalize_whitespace, tokenize, Embedder, EmbeddingVector, PrecomputedEmbedder};
use crate::wire::{EmbedRequest, EmbedResponse, ParaphraseRequest, ParaphraseResponse, EMBED_ROUTE, PARAPHRASE_ROUTE};

pub const DEFAULT_PER_SEED_BUDGET: usize = 15;
pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;
pub const DEFAULT_PARALLELISM: usize = 4;

const DEFAULT_SYNONYMS: &str = include_str!("../data/synonyms.txt");

/// Politeness and framing wrappers, in priority order.
pub const FRAME_WRAPPERS: &[&str] = &["please", "can you", "i need to", "i would like to"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("backend {0} is unreachable")]
    Unreachable(String),
    #[error("backend {0} timed out")]
    Timeout(String),
    #[error("backend {generator} sent a malformed response: {detail}")]
    MalformedResponse { generator: String, detail: String },
    #[error("backend {generator} answered HTTP {status}")]
    Status { generator: String, status: u16 },
}

impl BackendError {
    pub fn generator_id(&self) -> &str {
        match self {
            BackendError::Unreachable(g) | BackendError::Timeout(g) => g,
            BackendError::MalformedResponse { generator, .. } | BackendError::Status { generator, .. } => {
                generator
            }
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            BackendError::Unreachable(_) => "BackendUnreachable",
            BackendError::Timeout(_) => "BackendTimeout",
            BackendError::MalformedResponse { .. } => "MalformedResponse",
            BackendError::Status { .. } => "BackendStatus",
        }
    }
}

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error("no generators configured")]
    NoGenerators,
    #[error("duplicate generator id {0}")]
    DuplicateGenerator(String),
    #[error("remote generator {0} has no endpoint")]
    MissingEndpoint(String),
    #[error("invalid synonym lexicon line {line}: {detail}")]
    InvalidLexicon { line: usize, detail: String },
    #[error("every backend failed: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    AllBackendsFailed(Vec<BackendError>),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

impl GenerationError {
    pub fn code(&self) -> &'static str {
        match self {
            GenerationError::ZeroBudget => "ZeroBudget",
            GenerationError::NoGenerators => "NoGenerators",
            GenerationError::DuplicateGenerator(_) => "DuplicateGenerator",
            GenerationError::MissingEndpoint(_) => "MissingEndpoint",
            GenerationError::InvalidLexicon { .. } => "InvalidLexicon",
            GenerationError::AllBackendsFailed(_) => "AllBackendsFailed",
            GenerationError::Backend(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    BuiltinRule,
    Remote,
}

fn default_budget() -> usize {
    DEFAULT_PER_SEED_BUDGET
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_MS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub id: String,
    pub kind: GeneratorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default = "default_budget")]
    pub per_seed_budget: usize,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
    #[serde(default)]
    pub params: Map<String, Value>,
}

impl GeneratorSpec {
    pub fn builtin(id: &str) -> Self {
        Self {
            id: id.to_string(),
            kind: GeneratorKind::BuiltinRule,
            endpoint: None,
            per_seed_budget: DEFAULT_PER_SEED_BUDGET,
            timeout_ms: DEFAULT_TIMEOUT_MS,
            params: Map::new(),
        }
    }

    pub fn remote(id: &str, endpoint: &str) -> Self {
        Self {
            kind: GeneratorKind::Remote,
            endpoint: Some(endpoint.to_string()),
            ..Self::builtin(id)
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.per_seed_budget = budget;
        self
    }

    pub fn with_param(mut self, key: &str, value: Value) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateStatus {
    Pending,
    Accepted,
    Rejected,
    AutoSelected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSentence {
    /// FNV-1a 64 of `intent_id` + U+001F + `text`, as 16 hex digits.
    pub candidate_id: String,
    pub text: String,
    pub generator_id: String,
    pub seed_text: String,
    pub intent_id: String,
    pub similarity_to_seed: Option<f64>,
    pub status: CandidateStatus,
}

impl CandidateSentence {
    pub fn new(text: &str, generator_id: &str, seed_text: &str, intent_id: &str) -> Self {
        let text = normalize_whitespace(text);
        Self {
            candidate_id: candidate_id(intent_id, &text),
            text,
            generator_id: generator_id.to_string(),
            seed_text: seed_text.to_string(),
            intent_id: intent_id.to_string(),
            similarity_to_seed: None,
            status: CandidateStatus::Pending,
        }
    }
}

pub fn candidate_id(intent_id: &str, text: &str) -> String {
    let mut key = Vec::with_capacity(intent_id.len() + text.len() + 1);
    key.extend_from_slice(intent_id.as_bytes());
    key.push(0x1f);
    key.extend_from_slice(text.as_bytes());
    format!("{:016x}", fnv1a64(&key))
}

/// Token → replacements, in file order.
#[derive(Debug, Clone, Default)]
pub struct SynonymLexicon {
    entries: Vec<(String, Vec<String>)>,
    index: HashMap<String, usize>,
}

impl SynonymLexicon {
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_SYNONYMS).expect("bundled synonym lexicon is valid")
    }

    /// Lines of the form `word: replacement, replacement`.
    pub fn parse(text: &str) -> Result<Self, GenerationError> {
        let mut lexicon = Self::default();
        for (i, line) in lines_of(text).enumerate() {
            let Some((head, tail)) = line.split_once(':') else {
                return Err(GenerationError::InvalidLexicon {
                    line: i + 1,
                    detail: "expected `word: replacements`".into(),
                });
            };
            let head = head.trim().to_lowercase();
            let replacements: Vec<String> = tail
                .split(',')
                .map(|r| normalize_whitespace(&r.to_lowercase()))
                .filter(|r| !r.is_empty())
                .collect();
            lexicon.insert(&head, replacements).map_err(|detail| {
                GenerationError::InvalidLexicon { line: i + 1, detail }
            })?;
        }
        Ok(lexicon)
    }

    pub fn load(path: &Path) -> Result<Self, GenerationError> {
        let text = std::fs::read_to_string(path).map_err(|e| GenerationError::InvalidLexicon {
            line: 0,
            detail: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Add or extend an entry; self-maps are dropped.
    pub fn insert(&mut self, word: &str, replacements: Vec<String>) -> Result<(), String> {
        if word.is_empty() || word.contains(char::is_whitespace) {
            return Err(format!("invalid head word {word:?}"));
        }
        let replacements: Vec<String> = replacements.into_iter().filter(|r| r != word).collect();
        if replacements.is_empty() {
            return Err(format!("{word} has no replacements"));
        }
        match self.index.get(word) {
            Some(&i) => {
                let list = &mut self.entries[i].1;
                for r in replacements {
                    if !list.contains(&r) {
                        list.push(r);
                    }
                }
            }
            None => {
                self.index.insert(word.to_string(), self.entries.len());
                self.entries.push((word.to_string(), replacements));
            }
        }
        Ok(())
    }

    pub fn replacements(&self, word: &str) -> &[String] {
        self.index
            .get(word)
            .map(|&i| self.entries[i].1.as_slice())
            .unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn starts_with_words(tokens: &[String], prefix: &str) -> bool {
    let words: Vec<&str> = prefix.split(' ').collect();
    tokens.len() >= words.len() && tokens.iter().zip(&words).all(|(t, w)| t == w)
}

/// Rule-based paraphrases of `seed`, at most `budget` of them.
///
/// Priority order: single-token synonym substitutions (leftmost token
/// first, lexicon order), then frame wrappers, then wrapper + substitution
/// combinations shuffled by `seed_rng`. Outputs are lowercase and never
/// equal the seed.
pub fn paraphrase_rule_based(
    seed: &str,
    lexicon: &SynonymLexicon,
    budget: usize,
    seed_rng: u64,
) -> Result<Vec<String>, GenerationError> {
    if budget == 0 {
        return Err(GenerationError::ZeroBudget);
    }
    let tokens = tokenize(seed).into_inner();
    let base = tokens.join(" ");
    let normalized_seed = normalize_whitespace(seed);

    let mut substitutions = Vec::new();
    for (i, token) in tokens.iter().enumerate() {
        for replacement in lexicon.replacements(token) {
            let mut t = tokens.clone();
            t[i] = replacement.clone();
            substitutions.push(t.join(" "));
        }
    }
    let wrappers: Vec<&str> = FRAME_WRAPPERS
        .iter()
        .copied()
        .filter(|w| !starts_with_words(&tokens, w))
        .collect();
    let framed: Vec<String> = if base.is_empty() {
        Vec::new()
    } else {
        wrappers.iter().map(|w| format!("{w} {base}")).collect()
    };
    let mut combined: Vec<String> = substitutions
        .iter()
        .flat_map(|s| wrappers.iter().map(move |w| format!("{w} {s}")))
        .collect();
    combined.shuffle(&mut SplitMix64::seed_from_u64(seed_rng));

    let mut seen = HashSet::new();
    seen.insert(normalized_seed);
    Ok(substitutions
        .into_iter()
        .chain(framed)
        .chain(combined)
        .filter(|c| !c.is_empty() && seen.insert(c.clone()))
        .take(budget)
        .collect())
}

/// A source of paraphrases for one seed sentence.
pub trait ParaphraseBackend: Send + Sync {
    fn paraphrase(&self, seed: &str, budget: usize) -> Result<Vec<String>, BackendError>;
}

pub struct RuleParaphraser {
    lexicon: Arc<SynonymLexicon>,
    seed_rng: u64,
}

impl RuleParaphraser {
    pub fn new(lexicon: Arc<SynonymLexicon>, seed_rng: u64) -> Self {
        Self { lexicon, seed_rng }
    }
}

impl ParaphraseBackend for RuleParaphraser {
    fn paraphrase(&self, seed: &str, budget: usize) -> Result<Vec<String>, BackendError> {
        // budget is validated when the ensemble is built
        Ok(paraphrase_rule_based(seed, &self.lexicon, budget.max(1), self.seed_rng).unwrap_or_default())
    }
}

/// HTTP client for a remote paraphrase backend.
fn http_client(id: &str, timeout_ms: u64) -> Result<reqwest::blocking::Client, BackendError> {
    reqwest::blocking::Client::builder()
        .timeout(Duration::from_millis(timeout_ms))
        .build()
        .map_err(|_| BackendError::Unreachable(id.to_string()))
}

fn map_reqwest_error(id: &str, err: reqwest::Error) -> BackendError {
    if err.is_timeout() {
        BackendError::Timeout(id.to_string())
    } else if err.is_decode() || err.is_body() {
        BackendError::MalformedResponse {
            generator: id.to_string(),
            detail: err.to_string(),
        }
    } else {
        BackendError::Unreachable(id.to_string())
    }
}

/// POST `request` as JSON and decode a 200 response.
fn post_json<Req: Serialize, Resp: serde::de::DeserializeOwned>(
    client: &reqwest::blocking::Client,
    id: &str,
    url: &str,
    request: &Req,
) -> Result<Resp, BackendError> {
    let response = client
        .post(url)
        .json(request)
        .send()
        .map_err(|e| map_reqwest_error(id, e))?;
    let status = response.status();
    if status != reqwest::StatusCode::OK {
        return Err(BackendError::Status {
            generator: id.to_string(),
            status: status.as_u16(),
        });
    }
    let body = response.bytes().map_err(|e| map_reqwest_error(id, e))?;
    serde_json::from_slice(&body).map_err(|e| BackendError::MalformedResponse {
        generator: id.to_string(),
        detail: e.to_string(),
    })
}

pub struct RemoteParaphraser {
    id: String,
    url: String,
    params: Map<String, Value>,
    client: reqwest::blocking::Client,
}

impl RemoteParaphraser {
    pub fn new(spec: &GeneratorSpec) -> Result<Self, GenerationError> {
        let endpoint = spec
            .endpoint
            .as_deref()
            .ok_or_else(|| GenerationError::MissingEndpoint(spec.id.clone()))?;
        let client = http_client(&spec.id, spec.timeout_ms)?;
        Ok(Self {
            id: spec.id.clone(),
            url: format!("{}{}", endpoint.trim_end_matches('/'), PARAPHRASE_ROUTE),
            params: spec.params.clone(),
            client,
        })
    }

}

impl ParaphraseBackend for RemoteParaphraser {
    fn paraphrase(&self, seed: &str, budget: usize) -> Result<Vec<String>, BackendError> {
        let request = ParaphraseRequest {
            sentence: seed.to_string(),
            num_return: budget,
            params: self.params.clone(),
        };
        let parsed: ParaphraseResponse = post_json(&self.client, &self.id, &self.url, &request)?;
        Ok(parsed.candidates.into_iter().map(|c| c.text).collect())
    }
}

/// Client for a remote embedding backend. Returned vectors are
/// L2-normalized so cosine similarity stays a plain dot product.
pub struct RemoteEmbedder {
    id: String,
    url: String,
    client: reqwest::blocking::Client,
}

impl RemoteEmbedder {
    pub fn new(id: &str, endpoint: &str, timeout_ms: u64) -> Result<Self, BackendError> {
        Ok(Self {
            id: id.to_string(),
            url: format!("{}{}", endpoint.trim_end_matches('/'), EMBED_ROUTE),
            client: http_client(id, timeout_ms)?,
        })
    }

    pub fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, BackendError> {
        let request = EmbedRequest { texts: texts.to_vec() };
        let response: EmbedResponse = post_json(&self.client, &self.id, &self.url, &request)?;
        if response.vectors.len() != texts.len() {
            return Err(BackendError::MalformedResponse {
                generator: self.id.clone(),
                detail: format!("{} vectors for {} texts", response.vectors.len(), texts.len()),
            });
        }
        Ok(response.vectors.into_iter().map(EmbeddingVector::from_raw).collect())
    }

    /// Fetch vectors for `texts` once; other texts go to `fallback`.
    pub fn precompute<E: Embedder>(&self, texts: &[String], fallback: E) -> Result<PrecomputedEmbedder<E>, BackendError> {
        let vectors = self.embed_batch(texts)?;
        Ok(PrecomputedEmbedder::new(texts.iter().cloned().zip(vectors).collect(), fallback))
    }
}

/// Call one remote backend for one seed and map the texts to candidates.
pub fn paraphrase_remote(
    seed: &SeedUtterance,
    spec: &GeneratorSpec,
) -> Result<Vec<CandidateSentence>, GenerationError> {
    let backend = RemoteParaphraser::new(spec)?;
    let texts = backend.paraphrase(&seed.text, spec.per_seed_budget)?;
    Ok(to_candidates(texts, &spec.id, seed, spec.per_seed_budget))
}

fn to_candidates(
    texts: Vec<String>,
    generator_id: &str,
    seed: &SeedUtterance,
    budget: usize,
) -> Vec<CandidateSentence> {
    let seed_norm = normalize_whitespace(&seed.text);
    texts
        .into_iter()
        .map(|t| normalize_whitespace(&t))
        .filter(|t| !t.is_empty() && *t != seed_norm)
        .take(budget)
        .map(|t| CandidateSentence::new(&t, generator_id, &seed.text, &seed.intent_id))
        .collect()
}

pub struct Generator {
    pub id: String,
    pub kind: GeneratorKind,
    pub budget: usize,
    pub backend: Arc<dyn ParaphraseBackend>,
}

pub struct Ensemble {
    generators: Vec<Generator>,
    parallelism: usize,
}

impl Ensemble {
    pub fn new(generators: Vec<Generator>) -> Result<Self, GenerationError> {
        if generators.is_empty() {
            return Err(GenerationError::NoGenerators);
        }
        let mut ids = HashSet::new();
        for g in &generators {
            if !ids.insert(g.id.clone()) {
                return Err(GenerationError::DuplicateGenerator(g.id.clone()));
            }
            if g.budget == 0 {
                return Err(GenerationError::ZeroBudget);
            }
        }
        Ok(Self {
            generators,
            parallelism: DEFAULT_PARALLELISM,
        })
    }

    /// Resolve specs: builtin generators share `lexicon` and read an optional
    /// integer `seed_rng` param; remote generators get an HTTP client.
    pub fn from_specs(specs: &[GeneratorSpec], lexicon: Arc<SynonymLexicon>) -> Result<Self, GenerationError> {
        let generators = specs
            .iter()
            .map(|spec| {
                let backend: Arc<dyn ParaphraseBackend> = match spec.kind {
                    GeneratorKind::BuiltinRule => {
                        let seed_rng = spec.params.get("seed_rng").and_then(Value::as_u64).unwrap_or(0);
                        Arc::new(RuleParaphraser::new(lexicon.clone(), seed_rng))
                    }
                    GeneratorKind::Remote => Arc::new(RemoteParaphraser::new(spec)?),
                };
                Ok(Generator {
                    id: spec.id.clone(),
                    kind: spec.kind,
                    budget: spec.per_seed_budget,
                    backend,
                })
            })
            .collect::<Result<Vec<_>, GenerationError>>()?;
        Self::new(generators)
    }

    pub fn with_parallelism(mut self, parallelism: usize) -> Self {
        self.parallelism = parallelism.max(1);
        self
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    /// Keep only the first generator.
    pub fn first_only(mut self) -> Self {
        self.generators.truncate(1);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorWarning {
    pub generator_id: String,
    pub seed_text: String,
    pub code: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOutput {
    pub candidates: Vec<CandidateSentence>,
    pub warnings: Vec<GeneratorWarning>,
}

/// Run every generator on every seed and pool the results.
///
/// Calls run on up to `parallelism` threads, but results are merged in
/// (generator, seed) order. Within one intent, a text produced more than
/// once is kept only at its earliest position.
pub fn run_ensemble(seeds: &[SeedUtterance], ensemble: &Ensemble) -> Result<EnsembleOutput, GenerationError> {
    let jobs: Vec<(usize, usize)> = (0..ensemble.generators.len())
        .flat_map(|g| (0..seeds.len()).map(move |s| (g, s)))
        .collect();
    let results: Mutex<Vec<Option<Result<Vec<String>, BackendError>>>> =
        Mutex::new(vec![None; jobs.len()]);
    let next = AtomicUsize::new(0);
    let workers = ensemble.parallelism.min(jobs.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(g, s)) = jobs.get(i) else { break };
                let generator = &ensemble.generators[g];
                let out = generator.backend.paraphrase(&seeds[s].text, generator.budget);
                results.lock().expect("result slots")[i] = Some(out);
            });
        }
    });
    let results = results.into_inner().expect("result slots");

    let mut output = EnsembleOutput::default();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut errors = Vec::new();
    for (&(g, s), result) in jobs.iter().zip(results) {
        let generator = &ensemble.generators[g];
        let seed = &seeds[s];
        match result.expect("every job ran") {
            Ok(texts) => {
                for c in to_candidates(texts, &generator.id, seed, generator.budget) {
                    if seen.insert((c.intent_id.clone(), c.text.clone())) {
                        output.candidates.push(c);
                    }
                }
            }
            Err(e) => {
                log::warn!("generator {} failed on {:?}: {e}", generator.id, seed.text);
                output.warnings.push(GeneratorWarning {
                    generator_id: generator.id.clone(),
                    seed_text: seed.text.clone(),
                    code: e.code().to_string(),
                    detail: e.to_string(),
                });
                errors.push(e);
            }
        }
    }
    let has_builtin = ensemble
        .generators
        .iter()
        .any(|g| g.kind == GeneratorKind::BuiltinRule);
    if !jobs.is_empty() && errors.len() == jobs.len() && !has_builtin {
        return Err(GenerationError::AllBackendsFailed(errors));
    }
    Ok(output)
}
