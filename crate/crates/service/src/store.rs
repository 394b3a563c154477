//! On-disk project store.
//!
//! One directory per project:
//!
//! ```text
//! <root>/<project_id>/project.json      metadata + extraction
//!                     spec.yaml|json    last uploaded document
//!                     candidates.jsonl  generated candidates
//!                     reviews.jsonl     append-only review decisions
//!                     model.json        last trained classifier
//! ```
//!
//! Whole files are replaced by write-to-temp-then-rename, so readers never
//! see a partial file. Writers to one project are serialized by a
//! per-project lock.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use utterancesmith::classifier::{ClassifierModel, EvalReport, Example, IntentDataset, Prediction};
use utterancesmith::dataset::write_csv;
use utterancesmith::extract::{extract_document, ExtractOptions, Extraction, FormatHint, HttpMethod, ScenarioCounts};
use utterancesmith::generation::{
    run_ensemble, CandidateSentence, CandidateStatus, Ensemble, GeneratorSpec, GeneratorWarning, SynonymLexicon,
};
use utterancesmith::selection::{select_sentences, SelectionConfig, SelectionTrace};
use utterancesmith::{HashEmbedder, SeedUtterance};

use crate::error::ServiceError;

const PROJECT_FILE: &str = "project.json";
const CANDIDATES_FILE: &str = "candidates.jsonl";
const REVIEWS_FILE: &str = "reviews.jsonl";
const MODEL_FILE: &str = "model.json";
pub const EDIT_GENERATOR_ID: &str = "human-edit";

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationSummary {
    pub intent_id: String,
    pub method: HttpMethod,
    pub path: String,
    pub operation_id: Option<String>,
    pub summary: Option<String>,
    /// `verb object` of each extracted phrase.
    pub phrases: Vec<String>,
    pub seeds: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Project {
    pub project_id: String,
    pub name: String,
    pub spec_digest: Option<String>,
    pub spec_file: Option<String>,
    pub operations: Vec<OperationSummary>,
    pub candidate_store: String,
    pub model: Option<String>,
    pub created_at: String,
    pub updated_at: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extraction: Option<Extraction>,
}

impl Project {
    /// The project without its embedded extraction.
    pub fn summary(&self) -> Project {
        Project {
            extraction: None,
            ..self.clone()
        }
    }

    fn seeds(&self) -> Vec<SeedUtterance> {
        self.extraction
            .as_ref()
            .map(|e| e.seeds().cloned().collect())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredCandidate {
    #[serde(flatten)]
    pub candidate: CandidateSentence,
    /// Unique n-grams the candidate added when it was selected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_ngram: Option<usize>,
    /// Position in its seed's selection order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection_rank: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewDecision {
    pub candidate_id: String,
    pub decision: Decision,
    pub actor: String,
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionInput {
    pub candidate_id: String,
    pub decision: Decision,
    #[serde(default)]
    pub actor: Option<String>,
    /// Accept an edited copy of the candidate instead of the candidate.
    #[serde(default)]
    pub edited_text: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub pending: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub auto_selected: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewOutcome {
    pub counts: StatusCounts,
    /// Candidates created from edits.
    pub created: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub operations: usize,
    pub seeds: usize,
    pub scenarios: ScenarioCounts,
}

fn default_generators() -> Vec<GeneratorSpec> {
    vec![GeneratorSpec::builtin("rule")]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateRequest {
    /// Intent ids to generate for; all operations when absent.
    #[serde(default)]
    pub operations: Option<Vec<String>>,
    #[serde(default = "default_generators")]
    pub generators: Vec<GeneratorSpec>,
    #[serde(default)]
    pub selection: SelectionConfig,
    /// Also persist candidates that were not selected, as pending.
    #[serde(default)]
    pub include_filtered: bool,
}

impl Default for GenerateRequest {
    fn default() -> Self {
        Self {
            operations: None,
            generators: default_generators(),
            selection: SelectionConfig::default(),
            include_filtered: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedTrace {
    pub intent_id: String,
    pub seed_text: String,
    pub trace: SelectionTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub selected: Vec<StoredCandidate>,
    pub traces: Vec<SeedTrace>,
    pub warnings: Vec<GeneratorWarning>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainRequest {
    /// Optional held-out examples to score the new model on.
    #[serde(default)]
    pub test: Vec<Example>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub examples_per_intent: BTreeMap<String, usize>,
    pub total_examples: usize,
    pub accuracy: Option<f64>,
    pub evaluation: Option<EvalReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    #[serde(flatten)]
    pub prediction: Prediction,
    pub method: Option<HttpMethod>,
    pub path: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Skill,
    Csv,
}

impl std::str::FromStr for ExportFormat {
    type Err = ServiceError;
    fn from_str(s: &str) -> Result<Self, ServiceError> {
        match s {
            "skill" => Ok(ExportFormat::Skill),
            "csv" => Ok(ExportFormat::Csv),
            other => Err(ServiceError::InvalidRequest(format!("unknown export format {other:?}"))),
        }
    }
}

/// Apply the latest decision per candidate to the generation-time status.
/// Decisions for unknown candidates are ignored.
pub fn effective_statuses(candidates: &[StoredCandidate], decisions: &[ReviewDecision]) -> Vec<CandidateStatus> {
    let index: HashMap<&str, usize> = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| (c.candidate.candidate_id.as_str(), i))
        .collect();
    let mut statuses: Vec<CandidateStatus> = candidates.iter().map(|c| c.candidate.status).collect();
    for d in decisions {
        if let Some(&i) = index.get(d.candidate_id.as_str()) {
            statuses[i] = match d.decision {
                Decision::Accepted => CandidateStatus::Accepted,
                Decision::Rejected => CandidateStatus::Rejected,
            };
        }
    }
    statuses
}

/// Seeds, then accepted or auto-selected candidates, without duplicates.
pub fn trainable_set(
    seeds: &[SeedUtterance],
    candidates: &[StoredCandidate],
    decisions: &[ReviewDecision],
) -> Vec<Example> {
    let statuses = effective_statuses(candidates, decisions);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let from_seeds = seeds.iter().map(|s| (&s.text, &s.intent_id));
    let from_candidates = candidates
        .iter()
        .zip(&statuses)
        .filter(|(_, s)| matches!(s, CandidateStatus::Accepted | CandidateStatus::AutoSelected))
        .map(|(c, _)| (&c.candidate.text, &c.candidate.intent_id));
    for (text, intent) in from_seeds.chain(from_candidates) {
        if seen.insert((text.clone(), intent.clone())) {
            out.push(Example {
                text: text.clone(),
                intent: intent.clone(),
            });
        }
    }
    out
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), ServiceError> {
    let tmp = path.with_extension(format!("tmp-{}", uuid::Uuid::new_v4().simple()));
    let unwritable = |e: std::io::Error| ServiceError::StoreUnwritable(format!("{}: {e}", path.display()));
    fs::write(&tmp, contents).map_err(unwritable)?;
    fs::rename(&tmp, path).map_err(unwritable)
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, ServiceError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(ServiceError::Corrupt(format!("{}: {e}", path.display()))),
    };
    let complete = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(v) => out.push(v),
            // a torn final line from an interrupted append
            Err(_) if i + 1 == lines.len() && !complete => log::warn!("ignoring torn line in {}", path.display()),
            Err(e) => return Err(ServiceError::Corrupt(format!("{} line {}: {e}", path.display(), i + 1))),
        }
    }
    Ok(out)
}

fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("serializable"));
        out.push('\n');
    }
    out
}

pub struct Store {
    root: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    lexicon: Arc<SynonymLexicon>,
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| ServiceError::StoreUnwritable(format!("{}: {e}", root.display())))?;
        Ok(Self {
            root,
            locks: Mutex::new(HashMap::new()),
            lexicon: Arc::new(SynonymLexicon::builtin()),
        })
    }

    pub fn with_lexicon(mut self, lexicon: SynonymLexicon) -> Self {
        self.lexicon = Arc::new(lexicon);
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn dir(&self, id: &str) -> Result<PathBuf, ServiceError> {
        let valid = !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        let dir = self.root.join(id);
        if !valid || !dir.join(PROJECT_FILE).is_file() {
            return Err(ServiceError::ProjectNotFound(id.to_string()));
        }
        Ok(dir)
    }

    fn lock(&self, id: &str) -> Arc<Mutex<()>> {
        self.locks
            .lock()
            .expect("lock table")
            .entry(id.to_string())
            .or_default()
            .clone()
    }

    fn save_project(&self, project: &Project) -> Result<(), ServiceError> {
        let dir = self.root.join(&project.project_id);
        let json = serde_json::to_vec_pretty(project).expect("project serializes");
        write_atomic(&dir.join(PROJECT_FILE), &json)
    }

    pub fn create_project(&self, name: &str) -> Result<Project, ServiceError> {
        let name = name.trim();
        if name.is_empty() {
            return Err(ServiceError::InvalidRequest("project name must be non-empty".into()));
        }
        let project_id = uuid::Uuid::new_v4().simple().to_string();
        let dir = self.root.join(&project_id);
        fs::create_dir_all(&dir).map_err(|e| ServiceError::StoreUnwritable(format!("{}: {e}", dir.display())))?;
        let ts = now();
        let project = Project {
            project_id,
            name: name.to_string(),
            spec_digest: None,
            spec_file: None,
            operations: Vec::new(),
            candidate_store: CANDIDATES_FILE.to_string(),
            model: None,
            created_at: ts.clone(),
            updated_at: ts,
            extraction: None,
        };
        self.save_project(&project)?;
        Ok(project)
    }

    pub fn project(&self, id: &str) -> Result<Project, ServiceError> {
        let path = self.dir(id)?.join(PROJECT_FILE);
        let text = fs::read_to_string(&path).map_err(|e| ServiceError::Corrupt(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ServiceError::Corrupt(format!("{}: {e}", path.display())))
    }

    pub fn list_projects(&self) -> Result<Vec<Project>, ServiceError> {
        let entries = fs::read_dir(&self.root).map_err(|e| ServiceError::Corrupt(e.to_string()))?;
        let mut projects = Vec::new();
        for entry in entries.flatten() {
            if let Some(id) = entry.file_name().to_str() {
                if let Ok(p) = self.project(id) {
                    projects.push(p.summary());
                }
            }
        }
        projects.sort_by(|a, b| a.created_at.cmp(&b.created_at).then(a.project_id.cmp(&b.project_id)));
        Ok(projects)
    }

    /// Extract the document and replace the project's operations and seeds.
    pub fn ingest_spec(&self, id: &str, raw: &[u8], hint: FormatHint) -> Result<IngestSummary, ServiceError> {
        let dir = self.dir(id)?;
        let lock = self.lock(id);
        let _guard = lock.lock().expect("project lock");
        let mut project = self.project(id)?;
        let extraction = extract_document(raw, hint, &ExtractOptions::default())?;
        let is_json = match hint {
            FormatHint::Json => true,
            FormatHint::Yaml => false,
            FormatHint::Auto => serde_json::from_slice::<serde_json::Value>(raw).is_ok(),
        };
        let spec_file = if is_json { "spec.json" } else { "spec.yaml" };
        for stale in ["spec.json", "spec.yaml"] {
            if stale != spec_file {
                let _ = fs::remove_file(dir.join(stale));
            }
        }
        write_atomic(&dir.join(spec_file), raw)?;

        project.operations = extraction
            .operations
            .iter()
            .map(|op| OperationSummary {
                intent_id: op.intent_id.clone(),
                method: op.method,
                path: op.path.clone(),
                operation_id: op.operation_id.clone(),
                summary: op.summary.clone(),
                phrases: op
                    .phrases
                    .iter()
                    .map(|p| format!("{} {}", p.verb, p.object_text()))
                    .collect(),
                seeds: op.seeds.iter().map(|s| s.text.clone()).collect(),
            })
            .collect();
        let summary = IngestSummary {
            operations: extraction.operations.len(),
            seeds: extraction.seeds().count(),
            scenarios: extraction.scenario_counts(),
        };
        project.spec_digest = Some(extraction.source_digest.clone());
        project.spec_file = Some(spec_file.to_string());
        project.extraction = Some(extraction);
        project.updated_at = now();
        self.save_project(&project)?;
        Ok(summary)
    }

    pub fn operations(&self, id: &str) -> Result<Vec<OperationSummary>, ServiceError> {
        Ok(self.project(id)?.operations)
    }

    fn stored_candidates(&self, dir: &Path) -> Result<Vec<StoredCandidate>, ServiceError> {
        read_jsonl(&dir.join(CANDIDATES_FILE))
    }

    fn decisions(&self, dir: &Path) -> Result<Vec<ReviewDecision>, ServiceError> {
        read_jsonl(&dir.join(REVIEWS_FILE))
    }

    /// Candidates with their current status, optionally filtered.
    pub fn candidates(
        &self,
        id: &str,
        operation: Option<&str>,
        status: Option<CandidateStatus>,
    ) -> Result<Vec<StoredCandidate>, ServiceError> {
        let dir = self.dir(id)?;
        let mut candidates = self.stored_candidates(&dir)?;
        let statuses = effective_statuses(&candidates, &self.decisions(&dir)?);
        for (c, s) in candidates.iter_mut().zip(statuses) {
            c.candidate.status = s;
        }
        Ok(candidates
            .into_iter()
            .filter(|c| operation.is_none_or(|op| c.candidate.intent_id == op))
            .filter(|c| status.is_none_or(|s| c.candidate.status == s))
            .collect())
    }

    /// Generate and select candidates for the chosen operations. Earlier
    /// pending and auto-selected candidates of those operations are
    /// replaced; reviewed ones are kept.
    pub fn generate(&self, id: &str, request: &GenerateRequest) -> Result<GenerateResponse, ServiceError> {
        request.selection.validate()?;
        let dir = self.dir(id)?;
        let project = self.project(id)?;
        let known: HashSet<&str> = project.operations.iter().map(|o| o.intent_id.as_str()).collect();
        let targets: HashSet<String> = match &request.operations {
            Some(ops) => {
                if let Some(bad) = ops.iter().find(|o| !known.contains(o.as_str())) {
                    return Err(ServiceError::UnknownOperation(bad.clone()));
                }
                ops.iter().cloned().collect()
            }
            None => known.iter().map(|s| s.to_string()).collect(),
        };
        let seeds: Vec<SeedUtterance> = project
            .seeds()
            .into_iter()
            .filter(|s| targets.contains(&s.intent_id))
            .collect();
        if seeds.is_empty() {
            return Err(ServiceError::NoSeeds);
        }

        let ensemble = Ensemble::from_specs(&request.generators, self.lexicon.clone())?;
        let output = run_ensemble(&seeds, &ensemble)?;
        let embedder = HashEmbedder::default();
        let mut selected = Vec::new();
        let mut unselected = Vec::new();
        let mut traces = Vec::new();
        for seed in &seeds {
            let pool: Vec<CandidateSentence> = output
                .candidates
                .iter()
                .filter(|c| c.intent_id == seed.intent_id && c.seed_text == seed.text)
                .cloned()
                .collect();
            let trace = select_sentences(&pool, &seed.text, &request.selection, &embedder);
            let chosen: HashSet<&str> = trace.selected.iter().map(|c| c.candidate_id.as_str()).collect();
            let accepted_steps = trace.steps.iter().filter(|s| s.accepted);
            for (rank, step) in accepted_steps.enumerate() {
                let mut candidate = step.candidate.clone();
                candidate.status = CandidateStatus::AutoSelected;
                selected.push(StoredCandidate {
                    candidate,
                    delta_ngram: Some(step.delta_ngram),
                    selection_rank: Some(rank),
                });
            }
            if request.include_filtered {
                let sims: HashMap<&str, f64> = trace
                    .filtered_out
                    .iter()
                    .map(|f| (f.candidate.candidate_id.as_str(), f.similarity))
                    .chain(
                        trace
                            .steps
                            .iter()
                            .filter_map(|s| Some((s.candidate.candidate_id.as_str(), s.candidate.similarity_to_seed?))),
                    )
                    .collect();
                for c in pool.iter().filter(|c| !chosen.contains(c.candidate_id.as_str())) {
                    let mut candidate = c.clone();
                    candidate.similarity_to_seed = sims.get(c.candidate_id.as_str()).copied();
                    unselected.push(StoredCandidate {
                        candidate,
                        delta_ngram: None,
                        selection_rank: None,
                    });
                }
            }
            traces.push(SeedTrace {
                intent_id: seed.intent_id.clone(),
                seed_text: seed.text.clone(),
                trace,
            });
        }

        let lock = self.lock(id);
        let _guard = lock.lock().expect("project lock");
        let existing = self.stored_candidates(&dir)?;
        let statuses = effective_statuses(&existing, &self.decisions(&dir)?);
        let mut kept: Vec<StoredCandidate> = existing
            .into_iter()
            .zip(statuses)
            .filter(|(c, s)| {
                !targets.contains(&c.candidate.intent_id)
                    || matches!(s, CandidateStatus::Accepted | CandidateStatus::Rejected)
            })
            .map(|(c, _)| c)
            .collect();
        let mut ids: HashSet<String> = kept.iter().map(|c| c.candidate.candidate_id.clone()).collect();
        for c in selected.iter().chain(&unselected) {
            if ids.insert(c.candidate.candidate_id.clone()) {
                kept.push(c.clone());
            }
        }
        write_atomic(&dir.join(CANDIDATES_FILE), to_jsonl(&kept).as_bytes())?;
        Ok(GenerateResponse {
            selected,
            traces,
            warnings: output.warnings,
        })
    }

    /// Append review decisions. Nothing is written unless every referenced
    /// candidate exists.
    pub fn record_review(&self, id: &str, inputs: &[DecisionInput]) -> Result<ReviewOutcome, ServiceError> {
        let dir = self.dir(id)?;
        let lock = self.lock(id);
        let _guard = lock.lock().expect("project lock");
        let mut candidates = self.stored_candidates(&dir)?;
        let index: HashMap<String, usize> = candidates
            .iter()
            .enumerate()
            .map(|(i, c)| (c.candidate.candidate_id.clone(), i))
            .collect();
        for input in inputs {
            if !index.contains_key(&input.candidate_id) {
                return Err(ServiceError::UnknownCandidate(input.candidate_id.clone()));
            }
            if input.edited_text.is_some() && input.decision != Decision::Accepted {
                return Err(ServiceError::InvalidRequest("only accepted decisions may carry an edit".into()));
            }
        }

        let ts = now();
        let mut decisions = Vec::with_capacity(inputs.len());
        let mut created = Vec::new();
        let mut appended = Vec::new();
        for input in inputs {
            let actor = input.actor.clone().unwrap_or_else(|| "anonymous".to_string());
            let mut target = input.candidate_id.clone();
            if let Some(edit) = input.edited_text.as_deref().map(str::trim).filter(|t| !t.is_empty()) {
                let original = &candidates[index[&input.candidate_id]].candidate;
                let new = CandidateSentence::new(edit, EDIT_GENERATOR_ID, &original.seed_text, &original.intent_id);
                target = new.candidate_id.clone();
                let exists = index.contains_key(&target) || appended.iter().any(|c: &StoredCandidate| c.candidate.candidate_id == target);
                if !exists {
                    created.push(target.clone());
                    appended.push(StoredCandidate {
                        candidate: new,
                        delta_ngram: None,
                        selection_rank: None,
                    });
                }
            }
            decisions.push(ReviewDecision {
                candidate_id: target,
                decision: input.decision,
                actor,
                timestamp: ts.clone(),
            });
        }
        if !appended.is_empty() {
            candidates.extend(appended);
            write_atomic(&dir.join(CANDIDATES_FILE), to_jsonl(&candidates).as_bytes())?;
        }
        let path = dir.join(REVIEWS_FILE);
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| ServiceError::StoreUnwritable(format!("{}: {e}", path.display())))?;
        file.write_all(to_jsonl(&decisions).as_bytes())
            .and_then(|_| file.sync_data())
            .map_err(|e| ServiceError::StoreUnwritable(format!("{}: {e}", path.display())))?;

        let all = self.decisions(&dir)?;
        let mut counts = StatusCounts::default();
        for s in effective_statuses(&candidates, &all) {
            match s {
                CandidateStatus::Pending => counts.pending += 1,
                CandidateStatus::Accepted => counts.accepted += 1,
                CandidateStatus::Rejected => counts.rejected += 1,
                CandidateStatus::AutoSelected => counts.auto_selected += 1,
            }
        }
        Ok(ReviewOutcome { counts, created })
    }

    /// Current training data: seeds, accepted and auto-selected sentences.
    pub fn trainable(&self, id: &str) -> Result<Vec<Example>, ServiceError> {
        let dir = self.dir(id)?;
        let project = self.project(id)?;
        Ok(trainable_set(
            &project.seeds(),
            &self.stored_candidates(&dir)?,
            &self.decisions(&dir)?,
        ))
    }

    pub fn train(&self, id: &str, request: &TrainRequest) -> Result<TrainSummary, ServiceError> {
        let dir = self.dir(id)?;
        let lock = self.lock(id);
        let _guard = lock.lock().expect("project lock");
        let examples = self.trainable(id)?;
        let mut examples_per_intent: BTreeMap<String, usize> = BTreeMap::new();
        for e in &examples {
            *examples_per_intent.entry(e.intent.clone()).or_default() += 1;
        }
        let total_examples = examples.len();
        let model = ClassifierModel::train(&IntentDataset::new(examples.into_iter().map(|e| (e.text, e.intent))))?;
        let evaluation = if request.test.is_empty() {
            None
        } else {
            let test = IntentDataset::new(request.test.iter().map(|e| (e.text.clone(), e.intent.clone())));
            Some(model.evaluate(&test)?)
        };
        write_atomic(&dir.join(MODEL_FILE), model.to_json().as_bytes())?;
        let mut project = self.project(id)?;
        project.model = Some(MODEL_FILE.to_string());
        project.updated_at = now();
        self.save_project(&project)?;
        Ok(TrainSummary {
            examples_per_intent,
            total_examples,
            accuracy: evaluation.as_ref().map(|r| r.accuracy),
            evaluation,
        })
    }

    pub fn classify(&self, id: &str, text: &str) -> Result<Classification, ServiceError> {
        let dir = self.dir(id)?;
        let path = dir.join(MODEL_FILE);
        let json = match fs::read_to_string(&path) {
            Ok(j) => j,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(ServiceError::NoModel),
            Err(e) => return Err(ServiceError::Corrupt(format!("{}: {e}", path.display()))),
        };
        let model = ClassifierModel::from_json(&json)?;
        let prediction = model.predict(text)?;
        let project = self.project(id)?;
        let op = project.operations.iter().find(|o| o.intent_id == prediction.intent_id);
        Ok(Classification {
            method: op.map(|o| o.method),
            path: op.map(|o| o.path.clone()),
            prediction,
        })
    }

    /// Export the trainable set as a skill JSON document or a `text,intent`
    /// CSV. Returns the content type and body.
    pub fn export(&self, id: &str, format: ExportFormat) -> Result<(&'static str, Vec<u8>), ServiceError> {
        let project = self.project(id)?;
        let examples = self.trainable(id)?;
        match format {
            ExportFormat::Csv => {
                let mut buf = Vec::new();
                write_csv(&mut buf, &examples).map_err(|e| ServiceError::InvalidRequest(e.to_string()))?;
                Ok(("text/csv; charset=utf-8", buf))
            }
            ExportFormat::Skill => {
                let intents: Vec<serde_json::Value> = project
                    .operations
                    .iter()
                    .filter_map(|op| {
                        let texts: Vec<serde_json::Value> = examples
                            .iter()
                            .filter(|e| e.intent == op.intent_id)
                            .map(|e| serde_json::json!({"text": e.text}))
                            .collect();
                        (!texts.is_empty()).then(|| serde_json::json!({"intent": op.intent_id, "examples": texts}))
                    })
                    .collect();
                let body = serde_json::to_vec_pretty(&serde_json::json!({"intents": intents})).expect("json");
                Ok(("application/json", body))
            }
        }
    }
}
