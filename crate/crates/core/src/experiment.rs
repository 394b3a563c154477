//! Input-quality and pipeline-ablation experiments.
//!
//! Each cell of the grid is one (input type, pipeline, n, seed) run: sample
//! n inputs per intent from the training split, optionally augment them
//! through generation and selection, train a classifier on the result and
//! score it on the test split.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{ClassifierError, ClassifierModel, IntentDataset};
use crate::dataset::{DatasetError, LabeledDataset};
use crate::extract::SeedUtterance;
use crate::generation::{
    run_ensemble, BackendError, Ensemble, GenerationError, Generator, GeneratorSpec, ParaphraseBackend,
    SynonymLexicon,
};
use crate::sampling::{sample_points, InputType, SamplingError};
use crate::selection::{select_sentences, SelectionConfig, SelectionConfigError};
use crate::text::{fnv1a64, Embedder, EmbeddingVector, HashEmbedder};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Selection(#[from] SelectionConfigError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("intent {intent} has {have} training examples, need {need}")]
    DatasetTooSmall { intent: String, have: usize, need: usize },
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error("grid has no cell for {0}")]
    IncompleteGrid(String),
}

impl ExperimentError {
    pub fn code(&self) -> &'static str {
        match self {
            ExperimentError::Config(_) | ExperimentError::Selection(_) => "InvalidConfig",
            ExperimentError::Dataset(_) => "DatasetError",
            ExperimentError::DatasetTooSmall { .. } => "DatasetTooSmall",
            ExperimentError::Sampling(_) => "SamplingError",
            ExperimentError::Generation(e) => e.code(),
            ExperimentError::Classifier(e) => e.code(),
            ExperimentError::IncompleteGrid(_) => "IncompleteGrid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineConfig {
    /// Train on the sampled inputs only.
    Base,
    /// First generator, first `target_size` candidates per input.
    GenerateOnly,
    /// First generator followed by selection.
    GenerateSelect,
    /// Every generator pooled, followed by selection.
    EnsembleSelect,
}

impl PipelineConfig {
    pub const ALL: [PipelineConfig; 4] = [
        PipelineConfig::Base,
        PipelineConfig::GenerateOnly,
        PipelineConfig::GenerateSelect,
        PipelineConfig::EnsembleSelect,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PipelineConfig::Base => "base",
            PipelineConfig::GenerateOnly => "generate_only",
            PipelineConfig::GenerateSelect => "generate_select",
            PipelineConfig::EnsembleSelect => "ensemble_select",
        }
    }
}

fn default_n_values() -> Vec<usize> {
    vec![1, 2, 4, 8]
}
fn default_input_types() -> Vec<InputType> {
    InputType::ALL.to_vec()
}
fn default_pipelines() -> Vec<PipelineConfig> {
    vec![PipelineConfig::GenerateSelect]
}
fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}

/// Two builtin paraphrasers that differ only in their shuffle seed.
pub fn default_generators() -> Vec<GeneratorSpec> {
    vec![
        GeneratorSpec::builtin("rule-a").with_param("seed_rng", 1.into()),
        GeneratorSpec::builtin("rule-b").with_param("seed_rng", 2.into()),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// CSV with a `text,intent` header.
    pub dataset: PathBuf,
    /// Split manifest; defaults to the CSV's `<stem>.split.json` sibling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<PathBuf>,
    #[serde(default = "default_n_values")]
    pub n_values: Vec<usize>,
    #[serde(default = "default_input_types")]
    pub input_types: Vec<InputType>,
    #[serde(default = "default_pipelines")]
    pub pipeline_configs: Vec<PipelineConfig>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub selection: SelectionConfig,
    #[serde(default = "default_generators")]
    pub generators: Vec<GeneratorSpec>,
    /// Synonym lexicon for builtin generators; the bundled one if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(dataset: impl Into<PathBuf>) -> Self {
        Self {
            dataset: dataset.into(),
            split: None,
            n_values: default_n_values(),
            input_types: default_input_types(),
            pipeline_configs: default_pipelines(),
            seeds: default_seeds(),
            selection: SelectionConfig::default(),
            generators: default_generators(),
            lexicon: None,
        }
    }

    /// Read a JSON config; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        let mut config: Self = serde_json::from_str(&text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut config.dataset);
        if let Some(p) = config.split.as_mut() {
            resolve(p);
        }
        if let Some(p) = config.lexicon.as_mut() {
            resolve(p);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(ExperimentError::Config("n_values must be non-empty and positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(ExperimentError::Config("at least one seed is required".into()));
        }
        if self.input_types.is_empty() || self.pipeline_configs.is_empty() {
            return Err(ExperimentError::Config(
                "input_types and pipeline_configs must be non-empty".into(),
            ));
        }
        let augments = self.pipeline_configs.iter().any(|p| *p != PipelineConfig::Base);
        if augments && self.generators.is_empty() {
            return Err(ExperimentError::Config("augmented pipelines need a generator".into()));
        }
        self.selection.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellKey {
    pub dataset: String,
    pub input_type: InputType,
    pub pipeline: PipelineConfig,
    pub n: usize,
    pub seed: u64,
}

impl std::fmt::Display for CellKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}/{}/{}/n={}/seed={}",
            self.dataset,
            self.input_type.as_str(),
            self.pipeline.as_str(),
            self.n,
            self.seed
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    #[serde(flatten)]
    pub key: CellKey,
    pub accuracy: f64,
    /// Training examples summed over intents.
    pub train_examples: usize,
    pub generator_calls: usize,
    pub warnings: usize,
}

/// Mean and sample standard deviation over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub dataset: String,
    pub input_type: InputType,
    pub pipeline: PipelineConfig,
    pub n: usize,
    pub mean: f64,
    pub stddev: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultGrid {
    pub dataset: String,
    pub n_values: Vec<usize>,
    pub input_types: Vec<InputType>,
    pub pipeline_configs: Vec<PipelineConfig>,
    pub seeds: Vec<u64>,
    pub cells: Vec<Cell>,
    pub aggregates: Vec<Aggregate>,
    /// Distinct `generator: code` pairs of degraded generator calls.
    pub warnings: Vec<String>,
}

impl ResultGrid {
    pub fn cell(&self, key: &CellKey) -> Option<&Cell> {
        self.cells.iter().find(|c| &c.key == key)
    }

    pub fn aggregate(&self, input_type: InputType, pipeline: PipelineConfig, n: usize) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.input_type == input_type && a.pipeline == pipeline && a.n == n)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("grid serializes")
    }
}

fn mean_stddev(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn aggregate(cells: &[Cell]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(String, InputType, PipelineConfig, usize), Vec<f64>> = BTreeMap::new();
    for c in cells {
        let k = &c.key;
        groups
            .entry((k.dataset.clone(), k.input_type, k.pipeline, k.n))
            .or_default()
            .push(c.accuracy);
    }
    groups
        .into_iter()
        .map(|((dataset, input_type, pipeline, n), xs)| {
            let (mean, stddev) = mean_stddev(&xs);
            Aggregate {
                dataset,
                input_type,
                pipeline,
                n,
                mean,
                stddev,
                runs: xs.len(),
            }
        })
        .collect()
}

struct Counting {
    inner: Arc<dyn ParaphraseBackend>,
    calls: Arc<AtomicUsize>,
}

impl ParaphraseBackend for Counting {
    fn paraphrase(&self, seed: &str, budget: usize) -> Result<Vec<String>, BackendError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.paraphrase(seed, budget)
    }
}

/// Shared, read-only state for all cells.
struct Prepared<'a> {
    name: &'a str,
    intents: Vec<(String, Vec<String>, Vec<EmbeddingVector>)>,
    test: IntentDataset,
    generators: &'a [Generator],
    selection: &'a SelectionConfig,
    embedder: &'a HashEmbedder,
}

impl Prepared<'_> {
    fn ensemble(&self, all: bool, calls: &Arc<AtomicUsize>) -> Result<Ensemble, GenerationError> {
        let take = if all { self.generators.len() } else { 1 };
        let wrapped = self.generators[..take]
            .iter()
            .map(|g| Generator {
                id: g.id.clone(),
                kind: g.kind,
                budget: g.budget,
                backend: Arc::new(Counting {
                    inner: g.backend.clone(),
                    calls: calls.clone(),
                }),
            })
            .collect();
        Ensemble::new(wrapped)
    }

    fn run_cell(&self, key: CellKey) -> Result<(Cell, BTreeSet<String>), ExperimentError> {
        let mut training: Vec<(String, String)> = Vec::new();
        let mut seeds: Vec<SeedUtterance> = Vec::new();
        for (intent, pool, points) in &self.intents {
            let stream = key.seed ^ fnv1a64(intent.as_bytes());
            let picked = sample_points(points, key.n, stream)?;
            for &i in picked.group(key.input_type) {
                training.push((pool[i].clone(), intent.clone()));
                seeds.push(SeedUtterance {
                    text: pool[i].clone(),
                    phrase: None,
                    intent_id: intent.clone(),
                });
            }
        }

        let calls = Arc::new(AtomicUsize::new(0));
        let mut warnings = BTreeSet::new();
        let mut warning_count = 0;
        if key.pipeline != PipelineConfig::Base {
            let ensemble = self.ensemble(key.pipeline == PipelineConfig::EnsembleSelect, &calls)?;
            let out = run_ensemble(&seeds, &ensemble)?;
            warning_count = out.warnings.len();
            warnings.extend(out.warnings.iter().map(|w| format!("{}: {}", w.generator_id, w.code)));
            let mut by_seed: BTreeMap<(&str, &str), Vec<_>> = BTreeMap::new();
            for c in &out.candidates {
                by_seed
                    .entry((c.intent_id.as_str(), c.seed_text.as_str()))
                    .or_default()
                    .push(c.clone());
            }
            for seed in &seeds {
                let cands = by_seed
                    .get(&(seed.intent_id.as_str(), seed.text.as_str()))
                    .map(Vec::as_slice)
                    .unwrap_or_default();
                let chosen: Vec<String> = if key.pipeline == PipelineConfig::GenerateOnly {
                    cands
                        .iter()
                        .take(self.selection.target_size)
                        .map(|c| c.text.clone())
                        .collect()
                } else {
                    select_sentences(cands, &seed.text, self.selection, self.embedder)
                        .selected
                        .into_iter()
                        .map(|c| c.text)
                        .collect()
                };
                training.extend(chosen.into_iter().map(|t| (t, seed.intent_id.clone())));
            }
        }

        let train_examples = training.len();
        let model = ClassifierModel::train(&IntentDataset::new(training))?;
        let report = model.evaluate(&self.test)?;
        let cell = Cell {
            key: CellKey {
                dataset: self.name.to_string(),
                ..key
            },
            accuracy: report.accuracy,
            train_examples,
            generator_calls: calls.load(Ordering::Relaxed),
            warnings: warning_count,
        };
        Ok((cell, warnings))
    }
}

/// Load the configured dataset and run every cell.
pub fn run_grid(config: &ExperimentConfig) -> Result<ResultGrid, ExperimentError> {
    config.validate()?;
    let dataset = LabeledDataset::load(&config.dataset, config.split.as_deref())?;
    run_grid_on(&dataset, config)
}

/// Run every cell of `config` against an already loaded dataset.
pub fn run_grid_on(dataset: &LabeledDataset, config: &ExperimentConfig) -> Result<ResultGrid, ExperimentError> {
    config.validate()?;
    let lexicon = Arc::new(match &config.lexicon {
        Some(p) => SynonymLexicon::load(p)?,
        None => SynonymLexicon::builtin(),
    });
    let ensemble = if config.generators.is_empty() {
        None
    } else {
        Some(Ensemble::from_specs(&config.generators, lexicon)?)
    };
    let embedder = HashEmbedder::default();
    let need = config.n_values.iter().copied().max().unwrap_or(1);
    let mut intents = Vec::new();
    for (intent, pool) in dataset.train_by_intent() {
        if pool.len() < need {
            return Err(ExperimentError::DatasetTooSmall {
                intent,
                have: pool.len(),
                need,
            });
        }
        let points = pool.iter().map(|s| embedder.embed(s)).collect();
        intents.push((intent, pool, points));
    }
    let prepared = Prepared {
        name: &dataset.name,
        intents,
        test: dataset.test_set(),
        generators: ensemble.as_ref().map(Ensemble::generators).unwrap_or_default(),
        selection: &config.selection,
        embedder: &embedder,
    };

    let mut keys = Vec::new();
    for &input_type in &config.input_types {
        for &pipeline in &config.pipeline_configs {
            for &n in &config.n_values {
                for &seed in &config.seeds {
                    keys.push(CellKey {
                        dataset: dataset.name.clone(),
                        input_type,
                        pipeline,
                        n,
                        seed,
                    });
                }
            }
        }
    }
    keys.sort();
    keys.dedup();
    let results: Vec<(Cell, BTreeSet<String>)> = keys
        .into_par_iter()
        .map(|k| prepared.run_cell(k))
        .collect::<Result<_, _>>()?;

    let mut warnings = BTreeSet::new();
    let mut cells = Vec::with_capacity(results.len());
    for (cell, w) in results {
        warnings.extend(w);
        cells.push(cell);
    }
    Ok(ResultGrid {
        dataset: dataset.name.clone(),
        n_values: config.n_values.clone(),
        input_types: config.input_types.clone(),
        pipeline_configs: config.pipeline_configs.clone(),
        seeds: config.seeds.clone(),
        aggregates: aggregate(&cells),
        cells,
        warnings: warnings.into_iter().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportLayout {
    /// Rows are input types, using the generate_select pipeline.
    Table1,
    /// Rows are pipeline configs, using diverse inputs.
    Table3,
}

impl std::str::FromStr for ReportLayout {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "table1" => Ok(ReportLayout::Table1),
            "table3" => Ok(ReportLayout::Table3),
            other => Err(format!("unknown layout {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub label: String,
    /// (mean, stddev) per n value.
    pub values: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub title: String,
    pub n_values: Vec<usize>,
    pub rows: Vec<ReportRow>,
    pub text: String,
    pub csv: String,
}

/// Tabulate mean ± stddev accuracy. Every seed of every shown cell must be
/// present.
pub fn report_table(grid: &ResultGrid, layout: ReportLayout) -> Result<Report, ExperimentError> {
    let index: BTreeMap<&CellKey, f64> = grid.cells.iter().map(|c| (&c.key, c.accuracy)).collect();
    let rows: Vec<(String, InputType, PipelineConfig)> = match layout {
        ReportLayout::Table1 => {
            let pipeline = if grid.pipeline_configs.contains(&PipelineConfig::GenerateSelect) {
                PipelineConfig::GenerateSelect
            } else {
                *grid
                    .pipeline_configs
                    .first()
                    .ok_or_else(|| ExperimentError::IncompleteGrid("any pipeline".into()))?
            };
            grid.input_types
                .iter()
                .map(|&t| (t.as_str().to_string(), t, pipeline))
                .collect()
        }
        ReportLayout::Table3 => {
            let input = if grid.input_types.contains(&InputType::Diverse) {
                InputType::Diverse
            } else {
                *grid
                    .input_types
                    .first()
                    .ok_or_else(|| ExperimentError::IncompleteGrid("any input type".into()))?
            };
            grid.pipeline_configs
                .iter()
                .map(|&p| (p.as_str().to_string(), input, p))
                .collect()
        }
    };
    let title = match layout {
        ReportLayout::Table1 => format!("{}: accuracy by input quality ({})", grid.dataset, rows.first().map_or("", |r| r.2.as_str())),
        ReportLayout::Table3 => format!("{}: accuracy by pipeline ({} inputs)", grid.dataset, rows.first().map_or("", |r| r.1.as_str())),
    };

    let mut report_rows = Vec::new();
    for (label, input_type, pipeline) in rows {
        let mut values = Vec::new();
        for &n in &grid.n_values {
            let mut xs = Vec::new();
            for &seed in &grid.seeds {
                let key = CellKey {
                    dataset: grid.dataset.clone(),
                    input_type,
                    pipeline,
                    n,
                    seed,
                };
                match index.get(&key) {
                    Some(&acc) => xs.push(acc),
                    None => return Err(ExperimentError::IncompleteGrid(key.to_string())),
                }
            }
            values.push(mean_stddev(&xs));
        }
        report_rows.push(ReportRow { label, values });
    }

    let cell_text = |(m, s): (f64, f64)| format!("{m:.3}±{s:.3}");
    let label_width = report_rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(5);
    let col_width = 13;
    let mut text = String::new();
    writeln!(text, "{title}").unwrap();
    write!(text, "{:<label_width$}", "").unwrap();
    for n in &grid.n_values {
        write!(text, "  {:>col_width$}", format!("n={n}")).unwrap();
    }
    text.push('\n');
    for row in &report_rows {
        write!(text, "{:<label_width$}", row.label).unwrap();
        for &v in &row.values {
            write!(text, "  {:>col_width$}", cell_text(v)).unwrap();
        }
        text.push('\n');
    }

    let mut csv = String::from("dataset,row,n,mean,stddev\n");
    for row in &report_rows {
        for (&n, &(m, s)) in grid.n_values.iter().zip(&row.values) {
            writeln!(csv, "{},{},{n},{m},{s}", grid.dataset, row.label).unwrap();
        }
    }
    Ok(Report {
        title,
        n_values: grid.n_values.clone(),
        rows: report_rows,
        text,
        csv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::Example;
    use crate::dataset::{synthetic_dataset, SplitManifest};

    fn config(input_types: Vec<InputType>, pipelines: Vec<PipelineConfig>, n: Vec<usize>, seeds: Vec<u64>) -> ExperimentConfig {
        ExperimentConfig {
            input_types,
            pipeline_configs: pipelines,
            n_values: n,
            seeds,
            ..ExperimentConfig::new("unused.csv")
        }
    }

    #[test]
    fn counting_cells() {
        let d = synthetic_dataset(7);
        let c = config(vec![InputType::Diverse, InputType::Narrow], vec![PipelineConfig::Base], vec![2], vec![0]);
        let grid = run_grid_on(&d, &c).unwrap();
        assert_eq!(grid.cells.len(), 2);
        assert!(grid.cells.iter().all(|c| c.generator_calls == 0 && c.train_examples == 20));
    }

    #[test]
    fn augmented_sizes_bounded() {
        let d = synthetic_dataset(7);
        let c = config(
            vec![InputType::Diverse],
            vec![PipelineConfig::GenerateOnly, PipelineConfig::GenerateSelect, PipelineConfig::EnsembleSelect],
            vec![2],
            vec![3],
        );
        let grid = run_grid_on(&d, &c).unwrap();
        for cell in &grid.cells {
            assert!(cell.generator_calls > 0);
            assert!(cell.train_examples > 20 && cell.train_examples <= 20 + 5 * 20, "{cell:?}");
            assert!((0.0..=1.0).contains(&cell.accuracy));
        }
    }

    #[test]
    fn separable_base_is_perfect() {
        let rows: Vec<Example> = [
            ("book a flight", "travel"),
            ("book flight tickets", "travel"),
            ("play some jazz", "music"),
            ("play rock songs", "music"),
        ]
        .iter()
        .map(|(t, i)| Example {
            text: t.to_string(),
            intent: i.to_string(),
        })
        .collect();
        let split = SplitManifest {
            train: vec![0, 1, 2, 3],
            test: vec![],
        };
        let mut d = LabeledDataset::new("toy".into(), rows, split).unwrap();
        d.split.test = d.split.train.clone();
        let c = config(vec![InputType::Random], vec![PipelineConfig::Base], vec![2], vec![0]);
        let grid = run_grid_on(&d, &c).unwrap();
        assert_eq!(grid.cells[0].accuracy, 1.0);
    }

    #[test]
    fn too_small() {
        let d = synthetic_dataset(7);
        let c = config(vec![InputType::Diverse], vec![PipelineConfig::Base], vec![25], vec![0]);
        assert!(matches!(
            run_grid_on(&d, &c),
            Err(ExperimentError::DatasetTooSmall { have: 24, need: 25, .. })
        ));
    }

    #[test]
    fn reports_and_incomplete() {
        let d = synthetic_dataset(7);
        let c = config(InputType::ALL.to_vec(), vec![PipelineConfig::Base], vec![1, 2], vec![0, 1]);
        let mut grid = run_grid_on(&d, &c).unwrap();
        let r = report_table(&grid, ReportLayout::Table1).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert!(r.rows.iter().all(|row| row.values.len() == 2));
        assert_eq!(r.csv.lines().count(), 1 + 6);
        let t3 = report_table(&grid, ReportLayout::Table3).unwrap();
        assert_eq!(t3.rows.len(), 1);

        grid.cells.retain(|c| !(c.key.input_type == InputType::Narrow && c.key.n == 2 && c.key.seed == 1));
        match report_table(&grid, ReportLayout::Table1) {
            Err(ExperimentError::IncompleteGrid(cell)) => assert_eq!(cell, "synthetic/narrow/base/n=2/seed=1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn config_defaults_and_validation() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"dataset": "x.csv"}"#).unwrap();
        assert_eq!(c.n_values, vec![1, 2, 4, 8]);
        assert_eq!(c.seeds.len(), 5);
        assert!(c.validate().is_ok());
        let bad = ExperimentConfig {
            n_values: vec![0],
            ..c.clone()
        };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig { seeds: vec![], ..c };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn stddev() {
        assert_eq!(mean_stddev(&[0.5]), (0.5, 0.0));
        let (m, s) = mean_stddev(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-12);
    }
}
