use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::Value;
use utterancesmith::classifier::{ClassifierModel, IntentDataset};
use utterancesmith::dataset::LabeledDataset;
use utterancesmith::experiment::{report_table, run_grid, ExperimentConfig, ReportLayout};
use utterancesmith::extract::{extract_document, ExtractOptions, Extraction, FormatHint};
use utterancesmith::generation::{run_ensemble, CandidateSentence, Ensemble, GeneratorKind, GeneratorSpec, SynonymLexicon};
use utterancesmith::selection::{select_sentences, SelectionConfig};
use utterancesmith::{HashEmbedder, SeedUtterance};
use utterancesmith_service::Store;

const DEFAULT_STORE: &str = "utterancesmith-store";

#[derive(Parser)]
#[command(name = "utterancesmith", version, about = "Turn OpenAPI documents into intent-classifier training data")]
struct Cli {
    /// Fixes all randomness (builtin paraphraser shuffles, experiment seeds).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Auto,
    Yaml,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Layout {
    Table1,
    Table3,
}

#[derive(Subcommand)]
enum Command {
    /// Extract operations, action phrases and seed utterances.
    Extract {
        spec: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        format: Format,
        /// Also write the seed utterances to this file.
        #[arg(long)]
        seeds_out: Option<PathBuf>,
    },
    /// Run a generator ensemble over seed utterances.
    Generate {
        /// Seeds JSON (a seed list or a full extraction).
        seeds: PathBuf,
        /// Generator config: a GeneratorSpec list or {"generators": [...]}.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Filter and select candidates for one seed.
    Select {
        /// Candidates JSON (generate output, a candidate list or a string list).
        candidates: PathBuf,
        #[arg(long)]
        seed_text: String,
        #[arg(long, default_value_t = 0.4)]
        theta: f64,
        #[arg(long, default_value_t = 1)]
        gamma: usize,
        #[arg(short = 'N', long = "target-size", default_value_t = 5)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        orders: Vec<usize>,
    },
    /// Train a classifier on a `text,intent` CSV.
    Train {
        dataset: PathBuf,
        /// Train only on the split manifest's train rows.
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a trained model on a `text,intent` CSV.
    Evaluate {
        model: PathBuf,
        dataset: PathBuf,
        /// Evaluate only on the split manifest's test rows.
        #[arg(long)]
        split: Option<PathBuf>,
    },
    /// Run an experiment grid.
    Experiment {
        config: PathBuf,
        /// Print a table instead of the grid JSON.
        #[arg(long, value_enum)]
        report: Option<Layout>,
        /// Print the table as CSV.
        #[arg(long, requires = "report")]
        csv: bool,
        /// Also write the grid JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the REST API and review UI.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "UTTERANCESMITH_STORE", default_value = DEFAULT_STORE)]
        store: PathBuf,
        /// Directory of built UI assets served under `/`.
        #[arg(long)]
        ui: Option<PathBuf>,
    },
    /// Serve the reference paraphrase backend.
    MockBackend {
        #[arg(long, default_value_t = 8090)]
        port: u16,
    },
}

/// A domain failure: machine-readable code plus message.
struct Failure {
    code: String,
    message: String,
}

impl Failure {
    fn new(code: &str, message: impl std::fmt::Display) -> Self {
        Self {
            code: code.to_string(),
            message: message.to_string(),
        }
    }
}

macro_rules! impl_from_coded {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::new(e.code(), &e)
            }
        }
    )*};
}

impl_from_coded!(
    utterancesmith::extract::ExtractError,
    utterancesmith::generation::GenerationError,
    utterancesmith::classifier::ClassifierError,
    utterancesmith::experiment::ExperimentError,
    utterancesmith_service::ServiceError
);

impl From<utterancesmith::dataset::DatasetError> for Failure {
    fn from(e: utterancesmith::dataset::DatasetError) -> Self {
        Failure::new("DatasetError", e)
    }
}

impl From<utterancesmith::selection::SelectionConfigError> for Failure {
    fn from(e: utterancesmith::selection::SelectionConfigError) -> Self {
        Failure::new("InvalidSelectionConfig", e)
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::new("IoError", format!("{}: {e}", path.display())))
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    serde_json::from_slice(&read(path)?).map_err(|e| Failure::new("InvalidJson", format!("{}: {e}", path.display())))
}

fn decode<T: serde::de::DeserializeOwned>(value: Value, what: &str) -> Result<T, Failure> {
    serde_json::from_value(value).map_err(|e| Failure::new("InvalidInput", format!("{what}: {e}")))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::new("IoError", format!("{}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

/// Print to stdout, or write to `out` when given.
fn emit(out: Option<&Path>, contents: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn extract(spec: &Path, format: Format, seeds_out: Option<&Path>) -> Result<(), Failure> {
    let hint = match format {
        Format::Auto => FormatHint::Auto,
        Format::Yaml => FormatHint::Yaml,
        Format::Json => FormatHint::Json,
    };
    let extraction = extract_document(&read(spec)?, hint, &ExtractOptions::default())?;
    if let Some(p) = seeds_out {
        let seeds: Vec<&SeedUtterance> = extraction.seeds().collect();
        write(p, &to_json(&seeds))?;
    }
    emit(None, &to_json(&extraction))
}

fn load_seeds(path: &Path) -> Result<Vec<SeedUtterance>, Failure> {
    let value = read_json(path)?;
    if value.is_array() {
        return decode(value, "seeds");
    }
    let extraction: Extraction = decode(value, "extraction")?;
    Ok(extraction.seeds().cloned().collect())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GeneratorConfig {
    List(Vec<GeneratorSpec>),
    Object {
        generators: Vec<GeneratorSpec>,
        #[serde(default)]
        parallelism: Option<usize>,
        #[serde(default)]
        lexicon: Option<PathBuf>,
    },
}

fn generate(seeds: &Path, config: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<(), Failure> {
    let seeds = load_seeds(seeds)?;
    let (mut specs, parallelism, lexicon) = match decode(read_json(config)?, "generator config")? {
        GeneratorConfig::List(specs) => (specs, None, None),
        GeneratorConfig::Object {
            generators,
            parallelism,
            lexicon,
        } => (generators, parallelism, lexicon),
    };
    if let Some(s) = seed {
        for spec in specs.iter_mut().filter(|g| g.kind == GeneratorKind::BuiltinRule) {
            spec.params.entry("seed_rng").or_insert(s.into());
        }
    }
    let lexicon = match lexicon {
        Some(p) => SynonymLexicon::load(&config.parent().unwrap_or(Path::new("")).join(p))?,
        None => SynonymLexicon::builtin(),
    };
    let mut ensemble = Ensemble::from_specs(&specs, Arc::new(lexicon))?;
    if let Some(p) = parallelism {
        ensemble = ensemble.with_parallelism(p);
    }
    let output = run_ensemble(&seeds, &ensemble)?;
    for w in &output.warnings {
        eprintln!("warning[{}]: {} on {:?}: {}", w.code, w.generator_id, w.seed_text, w.detail);
    }
    emit(out, &to_json(&output))
}

fn load_candidates(path: &Path, seed_text: &str) -> Result<Vec<CandidateSentence>, Failure> {
    let mut value = read_json(path)?;
    if let Some(inner) = value.get_mut("candidates") {
        value = inner.take();
    }
    let items = value
        .as_array()
        .ok_or_else(|| Failure::new("InvalidInput", "candidates must be a JSON list"))?;
    if items.iter().all(Value::is_string) {
        return Ok(items
            .iter()
            .filter_map(Value::as_str)
            .map(|t| CandidateSentence::new(t, "input", seed_text, ""))
            .collect());
    }
    let all: Vec<CandidateSentence> = decode(value, "candidates")?;
    Ok(all.into_iter().filter(|c| c.seed_text == seed_text).collect())
}

fn select(candidates: &Path, seed_text: &str, config: SelectionConfig) -> Result<(), Failure> {
    config.validate()?;
    let candidates = load_candidates(candidates, seed_text)?;
    let trace = select_sentences(&candidates, seed_text, &config, &HashEmbedder::default());
    emit(None, &to_json(&trace))
}

fn load_dataset(path: &Path, split: Option<&Path>, part: fn(&LabeledDataset) -> IntentDataset) -> Result<IntentDataset, Failure> {
    match split {
        Some(s) => Ok(part(&LabeledDataset::load(path, Some(s))?)),
        None => {
            let file = std::fs::File::open(path).map_err(|e| Failure::new("IoError", format!("{}: {e}", path.display())))?;
            let rows = utterancesmith::dataset::read_csv(file)?;
            Ok(IntentDataset::new(rows.into_iter().map(|e| (e.text, e.intent))))
        }
    }
}

fn train(dataset: &Path, split: Option<&Path>, out: Option<&Path>) -> Result<(), Failure> {
    let data = load_dataset(dataset, split, LabeledDataset::train_set)?;
    let model = ClassifierModel::train(&data)?;
    emit(out, &(model.to_json() + "\n"))
}

fn evaluate(model: &Path, dataset: &Path, split: Option<&Path>) -> Result<(), Failure> {
    let json = String::from_utf8(read(model)?).map_err(|e| Failure::new("InvalidModel", e))?;
    let model = ClassifierModel::from_json(&json)?;
    let data = load_dataset(dataset, split, LabeledDataset::test_set)?;
    emit(None, &to_json(&model.evaluate(&data)?))
}

fn experiment(config: &Path, report: Option<Layout>, csv: bool, out: Option<&Path>, seed: Option<u64>) -> Result<(), Failure> {
    let mut config = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        config.seeds = vec![s];
    }
    let grid = run_grid(&config)?;
    if let Some(p) = out {
        write(p, &grid.to_json())?;
    }
    match report {
        None => emit(None, &(grid.to_json() + "\n")),
        Some(layout) => {
            let layout = match layout {
                Layout::Table1 => ReportLayout::Table1,
                Layout::Table3 => ReportLayout::Table3,
            };
            let table = report_table(&grid, layout)?;
            emit(None, if csv { &table.csv } else { &table.text })
        }
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, Failure> {
    tokio::runtime::Runtime::new().map_err(|e| Failure::new("RuntimeError", e))
}

fn bind(rt: &tokio::runtime::Runtime, port: u16) -> Result<tokio::net::TcpListener, Failure> {
    rt.block_on(tokio::net::TcpListener::bind(("0.0.0.0", port)))
        .map_err(|e| Failure::new("BindError", format!("port {port}: {e}")))
}

fn serve(port: u16, store: &Path, ui: Option<PathBuf>) -> Result<(), Failure> {
    let store = Store::open(store)?;
    let rt = runtime()?;
    let listener = bind(&rt, port)?;
    eprintln!("serving on http://{}", listener.local_addr().map_err(|e| Failure::new("BindError", e))?);
    rt.block_on(utterancesmith_service::serve(listener, store, ui))
        .map_err(|e| Failure::new("ServeError", e))
}

fn mock_backend(port: u16) -> Result<(), Failure> {
    let rt = runtime()?;
    let listener = bind(&rt, port)?;
    eprintln!("mock backend on http://{}", listener.local_addr().map_err(|e| Failure::new("BindError", e))?);
    rt.block_on(utterancesmith_service::serve_mock(listener))
        .map_err(|e| Failure::new("ServeError", e))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Extract { spec, format, seeds_out } => extract(&spec, format, seeds_out.as_deref()),
        Command::Generate { seeds, config, out } => generate(&seeds, &config, out.as_deref(), cli.seed),
        Command::Select {
            candidates,
            seed_text,
            theta,
            gamma,
            n,
            orders,
        } => select(
            &candidates,
            &seed_text,
            SelectionConfig {
                theta,
                gamma,
                target_size: n,
                ngram_orders: orders,
            },
        ),
        Command::Train { dataset, split, out } => train(&dataset, split.as_deref(), out.as_deref()),
        Command::Evaluate { model, dataset, split } => evaluate(&model, &dataset, split.as_deref()),
        Command::Experiment {
            config,
            report,
            csv,
            out,
        } => experiment(&config, report, csv, out.as_deref(), cli.seed),
        Command::Serve { port, store, ui } => serve(port, &store, ui),
        Command::MockBackend { port } => mock_backend(port),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error[{}]: {}", f.code, f.message);
            ExitCode::from(1)
        }
    }
}
