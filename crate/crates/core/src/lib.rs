//! Turn OpenAPI documents into intent-classifier training data.
//!
//! The pipeline runs extraction ([`extract`]), paraphrase generation
//! ([`generation`]), fidelity/diversity selection ([`selection`]) and intent
//! classification ([`classifier`]). [`sampling`] and [`experiment`] drive the
//! input-quality and ablation experiments over labelled datasets.

pub mod classifier;
pub mod dataset;
pub mod experiment;
pub mod extract;
pub mod generation;
pub mod lexicon;
pub mod sampling;
pub mod selection;
pub mod text;
pub mod wire;

pub use classifier::{ClassifierModel, EvalReport, IntentDataset, Prediction};
pub use dataset::LabeledDataset;
pub use sampling::{InputType, SamplingResult};
pub use extract::{
    ActionPhrase, ApiDocument, ApiOperation, Extraction, ExtractOptions, FormatHint, HttpMethod,
    Scenario, SeedUtterance,
};
pub use generation::{CandidateSentence, CandidateStatus, GeneratorKind, GeneratorSpec, SynonymLexicon};

pub use selection::{SelectionConfig, SelectionTrace};
pub use text::{Embedder, EmbeddingVector, HashEmbedder, Similarity, TokenSeq};
