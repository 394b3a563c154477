//! OpenAPI mining: turn operations into intent seed utterances.
//!
//! Three sources feed the seeds of an operation:
//! - its `operationId`, split into tokens and matched against a verb lexicon;
//! - its `summary` and `description`, scanned for the earliest lexicon verb
//!   and the noun run that follows it;
//! - example utterances listed under an extension key
//!   (`x-example-utterances` by default), passed through verbatim.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::lexicon::{lines_of, WordList};
use crate::text::{fnv1a64, normalize_whitespace};

pub const DEFAULT_EXTENSION_KEY: &str = "x-example-utterances";

const DEFAULT_VERBS: &str = include_str!("../data/verbs.txt");
const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");
const DEFAULT_TEMPLATES: &str = include_str!("../data/templates.txt");

/// Words that end an object run.
const BOUNDARY_WORDS: &[&str] = &[
    "of", "for", "by", "with", "in", "on", "at", "from", "into", "onto", "about", "via", "per",
    "to", "under", "over", "within", "without", "through", "between", "after", "before", "since",
    "until", "using", "across", "against", "during", "toward", "towards", "upon", "and", "or",
    "but", "nor", "so", "yet", "then", "if", "when", "while", "where", "which", "that", "because",
    "whether", "as",
];

/// A verb right after one of these is read as a participle ("is listed").
const PASSIVE_AUXILIARIES: &[&str] = &["is", "are", "was", "were", "be", "been", "being"];

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("document is not valid UTF-8: {0}")]
    Decode(String),
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("document has neither an `openapi` nor a `swagger` version key")]
    UnsupportedVersion,
    #[error("identifier is empty")]
    EmptyIdentifier,
    #[error("template set is empty")]
    EmptyTemplateSet,
}

impl ExtractError {
    pub fn code(&self) -> &'static str {
        match self {
            ExtractError::Decode(_) => "DecodeError",
            ExtractError::MalformedDocument(_) => "MalformedDocument",
            ExtractError::UnsupportedVersion => "UnsupportedVersion",
            ExtractError::EmptyIdentifier => "EmptyIdentifier",
            ExtractError::EmptyTemplateSet => "EmptyTemplateSet",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatHint {
    Yaml,
    Json,
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum HttpMethod {
    Get,
    Post,
    Put,
    Patch,
    Delete,
}

impl HttpMethod {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "get" => Some(Self::Get),
            "post" => Some(Self::Post),
            "put" => Some(Self::Put),
            "patch" => Some(Self::Patch),
            "delete" => Some(Self::Delete),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Get => "GET",
            Self::Post => "POST",
            Self::Put => "PUT",
            Self::Patch => "PATCH",
            Self::Delete => "DELETE",
        }
    }
}

impl std::fmt::Display for HttpMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiOperation {
    pub path: String,
    pub method: HttpMethod,
    pub operation_id: Option<String>,
    pub summary: Option<String>,
    pub description: Option<String>,
    pub example_utterances: Vec<String>,
    pub tags: Vec<String>,
}

impl ApiOperation {
    /// `method:path`, lowercased. One intent per operation.
    pub fn intent_id(&self) -> String {
        intent_id_for(self.method, &self.path)
    }
}

pub fn intent_id_for(method: HttpMethod, path: &str) -> String {
    format!("{}:{}", method.as_str(), path).to_lowercase()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiDocument {
    pub version: String,
    pub title: String,
    pub operations: Vec<ApiOperation>,
    /// FNV-1a 64 of the raw bytes, as 16 lowercase hex digits.
    pub source_digest: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    OperationId,
    Description,
    Metadata,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionPhrase {
    pub verb: String,
    pub object: Vec<String>,
    pub scenario: Scenario,
    /// Intent id of the operation the phrase came from.
    pub source_operation: String,
}

impl ActionPhrase {
    fn new(verb: String, object: Vec<String>, scenario: Scenario) -> Self {
        Self {
            verb,
            object,
            scenario,
            source_operation: String::new(),
        }
    }

    pub fn object_text(&self) -> String {
        self.object.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedUtterance {
    pub text: String,
    pub phrase: Option<ActionPhrase>,
    pub intent_id: String,
}

/// Verb lexicon with light inflection handling ("lists", "creating").
#[derive(Debug, Clone)]
pub struct VerbLexicon {
    words: WordList,
}

impl Default for VerbLexicon {
    fn default() -> Self {
        Self::parse(DEFAULT_VERBS)
    }
}

impl VerbLexicon {
    pub fn parse(text: &str) -> Self {
        Self {
            words: WordList::parse(text),
        }
    }

    pub fn from_words<I: IntoIterator<Item = S>, S: Into<String>>(words: I) -> Self {
        Self {
            words: WordList::from_words(words),
        }
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.words.contains(lemma)
    }

    /// The lexicon lemma `token` inflects, if any.
    pub fn lemma(&self, token: &str) -> Option<String> {
        if self.words.contains(token) {
            return Some(token.to_string());
        }
        let mut candidates: Vec<String> = Vec::new();
        if let Some(stem) = token.strip_suffix("ies") {
            candidates.push(format!("{stem}y"));
        }
        if let Some(stem) = token.strip_suffix("es") {
            candidates.push(stem.to_string());
        }
        if let Some(stem) = token.strip_suffix('s') {
            if !stem.ends_with('s') {
                candidates.push(stem.to_string());
            }
        }
        if let Some(stem) = token.strip_suffix("ied") {
            candidates.push(format!("{stem}y"));
        }
        if let Some(stem) = token.strip_suffix("ed") {
            candidates.push(stem.to_string());
            candidates.push(format!("{stem}e"));
        }
        if let Some(stem) = token.strip_suffix("ing") {
            candidates.push(stem.to_string());
            candidates.push(format!("{stem}e"));
        }
        candidates
            .into_iter()
            .find(|c| c.len() > 1 && self.words.contains(c))
    }
}

#[derive(Debug, Clone)]
pub struct ExtractOptions {
    pub extension_key: String,
    pub verbs: VerbLexicon,
    pub stopwords: WordList,
    pub templates: Vec<String>,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            extension_key: DEFAULT_EXTENSION_KEY.to_string(),
            verbs: VerbLexicon::default(),
            stopwords: default_stopwords(),
            templates: default_templates(),
        }
    }
}

pub fn default_stopwords() -> WordList {
    WordList::parse(DEFAULT_STOPWORDS)
}

pub fn default_templates() -> Vec<String> {
    lines_of(DEFAULT_TEMPLATES).map(str::to_string).collect()
}

/// Convert YAML to JSON, stringifying scalar mapping keys (`200:` etc).
fn yaml_to_json(value: serde_yaml::Value) -> Value {
    use serde_yaml::Value as Y;
    match value {
        Y::Null => Value::Null,
        Y::Bool(b) => Value::Bool(b),
        Y::Number(n) => {
            if let Some(i) = n.as_i64() {
                Value::from(i)
            } else if let Some(u) = n.as_u64() {
                Value::from(u)
            } else {
                n.as_f64()
                    .and_then(serde_json::Number::from_f64)
                    .map_or(Value::Null, Value::Number)
            }
        }
        Y::String(s) => Value::String(s),
        Y::Sequence(seq) => Value::Array(seq.into_iter().map(yaml_to_json).collect()),
        Y::Mapping(map) => {
            let mut out = serde_json::Map::new();
            for (k, v) in map {
                let key = match k {
                    Y::String(s) => s,
                    Y::Bool(b) => b.to_string(),
                    Y::Number(n) => n.to_string(),
                    Y::Null => "null".to_string(),
                    other => serde_yaml::to_string(&other).unwrap_or_default().trim().to_string(),
                };
                out.insert(key, yaml_to_json(v));
            }
            Value::Object(out)
        }
        Y::Tagged(tagged) => yaml_to_json(tagged.value),
    }
}

fn decode(raw: &[u8], hint: FormatHint) -> Result<Value, ExtractError> {
    let text = std::str::from_utf8(raw).map_err(|e| ExtractError::Decode(e.to_string()))?;
    let as_json = match hint {
        FormatHint::Json => true,
        FormatHint::Yaml => false,
        FormatHint::Auto => text.trim_start().starts_with('{'),
    };
    if as_json {
        serde_json::from_str(text).map_err(|e| ExtractError::Decode(e.to_string()))
    } else {
        serde_yaml::from_str::<serde_yaml::Value>(text)
            .map(yaml_to_json)
            .map_err(|e| ExtractError::Decode(e.to_string()))
    }
}

fn opt_text(op: &serde_json::Map<String, Value>, key: &str) -> Option<String> {
    op.get(key)
        .and_then(Value::as_str)
        .map(normalize_whitespace)
        .filter(|s| !s.is_empty())
}

fn string_list(value: Option<&Value>) -> Vec<String> {
    let items: Vec<&Value> = match value {
        Some(Value::Array(items)) => items.iter().collect(),
        Some(v @ Value::String(_)) => vec![v],
        _ => Vec::new(),
    };
    items
        .into_iter()
        .filter_map(Value::as_str)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Parse an OpenAPI 3.x or Swagger 2.0 document.
///
/// Only the `paths` section is mined; path items keep document order.
/// Unknown HTTP methods (`head`, `options`, `trace`) are skipped with a warning.
pub fn parse_document(
    raw: &[u8],
    hint: FormatHint,
    extension_key: &str,
) -> Result<ApiDocument, ExtractError> {
    let root = decode(raw, hint)?;
    let Value::Object(root) = root else {
        return Err(ExtractError::MalformedDocument(
            "top level is not a mapping".into(),
        ));
    };
    let version = match root.get("openapi").or_else(|| root.get("swagger")) {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        Some(_) | None => return Err(ExtractError::UnsupportedVersion),
    };
    let paths = match root.get("paths") {
        Some(Value::Object(paths)) => paths,
        Some(Value::Null) => return Ok(empty_document(version, &root, raw)),
        Some(_) => {
            return Err(ExtractError::MalformedDocument(
                "`paths` is not a mapping".into(),
            ))
        }
        None => return Err(ExtractError::MalformedDocument("missing `paths`".into())),
    };
    let mut operations = Vec::new();
    for (path, item) in paths {
        let Value::Object(item) = item else { continue };
        if path.is_empty() {
            continue;
        }
        for (key, op) in item {
            let Some(method) = HttpMethod::parse(key) else {
                if matches!(key.to_ascii_lowercase().as_str(), "head" | "options" | "trace") {
                    log::warn!("skipping unsupported method {key} on {path}");
                }
                continue;
            };
            let Value::Object(op) = op else { continue };
            operations.push(ApiOperation {
                path: path.clone(),
                method,
                operation_id: opt_text(op, "operationId"),
                summary: opt_text(op, "summary"),
                description: opt_text(op, "description"),
                example_utterances: string_list(op.get(extension_key)),
                tags: string_list(op.get("tags")),
            });
        }
    }
    let mut doc = empty_document(version, &root, raw);
    doc.operations = operations;
    Ok(doc)
}

fn empty_document(version: String, root: &serde_json::Map<String, Value>, raw: &[u8]) -> ApiDocument {
    let title = root
        .get("info")
        .and_then(|i| i.get("title"))
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    ApiDocument {
        version,
        title,
        operations: Vec::new(),
        source_digest: format!("{:016x}", fnv1a64(raw)),
    }
}

fn is_boundary(prev: Option<char>, cur: char, next: Option<char>) -> bool {
    let Some(prev) = prev else { return false };
    if prev.is_ascii_digit() != cur.is_ascii_digit() {
        return true;
    }
    if prev.is_lowercase() && cur.is_uppercase() {
        return true;
    }
    // "HTTPServer": split before the 'S' that starts "Server".
    prev.is_uppercase() && cur.is_uppercase() && next.is_some_and(char::is_lowercase)
}

/// Split an identifier into lowercase word tokens.
///
/// Splits on any non-alphanumeric character, on letter/digit changes and on
/// camel-case boundaries. A run of capitals followed by a lowercase letter
/// splits before its last capital.
pub fn split_identifier(identifier: &str) -> Result<Vec<String>, ExtractError> {
    if identifier.trim().is_empty() {
        return Err(ExtractError::EmptyIdentifier);
    }
    let mut tokens = Vec::new();
    for chunk in identifier.split(|c: char| !c.is_alphanumeric()) {
        let chars: Vec<char> = chunk.chars().collect();
        let mut current = String::new();
        for (i, &c) in chars.iter().enumerate() {
            let prev = i.checked_sub(1).map(|j| chars[j]);
            if is_boundary(prev, c, chars.get(i + 1).copied()) && !current.is_empty() {
                tokens.push(std::mem::take(&mut current).to_lowercase());
            }
            current.push(c);
        }
        if !current.is_empty() {
            tokens.push(current.to_lowercase());
        }
    }
    Ok(tokens)
}

/// Verb = first token the lexicon knows; object = the tokens after it
/// minus stop words.
pub fn phrase_from_identifier(
    tokens: &[String],
    verbs: &VerbLexicon,
    stopwords: &WordList,
) -> Option<ActionPhrase> {
    let (pos, verb) = tokens
        .iter()
        .enumerate()
        .find_map(|(i, t)| verbs.lemma(t).map(|v| (i, v)))?;
    let object = tokens[pos + 1..]
        .iter()
        .filter(|t| !stopwords.contains(t))
        .cloned()
        .collect();
    Some(ActionPhrase::new(verb, object, Scenario::OperationId))
}

struct RawToken {
    word: String,
    /// The raw piece ended in clause punctuation (`,` `;` `.` ...).
    ends_clause: bool,
}

fn clause_tokens(sentence: &str) -> Vec<RawToken> {
    sentence
        .split_whitespace()
        .filter_map(|raw| {
            let word = raw.trim_matches(|c: char| !c.is_alphanumeric());
            if word.is_empty() {
                return None;
            }
            let ends_clause = raw
                .trim_end_matches(|c: char| matches!(c, ')' | ']' | '"' | '\''))
                .ends_with(|c: char| matches!(c, ',' | ';' | ':' | '.' | '!' | '?' | '('));
            Some(RawToken {
                word: word.to_lowercase(),
                ends_clause,
            })
        })
        .collect()
}

/// Heuristic verb/direct-object extraction from free text.
///
/// Takes the earliest lexicon verb that is not a participle after a form of
/// "be". The object is the first run of content words after it, skipping
/// leading stop words, conjunctions and coordinated verbs, and ending at the
/// first stop word, preposition, conjunction or clause punctuation.
pub fn phrase_from_text(
    sentence: &str,
    verbs: &VerbLexicon,
    stopwords: &WordList,
) -> Option<ActionPhrase> {
    let tokens = clause_tokens(sentence);
    let (pos, verb) = tokens.iter().enumerate().find_map(|(i, t)| {
        let after_aux = i > 0 && PASSIVE_AUXILIARIES.contains(&tokens[i - 1].word.as_str());
        if after_aux {
            return None;
        }
        verbs.lemma(&t.word).map(|v| (i, v))
    })?;
    let is_function_word =
        |w: &str| stopwords.contains(w) || BOUNDARY_WORDS.contains(&w);
    let mut object = Vec::new();
    if !tokens[pos].ends_clause {
        let mut rest = tokens[pos + 1..].iter().peekable();
        // Skip "and delete a" in "retrieve and delete a record".
        while let Some(t) = rest.peek() {
            if is_function_word(&t.word) || verbs.lemma(&t.word).is_some() {
                let stop = t.ends_clause;
                rest.next();
                if stop {
                    break;
                }
            } else {
                break;
            }
        }
        for t in rest {
            if is_function_word(&t.word) {
                break;
            }
            object.push(t.word.clone());
            if t.ends_clause {
                break;
            }
        }
    }
    Some(ActionPhrase::new(verb, object, Scenario::Description))
}

/// Instantiate every template for `phrase`. With an empty object, "the
/// {object}" drops out entirely; duplicate realizations are removed.
pub fn realize_seed_sentences(
    phrase: &ActionPhrase,
    templates: &[String],
    intent_id: &str,
) -> Result<Vec<SeedUtterance>, ExtractError> {
    if templates.is_empty() {
        return Err(ExtractError::EmptyTemplateSet);
    }
    let object = phrase.object_text();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for template in templates {
        let filled = if object.is_empty() {
            template
                .replace("the {object}", "")
                .replace("{object}", "")
                .replace("{verb}", &phrase.verb)
        } else {
            template
                .replace("{verb}", &phrase.verb)
                .replace("{object}", &object)
        };
        let text = normalize_whitespace(&filled);
        if !text.is_empty() && seen.insert(text.clone()) {
            out.push(SeedUtterance {
                text,
                phrase: Some(phrase.clone()),
                intent_id: intent_id.to_string(),
            });
        }
    }
    Ok(out)
}

/// Seeds and phrases for one operation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationExtraction {
    pub intent_id: String,
    pub method: HttpMethod,
    pub path: String,
    pub operation_id: Option<String>,
    pub summary: Option<String>,
    pub phrases: Vec<ActionPhrase>,
    pub seeds: Vec<SeedUtterance>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioCounts {
    pub operation_id: usize,
    pub description: usize,
    pub metadata: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extraction {
    pub source_digest: String,
    pub version: String,
    pub title: String,
    pub operations: Vec<OperationExtraction>,
}

impl Extraction {
    pub fn seeds(&self) -> impl Iterator<Item = &SeedUtterance> {
        self.operations.iter().flat_map(|o| o.seeds.iter())
    }

    /// Seed counts per originating scenario.
    pub fn scenario_counts(&self) -> ScenarioCounts {
        let mut counts = ScenarioCounts::default();
        for seed in self.seeds() {
            match seed.phrase.as_ref().map(|p| p.scenario) {
                Some(Scenario::OperationId) => counts.operation_id += 1,
                Some(Scenario::Description) => counts.description += 1,
                Some(Scenario::Metadata) | None => counts.metadata += 1,
            }
        }
        counts
    }
}

/// Run all three scenarios over one operation. Seeds are deduplicated by
/// text, keeping the first source in the order operationId, summary,
/// description, metadata.
pub fn extract_operation(
    op: &ApiOperation,
    options: &ExtractOptions,
) -> Result<OperationExtraction, ExtractError> {
    let intent_id = op.intent_id();
    let mut phrases: Vec<ActionPhrase> = Vec::new();
    if let Some(id) = &op.operation_id {
        let tokens = split_identifier(id)?;
        phrases.extend(phrase_from_identifier(&tokens, &options.verbs, &options.stopwords));
    }
    for text in [&op.summary, &op.description].into_iter().flatten() {
        phrases.extend(phrase_from_text(text, &options.verbs, &options.stopwords));
    }
    for p in &mut phrases {
        p.source_operation = intent_id.clone();
    }
    let mut seen = HashSet::new();
    let mut seeds = Vec::new();
    let mut unique_phrases: Vec<ActionPhrase> = Vec::new();
    for phrase in phrases {
        if unique_phrases
            .iter()
            .any(|p| p.verb == phrase.verb && p.object == phrase.object)
        {
            continue;
        }
        for seed in realize_seed_sentences(&phrase, &options.templates, &intent_id)? {
            if seen.insert(seed.text.clone()) {
                seeds.push(seed);
            }
        }
        unique_phrases.push(phrase);
    }
    for example in &op.example_utterances {
        let text = normalize_whitespace(example);
        if !text.is_empty() && seen.insert(text.clone()) {
            seeds.push(SeedUtterance {
                text,
                phrase: None,
                intent_id: intent_id.clone(),
            });
        }
    }
    Ok(OperationExtraction {
        intent_id,
        method: op.method,
        path: op.path.clone(),
        operation_id: op.operation_id.clone(),
        summary: op.summary.clone(),
        phrases: unique_phrases,
        seeds,
    })
}

/// Parse a document and extract seeds for every operation.
pub fn extract_document(
    raw: &[u8],
    hint: FormatHint,
    options: &ExtractOptions,
) -> Result<Extraction, ExtractError> {
    let doc = parse_document(raw, hint, &options.extension_key)?;
    let operations = doc
        .operations
        .iter()
        .map(|op| extract_operation(op, options))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Extraction {
        source_digest: doc.source_digest,
        version: doc.version,
        title: doc.title,
        operations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn strs(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    const FIG3: &str = r#"
openapi: 3.0.0
info:
  title: Process Admin
  version: "1.0"
paths:
  /process-instances:
    get:
      operationId: listProcessInstances
      summary: Lists process instances
      responses:
        200:
          description: OK
"#;

    #[test]
    fn parses_single_operation() {
        let doc = parse_document(FIG3.as_bytes(), FormatHint::Auto, DEFAULT_EXTENSION_KEY).unwrap();
        assert_eq!(doc.operations.len(), 1);
        let op = &doc.operations[0];
        assert_eq!(op.operation_id.as_deref(), Some("listProcessInstances"));
        assert_eq!(op.method, HttpMethod::Get);
        assert_eq!(op.intent_id(), "get:/process-instances");
        assert_eq!(doc.title, "Process Admin");
    }

    #[test]
    fn empty_paths() {
        let raw = br#"{"openapi": "3.0.0", "paths": {}}"#;
        let doc = parse_document(raw, FormatHint::Json, DEFAULT_EXTENSION_KEY).unwrap();
        assert!(doc.operations.is_empty());
    }

    #[test]
    fn copies_example_utterances() {
        let raw = br#"
swagger: "2.0"
paths:
  /cases:
    get:
      x-example-utterances: ["  show my open cases ", ""]
    head:
      summary: ignored
"#;
        let doc = parse_document(raw, FormatHint::Yaml, DEFAULT_EXTENSION_KEY).unwrap();
        assert_eq!(doc.operations.len(), 1);
        assert_eq!(doc.operations[0].example_utterances, vec!["show my open cases"]);
        let other = parse_document(raw, FormatHint::Yaml, "x-utterances").unwrap();
        assert!(other.operations[0].example_utterances.is_empty());
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_document(b"- a\n- b\n", FormatHint::Auto, DEFAULT_EXTENSION_KEY),
            Err(ExtractError::MalformedDocument(_))
        ));
        assert!(matches!(
            parse_document(b"openapi: 3.0.0\n", FormatHint::Auto, DEFAULT_EXTENSION_KEY),
            Err(ExtractError::MalformedDocument(_))
        ));
        assert!(matches!(
            parse_document(b"paths: {}\n", FormatHint::Auto, DEFAULT_EXTENSION_KEY),
            Err(ExtractError::UnsupportedVersion)
        ));
        assert!(matches!(
            parse_document(&[0xff, 0xfe], FormatHint::Auto, DEFAULT_EXTENSION_KEY),
            Err(ExtractError::Decode(_))
        ));
        assert!(matches!(
            parse_document(b"{not json", FormatHint::Json, DEFAULT_EXTENSION_KEY),
            Err(ExtractError::Decode(_))
        ));
    }

    #[test]
    fn split_identifier_examples() {
        assert_eq!(
            split_identifier("listProcessInstances").unwrap(),
            strs(&["list", "process", "instances"])
        );
        assert_eq!(
            split_identifier("get_user_by_id").unwrap(),
            strs(&["get", "user", "by", "id"])
        );
        assert_eq!(
            split_identifier("HTTPServerStart").unwrap(),
            strs(&["http", "server", "start"])
        );
        assert_eq!(
            split_identifier("getV2-items").unwrap(),
            strs(&["get", "v", "2", "items"])
        );
        assert!(matches!(split_identifier(""), Err(ExtractError::EmptyIdentifier)));
    }

    #[test]
    fn phrase_from_identifier_examples() {
        let verbs = VerbLexicon::default();
        let stop = default_stopwords();
        let p = phrase_from_identifier(&strs(&["list", "process", "instances"]), &verbs, &stop).unwrap();
        assert_eq!(p.verb, "list");
        assert_eq!(p.object, strs(&["process", "instances"]));
        assert!(phrase_from_identifier(&strs(&["process", "instances"]), &verbs, &stop).is_none());
        let p = phrase_from_identifier(&strs(&["get", "user", "by", "id"]), &verbs, &stop).unwrap();
        assert_eq!(p.verb, "get");
        assert_eq!(p.object, strs(&["user", "id"]));
    }

    #[test]
    fn phrase_from_text_examples() {
        let verbs = VerbLexicon::default();
        let stop = default_stopwords();
        let p = phrase_from_text("Lists all process instances for a given account", &verbs, &stop).unwrap();
        assert_eq!(p.verb, "list");
        assert_eq!(p.object, strs(&["process", "instances"]));
        assert!(phrase_from_text("This endpoint is deprecated", &verbs, &stop).is_none());
        let p = phrase_from_text("Retrieve and delete a record", &verbs, &stop).unwrap();
        assert_eq!(p.verb, "retrieve");
        assert_eq!(p.object, strs(&["record"]));
        let p = phrase_from_text("Creates a user, then notifies admins.", &verbs, &stop).unwrap();
        assert_eq!(p.verb, "create");
        assert_eq!(p.object, strs(&["user"]));
        // participle after "is" is skipped
        let p = phrase_from_text("Data is updated; returns the job status", &verbs, &stop).unwrap();
        assert_eq!(p.verb, "return");
        assert_eq!(p.object, strs(&["job", "status"]));
    }

    #[test]
    fn realize_examples() {
        let templates = default_templates();
        let phrase = ActionPhrase::new("list".into(), strs(&["process", "instances"]), Scenario::OperationId);
        let seeds: Vec<String> = realize_seed_sentences(&phrase, &templates, "x")
            .unwrap()
            .into_iter()
            .map(|s| s.text)
            .collect();
        assert!(seeds.contains(&"list the process instances".to_string()));
        assert!(seeds.contains(&"can you list the process instances".to_string()));
        assert_eq!(seeds.len(), 5);

        let phrase = ActionPhrase::new("help".into(), vec![], Scenario::OperationId);
        let seeds: Vec<String> = realize_seed_sentences(&phrase, &templates, "x")
            .unwrap()
            .into_iter()
            .map(|s| s.text)
            .collect();
        assert_eq!(seeds, strs(&["help", "can you help", "i want to help", "please help"]));
        assert!(matches!(
            realize_seed_sentences(&phrase, &[], "x"),
            Err(ExtractError::EmptyTemplateSet)
        ));
    }

    #[test]
    fn metadata_passes_through() {
        let raw = br#"
openapi: 3.0.1
paths:
  /cases:
    get:
      x-example-utterances: ["show my open cases"]
"#;
        let ex = extract_document(raw, FormatHint::Auto, &ExtractOptions::default()).unwrap();
        let seeds: Vec<&SeedUtterance> = ex.seeds().collect();
        assert_eq!(seeds.len(), 1);
        assert_eq!(seeds[0].text, "show my open cases");
        assert!(seeds[0].phrase.is_none());
        assert_eq!(ex.scenario_counts().metadata, 1);
    }

    proptest! {
        #[test]
        fn split_is_idempotent(id in "[A-Za-z0-9_-]{1,24}") {
            prop_assume!(id.chars().any(|c| c.is_alphanumeric()));
            let once = split_identifier(&id).unwrap();
            let twice = split_identifier(&once.join("_")).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn identifier_verbs_come_from_lexicon(id in "[A-Za-z_]{1,24}") {
            prop_assume!(id.chars().any(|c| c.is_alphanumeric()));
            let verbs = VerbLexicon::default();
            let tokens = split_identifier(&id).unwrap();
            if let Some(p) = phrase_from_identifier(&tokens, &verbs, &default_stopwords()) {
                prop_assert!(verbs.contains(&p.verb));
            }
        }
    }
}
