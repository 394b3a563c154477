//! Labelled utterance datasets: CSV (`text,intent`) plus a JSON split
//! manifest `{"train": [...], "test": [...]}` of row indices.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{Example, IntentDataset};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad split manifest: {0}")]
    Split(String),
    #[error("csv header must be `text,intent`")]
    Header,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitManifest {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub name: String,
    pub rows: Vec<Example>,
    pub split: SplitManifest,
}

#[derive(Deserialize, Serialize)]
struct CsvRow {
    text: String,
    intent: String,
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<Example>, DatasetError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "text" || &headers[1] != "intent" {
        return Err(DatasetError::Header);
    }
    rdr.deserialize::<CsvRow>()
        .map(|r| {
            r.map(|row| Example {
                text: row.text,
                intent: row.intent,
            })
            .map_err(DatasetError::from)
        })
        .collect()
}

pub fn write_csv<W: Write>(writer: W, rows: &[Example]) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(CsvRow {
            text: row.text.clone(),
            intent: row.intent.clone(),
        })?;
    }
    if rows.is_empty() {
        w.write_record(["text", "intent"])?;
    }
    w.flush().map_err(|source| DatasetError::Io {
        path: PathBuf::from("<csv>"),
        source,
    })?;
    Ok(())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// `foo.csv` → `foo.split.json`
pub fn default_split_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("split.json")
}

/// Every third row of each intent goes to test.
pub fn interleaved_split(rows: &[Example]) -> SplitManifest {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    let mut split = SplitManifest::default();
    for (i, row) in rows.iter().enumerate() {
        let k = seen.entry(row.intent.as_str()).or_default();
        if *k % 3 == 2 {
            split.test.push(i);
        } else {
            split.train.push(i);
        }
        *k += 1;
    }
    split
}

impl LabeledDataset {
    /// Load a CSV and its split manifest. Without an explicit manifest the
    /// sibling `<stem>.split.json` is used, then [`interleaved_split`].
    pub fn load(csv_path: &Path, split_path: Option<&Path>) -> Result<Self, DatasetError> {
        let file = std::fs::File::open(csv_path).map_err(io_err(csv_path))?;
        let rows = read_csv(file)?;
        let sibling = default_split_path(csv_path);
        let split = match split_path {
            Some(p) => read_split(p)?,
            None if sibling.exists() => read_split(&sibling)?,
            None => interleaved_split(&rows),
        };
        let name = csv_path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("dataset")
            .to_string();
        Self::new(name, rows, split)
    }

    pub fn new(name: String, rows: Vec<Example>, split: SplitManifest) -> Result<Self, DatasetError> {
        let mut used = BTreeSet::new();
        for &i in split.train.iter().chain(&split.test) {
            if i >= rows.len() {
                return Err(DatasetError::Split(format!("index {i} out of range")));
            }
            if !used.insert(i) {
                return Err(DatasetError::Split(format!("index {i} appears twice")));
            }
        }
        Ok(Self { name, rows, split })
    }

    pub fn train_rows(&self) -> impl Iterator<Item = &Example> {
        self.split.train.iter().map(|&i| &self.rows[i])
    }

    pub fn test_rows(&self) -> impl Iterator<Item = &Example> {
        self.split.test.iter().map(|&i| &self.rows[i])
    }

    /// Training utterances grouped by intent, in row order.
    pub fn train_by_intent(&self) -> BTreeMap<String, Vec<String>> {
        let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for row in self.train_rows() {
            out.entry(row.intent.clone()).or_default().push(row.text.clone());
        }
        out
    }

    pub fn test_set(&self) -> IntentDataset {
        IntentDataset::new(self.test_rows().map(|e| (e.text.clone(), e.intent.clone())))
    }

    pub fn train_set(&self) -> IntentDataset {
        IntentDataset::new(self.train_rows().map(|e| (e.text.clone(), e.intent.clone())))
    }
}

pub fn read_split(path: &Path) -> Result<SplitManifest, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| DatasetError::Split(e.to_string()))
}

/// One phrasing family of an intent: patterns with a `{}` slot and the
/// fillers for it.
struct Facet {
    patterns: &'static [&'static str],
    fillers: &'static [&'static str],
    size: usize,
}

const TIMES: &[&str] = &["at 6am", "at seven thirty", "at noon", "tomorrow morning", "in ten minutes", "at 5 pm", "on monday", "tonight"];
const PLACES: &[&str] = &["in london", "in paris", "for boston", "in tokyo", "near me", "this weekend", "today", "in berlin"];
const CITIES: &[&str] = &["london", "paris", "boston", "tokyo", "berlin", "madrid", "chicago", "rome"];
const GENRES: &[&str] = &["jazz", "rock", "classical", "pop", "taylor swift", "the beatles", "hip hop", "country"];
const FOODS: &[&str] = &["pizza", "sushi", "a burger", "thai curry", "tacos", "noodles", "a salad", "fried chicken"];
const AMOUNTS: &[&str] = &["50 dollars", "100 euros", "twenty pounds", "the rent money", "500 dollars", "ten bucks", "300 euros", "my savings"];
const CARDS: &[&str] = &["card", "new card", "debit card", "credit card", "replacement card", "visa card", "bank card", "mastercard"];
const ROOMS: &[&str] = &["kitchen", "bedroom", "living room", "bathroom", "hallway", "garage", "office", "basement"];

macro_rules! facet {
    ($size:expr, $fillers:expr, [$($p:expr),+ $(,)?]) => {
        Facet { patterns: &[$($p),+], fillers: $fillers, size: $size }
    };
}

fn synthetic_intents() -> Vec<(&'static str, [Facet; 4])> {
    vec![
        ("alarm_set", [
            facet!(12, TIMES, ["set an alarm {}", "set the alarm {}", "alarm for me {}"]),
            facet!(10, TIMES, ["wake me up {}", "wake me {}", "i have to wake up {}"]),
            facet!(10, TIMES, ["remind me to get out of bed {}", "i need a reminder to rise {}", "get me out of bed {}"]),
            facet!(8, TIMES, ["ring the buzzer {}", "buzz me {}", "sound the buzzer {}"]),
        ]),
        ("weather_query", [
            facet!(12, PLACES, ["what is the weather {}", "weather forecast {}", "tell me the weather {}"]),
            facet!(10, PLACES, ["will it rain {}", "is rain expected {}", "do i need an umbrella {}"]),
            facet!(10, PLACES, ["how hot is it {}", "what is the temperature {}", "how cold will it be {}"]),
            facet!(8, PLACES, ["is it sunny {}", "will there be sunshine {}", "any clouds {}"]),
        ]),
        ("music_play", [
            facet!(12, GENRES, ["play some {} music", "play {} songs", "put on {} music"]),
            facet!(10, GENRES, ["start the {} playlist", "shuffle my {} playlist", "open the {} playlist"]),
            facet!(10, GENRES, ["i want to hear {}", "let me listen to {}", "listen to some {}"]),
            facet!(8, GENRES, ["crank the {} tunes", "blast {} tunes", "tunes by {} now"]),
        ]),
        ("food_order", [
            facet!(12, FOODS, ["order {} for delivery", "order {} online", "i want to order {}"]),
            facet!(10, FOODS, ["get me some {} takeaway", "takeaway {} please", "find {} takeaway nearby"]),
            facet!(10, FOODS, ["i am hungry for {}", "feed me {}", "starving for {}"]),
            facet!(8, FOODS, ["deliver {} to my house", "send {} to my door", "bring {} to my home"]),
        ]),
        ("money_transfer", [
            facet!(12, AMOUNTS, ["transfer {} to my savings", "transfer {} to john", "move {} into savings"]),
            facet!(10, AMOUNTS, ["send {} to my mom", "send {} to alex", "wire {} to my landlord"]),
            facet!(10, AMOUNTS, ["pay my friend {}", "pay back {} to sam", "settle my debt of {}"]),
            facet!(8, AMOUNTS, ["deposit {} in checking", "put {} in the checking account", "deposit {} now"]),
        ]),
        ("card_delivery", [
            facet!(12, CARDS, ["when will my {} arrive", "has my {} been shipped", "track my {} shipment"]),
            facet!(10, CARDS, ["how long until i get my {}", "how soon can i get my {}", "how many days for my {}"]),
            facet!(10, CARDS, ["my {} has not come yet", "still waiting for my {}", "i never received my {}"]),
            facet!(8, CARDS, ["mail my {} to me", "post my {} to my address", "deliver my {} to my flat"]),
        ]),
        ("flight_book", [
            facet!(12, CITIES, ["book a flight to {}", "book me a flight to {}", "i need a flight to {}"]),
            facet!(10, CITIES, ["find plane tickets to {}", "buy a plane ticket for {}", "cheap plane tickets to {}"]),
            facet!(10, CITIES, ["reserve a seat on a plane to {}", "reserve an airline seat to {}", "hold an airline seat for {}"]),
            facet!(8, CITIES, ["i want to fly to {}", "can i fly out to {}", "flying to {} soon"]),
        ]),
        ("lights_off", [
            facet!(12, ROOMS, ["turn off the lights in the {}", "switch off the {} lights", "lights off in the {}"]),
            facet!(10, ROOMS, ["kill the lights in the {}", "cut the {} lights", "no more lights in the {}"]),
            facet!(10, ROOMS, ["make the {} dark", "darken the {}", "i want the {} dark"]),
            facet!(8, ROOMS, ["shut the lamp in the {}", "shut off the {} lamp", "lamp off in the {}"]),
        ]),
        ("news_query", [
            facet!(12, PLACES, ["what is the latest news {}", "news headlines {}", "show me the news {}"]),
            facet!(10, PLACES, ["what happened {}", "any updates about events {}", "what is going on {}"]),
            facet!(10, PLACES, ["read me the headlines {}", "read the top stories {}", "top stories {}"]),
            facet!(8, PLACES, ["give me a news briefing {}", "briefing on current events {}", "brief me on events {}"]),
        ]),
        ("taxi_book", [
            facet!(12, TIMES, ["book a taxi {}", "get me a taxi {}", "call a taxi {}"]),
            facet!(10, TIMES, ["i need a cab {}", "order a cab {}", "find me a cab {}"]),
            facet!(10, CITIES, ["i need a ride to {}", "give me a ride to {}", "ride to {} please"]),
            facet!(8, TIMES, ["get an uber {}", "request an uber {}", "uber for me {}"]),
        ]),
    ]
}

/// Seed of the bundled synthetic dataset.
pub const SYNTHETIC_SEED: u64 = 2022;

/// Ten intents with 40 utterances each, built from four phrasing families
/// per intent (12, 10, 10 and 8 utterances). Slot fillers are shared across
/// intents. Within each intent, a seeded shuffle sends 60% of rows to train.
pub fn synthetic_dataset(seed: u64) -> LabeledDataset {
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut split = SplitManifest::default();
    for (intent, facets) in synthetic_intents() {
        let start = rows.len();
        for facet in &facets {
            let mut combos: Vec<String> = facet
                .patterns
                .iter()
                .flat_map(|p| facet.fillers.iter().map(move |f| p.replace("{}", f)))
                .collect();
            combos.shuffle(&mut rng);
            for text in combos.into_iter().take(facet.size) {
                rows.push(Example {
                    text,
                    intent: intent.to_string(),
                });
            }
        }
        let mut idx: Vec<usize> = (start..rows.len()).collect();
        idx.shuffle(&mut rng);
        let n_train = idx.len() * 3 / 5;
        let (train, test) = idx.split_at(n_train);
        let mut train = train.to_vec();
        let mut test = test.to_vec();
        train.sort_unstable();
        test.sort_unstable();
        split.train.extend(train);
        split.test.extend(test);
    }
    LabeledDataset {
        name: "synthetic".to_string(),
        rows,
        split,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_shape() {
        let d = synthetic_dataset(SYNTHETIC_SEED);
        assert_eq!(d.rows.len(), 400);
        let by_intent = d.train_by_intent();
        assert_eq!(by_intent.len(), 10);
        assert!(by_intent.values().all(|v| v.len() == 24));
        assert_eq!(d.split.test.len(), 160);
        assert_eq!(d, synthetic_dataset(SYNTHETIC_SEED));
        let texts: BTreeSet<&str> = d.rows.iter().map(|r| r.text.as_str()).collect();
        assert_eq!(texts.len(), 400, "utterances are unique");
    }

    #[test]
    fn csv_round_trip() {
        let d = synthetic_dataset(1);
        let mut buf = Vec::new();
        write_csv(&mut buf, &d.rows).unwrap();
        assert!(buf.starts_with(b"text,intent\n"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), d.rows);
        assert!(matches!(read_csv("a,b\n1,2\n".as_bytes()), Err(DatasetError::Header)));
    }

    #[test]
    fn split_validation() {
        let rows = vec![Example {
            text: "a".into(),
            intent: "x".into(),
        }];
        let bad = SplitManifest {
            train: vec![0],
            test: vec![0],
        };
        assert!(LabeledDataset::new("t".into(), rows.clone(), bad).is_err());
        let bad = SplitManifest {
            train: vec![3],
            test: vec![],
        };
        assert!(LabeledDataset::new("t".into(), rows, bad).is_err());
    }

    #[test]
    fn interleaved() {
        let rows: Vec<Example> = (0..6)
            .map(|i| Example {
                text: format!("t{i}"),
                intent: "x".into(),
            })
            .collect();
        let s = interleaved_split(&rows);
        assert_eq!(s.test, vec![2, 5]);
    }
}
