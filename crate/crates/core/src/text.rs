//! Deterministic text primitives shared by every pipeline stage.
//!
//! Tokenization, unique n-gram counting, a signed feature-hashing sentence
//! embedder, cosine similarity and a seeded k-means. Everything here is
//! pure; the k-means owns its PRNG locally.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dimension of the built-in hashed embedding.
pub const EMBEDDING_DIM: usize = 256;

const FNV_OFFSET_BASIS: u64 = 14_695_981_039_346_656_037;
const FNV_PRIME: u64 = 1_099_511_628_211;

/// Maximum Lloyd iterations before k-means gives up on convergence.
pub const KMEANS_MAX_ITERATIONS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TextError {
    #[error("n-gram order set is empty or contains 0")]
    EmptyOrders,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("k must be positive")]
    KNonPositive,
    #[error("k = {k} exceeds the number of points ({points})")]
    KTooLarge { k: usize, points: usize },
}

/// FNV-1a 64-bit hash.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET_BASIS;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// An ordered sequence of lowercase tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    /// Contiguous n-grams of the given order; empty when the order exceeds the length.
    pub fn ngrams(&self, order: usize) -> impl Iterator<Item = &[String]> + '_ {
        if order == 0 || order > self.0.len() {
            self.0[..0].windows(1)
        } else {
            self.0.windows(order)
        }
    }
}

impl std::fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

/// Lowercase, split on whitespace, trim non-alphanumeric characters from
/// both ends of every piece and drop what becomes empty.
pub fn tokenize(text: &str) -> TokenSeq {
    TokenSeq(
        text.split_whitespace()
            .filter_map(|raw| {
                let trimmed = raw.trim_matches(|c: char| !c.is_alphanumeric());
                (!trimmed.is_empty()).then(|| trimmed.to_lowercase())
            })
            .collect(),
    )
}

/// Collapse runs of whitespace to single spaces and trim.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn check_orders(orders: &[usize]) -> Result<(), TextError> {
    if orders.is_empty() || orders.contains(&0) {
        Err(TextError::EmptyOrders)
    } else {
        Ok(())
    }
}

/// The set of contiguous n-grams (for all requested orders) of one sentence.
pub fn ngram_set<'a>(sentence: &'a TokenSeq, orders: &[usize]) -> HashSet<&'a [String]> {
    orders
        .iter()
        .flat_map(|&n| sentence.ngrams(n))
        .collect()
}

/// Size of the union of all n-grams of the given orders across `sentences`.
pub fn count_unique_ngrams<'a, I>(sentences: I, orders: &[usize]) -> Result<usize, TextError>
where
    I: IntoIterator<Item = &'a TokenSeq>,
{
    check_orders(orders)?;
    let mut seen: HashSet<&[String]> = HashSet::new();
    for sentence in sentences {
        for &n in orders {
            seen.extend(sentence.ngrams(n));
        }
    }
    Ok(seen.len())
}

/// A fixed-length real vector that is either all zero or L2-normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f64>,
    norm: f64,
}

impl EmbeddingVector {
    /// Normalizes `raw`; a vector with zero norm stays all zero.
    pub fn from_raw(mut raw: Vec<f64>) -> Self {
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            raw.iter_mut().for_each(|v| *v = 0.0);
            return Self {
                values: raw,
                norm: 0.0,
            };
        }
        raw.iter_mut().for_each(|v| *v /= norm);
        Self {
            values: raw,
            norm: 1.0,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            values: vec![0.0; dim],
            norm: 0.0,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.norm == 0.0
    }
}

impl AsRef<[f64]> for EmbeddingVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Anything that maps a sentence to an embedding.
pub trait Embedder: Send + Sync {
    fn embed(&self, text: &str) -> EmbeddingVector;
}

/// Sentence similarity used for fidelity filtering.
pub trait Similarity {
    fn similarity(&self, a: &str, b: &str) -> f64;
}

impl<E: Embedder + ?Sized> Similarity for E {
    fn similarity(&self, a: &str, b: &str) -> f64 {
        // Both vectors come from the same embedder.
        cosine_similarity(&self.embed(a), &self.embed(b)).unwrap_or(0.0)
    }
}

/// Signed feature-hashing embedder.
///
/// Features are word unigrams (`w1:`), word bigrams (`w2:`, joined by one
/// space) and character trigrams (`c3:`) of the tokens joined by single
/// spaces. Each feature is hashed with FNV-1a 64; the bucket is `h mod dim`
/// and the sign is negative when the top bit of `h` is set.
#[derive(Debug, Clone, Copy)]
pub struct HashEmbedder {
    dim: usize,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self { dim: EMBEDDING_DIM }
    }
}

impl HashEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The feature strings for `text`, in accumulation order.
    pub fn features(text: &str) -> Vec<String> {
        let tokens = tokenize(text);
        let toks = tokens.tokens();
        let mut features = Vec::with_capacity(toks.len() * 6);
        features.extend(toks.iter().map(|t| format!("w1:{t}")));
        features.extend(toks.windows(2).map(|w| format!("w2:{} {}", w[0], w[1])));
        let joined: Vec<char> = toks.join(" ").chars().collect();
        features.extend(
            joined
                .windows(3)
                .map(|w| format!("c3:{}", w.iter().collect::<String>())),
        );
        features
    }

    fn accumulate(&self, text: &str) -> Vec<f64> {
        let mut raw = vec![0.0; self.dim];
        for feature in Self::features(text) {
            let h = fnv1a64(feature.as_bytes());
            let index = (h % self.dim as u64) as usize;
            raw[index] += if h >> 63 == 0 { 1.0 } else { -1.0 };
        }
        raw
    }
}

impl Embedder for HashEmbedder {
    fn embed(&self, text: &str) -> EmbeddingVector {
        EmbeddingVector::from_raw(self.accumulate(text))
    }
}

/// Embedder backed by a fixed table of vectors (e.g. fetched from a remote
/// embedding backend); texts not in the table fall back to `fallback`.
pub struct PrecomputedEmbedder<E> {
    table: HashMap<String, EmbeddingVector>,
    fallback: E,
}

impl<E: Embedder> PrecomputedEmbedder<E> {
    pub fn new(table: HashMap<String, EmbeddingVector>, fallback: E) -> Self {
        Self { table, fallback }
    }
}

impl<E: Embedder> Embedder for PrecomputedEmbedder<E> {
    fn embed(&self, text: &str) -> EmbeddingVector {
        match self.table.get(text) {
            Some(v) => v.clone(),
            None => self.fallback.embed(text),
        }
    }
}

/// Cosine similarity of two embeddings; 0 when either is the zero vector.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, TextError> {
    if a.dim() != b.dim() {
        return Err(TextError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    if a.is_zero() || b.is_zero() {
        return Ok(0.0);
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    Ok(dot.clamp(-1.0, 1.0))
}

/// Squared Euclidean distance.
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub sizes: Vec<usize>,
    pub iterations: usize,
}

fn nearest_center(point: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// k-means++ seeding. When every remaining point coincides with a chosen
/// center, the lowest-index unchosen point is taken instead.
fn kmeanspp_init<P: AsRef<[f64]>>(points: &[P], k: usize, rng: &mut SplitMix64) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centers = vec![points[first].as_ref().to_vec()];
    let mut dist: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p.as_ref(), &centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in dist.iter().enumerate() {
                if d <= 0.0 {
                    continue;
                }
                acc += d;
                if acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave target just above the final sum.
            pick.unwrap_or_else(|| dist.iter().rposition(|&d| d > 0.0).unwrap_or(0))
        } else {
            (0..n).find(|&i| !chosen[i]).unwrap_or(0)
        };
        chosen[next] = true;
        let center = points[next].as_ref().to_vec();
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(squared_distance(p.as_ref(), &center));
        }
        centers.push(center);
    }
    centers
}

/// Give every empty cluster the point farthest from its own center, taken
/// from a cluster that can spare one.
fn repair_empty_clusters<P: AsRef<[f64]>>(
    points: &[P],
    assignments: &mut [usize],
    centers: &mut [Vec<f64>],
) {
    let k = centers.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &a in assignments.iter() {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut donor = None;
        let mut donor_d = f64::NEG_INFINITY;
        for (i, p) in points.iter().enumerate() {
            let c = assignments[i];
            if sizes[c] < 2 {
                continue;
            }
            let d = squared_distance(p.as_ref(), &centers[c]);
            if d > donor_d {
                donor = Some(i);
                donor_d = d;
            }
        }
        let Some(i) = donor else { return };
        assignments[i] = empty;
        centers[empty] = points[i].as_ref().to_vec();
    }
}

fn cluster_means<P: AsRef<[f64]>>(points: &[P], assignments: &[usize], k: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assignments) {
        counts[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(p.as_ref()) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    sums
}

/// Seeded k-means (k-means++ initialization, Lloyd iterations).
///
/// Stops when assignments are stable or after [`KMEANS_MAX_ITERATIONS`].
/// Assignment ties go to the lowest center index.
pub fn kmeans<P: AsRef<[f64]>>(points: &[P], k: usize, seed: u64) -> Result<KMeansResult, TextError> {
    if k == 0 {
        return Err(TextError::KNonPositive);
    }
    if k > points.len() {
        return Err(TextError::KTooLarge {
            k,
            points: points.len(),
        });
    }
    let dim = points[0].as_ref().len();
    for p in points {
        if p.as_ref().len() != dim {
            return Err(TextError::DimensionMismatch {
                left: dim,
                right: p.as_ref().len(),
            });
        }
    }
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut centers = kmeanspp_init(points, k, &mut rng);
    let mut assignments: Vec<usize> = Vec::new();
    let mut iterations = 0;
    while iterations < KMEANS_MAX_ITERATIONS {
        iterations += 1;
        let mut next: Vec<usize> = points
            .iter()
            .map(|p| nearest_center(p.as_ref(), &centers))
            .collect();
        repair_empty_clusters(points, &mut next, &mut centers);
        if next == assignments {
            break;
        }
        assignments = next;
        centers = cluster_means(points, &assignments, k, dim);
    }
    let mut sizes = vec![0usize; k];
    for &a in &assignments {
        sizes[a] += 1;
    }
    Ok(KMeansResult {
        assignments,
        centers,
        sizes,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> TokenSeq {
        tokenize(s)
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            tokenize("How soon can I get cards?").into_inner(),
            vec!["how", "soon", "can", "i", "get", "cards"]
        );
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize("set alarm at 9a.m.").into_inner(),
            vec!["set", "alarm", "at", "9a.m"]
        );
        assert!(tokenize(" -- ... ").is_empty());
    }

    #[test]
    fn unique_ngram_examples() {
        let s = toks("set an alarm");
        assert_eq!(count_unique_ngrams([&s], &[1, 2, 3]).unwrap(), 6);
        assert_eq!(count_unique_ngrams(std::iter::empty(), &[1, 2, 3]).unwrap(), 0);
        assert_eq!(count_unique_ngrams([&s, &s], &[1, 2, 3]).unwrap(), 6);
        assert_eq!(count_unique_ngrams([&s], &[]), Err(TextError::EmptyOrders));
        assert_eq!(count_unique_ngrams([&s], &[0]), Err(TextError::EmptyOrders));
        // order longer than the sentence contributes nothing
        assert_eq!(count_unique_ngrams([&s], &[4]).unwrap(), 0);
    }

    #[test]
    fn fnv_reference_values() {
        // Published FNV-1a 64 test vectors.
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn embed_basics() {
        let e = HashEmbedder::default();
        let z = e.embed("");
        assert!(z.is_zero());
        assert!(z.values().iter().all(|v| *v == 0.0));
        let a = e.embed("list the open invoices");
        assert!((a.norm() - 1.0).abs() < 1e-12);
        let sq: f64 = a.values().iter().map(|v| v * v).sum();
        assert!((sq - 1.0).abs() < 1e-9);
        assert_eq!(a, e.embed("list the open invoices"));
        let c = cosine_similarity(&a, &a).unwrap();
        assert!((c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_examples() {
        let mut e1 = vec![0.0; 4];
        e1[0] = 1.0;
        let mut e2 = vec![0.0; 4];
        e2[1] = 1.0;
        let e1 = EmbeddingVector::from_raw(e1);
        let e2 = EmbeddingVector::from_raw(e2);
        assert_eq!(cosine_similarity(&e1, &e1).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&e1, &e2).unwrap(), 0.0);
        assert_eq!(
            cosine_similarity(&e1, &EmbeddingVector::zeros(4)).unwrap(),
            0.0
        );
        assert_eq!(
            cosine_similarity(&e1, &EmbeddingVector::zeros(3)),
            Err(TextError::DimensionMismatch { left: 4, right: 3 })
        );
    }

    #[test]
    fn kmeans_separated_clusters() {
        let pts: Vec<Vec<f64>> = [0.0, 0.1, 10.0, 10.1].iter().map(|&x| vec![x, 0.0]).collect();
        for seed in 0..20 {
            let r = kmeans(&pts, 2, seed).unwrap();
            assert_eq!(r.assignments[0], r.assignments[1]);
            assert_eq!(r.assignments[2], r.assignments[3]);
            assert_ne!(r.assignments[0], r.assignments[2]);
            let lo = &r.centers[r.assignments[0]];
            let hi = &r.centers[r.assignments[2]];
            assert!((lo[0] - 0.05).abs() < 1e-12);
            assert!((hi[0] - 10.05).abs() < 1e-12);
        }
    }

    #[test]
    fn kmeans_k1_is_mean() {
        let pts = vec![vec![1.0, 2.0], vec![3.0, -2.0], vec![5.0, 3.0]];
        let r = kmeans(&pts, 1, 7).unwrap();
        assert_eq!(r.sizes, vec![3]);
        assert!((r.centers[0][0] - 3.0).abs() < 1e-12);
        assert!((r.centers[0][1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kmeans_preconditions() {
        let pts = vec![vec![0.0], vec![1.0], vec![2.0]];
        assert_eq!(
            kmeans(&pts, 5, 0).unwrap_err(),
            TextError::KTooLarge { k: 5, points: 3 }
        );
        assert_eq!(kmeans(&pts, 0, 0).unwrap_err(), TextError::KNonPositive);
    }

    #[test]
    fn kmeans_duplicate_points_fill_every_cluster() {
        let pts = vec![vec![1.0, 1.0]; 4];
        let r = kmeans(&pts, 4, 3).unwrap();
        assert!(r.sizes.iter().all(|&s| s == 1));
    }

    fn arb_sentence() -> impl Strategy<Value = TokenSeq> {
        prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e"]), 0..6)
            .prop_map(|v| TokenSeq(v.into_iter().map(String::from).collect()))
    }

    proptest! {
        #[test]
        fn ngram_count_monotone_and_submodular(
            a in prop::collection::vec(arb_sentence(), 0..4),
            extra in prop::collection::vec(arb_sentence(), 0..4),
            x in arb_sentence(),
        ) {
            let orders = [1, 2, 3];
            let b: Vec<TokenSeq> = a.iter().chain(&extra).cloned().collect();
            let fa = count_unique_ngrams(&a, &orders).unwrap();
            let fb = count_unique_ngrams(&b, &orders).unwrap();
            prop_assert!(fb >= fa);
            let fax = count_unique_ngrams(a.iter().chain([&x]), &orders).unwrap();
            let fbx = count_unique_ngrams(b.iter().chain([&x]), &orders).unwrap();
            prop_assert!(fax - fa >= fbx - fb);
        }

        #[test]
        fn cosine_symmetric_and_bounded(s in "[a-z ]{0,30}", t in "[a-z ]{0,30}") {
            let e = HashEmbedder::default();
            let (a, b) = (e.embed(&s), e.embed(&t));
            let ab = cosine_similarity(&a, &b).unwrap();
            prop_assert_eq!(ab, cosine_similarity(&b, &a).unwrap());
            prop_assert!(ab.abs() <= 1.0 + 1e-12);
        }

        #[test]
        fn kmeans_reproducible_and_nearest(
            pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..25),
            k in 1usize..5,
            seed in any::<u64>(),
        ) {
            prop_assume!(k <= pts.len());
            let r1 = kmeans(&pts, k, seed).unwrap();
            let r2 = kmeans(&pts, k, seed).unwrap();
            prop_assert_eq!(&r1, &r2);
            prop_assert_eq!(r1.sizes.iter().sum::<usize>(), pts.len());
            prop_assert_eq!(r1.centers.len(), k);
            if r1.iterations < KMEANS_MAX_ITERATIONS {
                for (p, &a) in pts.iter().zip(&r1.assignments) {
                    let own = squared_distance(p, &r1.centers[a]);
                    for c in &r1.centers {
                        prop_assert!(own <= squared_distance(p, c) + 1e-9);
                    }
                }
                for (c, center) in r1.centers.iter().enumerate() {
                    let members: Vec<&Vec<f64>> = pts.iter().zip(&r1.assignments)
                        .filter(|(_, &a)| a == c).map(|(p, _)| p).collect();
                    for d in 0..3 {
                        let mean = members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64;
                        prop_assert!((mean - center[d]).abs() < 1e-9);
                    }
                }
            }
        }
    }
}
