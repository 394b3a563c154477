//! Diverse / random / narrow representative groups for one intent.
//!
//! Sentences are embedded and clustered with k = n. The diverse group takes,
//! for each cluster, the member nearest its center. The narrow group
//! repeatedly takes the remaining sentence nearest the center of the
//! smallest cluster, regardless of which cluster it belongs to. The random
//! group is n distinct seeded draws.

use rand::SeedableRng;
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{euclidean_distance, kmeans, Embedder, KMeansResult, TextError};

/// Mixed into the seed so the random group does not share a stream with
/// the k-means initialization.
const RANDOM_STREAM: u64 = 0x5241_4e44_4f4d_0001;

#[derive(Debug, Error, PartialEq)]
pub enum SamplingError {
    #[error("need at least {needed} sentences, got {got}")]
    TooFewSentences { needed: usize, got: usize },
    #[error("n must be at least 1")]
    ZeroN,
    #[error(transparent)]
    Clustering(#[from] TextError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputType {
    Diverse,
    Random,
    Narrow,
}

impl InputType {
    pub const ALL: [InputType; 3] = [InputType::Diverse, InputType::Random, InputType::Narrow];

    pub fn as_str(&self) -> &'static str {
        match self {
            InputType::Diverse => "diverse",
            InputType::Random => "random",
            InputType::Narrow => "narrow",
        }
    }
}

/// Index form of a sampling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledIndices {
    pub diverse: Vec<usize>,
    pub random: Vec<usize>,
    pub narrow: Vec<usize>,
    pub cluster_assignments: Vec<usize>,
    pub smallest_cluster: usize,
    pub centers: Vec<Vec<f64>>,
}

impl SampledIndices {
    pub fn group(&self, kind: InputType) -> &[usize] {
        match kind {
            InputType::Diverse => &self.diverse,
            InputType::Random => &self.random,
            InputType::Narrow => &self.narrow,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingResult {
    pub diverse: Vec<String>,
    pub random: Vec<String>,
    pub narrow: Vec<String>,
    pub cluster_assignments: Vec<usize>,
    pub smallest_cluster: usize,
}

fn argmin_distance<P: AsRef<[f64]>>(
    points: &[P],
    candidates: impl Iterator<Item = usize>,
    center: &[f64],
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in candidates {
        let d = euclidean_distance(points[i].as_ref(), center);
        // strict: ties keep the earlier index
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// Sample the three groups from precomputed points.
pub fn sample_points<P: AsRef<[f64]>>(points: &[P], n: usize, seed: u64) -> Result<SampledIndices, SamplingError> {
    if n == 0 {
        return Err(SamplingError::ZeroN);
    }
    if points.len() < n {
        return Err(SamplingError::TooFewSentences {
            needed: n,
            got: points.len(),
        });
    }
    let KMeansResult {
        assignments,
        centers,
        sizes,
        ..
    } = kmeans(points, n, seed)?;

    let diverse = (0..n)
        .filter_map(|c| {
            let members = (0..points.len()).filter(|&i| assignments[i] == c);
            argmin_distance(points, members, &centers[c])
        })
        .collect();

    let mut smallest_cluster = 0;
    for (c, &size) in sizes.iter().enumerate() {
        if size < sizes[smallest_cluster] {
            smallest_cluster = c;
        }
    }

    let mut remaining: Vec<bool> = vec![true; points.len()];
    let mut narrow = Vec::with_capacity(n);
    while narrow.len() < n {
        let pick = argmin_distance(
            points,
            (0..points.len()).filter(|&i| remaining[i]),
            &centers[smallest_cluster],
        )
        .expect("at least n points");
        remaining[pick] = false;
        narrow.push(pick);
    }

    let mut rng = SplitMix64::seed_from_u64(seed ^ RANDOM_STREAM);
    let random = rand::seq::index::sample(&mut rng, points.len(), n).into_vec();

    Ok(SampledIndices {
        diverse,
        random,
        narrow,
        cluster_assignments: assignments,
        smallest_cluster,
        centers,
    })
}

/// Sample the three groups from sentences, embedding them first.
pub fn sample_representatives<E: Embedder + ?Sized>(
    sentences: &[String],
    n: usize,
    seed: u64,
    embedder: &E,
) -> Result<SamplingResult, SamplingError> {
    let points: Vec<_> = sentences.iter().map(|s| embedder.embed(s)).collect();
    let idx = sample_points(&points, n, seed)?;
    let pick = |ix: &[usize]| ix.iter().map(|&i| sentences[i].clone()).collect::<Vec<_>>();
    Ok(SamplingResult {
        diverse: pick(&idx.diverse),
        random: pick(&idx.random),
        narrow: pick(&idx.narrow),
        cluster_assignments: idx.cluster_assignments,
        smallest_cluster: idx.smallest_cluster,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::HashEmbedder;
    use std::collections::HashSet;

    fn line(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x, 0.0]).collect()
    }

    #[test]
    fn n_one_diverse_equals_narrow() {
        let pts = line(&[0.0, 1.0, 5.0, 2.0]);
        for seed in 0..10 {
            let s = sample_points(&pts, 1, seed).unwrap();
            assert_eq!(s.diverse, s.narrow);
            // mean is 2.0
            assert_eq!(s.diverse, vec![3]);
        }
    }

    #[test]
    fn two_pairs() {
        // pair {0, 1} near 0 and pair {2, 3} near 10; the tighter pair is
        // cluster-size tied, so the lowest cluster index decides.
        let pts = line(&[0.0, 0.2, 10.0, 10.3]);
        for seed in 0..10 {
            let s = sample_points(&pts, 2, seed).unwrap();
            let mut d = s.diverse.clone();
            d.sort();
            assert!(d[0] < 2 && d[1] >= 2);
            assert_eq!(s.smallest_cluster, 0);
            let narrow: HashSet<usize> = s.narrow.iter().copied().collect();
            let members: HashSet<usize> = (0..4).filter(|&i| s.cluster_assignments[i] == 0).collect();
            assert_eq!(narrow, members);
        }
    }

    #[test]
    fn n_equals_len_is_permutation() {
        let sentences: Vec<String> = ["list invoices", "delete the user", "book a flight", "play jazz"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let r = sample_representatives(&sentences, 4, 11, &HashEmbedder::default()).unwrap();
        let mut d = r.diverse.clone();
        d.sort();
        let mut all = sentences.clone();
        all.sort();
        assert_eq!(d, all);
        assert_eq!(r.random.len(), 4);
        assert_eq!(r.random.iter().collect::<HashSet<_>>().len(), 4);
    }

    #[test]
    fn errors() {
        let pts = line(&[0.0, 1.0]);
        assert_eq!(
            sample_points(&pts, 3, 0).unwrap_err(),
            SamplingError::TooFewSentences { needed: 3, got: 2 }
        );
        assert_eq!(sample_points(&pts, 0, 0).unwrap_err(), SamplingError::ZeroN);
    }

    #[test]
    fn deterministic() {
        let sentences: Vec<String> = (0..20).map(|i| format!("sentence number {i} about topic {}", i % 3)).collect();
        let e = HashEmbedder::default();
        let a = sample_representatives(&sentences, 4, 5, &e).unwrap();
        let b = sample_representatives(&sentences, 4, 5, &e).unwrap();
        assert_eq!(a, b);
        let clusters: HashSet<usize> = a
            .diverse
            .iter()
            .map(|s| a.cluster_assignments[sentences.iter().position(|x| x == s).unwrap()])
            .collect();
        assert_eq!(clusters.len(), 4);
    }
}
