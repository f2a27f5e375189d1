//! Knowledge sharing: class similarity and text augmentation.
//!
//! Class names embedded into word-vector space give an n×n Euclidean
//! distance matrix; each class's article is then extended with the
//! articles of its top-k most similar classes. The class itself always
//! has maximal similarity, so it occupies rank 1 and k=1 duplicates the
//! own article — which the L2-normalised TF-IDF encoding downstream maps
//! to exactly the unaugmented vector.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::ClassRecord;
use crate::embed::ClassEmbedding;
use crate::error::{Error, Result};

/// Pairwise Euclidean distances between class-name embeddings, plus the
/// derived similarity score `1 / (1 + distance)` in (0, 1].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub n: usize,
    dist: Vec<f64>,
    sim: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn similarity(&self, i: usize, j: usize) -> f64 {
        self.sim[i * self.n + j]
    }
}

/// Per-class augmented article text plus the ordered list of classes the
/// text was taken from (own article first, then the top-k ranking).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AugmentedCorpus {
    pub k: usize,
    pub articles: Vec<String>,
    pub provenance: Vec<Vec<usize>>,
}

/// Build the similarity matrix from class-name embeddings. Embeddings
/// must be supplied in class-id order and share one dimension.
pub fn build_similarity(embeddings: &[ClassEmbedding]) -> Result<SimilarityMatrix> {
    let n = embeddings.len();
    if n < 2 {
        return Err(Error::data("similarity matrix needs at least 2 classes"));
    }
    let dim = embeddings[0].vector.len();
    for e in embeddings {
        if e.vector.len() != dim {
            return Err(Error::data(format!(
                "class {}: embedding dim {} != {dim}",
                e.class_id,
                e.vector.len()
            )));
        }
        if e.vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::data(format!(
                "class {}: non-finite embedding entry",
                e.class_id
            )));
        }
    }

    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = embeddings[i]
                .vector
                .iter()
                .zip(embeddings[j].vector.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let sim = dist.iter().map(|d| 1.0 / (1.0 + d)).collect();
    Ok(SimilarityMatrix { n, dist, sim })
}

/// The k classes most similar to class `i`, in descending similarity.
/// Class `i` itself participates in the ranking (and always wins it);
/// ties break towards the smaller class id.
pub fn rank_topk(sm: &SimilarityMatrix, i: usize, k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > sm.n {
        return Err(Error::config(format!(
            "top-k parameter {k} out of range 1..={}",
            sm.n
        )));
    }
    if i >= sm.n {
        return Err(Error::data(format!("class id {i} out of range")));
    }
    let mut order: Vec<usize> = (0..sm.n).collect();
    order.sort_by(|&a, &b| {
        sm.similarity(i, b)
            .partial_cmp(&sm.similarity(i, a))
            .expect("similarities are finite")
            .then(a.cmp(&b))
    });
    order.truncate(k);
    Ok(order)
}

/// Concatenate each class's article with the articles of its top-k most
/// similar classes, single-space separated, in rank order.
pub fn augment(
    records: &[ClassRecord],
    sm: &SimilarityMatrix,
    k: usize,
) -> Result<AugmentedCorpus> {
    if records.len() != sm.n {
        return Err(Error::data(format!(
            "{} records but similarity matrix of size {}",
            records.len(),
            sm.n
        )));
    }
    let mut articles = Vec::with_capacity(sm.n);
    let mut provenance = Vec::with_capacity(sm.n);
    for record in records {
        let ranked = rank_topk(sm, record.class_id, k)?;
        let mut text = record.article_raw.clone();
        for &other in &ranked {
            text.push(' ');
            text.push_str(&records[other].article_raw);
        }
        let mut sources = Vec::with_capacity(k + 1);
        sources.push(record.class_id);
        sources.extend(&ranked);
        articles.push(text);
        provenance.push(sources);
    }
    Ok(AugmentedCorpus {
        k,
        articles,
        provenance,
    })
}

/// Write the similarity matrix as CSV with class names on both the
/// header row and the leading column.
pub fn export_similarity(
    sm: &SimilarityMatrix,
    records: &[ClassRecord],
    path: &Path,
) -> Result<()> {
    if records.len() != sm.n {
        return Err(Error::data("record count does not match matrix size"));
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    write!(out, "class").map_err(io_err)?;
    for r in records {
        write!(out, ",{}", r.name).map_err(io_err)?;
    }
    writeln!(out).map_err(io_err)?;
    for (i, r) in records.iter().enumerate() {
        write!(out, "{}", r.name).map_err(io_err)?;
        for j in 0..sm.n {
            write!(out, ",{:.6}", sm.similarity(i, j)).map_err(io_err)?;
        }
        writeln!(out).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SplitRole;
    use ndarray::Array1;

    fn embedding(class_id: usize, v: &[f64]) -> ClassEmbedding {
        ClassEmbedding {
            class_id,
            vector: Array1::from(v.to_vec()),
        }
    }

    fn record(class_id: usize, article: &str) -> ClassRecord {
        ClassRecord {
            class_id,
            name: format!("class {class_id}"),
            superclass: "s".into(),
            article_raw: article.into(),
            split_role: SplitRole::Unassigned,
        }
    }

    #[test]
    fn identical_vectors_have_distance_zero() {
        let sm = build_similarity(&[embedding(0, &[1.0, 2.0]), embedding(1, &[1.0, 2.0])]).unwrap();
        assert_eq!(sm.distance(0, 1), 0.0);
        assert_eq!(sm.similarity(0, 1), 1.0);
    }

    #[test]
    fn pythagorean_distance() {
        let sm = build_similarity(&[embedding(0, &[0.0, 0.0]), embedding(1, &[3.0, 4.0])]).unwrap();
        assert_eq!(sm.distance(0, 1), 5.0);
        assert_eq!(sm.similarity(0, 1), 1.0 / 6.0);
    }

    #[test]
    fn matrix_is_symmetric_with_unit_diagonal() {
        let sm = build_similarity(&[
            embedding(0, &[0.0, 0.0]),
            embedding(1, &[1.0, 0.0]),
            embedding(2, &[0.0, 2.0]),
        ])
        .unwrap();
        for i in 0..3 {
            assert_eq!(sm.distance(i, i), 0.0);
            assert_eq!(sm.similarity(i, i), 1.0);
            for j in 0..3 {
                assert_eq!(sm.distance(i, j), sm.distance(j, i));
                assert_eq!(sm.similarity(i, j), sm.similarity(j, i));
            }
        }
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let err =
            build_similarity(&[embedding(0, &[0.0]), embedding(1, &[1.0, 2.0])]).unwrap_err();
        assert!(err.to_string().contains("dim"), "{err}");
    }

    fn three_class_matrix() -> SimilarityMatrix {
        // d(0,1) = 1, d(0,2) = 2, d(1,2) = 1 on a line.
        build_similarity(&[
            embedding(0, &[0.0]),
            embedding(1, &[1.0]),
            embedding(2, &[2.0]),
        ])
        .unwrap()
    }

    #[test]
    fn k1_is_self() {
        let sm = three_class_matrix();
        for i in 0..3 {
            assert_eq!(rank_topk(&sm, i, 1).unwrap(), [i]);
        }
    }

    #[test]
    fn ranking_follows_distance() {
        let sm = three_class_matrix();
        assert_eq!(rank_topk(&sm, 0, 2).unwrap(), [0, 1]);
        assert_eq!(rank_topk(&sm, 0, 3).unwrap(), [0, 1, 2]);
    }

    #[test]
    fn ties_break_to_smaller_class_id() {
        // Classes 1 and 2 are equidistant from 0.
        let sm = build_similarity(&[
            embedding(0, &[0.0, 0.0]),
            embedding(1, &[1.0, 0.0]),
            embedding(2, &[-1.0, 0.0]),
        ])
        .unwrap();
        assert_eq!(rank_topk(&sm, 0, 2).unwrap(), [0, 1]);
        // Class 1 ranks 0 and 2 (both at distance 1): 0 wins the tie.
        assert_eq!(rank_topk(&sm, 1, 3).unwrap(), [1, 0, 2]);
    }

    #[test]
    fn k_out_of_range_errors() {
        let sm = three_class_matrix();
        assert!(rank_topk(&sm, 0, 0).is_err());
        assert!(rank_topk(&sm, 0, 4).is_err());
    }

    #[test]
    fn topk_is_prefix_monotone_and_self_inclusive() {
        let sm = build_similarity(&[
            embedding(0, &[0.0, 0.3]),
            embedding(1, &[1.0, -0.2]),
            embedding(2, &[2.0, 0.1]),
            embedding(3, &[-1.5, 0.4]),
        ])
        .unwrap();
        for i in 0..4 {
            let mut prev: Vec<usize> = Vec::new();
            for k in 1..=4 {
                let ranked = rank_topk(&sm, i, k).unwrap();
                assert!(ranked.contains(&i), "self-inclusion for i={i}, k={k}");
                assert_eq!(&ranked[..prev.len()], &prev[..], "prefix for k={k}");
                prev = ranked;
            }
        }
    }

    #[test]
    fn k1_duplicates_own_article() {
        let records = vec![record(0, "alpha"), record(1, "beta"), record(2, "gamma")];
        let sm = three_class_matrix();
        let aug = augment(&records, &sm, 1).unwrap();
        assert_eq!(aug.articles[0], "alpha alpha");
        assert_eq!(aug.provenance[0], [0, 0]);
    }

    #[test]
    fn k_equal_n_shares_everything() {
        let records = vec![record(0, "alpha"), record(1, "beta"), record(2, "gamma")];
        let sm = three_class_matrix();
        let aug = augment(&records, &sm, 3).unwrap();
        for article in &aug.articles {
            for text in ["alpha", "beta", "gamma"] {
                assert!(article.contains(text));
            }
        }
    }

    #[test]
    fn provenance_matches_hand_ranked_order() {
        let records = vec![record(0, "alpha"), record(1, "beta"), record(2, "gamma")];
        let sm = three_class_matrix();
        let aug = augment(&records, &sm, 2).unwrap();
        assert_eq!(aug.provenance[0], [0, 0, 1]);
        assert_eq!(aug.provenance[2], [2, 2, 1]);
        assert_eq!(aug.articles[0], "alpha alpha beta");
    }

    #[test]
    fn augmented_length_non_decreasing_in_k() {
        let records = vec![record(0, "alpha"), record(1, "beta"), record(2, "gamma")];
        let sm = three_class_matrix();
        let mut prev_lens = vec![0usize; 3];
        for k in 1..=3 {
            let aug = augment(&records, &sm, k).unwrap();
            for (i, article) in aug.articles.iter().enumerate() {
                assert!(article.len() >= prev_lens[i]);
                prev_lens[i] = article.len();
            }
        }
    }
}
