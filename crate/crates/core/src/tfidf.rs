//! TF-IDF encoding of class documents.
//!
//! One column per distinct stem, document frequency over the n class
//! documents, weighting `tf * (ln((1+N)/(1+df)) + 1)`, then L2
//! normalisation. Per-document term counts are reduced by their gcd
//! before weighting; under L2 normalisation this changes nothing
//! mathematically but makes `encode` bit-exactly scale invariant, so a
//! document concatenated with itself encodes to the identical vector.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::corpus::TokenStream;
use crate::error::{Error, Result};

/// Term table fitted over a corpus of class documents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    doc_freq: Vec<usize>,
    n_docs: usize,
}

/// Sparse L2-normalised TF-IDF vector for one class document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemanticVector {
    pub class_id: usize,
    /// (column, weight) pairs sorted by column.
    pub entries: Vec<(usize, f64)>,
    /// Euclidean norm after encoding: 1.0, or 0.0 for an empty document.
    pub norm: f64,
    pub dim: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn doc_freq(&self, term: &str) -> Option<usize> {
        self.term_index(term).map(|i| self.doc_freq[i])
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// Smoothed inverse document frequency for column `col`.
    pub fn idf(&self, col: usize) -> f64 {
        ((1.0 + self.n_docs as f64) / (1.0 + self.doc_freq[col] as f64)).ln() + 1.0
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }
}

impl SemanticVector {
    /// Expand to a dense vector of length `dim`.
    pub fn to_dense(&self) -> Array1<f64> {
        let mut v = Array1::zeros(self.dim);
        for &(col, value) in &self.entries {
            v[col] = value;
        }
        v
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Fit the vocabulary: one column per distinct stem, columns in
/// lexicographic term order, document frequency counting each document
/// at most once per term.
pub fn fit_vocabulary(streams: &[TokenStream]) -> Result<Vocabulary> {
    if streams.is_empty() {
        return Err(Error::data("tf-idf: no documents"));
    }
    let mut df = BTreeMap::<&str, usize>::new();
    for stream in streams {
        let mut seen = std::collections::HashSet::new();
        for token in &stream.tokens {
            if seen.insert(token.as_str()) {
                *df.entry(token.as_str()).or_default() += 1;
            }
        }
    }
    if df.is_empty() {
        return Err(Error::data("tf-idf: every document is empty"));
    }
    let terms: Vec<String> = df.keys().map(|t| t.to_string()).collect();
    let doc_freq: Vec<usize> = df.values().copied().collect();
    let mut vocab = Vocabulary {
        terms,
        index: HashMap::new(),
        doc_freq,
        n_docs: streams.len(),
    };
    vocab.rebuild_index();
    Ok(vocab)
}

/// Encode one document against a fitted vocabulary. Out-of-vocabulary
/// tokens are ignored; a document with no in-vocabulary token encodes to
/// the zero vector (norm 0) with a warning.
pub fn encode(stream: &TokenStream, vocab: &Vocabulary) -> SemanticVector {
    let mut counts = BTreeMap::<usize, u64>::new();
    for token in &stream.tokens {
        if let Some(col) = vocab.term_index(token) {
            *counts.entry(col).or_default() += 1;
        }
    }
    if counts.is_empty() {
        log::warn!(
            "class {}: document shares no terms with the vocabulary; zero vector",
            stream.class_id
        );
        return SemanticVector {
            class_id: stream.class_id,
            entries: Vec::new(),
            norm: 0.0,
            dim: vocab.len(),
        };
    }

    let scale = counts.values().copied().fold(0, gcd);
    let mut entries: Vec<(usize, f64)> = counts
        .into_iter()
        .map(|(col, tf)| (col, (tf / scale) as f64 * vocab.idf(col)))
        .collect();
    let norm = entries
        .iter()
        .map(|(_, v)| v * v)
        .sum::<f64>()
        .sqrt();
    for (_, v) in &mut entries {
        *v /= norm;
    }
    SemanticVector {
        class_id: stream.class_id,
        entries,
        norm: 1.0,
        dim: vocab.len(),
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Persist the vocabulary as CSV `term,index,doc_freq` plus a small JSON
/// sidecar carrying the document count.
pub fn save_vocabulary(vocab: &Vocabulary, csv_path: &Path, meta_path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(csv_path)
        .map_err(|e| Error::data(format!("cannot write {}: {e}", csv_path.display())))?;
    writer
        .write_record(["term", "index", "doc_freq"])
        .map_err(|e| Error::data(e.to_string()))?;
    for (i, term) in vocab.terms.iter().enumerate() {
        writer
            .write_record([term.as_str(), &i.to_string(), &vocab.doc_freq[i].to_string()])
            .map_err(|e| Error::data(e.to_string()))?;
    }
    writer.flush().map_err(|e| Error::io(csv_path, e))?;
    let meta = serde_json::json!({ "n_docs": vocab.n_docs, "n_terms": vocab.len() });
    std::fs::write(meta_path, serde_json::to_string_pretty(&meta).expect("static json"))
        .map_err(|e| Error::io(meta_path, e))
}

pub fn load_vocabulary(csv_path: &Path, meta_path: &Path) -> Result<Vocabulary> {
    let meta: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(meta_path).map_err(|e| Error::io(meta_path, e))?,
    )
    .map_err(|e| Error::data(format!("{}: {e}", meta_path.display())))?;
    let n_docs = meta["n_docs"]
        .as_u64()
        .ok_or_else(|| Error::data(format!("{}: missing n_docs", meta_path.display())))?
        as usize;

    let mut reader = csv::Reader::from_path(csv_path)
        .map_err(|e| Error::data(format!("cannot read {}: {e}", csv_path.display())))?;
    let mut rows: Vec<(String, usize, usize)> = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::data(e.to_string()))?;
        let term = row.get(0).unwrap_or_default().to_string();
        let index: usize = row
            .get(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::data(format!("{}: bad index column", csv_path.display())))?;
        let df: usize = row
            .get(2)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::data(format!("{}: bad doc_freq column", csv_path.display())))?;
        rows.push((term, index, df));
    }
    rows.sort_by_key(|&(_, index, _)| index);
    for (expected, &(_, index, _)) in rows.iter().enumerate() {
        if index != expected {
            return Err(Error::data(format!(
                "{}: term indices are not dense",
                csv_path.display()
            )));
        }
    }
    let mut vocab = Vocabulary {
        terms: rows.iter().map(|(t, _, _)| t.clone()).collect(),
        index: HashMap::new(),
        doc_freq: rows.iter().map(|&(_, _, df)| df).collect(),
        n_docs,
    };
    vocab.rebuild_index();
    Ok(vocab)
}

/// Persist vectors as sparse triplets `class_id,term_index,value` plus a
/// JSON header recording dimension and normalisation.
pub fn save_vectors(vectors: &[SemanticVector], csv_path: &Path, meta_path: &Path) -> Result<()> {
    let dim = vectors.first().map_or(0, |v| v.dim);
    let mut writer = csv::Writer::from_path(csv_path)
        .map_err(|e| Error::data(format!("cannot write {}: {e}", csv_path.display())))?;
    writer
        .write_record(["class_id", "term_index", "value"])
        .map_err(|e| Error::data(e.to_string()))?;
    for v in vectors {
        for &(col, value) in &v.entries {
            writer
                .write_record([
                    v.class_id.to_string(),
                    col.to_string(),
                    format!("{value:.17e}"),
                ])
                .map_err(|e| Error::data(e.to_string()))?;
        }
    }
    writer.flush().map_err(|e| Error::io(csv_path, e))?;
    let meta = serde_json::json!({
        "dim": dim,
        "n_vectors": vectors.len(),
        "normalization": "l2",
    });
    std::fs::write(meta_path, serde_json::to_string_pretty(&meta).expect("static json"))
        .map_err(|e| Error::io(meta_path, e))
}

/// Read vectors written by [`save_vectors`]. Rows sharing a class id are
/// grouped back into one sparse vector; norms are recomputed from the
/// entries (1.0, or 0.0 for classes absent from the file).
pub fn load_vectors(csv_path: &Path, meta_path: &Path) -> Result<Vec<SemanticVector>> {
    let meta: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(meta_path).map_err(|e| Error::io(meta_path, e))?,
    )
    .map_err(|e| Error::data(format!("{}: {e}", meta_path.display())))?;
    let dim = meta["dim"]
        .as_u64()
        .ok_or_else(|| Error::data(format!("{}: missing dim", meta_path.display())))? as usize;

    let mut reader = csv::Reader::from_path(csv_path)
        .map_err(|e| Error::data(format!("cannot read {}: {e}", csv_path.display())))?;
    let mut by_class = BTreeMap::<usize, Vec<(usize, f64)>>::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::data(e.to_string()))?;
        let parse_err = || Error::data(format!("{}: malformed triplet row", csv_path.display()));
        let class_id: usize = row.get(0).and_then(|s| s.parse().ok()).ok_or_else(parse_err)?;
        let col: usize = row.get(1).and_then(|s| s.parse().ok()).ok_or_else(parse_err)?;
        let value: f64 = row.get(2).and_then(|s| s.parse().ok()).ok_or_else(parse_err)?;
        if col >= dim {
            return Err(Error::data(format!(
                "{}: term index {col} outside dimension {dim}",
                csv_path.display()
            )));
        }
        by_class.entry(class_id).or_default().push((col, value));
    }
    Ok(by_class
        .into_iter()
        .map(|(class_id, mut entries)| {
            entries.sort_by_key(|&(col, _)| col);
            SemanticVector {
                class_id,
                norm: if entries.is_empty() { 0.0 } else { 1.0 },
                entries,
                dim,
            }
        })
        .collect())
}
