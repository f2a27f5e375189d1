//! Word embeddings and class-name embedding.
//!
//! Vectors are either loaded from a word2vec text file or trained at desk
//! scale with skip-gram negative sampling ([`sgns`]). Class names embed as
//! the unweighted mean of their in-vocabulary token vectors, which keeps
//! the operation symmetric in the name's words.

pub mod sgns;

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1};

use crate::corpus::tokenize;
use crate::error::{Error, Result};

pub use sgns::{train_sgns, SgnsConfig};

/// Dense word-vector table with a word -> row index.
#[derive(Debug, Clone)]
pub struct WordEmbeddings {
    dim: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Array2<f64>,
}

/// A class name embedded into the word-vector space.
#[derive(Debug, Clone)]
pub struct ClassEmbedding {
    pub class_id: usize,
    pub vector: Array1<f64>,
}

impl WordEmbeddings {
    /// Assemble a table from parallel word/vector lists. Vector rows must
    /// all share one dimension and be finite.
    pub fn new(words: Vec<String>, vectors: Array2<f64>) -> Result<Self> {
        let (rows, dim) = (vectors.nrows(), vectors.ncols());
        if rows != words.len() {
            return Err(Error::data(format!(
                "{} words but {rows} vector rows",
                words.len()
            )));
        }
        if dim == 0 {
            return Err(Error::data("embedding dimension must be positive"));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("non-finite embedding entry"));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, word) in words.iter().enumerate() {
            if index.insert(word.clone(), i).is_some() {
                return Err(Error::data(format!("duplicate word '{word}'")));
            }
        }
        Ok(WordEmbeddings {
            dim,
            words,
            index,
            vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab_size(&self) -> usize {
        self.words.len()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn vector(&self, word: &str) -> Option<ArrayView1<'_, f64>> {
        self.index.get(word).map(|&i| self.vectors.row(i))
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Mean vector over the in-vocabulary tokens, or `None` if every
    /// token is out of vocabulary.
    pub fn mean_of_tokens(&self, tokens: &[String]) -> Option<Array1<f64>> {
        let mut sum = Array1::<f64>::zeros(self.dim);
        let mut hits = 0usize;
        for token in tokens {
            if let Some(v) = self.vector(token) {
                sum += &v;
                hits += 1;
            }
        }
        (hits > 0).then(|| sum / hits as f64)
    }
}

/// Embed a class name as the mean of its in-vocabulary token vectors.
/// Errors when every token of the name is out of vocabulary, which is
/// exactly the situation retraining on the corpus is meant to prevent.
pub fn embed_class_name(
    class_id: usize,
    name: &str,
    emb: &WordEmbeddings,
) -> Result<ClassEmbedding> {
    let tokens = tokenize(name);
    if tokens.is_empty() {
        return Err(Error::data(format!(
            "class {class_id}: name '{name}' has no tokens"
        )));
    }
    let vector = emb.mean_of_tokens(&tokens).ok_or_else(|| {
        Error::data(format!(
            "class {class_id}: every token of name '{name}' is out of vocabulary"
        ))
    })?;
    Ok(ClassEmbedding { class_id, vector })
}

/// Load embeddings in word2vec text format: a `"<vocab> <dim>"` header
/// line, then one `word v_0 ... v_{dim-1}` line per word.
pub fn load_embeddings(path: &Path) -> Result<WordEmbeddings> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::data(format!("{}: empty embeddings file", path.display())))?;
    let mut parts = header.split_whitespace();
    let parse_header = |field: Option<&str>| -> Result<usize> {
        field
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::data(format!("{}: line 1: malformed header '{header}'", path.display())))
    };
    let vocab_size = parse_header(parts.next())?;
    let dim = parse_header(parts.next())?;

    let mut words = Vec::with_capacity(vocab_size);
    let mut vectors = Array2::<f64>::zeros((vocab_size, dim));
    let mut seen = HashMap::new();
    let mut row = 0usize;
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        if row >= vocab_size {
            return Err(Error::data(format!(
                "{}: line {}: more words than the declared {vocab_size}",
                path.display(),
                lineno + 1
            )));
        }
        let mut fields = line.split_whitespace();
        let word = fields.next().unwrap().to_string();
        if seen.insert(word.clone(), lineno).is_some() {
            return Err(Error::data(format!(
                "{}: line {}: duplicate word '{word}'",
                path.display(),
                lineno + 1
            )));
        }
        let values: Vec<f64> = fields
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| {
                Error::data(format!(
                    "{}: line {}: bad float: {e}",
                    path.display(),
                    lineno + 1
                ))
            })?;
        if values.len() != dim {
            return Err(Error::data(format!(
                "{}: line {}: expected {dim} values, found {}",
                path.display(),
                lineno + 1,
                values.len()
            )));
        }
        for (j, v) in values.into_iter().enumerate() {
            vectors[(row, j)] = v;
        }
        words.push(word);
        row += 1;
    }
    if row != vocab_size {
        return Err(Error::data(format!(
            "{}: declared {vocab_size} words, found {row}",
            path.display()
        )));
    }
    WordEmbeddings::new(words, vectors)
}

/// Write embeddings in word2vec text format. Values are printed with 17
/// significant digits so loading reproduces the doubles bit-exactly.
pub fn save_embeddings(emb: &WordEmbeddings, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    writeln!(out, "{} {}", emb.vocab_size(), emb.dim()).map_err(io_err)?;
    for (word, row) in emb.words.iter().zip(emb.vectors.rows()) {
        write!(out, "{word}").map_err(io_err)?;
        for v in row {
            write!(out, " {v:.17e}").map_err(io_err)?;
        }
        writeln!(out).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy() -> WordEmbeddings {
        WordEmbeddings::new(
            vec!["green".into(), "jay".into(), "gull".into()],
            array![[1.0, 2.0, 3.0], [3.0, 4.0, 5.0], [0.0, 0.0, 1.0]],
        )
        .unwrap()
    }

    #[test]
    fn single_word_name_is_that_vector() {
        let emb = toy();
        let e = embed_class_name(0, "jay", &emb).unwrap();
        assert_eq!(e.vector, array![3.0, 4.0, 5.0]);
    }

    #[test]
    fn multi_word_name_is_elementwise_mean() {
        let emb = toy();
        let e = embed_class_name(1, "green jay", &emb).unwrap();
        assert_eq!(e.vector, array![2.0, 3.0, 4.0]);
    }

    #[test]
    fn name_mean_is_permutation_invariant() {
        let emb = toy();
        let a = embed_class_name(0, "green jay", &emb).unwrap();
        let b = embed_class_name(0, "jay green", &emb).unwrap();
        assert_eq!(a.vector, b.vector);
    }

    #[test]
    fn fully_oov_name_errors() {
        let emb = toy();
        let err = embed_class_name(2, "pomarine jaeger", &emb).unwrap_err();
        assert!(err.to_string().contains("pomarine jaeger"), "{err}");
    }

    #[test]
    fn oov_tokens_are_ignored_when_any_hit() {
        let emb = toy();
        let e = embed_class_name(0, "shiny jay", &emb).unwrap();
        assert_eq!(e.vector, array![3.0, 4.0, 5.0]);
    }

    #[test]
    fn load_parses_word2vec_text() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vec.txt");
        fs::write(&path, "2 3\na 1 2 3\nb 0.5 -1 2e-1\n").unwrap();
        let emb = load_embeddings(&path).unwrap();
        assert_eq!(emb.vocab_size(), 2);
        assert_eq!(emb.dim(), 3);
        assert_eq!(emb.vector("b").unwrap()[2], 0.2);
    }

    #[test]
    fn load_reports_line_for_wrong_arity() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vec.txt");
        fs::write(&path, "2 3\na 1 2 3\nb 0.5 -1\n").unwrap();
        let err = load_embeddings(&path).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn load_reports_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vec.txt");
        fs::write(&path, "2 2\na 1 2\na 3 4\n").unwrap();
        let err = load_embeddings(&path).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn save_then_load_round_trips() {
        let emb = toy();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vec.txt");
        save_embeddings(&emb, &path).unwrap();
        let back = load_embeddings(&path).unwrap();
        assert_eq!(back.vocab_size(), emb.vocab_size());
        for word in emb.words() {
            let a = emb.vector(word).unwrap();
            let b = back.vector(word).unwrap();
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() <= 1e-6);
            }
        }
    }
}
