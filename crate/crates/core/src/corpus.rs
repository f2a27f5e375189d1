//! Corpus ingestion and text normalisation.
//!
//! Articles come in as one UTF-8 text file per class plus a CSV manifest
//! (`class_id,name,superclass,article_file`). Normalisation is a fixed
//! three-stage pipeline: tokenize, drop stop words, Porter-stem. The
//! order matters: stop-word matching runs against surface forms, before
//! stemming can alter them.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::porter::porter_stem;

/// Default English stop-word list, one token per line.
pub const DEFAULT_STOPWORDS: &str = include_str!("../assets/stopwords_en.txt");

/// Which side of the seen/unseen split a class belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRole {
    Seen,
    Unseen,
    Unassigned,
}

/// One class of the dataset: identity, taxonomy and raw article text.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassRecord {
    pub class_id: usize,
    pub name: String,
    pub superclass: String,
    pub article_raw: String,
    pub split_role: SplitRole,
}

/// Normalised token sequence for one class document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStream {
    pub class_id: usize,
    pub tokens: Vec<String>,
}

/// Split text into lowercase tokens on non-alphanumeric boundaries.
/// Diacritics are folded to ASCII first; empty fragments are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    fold_ascii(text)
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| s.to_ascii_lowercase())
        .collect()
}

/// Order-preserving stop-word filter.
pub fn remove_stopwords(tokens: Vec<String>, stoplist: &HashSet<String>) -> Vec<String> {
    tokens
        .into_iter()
        .filter(|t| !stoplist.contains(t))
        .collect()
}

/// Full normalisation for one record: tokenize, stop-filter, stem.
/// An all-stop-word article is legal but logged, since it encodes to a
/// zero semantic vector downstream.
pub fn preprocess(record: &ClassRecord, stoplist: &HashSet<String>) -> TokenStream {
    let tokens: Vec<String> = remove_stopwords(tokenize(&record.article_raw), stoplist)
        .into_iter()
        .map(|t| porter_stem(&t))
        .collect();
    if tokens.is_empty() {
        log::warn!(
            "class {} ({}): article reduced to zero tokens after preprocessing",
            record.class_id,
            record.name
        );
    }
    TokenStream {
        class_id: record.class_id,
        tokens,
    }
}

/// Parse a stop-word list: one token per line, blank lines ignored.
pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.to_ascii_lowercase())
        .collect()
}

/// The bundled default English stop-word set.
pub fn default_stopwords() -> HashSet<String> {
    parse_stopwords(DEFAULT_STOPWORDS)
}

/// Load a stop-word list from a file.
pub fn load_stopwords(path: &Path) -> Result<HashSet<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_stopwords(&text))
}

/// Load a dataset from `manifest` (CSV with header
/// `class_id,name,superclass,article_file`), reading each article file
/// relative to `root`. Records come back sorted by `class_id`, which
/// must be the dense range `0..n`.
pub fn load_corpus(root: &Path, manifest: &Path) -> Result<Vec<ClassRecord>> {
    let mut reader = csv::Reader::from_path(manifest)
        .map_err(|e| Error::data(format!("cannot read manifest {}: {e}", manifest.display())))?;

    let mut records = Vec::new();
    for row in reader.deserialize::<ManifestRow>() {
        let row =
            row.map_err(|e| Error::data(format!("malformed manifest row in {}: {e}", manifest.display())))?;
        let article_path = root.join(&row.article_file);
        let article_raw = fs::read_to_string(&article_path).map_err(|e| {
            Error::data(format!(
                "class {} ({}): cannot read article file {}: {e}",
                row.class_id,
                row.name,
                article_path.display()
            ))
        })?;
        records.push(ClassRecord {
            class_id: row.class_id,
            name: row.name,
            superclass: row.superclass,
            article_raw,
            split_role: SplitRole::Unassigned,
        });
    }

    if records.is_empty() {
        return Err(Error::data(format!(
            "manifest {} lists no classes",
            manifest.display()
        )));
    }

    records.sort_by_key(|r| r.class_id);
    for (expected, record) in records.iter().enumerate() {
        if record.class_id != expected {
            return Err(Error::data(if expected > 0 && records[expected - 1].class_id == record.class_id {
                format!("duplicate class_id {} in manifest", record.class_id)
            } else {
                format!(
                    "class ids must form the dense range 0..{}, found {}",
                    records.len(),
                    record.class_id
                )
            }));
        }
    }
    Ok(records)
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    class_id: usize,
    name: String,
    superclass: String,
    article_file: String,
}

/// Map common Latin diacritics onto their ASCII base letters; everything
/// else passes through untouched.
fn fold_ascii(text: &str) -> String {
    text.chars()
        .map(|c| match c {
            'à' | 'á' | 'â' | 'ã' | 'ä' | 'å' => 'a',
            'è' | 'é' | 'ê' | 'ë' => 'e',
            'ì' | 'í' | 'î' | 'ï' => 'i',
            'ò' | 'ó' | 'ô' | 'õ' | 'ö' => 'o',
            'ù' | 'ú' | 'û' | 'ü' => 'u',
            'ý' | 'ÿ' => 'y',
            'ç' => 'c',
            'ñ' => 'n',
            'À' | 'Á' | 'Â' | 'Ã' | 'Ä' | 'Å' => 'A',
            'È' | 'É' | 'Ê' | 'Ë' => 'E',
            'Ì' | 'Í' | 'Î' | 'Ï' => 'I',
            'Ò' | 'Ó' | 'Ô' | 'Õ' | 'Ö' => 'O',
            'Ù' | 'Ú' | 'Û' | 'Ü' => 'U',
            'Ç' => 'C',
            'Ñ' => 'N',
            other => other,
        })
        .collect()
}
