//! Synthetic desk-scale dataset generator.
//!
//! Builds a taxonomy of superclasses and classes with pronounceable
//! made-up vocabulary, short articles that share words within a
//! superclass, and visual features drawn from per-class Gaussian
//! clusters whose means are a fixed linear map of the class's semantic
//! prototype. Class names are `"<class word> <superclass word>"`, so
//! sibling names share a token and land close together in word-vector
//! space — the structure knowledge sharing exploits.
//!
//! The prototype is compositional: one coordinate per superclass plus
//! one per attribute, where every class carries two attribute words in
//! its article and each attribute recurs in another class of a different
//! superclass. A class held out as unseen therefore has a visual mean
//! that is a combination of directions observable from seen classes,
//! which is what makes zero-shot transfer possible at all.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gan::{save_features, FeatureOrigin, VisualFeature};
use crate::porter::porter_stem;
use crate::rng::stream_rng;

/// Shape of the synthetic dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FixtureSpec {
    pub n_super: usize,
    pub classes_per_super: usize,
    /// Dimension of the internal semantic prototype; must hold one
    /// coordinate per superclass plus one per attribute (the attribute
    /// pool has one entry per class).
    pub d_sem: usize,
    pub d_vis: usize,
    /// Per-coordinate standard deviation of the visual cluster noise.
    pub noise: f64,
    pub images_per_class: usize,
    pub seed: u64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            n_super: 3,
            classes_per_super: 3,
            d_sem: 12,
            d_vis: 16,
            noise: 0.1,
            images_per_class: 30,
            seed: 0,
        }
    }
}

impl FixtureSpec {
    pub fn n_classes(&self) -> usize {
        self.n_super * self.classes_per_super
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_super", self.n_super),
            ("classes_per_super", self.classes_per_super),
            ("d_sem", self.d_sem),
            ("d_vis", self.d_vis),
            ("images_per_class", self.images_per_class),
        ] {
            if v == 0 {
                return Err(Error::config(format!("fixture: {name} must be positive")));
            }
        }
        if self.noise < 0.0 || !self.noise.is_finite() {
            return Err(Error::config("fixture: noise must be a finite non-negative number"));
        }
        let needed = self.n_super + self.n_classes();
        if self.d_sem < needed {
            return Err(Error::config(format!(
                "fixture: d_sem = {} cannot hold {} superclass + {} attribute coordinates",
                self.d_sem,
                self.n_super,
                self.n_classes()
            )));
        }
        Ok(())
    }

    /// The two attribute indices of a class: its own index and a partner
    /// offset into another superclass, so every attribute is observable
    /// from at least one other class.
    fn attributes_of(&self, class_id: usize) -> [usize; 2] {
        let n = self.n_classes();
        let mut offset = (self.classes_per_super + 1) % n;
        if offset == 0 {
            offset = 1 % n.max(1);
        }
        [class_id, (class_id + offset) % n]
    }
}

/// Generate the dataset under `dir`: `classes.csv`, `articles/<id>.txt`,
/// `features.csv` + `features.json`, and `fixture.json` recording the
/// spec. Deterministic for a fixed seed.
pub fn make_fixture(spec: &FixtureSpec, dir: &Path) -> Result<()> {
    spec.validate()?;
    fs::create_dir_all(dir.join("articles")).map_err(|e| Error::io(dir, e))?;

    let n_classes = spec.n_classes();
    let mut word_rng = stream_rng(spec.seed, "fixture-words");
    let mut words = WordMint::default();
    let super_words: Vec<String> = (0..spec.n_super).map(|_| words.mint(&mut word_rng)).collect();
    let class_words: Vec<String> = (0..n_classes).map(|_| words.mint(&mut word_rng)).collect();
    let attr_words: Vec<String> = (0..n_classes).map(|_| words.mint(&mut word_rng)).collect();
    let fillers: Vec<String> = (0..3).map(|_| words.mint(&mut word_rng)).collect();

    // Manifest and articles. Within one superclass every article repeats
    // the superclass word; each class adds its own word plus its two
    // attribute words.
    let manifest_path = dir.join("classes.csv");
    let mut manifest = fs::File::create(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    writeln!(manifest, "class_id,name,superclass,article_file")
        .map_err(|e| Error::io(&manifest_path, e))?;
    for class_id in 0..n_classes {
        let sup = class_id / spec.classes_per_super;
        let name = format!("{} {}", class_words[class_id], super_words[sup]);
        let article_file = format!("articles/{class_id}.txt");
        writeln!(
            manifest,
            "{class_id},{name},{},{article_file}",
            super_words[sup]
        )
        .map_err(|e| Error::io(&manifest_path, e))?;

        let attrs = spec.attributes_of(class_id);
        let mut tokens = Vec::new();
        for rep in 0..8 {
            tokens.push(fillers[rep % fillers.len()].as_str());
            tokens.push(super_words[sup].as_str());
            tokens.push(class_words[class_id].as_str());
            tokens.push(attr_words[attrs[0]].as_str());
            tokens.push(attr_words[attrs[1]].as_str());
        }
        let article_path = dir.join(&article_file);
        fs::write(&article_path, tokens.join(" ")).map_err(|e| Error::io(&article_path, e))?;
    }
    manifest.flush().map_err(|e| Error::io(&manifest_path, e))?;

    // Visual features: cluster means are a fixed linear map of the
    // semantic prototype [superclass one-hot ; 0.8 * attribute pair].
    let mut map_rng = stream_rng(spec.seed, "fixture-map");
    let mut linear_map = Array2::<f64>::zeros((spec.d_vis, spec.d_sem));
    for v in linear_map.iter_mut() {
        *v = StandardNormal.sample(&mut map_rng);
    }
    let mut noise_rng = stream_rng(spec.seed, "fixture-noise");
    let part_layout = vec!["whole".to_string()];
    let mut features = Vec::with_capacity(n_classes * spec.images_per_class);
    for class_id in 0..n_classes {
        let sup = class_id / spec.classes_per_super;
        let mut prototype = Array1::<f64>::zeros(spec.d_sem);
        prototype[sup] = 1.0;
        for attr in spec.attributes_of(class_id) {
            prototype[spec.n_super + attr] = 0.8;
        }
        let mean = linear_map.dot(&prototype);
        for _ in 0..spec.images_per_class {
            let mut values = mean.clone();
            if spec.noise > 0.0 {
                for v in values.iter_mut() {
                    let eps: f64 = StandardNormal.sample(&mut noise_rng);
                    *v += spec.noise * eps;
                }
            }
            features.push(VisualFeature {
                class_id,
                values,
                origin: FeatureOrigin::Real,
                part_layout: part_layout.clone(),
            });
        }
    }
    save_features(&features, &dir.join("features.csv"), &dir.join("features.json"))?;

    let spec_path = dir.join("fixture.json");
    fs::write(
        &spec_path,
        serde_json::to_string_pretty(spec).expect("serializable spec"),
    )
    .map_err(|e| Error::io(&spec_path, e))
}

/// Mints pronounceable lowercase words whose Porter stems are unique, so
/// no two fixture words collide after preprocessing.
#[derive(Default)]
struct WordMint {
    used_stems: HashSet<String>,
}

impl WordMint {
    fn mint(&mut self, rng: &mut impl Rng) -> String {
        const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
        const VOWELS: &[u8] = b"aeiou";
        loop {
            let mut word = String::with_capacity(6);
            for _ in 0..3 {
                word.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char);
                word.push(VOWELS[rng.random_range(0..VOWELS.len())] as char);
            }
            let stem = porter_stem(&word);
            if self.used_stems.insert(stem) {
                return word;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::load_corpus;
    use crate::gan::load_features;

    #[test]
    fn fixture_has_expected_shape() {
        let dir = tempfile::tempdir().unwrap();
        let spec = FixtureSpec {
            d_vis: 16,
            images_per_class: 30,
            ..FixtureSpec::default()
        };
        make_fixture(&spec, dir.path()).unwrap();

        let records = load_corpus(dir.path(), &dir.path().join("classes.csv")).unwrap();
        assert_eq!(records.len(), 9);
        let supers: HashSet<&str> = records.iter().map(|r| r.superclass.as_str()).collect();
        assert_eq!(supers.len(), 3);
        for r in &records {
            assert!(r.name.contains(&r.superclass));
            assert!(!r.article_raw.is_empty());
        }

        let features =
            load_features(&dir.path().join("features.csv"), &dir.path().join("features.json"))
                .unwrap();
        assert_eq!(features.len(), 270);
        assert_eq!(features[0].values.len(), 16);
    }

    #[test]
    fn zero_noise_collapses_clusters() {
        let dir = tempfile::tempdir().unwrap();
        let spec = FixtureSpec {
            noise: 0.0,
            images_per_class: 4,
            ..FixtureSpec::default()
        };
        make_fixture(&spec, dir.path()).unwrap();
        let features =
            load_features(&dir.path().join("features.csv"), &dir.path().join("features.json"))
                .unwrap();
        for chunk in features.chunks(4) {
            for f in chunk {
                assert_eq!(f.values, chunk[0].values);
            }
        }
    }

    #[test]
    fn fixed_seed_reproduces_identical_files() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let spec = FixtureSpec {
            images_per_class: 3,
            ..FixtureSpec::default()
        };
        make_fixture(&spec, dir_a.path()).unwrap();
        make_fixture(&spec, dir_b.path()).unwrap();
        for file in ["classes.csv", "features.csv", "features.json", "articles/0.txt"] {
            let a = fs::read(dir_a.path().join(file)).unwrap();
            let b = fs::read(dir_b.path().join(file)).unwrap();
            assert_eq!(a, b, "{file} differs between identical-seed runs");
        }
    }

    #[test]
    fn degenerate_specs_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = FixtureSpec::default();
        spec.d_vis = 0;
        assert!(make_fixture(&spec, dir.path()).is_err());
        let mut spec = FixtureSpec::default();
        spec.d_sem = 2;
        assert!(make_fixture(&spec, dir.path()).is_err());
    }
}
