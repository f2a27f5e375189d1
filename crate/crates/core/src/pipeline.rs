//! Pipeline orchestration: configuration, four-step execution
//! (embeddings, knowledge sharing, GAN training, evaluation), stage
//! caching by content hash, and the top-k sweep.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array1;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{self, ClassRecord, TokenStream};
use crate::embed::{self, SgnsConfig, WordEmbeddings};
use crate::error::{Error, Result};
use crate::eval::{self, EvalInputs, SplitMode, SplitSpec, ZslReport};
use crate::gan::{self, GanModel, TrainConfig, TrainPair, VisualFeature};
use crate::ks;
use crate::tfidf;

/// Full description of a pipeline run. One config file plus the global
/// seed determines every output byte.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Dataset directory: `classes.csv`, `articles/`, `features.csv/json`.
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    /// Stop-word list file; the bundled English list when absent.
    pub stopwords_file: Option<PathBuf>,
    /// Pre-trained word vectors in word2vec text format; when absent the
    /// embeddings are trained on the corpus itself.
    pub embeddings_file: Option<PathBuf>,
    /// Global seed; every stage derives its own named stream from it.
    pub seed: u64,
    /// Top-k of the knowledge-sharing augmentation.
    pub ks_k: usize,
    pub split_mode: SplitMode,
    pub unseen_fraction: f64,
    /// Per-seen-class fraction of images held out for evaluation.
    pub test_fraction: f64,
    /// Pseudo visual features generated per unseen class.
    pub n_per_class: usize,
    /// Reuse cached stage outputs when inputs are unchanged.
    pub cache: bool,
    pub sgns: SgnsConfig,
    pub gan: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
            stopwords_file: None,
            embeddings_file: None,
            seed: 0,
            ks_k: 1,
            split_mode: SplitMode::Scs,
            unseen_fraction: 0.2,
            test_fraction: 0.2,
            n_per_class: 60,
            cache: true,
            sgns: SgnsConfig::default(),
            gan: TrainConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Parse a TOML config file. The global seed overrides the component
    /// seeds so one value drives every stream.
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: PipelineConfig = toml::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        cfg.propagate_seed();
        Ok(cfg)
    }

    /// Push the global seed into the component configs.
    pub fn propagate_seed(&mut self) {
        self.sgns.seed = self.seed;
        self.gan.seed = self.seed;
    }

    fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::config(format!(
                "test_fraction {} outside (0, 1)",
                self.test_fraction
            )));
        }
        if self.n_per_class == 0 {
            return Err(Error::config("n_per_class must be at least 1"));
        }
        if self.ks_k == 0 {
            return Err(Error::config("ks_k must be at least 1"));
        }
        if !self.data_dir.is_dir() {
            return Err(Error::config(format!(
                "data_dir {} does not exist",
                self.data_dir.display()
            )));
        }
        Ok(())
    }

    /// Hex digest of the semantic configuration. The output directory
    /// and the cache switch steer where and how results are produced,
    /// never what they are, so they are excluded.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out_dir = PathBuf::new();
        canonical.cache = true;
        content_hash(&[&serde_json::to_string(&canonical).expect("serializable config")])
    }
}

/// How far to run the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Preprocess,
    Embed,
    Similarity,
    Augment,
    Encode,
    Train,
    Synthesize,
    Evaluate,
}

/// Inputs shared across sweep entries: the corpus with its normalised
/// token streams and the (expensive) word embeddings.
pub struct Prepared {
    pub records: Vec<ClassRecord>,
    pub streams: Vec<TokenStream>,
    pub embeddings: WordEmbeddings,
}

/// Run every stage and write the final report.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<ZslReport> {
    let prepared = prepare(cfg)?;
    let report = run_from(cfg, &prepared, Stage::Evaluate)?;
    Ok(report.expect("evaluate stage yields a report"))
}

/// Run the pipeline up to `stage`, writing each completed stage's outputs.
pub fn run_stage(cfg: &PipelineConfig, stage: Stage) -> Result<Option<ZslReport>> {
    let prepared = prepare(cfg)?;
    run_from(cfg, &prepared, stage)
}

/// Load the corpus, preprocess it, and obtain word embeddings (trained
/// on the corpus or loaded from file). Embedding training is cached on
/// the token streams and training config.
pub fn prepare(cfg: &PipelineConfig) -> Result<Prepared> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;

    let stopwords = match &cfg.stopwords_file {
        Some(path) => corpus::load_stopwords(path).map_err(|e| in_stage("preprocess", e))?,
        None => corpus::default_stopwords(),
    };
    let records = corpus::load_corpus(&cfg.data_dir, &cfg.data_dir.join("classes.csv"))
        .map_err(|e| in_stage("preprocess", e))?;
    let streams: Vec<TokenStream> = records
        .iter()
        .map(|r| corpus::preprocess(r, &stopwords))
        .collect();
    write_preprocessed(&cfg.out_dir, &streams)?;

    let embeddings = match &cfg.embeddings_file {
        Some(path) => embed::load_embeddings(path).map_err(|e| in_stage("embed", e))?,
        None => {
            let key = content_hash(&[
                &serde_json::to_string(&streams).expect("serializable streams"),
                &serde_json::to_string(&cfg.sgns).expect("serializable config"),
            ]);
            let out = cfg.out_dir.join("embeddings.txt");
            cached(cfg, "embed", &key, &[out.clone()], || {
                let trained = embed::train_sgns(&streams, &cfg.sgns)?;
                embed::save_embeddings(&trained.embeddings, &out)?;
                Ok(())
            })
            .map_err(|e| in_stage("embed", e))?;
            // Always read back from disk so cached and fresh runs see
            // bit-identical values (the text format is exact).
            embed::load_embeddings(&out).map_err(|e| in_stage("embed", e))?
        }
    };

    Ok(Prepared {
        records,
        streams,
        embeddings,
    })
}

/// Execute the stages after [`prepare`], stopping at `stage`.
pub fn run_from(
    cfg: &PipelineConfig,
    prepared: &Prepared,
    stage: Stage,
) -> Result<Option<ZslReport>> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let records = &prepared.records;
    let n_classes = records.len();
    if stage < Stage::Similarity {
        return Ok(None);
    }

    // Class-name embeddings and the similarity matrix. Names run through
    // the same preprocessing as the articles so their tokens match the
    // corpus-trained vocabulary.
    let stopwords = match &cfg.stopwords_file {
        Some(path) => corpus::load_stopwords(path)?,
        None => corpus::default_stopwords(),
    };
    let class_embeddings = records
        .iter()
        .map(|r| {
            let name_record = ClassRecord {
                article_raw: r.name.clone(),
                ..r.clone()
            };
            let tokens = corpus::preprocess(&name_record, &stopwords).tokens;
            let vector = prepared.embeddings.mean_of_tokens(&tokens).ok_or_else(|| {
                Error::data(format!(
                    "class {} ({}): every name token is out of vocabulary",
                    r.class_id, r.name
                ))
            })?;
            Ok(embed::ClassEmbedding {
                class_id: r.class_id,
                vector,
            })
        })
        .collect::<Result<Vec<_>>>()
        .map_err(|e| in_stage("similarity", e))?;
    let sm = ks::build_similarity(&class_embeddings).map_err(|e| in_stage("similarity", e))?;
    ks::export_similarity(&sm, records, &cfg.out_dir.join("similarity.csv"))
        .map_err(|e| in_stage("similarity", e))?;
    if stage < Stage::Augment {
        return Ok(None);
    }

    // Knowledge-sharing augmentation.
    let augmented = ks::augment(records, &sm, cfg.ks_k).map_err(|e| in_stage("augment", e))?;
    write_augmented(&cfg.out_dir, &augmented).map_err(|e| in_stage("augment", e))?;
    if stage < Stage::Encode {
        return Ok(None);
    }

    // TF-IDF encoding of the augmented articles.
    let augmented_streams: Vec<TokenStream> = records
        .iter()
        .map(|r| {
            let aug_record = ClassRecord {
                article_raw: augmented.articles[r.class_id].clone(),
                ..r.clone()
            };
            corpus::preprocess(&aug_record, &stopwords)
        })
        .collect();
    let vocab = tfidf::fit_vocabulary(&augmented_streams).map_err(|e| in_stage("encode", e))?;
    let vectors: Vec<tfidf::SemanticVector> = augmented_streams
        .iter()
        .map(|s| tfidf::encode(s, &vocab))
        .collect();
    for v in &vectors {
        if v.is_zero() {
            return Err(in_stage(
                "encode",
                Error::data(format!(
                    "class {}: augmented article encodes to a zero semantic vector",
                    v.class_id
                )),
            ));
        }
    }
    tfidf::save_vocabulary(&vocab, &cfg.out_dir.join("vocab.csv"), &cfg.out_dir.join("vocab.json"))
        .map_err(|e| in_stage("encode", e))?;
    tfidf::save_vectors(
        &vectors,
        &cfg.out_dir.join("vectors.csv"),
        &cfg.out_dir.join("vectors.json"),
    )
    .map_err(|e| in_stage("encode", e))?;
    if stage < Stage::Train {
        return Ok(None);
    }

    // Visual features, split, scaling.
    let features = gan::load_features(
        &cfg.data_dir.join("features.csv"),
        &cfg.data_dir.join("features.json"),
    )
    .map_err(|e| in_stage("train", e))?;
    if let Some(f) = features.iter().find(|f| f.class_id >= n_classes) {
        return Err(in_stage(
            "train",
            Error::data(format!(
                "feature row labeled {} but corpus has {n_classes} classes",
                f.class_id
            )),
        ));
    }
    let split = eval::make_split(records, cfg.split_mode, cfg.unseen_fraction, cfg.seed)
        .map_err(|e| in_stage("train", e))?;
    write_json(&cfg.out_dir.join("split.json"), &split)?;

    let (seen_train_raw, test_raw) = split_images(&features, &split, cfg.test_fraction)?;
    let (seen_train_scaled, scaler) =
        gan::scale_features(&seen_train_raw).map_err(|e| in_stage("train", e))?;
    let test_scaled: Vec<VisualFeature> = test_raw
        .iter()
        .map(|f| VisualFeature {
            class_id: f.class_id,
            values: scaler.transform(f.values.view()),
            origin: f.origin,
            part_layout: f.part_layout.clone(),
        })
        .collect();

    let dense: BTreeMap<usize, Array1<f64>> =
        vectors.iter().map(|v| (v.class_id, v.to_dense())).collect();
    let unseen_semantics: Vec<(usize, Array1<f64>)> = split
        .unseen
        .iter()
        .map(|&c| (c, dense[&c].clone()))
        .collect();
    let seen_semantics: Vec<(usize, Array1<f64>)> = split
        .seen
        .iter()
        .map(|&c| (c, dense[&c].clone()))
        .collect();
    let pairs: Vec<TrainPair> = seen_train_scaled
        .iter()
        .map(|f| TrainPair {
            feature: f.values.clone(),
            semantic: dense[&f.class_id].clone(),
            class_id: f.class_id,
        })
        .collect();

    // GAN training, cached on everything that feeds it.
    let train_key = content_hash(&[
        &serde_json::to_string(&vectors).expect("serializable vectors"),
        &serde_json::to_string(&cfg.gan).expect("serializable config"),
        &serde_json::to_string(&split).expect("serializable split"),
        &hash_features(&features),
        &cfg.test_fraction.to_string(),
        &cfg.n_per_class.to_string(),
    ]);
    let ckpt_stem = cfg.out_dir.join("checkpoint");
    let history_path = cfg.out_dir.join("history.jsonl");
    let eval_inputs = EvalInputs {
        split: &split,
        seen_train: &seen_train_scaled,
        test: &test_scaled,
        seen_semantics: &seen_semantics,
        unseen_semantics: &unseen_semantics,
        n_classes,
        n_per_class: cfg.n_per_class,
        knn_k: cfg.gan.knn_k,
        seed: cfg.seed,
    };
    cached(
        cfg,
        "train",
        &train_key,
        &[ckpt_stem.with_extension("json"), ckpt_stem.with_extension("bin"), history_path.clone()],
        || {
            let model = GanModel::new(
                vocab.len(),
                scaler.dim(),
                split.seen.iter().copied().collect(),
                features[0].part_layout.clone(),
                &cfg.gan,
            )?;
            let outcome = gan::train(model, &pairs, &cfg.gan, |snapshot, _iter| {
                eval::generated_knn_scores(snapshot, &eval_inputs)
            })?;
            let (chosen, iteration) = match outcome.best {
                Some(best) => (best.model, best.record.iter),
                None => (outcome.model, cfg.gan.maxiter),
            };
            gan::save_checkpoint(&chosen, &scaler, iteration, &ckpt_stem)?;
            outcome.history.save_jsonl(&history_path)?;
            Ok(())
        },
    )
    .map_err(|e| in_stage("train", e))?;
    let (model, scaler, _iteration) =
        gan::load_checkpoint(&ckpt_stem).map_err(|e| in_stage("train", e))?;
    if stage < Stage::Synthesize {
        return Ok(None);
    }

    // Pseudo features for the unseen classes, exported in raw space.
    let generated = gan::synthesize_unseen(&model, &unseen_semantics, cfg.n_per_class, cfg.seed)
        .map_err(|e| in_stage("synthesize", e))?;
    let generated_raw: Vec<VisualFeature> = generated
        .iter()
        .map(|f| VisualFeature {
            class_id: f.class_id,
            values: scaler.inverse(f.values.view()),
            origin: f.origin,
            part_layout: f.part_layout.clone(),
        })
        .collect();
    gan::save_features(
        &generated_raw,
        &cfg.out_dir.join("generated.csv"),
        &cfg.out_dir.join("generated.json"),
    )
    .map_err(|e| in_stage("synthesize", e))?;
    if stage < Stage::Evaluate {
        return Ok(None);
    }

    // Final evaluation and report.
    let scores = eval::zsl_evaluate(&model, &eval_inputs).map_err(|e| in_stage("evaluate", e))?;
    eval::export_curve(&scores.curve, &cfg.out_dir.join("curve.csv"))
        .map_err(|e| in_stage("evaluate", e))?;
    let mut seeds = BTreeMap::new();
    seeds.insert("global".to_string(), cfg.seed);
    let report = ZslReport {
        split_mode: cfg.split_mode,
        k_ks: cfg.ks_k,
        zsl_top1: scores.zsl_top1,
        gzsl_seen_acc: scores.gzsl_seen_acc,
        gzsl_unseen_acc: scores.gzsl_unseen_acc,
        ausuc: scores.curve.ausuc,
        curve_points: scores.curve.points.clone(),
        seeds,
        config_hash: cfg.hash(),
    };
    write_json(&cfg.out_dir.join("report.json"), &report)?;
    Ok(Some(report))
}

/// One sweep entry: the k value and its outcome.
pub struct SweepEntry {
    pub k: usize,
    pub outcome: Result<ZslReport>,
}

/// Run the pipeline once per k value, sharing the corpus and embeddings,
/// each entry writing into `out_dir/k_<k>/`. A failing entry does not
/// abort the rest. Writes `sweep_summary.csv`.
pub fn run_sweep(cfg: &PipelineConfig, k_values: &[usize]) -> Result<Vec<SweepEntry>> {
    if k_values.is_empty() {
        return Err(Error::config("sweep: no k values"));
    }
    let prepared = prepare(cfg)?;
    let mut entries = Vec::with_capacity(k_values.len());
    for &k in k_values {
        let mut sub = cfg.clone();
        sub.ks_k = k;
        sub.out_dir = cfg.out_dir.join(format!("k_{k}"));
        let outcome = run_from(&sub, &prepared, Stage::Evaluate)
            .map(|r| r.expect("evaluate stage yields a report"));
        if let Err(e) = &outcome {
            log::error!("sweep entry k = {k} failed: {e}");
        }
        entries.push(SweepEntry { k, outcome });
    }

    let summary_path = cfg.out_dir.join("sweep_summary.csv");
    let mut summary = String::from("k,seen_acc,unseen_acc,ausuc\n");
    for entry in &entries {
        match &entry.outcome {
            Ok(report) => summary.push_str(&format!(
                "{},{},{},{}\n",
                entry.k, report.gzsl_seen_acc, report.gzsl_unseen_acc, report.ausuc
            )),
            Err(_) => summary.push_str(&format!("{},,,\n", entry.k)),
        }
    }
    fs::write(&summary_path, summary).map_err(|e| Error::io(&summary_path, e))?;
    Ok(entries)
}

/// Split real features into seen-class training features and held-out
/// test features. Every unseen-class image is test; each seen class
/// keeps `test_fraction` of its images (at least one, in file order)
/// for evaluation.
fn split_images(
    features: &[VisualFeature],
    split: &SplitSpec,
    test_fraction: f64,
) -> Result<(Vec<VisualFeature>, Vec<VisualFeature>)> {
    let mut by_class: BTreeMap<usize, Vec<&VisualFeature>> = BTreeMap::new();
    for f in features {
        by_class.entry(f.class_id).or_default().push(f);
    }
    let class_ids: BTreeSet<usize> = by_class.keys().copied().collect();
    for &c in split.seen.iter().chain(&split.unseen) {
        if !class_ids.contains(&c) {
            return Err(Error::data(format!("class {c} has no feature rows")));
        }
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (&class_id, rows) in &by_class {
        if split.unseen.contains(&class_id) {
            test.extend(rows.iter().map(|f| (*f).clone()));
            continue;
        }
        let n = rows.len();
        let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
        let n_train = n - n_test;
        if n_train == 0 {
            return Err(Error::data(format!(
                "class {class_id}: no training images left after the test split"
            )));
        }
        train.extend(rows[..n_train].iter().map(|f| (*f).clone()));
        test.extend(rows[n_train..].iter().map(|f| (*f).clone()));
    }
    Ok((train, test))
}

fn write_preprocessed(out_dir: &Path, streams: &[TokenStream]) -> Result<()> {
    let dir = out_dir.join("preprocessed");
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for s in streams {
        let path = dir.join(format!("{}.txt", s.class_id));
        fs::write(&path, s.tokens.join(" ")).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

fn write_augmented(out_dir: &Path, augmented: &ks::AugmentedCorpus) -> Result<()> {
    let dir = out_dir.join("augmented");
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for (class_id, article) in augmented.articles.iter().enumerate() {
        let path = dir.join(format!("{class_id}.txt"));
        fs::write(&path, article).map_err(|e| Error::io(&path, e))?;
    }
    let sidecar = serde_json::json!({
        "k": augmented.k,
        "provenance": augmented.provenance,
    });
    let path = out_dir.join("provenance.json");
    fs::write(&path, serde_json::to_string_pretty(&sidecar).expect("static json"))
        .map_err(|e| Error::io(&path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(
        path,
        serde_json::to_string_pretty(value).expect("serializable value"),
    )
    .map_err(|e| Error::io(path, e))
}

/// Run `compute` unless a cache marker matching `key` and all `outputs`
/// already exist.
fn cached(
    cfg: &PipelineConfig,
    stage: &str,
    key: &str,
    outputs: &[PathBuf],
    compute: impl FnOnce() -> Result<()>,
) -> Result<()> {
    let marker_dir = cfg.out_dir.join("cache");
    let marker = marker_dir.join(format!("{stage}.hash"));
    if cfg.cache
        && marker.is_file()
        && fs::read_to_string(&marker).map(|m| m.trim() == key).unwrap_or(false)
        && outputs.iter().all(|p| p.is_file())
    {
        log::info!("stage {stage}: cache hit, reusing outputs");
        return Ok(());
    }
    compute()?;
    fs::create_dir_all(&marker_dir).map_err(|e| Error::io(&marker_dir, e))?;
    fs::write(&marker, key).map_err(|e| Error::io(&marker, e))?;
    Ok(())
}

fn content_hash(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update(p.as_bytes());
        hasher.update([0u8]);
    }
    let digest = hasher.finalize();
    digest.iter().take(16).map(|b| format!("{b:02x}")).collect()
}

fn hash_features(features: &[VisualFeature]) -> String {
    let mut hasher = Sha256::new();
    for f in features {
        hasher.update(f.class_id.to_le_bytes());
        for v in &f.values {
            hasher.update(v.to_le_bytes());
        }
    }
    let digest = hasher.finalize();
    digest.iter().take(16).map(|b| format!("{b:02x}")).collect()
}

fn in_stage(stage: &str, e: Error) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("stage {stage}: {m}")),
        Error::Data(m) => Error::Data(format!("stage {stage}: {m}")),
        Error::Numeric(m) => Error::Numeric(format!("stage {stage}: {m}")),
        io @ Error::Io { .. } => io,
    }
}
