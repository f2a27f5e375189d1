//! Conditional GAN that maps semantic vectors plus noise to pseudo
//! visual features.
//!
//! The generator is an MLP `[semantic; noise] -> hidden (leaky relu) ->
//! features (tanh)`; the discriminator shares a relu trunk feeding two
//! heads, one real/fake logit and one class-logit row over the seen
//! classes. Training alternates one discriminator step (real up, fake
//! down, classify both) with one generator step (fool the source head,
//! satisfy the class head). Real features are min-max scaled to [-1, 1]
//! beforehand so the tanh output range can cover them.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::prelude::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{
    bce_with_logits, softmax_xent, Activation, AdamHyper, AdamState, DenseLayer, LayerShape, Mlp,
};
use crate::rng::stream_rng;

/// Whether a feature vector came from an image pipeline or the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureOrigin {
    Real,
    Generated,
}

/// One visual feature vector with its class label and part layout.
#[derive(Debug, Clone)]
pub struct VisualFeature {
    pub class_id: usize,
    pub values: Array1<f64>,
    pub origin: FeatureOrigin,
    pub part_layout: Vec<String>,
}

/// Per-dimension affine map of features onto [-1, 1]. Constant
/// dimensions map to 0 and invert back to their constant value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

impl FeatureScaler {
    /// Fit per-dimension minima and maxima over a feature set.
    pub fn fit(features: &[VisualFeature]) -> Result<Self> {
        let first = features
            .first()
            .ok_or_else(|| Error::data("scale_features: empty feature set"))?;
        let dim = first.values.len();
        let mut mins = vec![f64::INFINITY; dim];
        let mut maxs = vec![f64::NEG_INFINITY; dim];
        for f in features {
            if f.values.len() != dim {
                return Err(Error::data("scale_features: inconsistent dimensions"));
            }
            for (j, &v) in f.values.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::data(format!(
                        "scale_features: non-finite value in dimension {j} of class {}",
                        f.class_id
                    )));
                }
                mins[j] = mins[j].min(v);
                maxs[j] = maxs[j].max(v);
            }
        }
        Ok(FeatureScaler { mins, maxs })
    }

    pub fn dim(&self) -> usize {
        self.mins.len()
    }

    pub fn transform(&self, values: ArrayView1<'_, f64>) -> Array1<f64> {
        Array1::from_iter(values.iter().enumerate().map(|(j, &v)| {
            let span = self.maxs[j] - self.mins[j];
            if span == 0.0 {
                0.0
            } else {
                2.0 * (v - self.mins[j]) / span - 1.0
            }
        }))
    }

    pub fn inverse(&self, scaled: ArrayView1<'_, f64>) -> Array1<f64> {
        Array1::from_iter(scaled.iter().enumerate().map(|(j, &v)| {
            let span = self.maxs[j] - self.mins[j];
            if span == 0.0 {
                self.mins[j]
            } else {
                (v + 1.0) / 2.0 * span + self.mins[j]
            }
        }))
    }
}

/// Min-max scale a feature set to [-1, 1]; returns the scaled set and the
/// fitted scaler for the inverse map.
pub fn scale_features(features: &[VisualFeature]) -> Result<(Vec<VisualFeature>, FeatureScaler)> {
    let scaler = FeatureScaler::fit(features)?;
    let scaled = features
        .iter()
        .map(|f| VisualFeature {
            class_id: f.class_id,
            values: scaler.transform(f.values.view()),
            origin: f.origin,
            part_layout: f.part_layout.clone(),
        })
        .collect();
    Ok((scaled, scaler))
}

/// Training hyperparameters, defaulting to the reference model setting:
/// Adam(0.9, 0.999, 1e-3), 10000 iterations, batches of 1000, an
/// evaluation every 40 iterations with a 20-nearest-neighbour probe.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub maxiter: usize,
    pub batchsize: usize,
    pub eval_every: usize,
    pub knn_k: usize,
    pub noise_dim: usize,
    pub gen_hidden: usize,
    pub disc_hidden: usize,
    pub leaky_slope: f64,
    pub class_loss_weight: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            maxiter: 10000,
            batchsize: 1000,
            eval_every: 40,
            knn_k: 20,
            noise_dim: 100,
            gen_hidden: 1024,
            disc_hidden: 1024,
            leaky_slope: 0.2,
            class_loss_weight: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("lr", self.lr),
            ("leaky_slope", self.leaky_slope),
            ("class_loss_weight", self.class_loss_weight),
        ];
        for (name, v) in positive {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::config(format!("train config: {name} must be positive")));
            }
        }
        if self.leaky_slope >= 1.0 {
            return Err(Error::config("train config: leaky_slope must lie in (0, 1)"));
        }
        let counts = [
            ("maxiter", self.maxiter),
            ("batchsize", self.batchsize),
            ("eval_every", self.eval_every),
            ("knn_k", self.knn_k),
            ("noise_dim", self.noise_dim),
            ("gen_hidden", self.gen_hidden),
            ("disc_hidden", self.disc_hidden),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::config(format!("train config: {name} must be positive")));
            }
        }
        Ok(())
    }

    fn adam(&self) -> AdamHyper {
        AdamHyper {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: 1e-8,
        }
    }
}

/// Generator + discriminator with architecture metadata.
#[derive(Debug, Clone)]
pub struct GanModel {
    pub generator: Mlp,
    pub trunk: Mlp,
    pub source_head: Mlp,
    pub class_head: Mlp,
    pub semantic_dim: usize,
    pub feature_dim: usize,
    pub noise_dim: usize,
    /// Global class ids the class head covers, in head-column order.
    pub seen_labels: Vec<usize>,
    pub part_layout: Vec<String>,
    pub seed: u64,
}

impl GanModel {
    /// Build a fresh model with Glorot-initialised weights drawn from the
    /// `gan-init` stream of `cfg.seed`.
    pub fn new(
        semantic_dim: usize,
        feature_dim: usize,
        mut seen_labels: Vec<usize>,
        part_layout: Vec<String>,
        cfg: &TrainConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if semantic_dim == 0 || feature_dim == 0 {
            return Err(Error::data("gan: semantic and feature dims must be positive"));
        }
        seen_labels.sort_unstable();
        seen_labels.dedup();
        if seen_labels.is_empty() {
            return Err(Error::data("gan: no seen classes"));
        }
        let mut rng = stream_rng(cfg.seed, "gan-init");
        let generator = Mlp::new(vec![
            DenseLayer::glorot(
                semantic_dim + cfg.noise_dim,
                cfg.gen_hidden,
                Activation::LeakyRelu(cfg.leaky_slope),
                &mut rng,
            ),
            DenseLayer::glorot(cfg.gen_hidden, feature_dim, Activation::Tanh, &mut rng),
        ]);
        let trunk = Mlp::new(vec![DenseLayer::glorot(
            feature_dim,
            cfg.disc_hidden,
            Activation::Relu,
            &mut rng,
        )]);
        let source_head = Mlp::new(vec![DenseLayer::glorot(
            cfg.disc_hidden,
            1,
            Activation::Identity,
            &mut rng,
        )]);
        let class_head = Mlp::new(vec![DenseLayer::glorot(
            cfg.disc_hidden,
            seen_labels.len(),
            Activation::Identity,
            &mut rng,
        )]);
        Ok(GanModel {
            generator,
            trunk,
            source_head,
            class_head,
            semantic_dim,
            feature_dim,
            noise_dim: cfg.noise_dim,
            seen_labels,
            part_layout,
            seed: cfg.seed,
        })
    }

    /// Column of the class head for a global class id.
    pub fn local_label(&self, class_id: usize) -> Option<usize> {
        self.seen_labels.binary_search(&class_id).ok()
    }

    /// Generator forward on a batch of `[semantic; noise]` rows.
    fn generate_batch(&self, semantics: &Array2<f64>, noise: &Array2<f64>) -> Result<Array2<f64>> {
        let batch = semantics.nrows();
        let mut joint = Array2::zeros((batch, self.semantic_dim + self.noise_dim));
        joint
            .slice_mut(ndarray::s![.., ..self.semantic_dim])
            .assign(semantics);
        joint
            .slice_mut(ndarray::s![.., self.semantic_dim..])
            .assign(noise);
        Ok(self.generator.forward(joint.view())?.output().clone())
    }
}

/// Map one semantic vector plus one noise vector to a pseudo visual
/// feature. The semantic vector must be non-zero (zero vectors are
/// flagged upstream by the encoder) and dimensions must match the model.
pub fn generate(model: &GanModel, semantic: ArrayView1<'_, f64>, noise: ArrayView1<'_, f64>) -> Result<VisualFeature> {
    if semantic.len() != model.semantic_dim {
        return Err(Error::data(format!(
            "generate: semantic dim {} != model dim {}",
            semantic.len(),
            model.semantic_dim
        )));
    }
    if noise.len() != model.noise_dim {
        return Err(Error::data(format!(
            "generate: noise dim {} != model dim {}",
            noise.len(),
            model.noise_dim
        )));
    }
    if semantic.iter().all(|&v| v == 0.0) {
        return Err(Error::data("generate: zero semantic vector"));
    }
    let mut joint = Array1::zeros(model.semantic_dim + model.noise_dim);
    joint.slice_mut(ndarray::s![..model.semantic_dim]).assign(&semantic);
    joint.slice_mut(ndarray::s![model.semantic_dim..]).assign(&noise);
    let out = model
        .generator
        .forward(joint.view().insert_axis(Axis(0)))?
        .output()
        .row(0)
        .to_owned();
    Ok(VisualFeature {
        class_id: usize::MAX,
        values: out,
        origin: FeatureOrigin::Generated,
        part_layout: model.part_layout.clone(),
    })
}

/// One visual-semantic training pair (feature already scaled to [-1,1]).
#[derive(Debug, Clone)]
pub struct TrainPair {
    pub feature: Array1<f64>,
    pub semantic: Array1<f64>,
    pub class_id: usize,
}

/// Loss record for one training iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub d_loss: f64,
    pub g_loss: f64,
    pub class_loss: f64,
}

/// Scores returned by the evaluation callback.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EvalScores {
    pub seen_acc: f64,
    pub unseen_acc: f64,
}

/// Evaluation record: callback scores at one iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRecord {
    pub iter: usize,
    pub seen_acc: f64,
    pub unseen_acc: f64,
}

/// Full training history: per-iteration losses and periodic evaluations.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct History {
    pub iterations: Vec<IterRecord>,
    pub evals: Vec<EvalRecord>,
}

impl History {
    /// Write as JSON lines: one object per iteration, one per evaluation.
    pub fn save_jsonl(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write;
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        for rec in &self.iterations {
            let line = serde_json::to_string(rec).expect("serializable record");
            writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
        }
        for rec in &self.evals {
            let line = serde_json::json!({ "iter": rec.iter, "eval": { "seen_acc": rec.seen_acc, "unseen_acc": rec.unseen_acc } });
            writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Outcome of a training run: the final model, the checkpoint chosen by
/// the selection rule (when any evaluation ran), and the history.
#[derive(Debug)]
pub struct TrainOutcome {
    pub model: GanModel,
    pub best: Option<BestCheckpoint>,
    pub history: History,
}

/// Snapshot of the model at the evaluation with the best seen-class score.
#[derive(Debug, Clone)]
pub struct BestCheckpoint {
    pub model: GanModel,
    pub record: EvalRecord,
}

/// Pick the evaluation with maximal seen-class generalized accuracy; the
/// unseen accuracy reported alongside is the one measured at that same
/// checkpoint. Ties resolve to the earliest iteration.
pub fn select_model(evals: &[EvalRecord]) -> Result<usize> {
    if evals.is_empty() {
        return Err(Error::data("select_model: empty evaluation history"));
    }
    let mut best = 0;
    for (i, rec) in evals.iter().enumerate().skip(1) {
        if rec.seen_acc > evals[best].seen_acc {
            best = i;
        }
    }
    Ok(best)
}

/// Train the GAN on visual-semantic pairs of seen classes.
///
/// Each iteration runs one discriminator step (source loss on real and
/// fake plus class loss on both) and one generator step (source loss
/// towards "real" plus class loss on fakes). `monitor` is invoked every
/// `cfg.eval_every` iterations with an immutable model snapshot and must
/// return generalized seen/unseen scores; the best-seen checkpoint is
/// kept according to [`select_model`]'s rule.
pub fn train(
    mut model: GanModel,
    pairs: &[TrainPair],
    cfg: &TrainConfig,
    mut monitor: impl FnMut(&GanModel, usize) -> Result<EvalScores>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(Error::data("gan train: no visual-semantic pairs"));
    }
    let mut local_labels = Vec::with_capacity(pairs.len());
    for p in pairs {
        let local = model.local_label(p.class_id).ok_or_else(|| {
            Error::data(format!(
                "gan train: class {} is not a seen class of this model",
                p.class_id
            ))
        })?;
        if p.feature.len() != model.feature_dim || p.semantic.len() != model.semantic_dim {
            return Err(Error::data(format!(
                "gan train: pair of class {} has wrong dimensions",
                p.class_id
            )));
        }
        local_labels.push(local);
    }

    let mut rng = stream_rng(cfg.seed, "gan-train");
    let mut opt_g = AdamState::new(cfg.adam(), model.generator.param_count())?;
    let disc_params =
        model.trunk.param_count() + model.source_head.param_count() + model.class_head.param_count();
    let mut opt_d = AdamState::new(cfg.adam(), disc_params)?;

    let mut history = History::default();
    let mut best: Option<BestCheckpoint> = None;
    let indices: Vec<usize> = (0..pairs.len()).collect();

    for iter in 1..=cfg.maxiter {
        let batch_idx = sample_batch(&indices, cfg.batchsize, &mut rng);
        let batch = batch_idx.len();
        let mut real = Array2::zeros((batch, model.feature_dim));
        let mut semantics = Array2::zeros((batch, model.semantic_dim));
        let mut labels = Vec::with_capacity(batch);
        for (row, &i) in batch_idx.iter().enumerate() {
            real.row_mut(row).assign(&pairs[i].feature);
            semantics.row_mut(row).assign(&pairs[i].semantic);
            labels.push(local_labels[i]);
        }
        let ones = Array2::ones((batch, 1));
        let zeros = Array2::zeros((batch, 1));

        // Discriminator step: real up, fake down, classify both.
        let fake = model.generate_batch(&semantics, &gaussian(batch, model.noise_dim, &mut rng))?;

        let trunk_real = model.trunk.forward(real.view())?;
        let trunk_fake = model.trunk.forward(fake.view())?;
        let src_real = model.source_head.forward(trunk_real.output().view())?;
        let src_fake = model.source_head.forward(trunk_fake.output().view())?;
        let cls_real = model.class_head.forward(trunk_real.output().view())?;
        let cls_fake = model.class_head.forward(trunk_fake.output().view())?;

        let (loss_src_real, grad_src_real) = bce_with_logits(src_real.output().view(), ones.view())?;
        let (loss_src_fake, grad_src_fake) = bce_with_logits(src_fake.output().view(), zeros.view())?;
        let (loss_cls_real, grad_cls_real) = softmax_xent(cls_real.output().view(), &labels)?;
        let (loss_cls_fake, grad_cls_fake) = softmax_xent(cls_fake.output().view(), &labels)?;

        let w = cfg.class_loss_weight;
        let d_loss = loss_src_real + loss_src_fake + w * (loss_cls_real + loss_cls_fake);
        let class_loss = loss_cls_real + loss_cls_fake;
        if !d_loss.is_finite() {
            return Err(Error::numeric(format!(
                "gan train: discriminator loss {d_loss} at iteration {iter}"
            )));
        }

        let (g_src_real, up_src_real) = model.source_head.backward(&src_real, grad_src_real.view())?;
        let (g_src_fake, up_src_fake) = model.source_head.backward(&src_fake, grad_src_fake.view())?;
        let (g_cls_real, up_cls_real) =
            model.class_head.backward(&cls_real, (grad_cls_real.mapv(|v| v * w)).view())?;
        let (g_cls_fake, up_cls_fake) =
            model.class_head.backward(&cls_fake, (grad_cls_fake.mapv(|v| v * w)).view())?;
        let (g_trunk_real, _) = model
            .trunk
            .backward(&trunk_real, (&up_src_real + &up_cls_real).view())?;
        let (g_trunk_fake, _) = model
            .trunk
            .backward(&trunk_fake, (&up_src_fake + &up_cls_fake).view())?;

        let mut d_grads =
            model.trunk.grads_flat(&sum_grads(&g_trunk_real, &g_trunk_fake));
        d_grads.extend(
            model
                .source_head
                .grads_flat(&sum_grads(&g_src_real, &g_src_fake)),
        );
        d_grads.extend(
            model
                .class_head
                .grads_flat(&sum_grads(&g_cls_real, &g_cls_fake)),
        );
        let mut d_params = model.trunk.params_flat();
        d_params.extend(model.source_head.params_flat());
        d_params.extend(model.class_head.params_flat());
        opt_d.step(&mut d_params, &d_grads).map_err(|e| {
            Error::numeric(format!("gan train: iteration {iter}: {e}"))
        })?;
        let trunk_n = model.trunk.param_count();
        let src_n = model.source_head.param_count();
        model.trunk.set_params_flat(&d_params[..trunk_n])?;
        model
            .source_head
            .set_params_flat(&d_params[trunk_n..trunk_n + src_n])?;
        model.class_head.set_params_flat(&d_params[trunk_n + src_n..])?;

        // Generator step: fresh noise, fool the source head, satisfy the
        // class head, backpropagating through the (frozen) discriminator.
        let noise = gaussian(batch, model.noise_dim, &mut rng);
        let mut joint = Array2::zeros((batch, model.semantic_dim + model.noise_dim));
        joint
            .slice_mut(ndarray::s![.., ..model.semantic_dim])
            .assign(&semantics);
        joint
            .slice_mut(ndarray::s![.., model.semantic_dim..])
            .assign(&noise);
        let gen_trace = model.generator.forward(joint.view())?;
        let trunk_gen = model.trunk.forward(gen_trace.output().view())?;
        let src_gen = model.source_head.forward(trunk_gen.output().view())?;
        let cls_gen = model.class_head.forward(trunk_gen.output().view())?;

        let (loss_fool, grad_fool) = bce_with_logits(src_gen.output().view(), ones.view())?;
        let (loss_cls_gen, grad_cls_gen) = softmax_xent(cls_gen.output().view(), &labels)?;
        let g_loss = loss_fool + w * loss_cls_gen;
        if !g_loss.is_finite() {
            return Err(Error::numeric(format!(
                "gan train: generator loss {g_loss} at iteration {iter}"
            )));
        }

        let (_, up_fool) = model.source_head.backward(&src_gen, grad_fool.view())?;
        let (_, up_cls_gen) =
            model.class_head.backward(&cls_gen, (grad_cls_gen.mapv(|v| v * w)).view())?;
        let (_, up_features) = model
            .trunk
            .backward(&trunk_gen, (&up_fool + &up_cls_gen).view())?;
        let (g_gen, _) = model.generator.backward(&gen_trace, up_features.view())?;

        let mut g_params = model.generator.params_flat();
        let g_grads = model.generator.grads_flat(&g_gen);
        opt_g.step(&mut g_params, &g_grads).map_err(|e| {
            Error::numeric(format!("gan train: iteration {iter}: {e}"))
        })?;
        model.generator.set_params_flat(&g_params)?;

        history.iterations.push(IterRecord {
            iter,
            d_loss,
            g_loss,
            class_loss,
        });

        if iter % cfg.eval_every == 0 {
            let scores = monitor(&model, iter)?;
            let record = EvalRecord {
                iter,
                seen_acc: scores.seen_acc,
                unseen_acc: scores.unseen_acc,
            };
            // Strictly-greater keeps the earliest iteration on ties,
            // matching select_model.
            if best
                .as_ref()
                .is_none_or(|b| record.seen_acc > b.record.seen_acc)
            {
                best = Some(BestCheckpoint {
                    model: model.clone(),
                    record: record.clone(),
                });
            }
            history.evals.push(record);
        }
    }

    Ok(TrainOutcome {
        model,
        best,
        history,
    })
}

/// Generate exactly `n_per_class` pseudo features per unseen class,
/// labeled with that class, deterministically from `seed`.
pub fn synthesize_unseen(
    model: &GanModel,
    unseen_semantics: &[(usize, Array1<f64>)],
    n_per_class: usize,
    seed: u64,
) -> Result<Vec<VisualFeature>> {
    if unseen_semantics.is_empty() {
        return Err(Error::data("synthesize: no unseen classes"));
    }
    if n_per_class == 0 {
        return Err(Error::config("synthesize: n_per_class must be at least 1"));
    }
    let mut rng = stream_rng(seed, "gan-synthesize");
    let mut features = Vec::with_capacity(unseen_semantics.len() * n_per_class);
    for (class_id, semantic) in unseen_semantics {
        for _ in 0..n_per_class {
            let noise: Array1<f64> =
                Array1::from_iter((0..model.noise_dim).map(|_| StandardNormal.sample(&mut rng)));
            let mut feature = generate(model, semantic.view(), noise.view())?;
            feature.class_id = *class_id;
            features.push(feature);
        }
    }
    Ok(features)
}

/// Classify features with the discriminator's class head: trunk forward,
/// class logits, argmax mapped back to global class ids.
pub fn classify_with_head(model: &GanModel, features: &[VisualFeature]) -> Result<Vec<usize>> {
    if features.is_empty() {
        return Err(Error::data("classify_with_head: no features"));
    }
    let mut batch = Array2::zeros((features.len(), model.feature_dim));
    for (row, f) in features.iter().enumerate() {
        if f.values.len() != model.feature_dim {
            return Err(Error::data("classify_with_head: dimension mismatch"));
        }
        batch.row_mut(row).assign(&f.values);
    }
    let trunk = model.trunk.forward(batch.view())?;
    let logits = model.class_head.forward(trunk.output().view())?;
    Ok(logits
        .output()
        .axis_iter(Axis(0))
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            model.seen_labels[best]
        })
        .collect())
}

fn sample_batch(indices: &[usize], batchsize: usize, rng: &mut impl Rng) -> Vec<usize> {
    if batchsize <= indices.len() {
        rand::seq::index::sample(rng, indices.len(), batchsize).into_vec()
    } else {
        (0..batchsize)
            .map(|_| *indices.choose(rng).expect("non-empty dataset"))
            .collect()
    }
}

fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    let mut m = Array2::zeros((rows, cols));
    for v in m.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
    m
}

fn sum_grads(
    a: &[crate::nn::LayerGrads],
    b: &[crate::nn::LayerGrads],
) -> Vec<crate::nn::LayerGrads> {
    a.iter()
        .zip(b)
        .map(|(x, y)| crate::nn::LayerGrads {
            weights: &x.weights + &y.weights,
            bias: &x.bias + &y.bias,
        })
        .collect()
}

/// Checkpoint header: architecture, seeds, iteration and the feature
/// scaler; parameters live in a flat little-endian binary sidecar.
#[derive(Debug, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub semantic_dim: usize,
    pub feature_dim: usize,
    pub noise_dim: usize,
    pub seen_labels: Vec<usize>,
    pub part_layout: Vec<String>,
    pub seed: u64,
    pub iteration: usize,
    pub generator: Vec<LayerShape>,
    pub trunk: Vec<LayerShape>,
    pub source_head: Vec<LayerShape>,
    pub class_head: Vec<LayerShape>,
    pub scaler: FeatureScaler,
    pub param_count: usize,
}

/// Save a model (+ scaler) as `<stem>.json` and `<stem>.bin`.
pub fn save_checkpoint(
    model: &GanModel,
    scaler: &FeatureScaler,
    iteration: usize,
    stem: &std::path::Path,
) -> Result<()> {
    let header = CheckpointHeader {
        semantic_dim: model.semantic_dim,
        feature_dim: model.feature_dim,
        noise_dim: model.noise_dim,
        seen_labels: model.seen_labels.clone(),
        part_layout: model.part_layout.clone(),
        seed: model.seed,
        iteration,
        generator: model.generator.shape(),
        trunk: model.trunk.shape(),
        source_head: model.source_head.shape(),
        class_head: model.class_head.shape(),
        scaler: scaler.clone(),
        param_count: model.generator.param_count()
            + model.trunk.param_count()
            + model.source_head.param_count()
            + model.class_head.param_count(),
    };
    let json_path = stem.with_extension("json");
    let bin_path = stem.with_extension("bin");
    std::fs::write(
        &json_path,
        serde_json::to_string_pretty(&header).expect("serializable header"),
    )
    .map_err(|e| Error::io(&json_path, e))?;
    let mut params = model.generator.params_flat();
    params.extend(model.trunk.params_flat());
    params.extend(model.source_head.params_flat());
    params.extend(model.class_head.params_flat());
    crate::nn::write_params_le(&bin_path, &params)
}

/// Load a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint(stem: &std::path::Path) -> Result<(GanModel, FeatureScaler, usize)> {
    let json_path = stem.with_extension("json");
    let bin_path = stem.with_extension("bin");
    let header: CheckpointHeader = serde_json::from_str(
        &std::fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?,
    )
    .map_err(|e| Error::data(format!("{}: {e}", json_path.display())))?;

    let mut model = GanModel {
        generator: Mlp::from_shape(&header.generator),
        trunk: Mlp::from_shape(&header.trunk),
        source_head: Mlp::from_shape(&header.source_head),
        class_head: Mlp::from_shape(&header.class_head),
        semantic_dim: header.semantic_dim,
        feature_dim: header.feature_dim,
        noise_dim: header.noise_dim,
        seen_labels: header.seen_labels,
        part_layout: header.part_layout,
        seed: header.seed,
    };
    let params = crate::nn::read_params_le(&bin_path, header.param_count)?;
    let g = model.generator.param_count();
    let t = model.trunk.param_count();
    let s = model.source_head.param_count();
    model.generator.set_params_flat(&params[..g])?;
    model.trunk.set_params_flat(&params[g..g + t])?;
    model.source_head.set_params_flat(&params[g + t..g + t + s])?;
    model.class_head.set_params_flat(&params[g + t + s..])?;
    Ok((model, header.scaler, header.iteration))
}

/// Write features as CSV `class_id,image_id,f_0,...,f_{Dv-1}` plus a
/// JSON header recording the dimension and part layout.
pub fn save_features(
    features: &[VisualFeature],
    csv_path: &std::path::Path,
    meta_path: &std::path::Path,
) -> Result<()> {
    use std::io::Write;
    let first = features
        .first()
        .ok_or_else(|| Error::data("save_features: empty feature set"))?;
    let dim = first.values.len();
    let file = std::fs::File::create(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let io_err = |e| Error::io(csv_path, e);
    write!(out, "class_id,image_id").map_err(io_err)?;
    for j in 0..dim {
        write!(out, ",f_{j}").map_err(io_err)?;
    }
    writeln!(out).map_err(io_err)?;
    for (image_id, f) in features.iter().enumerate() {
        write!(out, "{},{image_id}", f.class_id).map_err(io_err)?;
        for v in &f.values {
            write!(out, ",{v:.17e}").map_err(io_err)?;
        }
        writeln!(out).map_err(io_err)?;
    }
    out.flush().map_err(io_err)?;

    let meta = serde_json::json!({
        "dim": dim,
        "n_features": features.len(),
        "part_layout": first.part_layout,
        "origin": first.origin,
    });
    std::fs::write(meta_path, serde_json::to_string_pretty(&meta).expect("static json"))
        .map_err(|e| Error::io(meta_path, e))
}

/// Read features written by [`save_features`].
pub fn load_features(
    csv_path: &std::path::Path,
    meta_path: &std::path::Path,
) -> Result<Vec<VisualFeature>> {
    let meta: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(meta_path).map_err(|e| Error::io(meta_path, e))?,
    )
    .map_err(|e| Error::data(format!("{}: {e}", meta_path.display())))?;
    let dim = meta["dim"]
        .as_u64()
        .ok_or_else(|| Error::data(format!("{}: missing dim", meta_path.display())))?
        as usize;
    let part_layout: Vec<String> = meta["part_layout"]
        .as_array()
        .map(|a| {
            a.iter()
                .filter_map(|v| v.as_str().map(String::from))
                .collect()
        })
        .unwrap_or_default();
    let origin = if meta["origin"] == "generated" {
        FeatureOrigin::Generated
    } else {
        FeatureOrigin::Real
    };

    let mut reader = csv::Reader::from_path(csv_path)
        .map_err(|e| Error::data(format!("cannot read {}: {e}", csv_path.display())))?;
    let mut features = Vec::new();
    for (rowno, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::data(e.to_string()))?;
        if row.len() != dim + 2 {
            return Err(Error::data(format!(
                "{}: row {}: expected {} columns, found {}",
                csv_path.display(),
                rowno + 2,
                dim + 2,
                row.len()
            )));
        }
        let class_id: usize = row[0]
            .parse()
            .map_err(|_| Error::data(format!("{}: row {}: bad class_id", csv_path.display(), rowno + 2)))?;
        let mut values = Array1::zeros(dim);
        for j in 0..dim {
            values[j] = row[j + 2].parse::<f64>().map_err(|_| {
                Error::data(format!(
                    "{}: row {}: bad float in f_{j}",
                    csv_path.display(),
                    rowno + 2
                ))
            })?;
        }
        features.push(VisualFeature {
            class_id,
            values,
            origin,
            part_layout: part_layout.clone(),
        });
    }
    if features.is_empty() {
        return Err(Error::data(format!("{}: no feature rows", csv_path.display())));
    }
    Ok(features)
}
