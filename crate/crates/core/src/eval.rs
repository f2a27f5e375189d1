//! Zero-shot evaluation: seen/unseen splits, KNN classification, Top-1
//! accuracy, and the seen-unseen accuracy curve with its area.

use std::collections::{BTreeMap, BTreeSet};

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::ClassRecord;
use crate::error::{Error, Result};
use crate::gan::{self, GanModel, VisualFeature};
use crate::rng::stream_rng;

/// Split regime: shared superclasses between the two sides, or whole
/// superclasses held out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    Scs,
    Sce,
}

impl std::fmt::Display for SplitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SplitMode::Scs => write!(f, "scs"),
            SplitMode::Sce => write!(f, "sce"),
        }
    }
}

/// A concrete seen/unseen class partition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitSpec {
    pub mode: SplitMode,
    pub seen: BTreeSet<usize>,
    pub unseen: BTreeSet<usize>,
    pub seed: u64,
}

/// Sample a split. Under SCS every unseen class keeps at least one seen
/// sibling inside its superclass; under SCE whole superclasses move to
/// the unseen side until the requested fraction is reached.
pub fn make_split(
    records: &[ClassRecord],
    mode: SplitMode,
    unseen_fraction: f64,
    seed: u64,
) -> Result<SplitSpec> {
    if !(unseen_fraction > 0.0 && unseen_fraction < 1.0) {
        return Err(Error::config(format!(
            "unseen_fraction {unseen_fraction} outside (0, 1)"
        )));
    }
    if records.is_empty() {
        return Err(Error::data("make_split: no classes"));
    }
    if let Some(r) = records.iter().find(|r| r.superclass.trim().is_empty()) {
        return Err(Error::data(format!(
            "make_split: class {} ({}) has an empty superclass",
            r.class_id, r.name
        )));
    }

    let n = records.len();
    let target = ((n as f64 * unseen_fraction).round() as usize).max(1);
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for r in records {
        groups.entry(&r.superclass).or_default().push(r.class_id);
    }

    let mut rng = stream_rng(seed, "split");
    let unseen: BTreeSet<usize> = match mode {
        SplitMode::Scs => {
            // Only classes whose superclass has a potential seen sibling
            // qualify; drawing stops before emptying any superclass.
            let mut candidates: Vec<usize> = groups
                .values()
                .filter(|g| g.len() >= 2)
                .flatten()
                .copied()
                .collect();
            if candidates.is_empty() {
                return Err(Error::data(
                    "scs split infeasible: every superclass has a single class",
                ));
            }
            candidates.sort_unstable();
            candidates.shuffle(&mut rng);
            let mut remaining: BTreeMap<&str, usize> =
                groups.iter().map(|(s, g)| (*s, g.len())).collect();
            let super_of: BTreeMap<usize, &str> = records
                .iter()
                .map(|r| (r.class_id, r.superclass.as_str()))
                .collect();
            let mut chosen = BTreeSet::new();
            for c in candidates {
                if chosen.len() == target {
                    break;
                }
                let sup = super_of[&c];
                if remaining[sup] >= 2 {
                    *remaining.get_mut(sup).unwrap() -= 1;
                    chosen.insert(c);
                }
            }
            if chosen.len() < target {
                return Err(Error::data(format!(
                    "scs split infeasible: only {} of {target} unseen classes can keep a seen sibling",
                    chosen.len()
                )));
            }
            chosen
        }
        SplitMode::Sce => {
            let mut supers: Vec<&str> = groups.keys().copied().collect();
            supers.shuffle(&mut rng);
            let mut chosen = BTreeSet::new();
            for sup in supers {
                if chosen.len() >= target {
                    break;
                }
                if chosen.len() + groups[sup].len() >= n {
                    continue;
                }
                chosen.extend(&groups[sup]);
            }
            if chosen.len() < target {
                return Err(Error::data(format!(
                    "sce split infeasible: cannot hold out {target} of {n} classes by whole superclasses"
                )));
            }
            chosen
        }
    };

    let seen: BTreeSet<usize> = records
        .iter()
        .map(|r| r.class_id)
        .filter(|id| !unseen.contains(id))
        .collect();
    if seen.is_empty() || unseen.is_empty() {
        return Err(Error::data("make_split: degenerate split"));
    }
    Ok(SplitSpec {
        mode,
        seen,
        unseen,
        seed,
    })
}

/// KNN classification outcome: predicted label plus the per-class vote
/// fraction row (neighbours of that class divided by k) for each query.
#[derive(Debug, Clone)]
pub struct KnnOutcome {
    pub predictions: Vec<usize>,
    /// queries × n_classes.
    pub votes: Array2<f64>,
}

/// Brute-force Euclidean k-nearest-neighbour classification. Majority
/// vote; vote ties go to the class with the smaller summed neighbour
/// distance, then the smaller class id. `n_classes` sizes the vote rows.
pub fn knn_fit_predict(
    train: &[VisualFeature],
    k: usize,
    queries: &[VisualFeature],
    n_classes: usize,
) -> Result<KnnOutcome> {
    if train.is_empty() {
        return Err(Error::data("knn: empty training set"));
    }
    if k == 0 || k > train.len() {
        return Err(Error::config(format!(
            "knn: k = {k} outside 1..={}",
            train.len()
        )));
    }
    let dim = train[0].values.len();
    for f in train.iter().chain(queries) {
        if f.values.len() != dim {
            return Err(Error::data(format!(
                "knn: feature of class {} has dim {} != {dim}",
                f.class_id,
                f.values.len()
            )));
        }
        if f.class_id >= n_classes && f.origin == gan::FeatureOrigin::Real {
            // Queries may be unlabeled; training rows must fit the vote row.
        }
    }
    if let Some(f) = train.iter().find(|f| f.class_id >= n_classes) {
        return Err(Error::data(format!(
            "knn: training label {} outside 0..{n_classes}",
            f.class_id
        )));
    }

    let mut predictions = Vec::with_capacity(queries.len());
    let mut votes = Array2::zeros((queries.len(), n_classes));
    for (qi, query) in queries.iter().enumerate() {
        let mut dists: Vec<(f64, usize)> = train
            .iter()
            .enumerate()
            .map(|(ti, t)| {
                let d = query
                    .values
                    .iter()
                    .zip(t.values.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                (d, ti)
            })
            .collect();
        dists.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances").then(a.1.cmp(&b.1)));
        dists.truncate(k);

        let mut count = BTreeMap::<usize, usize>::new();
        let mut summed = BTreeMap::<usize, f64>::new();
        for &(d, ti) in &dists {
            let label = train[ti].class_id;
            *count.entry(label).or_default() += 1;
            *summed.entry(label).or_default() += d;
        }
        // Majority; ties by smaller summed distance, then smaller id.
        // BTreeMap iterates ids ascending, so strict improvement keeps
        // the smallest id among equals.
        let mut winner = None::<(usize, usize, f64)>;
        for (&label, &c) in &count {
            let s = summed[&label];
            let better = match winner {
                None => true,
                Some((_, wc, ws)) => c > wc || (c == wc && s < ws),
            };
            if better {
                winner = Some((label, c, s));
            }
        }
        predictions.push(winner.expect("k >= 1").0);
        for (&label, &c) in &count {
            votes[(qi, label)] = c as f64 / k as f64;
        }
    }
    Ok(KnnOutcome { predictions, votes })
}

/// Fraction of exact matches between predictions and ground truth.
pub fn top1(predictions: &[usize], truth: &[usize]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::data("top1: empty prediction list"));
    }
    if predictions.len() != truth.len() {
        return Err(Error::data(format!(
            "top1: {} predictions vs {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    let correct = predictions
        .iter()
        .zip(truth)
        .filter(|(p, t)| p == t)
        .count();
    Ok(correct as f64 / predictions.len() as f64)
}

/// Mean of per-class Top-1 accuracies over the classes present in
/// `truth` (macro average).
pub fn macro_top1(predictions: &[usize], truth: &[usize]) -> Result<f64> {
    if predictions.is_empty() || predictions.len() != truth.len() {
        return Err(Error::data("macro_top1: bad prediction/label lengths"));
    }
    let mut totals = BTreeMap::<usize, (usize, usize)>::new();
    for (&p, &t) in predictions.iter().zip(truth) {
        let entry = totals.entry(t).or_default();
        entry.1 += 1;
        if p == t {
            entry.0 += 1;
        }
    }
    let sum: f64 = totals
        .values()
        .map(|&(correct, n)| correct as f64 / n as f64)
        .sum();
    Ok(sum / totals.len() as f64)
}

/// Per-row class scores with ground truth and the seen-class mask that
/// the balance parameter acts on.
#[derive(Debug, Clone)]
pub struct ScoreMatrix {
    /// rows × n_classes.
    pub scores: Array2<f64>,
    pub truth: Vec<usize>,
    pub seen_mask: Vec<bool>,
}

/// One operating point of the seen-unseen curve.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CurvePoint {
    pub lambda: f64,
    pub seen_acc: f64,
    pub unseen_acc: f64,
}

/// The seen-unseen accuracy curve and its trapezoidal area.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SucCurve {
    pub points: Vec<CurvePoint>,
    pub ausuc: f64,
}

/// Sweep the balance parameter λ (subtracted from every seen-class
/// score) over all of its critical values and trace (seen accuracy,
/// unseen accuracy) pairs.
///
/// Per row the best seen and best unseen class are λ-invariant, so the
/// row's prediction flips from the seen side to the unseen side exactly
/// once, at λ = best_seen_score − best_unseen_score; equality prefers
/// the unseen side. Evaluating at every critical value plus one point
/// below the smallest enumerates every piece of the piecewise-constant
/// curve. λ → −∞ forces seen-side predictions, λ → +∞ unseen-side.
pub fn suc_curve(matrix: &ScoreMatrix) -> Result<SucCurve> {
    let (rows, n_classes) = matrix.scores.dim();
    if matrix.seen_mask.len() != n_classes || matrix.truth.len() != rows {
        return Err(Error::data("suc_curve: inconsistent matrix shapes"));
    }
    if matrix.scores.iter().any(|v| !v.is_finite()) {
        return Err(Error::data("suc_curve: non-finite score"));
    }
    let seen_classes: Vec<usize> = (0..n_classes).filter(|&c| matrix.seen_mask[c]).collect();
    let unseen_classes: Vec<usize> = (0..n_classes).filter(|&c| !matrix.seen_mask[c]).collect();
    if seen_classes.is_empty() || unseen_classes.is_empty() {
        return Err(Error::data("suc_curve: need both seen and unseen classes"));
    }
    let has_seen_rows = matrix.truth.iter().any(|t| matrix.seen_mask[*t]);
    let has_unseen_rows = matrix.truth.iter().any(|t| !matrix.seen_mask[*t]);
    if !has_seen_rows || !has_unseen_rows {
        return Err(Error::data(
            "suc_curve: need test rows from both seen and unseen classes",
        ));
    }

    // Row reductions: best class on each side (ties to the smaller id)
    // and the critical λ where the prediction flips.
    struct Row {
        best_seen: usize,
        best_unseen: usize,
        critical: f64,
        truth: usize,
    }
    let rows_reduced: Vec<Row> = (0..rows)
        .map(|r| {
            let row = matrix.scores.row(r);
            let argmax = |classes: &[usize]| {
                let mut best = classes[0];
                for &c in &classes[1..] {
                    if row[c] > row[best] {
                        best = c;
                    }
                }
                best
            };
            let best_seen = argmax(&seen_classes);
            let best_unseen = argmax(&unseen_classes);
            Row {
                best_seen,
                best_unseen,
                critical: row[best_seen] - row[best_unseen],
                truth: matrix.truth[r],
            }
        })
        .collect();

    let mut criticals: Vec<f64> = rows_reduced.iter().map(|r| r.critical).collect();
    criticals.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    criticals.dedup();

    let mut lambdas = Vec::with_capacity(criticals.len() + 1);
    lambdas.push(criticals[0] - 1.0);
    lambdas.extend(criticals.iter().copied());

    let evaluate = |lambda: f64| -> (f64, f64) {
        let mut seen_ok = 0usize;
        let mut seen_n = 0usize;
        let mut unseen_ok = 0usize;
        let mut unseen_n = 0usize;
        for row in &rows_reduced {
            // Seen side wins only with a strict margin over λ.
            let prediction = if row.critical > lambda {
                row.best_seen
            } else {
                row.best_unseen
            };
            if matrix.seen_mask[row.truth] {
                seen_n += 1;
                seen_ok += usize::from(prediction == row.truth);
            } else {
                unseen_n += 1;
                unseen_ok += usize::from(prediction == row.truth);
            }
        }
        (
            seen_ok as f64 / seen_n as f64,
            unseen_ok as f64 / unseen_n as f64,
        )
    };

    let points: Vec<CurvePoint> = lambdas
        .into_iter()
        .map(|lambda| {
            let (seen_acc, unseen_acc) = evaluate(lambda);
            CurvePoint {
                lambda,
                seen_acc,
                unseen_acc,
            }
        })
        .collect();

    let ausuc = trapezoid_area(&points);
    Ok(SucCurve { points, ausuc })
}

/// Trapezoidal area under (seen_acc, unseen_acc) sorted by seen
/// accuracy. The sweep is monotone (seen accuracy falls as unseen
/// accuracy rises), so ties in seen accuracy are vertical segments; they
/// are ordered by descending unseen accuracy to trace the curve in sweep
/// order, and contribute zero width either way.
pub fn trapezoid_area(points: &[CurvePoint]) -> f64 {
    let mut sorted: Vec<(f64, f64)> = points.iter().map(|p| (p.seen_acc, p.unseen_acc)).collect();
    sorted.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite accuracies")
            .then(b.1.partial_cmp(&a.1).expect("finite accuracies"))
    });
    sorted
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

/// Export the curve as CSV `lambda,seen_acc,unseen_acc`.
pub fn export_curve(curve: &SucCurve, path: &std::path::Path) -> Result<()> {
    use std::io::Write;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    writeln!(out, "lambda,seen_acc,unseen_acc").map_err(io_err)?;
    for p in &curve.points {
        writeln!(out, "{},{},{}", p.lambda, p.seen_acc, p.unseen_acc).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Final evaluation report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZslReport {
    pub split_mode: SplitMode,
    pub k_ks: usize,
    pub zsl_top1: f64,
    pub gzsl_seen_acc: f64,
    pub gzsl_unseen_acc: f64,
    pub ausuc: f64,
    pub curve_points: Vec<CurvePoint>,
    pub seeds: BTreeMap<String, u64>,
    pub config_hash: String,
}

/// Everything zsl_evaluate needs besides the trained model.
pub struct EvalInputs<'a> {
    pub split: &'a SplitSpec,
    /// Real, already-scaled training features of seen classes.
    pub seen_train: &'a [VisualFeature],
    /// Real, already-scaled held-out features (seen and unseen classes).
    pub test: &'a [VisualFeature],
    /// Semantic vectors for the seen classes (class id, dense vector).
    pub seen_semantics: &'a [(usize, Array1<f64>)],
    /// Semantic vectors for the unseen classes (class id, dense vector).
    pub unseen_semantics: &'a [(usize, Array1<f64>)],
    pub n_classes: usize,
    pub n_per_class: usize,
    pub knn_k: usize,
    pub seed: u64,
}

/// Measured scores before report assembly.
#[derive(Debug, Clone)]
pub struct ZslScores {
    pub zsl_top1: f64,
    pub gzsl_seen_acc: f64,
    pub gzsl_unseen_acc: f64,
    pub curve: SucCurve,
}

/// Training-time probe: train KNN on freshly generated pseudo features
/// of every class (seen and unseen alike) and classify the real held-out
/// features. Both accuracies then track generator quality, so the
/// seen-class score is a usable model-selection signal; the KNN is
/// retrained from the current generator on every call.
pub fn generated_knn_scores(model: &GanModel, inputs: &EvalInputs<'_>) -> Result<gan::EvalScores> {
    let mut semantics: Vec<(usize, Array1<f64>)> = inputs.seen_semantics.to_vec();
    semantics.extend(inputs.unseen_semantics.iter().cloned());
    let generated = gan::synthesize_unseen(model, &semantics, inputs.n_per_class, inputs.seed)?;
    let k = inputs.knn_k.min(generated.len());
    let outcome = knn_fit_predict(&generated, k, inputs.test, inputs.n_classes)?;
    let truth: Vec<usize> = inputs.test.iter().map(|f| f.class_id).collect();

    let mut seen_pred = Vec::new();
    let mut seen_true = Vec::new();
    let mut unseen_pred = Vec::new();
    let mut unseen_true = Vec::new();
    for (row, &t) in truth.iter().enumerate() {
        if inputs.split.seen.contains(&t) {
            seen_pred.push(outcome.predictions[row]);
            seen_true.push(t);
        } else {
            unseen_pred.push(outcome.predictions[row]);
            unseen_true.push(t);
        }
    }
    Ok(gan::EvalScores {
        seen_acc: macro_top1(&seen_pred, &seen_true)?,
        unseen_acc: macro_top1(&unseen_pred, &unseen_true)?,
    })
}

/// Zero-shot and generalized zero-shot evaluation.
///
/// ZSL: synthesize pseudo features for the unseen classes, train KNN on
/// them alone, classify real unseen test features within the unseen
/// label space. GZSL: train KNN on synthesized unseen plus real seen
/// training features, score every test row by vote fractions over all
/// classes, and sweep the balance parameter into a seen-unseen curve.
pub fn zsl_evaluate(model: &GanModel, inputs: &EvalInputs<'_>) -> Result<ZslScores> {
    let generated = gan::synthesize_unseen(
        model,
        inputs.unseen_semantics,
        inputs.n_per_class,
        inputs.seed,
    )?;

    // Plain ZSL: unseen label space only.
    let unseen_test: Vec<VisualFeature> = inputs
        .test
        .iter()
        .filter(|f| inputs.split.unseen.contains(&f.class_id))
        .cloned()
        .collect();
    if unseen_test.is_empty() {
        return Err(Error::data("zsl_evaluate: no unseen test features"));
    }
    let k_zsl = inputs.knn_k.min(generated.len());
    let outcome = knn_fit_predict(&generated, k_zsl, &unseen_test, inputs.n_classes)?;
    let unseen_truth: Vec<usize> = unseen_test.iter().map(|f| f.class_id).collect();
    let zsl_top1 = top1(&outcome.predictions, &unseen_truth)?;

    // GZSL: full label space, vote-fraction scores, λ sweep.
    let mut gzsl_train: Vec<VisualFeature> = Vec::with_capacity(generated.len() + inputs.seen_train.len());
    gzsl_train.extend(generated);
    gzsl_train.extend(inputs.seen_train.iter().cloned());
    let k_gzsl = inputs.knn_k.min(gzsl_train.len());
    let gzsl = knn_fit_predict(&gzsl_train, k_gzsl, inputs.test, inputs.n_classes)?;
    let truth: Vec<usize> = inputs.test.iter().map(|f| f.class_id).collect();

    let seen_mask: Vec<bool> = (0..inputs.n_classes)
        .map(|c| inputs.split.seen.contains(&c))
        .collect();
    let seen_truth_rows: Vec<usize> = (0..truth.len())
        .filter(|&r| seen_mask[truth[r]])
        .collect();
    let unseen_truth_rows: Vec<usize> = (0..truth.len())
        .filter(|&r| !seen_mask[truth[r]])
        .collect();
    if seen_truth_rows.is_empty() || unseen_truth_rows.is_empty() {
        return Err(Error::data(
            "zsl_evaluate: test set must contain both seen and unseen classes",
        ));
    }
    let pick = |rows: &[usize]| -> (Vec<usize>, Vec<usize>) {
        (
            rows.iter().map(|&r| gzsl.predictions[r]).collect(),
            rows.iter().map(|&r| truth[r]).collect(),
        )
    };
    let (seen_pred, seen_true) = pick(&seen_truth_rows);
    let (unseen_pred, unseen_true) = pick(&unseen_truth_rows);
    let gzsl_seen_acc = macro_top1(&seen_pred, &seen_true)?;
    let gzsl_unseen_acc = macro_top1(&unseen_pred, &unseen_true)?;

    let curve = suc_curve(&ScoreMatrix {
        scores: gzsl.votes,
        truth,
        seen_mask,
    })?;

    Ok(ZslScores {
        zsl_top1,
        gzsl_seen_acc,
        gzsl_unseen_acc,
        curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SplitRole;
    use crate::gan::FeatureOrigin;

    fn records(groups: &[(&str, usize)]) -> Vec<ClassRecord> {
        let mut out = Vec::new();
        let mut id = 0;
        for (sup, count) in groups {
            for i in 0..*count {
                out.push(ClassRecord {
                    class_id: id,
                    name: format!("{sup} {i}"),
                    superclass: sup.to_string(),
                    article_raw: String::new(),
                    split_role: SplitRole::Unassigned,
                });
                id += 1;
            }
        }
        out
    }

    #[test]
    fn scs_keeps_a_seen_sibling() {
        let recs = records(&[("jay", 2), ("gull", 2)]);
        let split = make_split(&recs, SplitMode::Scs, 0.25, 42).unwrap();
        assert_eq!(split.unseen.len(), 1);
        let unseen = *split.unseen.iter().next().unwrap();
        let sup = &recs[unseen].superclass;
        assert!(recs
            .iter()
            .any(|r| split.seen.contains(&r.class_id) && &r.superclass == sup));
    }

    #[test]
    fn sce_holds_out_whole_superclasses() {
        let recs = records(&[("jay", 2), ("gull", 2)]);
        let split = make_split(&recs, SplitMode::Sce, 0.5, 42).unwrap();
        assert_eq!(split.unseen.len(), 2);
        let unseen_supers: BTreeSet<&str> = recs
            .iter()
            .filter(|r| split.unseen.contains(&r.class_id))
            .map(|r| r.superclass.as_str())
            .collect();
        assert_eq!(unseen_supers.len(), 1);
    }

    #[test]
    fn scs_with_singletons_only_is_infeasible() {
        let recs = records(&[("a", 1), ("b", 1), ("c", 1)]);
        let err = make_split(&recs, SplitMode::Scs, 0.3, 1).unwrap_err();
        assert!(err.to_string().contains("infeasible"), "{err}");
    }

    #[test]
    fn split_invariants_over_many_seeds() {
        let recs = records(&[("a", 3), ("b", 3), ("c", 3)]);
        for seed in 0..100 {
            let scs = make_split(&recs, SplitMode::Scs, 0.22, seed).unwrap();
            assert!(scs.seen.is_disjoint(&scs.unseen));
            assert_eq!(scs.seen.len() + scs.unseen.len(), 9);
            let seen_supers: BTreeSet<&str> = recs
                .iter()
                .filter(|r| scs.seen.contains(&r.class_id))
                .map(|r| r.superclass.as_str())
                .collect();
            for &u in &scs.unseen {
                assert!(seen_supers.contains(recs[u].superclass.as_str()));
            }

            let sce = make_split(&recs, SplitMode::Sce, 0.3, seed).unwrap();
            assert!(sce.seen.is_disjoint(&sce.unseen));
            let seen_supers: BTreeSet<&str> = recs
                .iter()
                .filter(|r| sce.seen.contains(&r.class_id))
                .map(|r| r.superclass.as_str())
                .collect();
            for &u in &sce.unseen {
                assert!(!seen_supers.contains(recs[u].superclass.as_str()));
            }
        }
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let recs = records(&[("a", 3), ("b", 3), ("c", 3)]);
        let one = make_split(&recs, SplitMode::Scs, 0.22, 9).unwrap();
        let two = make_split(&recs, SplitMode::Scs, 0.22, 9).unwrap();
        assert_eq!(one.unseen, two.unseen);
    }

    fn feat(class_id: usize, values: &[f64]) -> VisualFeature {
        VisualFeature {
            class_id,
            values: Array1::from(values.to_vec()),
            origin: FeatureOrigin::Real,
            part_layout: vec![],
        }
    }

    #[test]
    fn knn_identity_query_returns_its_label() {
        let train = vec![feat(0, &[0.0, 0.0]), feat(1, &[1.0, 1.0])];
        let out = knn_fit_predict(&train, 1, &[feat(9, &[1.0, 1.0])], 2).unwrap();
        assert_eq!(out.predictions, [1]);
        assert_eq!(out.votes[(0, 1)], 1.0);
    }

    #[test]
    fn knn_majority_vote() {
        let train = vec![
            feat(0, &[0.0, 0.0]),
            feat(0, &[0.2, 0.0]),
            feat(1, &[1.0, 1.0]),
        ];
        let out = knn_fit_predict(&train, 3, &[feat(9, &[0.1, 0.0])], 2).unwrap();
        assert_eq!(out.predictions, [0]);
        assert!((out.votes[(0, 0)] - 2.0 / 3.0).abs() < 1e-12);
        assert!((out.votes[(0, 1)] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn knn_vote_tie_breaks_by_summed_distance() {
        // k = 2, one neighbour each: class 1 is nearer.
        let train = vec![feat(0, &[2.0]), feat(1, &[0.5])];
        let out = knn_fit_predict(&train, 2, &[feat(9, &[0.0])], 2).unwrap();
        assert_eq!(out.predictions, [1]);

        // Equal distances too: smaller class id wins.
        let train = vec![feat(1, &[1.0]), feat(0, &[-1.0])];
        let out = knn_fit_predict(&train, 2, &[feat(9, &[0.0])], 2).unwrap();
        assert_eq!(out.predictions, [0]);
    }

    #[test]
    fn knn_rejects_bad_inputs() {
        let train = vec![feat(0, &[0.0])];
        assert!(knn_fit_predict(&[], 1, &[feat(0, &[0.0])], 1).is_err());
        assert!(knn_fit_predict(&train, 2, &[feat(0, &[0.0])], 1).is_err());
        assert!(knn_fit_predict(&train, 1, &[feat(0, &[0.0, 1.0])], 1).is_err());
    }

    #[test]
    fn top1_exact_fractions() {
        assert_eq!(top1(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(top1(&[1, 2, 3], &[3, 1, 2]).unwrap(), 0.0);
        assert_eq!(top1(&[1, 2, 3, 4], &[1, 2, 3, 0]).unwrap(), 0.75);
        assert!(top1(&[], &[]).is_err());
        assert!(top1(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn macro_top1_averages_per_class() {
        // Class 0: 2/2, class 1: 0/1 -> macro 0.5, micro 2/3.
        let macro_acc = macro_top1(&[0, 0, 0], &[0, 0, 1]).unwrap();
        assert!((macro_acc - 0.5).abs() < 1e-12);
    }

    fn perfect_matrix() -> ScoreMatrix {
        // Classes 0,1 seen; 2,3 unseen. Scorer puts 1.0 on the truth.
        let mut scores = Array2::zeros((4, 4));
        let truth = vec![0, 1, 2, 3];
        for (r, &t) in truth.iter().enumerate() {
            scores[(r, t)] = 1.0;
        }
        ScoreMatrix {
            scores,
            truth,
            seen_mask: vec![true, true, false, false],
        }
    }

    #[test]
    fn perfect_scorer_has_unit_ausuc() {
        let curve = suc_curve(&perfect_matrix()).unwrap();
        assert_eq!(curve.ausuc, 1.0);
        assert!(curve
            .points
            .iter()
            .any(|p| p.seen_acc == 1.0 && p.unseen_acc == 1.0));
    }

    #[test]
    fn extreme_lambdas_force_one_side() {
        let curve = suc_curve(&perfect_matrix()).unwrap();
        let first = curve.points.first().unwrap();
        let last = curve.points.last().unwrap();
        // Below every critical value all rows predict their best seen class.
        assert_eq!(first.unseen_acc, 0.0);
        assert_eq!(first.seen_acc, 1.0);
        // At/after the largest critical value all rows predict unseen.
        assert_eq!(last.seen_acc, 0.0);
        assert_eq!(last.unseen_acc, 1.0);
    }

    #[test]
    fn adding_row_constant_changes_nothing() {
        let base = perfect_matrix();
        let mut shifted = base.clone();
        for r in 0..shifted.scores.nrows() {
            for c in 0..shifted.scores.ncols() {
                shifted.scores[(r, c)] += (r as f64 + 1.0) * 3.5;
            }
        }
        let a = suc_curve(&base).unwrap();
        let b = suc_curve(&shifted).unwrap();
        assert_eq!(a.ausuc, b.ausuc);
        for (x, y) in a.points.iter().zip(&b.points) {
            assert_eq!(x.seen_acc, y.seen_acc);
            assert_eq!(x.unseen_acc, y.unseen_acc);
        }
    }

    #[test]
    fn single_unseen_class_hand_trace() {
        // One seen class (0), one unseen (1). Two rows: a seen-truth row
        // scoring 0.8/0.2 and an unseen-truth row scoring 0.3/0.7. At
        // λ = 0 both rows are classified correctly.
        let scores = ndarray::array![[0.8, 0.2], [0.3, 0.7]];
        let matrix = ScoreMatrix {
            scores,
            truth: vec![0, 1],
            seen_mask: vec![true, false],
        };
        let curve = suc_curve(&matrix).unwrap();
        let at_zeroish = curve
            .points
            .iter()
            .find(|p| p.lambda <= 0.0 && p.lambda > -0.4)
            .expect("critical value -0.4 sampled");
        assert_eq!(at_zeroish.unseen_acc, 1.0);
        assert_eq!(at_zeroish.seen_acc, 1.0);
    }

    #[test]
    fn curve_requires_both_populations() {
        let mut m = perfect_matrix();
        m.truth = vec![0, 1, 0, 1];
        assert!(suc_curve(&m).is_err());
        let mut m = perfect_matrix();
        m.seen_mask = vec![true, true, true, true];
        assert!(suc_curve(&m).is_err());
    }
}
