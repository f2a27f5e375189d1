//! Loss functions for the GAN heads: binary cross-entropy on logits for
//! the real/fake decision, softmax cross-entropy for the class head.
//! Both return the mean loss and the gradient with respect to logits.

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Numerically stable binary cross-entropy on logits:
/// `mean(max(x,0) - x*y + ln(1+e^{-|x|}))`, gradient `(σ(x)-y)/count`.
/// Targets must be exactly 0 or 1.
pub fn bce_with_logits(
    logits: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
) -> Result<(f64, Array2<f64>)> {
    if logits.dim() != targets.dim() {
        return Err(Error::data(format!(
            "bce: logits shape {:?} != targets shape {:?}",
            logits.dim(),
            targets.dim()
        )));
    }
    if targets.iter().any(|&t| t != 0.0 && t != 1.0) {
        return Err(Error::data("bce: targets must be 0 or 1"));
    }
    let count = logits.len() as f64;
    let mut loss = 0.0;
    let mut grad = Array2::zeros(logits.raw_dim());
    for ((idx, &x), &y) in logits.indexed_iter().zip(targets.iter()) {
        loss += x.max(0.0) - x * y + (-x.abs()).exp().ln_1p();
        grad[idx] = (sigmoid(x) - y) / count;
    }
    Ok((loss / count, grad))
}

/// Mean softmax cross-entropy over a batch of logit rows with integer
/// labels; gradient is `(softmax - onehot) / batch`.
pub fn softmax_xent(
    logits: ArrayView2<'_, f64>,
    labels: &[usize],
) -> Result<(f64, Array2<f64>)> {
    let (batch, n_classes) = logits.dim();
    if labels.len() != batch {
        return Err(Error::data(format!(
            "xent: {} labels for batch of {batch}",
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::data(format!(
            "xent: label {bad} out of range 0..{n_classes}"
        )));
    }
    let mut loss = 0.0;
    let mut grad = Array2::zeros(logits.raw_dim());
    for (row_idx, (row, &label)) in logits.axis_iter(Axis(0)).zip(labels).enumerate() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let log_z = max + row.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
        loss += log_z - row[label];
        for (col, &x) in row.iter().enumerate() {
            let softmax = (x - log_z).exp();
            grad[(row_idx, col)] =
                (softmax - if col == label { 1.0 } else { 0.0 }) / batch as f64;
        }
    }
    Ok((loss / batch as f64, grad))
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn bce_closed_forms_at_zero_logit() {
        let (loss, grad) = bce_with_logits(array![[0.0]].view(), array![[1.0]].view()).unwrap();
        assert!((loss - 2.0f64.ln()).abs() < 1e-15);
        assert!((grad[(0, 0)] + 0.5).abs() < 1e-15);

        let (loss, grad) = bce_with_logits(array![[0.0]].view(), array![[0.0]].view()).unwrap();
        assert!((loss - 2.0f64.ln()).abs() < 1e-15);
        assert!((grad[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bce_is_stable_for_large_logits() {
        let (loss, _) = bce_with_logits(array![[40.0]].view(), array![[1.0]].view()).unwrap();
        assert!(loss >= 0.0 && loss < 1e-15);
        let (loss, _) = bce_with_logits(array![[-40.0]].view(), array![[0.0]].view()).unwrap();
        assert!(loss >= 0.0 && loss < 1e-15);
        let (loss, grad) =
            bce_with_logits(array![[745.0]].view(), array![[0.0]].view()).unwrap();
        assert!(loss.is_finite() && grad[(0, 0)].is_finite());
    }

    #[test]
    fn bce_rejects_non_binary_targets() {
        assert!(bce_with_logits(array![[0.0]].view(), array![[0.5]].view()).is_err());
    }

    #[test]
    fn bce_averages_over_all_elements() {
        let (loss, grad) = bce_with_logits(
            array![[0.0], [0.0]].view(),
            array![[1.0], [0.0]].view(),
        )
        .unwrap();
        assert!((loss - 2.0f64.ln()).abs() < 1e-15);
        assert!((grad[(0, 0)] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn xent_uniform_logits_give_ln_n() {
        let (loss, _) = softmax_xent(array![[1.0, 1.0, 1.0, 1.0]].view(), &[2]).unwrap();
        assert!((loss - 4.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn xent_confident_logits_give_near_zero() {
        let (loss, _) = softmax_xent(array![[40.0, 0.0, 0.0]].view(), &[0]).unwrap();
        assert!(loss < 1e-15);
    }

    #[test]
    fn xent_hand_computed_three_class_case() {
        // logits (1,2,3), label 2: loss = ln(e + e^2 + e^3) - 3.
        let (loss, grad) = softmax_xent(array![[1.0, 2.0, 3.0]].view(), &[2]).unwrap();
        let expected = (1f64.exp() + 2f64.exp() + 3f64.exp()).ln() - 3.0;
        assert!((loss - expected).abs() < 1e-12);
        assert!((loss - 0.40760596444438).abs() < 1e-10);
        // Gradient rows sum to zero: softmax minus one-hot.
        let row_sum: f64 = grad.row(0).sum();
        assert!(row_sum.abs() < 1e-12);
    }

    #[test]
    fn xent_rejects_out_of_range_label() {
        assert!(softmax_xent(array![[0.0, 0.0]].view(), &[2]).is_err());
    }
}
