//! Adam optimizer over flat parameter vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adam hyperparameters. Defaults follow the usual β₁=0.9, β₂=0.999,
/// η=0.001, ε=1e-8.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Optimizer state for one parameter tensor: first/second moment
/// accumulators shaped like the parameters plus the step counter used
/// for bias correction.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub hyper: AdamHyper,
    pub step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(hyper: AdamHyper, n_params: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&hyper.beta1) || !(0.0..1.0).contains(&hyper.beta2) {
            return Err(Error::config("adam: betas must lie in (0, 1)"));
        }
        if hyper.lr <= 0.0 || hyper.eps <= 0.0 {
            return Err(Error::config("adam: lr and eps must be positive"));
        }
        Ok(AdamState {
            hyper,
            step: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        })
    }

    /// One bias-corrected Adam update, in place. A non-finite gradient is
    /// a divergence signal and aborts the update.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::data(format!(
                "adam: state holds {} parameters, got {} params / {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        if let Some(bad) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::numeric(format!(
                "adam: non-finite gradient at coordinate {bad} (step {})",
                self.step + 1
            )));
        }
        self.step += 1;
        let AdamHyper {
            lr,
            beta1,
            beta2,
            eps,
        } = self.hyper;
        let bias1 = 1.0 - beta1.powi(self.step as i32);
        let bias2 = 1.0 - beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / bias1;
            let v_hat = self.v[i] / bias2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}
