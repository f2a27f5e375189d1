//! Minimal dense-network kernel: layers, activations, backpropagation,
//! Adam, and checkpoint I/O. Everything is 64-bit and deterministic
//! given the seed; this is the numerical substrate the GAN builds on.

pub mod adam;
pub mod losses;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adam::{AdamHyper, AdamState};
pub use losses::{bce_with_logits, softmax_xent};

/// Elementwise nonlinearity applied after the affine map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "slope")]
pub enum Activation {
    Identity,
    Relu,
    LeakyRelu(f64),
    Tanh,
}

impl Activation {
    fn apply(&self, z: f64) -> f64 {
        match *self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
            Activation::LeakyRelu(slope) => {
                if z >= 0.0 {
                    z
                } else {
                    slope * z
                }
            }
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through pre-activation `z`.
    fn derivative(&self, z: f64) -> f64 {
        match *self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(slope) => {
                if z >= 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }
}

/// Fully connected layer: `out = activation(x · Wᵀ + b)`.
#[derive(Debug, Clone)]
pub struct DenseLayer {
    /// out_dim × in_dim.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    /// Glorot-uniform weights in ±sqrt(6/(in+out)), zero bias.
    pub fn glorot(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let mut weights = Array2::zeros((out_dim, in_dim));
        for w in weights.iter_mut() {
            *w = (rng.random::<f64>() * 2.0 - 1.0) * limit;
        }
        DenseLayer {
            weights,
            bias: Array1::zeros(out_dim),
            activation,
        }
    }

    /// All-zero parameters; with Tanh this forces a zero output.
    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        DenseLayer {
            weights: Array2::zeros((out_dim, in_dim)),
            bias: Array1::zeros(out_dim),
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }
}

/// Stack of dense layers.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
}

/// Per-layer pre- and post-activation values from a forward pass, kept
/// for the matching backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub input: Array2<f64>,
    pub pre: Vec<Array2<f64>>,
    pub post: Vec<Array2<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &Array2<f64> {
        self.post.last().unwrap_or(&self.input)
    }
}

/// Gradients shaped like one layer's parameters.
#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Mlp {
    pub fn new(layers: Vec<DenseLayer>) -> Self {
        Mlp { layers }
    }

    pub fn in_dim(&self) -> usize {
        self.layers.first().map_or(0, DenseLayer::in_dim)
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::out_dim)
    }

    /// Forward pass over a batch (rows are samples), keeping every
    /// intermediate activation for the backward pass.
    pub fn forward(&self, input: ArrayView2<'_, f64>) -> Result<ForwardTrace> {
        if input.ncols() != self.in_dim() {
            return Err(Error::data(format!(
                "forward: input dim {} != layer dim {}",
                input.ncols(),
                self.in_dim()
            )));
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len());
        let mut current = input.to_owned();
        for layer in &self.layers {
            let z = current.dot(&layer.weights.t()) + &layer.bias;
            let a = z.mapv(|v| layer.activation.apply(v));
            pre.push(z);
            post.push(a.clone());
            current = a;
        }
        Ok(ForwardTrace {
            input: input.to_owned(),
            pre,
            post,
        })
    }

    /// Backpropagate `upstream` (dL/d output, batch × out_dim) through the
    /// trace. Returns parameter gradients per layer and the gradient with
    /// respect to the input batch.
    pub fn backward(
        &self,
        trace: &ForwardTrace,
        upstream: ArrayView2<'_, f64>,
    ) -> Result<(Vec<LayerGrads>, Array2<f64>)> {
        if upstream.dim() != trace.output().dim() {
            return Err(Error::data(format!(
                "backward: upstream shape {:?} != output shape {:?}",
                upstream.dim(),
                trace.output().dim()
            )));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = upstream.to_owned();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let dz = &delta * &trace.pre[idx].mapv(|z| layer.activation.derivative(z));
            let layer_input = if idx == 0 {
                &trace.input
            } else {
                &trace.post[idx - 1]
            };
            let grad_w = dz.t().dot(layer_input);
            let grad_b = dz.sum_axis(Axis(0));
            delta = dz.dot(&layer.weights);
            grads.push(LayerGrads {
                weights: grad_w,
                bias: grad_b,
            });
        }
        grads.reverse();
        Ok((grads, delta))
    }

    /// Total parameter count across all layers.
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Flatten parameters layer by layer, weights row-major then bias.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            flat.extend(layer.weights.iter());
            flat.extend(layer.bias.iter());
        }
        flat
    }

    /// Inverse of [`Mlp::params_flat`].
    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::data(format!(
                "parameter vector of length {} does not match network with {} parameters",
                flat.len(),
                self.param_count()
            )));
        }
        let mut offset = 0;
        for layer in &mut self.layers {
            for w in layer.weights.iter_mut() {
                *w = flat[offset];
                offset += 1;
            }
            for b in layer.bias.iter_mut() {
                *b = flat[offset];
                offset += 1;
            }
        }
        Ok(())
    }

    /// Flatten gradients in the same order as [`Mlp::params_flat`].
    pub fn grads_flat(&self, grads: &[LayerGrads]) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.param_count());
        for g in grads {
            flat.extend(g.weights.iter());
            flat.extend(g.bias.iter());
        }
        flat
    }

    /// Architecture summary for checkpoint headers.
    pub fn shape(&self) -> Vec<LayerShape> {
        self.layers
            .iter()
            .map(|l| LayerShape {
                in_dim: l.in_dim(),
                out_dim: l.out_dim(),
                activation: l.activation,
            })
            .collect()
    }

    /// Rebuild an all-zero network from a shape list.
    pub fn from_shape(shape: &[LayerShape]) -> Self {
        Mlp::new(
            shape
                .iter()
                .map(|s| DenseLayer::zeros(s.in_dim, s.out_dim, s.activation))
                .collect(),
        )
    }
}

/// Serializable description of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerShape {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

/// Write a flat parameter vector as little-endian 64-bit floats.
pub fn write_params_le(path: &std::path::Path, params: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(params.len() * 8);
    for p in params {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Read back a parameter vector written by [`write_params_le`].
pub fn read_params_le(path: &std::path::Path, expected: usize) -> Result<Vec<f64>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected * 8 {
        return Err(Error::data(format!(
            "{}: expected {} parameters ({} bytes), found {} bytes",
            path.display(),
            expected,
            expected * 8,
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use ndarray::array;

    #[test]
    fn identity_layer_passes_input_through() {
        let layer = DenseLayer {
            weights: Array2::eye(3),
            bias: Array1::zeros(3),
            activation: Activation::Identity,
        };
        let net = Mlp::new(vec![layer]);
        let x = array![[1.0, -2.0, 3.0], [0.5, 0.0, -0.25]];
        let trace = net.forward(x.view()).unwrap();
        assert_eq!(trace.output(), &x);
    }

    #[test]
    fn tanh_output_is_strictly_bounded() {
        let mut rng = stream_rng(1, "nn-test");
        let net = Mlp::new(vec![DenseLayer::glorot(4, 6, Activation::Tanh, &mut rng)]);
        let mut x = Array2::zeros((8, 4));
        for v in x.iter_mut() {
            *v = (rng.random::<f64>() - 0.5) * 4.0;
        }
        let trace = net.forward(x.view()).unwrap();
        assert!(trace.output().iter().all(|&v| v > -1.0 && v < 1.0));

        // Far outside the working range tanh saturates to the closed bound.
        let extreme = Array2::from_elem((2, 4), 1e6);
        let trace = net.forward(extreme.view()).unwrap();
        assert!(trace.output().iter().all(|&v| (-1.0..=1.0).contains(&v)));
    }

    #[test]
    fn leaky_relu_scales_negative_input() {
        let layer = DenseLayer {
            weights: Array2::eye(1),
            bias: Array1::zeros(1),
            activation: Activation::LeakyRelu(0.2),
        };
        let net = Mlp::new(vec![layer]);
        let trace = net.forward(array![[-1.0]].view()).unwrap();
        assert_eq!(trace.output()[(0, 0)], -0.2);
    }

    #[test]
    fn forward_rejects_shape_mismatch() {
        let net = Mlp::new(vec![DenseLayer::zeros(3, 2, Activation::Identity)]);
        assert!(net.forward(array![[1.0, 2.0]].view()).is_err());
    }

    #[test]
    fn linear_regression_gradient_closed_form() {
        // Single linear layer, squared-error loss on one sample:
        // dL/dW = 2 (Wx + b - y) xᵀ.
        let layer = DenseLayer {
            weights: array![[1.0, -0.5], [0.25, 2.0]],
            bias: array![0.1, -0.2],
            activation: Activation::Identity,
        };
        let net = Mlp::new(vec![layer]);
        let x = array![[0.3, -1.2]];
        let y = array![[1.0, 0.0]];
        let trace = net.forward(x.view()).unwrap();
        let residual = trace.output() - &y;
        let upstream = residual.mapv(|r| 2.0 * r);
        let (grads, input_grad) = net.backward(&trace, upstream.view()).unwrap();

        for i in 0..2 {
            for j in 0..2 {
                let expected = 2.0 * residual[(0, i)] * x[(0, j)];
                assert!((grads[0].weights[(i, j)] - expected).abs() < 1e-12);
            }
            assert!((grads[0].bias[i] - 2.0 * residual[(0, i)]).abs() < 1e-12);
        }
        // Input gradient: 2 Wᵀ (Wx + b - y).
        for j in 0..2 {
            let expected: f64 = (0..2)
                .map(|i| 2.0 * residual[(0, i)] * net.layers[0].weights[(i, j)])
                .sum();
            assert!((input_grad[(0, j)] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = stream_rng(2, "nn-test");
        let net = Mlp::new(vec![
            DenseLayer::glorot(3, 5, Activation::LeakyRelu(0.2), &mut rng),
            DenseLayer::glorot(5, 2, Activation::Tanh, &mut rng),
        ]);
        let x = array![[0.1, 0.2, 0.3]];
        let trace = net.forward(x.view()).unwrap();
        let upstream = Array2::zeros((1, 2));
        let (grads, input_grad) = net.backward(&trace, upstream.view()).unwrap();
        assert!(grads
            .iter()
            .all(|g| g.weights.iter().all(|&v| v == 0.0) && g.bias.iter().all(|&v| v == 0.0)));
        assert!(input_grad.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forward_is_deterministic() {
        let mut rng = stream_rng(3, "nn-test");
        let net = Mlp::new(vec![DenseLayer::glorot(4, 4, Activation::Tanh, &mut rng)]);
        let x = array![[0.1, -0.9, 2.0, 0.0]];
        let a = net.forward(x.view()).unwrap();
        let b = net.forward(x.view()).unwrap();
        assert_eq!(a.output(), b.output());
    }

    #[test]
    fn params_round_trip_through_flat_vector() {
        let mut rng = stream_rng(4, "nn-test");
        let net = Mlp::new(vec![
            DenseLayer::glorot(3, 4, Activation::Relu, &mut rng),
            DenseLayer::glorot(4, 2, Activation::Identity, &mut rng),
        ]);
        let flat = net.params_flat();
        let mut rebuilt = Mlp::from_shape(&net.shape());
        rebuilt.set_params_flat(&flat).unwrap();
        assert_eq!(rebuilt.params_flat(), flat);
    }

    #[test]
    fn params_file_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.bin");
        let params = vec![0.1, -2.5e-7, 1e300, 0.0, -0.0];
        write_params_le(&path, &params).unwrap();
        let back = read_params_le(&path, params.len()).unwrap();
        assert_eq!(back, params);
        assert!(read_params_le(&path, 4).is_err());
    }
}
