use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::NeuralError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

/// Fully connected network, relu on hidden layers and identity on the output.
///
/// Layer `i` maps `layer_sizes[i]` inputs to `layer_sizes[i + 1]` outputs with a
/// weight matrix of shape `(layer_sizes[i + 1], layer_sizes[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
}

fn check_sizes(layer_sizes: &[usize]) -> Result<(), NeuralError> {
    if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
        return Err(NeuralError::LayerSizes(layer_sizes.to_vec()));
    }
    Ok(())
}

impl Mlp {
    /// Seeded initialization; identical seeds give identical parameters.
    pub fn new(layer_sizes: &[usize], seed: u64) -> Result<Self, NeuralError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::with_rng(layer_sizes, &mut rng)
    }

    /// Fan-in scaled uniform initialization: weights of a layer feeding a relu
    /// are drawn from `U(-sqrt(6/fan_in), sqrt(6/fan_in))`, the output layer from
    /// `U(-sqrt(3/fan_in), sqrt(3/fan_in))`. Biases start at zero.
    pub fn with_rng<R: Rng + ?Sized>(layer_sizes: &[usize], rng: &mut R) -> Result<Self, NeuralError> {
        check_sizes(layer_sizes)?;
        let layers = layer_sizes.len() - 1;
        let mut weights = Vec::with_capacity(layers);
        let mut biases = Vec::with_capacity(layers);
        for (i, pair) in layer_sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let gain = if i + 1 == layers { 3.0 } else { 6.0 };
            let limit = (gain / fan_in as f64).sqrt();
            weights.push(Array2::from_shape_fn((fan_out, fan_in), |_| {
                rng.random_range(-limit..limit)
            }));
            biases.push(Array1::zeros(fan_out));
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
        })
    }

    pub fn zeros(layer_sizes: &[usize]) -> Result<Self, NeuralError> {
        check_sizes(layer_sizes)?;
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights: layer_sizes
                .windows(2)
                .map(|p| Array2::zeros((p[1], p[0])))
                .collect(),
            biases: layer_sizes.windows(2).map(|p| Array1::zeros(p[1])).collect(),
        })
    }

    /// Builds a network from a flat parameter vector laid out as [`Mlp::params`] does.
    pub fn from_params(layer_sizes: &[usize], params: &[f64]) -> Result<Self, NeuralError> {
        let mut mlp = Self::zeros(layer_sizes)?;
        mlp.set_params(params)?;
        Ok(mlp)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.num_layers() {
            Activation::Identity
        } else {
            Activation::Relu
        }
    }

    pub fn weights(&self, layer: usize) -> &Array2<f64> {
        &self.weights[layer]
    }

    pub fn biases(&self, layer: usize) -> &Array1<f64> {
        &self.biases[layer]
    }

    /// Mutable access to one layer, for crafted weights in tests and tools.
    pub fn layer_mut(&mut self, layer: usize) -> (&mut Array2<f64>, &mut Array1<f64>) {
        (&mut self.weights[layer], &mut self.biases[layer])
    }

    pub fn num_params(&self) -> usize {
        self.layer_sizes.windows(2).map(|p| p[0] * p[1] + p[1]).sum()
    }

    /// Appends parameters layer by layer: row-major weights, then biases.
    pub fn extend_params(&self, out: &mut Vec<f64>) {
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.extend_params(&mut out);
        out
    }

    /// Overwrites all parameters; `params` must hold exactly [`Mlp::num_params`] values.
    pub fn set_params(&mut self, params: &[f64]) -> Result<(), NeuralError> {
        if params.len() != self.num_params() {
            return Err(NeuralError::Dimension {
                expected: self.num_params(),
                got: params.len(),
            });
        }
        self.read_params(params);
        Ok(())
    }

    /// Reads parameters from the front of `params`, returning how many were consumed.
    pub(crate) fn read_params(&mut self, params: &[f64]) -> usize {
        let mut offset = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            for x in w.iter_mut() {
                *x = params[offset];
                offset += 1;
            }
            for x in b.iter_mut() {
                *x = params[offset];
                offset += 1;
            }
        }
        offset
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NeuralError> {
        if input.len() != self.input_size() {
            return Err(NeuralError::Dimension {
                expected: self.input_size(),
                got: input.len(),
            });
        }
        let x = ArrayView2::from_shape((1, input.len()), input).expect("row view");
        Ok(self.forward_batch(x).into_raw_vec_and_offset().0)
    }

    /// Row-wise forward pass over a `(batch, input_size)` matrix.
    pub fn forward_batch(&self, input: ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(input.ncols(), self.input_size(), "mlp input width");
        let mut x = self.affine(0, input);
        for layer in 1..self.num_layers() {
            x.mapv_inplace(relu);
            x = self.affine(layer, x.view());
        }
        x
    }

    /// Forward pass that records the activations needed by [`Mlp::backward`].
    pub fn forward_taped(&self, input: Array2<f64>) -> (Array2<f64>, GradientTape) {
        assert_eq!(input.ncols(), self.input_size(), "mlp input width");
        let mut activations = Vec::with_capacity(self.num_layers());
        let mut x = input;
        for layer in 0..self.num_layers() {
            let mut z = self.affine(layer, x.view());
            activations.push(x);
            if self.activation(layer) == Activation::Relu {
                z.mapv_inplace(relu);
            }
            x = z;
        }
        (x, GradientTape { activations })
    }

    /// Reverse pass: accumulates parameter gradients into `grad` and returns the
    /// gradient with respect to the taped input.
    pub fn backward(&self, tape: &GradientTape, grad_output: Array2<f64>, grad: &mut MlpGrad) -> Array2<f64> {
        let mut dz = grad_output;
        for layer in (0..self.num_layers()).rev() {
            let a = &tape.activations[layer];
            grad.weights[layer] += &dz.t().dot(a);
            grad.biases[layer] += &dz.sum_axis(Axis(0));
            let mut da = dz.dot(&self.weights[layer]);
            if layer > 0 {
                // a is the relu output of the previous layer, so a > 0 iff z > 0.
                ndarray::Zip::from(&mut da).and(a).for_each(|g, &act| {
                    if act <= 0.0 {
                        *g = 0.0;
                    }
                });
            }
            dz = da;
        }
        dz
    }

    fn affine(&self, layer: usize, x: ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weights[layer].t());
        z += &self.biases[layer];
        z
    }

    pub fn all_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|x| x.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|x| x.is_finite()))
    }
}

#[inline]
fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Recorded inputs to every layer of one taped forward pass.
#[derive(Debug, Clone)]
pub struct GradientTape {
    activations: Vec<Array2<f64>>,
}

impl GradientTape {
    pub fn batch_size(&self) -> usize {
        self.activations[0].nrows()
    }
}

/// Parameter gradient with the same shapes as an [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrad {
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
}

impl MlpGrad {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Self {
            weights: mlp.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            biases: mlp.biases.iter().map(|b| Array1::zeros(b.len())).collect(),
        }
    }

    /// Same layout as [`Mlp::extend_params`].
    pub fn extend_flat(&self, out: &mut Vec<f64>) {
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.extend_flat(&mut out);
        out
    }
}

/// Mean squared error over every sample and output.
pub fn mse(prediction: ArrayView2<f64>, target: ArrayView2<f64>) -> f64 {
    let n = prediction.len();
    if n == 0 {
        return 0.0;
    }
    ndarray::Zip::from(prediction)
        .and(target)
        .fold(0.0, |acc, p, t| acc + (p - t) * (p - t))
        / n as f64
}

/// Mean squared error of `model` on a batch and its gradient with respect to
/// every parameter, flattened as in [`Mlp::params`].
pub fn loss_gradient(
    model: &Mlp,
    batch_inputs: &[Vec<f64>],
    batch_targets: &[Vec<f64>],
) -> Result<(f64, Vec<f64>), NeuralError> {
    if batch_inputs.is_empty() {
        return Err(NeuralError::EmptyBatch);
    }
    if batch_inputs.len() != batch_targets.len() {
        return Err(NeuralError::Dimension {
            expected: batch_inputs.len(),
            got: batch_targets.len(),
        });
    }
    let (n_in, n_out) = (model.input_size(), model.output_size());
    let mut x = Array2::zeros((batch_inputs.len(), n_in));
    let mut t = Array2::zeros((batch_targets.len(), n_out));
    for (row, (input, target)) in batch_inputs.iter().zip(batch_targets).enumerate() {
        if input.len() != n_in {
            return Err(NeuralError::Dimension {
                expected: n_in,
                got: input.len(),
            });
        }
        if target.len() != n_out {
            return Err(NeuralError::Dimension {
                expected: n_out,
                got: target.len(),
            });
        }
        x.slice_mut(s![row, ..]).assign(&Array1::from(input.clone()));
        t.slice_mut(s![row, ..]).assign(&Array1::from(target.clone()));
    }
    let (y, tape) = model.forward_taped(x);
    let loss = mse(y.view(), t.view());
    let scale = 2.0 / y.len() as f64;
    let dy = (&y - &t) * scale;
    let mut grad = MlpGrad::zeros_like(model);
    model.backward(&tape, dy, &mut grad);
    Ok((loss, grad.to_flat()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn init_is_deterministic() {
        let a = Mlp::new(&[2, 2], 7).unwrap();
        let b = Mlp::new(&[2, 2], 7).unwrap();
        let bits = |m: &Mlp| m.params().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(bits(&a), bits(&Mlp::new(&[2, 2], 8).unwrap()));
    }

    #[test]
    fn degenerate_sizes_rejected() {
        assert!(Mlp::new(&[3], 0).is_err());
        assert!(Mlp::new(&[], 0).is_err());
        assert!(Mlp::new(&[3, 0, 2], 0).is_err());
    }

    #[test]
    fn parameter_count() {
        // 4*8 + 8 + 8*3 + 3
        assert_eq!(Mlp::new(&[4, 8, 3], 1).unwrap().num_params(), 67);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let m = Mlp::zeros(&[3, 5, 2]).unwrap();
        assert_eq!(m.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn relu_clamps_negative_hidden_value() {
        // 1 -> 1 (relu) -> 1 (identity), both identity weights.
        let mut m = Mlp::zeros(&[1, 1, 1]).unwrap();
        m.layer_mut(0).0[[0, 0]] = 1.0;
        m.layer_mut(1).0[[0, 0]] = 1.0;
        assert_eq!(m.forward(&[-3.0]).unwrap(), vec![0.0]);
        assert_eq!(m.forward(&[2.5]).unwrap(), vec![2.5]);
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let m = Mlp::zeros(&[3, 2]).unwrap();
        assert_eq!(
            m.forward(&[1.0]).unwrap_err(),
            NeuralError::Dimension { expected: 3, got: 1 }
        );
    }

    #[test]
    fn linear_unit_gradient_by_hand() {
        // y = w x + b with w = b = 0 on the single sample (1, 2):
        // L = (2 - 0)^2, dL/dw = -2 * 2 * 1 = -4, dL/db = -4.
        let m = Mlp::zeros(&[1, 1]).unwrap();
        let (loss, grad) = loss_gradient(&m, &[vec![1.0]], &[vec![2.0]]).unwrap();
        assert_eq!(loss, 4.0);
        assert_eq!(grad, vec![-4.0, -4.0]);
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let m = Mlp::new(&[2, 4, 1], 3).unwrap();
        let x = vec![vec![0.3, -0.2], vec![1.0, 0.5]];
        let t: Vec<Vec<f64>> = x.iter().map(|v| m.forward(v).unwrap()).collect();
        let (loss, grad) = loss_gradient(&m, &x, &t).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn empty_batch_rejected() {
        let m = Mlp::zeros(&[1, 1]).unwrap();
        assert_eq!(loss_gradient(&m, &[], &[]).unwrap_err(), NeuralError::EmptyBatch);
    }

    #[test]
    fn params_round_trip() {
        let m = Mlp::new(&[3, 4, 2], 11).unwrap();
        let rebuilt = Mlp::from_params(&[3, 4, 2], &m.params()).unwrap();
        assert_eq!(m, rebuilt);
    }

    #[test]
    fn backward_returns_input_gradient() {
        // y = 2 x0 - x1: dy/dx = (2, -1) scaled by upstream gradient 3.
        let mut m = Mlp::zeros(&[2, 1]).unwrap();
        m.layer_mut(0).0.assign(&array![[2.0, -1.0]]);
        let (_, tape) = m.forward_taped(array![[0.5, 0.25]]);
        let mut g = MlpGrad::zeros_like(&m);
        let dx = m.backward(&tape, array![[3.0]], &mut g);
        assert_eq!(dx, array![[6.0, -3.0]]);
        assert_eq!(g.to_flat(), vec![1.5, 0.75, 3.0]);
    }
}
