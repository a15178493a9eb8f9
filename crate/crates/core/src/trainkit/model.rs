use crate::error::{Error, Result};
use crate::numkit::{matmul, relu, Matrix, RngState};
use crate::quant::{dequantize, quantize_or_zero, QuantConfig, QuantizedLayer};
use crate::scalar::Scalar;

const INIT_STREAM: u64 = 0x1A17;

/// One linear layer, `x · weights + bias`, with `weights` stored
/// `inputs × outputs` so rows line up with crossbar wordlines.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
    /// `true` marks a pruned weight that stays at exactly zero.
    pub mask: Option<Vec<bool>>,
}

impl<T: Scalar> Layer<T> {
    pub fn new(weights: Matrix<T>, bias: Vec<T>) -> Result<Self> {
        if bias.len() != weights.cols() {
            return Err(Error::Shape(format!(
                "bias of length {} for {} outputs",
                bias.len(),
                weights.cols()
            )));
        }
        Ok(Self {
            weights,
            bias,
            mask: None,
        })
    }

    pub fn inputs(&self) -> usize {
        self.weights.rows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.cols()
    }

    pub fn is_pruned(&self, i: usize) -> bool {
        self.mask.as_ref().is_some_and(|m| m[i])
    }
}

/// Fully connected network with ReLU between layers.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel<T> {
    layers: Vec<Layer<T>>,
}

impl<T: Scalar> MlpModel<T> {
    pub fn new(layers: Vec<Layer<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::EmptyModel);
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::Shape(format!(
                    "layer {i} has {} outputs but layer {} takes {} inputs",
                    pair[0].outputs(),
                    i + 1,
                    pair[1].inputs()
                )));
            }
        }
        for (i, l) in layers.iter().enumerate() {
            if l.mask.as_ref().is_some_and(|m| m.len() != l.weights.len()) {
                return Err(Error::Shape(format!("mask size mismatch in layer {i}")));
            }
        }
        Ok(Self { layers })
    }

    /// Weights drawn from `U(-1/√fan_in, 1/√fan_in)`, zero biases.
    pub fn random(dims: &[usize], seed: u64) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::EmptyModel);
        }
        let root = RngState::new(seed).fork(INIT_STREAM);
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, d)| {
                let mut rng = root.fork(i as u64);
                let bound = 1.0 / (d[0] as f64).sqrt();
                let w = Matrix::from_fn(d[0], d[1], |_, _| T::lit(rng.uniform(-bound, bound)));
                Layer::new(w, vec![T::zero(); d[1]])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    /// `784 → hidden → 10`.
    pub fn mnist(hidden: usize, seed: u64) -> Result<Self> {
        Self::random(&[784, hidden, 10], seed)
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    /// Input width followed by each layer's output width.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs())
            .chain(self.layers.iter().map(Layer::outputs))
            .collect()
    }

    pub fn weight_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len()).sum()
    }

    pub fn quantize(&self, cfg: QuantConfig) -> Result<Vec<QuantizedLayer<T>>> {
        self.layers
            .iter()
            .map(|l| quantize_or_zero(&l.weights, cfg))
            .collect()
    }

    pub fn quantized_view(&self, cfg: QuantConfig) -> Result<QuantizedModel<T>> {
        let biases = self.layers.iter().map(|l| l.bias.clone()).collect();
        QuantizedModel::new(self.quantize(cfg)?, biases)
    }
}

/// Recovered weights `Q(w)` and biases. Inference and training forward
/// passes go through this type, so they cannot touch full-precision weights.
#[derive(Debug, Clone)]
pub struct QuantizedModel<T> {
    quantized: Vec<QuantizedLayer<T>>,
    weights: Vec<Matrix<T>>,
    biases: Vec<Vec<T>>,
}

/// Per-layer inputs and pre-activations of a forward pass.
pub(crate) struct ForwardTrace<T> {
    pub inputs: Vec<Matrix<T>>,
    pub pre_activations: Vec<Matrix<T>>,
}

impl<T: Scalar> QuantizedModel<T> {
    pub fn new(quantized: Vec<QuantizedLayer<T>>, biases: Vec<Vec<T>>) -> Result<Self> {
        if quantized.len() != biases.len() || quantized.is_empty() {
            return Err(Error::Shape(format!(
                "{} layers and {} bias vectors",
                quantized.len(),
                biases.len()
            )));
        }
        let weights = quantized.iter().map(dequantize).collect();
        Ok(Self {
            quantized,
            weights,
            biases,
        })
    }

    pub fn quantized_layers(&self) -> &[QuantizedLayer<T>] {
        &self.quantized
    }

    /// `Q(w)` of each layer.
    pub fn weights(&self) -> &[Matrix<T>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<T>] {
        &self.biases
    }

    /// Logits for a batch of inputs.
    pub fn forward(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        let mut a = x.clone();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = matmul(&a, w)?;
            z.add_row_vector(b)?;
            a = if l + 1 < self.weights.len() {
                relu(&z)
            } else {
                z
            };
        }
        Ok(a)
    }

    /// Input activations seen by each layer (first entry is `x` itself).
    pub fn layer_inputs(&self, x: &Matrix<T>) -> Result<Vec<Matrix<T>>> {
        Ok(self.trace(x)?.0.inputs)
    }

    pub(crate) fn trace(&self, x: &Matrix<T>) -> Result<(ForwardTrace<T>, Matrix<T>)> {
        let n = self.weights.len();
        let mut inputs = Vec::with_capacity(n);
        let mut pre = Vec::with_capacity(n);
        let mut a = x.clone();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = matmul(&a, w)?;
            z.add_row_vector(b)?;
            let next = if l + 1 < n { relu(&z) } else { z.clone() };
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        Ok((
            ForwardTrace {
                inputs,
                pre_activations: pre,
            },
            a,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_model_shapes_and_bounds() {
        let m = MlpModel::<f32>::random(&[6, 4, 3], 1).unwrap();
        assert_eq!(m.dims(), vec![6, 4, 3]);
        assert_eq!(m.weight_count(), 36);
        let bound = 1.0 / 6f32.sqrt();
        assert!(m.layers()[0]
            .weights
            .as_slice()
            .iter()
            .all(|w| w.abs() <= bound));
        assert_eq!(MlpModel::<f32>::random(&[6, 4, 3], 1).unwrap(), m);
    }

    #[test]
    fn shape_chain_is_checked() {
        let a = Layer::new(Matrix::<f64>::zeros(3, 2), vec![0.0; 2]).unwrap();
        let b = Layer::new(Matrix::<f64>::zeros(3, 2), vec![0.0; 2]).unwrap();
        assert!(MlpModel::new(vec![a, b]).is_err());
        assert!(Layer::new(Matrix::<f64>::zeros(3, 2), vec![0.0; 3]).is_err());
        assert!(matches!(
            MlpModel::<f64>::new(vec![]),
            Err(Error::EmptyModel)
        ));
    }

    #[test]
    fn forward_uses_recovered_weights_only() {
        // Perturbing weights inside their quantization cells leaves the
        // logits bit-identical.
        let cfg = QuantConfig::default();
        let m = MlpModel::<f64>::random(&[5, 4, 3], 9).unwrap();
        let x = Matrix::from_fn(2, 5, |i, j| (i + j) as f64 * 0.1);
        let before = m.quantized_view(cfg).unwrap().forward(&x).unwrap();
        let mut nudged = m.clone();
        for (layer, q) in nudged.layers_mut().iter_mut().zip(m.quantize(cfg).unwrap()) {
            let step = q.q_step();
            let qw = dequantize(&q);
            for (w, &r) in layer.weights.as_mut_slice().iter_mut().zip(qw.as_slice()) {
                if q.codes().iter().all(|&c| c < cfg.max_code()) {
                    *w = r + r.signum() * step * 0.25;
                }
            }
        }
        let after = nudged.quantized_view(cfg).unwrap().forward(&x).unwrap();
        assert_eq!(before, after);
    }
}
