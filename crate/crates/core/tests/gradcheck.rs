use bitslice_core::numkit::{matmul, relu, softmax_cross_entropy, Matrix};
use bitslice_core::quant::QuantConfig;
use bitslice_core::trainkit::{loss_and_gradients, MlpModel};
use bitslice_core::RngState;

/// Loss of a ReLU MLP with explicit (already recovered) weights.
fn loss(weights: &[Matrix<f64>], biases: &[Vec<f64>], x: &Matrix<f64>, y: &[usize]) -> f64 {
    let mut a = x.clone();
    for (l, (w, b)) in weights.iter().zip(biases).enumerate() {
        let mut z = matmul(&a, w).unwrap();
        z.add_row_vector(b).unwrap();
        a = if l + 1 < weights.len() { relu(&z) } else { z };
    }
    softmax_cross_entropy(&a, y).unwrap().0
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs().max(b.abs())).max(1e-8)
}

#[test]
fn micro_model_backprop_matches_central_differences() {
    // 3·4 + 4·2 = 20 weights.
    let model = MlpModel::<f64>::random(&[3, 4, 2], 21).unwrap();
    let qm = model.quantized_view(QuantConfig::default()).unwrap();
    let mut rng = RngState::new(4);
    let x = Matrix::from_fn(5, 3, |_, _| rng.uniform(-1.0, 1.0));
    let y = vec![0, 1, 1, 0, 1];
    let (l0, grads) = loss_and_gradients(&qm, &x, &y).unwrap();
    let weights = qm.weights().to_vec();
    let biases = qm.biases().to_vec();
    assert!((l0 - loss(&weights, &biases, &x, &y)).abs() < 1e-12);
    assert_eq!(weights.iter().map(|w| w.len()).sum::<usize>(), 20);

    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for l in 0..weights.len() {
        for i in 0..weights[l].len() {
            let mut plus = weights.clone();
            plus[l].as_mut_slice()[i] += h;
            let mut minus = weights.clone();
            minus[l].as_mut_slice()[i] -= h;
            let numeric =
                (loss(&plus, &biases, &x, &y) - loss(&minus, &biases, &x, &y)) / (2.0 * h);
            let analytic = grads.weights[l].as_slice()[i];
            if numeric.abs().max(analytic.abs()) > 1e-9 {
                worst = worst.max(rel_err(analytic, numeric));
            }
        }
        for j in 0..biases[l].len() {
            let mut plus = biases.clone();
            plus[l][j] += h;
            let mut minus = biases.clone();
            minus[l][j] -= h;
            let numeric =
                (loss(&weights, &plus, &x, &y) - loss(&weights, &minus, &x, &y)) / (2.0 * h);
            worst = worst.max(rel_err(grads.biases[l][j], numeric));
        }
    }
    assert!(worst < 1e-4, "worst relative error {worst}");
}

#[test]
fn softmax_cross_entropy_gradient_matches_central_differences() {
    let mut rng = RngState::new(9);
    let logits = Matrix::from_fn(4, 6, |_, _| rng.uniform(-3.0, 3.0));
    let y = vec![0, 5, 2, 2];
    let (_, grad) = softmax_cross_entropy(&logits, &y).unwrap();
    let h = 1e-5;
    for i in 0..logits.len() {
        let mut p = logits.clone();
        p.as_mut_slice()[i] += h;
        let mut m = logits.clone();
        m.as_mut_slice()[i] -= h;
        let numeric = (softmax_cross_entropy(&p, &y).unwrap().0
            - softmax_cross_entropy(&m, &y).unwrap().0)
            / (2.0 * h);
        assert!(rel_err(grad.as_slice()[i], numeric) < 1e-6, "{i}");
    }
}
