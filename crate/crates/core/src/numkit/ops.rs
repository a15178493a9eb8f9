use super::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Matrix product `a · b`.
///
/// Each output element is accumulated over the shared index in increasing
/// order, row by row, so results are bit-reproducible. Zero entries of `a`
/// are skipped; with finite `b` this leaves every sum unchanged.
pub fn matmul<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if a.cols() != b.rows() {
        return Err(Error::Shape(format!(
            "matmul {}x{} by {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut out = Matrix::zeros(m, n);
    if n == 0 {
        return Ok(out);
    }
    let bd = b.as_slice();
    for i in 0..m {
        let arow = a.row(i);
        let orow = out.row_mut(i);
        for (p, &av) in arow.iter().enumerate().take(k) {
            if av == T::zero() {
                continue;
            }
            let brow = &bd[p * n..(p + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o = *o + av * bv;
            }
        }
    }
    Ok(out)
}

/// Mean softmax cross-entropy over the batch and its gradient w.r.t. the
/// logits, `(softmax − onehot) / batch`.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &Matrix<T>,
    labels: &[usize],
) -> Result<(T, Matrix<T>)> {
    if logits.rows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} logit rows for {} labels",
            logits.rows(),
            labels.len()
        )));
    }
    let classes = logits.cols();
    if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= classes) {
        return Err(Error::Index(format!(
            "label {y} at sample {i} with {classes} classes"
        )));
    }
    let batch = T::from_count(labels.len() as u64);
    let mut grad = Matrix::zeros(logits.rows(), classes);
    let mut total = T::zero();
    for (i, &y) in labels.iter().enumerate() {
        let row = logits.row(i);
        let max = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
        let g = grad.row_mut(i);
        let mut denom = T::zero();
        for (gj, &v) in g.iter_mut().zip(row) {
            *gj = (v - max).exp();
            denom = denom + *gj;
        }
        // -log softmax_y = log Σ exp(v - max) - (v_y - max)
        total = total + denom.ln() - (row[y] - max);
        for gj in g.iter_mut() {
            *gj = *gj / denom / batch;
        }
        g[y] = g[y] - T::one() / batch;
    }
    Ok((total / batch, grad))
}

pub fn relu<T: Scalar>(x: &Matrix<T>) -> Matrix<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Passes `upstream` where `x > 0`.
pub fn relu_backward<T: Scalar>(x: &Matrix<T>, upstream: &Matrix<T>) -> Result<Matrix<T>> {
    if x.shape() != upstream.shape() {
        return Err(Error::Shape(format!(
            "relu input {:?} vs upstream {:?}",
            x.shape(),
            upstream.shape()
        )));
    }
    let data = x
        .as_slice()
        .iter()
        .zip(upstream.as_slice())
        .map(|(&v, &u)| if v > T::zero() { u } else { T::zero() })
        .collect();
    Matrix::from_vec(x.rows(), x.cols(), data)
}

pub fn relu_forward_backward<T: Scalar>(
    x: &Matrix<T>,
    upstream: &Matrix<T>,
) -> Result<(Matrix<T>, Matrix<T>)> {
    let grad = relu_backward(x, upstream)?;
    Ok((relu(x), grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::RngState;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(rows).unwrap()
    }

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix<f64> {
        let mut rng = RngState::new(seed);
        Matrix::from_fn(rows, cols, |_, _| rng.uniform(-2.0, 2.0))
    }

    #[test]
    fn matmul_examples() {
        let id = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let b = m(&[&[5.0, 6.0], &[7.0, 8.0]]);
        assert_eq!(matmul(&id, &b).unwrap(), b);
        assert_eq!(
            matmul(&m(&[&[1.0, 2.0]]), &m(&[&[3.0], &[4.0]])).unwrap(),
            m(&[&[11.0]])
        );
        let z = Matrix::<f64>::zeros(3, 2);
        assert_eq!(matmul(&z, &b).unwrap(), Matrix::zeros(3, 2));
    }

    #[test]
    fn matmul_shape_error() {
        let a = Matrix::<f64>::zeros(2, 3);
        assert!(matches!(matmul(&a, &a), Err(Error::Shape(_))));
    }

    #[test]
    fn matmul_associative_on_small_integers() {
        let mut rng = RngState::new(5);
        let mut int_matrix = |r, c| Matrix::from_fn(r, c, |_, _| rng.below(11) as f64 - 5.0);
        let (a, b, c) = (int_matrix(3, 4), int_matrix(4, 5), int_matrix(5, 2));
        let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
        let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
        assert_eq!(left, right);
    }

    #[test]
    fn uniform_logits_give_log_classes() {
        let logits = Matrix::<f64>::from_fn(4, 7, |_, _| 0.3);
        let (loss, _) = softmax_cross_entropy(&logits, &[0, 1, 2, 6]).unwrap();
        assert!((loss - 7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn large_logits_do_not_overflow() {
        let (loss, grad) = softmax_cross_entropy(&m(&[&[1000.0, 0.0]]), &[0]).unwrap();
        assert!(loss.is_finite() && loss.abs() < 1e-12);
        assert!(grad.all_finite());
    }

    #[test]
    fn label_out_of_range() {
        let logits = Matrix::<f64>::zeros(1, 3);
        assert!(matches!(
            softmax_cross_entropy(&logits, &[3]),
            Err(Error::Index(_))
        ));
    }

    #[test]
    fn softmax_gradient_matches_central_differences() {
        let logits = random(3, 5, 42);
        let labels = [4, 0, 2];
        let (_, grad) = softmax_cross_entropy(&logits, &labels).unwrap();
        let h = 1e-5;
        for i in 0..3 {
            for j in 0..5 {
                let mut plus = logits.clone();
                plus.set(i, j, logits.get(i, j) + h);
                let mut minus = logits.clone();
                minus.set(i, j, logits.get(i, j) - h);
                let fd = (softmax_cross_entropy(&plus, &labels).unwrap().0
                    - softmax_cross_entropy(&minus, &labels).unwrap().0)
                    / (2.0 * h);
                let g = grad.get(i, j);
                assert!(
                    (fd - g).abs() <= 1e-6 * g.abs().max(1e-3),
                    "{i},{j}: {fd} vs {g}"
                );
            }
        }
    }

    #[test]
    fn softmax_gradient_rows_sum_to_zero() {
        let logits = random(6, 10, 9);
        let (_, grad) = softmax_cross_entropy(&logits, &[0, 1, 2, 3, 4, 9]).unwrap();
        for i in 0..6 {
            assert!(grad.row(i).iter().sum::<f64>().abs() < 1e-9);
        }
    }

    #[test]
    fn relu_examples() {
        let x = m(&[&[-1.0, 2.0]]);
        let (y, g) = relu_forward_backward(&x, &m(&[&[5.0, 5.0]])).unwrap();
        assert_eq!(y, m(&[&[0.0, 2.0]]));
        assert_eq!(g, m(&[&[0.0, 5.0]]));
        assert!(relu_backward(&x, &Matrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn relu_gradient_matches_finite_differences() {
        // f(x) = Σ upstream ⊙ relu(x); away from 0 the derivative is exact.
        let x = random(4, 4, 77).map(|v| if v.abs() < 0.1 { v + 0.5 } else { v });
        let up = random(4, 4, 78);
        let f = |x: &Matrix<f64>| -> f64 {
            relu(x)
                .as_slice()
                .iter()
                .zip(up.as_slice())
                .map(|(a, b)| a * b)
                .sum()
        };
        let (_, g) = relu_forward_backward(&x, &up).unwrap();
        let h = 1e-6;
        for i in 0..4 {
            for j in 0..4 {
                let mut p = x.clone();
                p.set(i, j, x.get(i, j) + h);
                let mut q = x.clone();
                q.set(i, j, x.get(i, j) - h);
                let fd = (f(&p) - f(&q)) / (2.0 * h);
                assert!((fd - g.get(i, j)).abs() <= 1e-6 * g.get(i, j).abs().max(1.0));
            }
        }
    }
}
