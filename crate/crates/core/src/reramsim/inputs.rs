use super::profile::InputPlanes;
use crate::error::{Error, Result};
use crate::numkit::Matrix;
use crate::quant::{quantize_or_zero, QuantConfig};
use crate::scalar::Scalar;
use crate::trainkit::QuantizedModel;

/// Bit planes of the activations each layer sees for `images`.
///
/// Every layer input (the pixels included) is quantized to `bits`-bit
/// dynamic fixed point per batch and fed one bit at a time, so each sample
/// contributes `bits` planes per layer.
pub fn activation_planes<T: Scalar>(
    model: &QuantizedModel<T>,
    images: &Matrix<T>,
    bits: u32,
) -> Result<InputPlanes> {
    let cfg = QuantConfig::new(bits, 1)?;
    let mut per_layer = Vec::new();
    for a in model.layer_inputs(images)? {
        if a.as_slice().iter().any(|&v| v < T::zero()) {
            return Err(Error::Config("activations must be non-negative".into()));
        }
        let q = quantize_or_zero(&a, cfg)?;
        let mut planes = Vec::with_capacity(a.rows() * bits as usize);
        for s in 0..a.rows() {
            let codes = &q.codes()[s * a.cols()..(s + 1) * a.cols()];
            for b in 0..bits {
                planes.push(codes.iter().map(|&c| ((c >> b) & 1) as u8).collect());
            }
        }
        per_layer.push(planes);
    }
    InputPlanes::new(per_layer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reramsim::{bitline_profile, map_model};
    use crate::slicekit::bit_slice;
    use crate::trainkit::MlpModel;

    #[test]
    fn planes_reconstruct_activation_codes() {
        let model = MlpModel::<f64>::random(&[6, 4, 3], 3).unwrap();
        let qm = model.quantized_view(QuantConfig::default()).unwrap();
        let x = Matrix::from_fn(2, 6, |i, j| ((i * 6 + j) % 5) as f64 / 4.0);
        let planes = activation_planes(&qm, &x, 8).unwrap();
        assert_eq!(planes.num_layers(), 2);
        assert_eq!(planes.layer(0).len(), 16);
        let q = quantize_or_zero(&x, QuantConfig::new(8, 1).unwrap()).unwrap();
        for j in 0..6 {
            let code: u32 = (0..8).map(|b| (planes.layer(0)[b][j] as u32) << b).sum();
            assert_eq!(code, q.codes()[j]);
        }
        let layers: Vec<_> = qm.quantized_layers().iter().map(bit_slice).collect();
        let m = map_model(&layers).unwrap();
        let emp = bitline_profile(&m, Some(&planes)).unwrap();
        let ones = bitline_profile(&m, None).unwrap();
        for (e, o) in emp.groups.iter().zip(&ones.groups) {
            assert!(e.max_accumulation <= o.max_accumulation);
        }
    }
}
