//! Dynamic fixed-point quantization of a layer's weight magnitudes.
//!
//! For a layer `W` with scale exponent `S = ceil(log2 max|w|)` and an n-bit
//! code, the step is `2^(S-n)` and each magnitude maps to
//! `floor(|w| / step)`, clamped to `2^n - 1`. Signs are kept on the side,
//! since positive and negative weights live on separate crossbars.

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::Matrix;
use crate::scalar::Scalar;

/// Largest supported code width; keeps per-code lookup tables small.
pub const MAX_BITS: u32 = 16;

/// Code width and slice width. `bits` must be a multiple of `slice_width`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantConfig {
    bits: u32,
    slice_width: u32,
}

impl Default for QuantConfig {
    /// 8-bit codes in four 2-bit slices.
    fn default() -> Self {
        Self {
            bits: 8,
            slice_width: 2,
        }
    }
}

impl QuantConfig {
    pub fn new(bits: u32, slice_width: u32) -> Result<Self> {
        if slice_width == 0 || bits < slice_width || bits > MAX_BITS {
            return Err(Error::Config(format!(
                "need 1 <= slice_width <= bits <= {MAX_BITS}, got bits={bits}, slice_width={slice_width}"
            )));
        }
        if !bits.is_multiple_of(slice_width) {
            return Err(Error::Config(format!(
                "bits={bits} is not a multiple of slice_width={slice_width}"
            )));
        }
        Ok(Self { bits, slice_width })
    }

    #[inline]
    pub fn bits(&self) -> u32 {
        self.bits
    }

    #[inline]
    pub fn slice_width(&self) -> u32 {
        self.slice_width
    }

    #[inline]
    pub fn num_slices(&self) -> usize {
        (self.bits / self.slice_width) as usize
    }

    #[inline]
    pub fn max_code(&self) -> u32 {
        (1u32 << self.bits) - 1
    }

    /// Largest digit value in one slice, `2^slice_width - 1`.
    #[inline]
    pub fn max_digit(&self) -> u32 {
        (1u32 << self.slice_width) - 1
    }

    /// Digit `k` (0 = least significant slice) of `code`.
    #[inline]
    pub fn digit(&self, code: u32, k: usize) -> u32 {
        (code >> (self.slice_width as usize * k)) & self.max_digit()
    }
}

/// Magnitude codes, signs and scale exponent of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedLayer<T> {
    rows: usize,
    cols: usize,
    codes: Vec<u32>,
    signs: Vec<i8>,
    scale_exp: i32,
    config: QuantConfig,
    _scalar: std::marker::PhantomData<T>,
}

impl<T: Scalar> QuantizedLayer<T> {
    /// Assembles a layer from raw parts, validating the code range and the
    /// canonical `+1` sign of zero codes.
    pub fn from_parts(
        rows: usize,
        cols: usize,
        codes: Vec<u32>,
        signs: Vec<i8>,
        scale_exp: i32,
        config: QuantConfig,
    ) -> Result<Self> {
        if codes.len() != rows * cols || signs.len() != codes.len() {
            return Err(Error::Shape(format!(
                "{} codes / {} signs for a {rows}x{cols} layer",
                codes.len(),
                signs.len()
            )));
        }
        for (&c, &s) in codes.iter().zip(&signs) {
            if c > config.max_code() {
                return Err(Error::Config(format!(
                    "code {c} exceeds {}-bit range",
                    config.bits()
                )));
            }
            if !(s == 1 || (s == -1 && c != 0)) {
                return Err(Error::Config(format!("invalid sign {s} for code {c}")));
            }
        }
        Ok(Self {
            rows,
            cols,
            codes,
            signs,
            scale_exp,
            config,
            _scalar: std::marker::PhantomData,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    #[inline]
    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    #[inline]
    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    #[inline]
    pub fn scale_exp(&self) -> i32 {
        self.scale_exp
    }

    #[inline]
    pub fn config(&self) -> QuantConfig {
        self.config
    }

    /// `2^(S - n)`.
    #[inline]
    pub fn q_step(&self) -> T {
        T::exp2i(self.scale_exp - self.config.bits as i32)
    }

    /// Signed codes `sign × code`.
    pub fn signed_codes(&self) -> impl Iterator<Item = i64> + '_ {
        self.codes
            .iter()
            .zip(&self.signs)
            .map(|(&c, &s)| s as i64 * c as i64)
    }
}

/// `ceil(log2(max |w|))`, computed from the binary exponent and mantissa of
/// the largest magnitude, so powers of two are exact.
pub fn dynamic_range<T: Scalar>(w: &Matrix<T>) -> Result<i32> {
    let max = w.max_abs();
    if !w.all_finite() {
        return Err(Error::NonFinite("layer weights"));
    }
    if max == T::zero() {
        return Err(Error::DegenerateRange);
    }
    Ok(ceil_log2(max))
}

fn ceil_log2<T: Scalar>(x: T) -> i32 {
    let (mantissa, exponent, _) = Float::integer_decode(x);
    let bits = 64 - mantissa.leading_zeros() as i32;
    let floor = exponent as i32 + bits - 1;
    if mantissa.is_power_of_two() {
        floor
    } else {
        floor + 1
    }
}

/// Quantizes with the layer's own dynamic range. Fails on an all-zero layer.
pub fn quantize_layer<T: Scalar>(w: &Matrix<T>, cfg: QuantConfig) -> Result<QuantizedLayer<T>> {
    let s = dynamic_range(w)?;
    Ok(quantize_with_exponent(w, s, cfg))
}

/// Total variant used on the training path: an all-zero layer gets `S = 0`
/// and all-zero codes instead of an error.
pub fn quantize_or_zero<T: Scalar>(w: &Matrix<T>, cfg: QuantConfig) -> Result<QuantizedLayer<T>> {
    match dynamic_range(w) {
        Ok(s) => Ok(quantize_with_exponent(w, s, cfg)),
        Err(Error::DegenerateRange) => Ok(quantize_with_exponent(w, 0, cfg)),
        Err(e) => Err(e),
    }
}

/// Quantizes against a given scale exponent.
pub fn quantize_with_exponent<T: Scalar>(
    w: &Matrix<T>,
    scale_exp: i32,
    cfg: QuantConfig,
) -> QuantizedLayer<T> {
    let step = T::exp2i(scale_exp - cfg.bits() as i32);
    let max_code = cfg.max_code();
    let max_code_t = T::from_u32(max_code).expect("code fits scalar");
    let mut codes = Vec::with_capacity(w.len());
    let mut signs = Vec::with_capacity(w.len());
    for &x in w.as_slice() {
        let scaled = (x.abs() / step).floor();
        let code = if scaled >= max_code_t {
            max_code
        } else {
            scaled.to_u32().unwrap_or(0)
        };
        codes.push(code);
        signs.push(if x < T::zero() && code != 0 { -1 } else { 1 });
    }
    QuantizedLayer {
        rows: w.rows(),
        cols: w.cols(),
        codes,
        signs,
        scale_exp,
        config: cfg,
        _scalar: std::marker::PhantomData,
    }
}

/// `sign × code × 2^(S-n)`; exact in binary floating point.
pub fn dequantize<T: Scalar>(q: &QuantizedLayer<T>) -> Matrix<T> {
    let step = q.q_step();
    let data = q
        .codes
        .iter()
        .zip(&q.signs)
        .map(|(&c, &s)| {
            let v = T::from_u32(c).expect("code fits scalar") * step;
            if s < 0 {
                -v
            } else {
                v
            }
        })
        .collect();
    Matrix::from_vec(q.rows, q.cols, data).expect("shape preserved")
}

/// `dequantize(quantize_or_zero(w))`, the recovered weight `Q(w)`.
pub fn fake_quantize<T: Scalar>(w: &Matrix<T>, cfg: QuantConfig) -> Result<Matrix<T>> {
    Ok(dequantize(&quantize_or_zero(w, cfg)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(x: f64) -> Matrix<f64> {
        Matrix::from_vec(1, 1, vec![x]).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(QuantConfig::new(8, 2).is_ok());
        assert!(QuantConfig::new(8, 3).is_err());
        assert!(QuantConfig::new(2, 4).is_err());
        assert!(QuantConfig::new(8, 0).is_err());
        assert_eq!(QuantConfig::default().num_slices(), 4);
    }

    #[test]
    fn dynamic_range_examples() {
        assert_eq!(dynamic_range(&single(0.9)).unwrap(), 0);
        assert_eq!(dynamic_range(&single(1.0)).unwrap(), 0);
        assert_eq!(dynamic_range(&single(2.5)).unwrap(), 2);
        assert_eq!(dynamic_range(&single(-0.25)).unwrap(), -2);
        assert_eq!(dynamic_range(&single(0.2500001)).unwrap(), -1);
        assert_eq!(dynamic_range(&single(1e-310)).unwrap(), -1029);
    }

    #[test]
    fn dynamic_range_matches_float_log_off_powers_of_two() {
        for &x in &[0.3, 0.77, 3.3, 1000.1, 1.0e-5, 6.02e23] {
            assert_eq!(dynamic_range(&single(x)).unwrap(), x.log2().ceil() as i32);
        }
    }

    #[test]
    fn degenerate_and_non_finite() {
        assert!(matches!(
            dynamic_range(&Matrix::<f64>::zeros(2, 2)),
            Err(Error::DegenerateRange)
        ));
        assert!(matches!(
            quantize_layer(&Matrix::<f32>::zeros(1, 3), QuantConfig::default()),
            Err(Error::DegenerateRange)
        ));
        assert!(matches!(
            dynamic_range(&single(f64::INFINITY)),
            Err(Error::NonFinite(_))
        ));
        let q = quantize_or_zero(&Matrix::<f32>::zeros(1, 3), QuantConfig::default()).unwrap();
        assert_eq!(q.scale_exp(), 0);
        assert!(q.codes().iter().all(|&c| c == 0));
    }

    #[test]
    fn quantize_examples() {
        let cfg = QuantConfig::default();
        let w = Matrix::from_vec(1, 4, vec![0.5, 0.0, -1.0, 0.9]).unwrap();
        let q = quantize_layer(&w, cfg).unwrap();
        assert_eq!(q.scale_exp(), 0);
        assert_eq!(q.q_step(), 1.0 / 256.0);
        assert_eq!(q.codes(), &[128, 0, 255, 230]);
        assert_eq!(q.signs(), &[1, 1, -1, 1]);
    }

    #[test]
    fn negative_zero_gets_positive_sign() {
        let w = Matrix::from_vec(1, 3, vec![-0.0, -0.001, 1.0]).unwrap();
        let q = quantize_layer(&w, QuantConfig::default()).unwrap();
        assert_eq!(q.codes()[..2], [0, 0]);
        assert_eq!(q.signs()[..2], [1, 1]);
    }

    #[test]
    fn dequantize_examples() {
        let cfg = QuantConfig::default();
        let q = QuantizedLayer::<f64>::from_parts(1, 3, vec![128, 0, 3], vec![1, 1, -1], 0, cfg)
            .unwrap();
        assert_eq!(dequantize(&q).as_slice(), &[0.5, 0.0, -3.0 / 256.0]);
    }

    #[test]
    fn from_parts_rejects_invalid() {
        let cfg = QuantConfig::default();
        assert!(QuantizedLayer::<f64>::from_parts(1, 1, vec![256], vec![1], 0, cfg).is_err());
        assert!(QuantizedLayer::<f64>::from_parts(1, 1, vec![0], vec![-1], 0, cfg).is_err());
        assert!(QuantizedLayer::<f64>::from_parts(1, 2, vec![0], vec![1], 0, cfg).is_err());
    }
}
