use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar the numeric code is generic over.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only if the value is unrepresentable,
    /// which cannot happen for the finite constants used in this crate.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Exact `2^e` for exponents inside the normal range.
    fn exp2i(e: i32) -> Self {
        (Self::one() + Self::one()).powi(e)
    }

    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count fits the scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp2i_is_exact() {
        assert_eq!(f64::exp2i(-8), 1.0 / 256.0);
        assert_eq!(f32::exp2i(10), 1024.0);
        assert_eq!(f64::exp2i(0), 1.0);
    }
}
