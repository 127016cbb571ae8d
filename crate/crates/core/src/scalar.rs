use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar the estimators are generic over.
///
/// Implemented for `f32` and `f64`. Rank sums are accumulated in exact
/// integers and only converted to `T` at the end, so the choice of scalar
/// affects the data and the final ratios, never the counts.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + FromStr + Default + Send + Sync + 'static
{
    fn from_f64_lossy(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 is representable")
    }

    fn from_count(v: i128) -> Self {
        <Self as FromPrimitive>::from_i128(v).expect("integer is representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
