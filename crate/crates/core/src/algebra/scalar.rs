use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

pub type Q = BigRational;

/// Coefficient field of a series: exact rationals or `f64`.
pub trait Scalar: Num + Signed + Clone + Debug + Send + Sync + 'static {
    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_q(q: &Q) -> Self;
    fn to_f64(&self) -> f64;
    /// Unsigned literal as it appears in rendered text.
    fn render_abs(&self) -> String;
}

impl Scalar for Q {
    fn from_ratio(num: i64, den: i64) -> Self {
        Q::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_q(q: &Q) -> Self {
        q.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn render_abs(&self) -> String {
        let a = self.abs();
        if a.is_integer() {
            a.numer().to_string()
        } else {
            format!("{}/{}", a.numer(), a.denom())
        }
    }
}

impl Scalar for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn from_q(q: &Q) -> Self {
        ToPrimitive::to_f64(q).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn render_abs(&self) -> String {
        format!("{}", self.abs())
    }
}

pub fn q(num: i64, den: i64) -> Q {
    Q::from_ratio(num, den)
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Best rational for a float, exact for dyadic inputs.
pub fn q_from_f64(x: f64) -> Option<Q> {
    Q::from_f64(x)
}
