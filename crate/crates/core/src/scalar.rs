//! Numeric abstraction shared by every algorithm in the crate.
//!
//! The traversals, oracles and state transitions are written once against
//! [`Scalar`] and monomorphized for `f32`, `f64` and the exact
//! [`BigRational`] type used for verification runs.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive};

/// A field-like number type the attribution algorithms can run over.
pub trait Scalar: Num + Signed + Clone + Debug + PartialOrd + Send + Sync + 'static {
    /// `true` when arithmetic is exact (no rounding).
    const EXACT: bool;

    /// Converts a finite `f64`. Exact for rational scalars.
    fn from_f64(v: f64) -> Self;

    fn from_usize(n: usize) -> Self;

    /// Nearest `f64`.
    fn to_f64(&self) -> f64;

    /// Text form that parses back to the same value.
    fn to_text(&self) -> String;

    /// `num / den` computed in `Self`.
    fn ratio(num: usize, den: usize) -> Self {
        Self::from_usize(num) / Self::from_usize(den)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }

    #[inline]
    fn from_usize(n: usize) -> Self {
        n as f64
    }

    #[inline]
    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_text(&self) -> String {
        self.to_string()
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn from_usize(n: usize) -> Self {
        n as f32
    }

    #[inline]
    fn to_f64(&self) -> f64 {
        f64::from(*self)
    }

    fn to_text(&self) -> String {
        self.to_string()
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).expect("non-finite value reached exact arithmetic")
    }

    fn from_usize(n: usize) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_text(&self) -> String {
        rational_to_string(self)
    }
}

/// Formats an exact value as `"p/q"` (or `"p"` for integers).
pub fn rational_to_string(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"p/q"` or `"p"`.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q == BigInt::from(0) {
                return None;
            }
            Some(BigRational::new(p, q))
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}
