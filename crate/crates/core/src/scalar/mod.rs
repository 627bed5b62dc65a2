//! Scalar abstraction shared by every evaluation kernel.
//!
//! The coefficient tables and the density/CDF/transform kernels are written
//! once against [`Field`] (exact arithmetic suffices) or [`Real`]
//! (transcendental functions required). Implementations:
//!
//! | type | role |
//! |---|---|
//! | `f64`, `f32` | plain hardware floats |
//! | [`ExtFloat`] | f64 mantissa with an unbounded binary exponent |
//! | [`BigReal`] | software float, precision set per thread |
//! | `BigRational` | exact rationals, used as test oracles |

mod big;
mod ext;

pub use big::{with_precision, working_precision, BigReal};
pub use ext::ExtFloat;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::sum::NeumaierSum;

/// Ordered field operations plus the conversions the kernels need.
pub trait Field:
    Clone
    + Debug
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Conversion from a finite f64. Exact for every implementation except
    /// `f32`.
    fn from_f64(x: f64) -> Self;

    fn from_i64(n: i64) -> Self;

    /// Nearest f64 (may be infinite or zero when out of range).
    fn to_f64(&self) -> f64;

    /// Base-2 logarithm of `|self|`, `-inf` for zero. Never overflows.
    fn log2_abs(&self) -> f64;

    /// False when a value has left the range the type can carry faithfully
    /// (overflow, underflow to a subnormal, NaN).
    fn is_representable(&self) -> bool {
        true
    }

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn powi(&self, mut n: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base.clone();
            }
            n >>= 1;
            if n > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }

    /// Sums a batch of terms. Float types override this with compensated
    /// summation.
    fn sum_terms<I: IntoIterator<Item = Self>>(terms: I) -> Self {
        terms.into_iter().fold(Self::zero(), |acc, t| acc + t)
    }
}

/// A [`Field`] with the elementary transcendental functions.
pub trait Real: Field {
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;

    /// Unit roundoff of the current working precision.
    fn unit_roundoff() -> f64;
}

macro_rules! impl_hw_float {
    ($t:ty) => {
        impl Field for $t {
            fn from_f64(x: f64) -> Self {
                x as $t
            }

            fn from_i64(n: i64) -> Self {
                n as $t
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn log2_abs(&self) -> f64 {
                (<$t>::abs(*self) as f64).log2()
            }

            fn is_representable(&self) -> bool {
                self.is_finite() && (*self == 0.0 || self.is_normal())
            }

            fn abs(&self) -> Self {
                <$t>::abs(*self)
            }

            fn powi(&self, n: u32) -> Self {
                if n <= i32::MAX as u32 {
                    <$t>::powi(*self, n as i32)
                } else {
                    <$t>::powf(*self, n as $t)
                }
            }

            fn sum_terms<I: IntoIterator<Item = Self>>(terms: I) -> Self {
                let mut acc = NeumaierSum::default();
                for t in terms {
                    acc.add(t as f64);
                }
                acc.value() as $t
            }
        }

        impl Real for $t {
            fn exp(&self) -> Self {
                <$t>::exp(*self)
            }
            fn ln(&self) -> Self {
                <$t>::ln(*self)
            }
            fn sqrt(&self) -> Self {
                <$t>::sqrt(*self)
            }
            fn sin(&self) -> Self {
                <$t>::sin(*self)
            }
            fn cos(&self) -> Self {
                <$t>::cos(*self)
            }
            fn unit_roundoff() -> f64 {
                (<$t>::EPSILON as f64) / 2.0
            }
        }
    };
}

impl_hw_float!(f64);
impl_hw_float!(f32);

impl Field for BigRational {
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite f64")
    }

    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn log2_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let f = ToPrimitive::to_f64(self).unwrap_or(0.0).abs();
        if f.is_finite() && f > 0.0 && f.is_normal() {
            return f.log2();
        }
        // out of f64 range: compare bit lengths of numerator and denominator
        let num = self.numer().abs();
        let den = self.denom().abs();
        let shift = |v: &BigInt| -> (f64, i64) {
            let bits = v.bits() as i64;
            let excess = (bits - 60).max(0);
            let top = (v >> excess as usize).to_f64().unwrap_or(1.0);
            (top, excess)
        };
        let (tn, en) = shift(&num);
        let (td, ed) = shift(&den);
        tn.log2() - td.log2() + (en - ed) as f64
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }
}

/// Multiplies by `2^e` without intermediate overflow.
pub(crate) fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

/// Splits `x` into `m * 2^e` with `0.5 <= |m| < 1`. Zero and non-finite
/// inputs come back unchanged with exponent 0.
pub(crate) fn frexp(x: f64) -> (f64, i64) {
    if x == 0.0 || !x.is_finite() {
        return (x, 0);
    }
    let (x, bias) = if x.is_normal() {
        (x, 0)
    } else {
        (x * 2f64.powi(64), -64)
    };
    let bits = x.to_bits();
    let exp_field = ((bits >> 52) & 0x7ff) as i64;
    let m = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1022u64 << 52));
    (m, exp_field - 1022 + bias)
}
