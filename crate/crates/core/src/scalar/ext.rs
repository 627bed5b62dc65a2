use num_traits::{One, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::{frexp, ldexp, Field, Real};
use crate::sum::NeumaierSum;

/// Extended-range float: an f64 mantissa in `[0.5, 1)` and an `i64` binary
/// exponent. Precision is that of f64; range is effectively unbounded, so
/// factorial-sized coefficients and high powers never overflow.
#[derive(Clone, Copy, PartialEq)]
pub struct ExtFloat {
    mant: f64,
    exp: i64,
}

impl ExtFloat {
    pub fn new(x: f64) -> Self {
        let (mant, exp) = frexp(x);
        ExtFloat { mant, exp }
    }

    fn normalized(mant: f64, exp: i64) -> Self {
        if mant == 0.0 {
            return ExtFloat::zero();
        }
        let (m, e) = frexp(mant);
        ExtFloat {
            mant: m,
            exp: exp + e,
        }
    }

    pub fn mantissa(&self) -> f64 {
        self.mant
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn is_nan(&self) -> bool {
        self.mant.is_nan()
    }
}

impl fmt::Debug for ExtFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.mant, self.exp)
    }
}

impl Zero for ExtFloat {
    fn zero() -> Self {
        ExtFloat { mant: 0.0, exp: 0 }
    }
    fn is_zero(&self) -> bool {
        self.mant == 0.0
    }
}

impl One for ExtFloat {
    fn one() -> Self {
        ExtFloat { mant: 0.5, exp: 1 }
    }
}

impl Neg for ExtFloat {
    type Output = Self;
    fn neg(self) -> Self {
        ExtFloat {
            mant: -self.mant,
            exp: self.exp,
        }
    }
}

impl Mul for ExtFloat {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        ExtFloat::normalized(self.mant * rhs.mant, self.exp + rhs.exp)
    }
}

impl Div for ExtFloat {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        if rhs.mant == 0.0 {
            return ExtFloat::new(self.mant / 0.0);
        }
        ExtFloat::normalized(self.mant / rhs.mant, self.exp - rhs.exp)
    }
}

impl Add for ExtFloat {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        if self.mant == 0.0 {
            return rhs;
        }
        if rhs.mant == 0.0 {
            return self;
        }
        let (big, small) = if self.exp >= rhs.exp {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let shift = big.exp - small.exp;
        if shift > 1100 {
            return big;
        }
        ExtFloat::normalized(big.mant + ldexp(small.mant, -shift), big.exp)
    }
}

impl Sub for ExtFloat {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl PartialOrd for ExtFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if self.is_nan() || other.is_nan() {
            return None;
        }
        let diff = *self - *other;
        diff.mant.partial_cmp(&0.0)
    }
}

impl Field for ExtFloat {
    fn from_f64(x: f64) -> Self {
        ExtFloat::new(x)
    }

    fn from_i64(n: i64) -> Self {
        ExtFloat::new(n as f64)
    }

    fn to_f64(&self) -> f64 {
        ldexp(self.mant, self.exp)
    }

    fn log2_abs(&self) -> f64 {
        if self.mant == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.mant.abs().log2() + self.exp as f64
        }
    }

    fn is_representable(&self) -> bool {
        self.mant.is_finite()
    }

    fn abs(&self) -> Self {
        ExtFloat {
            mant: self.mant.abs(),
            exp: self.exp,
        }
    }

    /// Aligns every term to the largest exponent and runs a Neumaier sum on
    /// the scaled mantissas.
    fn sum_terms<I: IntoIterator<Item = Self>>(terms: I) -> Self {
        let terms: Vec<ExtFloat> = terms.into_iter().collect();
        let top = terms.iter().filter(|t| t.mant != 0.0).map(|t| t.exp).max();
        let Some(top) = top else {
            return ExtFloat::zero();
        };
        let mut acc = NeumaierSum::default();
        for t in &terms {
            acc.add(ldexp(t.mant, t.exp - top));
        }
        ExtFloat::normalized(acc.value(), top)
    }
}

impl Real for ExtFloat {
    fn exp(&self) -> Self {
        let t = self.to_f64();
        if !t.is_finite() {
            return if t > 0.0 {
                ExtFloat::new(f64::INFINITY)
            } else {
                ExtFloat::zero()
            };
        }
        let k = (t / std::f64::consts::LN_2).floor();
        let r = t - k * std::f64::consts::LN_2;
        ExtFloat::normalized(r.exp(), k as i64)
    }

    fn ln(&self) -> Self {
        ExtFloat::new(self.mant.ln() + self.exp as f64 * std::f64::consts::LN_2)
    }

    fn sqrt(&self) -> Self {
        let (m, e) = if self.exp % 2 == 0 {
            (self.mant, self.exp)
        } else {
            (self.mant * 2.0, self.exp - 1)
        };
        ExtFloat::normalized(m.sqrt(), e / 2)
    }

    fn sin(&self) -> Self {
        ExtFloat::new(self.to_f64().sin())
    }

    fn cos(&self) -> Self {
        ExtFloat::new(self.to_f64().cos())
    }

    fn unit_roundoff() -> f64 {
        f64::EPSILON / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_matches_f64_in_range() {
        let a = ExtFloat::new(3.25);
        let b = ExtFloat::new(-0.125);
        assert_eq!((a + b).to_f64(), 3.125);
        assert_eq!((a - b).to_f64(), 3.375);
        assert_eq!((a * b).to_f64(), -0.40625);
        assert_eq!((a / b).to_f64(), -26.0);
        assert!(b < a);
        assert_eq!(ExtFloat::one().to_f64(), 1.0);
    }

    #[test]
    fn survives_beyond_f64_range() {
        let big = Field::powi(&ExtFloat::new(10.0), 400);
        assert!(big.to_f64().is_infinite());
        assert!((big.log2_abs() - 400.0 * 10f64.log2()).abs() < 1e-9);
        let back = big / Field::powi(&ExtFloat::new(10.0), 399);
        assert!((back.to_f64() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn exp_and_ln_roundtrip() {
        let x = ExtFloat::new(1000.0);
        let e = Real::exp(&x);
        assert!((e.log2_abs() - 1000.0 / std::f64::consts::LN_2).abs() < 1e-9);
        assert!((Real::ln(&e).to_f64() - 1000.0).abs() < 1e-10);
        assert!((Real::sqrt(&ExtFloat::new(8.0)).to_f64() - 8f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn scaled_compensated_sum() {
        let huge = Field::powi(&ExtFloat::new(2.0), 2000);
        let s = ExtFloat::sum_terms([huge, ExtFloat::one(), -huge]);
        // the unit term is far below the huge term's ulp and is lost
        assert_eq!(s.to_f64(), 0.0);
        let s = ExtFloat::sum_terms([ExtFloat::new(1e16), ExtFloat::one(), ExtFloat::new(-1e16)]);
        assert_eq!(s.to_f64(), 1.0);
    }
}
