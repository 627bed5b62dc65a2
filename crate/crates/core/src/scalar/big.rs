use astro_float::{BigFloat, Consts, RoundingMode, Sign};
use num_traits::{One, Zero};
use std::cell::{Cell, RefCell};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::{ldexp, Field, Real};

const RM: RoundingMode = RoundingMode::ToEven;
const DEFAULT_BITS: usize = 256;

thread_local! {
    static PRECISION: Cell<usize> = const { Cell::new(DEFAULT_BITS) };
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constants cache"));
}

/// Current working precision (bits) of [`BigReal`] on this thread.
pub fn working_precision() -> usize {
    PRECISION.with(|p| p.get())
}

struct Restore(usize);

impl Drop for Restore {
    fn drop(&mut self) {
        PRECISION.with(|p| p.set(self.0));
    }
}

/// Runs `f` with [`BigReal`] arithmetic carried at `bits` of precision on
/// the calling thread; the previous precision is restored afterwards.
pub fn with_precision<R>(bits: usize, f: impl FnOnce() -> R) -> R {
    let previous = PRECISION.with(|p| p.replace(bits.max(64)));
    let _restore = Restore(previous);
    f()
}

/// Software float whose precision is taken from [`with_precision`].
#[derive(Clone)]
pub struct BigReal(BigFloat);

impl BigReal {
    pub fn inner(&self) -> &BigFloat {
        &self.0
    }

    fn p() -> usize {
        working_precision()
    }

    fn with_consts<R>(f: impl FnOnce(&mut Consts) -> R) -> R {
        CONSTS.with(|c| f(&mut c.borrow_mut()))
    }

    /// Leading 64 mantissa bits, binary exponent and sign, for a finite
    /// nonzero value: `value = top * 2^(e - 64)`.
    fn top_word(&self) -> Option<(u64, i64, bool)> {
        if self.0.is_zero() {
            return None;
        }
        let mut r = self.0.clone();
        r.set_precision(64, RM).ok()?;
        let (words, _, sign, e, _) = r.as_raw_parts()?;
        Some((*words.last()?, e as i64, sign == Sign::Neg))
    }

    pub fn pi() -> Self {
        BigReal(Self::with_consts(|cc| cc.pi(Self::p(), RM)))
    }
}

impl fmt::Debug for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BigReal({:e})", self.to_f64())
    }
}

impl PartialEq for BigReal {
    fn eq(&self, other: &Self) -> bool {
        self.0.cmp(&other.0) == Some(0)
    }
}

impl PartialOrd for BigReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.cmp(&other.0).map(|c| c.cmp(&0))
    }
}

impl Zero for BigReal {
    fn zero() -> Self {
        BigReal(BigFloat::from_word(0, Self::p()))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl One for BigReal {
    fn one() -> Self {
        BigReal(BigFloat::from_word(1, Self::p()))
    }
}

impl Neg for BigReal {
    type Output = Self;
    fn neg(self) -> Self {
        BigReal(self.0.neg())
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident) => {
        impl $tr for BigReal {
            type Output = Self;
            fn $m(self, rhs: Self) -> Self {
                BigReal(self.0.$m(&rhs.0, Self::p(), RM))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Field for BigReal {
    fn from_f64(x: f64) -> Self {
        BigReal(BigFloat::from_f64(x, Self::p().max(64)))
    }

    fn from_i64(n: i64) -> Self {
        BigReal(BigFloat::from_i64(n, Self::p().max(64)))
    }

    fn to_f64(&self) -> f64 {
        let v = &self.0;
        if v.is_nan() {
            return f64::NAN;
        }
        if v.is_inf_pos() {
            return f64::INFINITY;
        }
        if v.is_inf_neg() {
            return f64::NEG_INFINITY;
        }
        match self.top_word() {
            None => 0.0,
            Some((top, e, neg)) => {
                let mag = ldexp(top as f64, e - 64);
                if neg {
                    -mag
                } else {
                    mag
                }
            }
        }
    }

    fn log2_abs(&self) -> f64 {
        if self.0.is_nan() {
            return f64::NAN;
        }
        if self.0.is_inf() {
            return f64::INFINITY;
        }
        match self.top_word() {
            None => f64::NEG_INFINITY,
            Some((top, e, _)) => (top as f64).log2() - 64.0 + e as f64,
        }
    }

    fn is_representable(&self) -> bool {
        !self.0.is_nan() && !self.0.is_inf()
    }

    fn abs(&self) -> Self {
        BigReal(self.0.abs())
    }

    fn powi(&self, n: u32) -> Self {
        BigReal(self.0.powi(n as usize, Self::p(), RM))
    }
}

impl Real for BigReal {
    fn exp(&self) -> Self {
        BigReal(Self::with_consts(|cc| self.0.exp(Self::p(), RM, cc)))
    }

    fn ln(&self) -> Self {
        BigReal(Self::with_consts(|cc| self.0.ln(Self::p(), RM, cc)))
    }

    fn sqrt(&self) -> Self {
        BigReal(self.0.sqrt(Self::p(), RM))
    }

    fn sin(&self) -> Self {
        BigReal(Self::with_consts(|cc| self.0.sin(Self::p(), RM, cc)))
    }

    fn cos(&self) -> Self {
        BigReal(Self::with_consts(|cc| self.0.cos(Self::p(), RM, cc)))
    }

    fn unit_roundoff() -> f64 {
        2f64.powi(-(Self::p() as i32))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_roundtrip() {
        for &x in &[1.0, -1.5, 0.1, 1e-300, 7.25e300, -2.5e-307] {
            let b = BigReal::from_f64(x);
            assert_eq!(b.to_f64(), x, "{x}");
            assert!(
                (b.log2_abs() - x.abs().log2()).abs() < 1e-12,
                "{x} {}",
                b.log2_abs()
            );
        }
    }

    #[test]
    fn precision_is_scoped() {
        let outer = working_precision();
        with_precision(1024, || {
            assert_eq!(working_precision(), 1024);
            let third = BigReal::one() / BigReal::from_i64(3);
            let back = third * BigReal::from_i64(3) - BigReal::one();
            assert!(back.log2_abs() < -1000.0);
        });
        assert_eq!(working_precision(), outer);
    }

    #[test]
    fn cancellation_resolved_at_high_precision() {
        with_precision(256, || {
            let big = BigReal::from_f64(1e40);
            let s = (big.clone() + BigReal::one()) - big;
            assert_eq!(s.to_f64(), 1.0);
        });
    }

    #[test]
    fn transcendental_functions() {
        with_precision(128, || {
            let x = BigReal::from_f64(0.75);
            assert!((Real::exp(&x).to_f64() - 0.75f64.exp()).abs() < 1e-15);
            assert!((Real::ln(&x).to_f64() - 0.75f64.ln()).abs() < 1e-15);
            assert!((Real::sin(&x).to_f64() - 0.75f64.sin()).abs() < 1e-15);
            assert!((Real::cos(&x).to_f64() - 0.75f64.cos()).abs() < 1e-15);
            assert!((BigReal::pi().to_f64() - std::f64::consts::PI).abs() < 1e-15);
        });
    }
}
