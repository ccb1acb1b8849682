//! Scalar abstraction shared by the LP solver and the closed-form routines.
//!
//! Everything in the analysis pipeline runs on [`Rational`](crate::Rational),
//! but the simplex core and the distance formulas only need field arithmetic
//! plus a sign test, so they are written against [`Scalar`] and also work on
//! `f64`/`f32` (with a tolerance in the sign test).

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive};

pub trait Scalar: Clone + Debug + PartialOrd + Num + Signed + ToPrimitive {
    /// Zero test used for pivoting and feasibility decisions.
    fn is_negligible(&self) -> bool;

    fn is_strictly_positive(&self) -> bool {
        !self.is_negligible() && self.is_positive()
    }

    fn is_strictly_negative(&self) -> bool {
        !self.is_negligible() && self.is_negative()
    }

    fn from_ratio(numer: i64, denom: i64) -> Self;

    /// `true` when the type's arithmetic is exact.
    fn is_exact() -> bool;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for BigRational {
    fn is_negligible(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        BigRational::new(BigInt::from(numer), BigInt::from(denom))
    }

    fn is_exact() -> bool {
        true
    }
}

impl Scalar for f64 {
    fn is_negligible(&self) -> bool {
        self.abs() <= 1e-9
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        numer as f64 / denom as f64
    }

    fn is_exact() -> bool {
        false
    }
}

impl Scalar for f32 {
    fn is_negligible(&self) -> bool {
        self.abs() <= 1e-5
    }

    fn from_ratio(numer: i64, denom: i64) -> Self {
        numer as f32 / denom as f32
    }

    fn is_exact() -> bool {
        false
    }
}
