//! Numeric abstraction shared by the float and exact-rational simplex paths.

use num::{BigRational, Signed, Zero};
use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Field-like scalar the simplex engine pivots over.
///
/// `tol` maps a float tolerance into the scalar domain: the float instance
/// keeps it, the rational instance collapses it to zero so every comparison
/// in exact mode is exact.
pub trait LpScalar:
    Clone
    + PartialOrd
    + Debug
    + Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64_lossless(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn abs_val(&self) -> Self;
    fn is_finite_val(&self) -> bool;
    fn tol(eps: f64) -> Self;

    fn is_zero_val(&self) -> bool {
        *self == Self::zero()
    }
}

impl LpScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64_lossless(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
    fn is_finite_val(&self) -> bool {
        self.is_finite()
    }
    fn tol(eps: f64) -> Self {
        eps
    }
}

impl LpScalar for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        <BigRational as num::One>::one()
    }
    fn from_f64_lossless(x: f64) -> Self {
        BigRational::from_float(x).expect("finite float required for exact conversion")
    }
    fn to_f64(&self) -> f64 {
        num::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn abs_val(&self) -> Self {
        Signed::abs(self)
    }
    fn is_finite_val(&self) -> bool {
        true
    }
    fn tol(_eps: f64) -> Self {
        <BigRational as Zero>::zero()
    }
}
