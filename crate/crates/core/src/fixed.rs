//! Q2.30 fixed-point numbers.
//!
//! A [`Fixed30`] is a 32-bit two's-complement integer read as `raw / 2^30`,
//! covering `[-2, 2 - 2^-30]` at a resolution of `2^-30`. All arithmetic
//! saturates at the range edges instead of wrapping. Operations that can
//! saturate come in two flavours: a plain one, and a `*_flagged` one that
//! also reports whether saturation happened so callers can count events.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Number of fraction bits.
pub const FRACTION_BITS: u32 = 30;

const SCALE: f64 = (1u64 << FRACTION_BITS) as f64;

/// A Q2.30 fixed-point value.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fixed30(i32);

impl Fixed30 {
    pub const ZERO: Fixed30 = Fixed30(0);
    pub const ONE: Fixed30 = Fixed30(1 << FRACTION_BITS);
    pub const MAX: Fixed30 = Fixed30(i32::MAX);
    pub const MIN: Fixed30 = Fixed30(i32::MIN);
    /// Smallest positive step, `2^-30`.
    pub const EPSILON: Fixed30 = Fixed30(1);

    pub const fn from_raw(raw: i32) -> Self {
        Fixed30(raw)
    }

    pub const fn raw(self) -> i32 {
        self.0
    }

    /// Converts a real to the nearest representable value (ties to even).
    /// Out-of-range inputs saturate; NaN maps to zero.
    pub fn from_f64(x: f64) -> Self {
        Self::from_f64_flagged(x).0
    }

    /// Like [`Fixed30::from_f64`], also returning `true` when the input
    /// had to be saturated.
    pub fn from_f64_flagged(x: f64) -> (Self, bool) {
        if x.is_nan() {
            return (Fixed30::ZERO, true);
        }
        // Scaling by a power of two is exact, so the only rounding is here.
        let scaled = (x * SCALE).round_ties_even();
        if scaled > i32::MAX as f64 {
            (Fixed30::MAX, true)
        } else if scaled < i32::MIN as f64 {
            (Fixed30::MIN, true)
        } else {
            (Fixed30(scaled as i32), false)
        }
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE
    }

    pub fn saturating_add(self, rhs: Self) -> Self {
        Fixed30(self.0.saturating_add(rhs.0))
    }

    pub fn saturating_sub(self, rhs: Self) -> Self {
        Fixed30(self.0.saturating_sub(rhs.0))
    }

    pub fn add_flagged(self, rhs: Self) -> (Self, bool) {
        match self.0.checked_add(rhs.0) {
            Some(v) => (Fixed30(v), false),
            None => (self.saturating_add(rhs), true),
        }
    }

    pub fn sub_flagged(self, rhs: Self) -> (Self, bool) {
        match self.0.checked_sub(rhs.0) {
            Some(v) => (Fixed30(v), false),
            None => (self.saturating_sub(rhs), true),
        }
    }

    /// Product rounded to nearest (halves round up), saturating.
    pub fn saturating_mul(self, rhs: Self) -> Self {
        self.mul_flagged(rhs).0
    }

    pub fn mul_flagged(self, rhs: Self) -> (Self, bool) {
        let wide = self.0 as i64 * rhs.0 as i64;
        let rounded = (wide + (1i64 << (FRACTION_BITS - 1))) >> FRACTION_BITS;
        if rounded > i32::MAX as i64 {
            (Fixed30::MAX, true)
        } else if rounded < i32::MIN as i64 {
            (Fixed30::MIN, true)
        } else {
            (Fixed30(rounded as i32), false)
        }
    }
}

impl Add for Fixed30 {
    type Output = Fixed30;

    fn add(self, rhs: Self) -> Self {
        self.saturating_add(rhs)
    }
}

impl Sub for Fixed30 {
    type Output = Fixed30;

    fn sub(self, rhs: Self) -> Self {
        self.saturating_sub(rhs)
    }
}

impl Neg for Fixed30 {
    type Output = Fixed30;

    fn neg(self) -> Self {
        Fixed30(self.0.saturating_neg())
    }
}

impl fmt::Debug for Fixed30 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fixed30({} = {:#010x})", self.to_f64(), self.0)
    }
}

impl fmt::Display for Fixed30 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.to_f64(), f)
    }
}

impl From<Fixed30> for f64 {
    fn from(v: Fixed30) -> f64 {
        v.to_f64()
    }
}
