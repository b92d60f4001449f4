//! Extended reals `R ∪ {+inf, -inf}` with min-plus conventions.
//!
//! Values are stored as IEEE doubles; NaN is never constructed. The sum
//! `(+inf) + (-inf)` is rejected: [`ExtReal::checked_add`] returns
//! [`Error::IndeterminateSum`] and the `+` operator panics.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Default)]
#[repr(transparent)]
pub struct ExtReal(f64);

impl ExtReal {
    pub const INF: ExtReal = ExtReal(f64::INFINITY);
    pub const NEG_INF: ExtReal = ExtReal(f64::NEG_INFINITY);
    pub const ZERO: ExtReal = ExtReal(0.0);

    /// Wraps a double, rejecting NaN.
    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() {
            Err(Error::InvalidInput("NaN is not an extended real".into()))
        } else {
            Ok(ExtReal(value))
        }
    }

    /// Wraps a double known not to be NaN.
    ///
    /// Panics on NaN.
    #[inline]
    pub fn from_f64(value: f64) -> Self {
        assert!(!value.is_nan(), "NaN is not an extended real");
        ExtReal(value)
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    #[inline]
    pub fn is_pos_inf(self) -> bool {
        self.0 == f64::INFINITY
    }

    #[inline]
    pub fn is_neg_inf(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    pub fn checked_add(self, rhs: ExtReal) -> Result<ExtReal> {
        if (self.is_pos_inf() && rhs.is_neg_inf()) || (self.is_neg_inf() && rhs.is_pos_inf()) {
            Err(Error::IndeterminateSum)
        } else {
            Ok(ExtReal(self.0 + rhs.0))
        }
    }

    pub fn checked_sub(self, rhs: ExtReal) -> Result<ExtReal> {
        self.checked_add(-rhs)
    }

    /// Multiplication by a strictly positive real; infinities are preserved.
    #[inline]
    pub fn scale(self, lambda: f64) -> ExtReal {
        debug_assert!(lambda > 0.0);
        ExtReal(self.0 * lambda)
    }

    #[inline]
    pub fn min(self, other: ExtReal) -> ExtReal {
        if other.0 < self.0 {
            other
        } else {
            self
        }
    }

    #[inline]
    pub fn max(self, other: ExtReal) -> ExtReal {
        if other.0 > self.0 {
            other
        } else {
            self
        }
    }

    /// Minimum over an iterator; `+inf` when empty.
    pub fn min_of<I: IntoIterator<Item = ExtReal>>(iter: I) -> ExtReal {
        iter.into_iter().fold(ExtReal::INF, ExtReal::min)
    }

    /// Maximum over an iterator; `-inf` when empty.
    pub fn max_of<I: IntoIterator<Item = ExtReal>>(iter: I) -> ExtReal {
        iter.into_iter().fold(ExtReal::NEG_INF, ExtReal::max)
    }

    /// Absolute difference with `inf - inf = 0` for equal infinities.
    pub fn distance(self, other: ExtReal) -> f64 {
        if self.0 == other.0 {
            0.0
        } else {
            (self.0 - other.0).abs()
        }
    }
}

impl Eq for ExtReal {}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        // No NaN is ever stored, so the IEEE order is total; -0 equals +0.
        self.0.partial_cmp(&other.0).expect("extended reals are never NaN")
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<f64> for ExtReal {
    fn from(value: f64) -> Self {
        ExtReal::from_f64(value)
    }
}

impl From<i32> for ExtReal {
    fn from(value: i32) -> Self {
        ExtReal(value as f64)
    }
}

impl Add for ExtReal {
    type Output = ExtReal;

    #[inline]
    fn add(self, rhs: ExtReal) -> ExtReal {
        match self.checked_add(rhs) {
            Ok(v) => v,
            Err(_) => panic!("indeterminate sum (+inf) + (-inf)"),
        }
    }
}

impl Sub for ExtReal {
    type Output = ExtReal;

    #[inline]
    fn sub(self, rhs: ExtReal) -> ExtReal {
        self + (-rhs)
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;

    #[inline]
    fn neg(self) -> ExtReal {
        ExtReal(-self.0)
    }
}

impl fmt::Debug for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_pos_inf() {
            f.write_str("inf")
        } else if self.is_neg_inf() {
            f.write_str("-inf")
        } else {
            fmt::Display::fmt(&self.0, f)
        }
    }
}

// Finite values serialize as JSON numbers; infinities as "inf" / "-inf".
impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_pos_inf() {
            serializer.serialize_str("inf")
        } else if self.is_neg_inf() {
            serializer.serialize_str("-inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct ExtRealVisitor;

        impl Visitor<'_> for ExtRealVisitor {
            type Value = ExtReal;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a finite number or one of the strings \"inf\", \"-inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ExtReal, E> {
                if v.is_finite() {
                    Ok(ExtReal(v))
                } else {
                    Err(E::custom("non-finite number literal"))
                }
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtReal, E> {
                Ok(ExtReal(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtReal, E> {
                Ok(ExtReal(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtReal, E> {
                match v {
                    "inf" | "+inf" => Ok(ExtReal::INF),
                    "-inf" => Ok(ExtReal::NEG_INF),
                    other => Err(E::custom(format!("unknown token {other:?}"))),
                }
            }
        }

        deserializer.deserialize_any(ExtRealVisitor)
    }
}
