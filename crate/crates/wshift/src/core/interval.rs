//! Closed integer intervals with arbitrary-precision endpoints.

use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};
use std::fmt;

/// The closed interval `[lo, hi]` inside the positive integers.
/// Invariant: `1 <= lo <= hi`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntegerInterval {
    lo: BigInt,
    hi: BigInt,
}

impl IntegerInterval {
    pub fn new(lo: BigInt, hi: BigInt) -> Result<Self> {
        if !lo.is_positive() || lo > hi {
            return Err(Error::ShapeError(format!(
                "invalid interval [{lo}, {hi}]: need 1 <= lo <= hi"
            )));
        }
        Ok(IntegerInterval { lo, hi })
    }

    pub fn point(at: BigInt) -> Result<Self> {
        Self::new(at.clone(), at)
    }

    /// Least element (written `p(I)` in schedule conditions).
    pub fn lo(&self) -> &BigInt {
        &self.lo
    }

    /// Greatest element (written `g(I)` in schedule conditions).
    pub fn hi(&self) -> &BigInt {
        &self.hi
    }

    pub fn len(&self) -> BigInt {
        &self.hi - &self.lo + 1
    }

    /// Length as usize, when the interval is small enough to materialize.
    pub fn len_usize(&self) -> Result<usize> {
        self.len()
            .to_usize()
            .ok_or_else(|| Error::BoundExceeded(format!("interval {self} too long to materialize")))
    }

    pub fn contains(&self, x: &BigInt) -> bool {
        *x >= self.lo && *x <= self.hi
    }

    /// `self` lies strictly to the left of `other` (`g(self) < p(other)`).
    pub fn is_left_of(&self, other: &IntegerInterval) -> bool {
        self.hi < other.lo
    }

    /// Iterate the members; requires the length to fit in memory.
    pub fn iter(&self) -> Result<impl Iterator<Item = BigInt> + '_> {
        let n = self.len_usize()?;
        let lo = self.lo.clone();
        Ok((0..n).map(move |t| &lo + t))
    }

    /// Translate by a (possibly negative) offset, keeping the invariant.
    pub fn translate(&self, offset: &BigInt) -> Result<Self> {
        Self::new(&self.lo + offset, &self.hi + offset)
    }
}

impl fmt::Display for IntegerInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

// serialize as a two-element array of decimal strings
impl Serialize for IntegerInterval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.lo.to_string(), self.hi.to_string()].serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntegerInterval {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let [lo, hi] = <[String; 2]>::deserialize(d)?;
        let lo: BigInt = lo.parse().map_err(D::Error::custom)?;
        let hi: BigInt = hi.parse().map_err(D::Error::custom)?;
        IntegerInterval::new(lo, hi).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: i64, hi: i64) -> IntegerInterval {
        IntegerInterval::new(BigInt::from(lo), BigInt::from(hi)).unwrap()
    }

    #[test]
    fn basics() {
        let i = iv(3, 7);
        assert_eq!(i.len(), BigInt::from(5));
        assert!(i.contains(&BigInt::from(3)));
        assert!(i.contains(&BigInt::from(7)));
        assert!(!i.contains(&BigInt::from(8)));
        assert!(iv(1, 2).is_left_of(&iv(3, 4)));
        assert!(!iv(1, 3).is_left_of(&iv(3, 4)));
        assert!(IntegerInterval::new(BigInt::from(0), BigInt::from(1)).is_err());
        assert!(IntegerInterval::new(BigInt::from(5), BigInt::from(4)).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let i = iv(12, 99);
        let s = serde_json::to_string(&i).unwrap();
        assert_eq!(s, r#"["12","99"]"#);
        let back: IntegerInterval = serde_json::from_str(&s).unwrap();
        assert_eq!(i, back);
    }
}
