//! Partitions of the positive integers into infinitely many infinite
//! parts, realized through the Cantor pairing bijection so membership and
//! rank queries are O(1) arithmetic instead of table scans.
//!
//! Two shapes are needed: a single-index family `A_q` (one part per
//! `q >= 1`) and a double-index family `A_{q,j}` (one part per pair).
//! `member(part, t)` gives the `t`-th element of a part, `locate(x)` maps
//! any positive integer back to its part and rank.

use crate::construct::fiber::{cantor_pair, cantor_unpair};
use crate::error::{Error, Result};

/// Identifies one part of a partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PartKey {
    /// `A_q`, `q >= 1`.
    Single(u64),
    /// `A_{q,j}`, `q, j >= 1`.
    Double(u64, u64),
}

impl std::fmt::Display for PartKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PartKey::Single(q) => write!(f, "A_{q}"),
            PartKey::Double(q, j) => write!(f, "A_({q},{j})"),
        }
    }
}

/// Which shape of partition this map realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionShape {
    Single,
    Double,
}

/// A concrete partition of `{1, 2, 3, ...}` into infinite parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionMap {
    shape: PartitionShape,
}

impl PartitionMap {
    pub fn single() -> Self {
        PartitionMap {
            shape: PartitionShape::Single,
        }
    }

    pub fn double() -> Self {
        PartitionMap {
            shape: PartitionShape::Double,
        }
    }

    pub fn shape(&self) -> PartitionShape {
        self.shape
    }

    fn check_key(&self, key: PartKey) -> Result<()> {
        match (self.shape, key) {
            (PartitionShape::Single, PartKey::Single(q)) if q >= 1 => Ok(()),
            (PartitionShape::Double, PartKey::Double(q, j)) if q >= 1 && j >= 1 => Ok(()),
            _ => Err(Error::PreconditionError(format!(
                "part key {key} does not fit this partition"
            ))),
        }
    }

    /// The `t`-th member (`t >= 1`) of the part `key`.
    pub fn member(&self, key: PartKey, t: u64) -> Result<u64> {
        self.check_key(key)?;
        if t < 1 {
            return Err(Error::PreconditionError("member rank starts at 1".into()));
        }
        Ok(match key {
            PartKey::Single(q) => cantor_pair(q - 1, t - 1)? + 1,
            PartKey::Double(q, j) => cantor_pair(cantor_pair(q - 1, j - 1)?, t - 1)? + 1,
        })
    }

    /// The part containing `x >= 1`, together with the rank of `x` in it.
    pub fn locate(&self, x: u64) -> Result<(PartKey, u64)> {
        if x < 1 {
            return Err(Error::PreconditionError(
                "partition covers positive integers only".into(),
            ));
        }
        let (a, b) = cantor_unpair(x - 1);
        Ok(match self.shape {
            PartitionShape::Single => (PartKey::Single(a + 1), b + 1),
            PartitionShape::Double => {
                let (q, j) = cantor_unpair(a);
                (PartKey::Double(q + 1, j + 1), b + 1)
            }
        })
    }

    /// Rank of `x` inside the part `key`, or `NotInPart`.
    pub fn rank_in(&self, key: PartKey, x: u64) -> Result<u64> {
        let (found, t) = self.locate(x)?;
        if found == key {
            Ok(t)
        } else {
            Err(Error::NotInPart(format!("{x} lies in {found}, not {key}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_parts_tile_the_integers() {
        let p = PartitionMap::single();
        // members round-trip through locate
        for q in 1..=20u64 {
            for t in 1..=20u64 {
                let x = p.member(PartKey::Single(q), t).unwrap();
                assert_eq!(p.locate(x).unwrap(), (PartKey::Single(q), t));
                assert_eq!(p.rank_in(PartKey::Single(q), x).unwrap(), t);
            }
        }
        // every integer lands in exactly one part
        let mut seen = std::collections::BTreeSet::new();
        for x in 1..=500u64 {
            let (key, t) = p.locate(x).unwrap();
            assert_eq!(p.member(key, t).unwrap(), x);
            assert!(seen.insert(x));
        }
    }

    #[test]
    fn single_first_members_match_pairing() {
        let p = PartitionMap::single();
        // A_1 starts with the triangular-ish diagonal 1, 3, 6, 10
        let a1: Vec<u64> = (1..=4)
            .map(|t| p.member(PartKey::Single(1), t).unwrap())
            .collect();
        assert_eq!(a1, vec![1, 3, 6, 10]);
        assert_eq!(p.member(PartKey::Single(2), 1).unwrap(), 2);
        assert_eq!(p.locate(2).unwrap(), (PartKey::Single(2), 1));
    }

    #[test]
    fn double_parts_tile_the_integers() {
        let p = PartitionMap::double();
        for q in 1..=6u64 {
            for j in 1..=6u64 {
                for t in 1..=6u64 {
                    let x = p.member(PartKey::Double(q, j), t).unwrap();
                    assert_eq!(p.locate(x).unwrap(), (PartKey::Double(q, j), t));
                }
            }
        }
        assert_eq!(p.locate(1).unwrap(), (PartKey::Double(1, 1), 1));
        assert_eq!(p.locate(2).unwrap(), (PartKey::Double(2, 1), 1));
        for x in 1..=500u64 {
            let (key, t) = p.locate(x).unwrap();
            assert_eq!(p.member(key, t).unwrap(), x);
        }
    }

    #[test]
    fn early_ranks_stay_small() {
        // the constructions only consult the first few members of the
        // first few parts, which must stay well under 10^7
        let single = PartitionMap::single();
        let double = PartitionMap::double();
        for q in 1..=20u64 {
            for t in 1..=5u64 {
                assert!(single.member(PartKey::Single(q), t).unwrap() < 1_000);
            }
        }
        for q in 1..=4u64 {
            for j in 1..=4u64 {
                for t in 1..=5u64 {
                    assert!(double.member(PartKey::Double(q, j), t).unwrap() < 10_000);
                }
            }
        }
    }

    #[test]
    fn wrong_shape_is_rejected() {
        let p = PartitionMap::single();
        assert!(p.member(PartKey::Double(1, 1), 1).is_err());
        assert!(matches!(
            p.rank_in(PartKey::Single(1), 2),
            Err(Error::NotInPart(_))
        ));
    }
}
