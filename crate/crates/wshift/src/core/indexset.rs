//! Index sets with exact counting and rational densities.
//!
//! Sets are unions of blocks, where a block is either a single interval or an
//! arithmetic progression of equal-length intervals (the shape schedule
//! levels take). Counting against a horizon is closed-form, so densities are
//! exact `BigRational`s even when the set has ~1e13 members.

use crate::core::interval::IntegerInterval;
use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer, Signed, Zero};
use serde::{Deserialize, Serialize};

/// One block of an index set.
#[derive(Debug, Clone, PartialEq)]
pub enum IndexBlock {
    /// A single interval.
    Interval(IntegerInterval),
    /// `count` intervals `[first_lo + t*step, first_lo + t*step + len - 1]`
    /// for `t = 0, .., count-1`, with `step >= len` so they are disjoint.
    Progression {
        first_lo: BigInt,
        len: BigInt,
        step: BigInt,
        count: BigInt,
    },
}

impl IndexBlock {
    pub fn progression(first_lo: BigInt, len: BigInt, step: BigInt, count: BigInt) -> Result<Self> {
        if !first_lo.is_positive() || !len.is_positive() || !count.is_positive() {
            return Err(Error::ShapeError(
                "progression needs positive start, length and count".into(),
            ));
        }
        if step < len {
            return Err(Error::ShapeError(format!(
                "progression step {step} smaller than interval length {len}"
            )));
        }
        Ok(IndexBlock::Progression {
            first_lo,
            len,
            step,
            count,
        })
    }

    /// Least member.
    pub fn min(&self) -> BigInt {
        match self {
            IndexBlock::Interval(i) => i.lo().clone(),
            IndexBlock::Progression { first_lo, .. } => first_lo.clone(),
        }
    }

    /// Greatest member.
    pub fn max(&self) -> BigInt {
        match self {
            IndexBlock::Interval(i) => i.hi().clone(),
            IndexBlock::Progression {
                first_lo,
                len,
                step,
                count,
            } => first_lo + step * (count - 1) + (len - 1),
        }
    }

    /// Total number of members.
    pub fn cardinality(&self) -> BigInt {
        match self {
            IndexBlock::Interval(i) => i.len(),
            IndexBlock::Progression { len, count, .. } => len * count,
        }
    }

    /// `|block intersect [0, n]|`, closed form.
    pub fn count_leq(&self, n: &BigInt) -> BigInt {
        match self {
            IndexBlock::Interval(i) => {
                if n < i.lo() {
                    BigInt::zero()
                } else if n >= i.hi() {
                    i.len()
                } else {
                    n - i.lo() + 1
                }
            }
            IndexBlock::Progression {
                first_lo,
                len,
                step,
                count,
            } => {
                if n < first_lo {
                    return BigInt::zero();
                }
                // t-th interval starts at first_lo + t*step
                let offset = n - first_lo;
                let t = &offset / step; // floor, offset >= 0
                let t_cap = if t >= count.clone() - 1 {
                    count.clone() - 1
                } else {
                    t
                };
                // intervals 0..t_cap start at or before n
                let full = &t_cap * len; // members of intervals 0..t_cap-1 plus current if full
                let into = &offset - &t_cap * step; // position of n inside interval t_cap's span
                let partial = if into >= len.clone() - 1 {
                    len.clone()
                } else {
                    into + 1
                };
                full + partial
            }
        }
    }

    pub fn contains(&self, x: &BigInt) -> bool {
        match self {
            IndexBlock::Interval(i) => i.contains(x),
            IndexBlock::Progression {
                first_lo,
                len,
                step,
                count,
            } => {
                if x < first_lo {
                    return false;
                }
                let offset = x - first_lo;
                let (t, r) = offset.div_rem(step);
                t < *count && r < *len
            }
        }
    }
}

/// A union of disjoint blocks sorted left to right.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IndexSet {
    blocks: Vec<IndexBlock>,
}

/// Exact density rows `(horizon, count, ratio)` at chosen checkpoints.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityProfile {
    pub rows: Vec<DensityRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityRow {
    pub horizon: String,
    pub count: String,
    /// Exact ratio as "num/den".
    pub ratio: String,
    /// Same ratio rounded to f64 for quick reading.
    pub ratio_f64: f64,
}

impl IndexSet {
    pub fn empty() -> Self {
        IndexSet { blocks: Vec::new() }
    }

    /// Build from blocks; sorts and checks pairwise disjointness.
    pub fn from_blocks(mut blocks: Vec<IndexBlock>) -> Result<Self> {
        blocks.sort_by(|a, b| a.min().cmp(&b.min()));
        for pair in blocks.windows(2) {
            if pair[0].max() >= pair[1].min() {
                return Err(Error::ShapeError(format!(
                    "overlapping index blocks near {}",
                    pair[1].min()
                )));
            }
        }
        Ok(IndexSet { blocks })
    }

    pub fn from_intervals(intervals: Vec<IntegerInterval>) -> Result<Self> {
        Self::from_blocks(intervals.into_iter().map(IndexBlock::Interval).collect())
    }

    pub fn blocks(&self) -> &[IndexBlock] {
        &self.blocks
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn cardinality(&self) -> BigInt {
        self.blocks.iter().map(|b| b.cardinality()).sum()
    }

    pub fn min(&self) -> Option<BigInt> {
        self.blocks.first().map(|b| b.min())
    }

    pub fn max(&self) -> Option<BigInt> {
        self.blocks.last().map(|b| b.max())
    }

    pub fn contains(&self, x: &BigInt) -> bool {
        // blocks are sorted; binary search on min
        let mut lo = 0usize;
        let mut hi = self.blocks.len();
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.blocks[mid].min() <= *x {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo > 0 && self.blocks[lo - 1].contains(x)
    }

    /// `|A intersect [0, n]|` exactly.
    pub fn count_leq(&self, n: &BigInt) -> BigInt {
        self.blocks.iter().map(|b| b.count_leq(n)).sum()
    }

    /// Exact density `|A intersect [0, n]| / (n + 1)`.
    pub fn density_at(&self, n: &BigInt) -> BigRational {
        BigRational::new(self.count_leq(n), n + 1)
    }

    /// Exact density of the complement within `{0, 1, 2, ...}`:
    /// `(n + 1 - |A intersect [0, n]|) / (n + 1)`.
    pub fn complement_density_at(&self, n: &BigInt) -> BigRational {
        BigRational::new(n + 1 - self.count_leq(n), n + 1)
    }

    pub fn density_profile(&self, checkpoints: &[BigInt]) -> DensityProfile {
        let rows = checkpoints
            .iter()
            .map(|n| {
                let count = self.count_leq(n);
                let ratio = BigRational::new(count.clone(), n + 1);
                DensityRow {
                    horizon: n.to_string(),
                    count: count.to_string(),
                    ratio: ratio.to_string(),
                    ratio_f64: crate::core::weight::rational_to_f64(&ratio),
                }
            })
            .collect();
        DensityProfile { rows }
    }

    /// Translate every member by `offset` (members must stay >= 1).
    pub fn translate(&self, offset: &BigInt) -> Result<IndexSet> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| match b {
                IndexBlock::Interval(i) => i.translate(offset).map(IndexBlock::Interval),
                IndexBlock::Progression {
                    first_lo,
                    len,
                    step,
                    count,
                } => IndexBlock::progression(
                    first_lo + offset,
                    len.clone(),
                    step.clone(),
                    count.clone(),
                ),
            })
            .collect::<Result<Vec<_>>>()?;
        IndexSet::from_blocks(blocks)
    }

    /// Iterate members in increasing order; errors if the set is too large.
    pub fn iter_members(&self) -> Result<Vec<BigInt>> {
        use num::ToPrimitive;
        let total = self
            .cardinality()
            .to_usize()
            .ok_or_else(|| Error::BoundExceeded("index set too large to list".into()))?;
        if total > 50_000_000 {
            return Err(Error::BoundExceeded("index set too large to list".into()));
        }
        let mut out = Vec::with_capacity(total);
        for b in &self.blocks {
            match b {
                IndexBlock::Interval(i) => out.extend(i.iter()?),
                IndexBlock::Progression {
                    first_lo,
                    len,
                    step,
                    count,
                } => {
                    let c = count
                        .to_usize()
                        .ok_or_else(|| Error::BoundExceeded("progression too long".into()))?;
                    let l = len
                        .to_usize()
                        .ok_or_else(|| Error::BoundExceeded("interval too long".into()))?;
                    for t in 0..c {
                        let lo = first_lo + step * t;
                        for s in 0..l {
                            out.push(&lo + s);
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}
