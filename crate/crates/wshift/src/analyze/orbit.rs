//! Return sets of truncated orbits, and the return-time scaffold that one
//! payload family cuts out of a schedule.
//!
//! A block whose interval starts at position `l` recovers its payload at
//! coordinate 1 after exactly `l - 1` shifts, so every block of every level
//! owned by a `(dimension, part)` pair contributes one canonical return
//! candidate. The scaffold is the set of those candidates; its counting
//! density along the schedule has an exact floor of `1 / (2 step)`.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive};
use serde::Serialize;

use crate::core::weight::rational_to_f64;
use crate::core::{IndexBlock, IndexSet, IntegerInterval, SparseVector, WeightSequence};
use crate::error::{Error, Result};
use crate::shift::{apply_shift, distance_p};
use crate::vectors::ConstructionContext;

/// Shift exponents from `candidates` that bring `x` within `delta` of `y0`,
/// each verified by direct evaluation of the shifted distance.
pub fn return_set(
    w: &WeightSequence,
    x: &SparseVector,
    y0: &SparseVector,
    delta: f64,
    candidates: &IndexSet,
) -> Result<IndexSet> {
    if !(delta > 0.0) {
        return Err(Error::PreconditionError(format!(
            "return tolerance must be positive, got {delta}"
        )));
    }
    let mut hits = Vec::new();
    for m in candidates.iter_members()? {
        let d = distance_p(&apply_shift(w, x, &m)?, y0)?;
        if d < delta {
            hits.push(IndexBlock::Interval(IntegerInterval::point(m)?));
        }
    }
    IndexSet::from_blocks(hits)
}

/// Shifted distances at arbitrary exponents, zero included.
///
/// Index sets live inside the positive integers, so [`return_set`] cannot
/// ask about the identity shift; this variant can.
pub fn return_distances(
    w: &WeightSequence,
    x: &SparseVector,
    y0: &SparseVector,
    candidates: &[BigInt],
) -> Result<Vec<(BigInt, f64)>> {
    let mut out = Vec::with_capacity(candidates.len());
    for m in candidates {
        if m.is_negative() {
            return Err(Error::PreconditionError(format!(
                "shift exponent must be >= 0, got {m}"
            )));
        }
        let d = distance_p(&apply_shift(w, x, m)?, y0)?;
        out.push((m.clone(), d));
    }
    Ok(out)
}

/// Even levels owned by the `(n_star, q0)` family, in increasing order.
pub(crate) fn family_levels(
    ctx: &ConstructionContext,
    n_star: u64,
    q0: u64,
) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for k in (2..=ctx.schedule().depth()).filter(|k| k % 2 == 0) {
        if let Some(asg) = ctx.level_assignment(k)? {
            if asg.n == n_star && asg.q == q0 {
                out.push(k);
            }
        }
    }
    Ok(out)
}

/// The first `count` return candidates of the `(n_star, q0)` family: one
/// below each block's left endpoint, level by level.
pub fn schedule_s(
    ctx: &ConstructionContext,
    n_star: u64,
    q0: u64,
    count: u64,
) -> Result<IndexSet> {
    if count == 0 {
        return Err(Error::PreconditionError(
            "requested an empty return scaffold".into(),
        ));
    }
    let mut blocks = Vec::new();
    let mut have = BigInt::from(0u32);
    let want = BigInt::from(count);
    for k in family_levels(ctx, n_star, q0)? {
        let lvl = ctx.schedule().level(k)?;
        let take = (&want - &have).min(lvl.count.clone());
        let first = &lvl.start - 1;
        if take.is_one() {
            blocks.push(IndexBlock::Interval(IntegerInterval::point(first)?));
        } else {
            blocks.push(IndexBlock::progression(
                first,
                BigInt::one(),
                lvl.step.clone(),
                take.clone(),
            )?);
        }
        have += take;
        if have == want {
            break;
        }
    }
    if have < want {
        return Err(Error::NeedDeeperSchedule(format!(
            "family ({n_star}, {q0}) yields {have} return candidates within \
             depth {}, requested {count}",
            ctx.schedule().depth()
        )));
    }
    IndexSet::from_blocks(blocks)
}

/// One density checkpoint of the return scaffold.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyDensityRow {
    pub level: u64,
    /// One below the left endpoint of the level's last block.
    pub horizon: String,
    /// Scaffold members up to the horizon, exact.
    pub members: String,
    /// Exact density `members / (horizon + 1)`.
    pub ratio: String,
    pub ratio_f64: f64,
    /// The certified floor `1 / (2 step)`.
    pub floor: String,
    pub pass: bool,
}

/// Exact scaffold densities at every level of one family.
#[derive(Debug, Clone, Serialize)]
pub struct FamilyDensityReport {
    pub n_star: u64,
    pub q0: u64,
    /// Block step shared by the family's levels.
    pub step: String,
    pub rows: Vec<FamilyDensityRow>,
    pub pass: bool,
}

/// Exact counting density of the full scaffold at each family level's last
/// block, checked against the `1 / (2 step)` floor.
///
/// The floor is a consequence of the block-count rule: a level starts no
/// later than `step * (count + 1)`, so its last block begins by
/// `2 * step * count` and the level alone contributes `count` members below
/// that point.
pub fn scaffold_density(
    ctx: &ConstructionContext,
    n_star: u64,
    q0: u64,
) -> Result<FamilyDensityReport> {
    let levels = family_levels(ctx, n_star, q0)?;
    if levels.is_empty() {
        return Err(Error::NeedDeeperSchedule(format!(
            "no level of the first {} is owned by family ({n_star}, {q0})",
            ctx.schedule().depth()
        )));
    }
    let step = ctx.schedule().level(levels[0])?.step.clone();
    if !step.is_positive() {
        return Err(Error::CannotCertify(format!(
            "family ({n_star}, {q0}) has stepless levels, no density floor applies"
        )));
    }
    let mut total = BigInt::from(0u32);
    for &k in &levels {
        total += &ctx.schedule().level(k)?.count;
    }
    let scaffold = schedule_s(
        ctx,
        n_star,
        q0,
        total
            .to_u64()
            .ok_or_else(|| Error::BoundExceeded("scaffold too large to build".into()))?,
    )?;
    let floor = BigRational::new(BigInt::one(), 2 * &step);
    let mut rows = Vec::new();
    let mut pass = true;
    for &k in &levels {
        let lvl = ctx.schedule().level(k)?;
        if lvl.step != step {
            return Err(Error::InternalError(format!(
                "family ({n_star}, {q0}) mixes steps {step} and {} at level {k}",
                lvl.step
            )));
        }
        let horizon = lvl.last_start() - 1;
        let members = scaffold.count_leq(&horizon);
        let ratio = scaffold.density_at(&horizon);
        let ok = ratio >= floor;
        pass &= ok;
        rows.push(FamilyDensityRow {
            level: k,
            horizon: horizon.to_string(),
            members: members.to_string(),
            ratio: ratio.to_string(),
            ratio_f64: rational_to_f64(&ratio),
            floor: floor.to_string(),
            pass: ok,
        });
    }
    Ok(FamilyDensityReport {
        n_star,
        q0,
        step: step.to_string(),
        rows,
        pass,
    })
}
