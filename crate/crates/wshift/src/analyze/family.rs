//! Stability of block recovery across the parametrized weight family.
//!
//! A level scheduled under the weight with growth `r` still recovers its
//! payload when the orbit runs under a nearby growth `xi`. Two functionals
//! measure the perturbation over the level's blocks: the worst p-distortion
//! of the recovery products, and the collective p-mass the blocks from a
//! cutoff onward retain after a shift to the cutoff's start. Both are
//! continuous in `xi`, so a symmetric rational grid around `r` certifies a
//! radius within which they stay inside their budgets; the radius feeds the
//! separation between nearby growths that one orbit must serve at once.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive};
use std::collections::BTreeMap;

use crate::construct::fiber::{cw_index, rho_level};
use crate::construct::schedule::ScheduleVariant;
use crate::core::WeightSequence;
use crate::error::{Error, Result};
use crate::vectors::{ConstructionContext, PartKey};

/// Levels with more blocks than this make the grid evaluation intractable.
const BLOCK_CAP: u64 = 1024;

/// Hard floor for the certified radius search.
const RADIUS_FLOOR: f64 = 1e-12;

/// Block starts of the first even level carrying family `(n_star, q0)`
/// under growth `r`.
struct FamilyLevel {
    starts: Vec<BigInt>,
}

/// Depth error naming the first level that would carry family `(n_star,
/// q0)` under growth `r`, or its fiber coordinates when that level number
/// overflows.
pub(crate) fn deep_level_pointer(
    ctx: &mut ConstructionContext,
    n_star: u64,
    q0: u64,
    r: &BigRational,
) -> Error {
    let depth = ctx.schedule().depth();
    let place = (|| -> Result<String> {
        let j = cw_index(r)?
            .to_u64()
            .ok_or_else(|| Error::BoundExceeded("fiber index out of range".into()))?;
        let rank = ctx.partition().member(PartKey::Double(q0, j), 1)?;
        Ok(match rho_level(n_star, j, rank) {
            Ok(lvl) => format!("level {lvl}"),
            Err(_) => format!("a level of rank {rank} in fiber {j}"),
        })
    })();
    match place {
        Ok(place) => Error::NeedDeeperSchedule(format!(
            "growth {r} for family ({n_star}, {q0}) is first carried by \
             {place}, schedule stops at {depth}"
        )),
        Err(e) => e,
    }
}

fn resolve_family_level(
    ctx: &mut ConstructionContext,
    n_star: u64,
    q0: u64,
    r: &BigRational,
) -> Result<FamilyLevel> {
    if ctx.schedule().variant != ScheduleVariant::V3 {
        return Err(Error::PreconditionError(
            "growth-family analysis needs a parametrized schedule".into(),
        ));
    }
    if *r <= BigRational::one() {
        return Err(Error::PreconditionError(format!(
            "growth parameter must exceed 1, got {r}"
        )));
    }
    let wanted = WeightSequence::Parametric { mu: r.clone() };
    for k in (2..=ctx.schedule().depth()).filter(|k| k % 2 == 0) {
        let Some(asg) = ctx.level_assignment(k)? else {
            continue;
        };
        if asg.n != n_star || asg.q != q0 || asg.weight != wanted {
            continue;
        }
        let lvl = ctx.schedule().level(k)?;
        let count = lvl.count.to_u64().filter(|&c| c <= BLOCK_CAP).ok_or_else(|| {
            Error::CannotCertify(format!(
                "level {k} carries {} blocks, over the evaluation cap {BLOCK_CAP}",
                lvl.count
            ))
        })?;
        let mut starts = Vec::with_capacity(count as usize);
        for u in 1..=count {
            starts.push(lvl.interval(&BigInt::from(u))?.lo().clone());
        }
        return Ok(FamilyLevel { starts });
    }
    Err(deep_level_pointer(ctx, n_star, q0, r))
}

/// Worst p-distortion of the recovery products when the level scheduled
/// under growth `r` is run under growth `xi`.
///
/// For each block start `P` and payload slot `s`, the recovery multiplies
/// the coordinate by the weight product over `[s, P+s-2]`; the functional
/// takes the largest over blocks of `sum_s |prod(xi)/prod(r) - 1|^p`. It
/// vanishes at `xi = r`.
pub fn lambda_r(
    ctx: &mut ConstructionContext,
    n_star: u64,
    q0: u64,
    r: &BigRational,
    xi: &BigRational,
) -> Result<f64> {
    let fam = resolve_family_level(ctx, n_star, q0, r)?;
    let p = ctx.p();
    let w_xi = WeightSequence::Parametric { mu: xi.clone() };
    let w_r = WeightSequence::Parametric { mu: r.clone() };
    let mut worst = 0.0f64;
    for start in &fam.starts {
        let mut total = 0.0;
        for s in 1..=n_star {
            let lo = BigInt::from(s);
            let hi: BigInt = start + BigInt::from(s) - BigInt::from(2);
            if hi < lo {
                continue; // empty product, ratio exactly 1
            }
            let log_ratio = w_xi.log_product(&lo, &hi)? - w_r.log_product(&lo, &hi)?;
            total += (log_ratio.exp() - 1.0).abs().powf(p);
        }
        worst = worst.max(total);
    }
    Ok(worst)
}

/// Collective p-mass that blocks `m..` of the level scheduled under growth
/// `r` retain, under growth `xi`, after the shift landing block `m-1` at
/// the origin.
///
/// Block `u`'s slot `s` sits at `P_u + s - 1` with the `r`-products divided
/// out; the shift by `P_{m-1}` leaves the `xi`-product over the last
/// `P_{m-1} - 1` positions. The index `m` ranges over `2..=N`; `m = N + 1`
/// is the empty sum, 0 by convention.
pub fn gamma_rm(
    ctx: &mut ConstructionContext,
    n_star: u64,
    q0: u64,
    r: &BigRational,
    m: u64,
    xi: &BigRational,
) -> Result<f64> {
    let fam = resolve_family_level(ctx, n_star, q0, r)?;
    let n_blocks = fam.starts.len() as u64;
    if m == n_blocks + 1 {
        return Ok(0.0);
    }
    if m < 2 || m > n_blocks {
        return Err(Error::PreconditionError(format!(
            "cutoff {m} outside [2, {}]",
            n_blocks + 1
        )));
    }
    let p = ctx.p();
    let w_xi = WeightSequence::Parametric { mu: xi.clone() };
    let w_r = WeightSequence::Parametric { mu: r.clone() };
    let prev = &fam.starts[m as usize - 2];
    let mut total = 0.0;
    for start in &fam.starts[m as usize - 1..] {
        for s in 1..=n_star {
            let hi: BigInt = start + BigInt::from(s) - BigInt::from(2);
            let num_lo: BigInt = start + BigInt::from(s) - prev;
            let den_lo = BigInt::from(s);
            let num = if hi < num_lo {
                0.0
            } else {
                w_xi.log_product(&num_lo, &hi)?
            };
            let den = if hi < den_lo {
                0.0
            } else {
                w_r.log_product(&den_lo, &hi)?
            };
            total += (p * (num - den)).exp();
        }
    }
    Ok(total)
}

/// Verify both stability budgets on a symmetric `points`-wide rational grid
/// spanning `[r - radius, r + radius]`.
///
/// The distortion must stay below `lambda_bound` and every cutoff's
/// retained mass within `gamma_margin` of its value at `r`. A grid point at
/// or below 1 fails the check outright.
pub fn check_delta_r(
    ctx: &mut ConstructionContext,
    n_star: u64,
    q0: u64,
    r: &BigRational,
    radius: &BigRational,
    lambda_bound: f64,
    gamma_margin: f64,
    points: u32,
) -> Result<bool> {
    if points < 3 || points % 2 == 0 {
        return Err(Error::PreconditionError(format!(
            "grid needs an odd point count of at least 3, got {points}"
        )));
    }
    if !radius.is_positive() {
        return Err(Error::PreconditionError(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let n_blocks = resolve_family_level(ctx, n_star, q0, r)?.starts.len() as u64;
    let mut center = BTreeMap::new();
    for m in 2..=n_blocks {
        center.insert(m, gamma_rm(ctx, n_star, q0, r, m, r)?);
    }
    let mid = i64::from(points / 2);
    for i in -mid..=mid {
        let xi = r + radius * BigRational::new(BigInt::from(i), BigInt::from(mid));
        if xi <= BigRational::one() {
            return Ok(false);
        }
        if lambda_r(ctx, n_star, q0, r, &xi)? >= lambda_bound {
            return Ok(false);
        }
        for (m, at_r) in &center {
            let here = gamma_rm(ctx, n_star, q0, r, *m, &xi)?;
            if (here - at_r).abs() >= gamma_margin {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Certified stability radius around `r`: halve from `(mu - 1)/4` until a
/// 33-point grid keeps the distortion below `delta^p / (8 eps)^p` and every
/// cutoff's retained mass within `eta0_tilde / 4` of its center value.
///
/// The radius stays below `(mu - 1)/2` and keeps the whole grid above 1.
pub fn find_delta_r(
    ctx: &mut ConstructionContext,
    n_star: u64,
    q0: u64,
    r: &BigRational,
    mu: &BigRational,
    delta: f64,
    eta0_tilde: f64,
) -> Result<BigRational> {
    if *mu <= BigRational::one() {
        return Err(Error::PreconditionError(format!(
            "ambient growth parameter must exceed 1, got {mu}"
        )));
    }
    if !(delta > 0.0) || !(eta0_tilde > 0.0) {
        return Err(Error::PreconditionError(
            "tolerance and mass budget must be positive".into(),
        ));
    }
    let p = ctx.p();
    let eps = ctx.epsilon();
    let lambda_bound = delta.powf(p) / (8.0 * eps).powf(p);
    let gamma_margin = eta0_tilde / 4.0;
    let one = BigRational::one();
    let mut radius = (mu - &one) / BigRational::from_integer(4.into());
    loop {
        if crate::core::weight::rational_to_f64(&radius) < RADIUS_FLOOR {
            return Err(Error::SearchFailed(format!(
                "no stability radius above {RADIUS_FLOOR:e} around {r}"
            )));
        }
        let grid_fits = r - &radius > one;
        if grid_fits
            && check_delta_r(
                ctx,
                n_star,
                q0,
                r,
                &radius,
                lambda_bound,
                gamma_margin,
                33,
            )?
        {
            return Ok(radius);
        }
        radius /= BigRational::from_integer(2.into());
    }
}

/// Distinct growths approaching `mu`, each inside its own certified
/// stability radius.
///
/// The first candidate is `mu` itself; later ones add `1 / (den(mu) 2^j)`,
/// so denominators strictly increase. A candidate whose radius does not
/// reach back to `mu` is dropped; a candidate whose level is out of reach
/// propagates the depth error.
pub fn build_v_sequence(
    ctx: &mut ConstructionContext,
    n_star: u64,
    q0: u64,
    mu: &BigRational,
    count: usize,
    delta: f64,
    eta0_tilde: f64,
) -> Result<Vec<(BigRational, BigRational)>> {
    if count == 0 {
        return Err(Error::PreconditionError("empty sequence requested".into()));
    }
    let mut out: Vec<(BigRational, BigRational)> = Vec::with_capacity(count);
    let den = mu.denom().clone();
    let mut attempts = 0usize;
    let mut next_pow = BigInt::one();
    loop {
        let v = if attempts == 0 {
            mu.clone()
        } else {
            let v = mu + BigRational::new(BigInt::one(), &den * &next_pow);
            next_pow *= 2;
            v
        };
        attempts += 1;
        if attempts > count + 64 {
            return Err(Error::SearchFailed(format!(
                "only {} of {count} growths accepted a stability radius \
                 containing {mu}",
                out.len()
            )));
        }
        let dv = find_delta_r(ctx, n_star, q0, &v, mu, delta, eta0_tilde)?;
        if (&v - mu).abs() < dv {
            out.push((v, dv));
            if out.len() == count {
                return Ok(out);
            }
        }
    }
}
