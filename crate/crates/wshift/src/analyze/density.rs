//! Density certificates: the constructed vector cannot return to the first
//! coordinate often, because its support lives inside the scheduled blocks
//! and their complement fills up.
//!
//! Two statements are certified, both by exact rational arithmetic. Against
//! frequent returns: just before each level starts, the complement of the
//! full block set has density at least `(k-1)/k`, so its upper density is 1.
//! Against even upper-frequent returns (single-block schedules): at the end
//! of each level's first block, the complement of the first-block set has
//! density at least `(k-1)/k`, and that point is where the density over the
//! whole inter-level stretch is smallest, so the lower density is 1. The
//! first-coordinate claim itself is structural: `pi_1` of the `n`-th shift
//! image reads coordinate `n+1`, which vanishes for every `n+1` outside the
//! block set whatever the weight, and is spot-checked numerically.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer, One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::construct::fiber::tau;
use crate::construct::schedule::{IntervalSchedule, ScheduleVariant};
use crate::core::weight::rational_to_f64;
use crate::core::{IndexSet, SparseVector, WeightSequence};
use crate::error::{Error, Result};
use crate::shift::apply_shift;

/// One checkpoint of the frequent-return avoidance chain.
#[derive(Debug, Clone, Serialize)]
pub struct AvoidanceRow {
    pub level: u64,
    /// Last index counted, one short of the level's start.
    pub horizon: String,
    /// Complement members within the horizon.
    pub complement: String,
    /// Exact complement density at the horizon.
    pub ratio: String,
    pub ratio_f64: f64,
    /// `(start_k - end_{k-1}) / start_k`, the structural lower bound.
    pub block_bound: String,
    /// `(k-1)/k`.
    pub floor: String,
    pub pass: bool,
}

/// Certificate that the vector's orbit leaves the first coordinate at rest
/// outside a set of upper density 0.
#[derive(Debug, Clone, Serialize)]
pub struct AvoidanceReport {
    /// Every support position lies inside the block set.
    pub support_confined: bool,
    /// Sampled exponents outside the block set whose source coordinate was
    /// verified to vanish.
    pub vanishing_checked: u64,
    /// Subset of those where the full shift image was also evaluated.
    pub shift_checked: u64,
    pub rows: Vec<AvoidanceRow>,
    pub pass: bool,
}

/// One checkpoint of the first-block avoidance chain.
#[derive(Debug, Clone, Serialize)]
pub struct FirstBlockRow {
    pub level: u64,
    /// End of the level's first block, where the density dips lowest.
    pub horizon: String,
    /// Exact complement density at the horizon.
    pub ratio: String,
    pub ratio_f64: f64,
    /// `(start_k - end_{k-1}) / (start_k + size_k)`.
    pub block_bound: String,
    /// Same numerator over `start_k + max{end_{k-1}, tau(k)}`.
    pub growth_bound: String,
    /// `(k-1)/k`.
    pub floor: String,
    /// Whether the horizon realizes the minimum density over the stretch up
    /// to the next level; absent for the last scheduled level.
    pub min_at_horizon: Option<bool>,
    pub pass: bool,
}

/// Certificate that the complement of the first-block set has lower
/// density 1, shutting out even upper-frequent returns.
#[derive(Debug, Clone, Serialize)]
pub struct FirstBlockReport {
    pub support_confined: bool,
    pub rows: Vec<FirstBlockRow>,
    pub pass: bool,
}

/// Uniform-enough draw from `[0, bound)`; the callers only need coverage,
/// not exact uniformity.
fn random_below(rng: &mut ChaCha8Rng, bound: &BigInt) -> BigInt {
    let limbs = (bound.bits() as usize).div_ceil(64) + 1;
    let mut v = BigInt::zero();
    for _ in 0..limbs {
        v = (v << 64) | BigInt::from(rng.next_u64());
    }
    v.mod_floor(bound)
}

fn support_confined(x: &SparseVector, m: &IndexSet) -> bool {
    x.entries()
        .filter(|(_, c)| c.norm() != 0.0)
        .all(|(k, _)| m.contains(k))
}

fn validate_checkpoints(schedule: &IntervalSchedule, checkpoints: &[u64]) -> Result<()> {
    if checkpoints.is_empty() {
        return Err(Error::PreconditionError("no checkpoint levels".into()));
    }
    for &k in checkpoints {
        if k < 2 || k > schedule.depth() {
            return Err(Error::PreconditionError(format!(
                "checkpoint level {k} outside [2, {}]",
                schedule.depth()
            )));
        }
    }
    Ok(())
}

fn ratio_strings(r: &BigRational) -> (String, f64) {
    (r.to_string(), rational_to_f64(r))
}

/// Certify that shift exponents returning mass to the first coordinate have
/// upper density 0 in the integers.
///
/// Structural part: `supp(x0)` inside the block set, and `samples` drawn
/// exponents `n` with `n+1` outside it have a vanishing source coordinate
/// (a few of them double-checked through the full shift image). Density
/// part: at each checkpoint level `k`, the complement density one short of
/// the level's start is at least `(start_k - end_{k-1}) / start_k`, which is
/// at least `(k-1)/k`, both exactly.
pub fn non_fhc_certificate(
    schedule: &IntervalSchedule,
    x0: &SparseVector,
    checkpoints: &[u64],
    samples: u64,
    seed: u64,
) -> Result<AvoidanceReport> {
    validate_checkpoints(schedule, checkpoints)?;
    let m = schedule.index_set()?;
    let confined = support_confined(x0, &m);

    // first-coordinate vanishing is weight-free, so a fixed growth profile
    // serves the numeric spot check when the schedule leaves it open
    let w = schedule.weight.clone().unwrap_or(WeightSequence::Parametric {
        mu: BigRational::from_integer(2.into()),
    });

    let mut rows = Vec::new();
    for &k in checkpoints {
        let start = schedule.level(k)?.start.clone();
        let prev_end = schedule.level(k - 1)?.last_end();
        let horizon: BigInt = &start - BigInt::one();
        let complement: BigInt = &start - m.count_leq(&horizon);
        let ratio = BigRational::new(complement.clone(), start.clone());
        let block_bound = BigRational::new(&start - &prev_end, start.clone());
        let floor = BigRational::new(BigInt::from(k - 1), BigInt::from(k));
        let pass = ratio >= block_bound && block_bound >= floor;
        let (ratio_s, ratio_f64) = ratio_strings(&ratio);
        rows.push(AvoidanceRow {
            level: k,
            horizon: horizon.to_string(),
            complement: complement.to_string(),
            ratio: ratio_s,
            ratio_f64,
            block_bound: block_bound.to_string(),
            floor: floor.to_string(),
            pass,
        });
    }

    let far = checkpoints
        .iter()
        .map(|&k| schedule.level(k).map(|l| l.start.clone()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max()
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vanishing_checked = 0u64;
    let mut shift_checked = 0u64;
    let mut vanishing_ok = true;
    let mut draws = 0u64;
    while vanishing_checked < samples && draws < samples.saturating_mul(64) {
        draws += 1;
        let n = random_below(&mut rng, &(&far - BigInt::one())) + BigInt::one();
        let source: BigInt = &n + BigInt::one();
        if m.contains(&source) {
            continue; // exponent inside the claim's excluded set
        }
        if x0.coordinate(&source).norm() != 0.0 {
            vanishing_ok = false;
            break;
        }
        if vanishing_checked % 128 == 0 {
            let image = apply_shift(&w, x0, &n)?;
            if image.coordinate(&BigInt::one()).norm() != 0.0 {
                vanishing_ok = false;
                break;
            }
            shift_checked += 1;
        }
        vanishing_checked += 1;
    }
    if vanishing_checked < samples && vanishing_ok {
        return Err(Error::Insufficient(format!(
            "only {vanishing_checked} of {samples} draws landed outside the \
             block set"
        )));
    }

    let pass = confined && vanishing_ok && rows.iter().all(|r| r.pass);
    Ok(AvoidanceReport {
        support_confined: confined,
        vanishing_checked,
        shift_checked,
        rows,
        pass,
    })
}

/// Certify that the complement of the first-block set has lower density 1,
/// on a single-block schedule.
///
/// At each checkpoint level `k` the complement density at the first block's
/// end is at least `(start_k - end_{k-1}) / (start_k + size_k)`, which the
/// level sizes push down to the same numerator over
/// `start_k + max{end_{k-1}, tau(k)}`, which is at least `(k-1)/k`; every
/// step is an exact rational comparison. The block end is also verified to
/// minimize the density over `[start_k, start_{k+1})` at the interval's
/// breakpoints and `samples` drawn interior points.
pub fn non_ufhc_certificate(
    schedule: &IntervalSchedule,
    x0: &SparseVector,
    checkpoints: &[u64],
    samples: u64,
    seed: u64,
) -> Result<FirstBlockReport> {
    if schedule.variant != ScheduleVariant::V2 {
        return Err(Error::PreconditionError(
            "first-block avoidance needs a single-block schedule".into(),
        ));
    }
    validate_checkpoints(schedule, checkpoints)?;
    let mut firsts = Vec::new();
    for k in 1..=schedule.depth() {
        firsts.push(schedule.level(k)?.interval(&BigInt::one())?);
    }
    let m = IndexSet::from_intervals(firsts)?;
    let confined = support_confined(x0, &m);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for &k in checkpoints {
        let lvl = schedule.level(k)?;
        let start = lvl.start.clone();
        let size = lvl.size.clone();
        let prev_end = schedule.level(k - 1)?.first_end();
        let g = lvl.first_end();
        let ratio = m.complement_density_at(&g);
        let numer: BigInt = &start - &prev_end;
        let block_bound = BigRational::new(numer.clone(), &start + &size);
        // odd levels copy the previous end as their size, so only even ones
        // bring the payload length into the cap
        let cap = if k % 2 == 0 {
            prev_end.max(BigInt::from(tau(k)?))
        } else {
            prev_end
        };
        let growth_bound = BigRational::new(numer, &start + &cap);
        let floor = BigRational::new(BigInt::from(k - 1), BigInt::from(k));

        let min_at_horizon = if k < schedule.depth() {
            let next_start = schedule.level(k + 1)?.start.clone();
            let here = m.complement_density_at(&g);
            let mut probes = vec![
                start.clone(),
                g.clone(),
                &g + BigInt::one(),
                &next_start - BigInt::one(),
            ];
            let span: BigInt = &next_start - &start;
            for _ in 0..samples {
                probes.push(&start + random_below(&mut rng, &span));
            }
            Some(
                probes
                    .iter()
                    .all(|s| m.complement_density_at(s) >= here),
            )
        } else {
            None
        };

        let pass = ratio >= block_bound
            && block_bound >= growth_bound
            && growth_bound >= floor
            && min_at_horizon != Some(false);
        let (ratio_s, ratio_f64) = ratio_strings(&ratio);
        rows.push(FirstBlockRow {
            level: k,
            horizon: g.to_string(),
            ratio: ratio_s,
            ratio_f64,
            block_bound: block_bound.to_string(),
            growth_bound: growth_bound.to_string(),
            floor: floor.to_string(),
            min_at_horizon,
            pass,
        });
    }

    let pass = confined && rows.iter().all(|r| r.pass);
    Ok(FirstBlockReport {
        support_confined: confined,
        rows,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::schedule::build_schedule;
    use crate::core::Field;
    use crate::vectors::ConstructionContext;
    use num::complex::Complex64;
    use std::str::FromStr;

    fn bi(x: i64) -> BigInt {
        BigInt::from(x)
    }

    fn br(n: i64, d: i64) -> BigRational {
        BigRational::new(bi(n), bi(d))
    }

    fn desk_lambda() -> Vec<Complex64> {
        vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.02, 0.0),
            Complex64::new(0.005, 0.0),
        ]
    }

    #[test]
    fn pattern_weight_orbit_avoids_the_first_coordinate() {
        let s = build_schedule(
            ScheduleVariant::V1,
            Some(WeightSequence::Pattern),
            2.0,
            6,
            None,
        )
        .unwrap();
        let mut ctx = ConstructionContext::new(s, 0.5, Field::Real, bi(20_000)).unwrap();
        let x0 = ctx.apply_t(&desk_lambda()).unwrap().vector;
        let report =
            non_fhc_certificate(ctx.schedule(), &x0, &[2, 3, 4, 5, 6], 1000, 41).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.support_confined);
        assert_eq!(report.vanishing_checked, 1000);
        assert!(report.shift_checked >= 8);
        // the second level starts at 6 and only 1 is occupied below it
        let first = &report.rows[0];
        assert_eq!(first.horizon, "5");
        assert_eq!(BigRational::from_str(&first.ratio).unwrap(), br(5, 6));
        assert_eq!(BigRational::from_str(&first.block_bound).unwrap(), br(5, 6));
        assert_eq!(BigRational::from_str(&first.floor).unwrap(), br(1, 2));
    }

    #[test]
    fn support_escaping_the_blocks_fails_the_certificate() {
        let s = build_schedule(
            ScheduleVariant::V1,
            Some(WeightSequence::Pattern),
            2.0,
            6,
            None,
        )
        .unwrap();
        let mut ctx = ConstructionContext::new(s, 0.5, Field::Real, bi(20_000)).unwrap();
        let mut x0 = ctx.apply_t(&desk_lambda()).unwrap().vector;
        x0.set(bi(2), Complex64::new(0.1, 0.0)).unwrap();
        let report = non_fhc_certificate(ctx.schedule(), &x0, &[2], 10, 41).unwrap();
        assert!(!report.support_confined);
        assert!(!report.pass);
    }

    #[test]
    fn single_block_complement_density_matches_the_trace() {
        let s = build_schedule(
            ScheduleVariant::V2,
            Some(WeightSequence::Pattern),
            2.0,
            8,
            None,
        )
        .unwrap();
        let horizon = s.level(8).unwrap().last_end();
        let mut ctx = ConstructionContext::new(s, 0.5, Field::Real, horizon).unwrap();
        let x0 = ctx.apply_t(&desk_lambda()).unwrap().vector;
        let report =
            non_ufhc_certificate(ctx.schedule(), &x0, &[2, 3, 4, 5, 6, 7, 8], 32, 43).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.support_confined);
        let expected = [
            br(5, 7),
            br(61, 69),
            br(468, 478),
            br(4283, 4770),
            br(51_972, 52_460),
            br(1_048_087, 1_101_034),
        ];
        for (row, want) in report.rows.iter().zip(&expected) {
            assert_eq!(
                BigRational::from_str(&row.ratio).unwrap(),
                *want,
                "level {}",
                row.level
            );
            assert_eq!(row.min_at_horizon, Some(true));
        }
        assert_eq!(report.rows[6].min_at_horizon, None);
    }

    #[test]
    fn first_block_certificate_rejects_multi_block_schedules() {
        let s = build_schedule(
            ScheduleVariant::V1,
            Some(WeightSequence::Pattern),
            2.0,
            6,
            None,
        )
        .unwrap();
        let x0 = SparseVector::new(2.0, Field::Real).unwrap();
        assert!(matches!(
            non_ufhc_certificate(&s, &x0, &[2], 8, 1),
            Err(Error::PreconditionError(_))
        ));
    }

    #[test]
    fn parametrized_orbit_avoids_the_first_coordinate() {
        let s = build_schedule(ScheduleVariant::V3, None, 2.0, 5, None).unwrap();
        let horizon = s.level(5).unwrap().first_end();
        let mut ctx = ConstructionContext::new(s, 0.5, Field::Real, horizon).unwrap();
        let x0 = ctx.apply_t(&desk_lambda()).unwrap().vector;
        let report = non_fhc_certificate(ctx.schedule(), &x0, &[2, 3, 4, 5], 200, 47).unwrap();
        assert!(report.pass, "{report:?}");
        for (row, &k) in report.rows.iter().zip(&[2u64, 3, 4, 5]) {
            let floor = BigRational::from_str(&row.floor).unwrap();
            assert_eq!(floor, br(k as i64 - 1, k as i64));
            assert!(BigRational::from_str(&row.ratio).unwrap() >= floor);
        }
    }

    #[test]
    fn checkpoints_outside_the_depth_are_rejected() {
        let s = build_schedule(
            ScheduleVariant::V1,
            Some(WeightSequence::Pattern),
            2.0,
            6,
            None,
        )
        .unwrap();
        let x0 = SparseVector::new(2.0, Field::Real).unwrap();
        for bad in [vec![], vec![1], vec![7]] {
            assert!(matches!(
                non_fhc_certificate(&s, &x0, &bad, 1, 1),
                Err(Error::PreconditionError(_))
            ));
        }
    }
}
