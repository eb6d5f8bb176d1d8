//! Assembly of the image vectors `x_q` over a built schedule.
//!
//! `x_q` pins a unit coordinate at the right end of the first block of
//! level `2q - 1` and adds `epsilon` times a sum of embedded blocks. The
//! index partition assigns every even level to at most one `q`; the
//! level's fiber data picks the payload dimension and the enumeration rank
//! of the payload, and every block of the level carries that same payload.
//! Blocks past the working horizon or the per-level block cap are left
//! out, and their p-mass is certified into an explicit tail bound so
//! downstream certificates can carry the truncation error.

use crate::construct::fiber::{phi_inverse, rho};
use crate::construct::schedule::{IntervalSchedule, ScheduleVariant};
use crate::construct::tail::tail_log2;
use crate::core::sparse::log2_add;
use crate::core::weight::big_to_f64;
use crate::core::{Field, SparseVector, WeightSequence};
use crate::error::{Error, Result};
use crate::shift::{realize_block, theta_embed, BlockVector};
use crate::vectors::ball::{QScalar, RationalBallEnumerator};
use crate::vectors::partition::{PartKey, PartitionMap};
use num::bigint::BigInt;
use num::complex::Complex64;
use num::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Ownership of one even level: which `x_q` realizes it and with what.
#[derive(Debug, Clone)]
pub struct LevelAssignment {
    pub level: u64,
    /// Payload dimension (equals the block length).
    pub n: u64,
    /// The `q` whose vector carries this level.
    pub q: u64,
    /// Rank of the level's fiber index inside its part; picks the payload.
    pub t: u64,
    /// Weight the payload is embedded under.
    pub weight: WeightSequence,
}

/// One materialized block of some `x_q`, before the `epsilon` scaling.
#[derive(Debug, Clone)]
pub struct RealizedBlock {
    pub level: u64,
    /// 1-based block number within the level.
    pub u: u64,
    /// Payload dimension.
    pub n: u64,
    pub block: BlockVector,
}

/// A maximal run of dropped blocks at the end of one level, with a
/// certified bound on its p-mass.
#[derive(Debug, Clone)]
pub struct OmittedRun {
    pub level: u64,
    pub n: u64,
    /// First dropped block number.
    pub from_u: u64,
    /// Left endpoint of the first dropped block.
    pub from_position: BigInt,
    /// log2 of a certified upper bound for the run's p-mass.
    pub mass_log2: f64,
    /// Weight sequence the dropped blocks would have been embedded with.
    pub weight: WeightSequence,
}

/// A truncated `x_q` together with everything needed to reason about what
/// was left out.
#[derive(Debug, Clone)]
pub struct XqBuild {
    pub q: u64,
    /// Index of the unit coordinate.
    pub distinguished: BigInt,
    /// The truncated vector, unit coordinate plus `epsilon` times blocks.
    pub vector: SparseVector,
    /// p-norm of the realized block sum (must stay at most 1).
    pub tilde_norm: f64,
    /// Certified p-norm bound on the dropped part of the exact `x_q`.
    pub tail_bound: f64,
    /// log2 of the certified total p-mass of everything dropped, before the
    /// `epsilon` scale and the 1/p root. `tail_bound` is derived from it.
    pub omitted_mass_log2: f64,
    pub blocks: Vec<RealizedBlock>,
    pub omitted: Vec<OmittedRun>,
}

/// Image of a finitely supported coefficient vector under the transfer
/// map, truncated the same way its `x_q` summands are.
#[derive(Debug, Clone)]
pub struct TransferImage {
    pub vector: SparseVector,
    /// Certified p-norm bound on the dropped part of the exact image.
    pub tail_bound: f64,
}

/// Observed norm ratios of the transfer map over random coefficients.
#[derive(Debug, Clone)]
pub struct IsometryReport {
    pub trials: u64,
    pub support_cap: u64,
    pub seed: u64,
    pub epsilon: f64,
    /// Smallest and largest observed `|T(lambda)|_p / |lambda|_p`.
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Largest certified truncation error relative to `|lambda|_p`.
    pub max_relative_tail: f64,
}

/// Builder and cache for the vectors of one construction run.
///
/// The context owns the schedule, the field and scaling conventions, the
/// index partition matching the schedule's fiber kind, the shared payload
/// enumerators (one per dimension), and the truncation policy: blocks are
/// materialized only while they fit below `horizon`, and at most `u_cap`
/// blocks per level.
#[derive(Debug, Clone)]
pub struct ConstructionContext {
    schedule: IntervalSchedule,
    epsilon: f64,
    field: Field,
    horizon: BigInt,
    u_cap: u64,
    q_cap: u64,
    partition: PartitionMap,
    enumerators: BTreeMap<u64, RationalBallEnumerator>,
    builds: BTreeMap<u64, XqBuild>,
}

impl ConstructionContext {
    pub fn new(
        schedule: IntervalSchedule,
        epsilon: f64,
        field: Field,
        horizon: BigInt,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::PreconditionError(format!(
                "epsilon must lie in (0, 1), got {epsilon}"
            )));
        }
        if horizon < BigInt::one() {
            return Err(Error::PreconditionError(format!(
                "horizon must be >= 1, got {horizon}"
            )));
        }
        let partition = match schedule.variant {
            ScheduleVariant::V1 | ScheduleVariant::V2 => PartitionMap::single(),
            ScheduleVariant::V3 => PartitionMap::double(),
        };
        Ok(ConstructionContext {
            schedule,
            epsilon,
            field,
            horizon,
            u_cap: 8,
            q_cap: 8,
            partition,
            enumerators: BTreeMap::new(),
            builds: BTreeMap::new(),
        })
    }

    /// Replace the per-level block cap (defaults to 8).
    pub fn with_block_cap(mut self, u_cap: u64) -> Result<Self> {
        if u_cap < 1 {
            return Err(Error::PreconditionError("block cap must be >= 1".into()));
        }
        self.u_cap = u_cap;
        self.builds.clear();
        Ok(self)
    }

    /// Replace the largest admissible `q` (defaults to 8).
    pub fn with_part_cap(mut self, q_cap: u64) -> Result<Self> {
        if q_cap < 1 {
            return Err(Error::PreconditionError("part cap must be >= 1".into()));
        }
        self.q_cap = q_cap;
        self.builds.clear();
        Ok(self)
    }

    pub fn schedule(&self) -> &IntervalSchedule {
        &self.schedule
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn p(&self) -> f64 {
        self.schedule.p
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn horizon(&self) -> &BigInt {
        &self.horizon
    }

    pub fn u_cap(&self) -> u64 {
        self.u_cap
    }

    pub fn q_cap(&self) -> u64 {
        self.q_cap
    }

    pub fn partition(&self) -> &PartitionMap {
        &self.partition
    }

    /// Who owns level `k`. Odd levels carry no payload; a parametrized
    /// level whose fiber index sits in a part of a different rational is
    /// reserved but never used, and also reports `None`.
    pub fn level_assignment(&self, k: u64) -> Result<Option<LevelAssignment>> {
        if k > self.schedule.depth() {
            return Err(Error::NeedDeeperSchedule(format!(
                "level {k} past schedule depth {}",
                self.schedule.depth()
            )));
        }
        if k < 2 || k % 2 != 0 {
            return Ok(None);
        }
        match self.schedule.variant {
            ScheduleVariant::V1 | ScheduleVariant::V2 => {
                let (n, i) = phi_inverse(k)?;
                let (key, t) = self.partition.locate(i)?;
                let PartKey::Single(q) = key else {
                    return Err(Error::InternalError("single partition gave a pair".into()));
                };
                let weight = self.schedule.weight.clone().ok_or_else(|| {
                    Error::InternalError("two-adic schedule lost its weight".into())
                })?;
                Ok(Some(LevelAssignment {
                    level: k,
                    n: n as u64,
                    q,
                    t,
                    weight,
                }))
            }
            ScheduleVariant::V3 => {
                let rv = rho(k)?;
                let (key, t) = self.partition.locate(rv.rank)?;
                let PartKey::Double(q, j) = key else {
                    return Err(Error::InternalError("double partition gave a single".into()));
                };
                // the part's rational must be the level's rational; other
                // fiber indices leave the level reserved but unused
                if j != rv.j {
                    return Ok(None);
                }
                Ok(Some(LevelAssignment {
                    level: k,
                    n: rv.n,
                    q,
                    t,
                    weight: WeightSequence::Parametric { mu: rv.r },
                }))
            }
        }
    }

    fn ball_mut(&mut self, n: u64) -> Result<&mut RationalBallEnumerator> {
        if !self.enumerators.contains_key(&n) {
            let e = RationalBallEnumerator::new(n as usize, self.schedule.p, self.field)?;
            self.enumerators.insert(n, e);
        }
        Ok(self.enumerators.get_mut(&n).expect("just inserted"))
    }

    /// The `t`-th payload (1-based) of dimension `n`, as scalars ready to
    /// embed.
    pub fn payload(&mut self, n: u64, t: u64) -> Result<Vec<Complex64>> {
        if t < 1 {
            return Err(Error::PreconditionError("payload rank starts at 1".into()));
        }
        self.ball_mut(n)?.tuple_at_complex(t as usize - 1)
    }

    /// Same payload in exact rational form.
    pub fn payload_exact(&mut self, n: u64, t: u64) -> Result<Vec<QScalar>> {
        if t < 1 {
            return Err(Error::PreconditionError("payload rank starts at 1".into()));
        }
        Ok(self.ball_mut(n)?.tuple_at(t as usize - 1)?.to_vec())
    }

    /// Build the truncated `x_q`, caching the result.
    ///
    /// The tail bound covers three sources, all in p-mass before the final
    /// `epsilon` scaling and `1/p`-th root: blocks dropped by the block
    /// cap, blocks dropped by the horizon, and levels past the schedule
    /// depth. For the first two, a block of dimension `n` embedded at `lo`
    /// has p-mass at most `sup(w)^{(n-1)p} / prefix(lo-1)^p` and the
    /// dropped `lo` are distinct, so the run is dominated termwise by the
    /// certified series with numerator `(2 sup(w))^{np}`. For the third,
    /// the spacing conditions force any valid deeper level to start past a
    /// threshold gap measured from the previous level's first block end
    /// `g`, which caps its whole-level p-mass at `2^{-g}`; since `g` grows
    /// by at least 1 per level, everything past the schedule sums below
    /// `2^{1 - g(depth)}`. That allowance is conditional on the extension
    /// satisfying the same validation conditions as the built prefix.
    pub fn build_xq(&mut self, q: u64) -> Result<XqBuild> {
        if q < 1 || q > self.q_cap {
            return Err(Error::PreconditionError(format!(
                "q = {q} outside 1..={}; raise the part cap to go further",
                self.q_cap
            )));
        }
        if let Some(b) = self.builds.get(&q) {
            return Ok(b.clone());
        }
        let dist_level = 2 * q - 1;
        let depth = self.schedule.depth();
        if dist_level > depth {
            return Err(Error::NeedDeeperSchedule(format!(
                "x_{q} pins its unit coordinate on level {dist_level}, schedule stops at {depth}"
            )));
        }
        let distinguished = self.schedule.level(dist_level)?.first_end();
        if self.horizon < distinguished {
            return Err(Error::HorizonTooSmall(format!(
                "x_{q} needs coordinate {distinguished}, horizon is {}",
                self.horizon
            )));
        }
        let p = self.schedule.p;
        let mut tilde = SparseVector::new(p, self.field)?;
        let mut blocks = Vec::new();
        let mut omitted = Vec::new();
        let mut tail_terms: Vec<f64> = Vec::new();
        for k in (2..=depth).filter(|k| k % 2 == 0) {
            let Some(asg) = self.level_assignment(k)? else {
                continue;
            };
            if asg.q != q {
                continue;
            }
            let lvl = self.schedule.level(k)?.clone();
            let payload = self.payload(asg.n, asg.t)?;
            let u_limit = if lvl.count > BigInt::from(self.u_cap) {
                self.u_cap
            } else {
                lvl.count.to_u64().expect("count fits after cap check")
            };
            let mut realized: u64 = 0;
            for u in 1..=u_limit {
                let interval = lvl.interval(&BigInt::from(u))?;
                if interval.hi() > &self.horizon {
                    break;
                }
                let block = theta_embed(&asg.weight, interval, payload.clone())?;
                let rb = realize_block(&block, p, self.field)?;
                tilde = tilde.add_scaled(Complex64::one(), &rb)?;
                blocks.push(RealizedBlock {
                    level: k,
                    u,
                    n: asg.n,
                    block,
                });
                realized = u;
            }
            if BigInt::from(realized) < lvl.count {
                let from_u = realized + 1;
                let from_position = &lvl.start + BigInt::from(from_u - 1) * &lvl.step;
                let tail_start = &from_position - 1;
                let sup = asg.weight.sup_norm()?;
                let num_log2 = asg.n as f64 * p * (1.0 + sup.log2());
                let tb = tail_log2(&asg.weight, p, num_log2, &tail_start)?;
                tail_terms.push(tb.log2_bound);
                omitted.push(OmittedRun {
                    level: k,
                    n: asg.n,
                    from_u,
                    from_position,
                    mass_log2: tb.log2_bound,
                    weight: asg.weight.clone(),
                });
            }
        }
        // allowance for every level past the schedule depth
        let g_last = self.schedule.level(depth)?.first_end();
        tail_terms.push(1.0 - big_to_f64(&g_last));
        let mut total = f64::NEG_INFINITY;
        for t in tail_terms {
            total = log2_add(total, t);
        }
        let tail_bound = self.epsilon * (total / p).exp2();
        let tilde_norm = tilde.p_norm();
        if !(tilde_norm <= 1.0 + 1e-9) {
            return Err(Error::InternalError(format!(
                "realized block sum of x_{q} has p-norm {tilde_norm} > 1"
            )));
        }
        let vector = SparseVector::unit(p, self.field, distinguished.clone())?
            .add_scaled(Complex64::new(self.epsilon, 0.0), &tilde)?;
        let build = XqBuild {
            q,
            distinguished,
            vector,
            tilde_norm,
            tail_bound,
            omitted_mass_log2: total,
            blocks,
            omitted,
        };
        self.builds.insert(q, build.clone());
        Ok(build)
    }

    /// Image of `lambda` under the transfer map `lambda -> sum lambda_q x_q`,
    /// using the truncated `x_q` and accumulating their tail bounds.
    pub fn apply_t(&mut self, lambda: &[Complex64]) -> Result<TransferImage> {
        if lambda.is_empty() {
            return Err(Error::PreconditionError("empty coefficient vector".into()));
        }
        if lambda.len() as u64 > self.q_cap {
            return Err(Error::PreconditionError(format!(
                "{} coefficients exceed the part cap {}",
                lambda.len(),
                self.q_cap
            )));
        }
        if self.field == Field::Real && lambda.iter().any(|c| c.im != 0.0) {
            return Err(Error::ShapeError(
                "complex coefficients on a real-scalar context".into(),
            ));
        }
        let p = self.schedule.p;
        let mut out = SparseVector::new(p, self.field)?;
        let mut tail = 0.0f64;
        for (slot, &lam) in lambda.iter().enumerate() {
            if lam.is_zero() {
                continue;
            }
            let b = self.build_xq(slot as u64 + 1)?;
            out = out.add_scaled(lam, &b.vector)?;
            tail += lam.norm() * b.tail_bound;
        }
        Ok(TransferImage {
            vector: out,
            tail_bound: tail,
        })
    }

    /// Norm ratios `|T(lambda)|_p / |lambda|_p` over random coefficient
    /// vectors with support in `1..=support_cap`, reproducible from `seed`.
    pub fn isometry_report(
        &mut self,
        trials: u64,
        support_cap: u64,
        seed: u64,
    ) -> Result<IsometryReport> {
        if trials == 0 {
            return Err(Error::PreconditionError("need at least one trial".into()));
        }
        if support_cap < 1 || support_cap > self.q_cap {
            return Err(Error::PreconditionError(format!(
                "support cap {support_cap} outside 1..={}",
                self.q_cap
            )));
        }
        let p = self.schedule.p;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut min_ratio = f64::INFINITY;
        let mut max_ratio = 0.0f64;
        let mut max_relative_tail = 0.0f64;
        for _ in 0..trials {
            let mut lambda = vec![Complex64::zero(); support_cap as usize];
            loop {
                for slot in lambda.iter_mut() {
                    *slot = if rng.gen_bool(0.5) {
                        let re = rng.gen_range(-1.0..=1.0);
                        let im = match self.field {
                            Field::Real => 0.0,
                            Field::Complex => rng.gen_range(-1.0..=1.0),
                        };
                        Complex64::new(re, im)
                    } else {
                        Complex64::zero()
                    };
                }
                // reject near-zero draws: the ratio would be all rounding
                if lambda.iter().any(|c| c.norm() > 1e-3) {
                    break;
                }
            }
            let image = self.apply_t(&lambda)?;
            let lam_norm = lambda
                .iter()
                .map(|c| c.norm().powf(p))
                .sum::<f64>()
                .powf(1.0 / p);
            let ratio = image.vector.p_norm() / lam_norm;
            min_ratio = min_ratio.min(ratio);
            max_ratio = max_ratio.max(ratio);
            max_relative_tail = max_relative_tail.max(image.tail_bound / lam_norm);
        }
        Ok(IsometryReport {
            trials,
            support_cap,
            seed,
            epsilon: self.epsilon,
            min_ratio,
            max_ratio,
            max_relative_tail,
        })
    }
}
