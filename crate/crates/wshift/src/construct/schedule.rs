//! Staged interval schedules: each level places one or more equal-length
//! blocks far beyond the previous level, with gaps and block spacing driven
//! by the certified return-gap thresholds and window membership.
//!
//! Three variants share the bookkeeping:
//!
//! * `V1`: even levels carry arithmetic progressions of short blocks whose
//!   length is the 2-adic valuation of the level and whose spacing is the
//!   threshold of that length; odd levels carry one long block placed on a
//!   good window, giving large-density return sets.
//! * `V2`: every level carries a single block, with the gap ratio pushed to
//!   `(k-1)/k` against the level's own length bound; the support stays thin
//!   enough that even the upper density of the complement is forced high.
//! * `V3`: like `V1` but the thresholds come from a parametrized family of
//!   weights, one rational parameter per even level, assigned by the paired
//!   enumeration; odd levels instead cap an exact growth product by 2.
//!
//! Builders are deterministic: rebuilding with the same inputs reproduces
//! the same schedule, including the threshold caches embedded in the result.

use crate::construct::aset::{beta_for_weight, is_member, min_member_at_least, MemberVerdict};
use crate::construct::fiber::{rho, tau};
use crate::construct::theta::{ThetaFamily, ThetaFunction};
use crate::core::{IndexBlock, IndexSet, IntegerInterval, WeightSequence};
use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer, One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Which staged construction a schedule realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScheduleVariant {
    V1,
    V2,
    V3,
}

impl ScheduleVariant {
    /// How even levels are assigned their block data.
    pub fn fiber_kind(self) -> &'static str {
        match self {
            ScheduleVariant::V1 | ScheduleVariant::V2 => "two-adic",
            ScheduleVariant::V3 => "paired-rational",
        }
    }
}

/// One level: `count` blocks of length `size`, starting at `start`, with
/// consecutive starts `step` apart (`step = 0` for a single block).
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub k: u64,
    pub count: BigInt,
    pub start: BigInt,
    pub size: BigInt,
    pub step: BigInt,
    /// Block-length parameter of the paired assignment (parametrized variant).
    pub rho_n: Option<u64>,
    /// Enumeration index of the level's rational parameter (parametrized variant).
    pub rho_j: Option<u64>,
}

impl Level {
    /// The `u`-th block, 1-based.
    pub fn interval(&self, u: &BigInt) -> Result<IntegerInterval> {
        if u < &BigInt::one() || u > &self.count {
            return Err(Error::PreconditionError(format!(
                "level {} has {} blocks, asked for {u}",
                self.k, self.count
            )));
        }
        let lo = &self.start + (u - 1) * &self.step;
        let hi = &lo + &self.size - 1;
        IntegerInterval::new(lo, hi)
    }

    pub fn first_interval(&self) -> Result<IntegerInterval> {
        self.interval(&BigInt::one())
    }

    pub fn last_interval(&self) -> Result<IntegerInterval> {
        self.interval(&self.count.clone())
    }

    /// Right endpoint of the first block.
    pub fn first_end(&self) -> BigInt {
        &self.start + &self.size - 1
    }

    /// Left endpoint of the last block.
    pub fn last_start(&self) -> BigInt {
        &self.start + (&self.count - 1) * &self.step
    }

    /// Right endpoint of the last block.
    pub fn last_end(&self) -> BigInt {
        self.last_start() + &self.size - 1
    }

    /// The level's blocks as one index-set block.
    pub fn block(&self) -> Result<IndexBlock> {
        if self.count.is_one() {
            Ok(IndexBlock::Interval(IntegerInterval::new(
                self.start.clone(),
                self.first_end(),
            )?))
        } else {
            IndexBlock::progression(
                self.start.clone(),
                self.size.clone(),
                self.step.clone(),
                self.count.clone(),
            )
        }
    }
}

/// A built schedule: the levels plus everything needed to re-check them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ScheduleRepr", try_from = "ScheduleRepr")]
pub struct IntervalSchedule {
    pub variant: ScheduleVariant,
    pub p: f64,
    /// The driving weight; absent for the parametrized variant, which
    /// derives one weight per level.
    pub weight: Option<WeightSequence>,
    /// Window cap used by the odd levels; absent for the parametrized variant.
    pub beta: Option<f64>,
    pub levels: Vec<Level>,
    /// Threshold cache: keys are `"k"` (plain) or `"j:n"` (family).
    pub theta_cache: BTreeMap<String, String>,
}

impl IntervalSchedule {
    pub fn depth(&self) -> u64 {
        self.levels.len() as u64
    }

    pub fn level(&self, k: u64) -> Result<&Level> {
        if k == 0 || k > self.depth() {
            return Err(Error::PreconditionError(format!(
                "level {k} outside 1..={}",
                self.depth()
            )));
        }
        Ok(&self.levels[k as usize - 1])
    }

    /// Union of all blocks across levels.
    pub fn index_set(&self) -> Result<IndexSet> {
        let blocks = self
            .levels
            .iter()
            .map(Level::block)
            .collect::<Result<Vec<_>>>()?;
        IndexSet::from_blocks(blocks)
    }

    pub fn fiber_kind(&self) -> &'static str {
        self.variant.fiber_kind()
    }
}

/// Exact growth product `prod_{i=a}^{a+len-1} (1 + k/i)`, telescoped to
/// `2k` integer factors regardless of `len`.
pub fn growth_product(k: u64, a: &BigInt, len: &BigInt) -> Result<BigRational> {
    if !a.is_positive() || len.is_negative() || k == 0 {
        return Err(Error::PreconditionError(format!(
            "growth product needs a >= 1, len >= 0, k >= 1; got a={a}, len={len}, k={k}"
        )));
    }
    if len.is_zero() {
        return Ok(BigRational::one());
    }
    let b = a + len - 1;
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    // prod (i+k)/i over [a, b] cancels to [b+1, b+k] over [a, a+k-1]
    for t in 0..k {
        num *= &b + BigInt::from(t + 1);
        den *= a + BigInt::from(t);
    }
    Ok(BigRational::new(num, den))
}

/// Smallest `a >= lower` with the growth product over a window of `len`
/// factors at most 2. The product strictly decreases in `a`.
fn minimal_growth_start(k: u64, len: &BigInt, lower: &BigInt) -> Result<BigInt> {
    let two = BigRational::from_integer(BigInt::from(2));
    if len.is_zero() {
        return Ok(lower.clone());
    }
    let ok = |a: &BigInt| -> Result<bool> { Ok(growth_product(k, a, len)? <= two) };
    if ok(lower)? {
        return Ok(lower.clone());
    }
    let mut hi = lower * 2;
    while !ok(&hi)? {
        hi *= 2;
        if hi.bits() > 200_000 {
            return Err(Error::InternalError(format!(
                "growth window search runaway at level {k}"
            )));
        }
    }
    let mut lo = lower.clone(); // known too small
    while &lo + 1 < hi {
        let mid: BigInt = (&lo + &hi) / 2;
        if ok(&mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_ceil(b)
}

/// Minimal block count `c >= 1` with `step * (c + 1) >= start`, which keeps
/// the count-to-endpoint ratio at least `1 / (2 step)`.
fn minimal_block_count(start: &BigInt, step: &BigInt) -> BigInt {
    let needed = ceil_div(&(start - step), step);
    if needed < BigInt::one() {
        BigInt::one()
    } else {
        needed
    }
}

fn base_level() -> Level {
    Level {
        k: 1,
        count: BigInt::one(),
        start: BigInt::one(),
        size: BigInt::one(),
        step: BigInt::zero(),
        rho_n: None,
        rho_j: None,
    }
}

/// Errors that mean "this level cannot be placed", as opposed to misuse.
fn stuck(level: u64, e: Error) -> Error {
    match e {
        Error::BoundExceeded(_) | Error::CannotCertify(_) | Error::Insufficient(_) => {
            Error::ScheduleStuck {
                level,
                reason: e.to_string(),
            }
        }
        other => other,
    }
}

/// Build a schedule of the given variant to `depth` levels.
///
/// `weight` is required for `V1`/`V2` and must be absent for `V3`.
/// `beta_override` replaces the cap derived from the weight.
pub fn build_schedule(
    variant: ScheduleVariant,
    weight: Option<WeightSequence>,
    p: f64,
    depth: u64,
    beta_override: Option<f64>,
) -> Result<IntervalSchedule> {
    if depth == 0 || depth > 64 {
        return Err(Error::PreconditionError(format!(
            "depth must be in 1..=64, got {depth}"
        )));
    }
    if p < 1.0 || !p.is_finite() {
        return Err(Error::PreconditionError(format!("exponent p = {p} out of range")));
    }
    match variant {
        ScheduleVariant::V1 | ScheduleVariant::V2 => {
            let w = weight.ok_or_else(|| {
                Error::PreconditionError("this variant needs a driving weight".into())
            })?;
            let beta = match beta_override {
                Some(b) => b,
                None => beta_for_weight(&w)?.beta,
            };
            build_single_weight(variant, w, p, depth, beta)
        }
        ScheduleVariant::V3 => {
            if weight.is_some() {
                return Err(Error::PreconditionError(
                    "the parametrized variant derives weights per level; pass none".into(),
                ));
            }
            if beta_override.is_some() {
                return Err(Error::PreconditionError(
                    "the parametrized variant has a fixed growth cap; pass none".into(),
                ));
            }
            build_parametrized(p, depth)
        }
    }
}

fn build_single_weight(
    variant: ScheduleVariant,
    w: WeightSequence,
    p: f64,
    depth: u64,
    beta: f64,
) -> Result<IntervalSchedule> {
    let mut tf = ThetaFunction::new(w.clone(), p)?;
    let mut levels = vec![base_level()];
    for k in 2..=depth {
        let prev = levels.last().expect("levels never empty");
        let g_first = prev.first_end();
        let g_last = prev.last_end();
        let level = if k % 2 == 0 {
            let n = tau(k)?;
            let n_big = BigInt::from(n);
            let gap = tf.theta(&(&n_big + &g_first)).map_err(|e| stuck(k, e))?;
            let reach = &g_first + &gap;
            match variant {
                ScheduleVariant::V1 => {
                    let step = tf.theta(&n_big).map_err(|e| stuck(k, e))?;
                    let ratio_floor = BigInt::from(k) * &g_last;
                    let start = ratio_floor.max(reach);
                    let count = minimal_block_count(&start, &step);
                    Level {
                        k,
                        count,
                        start,
                        size: n_big,
                        step,
                        rho_n: None,
                        rho_j: None,
                    }
                }
                ScheduleVariant::V2 => {
                    let m_len = g_last.clone().max(n_big.clone());
                    let ratio_floor = BigInt::from(k) * &g_last + BigInt::from(k - 1) * &m_len;
                    let start = ratio_floor.max(reach);
                    Level {
                        k,
                        count: BigInt::one(),
                        start,
                        size: n_big,
                        step: BigInt::zero(),
                        rho_n: None,
                        rho_j: None,
                    }
                }
                ScheduleVariant::V3 => unreachable!("parametrized variant handled separately"),
            }
        } else {
            // odd level: one long block on a good window
            let g = g_last.clone();
            let window = &g - 1;
            let lower = match variant {
                ScheduleVariant::V1 => BigInt::from(k) * &g - 1,
                ScheduleVariant::V2 => BigInt::from(2 * k - 1) * &g - 1,
                ScheduleVariant::V3 => unreachable!(),
            };
            let member =
                min_member_at_least(&w, &window, beta, &lower).map_err(|e| stuck(k, e))?;
            Level {
                k,
                count: BigInt::one(),
                start: member + 1,
                size: g,
                step: BigInt::zero(),
                rho_n: None,
                rho_j: None,
            }
        };
        levels.push(level);
    }
    Ok(IntervalSchedule {
        variant,
        p,
        weight: Some(w),
        beta: Some(beta),
        levels,
        theta_cache: tf.cache_strings(),
    })
}

fn build_parametrized(p: f64, depth: u64) -> Result<IntervalSchedule> {
    let mut fam = ThetaFamily::new(p)?;
    let mut levels = vec![base_level()];
    for k in 2..=depth {
        let prev = levels.last().expect("levels never empty");
        let g_first = prev.first_end();
        let g_last = prev.last_end();
        let level = if k % 2 == 0 {
            let rv = rho(k)?;
            let n_big = BigInt::from(rv.n);
            let j_big = BigInt::from(rv.j);
            let gap = fam
                .theta_r(&rv.r, &j_big, &(&n_big + &g_first))
                .map_err(|e| stuck(k, e))?;
            let reach = &g_first + &gap;
            let ratio_floor = BigInt::from(k) * &g_last;
            let start = ratio_floor.max(reach);
            // block spacing: threshold of the bracketing rational (n+1)/n,
            // whose enumeration index is 2^(n-1)
            let step_r = BigRational::new(BigInt::from(rv.n + 1), n_big.clone());
            let step_j = BigInt::one() << (rv.n - 1);
            let step = fam
                .theta_r(&step_r, &step_j, &n_big)
                .map_err(|e| stuck(k, e))?;
            let count = minimal_block_count(&start, &step);
            Level {
                k,
                count,
                start,
                size: n_big,
                step,
                rho_n: Some(rv.n),
                rho_j: Some(rv.j),
            }
        } else {
            let g = g_last.clone();
            let window = &g - 1;
            let lower = BigInt::from(k) * &g;
            let start = minimal_growth_start(k, &window, &lower).map_err(|e| stuck(k, e))?;
            Level {
                k,
                count: BigInt::one(),
                start,
                size: g,
                step: BigInt::zero(),
                rho_n: None,
                rho_j: None,
            }
        };
        levels.push(level);
    }
    Ok(IntervalSchedule {
        variant: ScheduleVariant::V3,
        p,
        weight: None,
        beta: None,
        levels,
        theta_cache: fam.cache_strings(),
    })
}

/// A failed validation condition at one level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub level: u64,
    /// Which condition failed: `level-numbering`, `base-level`,
    /// `single-block`, `block-step-spacing`, `level-order`, `gap-ratio`,
    /// `start-gap`, `block-length`, `block-step`, `block-count`,
    /// `window-product`, `fiber-consistency`.
    pub condition: String,
    pub detail: String,
    /// True when the deciding comparison fell inside the floating point
    /// margin instead of failing outright.
    pub near_margin: bool,
}

/// Re-check every structural condition of a schedule from scratch, reusing
/// its embedded threshold cache. Returns all violations, not just the first.
pub fn validate_schedule(s: &IntervalSchedule) -> Result<Vec<Violation>> {
    let mut out = Vec::new();
    macro_rules! fail {
        ($level:expr, $condition:expr, $detail:expr $(,)?) => {
            out.push(Violation {
                level: $level,
                condition: $condition.to_string(),
                detail: $detail,
                near_margin: false,
            })
        };
    }
    if s.levels.is_empty() {
        fail!(0, "level-numbering", "schedule has no levels".into());
        return Ok(out);
    }
    for (i, lv) in s.levels.iter().enumerate() {
        if lv.k != i as u64 + 1 {
            fail!(
                lv.k,
                "level-numbering",
                format!("level at position {} numbered {}", i + 1, lv.k),
            );
        }
    }
    let l1 = &s.levels[0];
    if !(l1.count.is_one() && l1.start.is_one() && l1.size.is_one() && l1.step.is_zero()) {
        fail!(1, "base-level", format!("expected the single block [1, 1], got {l1:?}"));
    }

    // threshold machinery reconstructed from the embedded cache
    let mut tf = match (&s.variant, &s.weight) {
        (ScheduleVariant::V3, _) => None,
        (_, Some(w)) => Some(ThetaFunction::from_cache(
            w.clone(),
            s.p,
            ThetaFunction::cache_from_strings(&s.theta_cache)?,
        )?),
        (_, None) => {
            return Err(Error::PreconditionError(
                "schedule lacks its driving weight".into(),
            ))
        }
    };
    let mut fam = match s.variant {
        ScheduleVariant::V3 => Some(ThetaFamily::from_cache(
            s.p,
            ThetaFamily::cache_from_strings(&s.theta_cache)?,
        )?),
        _ => None,
    };
    let beta = match (s.variant, s.beta) {
        (ScheduleVariant::V3, _) => None,
        (_, Some(b)) => Some(b),
        (_, None) => {
            return Err(Error::PreconditionError("schedule lacks its window cap".into()))
        }
    };

    for i in 1..s.levels.len() {
        let lv = &s.levels[i];
        let prev = &s.levels[i - 1];
        let k = lv.k;
        let g_first = prev.first_end();
        let g_last = prev.last_end();
        let even = k % 2 == 0;

        if !lv.count.is_positive() || !lv.size.is_positive() || !lv.start.is_positive() {
            fail!(k, "block-count", format!("degenerate level {lv:?}"));
            continue;
        }
        if lv.count.is_one() {
            if !lv.step.is_zero() {
                fail!(k, "block-step-spacing", format!("single block with step {}", lv.step));
            }
        } else if lv.step < lv.size {
            fail!(
                k,
                "block-step-spacing",
                format!("step {} below block length {}", lv.step, lv.size),
            );
        }
        if lv.start <= g_last {
            fail!(
                k,
                "level-order",
                format!("start {} does not clear the previous level end {g_last}", lv.start),
            );
        }

        match s.variant {
            ScheduleVariant::V1 => {
                let ratio_floor = BigInt::from(k) * &g_last;
                if lv.start < ratio_floor {
                    fail!(
                        k,
                        "gap-ratio",
                        format!("start {} below {k} * {g_last}", lv.start),
                    );
                }
                if even {
                    let n = tau(k)?;
                    let n_big = BigInt::from(n);
                    if lv.size != n_big {
                        fail!(
                            k,
                            "block-length",
                            format!("length {} differs from the 2-adic valuation {n}", lv.size),
                        );
                    }
                    let tf = tf.as_mut().expect("plain threshold present");
                    let step_want = tf.theta(&n_big)?;
                    if lv.step != step_want && !lv.count.is_one() {
                        fail!(
                            k,
                            "block-step",
                            format!("step {} differs from threshold {step_want}", lv.step),
                        );
                    }
                    let gap_want = tf.theta(&(&n_big + &g_first))?;
                    if &lv.start - &g_first < gap_want {
                        fail!(
                            k,
                            "start-gap",
                            format!(
                                "start {} within the return gap {gap_want} of {g_first}",
                                lv.start
                            ),
                        );
                    }
                    if &step_want * (&lv.count + 1) < lv.start {
                        fail!(
                            k,
                            "block-count",
                            format!(
                                "count {} too small: {} * {} < {}",
                                lv.count,
                                step_want,
                                &lv.count + 1,
                                lv.start
                            ),
                        );
                    }
                } else {
                    odd_level_window_check(
                        &mut out, s, lv, &g_last, beta.expect("cap present"), k,
                    )?;
                }
            }
            ScheduleVariant::V2 => {
                if !lv.count.is_one() {
                    fail!(k, "single-block", format!("count {} blocks", lv.count));
                }
                let m_len = g_last.clone().max(lv.size.clone());
                let ratio_floor = BigInt::from(k) * &g_last + BigInt::from(k - 1) * &m_len;
                if lv.start < ratio_floor {
                    fail!(
                        k,
                        "gap-ratio",
                        format!(
                            "start {} below {k} * {g_last} + {} * {m_len}",
                            lv.start,
                            k - 1
                        ),
                    );
                }
                if even {
                    let n = tau(k)?;
                    let n_big = BigInt::from(n);
                    if lv.size != n_big {
                        fail!(
                            k,
                            "block-length",
                            format!("length {} differs from the 2-adic valuation {n}", lv.size),
                        );
                    }
                    let tf = tf.as_mut().expect("plain threshold present");
                    let gap_want = tf.theta(&(&n_big + &g_first))?;
                    if &lv.start - &g_first < gap_want {
                        fail!(
                            k,
                            "start-gap",
                            format!(
                                "start {} within the return gap {gap_want} of {g_first}",
                                lv.start
                            ),
                        );
                    }
                } else {
                    odd_level_window_check(
                        &mut out, s, lv, &g_last, beta.expect("cap present"), k,
                    )?;
                }
            }
            ScheduleVariant::V3 => {
                let ratio_floor = BigInt::from(k) * &g_last;
                if lv.start < ratio_floor {
                    fail!(
                        k,
                        "gap-ratio",
                        format!("start {} below {k} * {g_last}", lv.start),
                    );
                }
                if even {
                    let rv = rho(k)?;
                    if lv.rho_n != Some(rv.n) || lv.rho_j != Some(rv.j) {
                        fail!(
                            k,
                            "fiber-consistency",
                            format!(
                                "level carries ({:?}, {:?}), the pairing assigns ({}, {})",
                                lv.rho_n, lv.rho_j, rv.n, rv.j
                            ),
                        );
                        continue;
                    }
                    let n_big = BigInt::from(rv.n);
                    if lv.size != n_big {
                        fail!(
                            k,
                            "block-length",
                            format!("length {} differs from the assigned {}", lv.size, rv.n),
                        );
                    }
                    let fam = fam.as_mut().expect("family threshold present");
                    let j_big = BigInt::from(rv.j);
                    let gap_want = fam.theta_r(&rv.r, &j_big, &(&n_big + &g_first))?;
                    if &lv.start - &g_first < gap_want {
                        fail!(
                            k,
                            "start-gap",
                            format!(
                                "start {} within the family return gap {gap_want} of {g_first}",
                                lv.start
                            ),
                        );
                    }
                    let step_r = BigRational::new(BigInt::from(rv.n + 1), n_big.clone());
                    let step_j = BigInt::one() << (rv.n - 1);
                    let step_want = fam.theta_r(&step_r, &step_j, &n_big)?;
                    if lv.step != step_want && !lv.count.is_one() {
                        fail!(
                            k,
                            "block-step",
                            format!("step {} differs from threshold {step_want}", lv.step),
                        );
                    }
                    if &step_want * (&lv.count + 1) < lv.start {
                        fail!(
                            k,
                            "block-count",
                            format!("count {} too small for start {}", lv.count, lv.start),
                        );
                    }
                } else {
                    if !lv.count.is_one() {
                        fail!(k, "single-block", format!("count {} blocks", lv.count));
                    }
                    if lv.size != g_last {
                        fail!(
                            k,
                            "block-length",
                            format!("length {} differs from previous end {g_last}", lv.size),
                        );
                    }
                    let window = &lv.size - 1;
                    let prod = growth_product(k, &lv.start, &window)?;
                    let two = BigRational::from_integer(BigInt::from(2));
                    if prod > two {
                        fail!(
                            k,
                            "window-product",
                            format!("growth product {} exceeds 2", prod),
                        );
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Odd-level window membership for the single-weight variants: the block
/// must start right after a member of the good-window set.
fn odd_level_window_check(
    out: &mut Vec<Violation>,
    s: &IntervalSchedule,
    lv: &Level,
    g_last: &BigInt,
    beta: f64,
    k: u64,
) -> Result<()> {
    if !lv.count.is_one() {
        out.push(Violation {
            level: k,
            condition: "single-block".into(),
            detail: format!("odd level with {} blocks", lv.count),
            near_margin: false,
        });
    }
    if &lv.size != g_last {
        out.push(Violation {
            level: k,
            condition: "block-length".into(),
            detail: format!("length {} differs from previous end {g_last}", lv.size),
            near_margin: false,
        });
    }
    let w = s.weight.as_ref().expect("single-weight variant");
    let anchor = &lv.start - 1;
    let window = &lv.size - 1;
    match is_member(w, &anchor, &window, beta)? {
        MemberVerdict::Member => {}
        MemberVerdict::NearMargin => {
            out.push(Violation {
                level: k,
                condition: "window-product".into(),
                detail: format!(
                    "window at {anchor} decided within the floating point margin of {beta}"
                ),
                near_margin: true,
            });
        }
        MemberVerdict::NonMember => {
            out.push(Violation {
                level: k,
                condition: "window-product".into(),
                detail: format!("window at {anchor} exceeds the cap {beta}"),
                near_margin: false,
            });
        }
    }
    Ok(())
}

/// Serialized form: big integers as decimal strings, plus a bounded preview
/// of each level's blocks for human inspection.
#[derive(Serialize, Deserialize)]
struct LevelRepr {
    k: u64,
    count: String,
    start: String,
    size: String,
    step: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho_n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho_j: Option<u64>,
    intervals: Vec<[String; 2]>,
    intervals_truncated: bool,
}

const INTERVAL_PREVIEW_CAP: u64 = 64;

#[derive(Serialize, Deserialize)]
struct ScheduleRepr {
    variant: ScheduleVariant,
    p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<WeightSequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    fiber_kind: String,
    levels: Vec<LevelRepr>,
    theta_cache: BTreeMap<String, String>,
}

impl From<IntervalSchedule> for ScheduleRepr {
    fn from(s: IntervalSchedule) -> Self {
        let levels = s
            .levels
            .iter()
            .map(|lv| {
                let mut intervals = Vec::new();
                let mut u = BigInt::one();
                let cap = BigInt::from(INTERVAL_PREVIEW_CAP);
                let shown = lv.count.clone().min(cap);
                while u <= shown {
                    let iv = lv.interval(&u).expect("preview within count");
                    intervals.push([iv.lo().to_string(), iv.hi().to_string()]);
                    u += 1;
                }
                LevelRepr {
                    k: lv.k,
                    count: lv.count.to_string(),
                    start: lv.start.to_string(),
                    size: lv.size.to_string(),
                    step: lv.step.to_string(),
                    rho_n: lv.rho_n,
                    rho_j: lv.rho_j,
                    intervals,
                    intervals_truncated: lv.count > BigInt::from(INTERVAL_PREVIEW_CAP),
                }
            })
            .collect();
        ScheduleRepr {
            variant: s.variant,
            p: s.p,
            weight: s.weight,
            beta: s.beta,
            fiber_kind: s.variant.fiber_kind().to_string(),
            levels,
            theta_cache: s.theta_cache,
        }
    }
}

impl TryFrom<ScheduleRepr> for IntervalSchedule {
    type Error = Error;

    fn try_from(r: ScheduleRepr) -> Result<Self> {
        if r.fiber_kind != r.variant.fiber_kind() {
            return Err(Error::ShapeError(format!(
                "fiber kind {:?} does not match variant {:?}",
                r.fiber_kind, r.variant
            )));
        }
        let parse = |s: &str, what: &str| -> Result<BigInt> {
            s.parse()
                .map_err(|_| Error::ShapeError(format!("bad {what} {s:?}")))
        };
        let levels = r
            .levels
            .iter()
            .map(|lr| {
                Ok(Level {
                    k: lr.k,
                    count: parse(&lr.count, "count")?,
                    start: parse(&lr.start, "start")?,
                    size: parse(&lr.size, "size")?,
                    step: parse(&lr.step, "step")?,
                    rho_n: lr.rho_n,
                    rho_j: lr.rho_j,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(IntervalSchedule {
            variant: r.variant,
            p: r.p,
            weight: r.weight,
            beta: r.beta,
            levels,
            theta_cache: r.theta_cache,
        })
    }
}
