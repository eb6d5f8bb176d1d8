//! Membership in the good-window sets: a position `k` qualifies for window
//! length `n` and cap `beta` when every suffix product of weights over the
//! window `(k, k+n]` stays at most `beta` (equality included).
//!
//! Each weight kind gets the sharpest test it admits. Factors of the
//! parametric family all exceed 1, so the maximal suffix product is the full
//! window product, an exact rational; integer parameters telescope it down
//! to a handful of factors, so window lengths can be astronomically large.
//! The two-valued pattern weight reduces to counting heavy positions, again
//! exact. Finite tables fall back to a sliding scan in log space with an
//! explicit margin verdict instead of a silent boolean.

use crate::core::WeightSequence;
use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use std::collections::VecDeque;

/// Log-space comparisons within this margin of the cap are reported as
/// [`MemberVerdict::NearMargin`] rather than silently resolved either way.
pub const LOG_MARGIN: f64 = 1e-9;

/// Direct products longer than this are refused on the inexact paths.
const DIRECT_PRODUCT_CAP: u64 = 1 << 22;

/// Rational (non-integer) parametric window products are expanded factor by
/// factor; beyond this length the caller should use an integer parameter.
const RATIONAL_FACTOR_CAP: u64 = 10_000;

/// The canonical cap for a weight: `max(sup w, 1 / inf w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaReport {
    pub beta: f64,
    pub sup: f64,
    pub inf: f64,
}

pub fn beta_for_weight(w: &WeightSequence) -> Result<BetaReport> {
    let sup = w.sup_norm()?;
    let inf = w.inf_weight()?;
    if inf <= 0.0 {
        return Err(Error::PreconditionError(
            "weight infimum must be positive to derive a cap".into(),
        ));
    }
    Ok(BetaReport {
        beta: sup.max(1.0 / inf),
        sup,
        inf,
    })
}

/// Outcome of a membership test. `NearMargin` means the deciding comparison
/// fell within [`LOG_MARGIN`] of the cap on an inexact path; callers must
/// surface it, never coerce it to a boolean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemberVerdict {
    Member,
    NonMember,
    NearMargin,
}

/// Largest `t >= 0` with `4^t <= beta`, or `None` when `beta < 1`.
/// Exact: `beta` is converted to the binary rational it denotes.
fn pattern_budget(beta: f64) -> Option<u32> {
    let b = BigRational::from_float(beta)?;
    if b < BigRational::one() {
        return None;
    }
    let four = BigRational::from_integer(BigInt::from(4));
    let mut t = 0u32;
    let mut power = four.clone();
    while power <= b {
        t += 1;
        power *= &four;
    }
    Some(t)
}

/// Exact full-window product for the parametric weight with parameter `mu`:
/// `prod_{j=a}^{b} (1 + mu/j)` as a rational. Integer `mu` telescopes to
/// `mu` factors; otherwise the product is expanded directly (length capped).
fn parametric_window_product(mu: &BigRational, a: &BigInt, b: &BigInt) -> Result<BigRational> {
    if b < a {
        return Ok(BigRational::one());
    }
    if mu.is_integer() {
        let m = mu.to_integer();
        let m_u64 = m.to_u64().ok_or_else(|| {
            Error::BoundExceeded(format!("parameter {m} too large to telescope"))
        })?;
        // prod_{j=a}^{b} (j+m)/j = [prod_{i=b+1}^{b+m} i] / [prod_{i=a}^{a+m-1} i]
        let mut num = BigInt::one();
        let mut den = BigInt::one();
        for t in 1..=m_u64 {
            num *= b + BigInt::from(t);
            den *= a + BigInt::from(t - 1);
        }
        return Ok(BigRational::new(num, den));
    }
    let len = (b - a + 1i32).to_u64().filter(|l| *l <= RATIONAL_FACTOR_CAP);
    let Some(len) = len else {
        return Err(Error::BoundExceeded(format!(
            "window of length {} exceeds the rational-parameter cap {}",
            b - a + 1i32,
            RATIONAL_FACTOR_CAP
        )));
    };
    let c = mu.numer();
    let d = mu.denom();
    let mut prod = BigRational::one();
    for off in 0..len {
        let j = a + BigInt::from(off);
        prod *= BigRational::new(&j * d + c, &j * d);
    }
    Ok(prod)
}

/// Decide membership of `k` for window length `n` and cap `beta`.
pub fn is_member(w: &WeightSequence, k: &BigInt, n: &BigInt, beta: f64) -> Result<MemberVerdict> {
    if k.is_negative() || n.is_negative() {
        return Err(Error::PreconditionError(format!(
            "membership needs k >= 0 and n >= 0, got k={k} n={n}"
        )));
    }
    if !beta.is_finite() || beta <= 0.0 {
        return Err(Error::PreconditionError(format!("cap {beta} is not usable")));
    }
    if n.is_zero() {
        return Ok(MemberVerdict::Member); // empty window: nothing to bound
    }
    match w {
        WeightSequence::Pattern => {
            let Some(t) = pattern_budget(beta) else {
                return Ok(MemberVerdict::NonMember);
            };
            // every weight is 1 or 4, so the maximal suffix product is the
            // full window product 4^(heavy count)
            let heavy = WeightSequence::pattern_hi_count(&(k + n))
                - WeightSequence::pattern_hi_count(k);
            Ok(if heavy <= BigInt::from(t) {
                MemberVerdict::Member
            } else {
                MemberVerdict::NonMember
            })
        }
        WeightSequence::Parametric { mu } => {
            let beta_rat = BigRational::from_float(beta).ok_or_else(|| {
                Error::PreconditionError(format!("cap {beta} is not a finite number"))
            })?;
            // factors exceed 1, so the deepest suffix is the largest
            let prod = parametric_window_product(mu, &(k + 1), &(k + n))?;
            Ok(if prod <= beta_rat {
                MemberVerdict::Member
            } else {
                MemberVerdict::NonMember
            })
        }
        WeightSequence::Tabulated { .. } => {
            let len = n.to_u64().filter(|l| *l <= DIRECT_PRODUCT_CAP).ok_or_else(|| {
                Error::BoundExceeded(format!(
                    "window length {n} exceeds the direct scan cap {DIRECT_PRODUCT_CAP}"
                ))
            })?;
            let max_log = window_max_log(w, k, len)?;
            let cap_log = beta.ln();
            Ok(if max_log <= cap_log - LOG_MARGIN {
                MemberVerdict::Member
            } else if max_log <= cap_log + LOG_MARGIN {
                MemberVerdict::NearMargin
            } else {
                MemberVerdict::NonMember
            })
        }
    }
}

/// Largest log suffix product over the window `(k, k+n]`, computed by a
/// direct right-to-left accumulation. Independent of the closed forms used
/// by [`is_member`]; certification tests cross-check the two.
pub fn window_max_log(w: &WeightSequence, k: &BigInt, n: u64) -> Result<f64> {
    if n == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    if n > DIRECT_PRODUCT_CAP {
        return Err(Error::BoundExceeded(format!(
            "window length {n} exceeds the direct scan cap {DIRECT_PRODUCT_CAP}"
        )));
    }
    let mut acc = 0.0f64;
    let mut best = f64::NEG_INFINITY;
    // suffixes grow leftward from k+n
    for off in (1..=n).rev() {
        let j = k + BigInt::from(off);
        acc += w.weight_at(&j)?.ln();
        if acc > best {
            best = acc;
        }
    }
    Ok(best)
}

/// Smallest member `>= lower` for window length `n` and cap `beta`.
pub fn min_member_at_least(
    w: &WeightSequence,
    n: &BigInt,
    beta: f64,
    lower: &BigInt,
) -> Result<BigInt> {
    if !beta.is_finite() || beta <= 0.0 {
        return Err(Error::PreconditionError(format!("cap {beta} is not usable")));
    }
    if n.is_negative() {
        return Err(Error::PreconditionError(format!("window length {n} is negative")));
    }
    let floor = if lower < &BigInt::one() {
        BigInt::one()
    } else {
        lower.clone()
    };
    if n.is_zero() {
        return Ok(floor);
    }
    match w {
        WeightSequence::Pattern => pattern_min_member(n, beta, &floor),
        WeightSequence::Parametric { mu } => parametric_min_member(mu, n, beta, &floor),
        WeightSequence::Tabulated { .. } => {
            let len = n.to_u64().filter(|l| *l <= DIRECT_PRODUCT_CAP).ok_or_else(|| {
                Error::BoundExceeded(format!(
                    "window length {n} exceeds the direct scan cap {DIRECT_PRODUCT_CAP}"
                ))
            })?;
            tabulated_min_member(w, len, beta, &floor)
        }
    }
}

fn parametric_min_member(
    mu: &BigRational,
    n: &BigInt,
    beta: f64,
    floor: &BigInt,
) -> Result<BigInt> {
    let beta_rat = BigRational::from_float(beta).ok_or_else(|| {
        Error::PreconditionError(format!("cap {beta} is not a finite number"))
    })?;
    if beta_rat <= BigRational::one() {
        return Err(Error::Insufficient(format!(
            "cap {beta} rules out every nonempty window of this weight"
        )));
    }
    let member = |k: &BigInt| -> Result<bool> {
        Ok(parametric_window_product(mu, &(k + 1), &(k + n))? <= beta_rat)
    };
    // window products decrease as the window slides right, so the member
    // set is an upward-closed ray; find its edge
    if member(floor)? {
        return Ok(floor.clone());
    }
    let mut hi = floor * 2 + 1;
    while !member(&hi)? {
        hi = &hi * 2;
        if hi.bits() > 512 {
            return Err(Error::Insufficient(format!(
                "no member found below 2^512 for n={n}, beta={beta}"
            )));
        }
    }
    let mut lo = floor.clone(); // known non-member
    while &lo + 1 < hi {
        let mid: BigInt = (&lo + &hi) / 2;
        if member(&mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn pattern_min_member(n: &BigInt, beta: f64, floor: &BigInt) -> Result<BigInt> {
    let Some(t) = pattern_budget(beta) else {
        return Err(Error::Insufficient(format!(
            "cap {beta} rules out every nonempty window of this weight"
        )));
    };
    let t_big = BigInt::from(t);
    if *n <= t_big {
        return Ok(floor.clone()); // even an all-heavy window fits the budget
    }
    let heavy_ok = |k: &BigInt| -> bool {
        WeightSequence::pattern_hi_count(&(k + n)) - WeightSequence::pattern_hi_count(k) <= t_big
    };
    if heavy_ok(floor) {
        return Ok(floor.clone());
    }
    // candidate windows hug the light runs [4^i, 2*4^i): the earliest member
    // touching run i is 4^i - 1 - t (t heavy positions in front), the latest
    // is 2*4^i - n - 1 + t (t heavy positions trailing)
    let mut power = BigInt::from(4);
    loop {
        let a_i = &power - 1 - &t_big;
        let b_i = &power * 2 - n - 1 + &t_big;
        let mut c = if &a_i > floor { a_i } else { floor.clone() };
        if c < BigInt::one() {
            c = BigInt::one();
        }
        if c <= b_i {
            // at most 2t + 2 candidates can fail before the verdict settles
            let mut tries = 0u32;
            while c <= b_i && tries <= 2 * t + 2 {
                if heavy_ok(&c) {
                    return Ok(c);
                }
                c += 1;
                tries += 1;
            }
        }
        power *= 4;
        if power.bits() > 4096 {
            return Err(Error::InternalError(format!(
                "light-run search runaway: n={n}, beta={beta}, floor={floor}"
            )));
        }
    }
}

fn tabulated_min_member(
    w: &WeightSequence,
    n: u64,
    beta: f64,
    floor: &BigInt,
) -> Result<BigInt> {
    let start = floor.to_u64().ok_or_else(|| {
        Error::BoundExceeded("table scan cannot start beyond u64 range".into())
    })?;
    let cap_log = beta.ln();
    // prefix[i] holds the accumulated ln w over positions (start, start+i];
    // the max suffix product over (k, k+n] is prefix[k+n-start] minus the
    // minimum of prefix over [k-start, k+n-1-start], kept in a sliding deque
    let mut deque: VecDeque<(u64, f64)> = VecDeque::new();
    let mut prefix = vec![0.0f64];
    let mut near_margin_hits: Vec<u64> = Vec::new();
    let limit = start.saturating_add(DIRECT_PRODUCT_CAP);
    fn push(deque: &mut VecDeque<(u64, f64)>, idx: u64, val: f64) {
        while deque.back().is_some_and(|&(_, v)| v >= val) {
            deque.pop_back();
        }
        deque.push_back((idx, val));
    }
    let mut acc = 0.0f64;
    for k in start..=limit {
        let lo_idx = k - start;
        // grow the prefix to index lo_idx + n, feeding the deque only the
        // indices that may serve as suffix starts (strictly below k + n)
        while (prefix.len() as u64) <= lo_idx + n {
            let idx = prefix.len() as u64 - 1;
            push(&mut deque, idx, prefix[idx as usize]);
            let pos = start + prefix.len() as u64;
            acc += w.weight_at(&BigInt::from(pos))?.ln();
            prefix.push(acc);
        }
        while deque.front().is_some_and(|&(i, _)| i < lo_idx) {
            deque.pop_front();
        }
        let window_end = prefix[(lo_idx + n) as usize];
        let min_inside = deque
            .front()
            .map(|&(_, v)| v)
            .ok_or_else(|| Error::InternalError("sliding minimum deque drained".into()))?;
        let max_log = window_end - min_inside;
        if max_log <= cap_log - LOG_MARGIN {
            return Ok(BigInt::from(k));
        }
        if max_log <= cap_log + LOG_MARGIN {
            near_margin_hits.push(k);
        }
    }
    if near_margin_hits.is_empty() {
        Err(Error::Insufficient(format!(
            "no member in [{start}, {limit}] for n={n}, beta={beta}"
        )))
    } else {
        Err(Error::Insufficient(format!(
            "no clear member in [{start}, {limit}] for n={n}, beta={beta}; \
             {} candidates within {LOG_MARGIN} of the cap (first at {}), \
             resolve them with an exact weight kind",
            near_margin_hits.len(),
            near_margin_hits[0]
        )))
    }
}

/// The first `want` members at or above 1, all at most `bound`.
pub fn a_set_members(
    w: &WeightSequence,
    n: &BigInt,
    beta: f64,
    bound: &BigInt,
    want: usize,
) -> Result<Vec<BigInt>> {
    let mut out = Vec::with_capacity(want);
    let mut next = BigInt::one();
    while out.len() < want {
        let k = min_member_at_least(w, n, beta, &next)?;
        if &k > bound {
            return Err(Error::Insufficient(format!(
                "only {} members at or below {bound} for n={n}, beta={beta}",
                out.len()
            )));
        }
        next = &k + 1;
        out.push(k);
    }
    Ok(out)
}

/// Finite interrogation of the defining weight condition: partial sums of
/// the inverse-power series at geometric checkpoints, and the surrogate
/// `max_{n <= nmax} min_{k <= kmax}` of window products.
#[derive(Debug, Clone)]
pub struct WeightConditionReport {
    /// (checkpoint, partial sum of `1 / prefix(l)^p` for `l` up to it)
    pub partial_sums: Vec<(u64, f64)>,
    /// Analytic convergence verdict when the weight kind admits one.
    pub series_converges: Option<bool>,
    pub series_pass: bool,
    /// `max over n of min over k` of the window products on the grid.
    pub surrogate: f64,
    /// Window length attaining the surrogate.
    pub surrogate_n: u64,
    pub window_pass: bool,
    /// True when no analytic verdict backs the finite computation.
    pub finite_check_only: bool,
}

pub fn check_weight_condition(
    w: &WeightSequence,
    p: f64,
    kmax: u64,
    nmax: u64,
    tol: f64,
) -> Result<WeightConditionReport> {
    if p < 1.0 || !p.is_finite() {
        return Err(Error::PreconditionError(format!("exponent p = {p} out of range")));
    }
    if kmax == 0 || nmax == 0 || kmax + nmax > DIRECT_PRODUCT_CAP {
        return Err(Error::PreconditionError(format!(
            "grid kmax={kmax}, nmax={nmax} out of range"
        )));
    }
    // prefix logs P[l] = ln prod_{j<=l} w_j for l <= kmax + nmax
    let horizon = kmax + nmax;
    let mut prefix = vec![0.0f64; horizon as usize + 1];
    for l in 1..=horizon {
        prefix[l as usize] =
            prefix[l as usize - 1] + w.weight_at(&BigInt::from(l))?.ln();
    }
    // series partial sums at geometric checkpoints
    let mut partial_sums = Vec::new();
    let mut sum = 0.0f64;
    let mut checkpoint = 1u64;
    for l in 1..=horizon {
        sum += (-p * prefix[l as usize]).exp();
        if l == checkpoint {
            partial_sums.push((l, sum));
            checkpoint *= 2;
        } else if l == horizon {
            partial_sums.push((l, sum));
        }
    }
    let series_converges = match w {
        WeightSequence::Parametric { mu } => {
            let mu_f = crate::core::weight::rational_to_f64(mu);
            Some(p * mu_f > 1.0)
        }
        WeightSequence::Pattern => Some(true),
        WeightSequence::Tabulated { extension, .. } => extension.map(|c| c > 1.0),
    };
    // surrogate: for each window length, the easiest window on the grid
    let mut surrogate = f64::NEG_INFINITY;
    let mut surrogate_n = 0u64;
    for n in 1..=nmax {
        let mut best = f64::INFINITY;
        for k in 0..=kmax {
            let v = prefix[(k + n) as usize] - prefix[k as usize];
            if v < best {
                best = v;
            }
        }
        if best > surrogate {
            surrogate = best;
            surrogate_n = n;
        }
    }
    let surrogate = surrogate.exp();
    Ok(WeightConditionReport {
        partial_sums,
        series_converges,
        series_pass: matches!(series_converges, Some(true)),
        surrogate,
        surrogate_n,
        window_pass: surrogate <= 1.0 + tol,
        finite_check_only: series_converges.is_none(),
    })
}
