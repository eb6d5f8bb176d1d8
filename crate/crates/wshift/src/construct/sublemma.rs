//! Selection of a window with small suffix sums inside a perturbation
//! budget: given `2^n` reals, each in `[-1, 1]`, whose total is at most 1,
//! there is an interval of length at least `n` inside `[1, 2^n]` on which
//! every suffix sum (sum of the last `j` entries, any `j`) stays at most 1.
//!
//! The finder walks right to left: it inspects the length-`n` window ending
//! at the current guard position; if some suffix of that window exceeds 1,
//! it jumps the guard left past the offending position and retries. Each
//! jump strands a positive surplus to its right, and the total budget of 1
//! cannot fund unboundedly many surpluses before the start of the range, so
//! the walk must succeed before the guard reaches position `n`.

use crate::core::IntegerInterval;
use crate::error::{Error, Result};
use num::bigint::BigInt;

/// Slack accepted when re-validating suffix sums: sums are compared against
/// `1 + MARGIN` so that a sum that is exactly 1 in exact arithmetic is not
/// rejected for floating point noise.
pub const VALIDATION_MARGIN: f64 = 1e-12;

fn check_inputs(deltas: &[f64], n: u32) -> Result<()> {
    if n < 7 {
        return Err(Error::PreconditionError(format!(
            "window selection needs n >= 7, got {n}"
        )));
    }
    if n > 30 {
        return Err(Error::BoundExceeded(format!(
            "refusing to materialize 2^{n} entries"
        )));
    }
    let len = 1usize << n;
    if deltas.len() != len {
        return Err(Error::ShapeError(format!(
            "expected exactly 2^{n} = {len} entries, got {}",
            deltas.len()
        )));
    }
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (i, d) in deltas.iter().enumerate() {
        if !d.is_finite() || d.abs() > 1.0 + VALIDATION_MARGIN {
            return Err(Error::PreconditionError(format!(
                "entry {} = {d} is outside [-1, 1]",
                i + 1
            )));
        }
        // Kahan summation: the budget check must not drift
        let y = d - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    if sum > 1.0 + VALIDATION_MARGIN * deltas.len() as f64 {
        return Err(Error::PreconditionError(format!(
            "total {sum} exceeds the unit budget"
        )));
    }
    Ok(())
}

/// Find an interval of length `n` in `[1, 2^n]` on which every suffix sum
/// of `deltas` is at most 1. `deltas[j - 1]` is the entry at position `j`.
pub fn find_good_interval(deltas: &[f64], n: u32) -> Result<IntegerInterval> {
    check_inputs(deltas, n)?;
    let n_us = n as usize;
    let mut g = deltas.len(); // guard: candidate right endpoint, 1-based
    let mut jumps = 0usize;
    while g >= n_us {
        // scan the window [g - n + 1, g] from the right, accumulating suffixes
        let mut running = 0.0f64;
        let mut offender: Option<usize> = None;
        for k in (g - n_us + 1..=g).rev() {
            running += deltas[k - 1];
            if running > 1.0 && offender.is_none() {
                offender = Some(k);
                break;
            }
        }
        match offender {
            None => {
                let lo = BigInt::from(g - n_us + 1);
                let hi = BigInt::from(g);
                return IntegerInterval::new(lo, hi);
            }
            Some(k) => {
                // the suffix starting at k is the first (rightmost) overrun;
                // everything from k rightward is dead, restart left of it
                g = k - 1;
                jumps += 1;
            }
        }
    }
    Err(Error::InternalError(format!(
        "window scan exhausted [1, 2^{n}] after {jumps} jumps; final guard {g}; \
         input sum {:.6}, max {:.6}",
        deltas.iter().sum::<f64>(),
        deltas.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    )))
}

/// Check that `interval` lies in `[1, 2^n]`, has length at least `n`, and
/// that every suffix sum of `deltas` over it is at most `1 + MARGIN`.
///
/// Suffix sums are recomputed here from prefix accumulations, a different
/// association order than the finder's right-to-left scan.
pub fn validate_interval(deltas: &[f64], n: u32, interval: &IntegerInterval) -> Result<()> {
    if n < 7 || n > 30 {
        return Err(Error::PreconditionError(format!("n = {n} out of range")));
    }
    let len = 1usize << n;
    if deltas.len() != len {
        return Err(Error::ShapeError(format!(
            "expected exactly 2^{n} = {len} entries, got {}",
            deltas.len()
        )));
    }
    let lo = interval.lo();
    let hi = interval.hi();
    if *lo < BigInt::from(1) || *hi > BigInt::from(len) {
        return Err(Error::PreconditionError(format!(
            "interval [{lo}, {hi}] leaves [1, {len}]"
        )));
    }
    if interval.len() < BigInt::from(n) {
        return Err(Error::PreconditionError(format!(
            "interval [{lo}, {hi}] is shorter than n = {n}"
        )));
    }
    let lo_us: usize = lo.try_into().map_err(|_| {
        Error::InternalError("interval endpoint does not fit a usize".into())
    })?;
    let hi_us: usize = hi.try_into().map_err(|_| {
        Error::InternalError("interval endpoint does not fit a usize".into())
    })?;
    // prefix sums over the interval; suffix(a..=hi) = pre[hi] - pre[a-1]
    let m = hi_us - lo_us + 1;
    let mut pre = vec![0.0f64; m + 1];
    for (i, j) in (lo_us..=hi_us).enumerate() {
        pre[i + 1] = pre[i] + deltas[j - 1];
    }
    let mut max_suffix = f64::NEG_INFINITY;
    // suffix starting at offset i+1 and ending at hi is pre[m] - pre[i]
    for i in (0..m).rev() {
        let s = pre[m] - pre[i];
        if s > max_suffix {
            max_suffix = s;
        }
    }
    if max_suffix > 1.0 + VALIDATION_MARGIN {
        return Err(Error::PreconditionError(format!(
            "suffix sum {max_suffix} exceeds 1 on [{lo}, {hi}]"
        )));
    }
    Ok(())
}
