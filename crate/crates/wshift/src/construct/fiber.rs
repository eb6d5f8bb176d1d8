//! Deterministic bookkeeping for the staged constructions: which block
//! length a level carries, which levels serve a given length, and (for the
//! parametrized family) which rational each level is responsible for.
//!
//! Rationals above 1 are enumerated breadth-first down the rational tree
//! whose node `a/b` has children `a/(a+b)` and `(a+b)/b`; index 1 is 2, then
//! 3/2, 3, 4/3, 5/2, 5/3, 4, ... Every rational in `(1, infinity)` appears
//! exactly once, so the enumeration index is a total order the rest of the
//! construction can cite.

use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed};

/// Block length carried by an even level: the 2-adic valuation of `k`.
pub fn tau(k: u64) -> Result<u64> {
    if k == 0 || k % 2 != 0 {
        return Err(Error::PreconditionError(format!(
            "tau is defined on positive even levels, got {k}"
        )));
    }
    Ok(k.trailing_zeros() as u64)
}

/// The `i`-th level carrying block length `n`: `2^n * (2i - 1)`.
pub fn phi(n: u32, i: u64) -> Result<u64> {
    if n == 0 || i == 0 {
        return Err(Error::PreconditionError(format!(
            "phi needs n >= 1 and i >= 1, got n={n} i={i}"
        )));
    }
    let odd = i
        .checked_mul(2)
        .and_then(|x| x.checked_sub(1))
        .ok_or_else(|| Error::BoundExceeded(format!("phi({n}, {i}) overflows u64")))?;
    odd.checked_shl(n)
        .filter(|v| v >> n == odd)
        .ok_or_else(|| Error::BoundExceeded(format!("phi({n}, {i}) overflows u64")))
}

/// Invert [`phi`]: which `(n, i)` produced this even level.
pub fn phi_inverse(level: u64) -> Result<(u32, u64)> {
    if level == 0 || level % 2 != 0 {
        return Err(Error::PreconditionError(format!(
            "only positive even levels carry blocks, got {level}"
        )));
    }
    let n = level.trailing_zeros();
    let odd = level >> n;
    Ok((n, (odd + 1) / 2))
}

/// Cantor pairing `(x, y) -> (x+y)(x+y+1)/2 + y`, a bijection on pairs of
/// non-negative integers.
pub fn cantor_pair(x: u64, y: u64) -> Result<u64> {
    let s = (x as u128) + (y as u128);
    let z = s * (s + 1) / 2 + (y as u128);
    u64::try_from(z).map_err(|_| Error::BoundExceeded(format!("cantor_pair({x}, {y}) overflows")))
}

/// Invert [`cantor_pair`].
pub fn cantor_unpair(z: u64) -> (u64, u64) {
    // s = floor((sqrt(8z + 1) - 1) / 2), computed exactly
    let zz = z as u128;
    let mut s = ((8.0 * z as f64 + 1.0).sqrt() as u128).saturating_sub(1) / 2;
    while s * (s + 1) / 2 > zz {
        s -= 1;
    }
    while (s + 1) * (s + 2) / 2 <= zz {
        s += 1;
    }
    let y = zz - s * (s + 1) / 2;
    let x = s - y;
    (x as u64, y as u64)
}

/// The `j`-th rational in the breadth-first enumeration of `(0, infinity)`
/// started at 1 (so the root is 1, index 2 is 1/2, index 3 is 2, ...).
pub fn calkin_wilf(j: u64) -> Result<BigRational> {
    if j == 0 {
        return Err(Error::PreconditionError(
            "rational enumeration starts at index 1".into(),
        ));
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    let bits = 64 - j.leading_zeros();
    // walk the path encoded by the bits of j below its leading 1
    for shift in (0..bits.saturating_sub(1)).rev() {
        if (j >> shift) & 1 == 1 {
            num += &den;
        } else {
            den += &num;
        }
    }
    Ok(BigRational::new(num, den))
}

/// The `j`-th rational strictly above 1: one plus the `j`-th node of the
/// tree, giving 2, 3/2, 3, 4/3, 5/2, 5/3, 4, ...
pub fn rational_at(j: u64) -> Result<BigRational> {
    Ok(calkin_wilf(j)? + BigRational::one())
}

/// Enumeration index of a rational `r > 1` (inverse of [`rational_at`]).
pub fn cw_index(r: &BigRational) -> Result<BigInt> {
    if *r <= BigRational::one() {
        return Err(Error::PreconditionError(format!(
            "only rationals above 1 are enumerated, got {r}"
        )));
    }
    let shifted = r - BigRational::one();
    let mut a = shifted.numer().clone();
    let mut b = shifted.denom().clone();
    let mut bits = Vec::new();
    while !(a.is_one() && b.is_one()) {
        if !a.is_positive() || !b.is_positive() {
            return Err(Error::InternalError(format!(
                "tree walk left the positive quadrant inverting {r}"
            )));
        }
        if a > b {
            bits.push(true);
            a -= &b;
        } else {
            bits.push(false);
            b -= &a;
        }
    }
    let mut j = BigInt::one();
    for bit in bits.iter().rev() {
        j <<= 1;
        if *bit {
            j += 1;
        }
    }
    Ok(j)
}

/// What an even level of the parametrized construction is responsible for:
/// a block length `n`, the enumeration index `j` of its rational, the
/// rational itself, and how many times this `(n, j)` pair has been served
/// so far (its rank, starting at 1).
#[derive(Debug, Clone, PartialEq)]
pub struct RhoValue {
    pub n: u64,
    pub j: u64,
    pub r: BigRational,
    pub rank: u64,
}

/// Deterministic assignment of `(n, j)` pairs to even levels: level `2m`
/// with `m = 2^a * (2b + 1)` serves the pair unpaired from `b`, for the
/// `(a + 1)`-th time. Every pair is served infinitely often.
pub fn rho(level: u64) -> Result<RhoValue> {
    if level == 0 || level % 2 != 0 {
        return Err(Error::PreconditionError(format!(
            "rho is defined on positive even levels, got {level}"
        )));
    }
    let m = level / 2;
    let a = m.trailing_zeros() as u64;
    // m = 2^a * (2b + 1); the pair index is b
    let b = ((m >> a) - 1) / 2;
    let (c, d) = cantor_unpair(b);
    Ok(RhoValue {
        n: c + 1,
        j: d + 1,
        r: rational_at(d + 1)?,
        rank: a + 1,
    })
}

/// The level at which the pair `(n, j)` is served for the `rank`-th time
/// (inverse of [`rho`]).
pub fn rho_level(n: u64, j: u64, rank: u64) -> Result<u64> {
    if n == 0 || j == 0 || rank == 0 {
        return Err(Error::PreconditionError(format!(
            "rho_level needs n, j, rank >= 1, got ({n}, {j}, {rank})"
        )));
    }
    let b = cantor_pair(n - 1, j - 1)?;
    let odd = b
        .checked_mul(2)
        .and_then(|x| x.checked_add(1))
        .ok_or_else(|| Error::BoundExceeded("rho_level overflows u64".into()))?;
    if rank > 63 {
        return Err(Error::BoundExceeded(format!(
            "rho_level rank {rank} overflows u64"
        )));
    }
    let m = odd
        .checked_shl(rank as u32 - 1)
        .filter(|v| v >> (rank - 1) == odd)
        .ok_or_else(|| Error::BoundExceeded("rho_level overflows u64".into()))?;
    m.checked_mul(2)
        .ok_or_else(|| Error::BoundExceeded("rho_level overflows u64".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_is_two_adic_valuation() {
        assert_eq!(tau(2).unwrap(), 1);
        assert_eq!(tau(4).unwrap(), 2);
        assert_eq!(tau(6).unwrap(), 1);
        assert_eq!(tau(8).unwrap(), 3);
        assert_eq!(tau(12).unwrap(), 2);
        assert!(tau(3).is_err());
        assert!(tau(0).is_err());
    }

    #[test]
    fn phi_round_trips() {
        for n in 1..=6u32 {
            for i in 1..=50u64 {
                let l = phi(n, i).unwrap();
                assert_eq!(l % 2, 0);
                assert_eq!(tau(l).unwrap(), n as u64);
                assert_eq!(phi_inverse(l).unwrap(), (n, i));
            }
        }
        // the phi images tile the even numbers
        let mut seen: Vec<u64> = Vec::new();
        for n in 1..=10u32 {
            for i in 1..=512u64 {
                let l = phi(n, i).unwrap();
                if l <= 1024 {
                    seen.push(l);
                }
            }
        }
        seen.sort_unstable();
        let evens: Vec<u64> = (1..=512).map(|x| 2 * x).collect();
        assert_eq!(seen, evens);
    }

    #[test]
    fn cantor_round_trips() {
        let mut expected = 0u64;
        // enumeration order: anti-diagonals
        for s in 0..40u64 {
            for y in 0..=s {
                let x = s - y;
                let z = cantor_pair(x, y).unwrap();
                assert_eq!(z, expected);
                assert_eq!(cantor_unpair(z), (x, y));
                expected += 1;
            }
        }
    }

    #[test]
    fn rational_enumeration_prefix() {
        let want = [
            (2, 1),
            (3, 2),
            (3, 1),
            (4, 3),
            (5, 2),
            (5, 3),
            (4, 1),
            (5, 4),
        ];
        for (j, (n, d)) in want.iter().enumerate() {
            let r = rational_at(j as u64 + 1).unwrap();
            assert_eq!(r, BigRational::new(BigInt::from(*n), BigInt::from(*d)));
        }
    }

    #[test]
    fn cw_index_inverts_enumeration() {
        for j in 1..=4000u64 {
            let r = rational_at(j).unwrap();
            assert_eq!(cw_index(&r).unwrap(), BigInt::from(j), "j={j}");
        }
        // the index of 1 + 1/n is 2^(n-1)
        for n in 1..=20u64 {
            let r = BigRational::new(BigInt::from(n + 1), BigInt::from(n));
            assert_eq!(cw_index(&r).unwrap(), BigInt::one() << (n - 1));
        }
    }

    #[test]
    fn rho_round_trips_and_hits_every_pair() {
        for level in (2..=4096u64).step_by(2) {
            let v = rho(level).unwrap();
            assert_eq!(rho_level(v.n, v.j, v.rank).unwrap(), level);
        }
        // pinned prefix: levels 2 and 4 both serve (n=1, r=2), level 6 serves (n=2, r=2)
        let v2 = rho(2).unwrap();
        assert_eq!((v2.n, v2.j, v2.rank), (1, 1, 1));
        let v4 = rho(4).unwrap();
        assert_eq!((v4.n, v4.j, v4.rank), (1, 1, 2));
        let v6 = rho(6).unwrap();
        assert_eq!((v6.n, v6.j, v6.rank), (2, 1, 1));
        // r = 3/2 (j = 2) first appears at level 2 * (2*cantor(0,1) + 1) = 10
        let v10 = rho(10).unwrap();
        assert_eq!((v10.n, v10.j, v10.rank), (1, 2, 1));
        assert_eq!(rho_level(1, 2, 1).unwrap(), 10);
    }

    #[test]
    fn rho_serves_pairs_infinitely_often() {
        let mut count = 0u32;
        for level in (2..=100_000u64).step_by(2) {
            let v = rho(level).unwrap();
            if v.n == 1 && v.j == 1 {
                count += 1;
                assert_eq!(v.rank as u32, count);
                assert_eq!(level, 2u64 << (count - 1));
            }
        }
        assert!(count >= 10);
    }
}
