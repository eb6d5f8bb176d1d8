//! Deterministic enumeration of the rational vectors inside the open unit
//! ball of `lp^n` whose last coordinate is nonzero.
//!
//! The enumeration order is a free choice, but everything downstream keys
//! off it, so it is frozen here: scalars are ordered by height (numerator
//! plus denominator of the reduced fraction, summed over real and imaginary
//! parts), tuples by total height, then lexicographically by component
//! height, then componentwise in scalar order with the rightmost component
//! advancing fastest. Membership is decided in exact rational arithmetic
//! whenever `p` makes the p-th powers rational; otherwise a guarded
//! floating check is used and tuples within `1e-12` of the boundary are
//! skipped rather than risk emitting a non-member.

use crate::core::Field;
use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::complex::Complex64;
use num::rational::BigRational;
use num::{One, Signed, Zero};

/// A rational scalar, real or complex depending on the enumerator's field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QScalar {
    pub re: BigRational,
    pub im: BigRational,
}

impl QScalar {
    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    /// `|re|^2 + |im|^2` exactly.
    fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(
            crate::core::weight::rational_to_f64(&self.re),
            crate::core::weight::rational_to_f64(&self.im),
        )
    }
}

/// Reduced rationals of height `h` (`|num| + den`, zero has height 1),
/// denominators ascending, positive before negative.
fn rationals_at_height(h: u64) -> Vec<BigRational> {
    if h == 0 {
        return Vec::new();
    }
    if h == 1 {
        return vec![BigRational::zero()];
    }
    let mut out = Vec::new();
    for den in 1..h {
        let num = h - den;
        let (n, d) = (BigInt::from(num), BigInt::from(den));
        if num::integer::gcd(n.clone(), d.clone()).is_one() {
            out.push(BigRational::new(n.clone(), d.clone()));
            out.push(BigRational::new(-n, d));
        }
    }
    out
}

/// Scalars of component height `c` in the frozen order. Real scalars use
/// the rational's own height; complex scalars of height `c` are the pairs
/// `(re, im)` with `height(re) + height(im) = c`, real height ascending,
/// imaginary part advancing fastest.
fn scalars_at_height(field: Field, c: u64) -> Vec<QScalar> {
    match field {
        Field::Real => rationals_at_height(c)
            .into_iter()
            .map(|re| QScalar {
                re,
                im: BigRational::zero(),
            })
            .collect(),
        Field::Complex => {
            let mut out = Vec::new();
            for hre in 1..c {
                let him = c - hre;
                for re in rationals_at_height(hre) {
                    for im in rationals_at_height(him) {
                        out.push(QScalar {
                            re: re.clone(),
                            im,
                        });
                    }
                }
            }
            out
        }
    }
}

/// Smallest component height: real scalars start at 1 (zero), complex
/// pairs at 2 (zero + zero).
fn min_component_height(field: Field) -> u64 {
    match field {
        Field::Real => 1,
        Field::Complex => 2,
    }
}

/// How a membership check decides: exactly, or through a padded float.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Membership {
    In,
    Out,
}

const FLOAT_MARGIN: f64 = 1e-12;

/// Enumerates the rational tuples `(a_1, ..., a_n)` with
/// `sum |a_j|^p < 1` and `a_n != 0`, in the frozen order documented on the
/// module. Emitted tuples are cached, so repeated queries are cheap.
#[derive(Debug, Clone)]
pub struct RationalBallEnumerator {
    n: usize,
    p: f64,
    field: Field,
    cache: Vec<Vec<QScalar>>,
    /// Next total height to expand when the cache runs dry.
    next_height: u64,
}

impl RationalBallEnumerator {
    pub fn new(n: usize, p: f64, field: Field) -> Result<Self> {
        if n == 0 {
            return Err(Error::PreconditionError(
                "ball dimension must be >= 1".into(),
            ));
        }
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::PreconditionError(format!(
                "need 1 <= p < inf, got {p}"
            )));
        }
        Ok(RationalBallEnumerator {
            n,
            p,
            field,
            cache: Vec::new(),
            next_height: min_component_height(field) * n as u64,
        })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// Whether `sum |a_j|^p` can be compared to 1 in exact arithmetic:
    /// integer `p` for real scalars, even integer `p` for complex ones
    /// (odd powers of `sqrt(re^2 + im^2)` are irrational).
    fn exact_path(&self) -> Option<u32> {
        let k = self.p.round();
        if (self.p - k).abs() > 0.0 || k < 1.0 || k > 64.0 {
            return None;
        }
        let k = k as u32;
        match self.field {
            Field::Real => Some(k),
            Field::Complex => (k % 2 == 0).then_some(k),
        }
    }

    fn membership(&self, tuple: &[QScalar]) -> Membership {
        if let Some(k) = self.exact_path() {
            let mut total = BigRational::zero();
            for a in tuple {
                total += match self.field {
                    // |a|^k = |re|^k for real scalars
                    Field::Real => {
                        let m = a.re.abs();
                        num::pow::pow(m, k as usize)
                    }
                    // k even: |a|^k = (re^2 + im^2)^{k/2}
                    Field::Complex => num::pow::pow(a.norm_sqr(), (k / 2) as usize),
                };
            }
            if total < BigRational::one() {
                Membership::In
            } else {
                Membership::Out
            }
        } else {
            let mut total = 0.0f64;
            for a in tuple {
                let m = crate::core::weight::rational_to_f64(&a.norm_sqr()).sqrt();
                total += m.powf(self.p);
            }
            // near-boundary tuples are skipped: only a clear margin admits
            if total < 1.0 - FLOAT_MARGIN {
                Membership::In
            } else {
                Membership::Out
            }
        }
    }

    /// Append every member tuple of total height `h` to the cache, in the
    /// frozen order.
    fn expand_height(&mut self, h: u64) {
        let min_c = min_component_height(self.field);
        let mut heights = vec![min_c; self.n];
        // compositions of h into n parts >= min_c, lexicographic
        fn visit(
            this: &mut RationalBallEnumerator,
            heights: &mut Vec<u64>,
            slot: usize,
            remaining: u64,
            min_c: u64,
        ) {
            let slots_left = (heights.len() - slot) as u64;
            if slot == heights.len() {
                if remaining == 0 {
                    this.emit_composition(&heights.clone());
                }
                return;
            }
            if remaining < slots_left * min_c {
                return;
            }
            let max_here = remaining - (slots_left - 1) * min_c;
            for c in min_c..=max_here {
                heights[slot] = c;
                visit(this, heights, slot + 1, remaining - c, min_c);
            }
        }
        visit(self, &mut heights, 0, h, min_c);
    }

    /// Cartesian product over one composition, rightmost slot fastest.
    fn emit_composition(&mut self, heights: &[u64]) {
        let pools: Vec<Vec<QScalar>> = heights
            .iter()
            .map(|&c| scalars_at_height(self.field, c))
            .collect();
        if pools.iter().any(|p| p.is_empty()) {
            return;
        }
        let mut idx = vec![0usize; pools.len()];
        loop {
            let tuple: Vec<QScalar> = idx.iter().zip(&pools).map(|(&i, p)| p[i].clone()).collect();
            if !tuple[self.n - 1].is_zero() && self.membership(&tuple) == Membership::In {
                self.cache.push(tuple);
            }
            // odometer, last slot fastest
            let mut slot = pools.len();
            loop {
                if slot == 0 {
                    return;
                }
                slot -= 1;
                idx[slot] += 1;
                if idx[slot] < pools[slot].len() {
                    break;
                }
                idx[slot] = 0;
            }
        }
    }

    /// The `i`-th member tuple (0-based) in the frozen order.
    pub fn tuple_at(&mut self, i: usize) -> Result<&[QScalar]> {
        while self.cache.len() <= i {
            let h = self.next_height;
            self.next_height += 1;
            self.expand_height(h);
            // every slot below height 3 is 0 or +-1, so no member can exist
            // before total height allows one coordinate of height >= 3; the
            // loop always terminates because members of every larger height
            // exist (scale denominators up)
            if h > 64 && self.cache.is_empty() {
                return Err(Error::InternalError(
                    "ball enumeration produced nothing below height 64".into(),
                ));
            }
        }
        Ok(&self.cache[i])
    }

    /// The `i`-th member as f64 scalars, ready for vector assembly.
    pub fn tuple_at_complex(&mut self, i: usize) -> Result<Vec<Complex64>> {
        Ok(self.tuple_at(i)?.iter().map(QScalar::to_complex).collect())
    }

    /// Position of `tuple` in the enumeration, scanning at most `cap`
    /// entries. The enumeration is injective, so a hit is unique.
    pub fn find_index(&mut self, tuple: &[QScalar], cap: usize) -> Result<usize> {
        if tuple.len() != self.n {
            return Err(Error::ShapeError(format!(
                "tuple length {} does not match dimension {}",
                tuple.len(),
                self.n
            )));
        }
        for i in 0..cap {
            if self.tuple_at(i)? == tuple {
                return Ok(i);
            }
        }
        Err(Error::SearchFailed(format!(
            "tuple not among the first {cap} ball members"
        )))
    }

    /// `sum |a_j|^p` of a member tuple as f64 (diagnostic).
    pub fn p_mass(&self, tuple: &[QScalar]) -> f64 {
        tuple
            .iter()
            .map(|a| {
                crate::core::weight::rational_to_f64(&a.norm_sqr())
                    .sqrt()
                    .powf(self.p)
            })
            .sum()
    }
}

/// Convenience: parse a rational scalar like `-3/4` (real part only).
pub fn rational_scalar(s: &str) -> Result<QScalar> {
    use std::str::FromStr;
    let re = BigRational::from_str(s)
        .map_err(|e| Error::PreconditionError(format!("bad rational {s}: {e}")))?;
    Ok(QScalar {
        re,
        im: BigRational::zero(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    #[test]
    fn first_members_are_pinned() {
        // dimension 1, p = 2, real: heights 1 and 2 give 0, 1, -1, all
        // rejected; height 3 gives 2, -2 (too big), then 1/2
        let mut e = RationalBallEnumerator::new(1, 2.0, Field::Real).unwrap();
        let first = e.tuple_at(0).unwrap();
        assert_eq!(first, &[QScalar { re: q(1, 2), im: q(0, 1) }]);
        // dimension 2: first member is (0, 1/2)
        let mut e = RationalBallEnumerator::new(2, 2.0, Field::Real).unwrap();
        let first = e.tuple_at(0).unwrap().to_vec();
        assert!(first[0].is_zero());
        assert_eq!(first[1].re, q(1, 2));
        // complex dimension 1: first member is i/2
        let mut e = RationalBallEnumerator::new(1, 2.0, Field::Complex).unwrap();
        let first = e.tuple_at(0).unwrap();
        assert!(first[0].re.is_zero());
        assert_eq!(first[0].im, q(1, 2));
    }

    #[test]
    fn every_member_satisfies_both_conditions() {
        for field in [Field::Real, Field::Complex] {
            for p in [1.0, 2.0, 2.5] {
                let mut e = RationalBallEnumerator::new(2, p, field).unwrap();
                for i in 0..200 {
                    let t = e.tuple_at(i).unwrap().to_vec();
                    assert!(!t[1].is_zero(), "i={i}: last component vanished");
                    let mass = e.p_mass(&t);
                    assert!(mass < 1.0 + 1e-12, "i={i}: mass {mass}");
                }
            }
        }
    }

    #[test]
    fn enumeration_is_injective_and_stable() {
        let mut e = RationalBallEnumerator::new(3, 2.0, Field::Real).unwrap();
        let prefix: Vec<_> = (0..300).map(|i| e.tuple_at(i).unwrap().to_vec()).collect();
        for i in 0..prefix.len() {
            for j in (i + 1)..prefix.len() {
                assert_ne!(prefix[i], prefix[j], "duplicates at {i}, {j}");
            }
        }
        // a fresh enumerator reproduces the same prefix
        let mut f = RationalBallEnumerator::new(3, 2.0, Field::Real).unwrap();
        for (i, want) in prefix.iter().enumerate() {
            assert_eq!(f.tuple_at(i).unwrap(), &want[..]);
        }
    }

    #[test]
    fn find_index_round_trips() {
        let mut e = RationalBallEnumerator::new(2, 2.0, Field::Real).unwrap();
        for i in (0..120).step_by(7) {
            let t = e.tuple_at(i).unwrap().to_vec();
            assert_eq!(e.find_index(&t, 200).unwrap(), i);
        }
        let missing = vec![
            QScalar { re: q(0, 1), im: q(0, 1) },
            QScalar { re: q(9, 10), im: q(0, 1) },
        ];
        // (0, 9/10) is a member, so it is found eventually; (0, 2) is not
        assert!(e.find_index(&missing, 4000).is_ok());
        let non_member = vec![
            QScalar { re: q(0, 1), im: q(0, 1) },
            QScalar { re: q(2, 1), im: q(0, 1) },
        ];
        assert!(matches!(
            e.find_index(&non_member, 500),
            Err(Error::SearchFailed(_))
        ));
    }

    #[test]
    fn exact_and_float_paths_agree_away_from_margin() {
        // p = 2 uses exact arithmetic, p = 2 + 1e-13 uses the float path;
        // the first members must coincide while the boundary is far away
        let mut exact = RationalBallEnumerator::new(2, 2.0, Field::Real).unwrap();
        let mut float = RationalBallEnumerator::new(2, 2.0 + 1e-13, Field::Real).unwrap();
        for i in 0..150 {
            assert_eq!(
                exact.tuple_at(i).unwrap(),
                float.tuple_at(i).unwrap(),
                "paths diverge at {i}"
            );
        }
    }

    #[test]
    fn unit_norm_tuples_are_excluded() {
        // (3/5, 4/5) has p=2 mass exactly 1 and must not appear
        let mut e = RationalBallEnumerator::new(2, 2.0, Field::Real).unwrap();
        let boundary = vec![
            QScalar { re: q(3, 5), im: q(0, 1) },
            QScalar { re: q(4, 5), im: q(0, 1) },
        ];
        assert!(matches!(
            e.find_index(&boundary, 3000),
            Err(Error::SearchFailed(_))
        ));
    }
}
