//! The weighted backward shift, its powers, and embedded block vectors.
//!
//! The shift acts coordinate-wise: position `k` of the image of the `m`-th
//! power holds `(prod_{j=k}^{k+m-1} w_j) * x_{k+m}`. Block vectors place a
//! finite payload on an interval, dividing each payload entry by the weight
//! product accumulated between its nominal position and the interval, so
//! that shifting by one less than the interval start recovers the payload
//! exactly.

use crate::core::sparse::log2_add;
use crate::core::{Field, IntegerInterval, SparseVector, WeightSequence};
use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::complex::Complex64;
use num::{One, Signed, Zero};

/// Apply the `m`-th power of the backward shift with weight `w` to `x`.
///
/// Entries whose index is `<= m` fall off the front. Multipliers are formed
/// in log space, so magnitudes only overflow when the true value does.
pub fn apply_shift(w: &WeightSequence, x: &SparseVector, m: &BigInt) -> Result<SparseVector> {
    if m.is_negative() {
        return Err(Error::PreconditionError(format!(
            "shift exponent must be >= 0, got {m}"
        )));
    }
    let mut out = SparseVector::new(x.p(), x.field())?;
    for (k, c) in x.entries() {
        let t = k - m;
        if !t.is_positive() {
            continue;
        }
        let mag = c.norm();
        if mag == 0.0 {
            continue;
        }
        if m.is_zero() {
            out.add_to(t, *c)?;
            continue;
        }
        let logmul = w.log_product(&t, &(k - 1))?;
        let scaled = (c / mag) * (mag.ln() + logmul).exp();
        out.add_to(t, scaled)?;
    }
    Ok(out)
}

/// A finite payload attached to an integer interval, to be realized as a
/// sparse vector whose coordinates compensate the weight products between
/// the payload slot and the interval.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    interval: IntegerInterval,
    payload: Vec<Complex64>,
    weight: WeightSequence,
}

impl BlockVector {
    pub fn interval(&self) -> &IntegerInterval {
        &self.interval
    }

    pub fn payload(&self) -> &[Complex64] {
        &self.payload
    }

    pub fn weight(&self) -> &WeightSequence {
        &self.weight
    }
}

/// Embed `payload` on `interval` under the weight `w`.
///
/// The realized vector puts `payload[s-1] / prod_{j=s}^{lo+s-2} w_j` at
/// position `lo+s-1` for `s = 1..=|interval|` (the product is empty when
/// `lo = 1`).
pub fn theta_embed(
    w: &WeightSequence,
    interval: IntegerInterval,
    payload: Vec<Complex64>,
) -> Result<BlockVector> {
    let len = interval.len_usize()?;
    if payload.len() != len {
        return Err(Error::ShapeError(format!(
            "payload length {} does not match interval length {}",
            payload.len(),
            len
        )));
    }
    Ok(BlockVector {
        interval,
        payload,
        weight: w.clone(),
    })
}

/// Surviving coordinates of the `m`-th shift of a block, as
/// `(target index, signed unit phase, log2 magnitude)` triples.
///
/// Payload slot `s` sits at `t = lo + s - 1` and survives iff `t > m`; its
/// image lands at `t - m` with coefficient
/// `payload[s-1] * prod_{l=t-m}^{t-1} w_l / prod_{j=s}^{t-1} w_j`, which
/// telescopes to a single product over `[min(s, t-m), max(s, t-m) - 1]`,
/// inverted when the shift undershoots the embedding depth. At
/// `m = lo - 1` the product is empty: the payload is recovered exactly.
pub fn shift_block_log2(
    block: &BlockVector,
    m: &BigInt,
) -> Result<Vec<(BigInt, Complex64, f64)>> {
    if m.is_negative() {
        return Err(Error::PreconditionError(format!(
            "shift exponent must be >= 0, got {m}"
        )));
    }
    let w = &block.weight;
    let lo = block.interval.lo();
    // d = lo - 1 - m: residual embedding depth after the shift
    let d = lo - BigInt::one() - m;
    let mut out = Vec::new();
    for (idx, c) in block.payload.iter().enumerate() {
        let s = BigInt::from(idx as u64 + 1);
        let target = &s + &d;
        if !target.is_positive() {
            continue;
        }
        let mag = c.norm();
        if mag == 0.0 {
            continue;
        }
        let log2mag = if d.is_zero() {
            mag.log2()
        } else if d.is_positive() {
            // still embedded d deep: divide by the product over [s, s+d-1]
            mag.log2() - w.log_product(&s, &(&s + &d - 1))? / std::f64::consts::LN_2
        } else {
            // overshot the payload slot: multiply the product over [s+d, s-1]
            mag.log2() + w.log_product(&(&s + &d), &(&s - 1))? / std::f64::consts::LN_2
        };
        out.push((target, c / mag, log2mag));
    }
    Ok(out)
}

/// Realize the `m`-th shift of a block as a sparse vector.
///
/// Coefficients beyond f64 range degrade to 0 or infinity; certificates
/// that care about extreme magnitudes use [`shift_block_log2`] instead.
pub fn shift_block(block: &BlockVector, m: &BigInt, p: f64, field: Field) -> Result<SparseVector> {
    let mut out = SparseVector::new(p, field)?;
    for (target, phase, log2mag) in shift_block_log2(block, m)? {
        let value = phase * log2mag.exp2();
        if value.norm() == 0.0 {
            continue;
        }
        out.add_to(target, value)?;
    }
    Ok(out)
}

/// Realize the block itself (its zeroth shift).
pub fn realize_block(block: &BlockVector, p: f64, field: Field) -> Result<SparseVector> {
    shift_block(block, &BigInt::zero(), p, field)
}

/// log2 of `sum_s |coefficient_s|^p` over the surviving coordinates of the
/// `m`-th shift of a block; `-inf` when nothing survives.
pub fn block_mass_log2(block: &BlockVector, m: &BigInt, p: f64) -> Result<f64> {
    let mut total = f64::NEG_INFINITY;
    for (_, _, log2mag) in shift_block_log2(block, m)? {
        total = log2_add(total, p * log2mag);
    }
    Ok(total)
}

/// `|| x - y ||_p` for two sparse vectors sharing the same exponent.
pub fn distance_p(x: &SparseVector, y: &SparseVector) -> Result<f64> {
    if (x.p() - y.p()).abs() > 0.0 {
        return Err(Error::ShapeError(format!(
            "mismatched exponents {} vs {}",
            x.p(),
            y.p()
        )));
    }
    let minus_one = Complex64::new(-1.0, 0.0);
    Ok(x.add_scaled(minus_one, y)?.p_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::ToPrimitive;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bi(x: i64) -> BigInt {
        BigInt::from(x)
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_vector(rng: &mut ChaCha8Rng, p: f64, max_index: i64) -> SparseVector {
        let mut v = SparseVector::new(p, Field::Complex).unwrap();
        for _ in 0..8 {
            let k = rng.gen_range(1..=max_index);
            let val = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            v.set(bi(k), val).unwrap();
        }
        v
    }

    #[test]
    fn single_shift_matches_definition() {
        let w = WeightSequence::parametric_int(2);
        let mut x = SparseVector::new(2.0, Field::Complex).unwrap();
        x.set(bi(1), c(5.0, 0.0)).unwrap();
        x.set(bi(3), c(0.0, 1.0)).unwrap();
        let y = apply_shift(&w, &x, &BigInt::one()).unwrap();
        // position 2 of y = w_2 * x_3 = (1 + 2/2) * i = 2i; position 1 of x dies
        assert_eq!(y.len(), 1);
        let got = y.coordinate(&bi(2));
        assert!((got - c(0.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn shift_semigroup_on_random_vectors() {
        let weights = [
            WeightSequence::parametric_int(2),
            WeightSequence::parametric(3, 2),
            WeightSequence::Pattern,
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for w in &weights {
            for _ in 0..25 {
                let x = random_vector(&mut rng, 2.0, 400);
                let m1 = bi(rng.gen_range(0..40));
                let m2 = bi(rng.gen_range(0..40));
                let once = apply_shift(w, &x, &(&m1 + &m2)).unwrap();
                let twice = apply_shift(w, &apply_shift(w, &x, &m2).unwrap(), &m1).unwrap();
                let d = distance_p(&once, &twice).unwrap();
                let scale = once.p_norm().max(1.0);
                assert!(d <= 1e-10 * scale, "semigroup violated: {d} vs {scale}");
            }
        }
    }

    #[test]
    fn shift_is_linear() {
        let w = WeightSequence::Pattern;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random_vector(&mut rng, 2.0, 200);
        let y = random_vector(&mut rng, 2.0, 200);
        let a = c(0.7, -0.3);
        let m = bi(13);
        let lhs = apply_shift(&w, &x.add_scaled(a, &y).unwrap(), &m).unwrap();
        let rhs = apply_shift(&w, &x, &m)
            .unwrap()
            .add_scaled(a, &apply_shift(&w, &y, &m).unwrap())
            .unwrap();
        assert!(distance_p(&lhs, &rhs).unwrap() < 1e-10 * lhs.p_norm().max(1.0));
    }

    #[test]
    fn operator_norm_bound_single_power() {
        // ||B_w x||_p <= sup w * ||x||_p
        let weights = [WeightSequence::parametric_int(3), WeightSequence::Pattern];
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for w in &weights {
            let sup = w.sup_norm().unwrap();
            for _ in 0..20 {
                let x = random_vector(&mut rng, 2.0, 300);
                let y = apply_shift(w, &x, &BigInt::one()).unwrap();
                assert!(y.p_norm() <= sup * x.p_norm() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn block_exact_recovery_and_annihilation() {
        let w = WeightSequence::parametric(3, 2);
        let interval = IntegerInterval::new(bi(40), bi(43)).unwrap();
        let payload = vec![c(0.5, 0.0), c(0.0, -0.25), c(0.125, 0.125), c(-1.0, 0.0)];
        let block = theta_embed(&w, interval, payload.clone()).unwrap();
        // shifting by lo - 1 recovers the payload exactly, bit for bit
        let rec = shift_block(&block, &bi(39), 2.0, Field::Complex).unwrap();
        for (s, want) in payload.iter().enumerate() {
            assert_eq!(rec.coordinate(&bi(s as i64 + 1)), *want, "slot {s}");
        }
        // shifting past the interval end kills everything
        for m in [43i64, 44, 100] {
            let dead = shift_block(&block, &bi(m), 2.0, Field::Complex).unwrap();
            assert!(dead.is_empty(), "m={m}");
        }
    }

    #[test]
    fn block_shift_matches_direct_shift() {
        let weights = [
            WeightSequence::parametric_int(2),
            WeightSequence::Pattern,
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for w in &weights {
            for _ in 0..20 {
                let lo = rng.gen_range(2..60);
                let len = rng.gen_range(1..6);
                let interval = IntegerInterval::new(bi(lo), bi(lo + len - 1)).unwrap();
                let payload: Vec<Complex64> = (0..len)
                    .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let block = theta_embed(w, interval, payload).unwrap();
                let direct = realize_block(&block, 2.0, Field::Complex).unwrap();
                for m in [0i64, 1, lo - 1, lo, lo + len - 1, lo + len] {
                    let via_block = shift_block(&block, &bi(m), 2.0, Field::Complex).unwrap();
                    let via_shift = apply_shift(w, &direct, &bi(m)).unwrap();
                    let d = distance_p(&via_block, &via_shift).unwrap();
                    let scale = via_block.p_norm().max(1e-30);
                    assert!(d <= 1e-10 * scale.max(1.0), "lo={lo} m={m}: {d}");
                }
            }
        }
    }

    #[test]
    fn block_mass_matches_norm() {
        let w = WeightSequence::parametric_int(2);
        let interval = IntegerInterval::new(bi(25), bi(27)).unwrap();
        let payload = vec![c(0.5, 0.0), c(0.25, 0.25), c(0.0, -0.5)];
        let block = theta_embed(&w, interval, payload).unwrap();
        for m in [0i64, 3, 24, 25] {
            let mass = block_mass_log2(&block, &bi(m), 2.0).unwrap();
            let direct = shift_block(&block, &bi(m), 2.0, Field::Complex).unwrap();
            let norm = direct.p_norm();
            if norm == 0.0 {
                assert!(mass.is_infinite() && mass < 0.0);
            } else {
                assert!((mass - 2.0 * norm.log2()).abs() < 1e-9, "m={m}");
            }
        }
    }

    #[test]
    fn payload_length_must_match() {
        let w = WeightSequence::Pattern;
        let interval = IntegerInterval::new(bi(5), bi(7)).unwrap();
        assert!(matches!(
            theta_embed(&w, interval, vec![c(1.0, 0.0)]),
            Err(Error::ShapeError(_))
        ));
    }

    #[test]
    fn deep_block_coefficients_stay_in_log_range() {
        // a block far out has coefficients around 4^{-e(lo)}; the log2 view
        // must stay finite while the f64 view underflows to zero
        let w = WeightSequence::Pattern;
        let lo = bi(100_000);
        let interval = IntegerInterval::new(lo.clone(), lo.clone() + 1).unwrap();
        let block = theta_embed(&w, interval, vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let logs = shift_block_log2(&block, &BigInt::zero()).unwrap();
        assert_eq!(logs.len(), 2);
        for (_, _, l) in &logs {
            assert!(l.is_finite());
            assert!(*l < -80_000.0);
        }
        let e = WeightSequence::pattern_hi_count(&(lo - 1)).to_f64().unwrap();
        assert!((logs[0].2 + 2.0 * e).abs() < 1e-6);
    }
}
