//! Sparse vectors in `lp` indexed by arbitrary-precision positive integers.

use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::complex::Complex64;
use num::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Scalar field of a vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Real,
    Complex,
}

/// A finitely supported vector in `lp` with exact integer coordinates.
/// Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    p: f64,
    field: Field,
    entries: BTreeMap<BigInt, Complex64>,
}

impl SparseVector {
    pub fn new(p: f64, field: Field) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::PreconditionError(format!("need 1 <= p < inf, got {p}")));
        }
        Ok(SparseVector {
            p,
            field,
            entries: BTreeMap::new(),
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn unit(p: f64, field: Field, k: BigInt) -> Result<Self> {
        let mut v = Self::new(p, field)?;
        v.set(k, Complex64::new(1.0, 0.0))?;
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&BigInt, &Complex64)> {
        self.entries.iter()
    }

    /// Set coordinate `k`; zero removes the entry.
    pub fn set(&mut self, k: BigInt, value: Complex64) -> Result<()> {
        if !k.is_positive() {
            return Err(Error::ShapeError(format!("coordinate index {k} must be >= 1")));
        }
        if value.norm_sqr() == 0.0 {
            self.entries.remove(&k);
        } else {
            self.entries.insert(k, value);
        }
        Ok(())
    }

    /// Add `value` into coordinate `k`.
    pub fn add_to(&mut self, k: BigInt, value: Complex64) -> Result<()> {
        if !k.is_positive() {
            return Err(Error::ShapeError(format!("coordinate index {k} must be >= 1")));
        }
        let cur = self.entries.get(&k).copied().unwrap_or(Complex64::zero());
        self.set(k, cur + value)
    }

    pub fn coordinate(&self, k: &BigInt) -> Complex64 {
        self.entries.get(k).copied().unwrap_or(Complex64::zero())
    }

    pub fn support_min(&self) -> Option<&BigInt> {
        self.entries.keys().next()
    }

    pub fn support_max(&self) -> Option<&BigInt> {
        self.entries.keys().next_back()
    }

    /// `self + c * other` (supports must use the same `p`).
    pub fn add_scaled(&self, c: Complex64, other: &SparseVector) -> Result<SparseVector> {
        if (self.p - other.p).abs() > 0.0 {
            return Err(Error::ShapeError(format!(
                "mixing p={} with p={}",
                self.p, other.p
            )));
        }
        let mut out = self.clone();
        for (k, v) in &other.entries {
            out.add_to(k.clone(), c * v)?;
        }
        Ok(out)
    }

    pub fn scale(&self, c: Complex64) -> SparseVector {
        let mut out = SparseVector::new(self.p, self.field).expect("p already validated");
        for (k, v) in &self.entries {
            let w = c * v;
            if w.norm_sqr() != 0.0 {
                out.entries.insert(k.clone(), w);
            }
        }
        out
    }

    /// `lp` norm, scaled to avoid overflow of intermediate powers. Returns
    /// `inf` honestly if a stored coefficient already overflowed.
    pub fn p_norm(&self) -> f64 {
        let mut max = 0.0f64;
        for v in self.entries.values() {
            let a = v.norm();
            if a.is_infinite() || a.is_nan() {
                return f64::INFINITY;
            }
            max = max.max(a);
        }
        if max == 0.0 {
            return 0.0;
        }
        let mut sum = 0.0f64;
        for v in self.entries.values() {
            sum += (v.norm() / max).powf(self.p);
        }
        max * sum.powf(1.0 / self.p)
    }

    /// `log2` of `sum |x_k|^p`, computed entirely in log space. This is the
    /// fallback norm path for vectors whose coefficients cannot be held in
    /// f64 (it accepts per-coordinate log2 magnitudes).
    pub fn log2_p_pow_from_logs(p: f64, log2_abs: &[f64]) -> f64 {
        let mut acc = f64::NEG_INFINITY;
        for &l in log2_abs {
            acc = log2_add(acc, p * l);
        }
        acc
    }

    /// `log2(sum |x_k|^p)` of this vector via log-sum-exp.
    pub fn log2_p_pow_sum(&self) -> f64 {
        let logs: Vec<f64> = self.entries.values().map(|v| v.norm().log2()).collect();
        Self::log2_p_pow_from_logs(self.p, &logs)
    }

    /// Strip every coordinate `> horizon`, returning the removed mass
    /// `sum |x_k|^p` over dropped entries.
    pub fn truncate_above(&mut self, horizon: &BigInt) -> f64 {
        let dropped: Vec<BigInt> = self
            .entries
            .keys()
            .filter(|k| *k > horizon)
            .cloned()
            .collect();
        let mut mass = 0.0;
        for k in dropped {
            if let Some(v) = self.entries.remove(&k) {
                mass += v.norm().powf(self.p);
            }
        }
        mass
    }
}

/// `log2(2^a + 2^b)` without leaving log space.
pub fn log2_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (1.0 + (lo - hi).exp2()).log2()
}

// --- serde ---

#[derive(Serialize, Deserialize)]
struct SparseRepr {
    p: f64,
    field: Field,
    /// `[index, re, im]` triples, indices as decimal strings, sorted.
    entries: Vec<(String, f64, f64)>,
}

impl Serialize for SparseVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let entries = self
            .entries
            .iter()
            .map(|(k, v)| (k.to_string(), v.re, v.im))
            .collect();
        SparseRepr {
            p: self.p,
            field: self.field,
            entries,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SparseVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = SparseRepr::deserialize(d)?;
        let mut v = SparseVector::new(repr.p, repr.field).map_err(D::Error::custom)?;
        for (k, re, im) in repr.entries {
            let k: BigInt = k.parse().map_err(D::Error::custom)?;
            v.set(k, Complex64::new(re, im)).map_err(D::Error::custom)?;
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bi(x: i64) -> BigInt {
        BigInt::from(x)
    }

    #[test]
    fn norm_matches_hand_value() {
        let mut v = SparseVector::new(2.0, Field::Real).unwrap();
        v.set(bi(1), Complex64::new(3.0, 0.0)).unwrap();
        v.set(bi(7), Complex64::new(4.0, 0.0)).unwrap();
        assert!((v.p_norm() - 5.0).abs() < 1e-12);
        // p = 1
        let mut v = SparseVector::new(1.0, Field::Real).unwrap();
        v.set(bi(2), Complex64::new(-2.5, 0.0)).unwrap();
        v.set(bi(3), Complex64::new(1.5, 0.0)).unwrap();
        assert!((v.p_norm() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn norm_survives_huge_coordinates() {
        let mut v = SparseVector::new(2.0, Field::Real).unwrap();
        v.set(bi(1), Complex64::new(1e200, 0.0)).unwrap();
        v.set(bi(2), Complex64::new(1e200, 0.0)).unwrap();
        let n = v.p_norm();
        assert!(n.is_finite());
        assert!((n / (1e200 * 2f64.sqrt()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_space_norm_agrees_with_direct() {
        let mut v = SparseVector::new(2.0, Field::Real).unwrap();
        v.set(bi(1), Complex64::new(0.5, 0.0)).unwrap();
        v.set(bi(4), Complex64::new(0.25, 0.0)).unwrap();
        let direct = v.p_norm();
        let log2sum = v.log2_p_pow_sum();
        assert!(((log2sum / 2.0).exp2() - direct).abs() < 1e-12);
    }

    #[test]
    fn zero_entries_are_dropped() {
        let mut v = SparseVector::new(2.0, Field::Real).unwrap();
        v.set(bi(5), Complex64::new(1.0, 0.0)).unwrap();
        v.add_to(bi(5), Complex64::new(-1.0, 0.0)).unwrap();
        assert!(v.is_empty());
        assert!(v.set(bi(0), Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let mut v = SparseVector::new(2.0, Field::Complex).unwrap();
        v.set(bi(3), Complex64::new(0.5, -0.25)).unwrap();
        v.set(
            "123456789012345678901234567890".parse().unwrap(),
            Complex64::new(1e-30, 0.0),
        )
        .unwrap();
        let s = serde_json::to_string(&v).unwrap();
        let back: SparseVector = serde_json::from_str(&s).unwrap();
        assert_eq!(v, back);
    }

    #[test]
    fn truncation_reports_dropped_mass() {
        let mut v = SparseVector::new(2.0, Field::Real).unwrap();
        v.set(bi(1), Complex64::new(1.0, 0.0)).unwrap();
        v.set(bi(100), Complex64::new(0.5, 0.0)).unwrap();
        let dropped = v.truncate_above(&bi(10));
        assert!((dropped - 0.25).abs() < 1e-15);
        assert_eq!(v.len(), 1);
    }
}
