//! Weight sequences and certified log-space products.

use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::str::FromStr;

/// Below this index, parametric products are summed term by term; from it on,
/// a Stirling-type expansion of the log-gamma difference takes over. At
/// `x >= 4096` the truncation error of the expansion is below 1e-20, far
/// inside the 1e-10 agreement the tests demand.
const STIRLING_CUTOFF: u64 = 4096;

/// A bounded sequence of strictly positive weights `w_1, w_2, ...`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSequence {
    /// `w_j = 1 + mu / j` for a fixed rational `mu > 0`.
    Parametric { mu: BigRational },
    /// Finite table of values for `w_1 ..= w_n`, optionally extended by a
    /// constant for all later indices.
    Tabulated {
        values: Vec<f64>,
        extension: Option<f64>,
    },
    /// Two-valued weight: 1 on the stretches `[4^i, 2*4^i)` for `i >= 1`,
    /// and 4 everywhere else. Its prefix products are `4^e(l)` where `e(l)`
    /// counts the high indices `<= l`, an exact integer quantity.
    Pattern,
}

impl WeightSequence {
    /// Convenience constructor for `w_j = 1 + mu/j` with integer `mu`.
    pub fn parametric_int(mu: i64) -> Self {
        WeightSequence::Parametric {
            mu: BigRational::from_integer(BigInt::from(mu)),
        }
    }

    /// Convenience constructor for rational `mu = num/den`.
    pub fn parametric(num: i64, den: i64) -> Self {
        WeightSequence::Parametric {
            mu: BigRational::new(BigInt::from(num), BigInt::from(den)),
        }
    }

    /// Number of high (value 4) indices in `[1, l]` for the pattern weight.
    pub fn pattern_hi_count(l: &BigInt) -> BigInt {
        let zero = BigInt::zero();
        if *l <= zero {
            return zero;
        }
        let mut ones = BigInt::zero();
        let mut start = BigInt::from(4); // 4^1
        while start <= *l {
            // ones stretch [4^i, 2*4^i - 1]
            let end = &start * 2 - 1;
            let hi = if &end <= l { end } else { l.clone() };
            ones += hi - &start + 1;
            start *= 4;
        }
        l - ones
    }

    /// Weight at position `j >= 1`.
    pub fn weight_at(&self, j: &BigInt) -> Result<f64> {
        if !j.is_positive() {
            return Err(Error::PreconditionError(format!(
                "weight index must be >= 1, got {j}"
            )));
        }
        match self {
            WeightSequence::Parametric { mu } => {
                let muf = rational_to_f64(mu);
                let jf = big_to_f64(j);
                Ok(1.0 + muf / jf)
            }
            WeightSequence::Tabulated { values, extension } => {
                match j.to_usize() {
                    Some(idx) if idx >= 1 && idx <= values.len() => Ok(values[idx - 1]),
                    _ => extension.ok_or_else(|| Error::OutOfTable(j.clone())),
                }
            }
            WeightSequence::Pattern => {
                // high iff the hi-count increments at j
                let here = Self::pattern_hi_count(j);
                let before = Self::pattern_hi_count(&(j - 1));
                Ok(if here > before { 4.0 } else { 1.0 })
            }
        }
    }

    /// Natural log of `prod_{j=a}^{b} w_j`; zero for the empty product `a > b`.
    pub fn log_product(&self, a: &BigInt, b: &BigInt) -> Result<f64> {
        if a > b {
            return Ok(0.0);
        }
        if !a.is_positive() {
            return Err(Error::PreconditionError(format!(
                "product range must start at >= 1, got [{a}, {b}]"
            )));
        }
        match self {
            WeightSequence::Parametric { mu } => Ok(parametric_log_product(mu, a, b)),
            WeightSequence::Tabulated { values, extension } => {
                let len = BigInt::from(values.len());
                let mut total = 0.0f64;
                let mut comp = 0.0f64; // Kahan compensation
                if *a <= len {
                    let hi = if *b <= len { b.clone() } else { len.clone() };
                    let lo = a.to_usize().ok_or_else(|| Error::OutOfTable(a.clone()))?;
                    let hi = hi.to_usize().ok_or_else(|| Error::OutOfTable(b.clone()))?;
                    for v in &values[lo - 1..hi] {
                        if *v <= 0.0 {
                            return Err(Error::PreconditionError(
                                "tabulated weights must be strictly positive".into(),
                            ));
                        }
                        let y = v.ln() - comp;
                        let t = total + y;
                        comp = (t - total) - y;
                        total = t;
                    }
                }
                if *b > len {
                    let c = extension.ok_or_else(|| Error::OutOfTable(b.clone()))?;
                    if c <= 0.0 {
                        return Err(Error::PreconditionError(
                            "extension constant must be strictly positive".into(),
                        ));
                    }
                    let from = if *a > len { a.clone() } else { &len + 1 };
                    let count = b - &from + 1;
                    total += big_to_f64(&count) * c.ln();
                }
                Ok(total)
            }
            WeightSequence::Pattern => {
                let diff = Self::pattern_hi_count(b) - Self::pattern_hi_count(&(a - 1));
                Ok(big_to_f64(&diff) * 4f64.ln())
            }
        }
    }

    /// Base-2 log of the prefix product `w_1 * ... * w_l`.
    pub fn log2_prefix(&self, l: &BigInt) -> Result<f64> {
        Ok(self.log_product(&BigInt::one(), l)? / std::f64::consts::LN_2)
    }

    /// Supremum of the weight values.
    pub fn sup_norm(&self) -> Result<f64> {
        match self {
            WeightSequence::Parametric { mu } => Ok(1.0 + rational_to_f64(mu)),
            WeightSequence::Tabulated { values, extension } => {
                let mut m = extension.unwrap_or(f64::NEG_INFINITY);
                for v in values {
                    m = m.max(*v);
                }
                if m.is_finite() {
                    Ok(m)
                } else {
                    Err(Error::PreconditionError("empty weight table".into()))
                }
            }
            WeightSequence::Pattern => Ok(4.0),
        }
    }

    /// Infimum of the weight values (may be a limit, as for the parametric
    /// kind where the weights decrease to 1).
    pub fn inf_weight(&self) -> Result<f64> {
        match self {
            WeightSequence::Parametric { mu } => {
                if !mu.is_positive() {
                    return Err(Error::PreconditionError(
                        "parametric weight needs mu > 0".into(),
                    ));
                }
                Ok(1.0)
            }
            WeightSequence::Tabulated { values, extension } => {
                let mut m = extension.unwrap_or(f64::INFINITY);
                for v in values {
                    m = m.min(*v);
                }
                if m <= 0.0 {
                    return Err(Error::PreconditionError(
                        "tabulated weights must be strictly positive".into(),
                    ));
                }
                if m.is_finite() {
                    Ok(m)
                } else {
                    Err(Error::PreconditionError("empty weight table".into()))
                }
            }
            WeightSequence::Pattern => Ok(1.0),
        }
    }

    /// Rational value of `mu` if this is the parametric kind.
    pub fn parametric_mu(&self) -> Option<&BigRational> {
        match self {
            WeightSequence::Parametric { mu } => Some(mu),
            _ => None,
        }
    }
}

/// Convert a big integer to f64; saturates to the nearest representable
/// value, which is only used in logarithmic magnitudes where relative error
/// around 1e-16 is harmless.
pub fn big_to_f64(x: &BigInt) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        if x.is_negative() {
            f64::MIN
        } else {
            f64::MAX
        }
    })
}

/// Convert a big rational to f64 through the numerator/denominator pair.
pub fn rational_to_f64(x: &BigRational) -> f64 {
    big_to_f64(x.numer()) / big_to_f64(x.denom())
}

/// `ln prod_{j=a}^{b} (1 + mu/j)` with a term-by-term head and a
/// Stirling-type tail.
fn parametric_log_product(mu: &BigRational, a: &BigInt, b: &BigInt) -> f64 {
    let muf = rational_to_f64(mu);
    let cutoff = BigInt::from(STIRLING_CUTOFF);
    let mut total = 0.0f64;
    let mut comp = 0.0f64;
    // head: indices below the cutoff, summed directly with compensation
    if *a < cutoff {
        let hi = if *b < cutoff { b.clone() } else { &cutoff - 1 };
        let lo = a.to_u64().expect("head index fits u64");
        let hi = hi.to_u64().expect("head index fits u64");
        for j in lo..=hi {
            let y = (muf / j as f64).ln_1p() - comp;
            let t = total + y;
            comp = (t - total) - y;
            total = t;
        }
    }
    // tail: sum_{j=a'}^{b} ln(1 + mu/j) = F(b+1) - F(a') where
    // F(x) = lgamma(x + mu) - lgamma(x), expanded to avoid cancellation
    if *b >= cutoff {
        let from = if *a >= cutoff { a.clone() } else { cutoff };
        let x0 = big_to_f64(&from);
        let x1 = big_to_f64(&(b + 1));
        total += lgamma_shift(x1, muf) - lgamma_shift(x0, muf);
    }
    total
}

/// `F(x) = lgamma(x + mu) - lgamma(x)` via the Stirling series, written so
/// the two nearly equal magnitudes never meet:
/// `F(x) = mu ln x + (x + mu - 1/2) ln1p(mu/x) - mu + corrections`.
fn lgamma_shift(x: f64, mu: f64) -> f64 {
    let r = mu / x;
    let main = mu * x.ln() + (x + mu - 0.5) * r.ln_1p() - mu;
    let c1 = (1.0 / (x + mu) - 1.0 / x) / 12.0;
    let c3 = (1.0 / (x + mu).powi(3) - 1.0 / x.powi(3)) / 360.0;
    main + c1 - c3
}

// --- serde: weights serialize with `mu` as an exact "num/den" string ---

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum WeightRepr {
    Parametric {
        mu: String,
    },
    Tabulated {
        values: Vec<f64>,
        extension: Option<f64>,
    },
    Pattern,
}

impl Serialize for WeightSequence {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self {
            WeightSequence::Parametric { mu } => WeightRepr::Parametric { mu: mu.to_string() },
            WeightSequence::Tabulated { values, extension } => WeightRepr::Tabulated {
                values: values.clone(),
                extension: *extension,
            },
            WeightSequence::Pattern => WeightRepr::Pattern,
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeightSequence {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match WeightRepr::deserialize(d)? {
            WeightRepr::Parametric { mu } => WeightSequence::Parametric {
                mu: BigRational::from_str(&mu).map_err(D::Error::custom)?,
            },
            WeightRepr::Tabulated { values, extension } => {
                WeightSequence::Tabulated { values, extension }
            }
            WeightRepr::Pattern => WeightSequence::Pattern,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bi(x: i64) -> BigInt {
        BigInt::from(x)
    }

    #[test]
    fn parametric_prefix_matches_closed_form() {
        // prod_{j=1}^{l} (1 + 2/j) = (l+1)(l+2)/2
        let w = WeightSequence::parametric_int(2);
        for l in [1i64, 2, 5, 17, 100, 4095, 4096, 5000, 100_000] {
            let lhs = w.log_product(&bi(1), &bi(l)).unwrap();
            let rhs = (((l + 1) as f64) * ((l + 2) as f64) / 2.0).ln();
            assert!(
                (lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0),
                "l={l}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn stirling_tail_matches_direct_sum() {
        let mu = BigRational::new(bi(3), bi(2));
        let w = WeightSequence::Parametric { mu: mu.clone() };
        let muf = 1.5f64;
        for (a, len) in [(4000i64, 500i64), (4096, 1000), (1 << 20, 777), (10_000_000, 3)] {
            let direct: f64 = (a..a + len).map(|j| (muf / j as f64).ln_1p()).sum();
            let closed = w.log_product(&bi(a), &bi(a + len - 1)).unwrap();
            assert!(
                (closed - direct).abs() <= 1e-10 * direct.abs().max(1.0),
                "a={a} len={len}: {closed} vs {direct}"
            );
        }
    }

    #[test]
    fn pattern_hi_counts_match_frozen_table() {
        // frozen oracle: e(4^i) for i = 1..8
        let expected = [(4i64, 3i64), (16, 11), (64, 43), (256, 171), (1024, 683),
            (4096, 2731), (16384, 10923), (65536, 43691)];
        for (l, e) in expected {
            assert_eq!(WeightSequence::pattern_hi_count(&bi(l)), bi(e), "e({l})");
        }
    }

    #[test]
    fn pattern_hi_count_matches_brute_force() {
        let in_ones = |l: i64| -> bool {
            let mut s = 4i64;
            while s <= l {
                if l >= s && l < 2 * s {
                    return true;
                }
                s *= 4;
            }
            false
        };
        let mut count = 0i64;
        for l in 1..=100_000i64 {
            if !in_ones(l) {
                count += 1;
            }
            if l % 7777 == 0 || l <= 20 {
                assert_eq!(WeightSequence::pattern_hi_count(&bi(l)), bi(count), "e({l})");
            }
        }
    }

    #[test]
    fn pattern_weight_values() {
        let vals: Vec<f64> = (1..=20)
            .map(|j| WeightSequence::Pattern.weight_at(&bi(j)).unwrap())
            .collect();
        let expected = [4.0, 4.0, 4.0, 1.0, 1.0, 1.0, 1.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0,
            4.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        assert_eq!(vals, expected);
    }

    #[test]
    fn tabulated_products_and_extension() {
        let w = WeightSequence::Tabulated {
            values: vec![2.0, 0.5, 3.0],
            extension: Some(2.0),
        };
        let p = w.log_product(&bi(1), &bi(3)).unwrap();
        assert!((p - 3f64.ln()).abs() < 1e-12);
        let p = w.log_product(&bi(2), &bi(5)).unwrap();
        assert!((p - (0.5f64 * 3.0 * 2.0 * 2.0).ln()).abs() < 1e-12);
        let w2 = WeightSequence::Tabulated {
            values: vec![2.0],
            extension: None,
        };
        assert!(matches!(
            w2.log_product(&bi(1), &bi(2)),
            Err(Error::OutOfTable(_))
        ));
    }

    #[test]
    fn weight_serde_round_trip() {
        for w in [
            WeightSequence::parametric(3, 2),
            WeightSequence::Pattern,
            WeightSequence::Tabulated {
                values: vec![1.0, 2.0],
                extension: Some(1.5),
            },
        ] {
            let s = serde_json::to_string(&w).unwrap();
            let back: WeightSequence = serde_json::from_str(&s).unwrap();
            assert_eq!(w, back);
        }
    }
}
