//! Core numeric types: weights, intervals, index sets, sparse vectors.

pub mod indexset;
pub mod interval;
pub mod sparse;
pub mod weight;

pub use indexset::{DensityProfile, IndexBlock, IndexSet};
pub use interval::IntegerInterval;
pub use sparse::{Field, SparseVector};
pub use weight::WeightSequence;

use crate::error::Result;
use num::bigint::BigInt;
use num::rational::BigRational;

/// Weight at position `j >= 1`.
pub fn weight_at(w: &WeightSequence, j: &BigInt) -> Result<f64> {
    w.weight_at(j)
}

/// Natural log of the product `w_a * ... * w_b` (empty product when `a > b`).
pub fn log_product(w: &WeightSequence, a: &BigInt, b: &BigInt) -> Result<f64> {
    w.log_product(a, b)
}

/// Exact counting density `|A intersect [0, n]| / (n + 1)`.
pub fn density_at(set: &IndexSet, n: &BigInt) -> BigRational {
    set.density_at(n)
}

/// Exact densities at each checkpoint horizon.
pub fn density_profile(set: &IndexSet, checkpoints: &[BigInt]) -> DensityProfile {
    set.density_profile(checkpoints)
}

/// The `lp` norm of a sparse vector at its stored exponent `p`.
pub fn p_norm(x: &SparseVector) -> f64 {
    x.p_norm()
}

/// Coordinate `k` of a sparse vector (zero when absent).
pub fn coordinate(x: &SparseVector, k: &BigInt) -> num::complex::Complex64 {
    x.coordinate(k)
}
