//! Weighted backward shifts on the sequence spaces `lp`.
//!
//! The crate builds and certifies the combinatorial data behind orbits of
//! unilateral weighted backward shifts `B_w(x_1, x_2, ...) = (w_1 x_2, w_2 x_3, ...)`:
//!
//! * [`core`] - weight sequences with certified log-space products, integer
//!   intervals with arbitrary-precision endpoints, index sets with exact
//!   rational densities, and sparse vectors.
//! * [`shift`] - the shift action, block vectors `theta_I(x)` supported on an
//!   interval, and closed-form shifted norms that stay in log space.
//! * [`construct`] - interval schedules: step thresholds obtained from
//!   certified tail bounds, window sets where sliding weight products stay
//!   under a cap, and the three schedule variants with an exact validator.
//! * [`vectors`] - rational ball enumeration, index partitions, and the
//!   construction of the target vectors together with truncation
//!   certificates for everything a finite horizon omits.
//! * [`analyze`] - return sets, visit certificates, and the density
//!   certificates showing which orbits avoid coordinate returns.
//!
//! Every certified quantity is an upper (or exact) bound, never an estimate:
//! tails are partial sums plus provable remainders, densities are exact
//! rationals, and window checks on the structured weight kinds are exact
//! integer counts.

pub mod analyze;
pub mod construct;
pub mod core;
pub mod error;
pub mod shift;
pub mod vectors;

pub use error::{Error, Result};
