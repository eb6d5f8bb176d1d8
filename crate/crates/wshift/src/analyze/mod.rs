//! Dynamics verification: return sets, visit certificates with explicit
//! truncation allowances, density certificates for orbits that avoid
//! coordinate returns, and the stability analysis of the parametrized
//! weight family.

pub mod density;
pub mod family;
pub mod orbit;
pub mod visit;

pub use density::{
    non_fhc_certificate, non_ufhc_certificate, AvoidanceReport, AvoidanceRow, FirstBlockReport,
    FirstBlockRow,
};
pub use family::{build_v_sequence, check_delta_r, find_delta_r, gamma_rm, lambda_r};
pub use orbit::{
    return_distances, return_set, scaffold_density, schedule_s, FamilyDensityReport,
    FamilyDensityRow,
};
pub use visit::{admissible_s_primes, visit_certificate, ClaimReport, TermReport, VisitQuery};
