//! Construction machinery: interval selection, weight-window membership,
//! certified series tails, return-gap thresholds, level bookkeeping, and the
//! staged interval schedules built from them.

pub mod aset;
pub mod fiber;
pub mod schedule;
pub mod sublemma;
pub mod tail;
pub mod theta;

pub use aset::{
    a_set_members, beta_for_weight, check_weight_condition, is_member, min_member_at_least,
    BetaReport, MemberVerdict, WeightConditionReport,
};
pub use fiber::{
    calkin_wilf, cantor_pair, cantor_unpair, cw_index, phi, phi_inverse, rational_at, rho,
    rho_level, tau, RhoValue,
};
pub use schedule::{
    build_schedule, validate_schedule, IntervalSchedule, Level, ScheduleVariant, Violation,
};
pub use sublemma::{find_good_interval, validate_interval};
pub use tail::{tail_log2, TailBound};
pub use theta::{compute_theta, compute_theta_r, ThetaFamily, ThetaFunction};
