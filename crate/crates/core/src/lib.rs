//! Rate allocation between a packet-level erasure code and a per-packet
//! channel code over proportional-diversity block-Rayleigh fading.
//!
//! The crate computes the packet-erasure probability under four Gaussian
//! approximations and a Monte Carlo estimator, the resulting message-error
//! probability, and the channel-/erasure-rate split that minimizes it for a
//! fixed overall rate and power.

// Negated comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod cli;
pub mod config;
pub mod error;
pub mod fading;
pub mod message;
pub mod optimizer;
pub mod outage;
pub mod special;
pub mod validation;

pub use error::{Error, Result};
pub use fading::{
    db_to_linear, derive_stream, fade_profile, fading_stats, mutual_info, sample_weighted_avg_mi, FadeProfile,
    FadingStats, RateSplit, SystemParams,
};
pub use message::{q_binomial, q_full_monte_carlo, q_gaussian, MessageErrorResult, MessageMethod};
pub use optimizer::{
    admissible_grid, fixed_re_trajectory, optimize, sweep_overall_rate, sweep_power, GridPoint, OptimizationResult,
    SearchOptions, SweepOutput, SweepRow, TrajectoryOutput, TrajectoryRow,
};
pub use outage::{
    pe_approx1, pe_approx2, pe_approx3, pe_approx4, pe_monte_carlo, ApproxMethod, McSettings, OutageEstimate,
};
pub use special::{alpha, beta, log_normal_cdf, normal_cdf, QuadratureSettings};
pub use config::{parse_config, parse_config_with, Command, Overrides, RunConfig};
