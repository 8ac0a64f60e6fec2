//! Truncated-potential cascades `u_n`, the monotone limit experiment and its
//! diagnostics.

mod checks;
mod classify;
mod config;
mod output;
mod run;

pub use checks::{
    bounded_perturbation_compare, comparison_in_potential, lower_profile_check, weighted_mass_check,
    LowerProfile, PerturbationCompare, WeightedMassCheck, WeightedMassEntry, WEIGHTED_MASS_SLACK,
};
pub use classify::{classify, classify_series, Classification, ProbeEvidence, Verdict};
pub use config::{default_probes, CascadeConfig, InitialData, SourceData, Thresholds};
pub use run::{
    cascade_dt, gauge_weight, order_margin, potential_field, radiality, run_cascade, CascadeReport, Radiality,
    RunRecord, ORDER_TOL, REACTION_BUDGET,
};
