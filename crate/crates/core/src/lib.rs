//! Measurement statistics for preselected and postselected quantum systems.
//!
//! - [`linalg`]: kets, operators, projectors and projective decompositions.
//! - [`abl`]: Born, joint and ABL probabilities and the Lüders update.
//! - [`histories`]: decoherence functional and consistency of history families.
//! - [`counterfactual`]: weighted sums over postselections and counterexample search.
//! - [`simulator`]: seeded Monte Carlo of the measurement chain.

pub mod abl;
pub mod counterfactual;
pub mod error;
pub mod histories;
pub mod linalg;
pub mod rng;
pub mod simulator;

pub use abl::{
    abl_distribution, born_distribution, disturbed_final_probability, joint_probability,
    luders_update, AblDistribution, PrePostContext, EPS_DIV,
};
pub use counterfactual::{
    find_counterexample, mixing_report, sharp_shanks_total, survey, vaidman_total,
    Counterexample, MixingReport, ObservableConstraint, SearchParams, SurveyStats,
};
pub use error::{Error, Result};
pub use histories::{
    bcac_check, bcac_check_with, decoherence_functional, enumerate_coarse_grainings, is_consistent,
    is_consistent_with, BcacCheck, ConsistencyCriterion, ConsistencyReport, HistoryFamily,
    EPS_CONS,
};
pub use linalg::{
    apply, inner, projector_from_kets, trace_product, Branch, Ket, ObservableDecomposition,
    Operator, Projector, Vector, EPS_ALG, EPS_NORM,
};
pub use simulator::{
    estimate_abl, estimate_final_probability, run_trial, with_workers, EnsembleStats, Pipeline,
    TrialRecord,
};
