//! Simulation designs, their ground-truth estimand values, and a
//! replicated coverage-study driver.

mod dgp;
mod discrete;
mod study;
mod truth;

pub use dgp::{cmi_cell_probs, draw_latent, generate, DgpSpec, LatentSample};
pub use discrete::DiscreteLaw;
pub use study::{
    data_seed, run_coverage_study, CoverageCell, CoverageReport, EstimatorConfig, Method, ReplicateRecord, StudyConfig,
    TruthRecord,
};
pub use truth::{brute_force_estimand, mc_truth, CmiReference, Target, Truth, MIN_MC};
