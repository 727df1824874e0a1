//! Benchmark posteriors: Gaussian, logistic regression, AR(1) with
//! Student-t noise, and the log-Gaussian Cox model.

mod ar1;
mod cox;
pub mod data;
mod gaussian;
mod logistic;

pub use ar1::{
    ar1_hessian_bound, ar1_partials, student_h, student_h1, student_h1_bound, student_h2, student_h2_bound, Ar1Model,
};
pub use cox::{
    check_prior, cox_partial, cox_precision, cox_propose_event, grid_adjacency, grid_partition, split_ranges,
    CoxLikelihood, CoxModel, CoxSwitch,
};
pub use gaussian::{gaussian_rate_coeffs, GaussianModel};
pub use logistic::{logistic_hessian_bound, logistic_partial, LogisticData, LogisticLikelihood, LogisticModel};
