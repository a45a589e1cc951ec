//! Continuous learning for binary classification.
//!
//! Each pass fits a bootstrap family of regularized logistic models, summarizes
//! the likelihood-weighted solution cloud by its mean and principal directions,
//! and turns those directions into new features whose pairwise products extend
//! the feature space for the next pass. After `N` passes the features are
//! polynomials of degree at most `2^N` in the inputs while the parameter
//! dimension stays capped by the number of retained components.
//!
//! Replicate solves run on rayon when the `parallel` feature is enabled (the
//! default); results are assembled in replicate order either way, so outputs
//! do not depend on scheduling.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod data;
pub mod engine;
pub mod ensemble;
pub mod error;
pub mod featuremap;
pub mod fixtures;
pub mod linalg;
pub mod model;
pub mod par;
pub mod solver;
pub mod spectral;

pub use data::{basic_features, load_csv, Dataset, Sample, Standardization};
pub use engine::{run, EngineConfig, EngineOutput, IterationReport, RunStatus};
pub use ensemble::{BootstrapPlan, SolutionDistribution, SolutionSet};
pub use error::{Error, Result};
pub use featuremap::{Layer, RecursiveFeatureMap};
pub use model::{Design, Prior};
pub use par::Execution;
pub use solver::{Solution, SolverConfig};
pub use spectral::PrincipalComponents;
