//! Nonparametric estimation of mixture cure models.
//!
//! The crate covers kernel-weighted (Beran) conditional survival, the
//! incidence and latency estimators built on it, a weighted-bootstrap
//! bandwidth selector for the incidence, closed-form truth and asymptotic
//! MSE for two benchmark models, and a Monte Carlo harness around them.
//!
//! Everything here is `no_std` with `alloc`. File formats, the command line
//! and the threaded executor live in the companion `npcure-cli` crate.
#![no_std]

extern crate alloc;

pub mod bandwidth;
pub mod beran;
pub mod cure;
pub mod error;
pub mod exec;
pub mod kernel;
pub mod math;
pub mod quadrature;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod truth;

pub use bandwidth::{
    bootstrap_mse, bootstrap_resample, global_pilot_formula, pilot_global, pilot_local, select_bandwidth,
    select_bandwidth_with, smooth_bandwidths, BandwidthGrid, BandwidthSearch, BootstrapConfig,
    PilotRule, ResamplingLaw, StageSpec,
};
pub use beran::{
    beran_fit, conditional_empirical, cumulative_hazard, subdistribution_estimates, BeranCurve,
    ConditionalLaw, Observation, SurvivalSample,
};
pub use cure::{
    cure_fit, hazard_jumps, identifiability_diagnostic, incidence, latency, local_loglikelihood,
    CureFit, IdentifiabilityReport,
};
pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use kernel::{kernel_constants, kernel_eval, nw_weights, KernelSpec, WeightVector};
pub use truth::{AmseReport, ModelId, ModelTruth};
