//! Drop-test metrics, contact-coefficient fitting and validation.

mod fit;
mod metrics;
mod observed;
pub mod simplex;

pub use fit::{
    fit_contact_params, simulate_observation, trace_error, validate_params, FitResult, ParamBounds, PeakAccuracy,
    TraceError, ValidationReport, VELOCITY_WEIGHT,
};
pub use metrics::{contact_metrics, observed_metrics, ContactMetrics};
pub use observed::{ObservedSample, ObservedTrajectory, MIN_SAMPLES};
