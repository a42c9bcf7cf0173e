//! Worst-case expectations over phi-divergence balls on finite sample
//! spaces: an exact oracle, sample-average estimators, and the sample-size
//! calculus that says when estimation is possible at all.

pub mod bounds;
pub mod divergence;
pub mod experiments;
pub mod extreal;
mod opt;
pub mod risk;
pub mod saa;

pub use bounds::{
    bernstein_width, le_cam_bound, quadratic_lower_bound_probability, sample_lower_bound,
    sample_upper_bound, sublinear_constants, sublinear_hard_instance, superlinear_hard_instance,
    BoundsError, HardInstance, SublinearConstants, UpperBoundMode,
};
pub use divergence::{DivergenceError, DivergenceKind, DivergenceSpec, GrowthClass, NUMERIC_CAP};
pub use experiments::{
    bias_estimate, complexity_curve, deviation_frequency, run_config, CurvePoint,
    ExperimentConfig, ExperimentError, InstanceSource, RunSummary, TruncationConfig, CSV_HEADER,
};
pub use extreal::ExtReal;
pub use risk::{
    dual_minimize, dual_objective, truncated_risk, worst_case_expectation, worst_case_value,
    DualPoint, DualStatus, FiniteInstance, RiskError, RiskReport,
};
pub use saa::{
    draw_empirical, saa_estimate, truncated_saa_estimate, truncation_level, EmpiricalMeasure,
    TruncationMode,
};
