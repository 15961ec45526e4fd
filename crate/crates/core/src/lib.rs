//! Phase-covariant qubit dynamics with time-dependent rates: propagation,
//! quantum speed limit metrics, and divisibility classification.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod divisibility;
pub mod error;
pub mod ode;
pub mod propagator;
pub mod qsl;
pub mod quad;
pub mod rates;
pub mod scan;
pub mod state;

pub use divisibility::{classify, critical_k_scan, Condition, DivisibilityClass, DivisibilityVerdict, Violation};
pub use error::{Error, Result};
pub use ode::Tolerances;
pub use propagator::{generator_apply, propagate_analytic, propagate_ode, Engine, RawDefect, TimeGrid, Trajectory};
pub use qsl::{blp_measure_ad, bures_angle, dl_ratio_ad, fidelity, lambda_op, operator_norm, qsl_ratio, QslReport};
pub use rates::{
    amplitude_damping_model, builtin_model, cp_oscillating_model, pdiv_crossover_model, pure_dephasing_model,
    sign_violation_model, RateFn, RateModel, Rates, TabulatedRates,
};
pub use scan::{compare_scans, qsl_surface_scan, trajectory_panel, ModelSpec, ScanConfig, ScanResult};
pub use state::{pure_state_from_a, BlochVector, ComplexMatrix2, DensityMatrix, PureStateParam};
