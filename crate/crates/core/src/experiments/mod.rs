//! End-to-end experiments: the single slit in time, cross-metric
//! comparison, and the continuum limit of the discrete walk.

pub mod comparison;
pub mod continuum;
pub mod slit;

pub use comparison::{current_closed_form, metric_comparison, ComparisonOptions, MetricReport, MetricRow, MsOptions, WaveCase, AGREEMENT_BAND};
pub use continuum::{discrete_continuum_experiment, ContinuumLevel, ContinuumTable};
pub use slit::{
    log_sweep, power_law_exponent, single_slit_sqm, single_slit_sweep, single_slit_tqm, sqm_slit_uncertainty,
    tqm_slit_uncertainty, SlitConfig, SqmSlit, SqmSlitSummary, SweepResult, TqmSlit, TqmSlitSummary,
};
