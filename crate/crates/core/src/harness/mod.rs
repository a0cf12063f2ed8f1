//! Experiment configuration, runners, CSV reports and the command line.

pub mod blowdown;
pub mod cli;
pub mod config;
pub mod experiments;
pub mod report;

pub use blowdown::{blow_down, blow_down_onto};
pub use cli::cli_main;
pub use config::{ExperimentConfig, Scenario};
pub use experiments::{
    run_affine_recovery, run_angle_sweep, run_conormal_check, run_experiment, run_gradient_bound_sweep,
    run_liouville_experiment, run_minimizer_test, Outcome,
};
pub use report::{AngleRow, ExperimentReport, FitSummary, ReportRow};
