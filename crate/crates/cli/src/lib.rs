//! Command-line front end for the homogenization laboratory: experiment
//! specs, the runner and the table and plot writers.

pub mod output;
pub mod runner;
pub mod spec;

pub use output::{fmt_num, plot_series, write_atomic, PlotOptions, Series, Table};
pub use runner::{run, RunError, RunOptions, RunOutcome};
pub use spec::{parse_spec, Experiment, ExperimentSpec, SpecError, SpecErrors};
