//! Experiment harness for the Nystrom approximation crate: seeded sweeps over
//! (sampler, intersection, c) grids, timing comparisons of the intersection
//! paths, report emission (CSV/JSON/SVG) and the named verification suites.

pub mod experiment;
pub mod report;
pub mod synth;
pub mod timing;
pub mod verify;

pub use experiment::{
    run_sweep, run_sweep_on, Aggregate, ExperimentInput, ExperimentSpec, MatrixFormat, MethodSpec, ResultTable,
    TrialRecord,
};
pub use report::{emit_report, ReportFormat};
pub use synth::clustered_dataset;
pub use timing::{run_timing_comparison, TimingReport};
pub use verify::{run_suite, CheckResult, Suite, VerifyReport};
