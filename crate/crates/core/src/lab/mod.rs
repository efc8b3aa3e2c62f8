//! Scenario configuration, the theorem-level verification drivers and
//! report emission.
//!
//! A [`ScenarioConfig`] names a measure, the parameters `k`, `alpha`,
//! `gamma`, a family specification and a list of checks. [`run_scenario`]
//! runs them in order and returns a [`ScenarioReport`] whose every check
//! carries both sides of its inequality, the direction, the slack and the
//! margin. Reports are deterministic for a given config and independent of
//! the thread count.

mod config;
mod report;
mod scenario;
pub mod verify;

pub use config::{CheckKind, CheckSpec, MeasureSource, ScenarioConfig};
pub use report::{
    emit_report, emit_reports, float, write_csv, CheckRecord, Direction, MeasureSummary, Measured, ReportFormat,
    ScenarioReport, Summary,
};
pub use scenario::{bundled, run_scenario, BUNDLED};
pub use verify::{verify_maincor, verify_mainst, verify_rwt, Section};

/// Run `f` on a dedicated pool of `threads` worker threads.
#[cfg(feature = "parallel")]
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> crate::Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| crate::error::invalid(e.to_string()))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests;
