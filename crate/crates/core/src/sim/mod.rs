//! Slotted-time fluid simulation: engine, metrics, compliance checking and
//! the static-vs-adaptive comparison harness.

mod engine;
mod metrics;

use serde::Serialize;

pub use engine::{run, run_with, SlotRow, SlotSink};
pub use metrics::{
    check_constraints, AssignmentRecord, ChannelCompliance, ChannelMetrics, ComplianceReport,
    EpochChannelWindow, EpochRecord, NodeClassMetrics, SimMetrics, SimMode, Totals,
    METRICS_SCHEMA_VERSION,
};

use crate::error::SimError;
use crate::scenario::Scenario;

/// Headline numbers of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSummary {
    pub mode: SimMode,
    pub injected: f64,
    pub delivered: f64,
    pub dropped: f64,
    pub total_loss_fraction: f64,
    /// Mean over channels of the worst-path delay sum.
    pub mean_delay_sum: f64,
    pub loss_violations: usize,
    pub delay_violations: usize,
}

fn summarize(metrics: &SimMetrics, scenario: &Scenario) -> ModeSummary {
    let report = check_constraints(metrics, &scenario.classes);
    let n = metrics.channels.len().max(1);
    ModeSummary {
        mode: metrics.mode,
        injected: metrics.totals.injected,
        delivered: metrics.totals.delivered,
        dropped: metrics.totals.dropped(),
        total_loss_fraction: metrics.totals.loss_fraction(),
        mean_delay_sum: metrics
            .channels
            .values()
            .map(|c| c.path_delay_sum)
            .sum::<f64>()
            / n as f64,
        loss_violations: report.loss_violations,
        delay_violations: report.delay_violations,
    }
}

/// Outcome of running the identical scenario in both cost modes.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub static_run: ModeSummary,
    pub fractal_run: ModeSummary,
    /// fractal minus static; negative means the adaptive costs lost less.
    pub loss_delta: f64,
    pub delay_delta: f64,
    /// First slot at which the two modes' planned assignments differ.
    pub first_divergence_slot: Option<u64>,
    #[serde(skip)]
    pub static_metrics: SimMetrics,
    #[serde(skip)]
    pub fractal_metrics: SimMetrics,
}

/// Run the identical scenario (same traces, same seeds) with static and with
/// adaptive costs and report the deltas.
pub fn compare_modes(scenario: &Scenario) -> Result<ComparisonReport, SimError> {
    let mut st = scenario.clone();
    st.config.mode = SimMode::StaticCosts;
    let static_metrics = run(&st)?;
    let mut fr = scenario.clone();
    fr.config.mode = SimMode::FractalCosts;
    let fractal_metrics = run(&fr)?;

    // First slot at which the planned rates in force differ between the two
    // runs (reassignments that re-derive the identical plan do not count).
    let first_divergence_slot = {
        let mut slots: Vec<u64> = static_metrics
            .assignments
            .iter()
            .chain(&fractal_metrics.assignments)
            .map(|a| a.slot)
            .collect();
        slots.sort_unstable();
        slots.dedup();
        let state_at = |log: &[AssignmentRecord], slot: u64| {
            log.iter()
                .rev()
                .find(|a| a.slot <= slot)
                .map(|a| (a.rates.clone(), a.blocked.clone()))
        };
        slots.into_iter().find(|&s| {
            state_at(&static_metrics.assignments, s) != state_at(&fractal_metrics.assignments, s)
        })
    };

    let static_run = summarize(&static_metrics, scenario);
    let fractal_run = summarize(&fractal_metrics, scenario);
    Ok(ComparisonReport {
        loss_delta: fractal_run.total_loss_fraction - static_run.total_loss_fraction,
        delay_delta: fractal_run.mean_delay_sum - static_run.mean_delay_sum,
        first_divergence_slot,
        static_run,
        fractal_run,
        static_metrics,
        fractal_metrics,
    })
}
