//! Measurement output of a simulation run and QoS compliance checking.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::fractal::FractalEstimate;
use crate::net::ServiceClass;

pub const METRICS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    /// Costs stay at base for the whole run.
    StaticCosts,
    /// Costs are recalculated from per-link fractal estimates at every
    /// update interval.
    FractalCosts,
}

/// Per-node, per-class queue measurements over a span of slots.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct NodeClassMetrics {
    /// Volume offered to the queue, including what overflowed.
    pub arrived: f64,
    pub served: f64,
    pub dropped: f64,
    /// Sum over slots of post-service backlog; waiting time follows from
    /// Little's law as wait_unit_slots / served.
    pub wait_unit_slots: f64,
    pub loss_fraction: f64,
    pub mean_wait: f64,
}

impl NodeClassMetrics {
    pub fn finish(&mut self) {
        self.loss_fraction = if self.arrived > 0.0 {
            self.dropped / self.arrived
        } else {
            0.0
        };
        self.mean_wait = if self.served > 0.0 {
            self.wait_unit_slots / self.served
        } else {
            0.0
        };
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelMetrics {
    pub class: u8,
    /// Volume offered by the arrival trace over the run.
    pub injected: f64,
    pub delivered: f64,
    /// Demand that had no planned capacity, lost at the ingress edge router.
    pub dropped_ingress: f64,
    /// Buffer overflow along the path.
    pub dropped_network: f64,
    /// Worst active path: sum of per-node loss fractions for the channel's
    /// class.
    pub path_loss_sum: f64,
    /// Worst active path: hop propagation plus the sum of per-node mean
    /// waits.
    pub path_delay_sum: f64,
    pub loss_ok: bool,
    pub delay_ok: bool,
}

/// Windowed per-channel compliance captured at one update epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochChannelWindow {
    pub loss_sum: f64,
    pub delay_sum: f64,
    pub loss_ok: bool,
    pub delay_ok: bool,
}

/// Snapshot of one cost-update epoch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: u64,
    pub slot: u64,
    /// Per-link estimate over the trailing window, keyed by link name.
    pub link_estimates: BTreeMap<String, FractalEstimate>,
    /// Recalculated path costs, keyed by "channel/path-index".
    pub path_costs: BTreeMap<String, f64>,
    /// Windowed compliance per channel name.
    pub channels: BTreeMap<String, EpochChannelWindow>,
}

/// One (re)assignment of planned rates, at slot 0, an admission or release
/// event, or an update epoch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssignmentRecord {
    pub slot: u64,
    /// Planned rate per "channel/path-index".
    pub rates: BTreeMap<String, f64>,
    /// Unplaceable demand per channel name.
    pub blocked: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Totals {
    pub injected: f64,
    pub delivered: f64,
    pub dropped_ingress: f64,
    pub dropped_network: f64,
    /// Volume in transit between nodes when the run ended.
    pub in_flight_end: f64,
    /// Volume still queued when the run ended.
    pub backlog_end: f64,
}

impl Totals {
    pub fn dropped(&self) -> f64 {
        self.dropped_ingress + self.dropped_network
    }

    pub fn loss_fraction(&self) -> f64 {
        if self.injected > 0.0 {
            self.dropped() / self.injected
        } else {
            0.0
        }
    }

    /// Conservation residue: injected minus everything accounted for.
    pub fn imbalance(&self) -> f64 {
        self.injected - (self.delivered + self.dropped() + self.in_flight_end + self.backlog_end)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimMetrics {
    pub schema_version: u32,
    pub mode: SimMode,
    pub total_slots: u64,
    pub totals: Totals,
    /// node name -> class id -> metrics
    pub node_class: BTreeMap<String, BTreeMap<u8, NodeClassMetrics>>,
    pub channels: BTreeMap<String, ChannelMetrics>,
    pub epochs: Vec<EpochRecord>,
    pub assignments: Vec<AssignmentRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelCompliance {
    pub channel: String,
    pub class: u8,
    pub loss_ok: bool,
    pub delay_ok: bool,
    /// (epoch, loss_ok, delay_ok) per recorded update epoch.
    pub epochs: Vec<(u64, bool, bool)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplianceReport {
    pub channels: Vec<ChannelCompliance>,
    pub loss_violations: usize,
    pub delay_violations: usize,
    pub compliant: bool,
}

/// Re-derive per-channel compliance from measured sums and class bounds.
pub fn check_constraints(metrics: &SimMetrics, classes: &[ServiceClass]) -> ComplianceReport {
    let class_of = |id: u8| classes.iter().find(|c| c.id == id);
    let mut channels = Vec::new();
    let mut loss_violations = 0;
    let mut delay_violations = 0;
    for (name, ch) in &metrics.channels {
        let Some(class) = class_of(ch.class) else {
            continue;
        };
        let loss_ok = ch.path_loss_sum <= class.max_loss;
        let delay_ok = ch.path_delay_sum <= class.max_delay;
        if !loss_ok {
            loss_violations += 1;
        }
        if !delay_ok {
            delay_violations += 1;
        }
        let epochs = metrics
            .epochs
            .iter()
            .filter_map(|e| {
                e.channels
                    .get(name)
                    .map(|w| (e.epoch, w.loss_ok, w.delay_ok))
            })
            .collect();
        channels.push(ChannelCompliance {
            channel: name.clone(),
            class: ch.class,
            loss_ok,
            delay_ok,
            epochs,
        });
    }
    let compliant = channels.iter().all(|c| c.loss_ok && c.delay_ok);
    ComplianceReport {
        channels,
        loss_violations,
        delay_violations,
        compliant,
    }
}
