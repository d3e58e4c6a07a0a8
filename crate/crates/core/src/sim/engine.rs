//! The slot loop: fluid queueing with finite per-class buffers, strict class
//! priority, one-slot hop latency, and periodic estimation/cost-update
//! epochs.
//!
//! Each slot runs in a fixed order:
//!
//! 1. release and activation events, then (in adaptive mode, at update
//!    boundaries) the estimation epoch: per-link windows -> per-path
//!    estimates -> cost recalculation;
//! 2. reassignment of planned rates whenever any of the above fired;
//! 3. in-transit volume from the previous slot enqueues at its next node;
//! 4. active channels inject their trace intensity, split across paths in
//!    proportion to planned rates; demand with no planned capacity drops at
//!    the ingress edge router;
//! 5. every node serves up to its rate, classes in priority order, FIFO
//!    within a class; served volume either arrives (last node) or enters
//!    transit toward the next node;
//! 6. accounting: post-service backlog accrues waiting time (Little's law),
//!    per-link carried volume feeds the next estimation window.
//!
//! Losses occur only at node buffers (and at ingress for unplaceable
//! demand); links never drop. The loop is single-writer and fully
//! deterministic.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::SimError;
use crate::fractal::{estimate, FractalEstimate};
use crate::net::{
    AdmittedChannel, ChannelId, LinkId, NetworkState, NodeId, Path, PathKey, ReleaseEvent,
    ServiceClass, Topology, TrafficChannel,
};
use crate::routing::{assign_flows, CostTable, FlowAssignment};
use crate::scenario::Scenario;
use crate::sim::metrics::{
    AssignmentRecord, ChannelMetrics, EpochChannelWindow, EpochRecord, NodeClassMetrics,
    SimMetrics, SimMode, Totals, METRICS_SCHEMA_VERSION,
};
use crate::trace::TraceSeries;

const EPS: f64 = 1e-9;

/// One row of the per-slot time series, emitted per (node, class).
pub struct SlotRow<'a> {
    pub slot: u64,
    pub node: &'a str,
    pub class: u8,
    pub backlog: f64,
    pub dropped: f64,
    pub served: f64,
}

pub type SlotSink<'a> = &'a mut dyn FnMut(&SlotRow<'_>);

#[derive(Clone, Copy)]
struct Parcel {
    path: PathKey,
    /// Index into the path's node sequence where the parcel is queued (or,
    /// in transit, where it will arrive).
    hop: usize,
    volume: f64,
}

struct ClassQueue {
    q: VecDeque<Parcel>,
    backlog: f64,
}

#[derive(Clone, Copy, Default)]
struct ChanCounters {
    injected: f64,
    delivered: f64,
    dropped_ingress: f64,
    dropped_network: f64,
}

struct PathInfo {
    nodes: Vec<NodeId>,
    links: Vec<LinkId>,
    class_slot: usize,
}

pub fn run(scenario: &Scenario) -> Result<SimMetrics, SimError> {
    run_with(scenario, None)
}

pub fn run_with(scenario: &Scenario, mut sink: Option<SlotSink>) -> Result<SimMetrics, SimError> {
    scenario.config.validate().map_err(SimError::BadConfig)?;
    let topo = &scenario.topology;
    let cfg = &scenario.config;
    let n_nodes = topo.nodes().len();
    let n_links = topo.links().len();

    // Class scheduling order: by priority rank, then id. Earlier serves first.
    let mut class_order: Vec<u8> = scenario.classes.iter().map(|c| c.id).collect();
    class_order.sort_by_key(|id| {
        let c = scenario.classes.iter().find(|c| c.id == *id).unwrap();
        (c.priority, c.id)
    });
    let class_slot_of = |id: u8| -> usize {
        class_order
            .iter()
            .position(|c| *c == id)
            .expect("channel classes validated against the class set")
    };
    let n_classes = class_order.len();

    // Admission: materialize every channel's path set against base costs.
    let mut state = NetworkState::new();
    for ch in &scenario.channels {
        state.admit_channel(topo, ch.clone(), &|l| topo.link(l).base_cost)?;
    }

    // C0 defaults to the mean base path cost over all admitted paths.
    let c0 = scenario.c0_override.unwrap_or_else(|| {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (_, adm) in state.iter() {
            for p in &adm.paths {
                sum += p.links.iter().map(|l| topo.link(*l).base_cost).sum::<f64>();
                count += 1;
            }
        }
        if count == 0 {
            1.0
        } else {
            sum / count as f64
        }
    });
    let mut costs = CostTable::new(topo, c0);
    for (_, adm) in state.iter() {
        costs.register_paths(&adm.paths)?;
    }

    // Static path geometry survives releases so in-flight parcels can drain.
    let mut path_info: BTreeMap<PathKey, PathInfo> = BTreeMap::new();
    for (_, adm) in state.iter() {
        for p in &adm.paths {
            path_info.insert(
                p.key(),
                PathInfo {
                    nodes: p.nodes(topo),
                    links: p.links.clone(),
                    class_slot: class_slot_of(adm.channel.class),
                },
            );
        }
    }

    let mut queues: Vec<Vec<ClassQueue>> = (0..n_nodes)
        .map(|_| {
            (0..n_classes)
                .map(|_| ClassQueue {
                    q: VecDeque::new(),
                    backlog: 0.0,
                })
                .collect()
        })
        .collect();
    let mut counters = vec![vec![NodeClassMetrics::default(); n_classes]; n_nodes];
    let mut chan_counters: BTreeMap<ChannelId, ChanCounters> = scenario
        .channels
        .iter()
        .map(|c| (c.id, ChanCounters::default()))
        .collect();
    let mut carried: Vec<Vec<f64>> = vec![vec![0.0; cfg.total_slots as usize]; n_links];
    let mut transit_next: Vec<Parcel> = Vec::new();
    let mut used_paths: BTreeSet<PathKey> = BTreeSet::new();
    let mut totals = Totals::default();
    let mut assignment = FlowAssignment::default();
    let mut assignments_log: Vec<AssignmentRecord> = Vec::new();
    let mut epochs: Vec<EpochRecord> = Vec::new();
    let mut slot_served = vec![vec![0.0f64; n_classes]; n_nodes];
    let mut slot_dropped = vec![vec![0.0f64; n_classes]; n_nodes];
    // Counter snapshot at the previous epoch, for windowed compliance.
    let mut prev_counters = counters.clone();

    for t in 0..cfg.total_slots {
        // --- events ---------------------------------------------------------
        let mut need_reassign = t == 0;
        let releases: Vec<(ChannelId, u64)> = state
            .iter()
            .filter(|(_, a)| !a.is_released() && a.channel.release_slot == Some(t))
            .map(|(id, a)| (*id, a.channel.start_slot))
            .collect();
        for (id, admitted_at) in releases {
            state.release_channel(ReleaseEvent {
                channel: id,
                admitted_at,
                released_at: t,
            })?;
            costs.deregister_channel(id);
            need_reassign = true;
        }
        if t > 0
            && state
                .iter()
                .any(|(_, a)| !a.is_released() && a.channel.start_slot == t)
        {
            need_reassign = true;
        }

        // --- estimation / cost-update epoch ----------------------------------
        if cfg.mode == SimMode::FractalCosts && t > 0 && t % cfg.update_interval == 0 {
            let from = t as usize - cfg.estimation_window;
            let link_estimates: Vec<FractalEstimate> = carried
                .iter()
                .map(|series| {
                    let trace = TraceSeries::new(1.0, series[from..t as usize].to_vec())
                        .expect("carried volumes are valid");
                    estimate(&trace, &cfg.estimator)
                })
                .collect();
            // A path inherits the estimate of its most persistent link; ties
            // resolve to the earliest link in path order.
            let mut path_estimates: BTreeMap<PathKey, FractalEstimate> = BTreeMap::new();
            for key in costs.current_paths().keys() {
                let info = &path_info[key];
                let mut best = link_estimates[info.links[0].0];
                for l in &info.links[1..] {
                    if link_estimates[l.0].hurst > best.hurst {
                        best = link_estimates[l.0];
                    }
                }
                path_estimates.insert(*key, best);
            }
            costs.recalc_all(&path_estimates)?;

            let mut channel_windows = BTreeMap::new();
            for (_, adm) in state.iter() {
                channel_windows.insert(
                    adm.channel.name.clone(),
                    windowed_channel_metrics(
                        topo,
                        &scenario.classes,
                        adm,
                        &used_paths,
                        &counters,
                        &prev_counters,
                        class_slot_of(adm.channel.class),
                    ),
                );
            }
            prev_counters = counters.clone();

            epochs.push(EpochRecord {
                epoch: costs.epoch(),
                slot: t,
                link_estimates: topo
                    .links()
                    .iter()
                    .map(|l| (l.name.clone(), link_estimates[l.id.0]))
                    .collect(),
                path_costs: costs
                    .current_paths()
                    .iter()
                    .map(|(k, c)| (k.label(), *c))
                    .collect(),
                channels: channel_windows,
            });
            need_reassign = true;
        }

        if need_reassign {
            let active: Vec<(&TrafficChannel, &[Path])> = state
                .iter()
                .filter(|(_, a)| !a.is_released() && a.channel.active_at(t))
                .map(|(_, a)| (&a.channel, a.paths.as_slice()))
                .collect();
            assignment = assign_flows(&active, &costs, topo);
            assignments_log.push(AssignmentRecord {
                slot: t,
                rates: assignment
                    .rates()
                    .iter()
                    .map(|(k, r)| (k.label(), *r))
                    .collect(),
                blocked: assignment
                    .blocked_channels()
                    .iter()
                    .map(|(id, r)| (state.get(*id).unwrap().channel.name.clone(), *r))
                    .collect(),
            });
            state.set_path_rates(assignment.rates().clone());
            for key in assignment.rates().keys() {
                used_paths.insert(*key);
            }
        }

        for row in slot_served.iter_mut() {
            row.fill(0.0);
        }
        for row in slot_dropped.iter_mut() {
            row.fill(0.0);
        }

        // --- transit arrivals -------------------------------------------------
        let arriving = std::mem::take(&mut transit_next);
        for parcel in arriving {
            let info = &path_info[&parcel.path];
            let node = info.nodes[parcel.hop].0;
            let cs = info.class_slot;
            let channel = parcel.path.channel;
            let dropped = enqueue(
                &mut queues[node][cs],
                parcel,
                topo.nodes()[node].buffer_size,
                &mut counters[node][cs],
            );
            if dropped > 0.0 {
                slot_dropped[node][cs] += dropped;
                chan_counters
                    .get_mut(&channel)
                    .expect("known channel")
                    .dropped_network += dropped;
                totals.dropped_network += dropped;
            }
        }

        // --- injections --------------------------------------------------------
        for (id, adm) in state.iter() {
            if adm.is_released() || !adm.channel.active_at(t) {
                continue;
            }
            let lambda = adm.channel.intensity_at(t);
            if lambda <= 0.0 {
                continue;
            }
            let demand = adm.channel.demand;
            let src = adm.channel.src.0;
            let cs = class_slot_of(adm.channel.class);
            let cc = chan_counters.get_mut(id).expect("known channel");
            let range = PathKey {
                channel: *id,
                index: 0,
            }..=PathKey {
                channel: *id,
                index: usize::MAX,
            };
            for (key, rate) in assignment.rates().range(range) {
                let volume = lambda * rate / demand;
                if volume <= 0.0 {
                    continue;
                }
                totals.injected += volume;
                cc.injected += volume;
                let dropped = enqueue(
                    &mut queues[src][cs],
                    Parcel {
                        path: *key,
                        hop: 0,
                        volume,
                    },
                    topo.nodes()[src].buffer_size,
                    &mut counters[src][cs],
                );
                if dropped > 0.0 {
                    slot_dropped[src][cs] += dropped;
                    cc.dropped_network += dropped;
                    totals.dropped_network += dropped;
                }
            }
            // Demand with no planned capacity is lost at the ingress router.
            let blocked = assignment.blocked(*id);
            if blocked > 0.0 {
                let volume = lambda * blocked / demand;
                totals.injected += volume;
                cc.injected += volume;
                cc.dropped_ingress += volume;
                totals.dropped_ingress += volume;
                counters[src][cs].arrived += volume;
                counters[src][cs].dropped += volume;
                slot_dropped[src][cs] += volume;
            }
        }

        // Backlog offered to service this slot, for the audit.
        let available: Vec<f64> = if cfg.audit {
            queues
                .iter()
                .map(|qs| qs.iter().map(|cq| cq.backlog).sum())
                .collect()
        } else {
            Vec::new()
        };

        // --- service -------------------------------------------------------------
        for node in 0..n_nodes {
            let mut budget = topo.nodes()[node].service_rate;
            for cs in 0..n_classes {
                if budget <= EPS {
                    break;
                }
                while budget > EPS {
                    let cq = &mut queues[node][cs];
                    let Some(front) = cq.q.front_mut() else {
                        break;
                    };
                    let (take, exhausted) = if front.volume <= budget {
                        (front.volume, false)
                    } else {
                        (budget, true)
                    };
                    let parcel = Parcel {
                        volume: take,
                        ..*front
                    };
                    if exhausted {
                        front.volume -= take;
                    } else {
                        cq.q.pop_front();
                    }
                    cq.backlog = (cq.backlog - take).max(0.0);
                    budget -= take;
                    counters[node][cs].served += take;
                    slot_served[node][cs] += take;
                    forward(
                        &path_info,
                        parcel,
                        t,
                        &mut carried,
                        &mut transit_next,
                        &mut chan_counters,
                        &mut totals,
                    );
                    if exhausted {
                        break;
                    }
                }
            }
        }

        // --- accounting -------------------------------------------------------------
        for node in 0..n_nodes {
            for cs in 0..n_classes {
                counters[node][cs].wait_unit_slots += queues[node][cs].backlog;
            }
        }
        if let Some(sink) = sink.as_mut() {
            for node in 0..n_nodes {
                for cs in 0..n_classes {
                    sink(&SlotRow {
                        slot: t,
                        node: &topo.nodes()[node].name,
                        class: class_order[cs],
                        backlog: queues[node][cs].backlog,
                        dropped: slot_dropped[node][cs],
                        served: slot_served[node][cs],
                    });
                }
            }
        }
        if cfg.audit {
            audit_slot(
                topo,
                t,
                &queues,
                &counters,
                &slot_served,
                &available,
                &transit_next,
                &totals,
            );
        }
    }

    // --- final metrics ----------------------------------------------------------
    totals.in_flight_end = transit_next.iter().map(|p| p.volume).sum();
    totals.backlog_end = queues
        .iter()
        .map(|qs| qs.iter().map(|cq| cq.backlog).sum::<f64>())
        .sum();

    let mut node_class = BTreeMap::new();
    for (node, node_counters) in counters.iter().enumerate() {
        let mut per_class = BTreeMap::new();
        for (cs, class_id) in class_order.iter().enumerate() {
            let mut m = node_counters[cs];
            m.finish();
            per_class.insert(*class_id, m);
        }
        node_class.insert(topo.nodes()[node].name.clone(), per_class);
    }

    let mut channels = BTreeMap::new();
    for (id, adm) in state.iter() {
        let cc = chan_counters[id];
        let class = scenario
            .classes
            .iter()
            .find(|c| c.id == adm.channel.class)
            .expect("validated class");
        let (path_loss_sum, path_delay_sum) = worst_path_sums(
            topo,
            adm,
            &used_paths,
            class_slot_of(adm.channel.class),
            |node, cs| {
                let mut m = counters[node][cs];
                m.finish();
                (m.loss_fraction, m.mean_wait)
            },
        );
        channels.insert(
            adm.channel.name.clone(),
            ChannelMetrics {
                class: adm.channel.class,
                injected: cc.injected,
                delivered: cc.delivered,
                dropped_ingress: cc.dropped_ingress,
                dropped_network: cc.dropped_network,
                path_loss_sum,
                path_delay_sum,
                loss_ok: path_loss_sum <= class.max_loss,
                delay_ok: path_delay_sum <= class.max_delay,
            },
        );
    }

    Ok(SimMetrics {
        schema_version: METRICS_SCHEMA_VERSION,
        mode: cfg.mode,
        total_slots: cfg.total_slots,
        totals,
        node_class,
        channels,
        epochs,
        assignments: assignments_log,
    })
}

/// Offer a parcel to a class queue with tail drop; returns the overflow.
fn enqueue(
    cq: &mut ClassQueue,
    parcel: Parcel,
    buffer_size: f64,
    counters: &mut NodeClassMetrics,
) -> f64 {
    let volume = parcel.volume;
    counters.arrived += volume;
    let space = (buffer_size - cq.backlog).max(0.0);
    // slivers below EPS count as dropped so no volume silently vanishes
    let accept = match volume.min(space) {
        a if a > EPS => a,
        _ => 0.0,
    };
    let dropped = volume - accept;
    if accept > 0.0 {
        cq.backlog += accept;
        cq.q.push_back(Parcel {
            volume: accept,
            ..parcel
        });
    }
    if dropped > 0.0 {
        counters.dropped += dropped;
    }
    dropped
}

/// Move a served parcel one step: deliver it at the last node or put it in
/// transit over the next link.
fn forward(
    path_info: &BTreeMap<PathKey, PathInfo>,
    parcel: Parcel,
    t: u64,
    carried: &mut [Vec<f64>],
    transit_next: &mut Vec<Parcel>,
    chan_counters: &mut BTreeMap<ChannelId, ChanCounters>,
    totals: &mut Totals,
) {
    let info = &path_info[&parcel.path];
    if parcel.hop + 1 == info.nodes.len() {
        chan_counters
            .get_mut(&parcel.path.channel)
            .expect("known channel")
            .delivered += parcel.volume;
        totals.delivered += parcel.volume;
    } else {
        let link = info.links[parcel.hop];
        carried[link.0][t as usize] += parcel.volume;
        transit_next.push(Parcel {
            hop: parcel.hop + 1,
            ..parcel
        });
    }
}

/// Loss and delay sums along the channel's worst path that ever carried
/// planned flow (every path sums its nodes' metrics; delay adds one slot of
/// propagation per hop).
fn worst_path_sums(
    topo: &Topology,
    adm: &AdmittedChannel,
    used: &BTreeSet<PathKey>,
    class_slot: usize,
    node_metric: impl Fn(usize, usize) -> (f64, f64),
) -> (f64, f64) {
    let mut candidates: Vec<&Path> = adm
        .paths
        .iter()
        .filter(|p| used.contains(&p.key()))
        .collect();
    if candidates.is_empty() {
        // fully blocked for the whole run: judge by the cheapest path
        candidates.push(&adm.paths[0]);
    }
    let mut worst_loss = 0.0f64;
    let mut worst_delay = 0.0f64;
    for p in candidates {
        let mut loss = 0.0;
        let mut delay = p.hops() as f64;
        for node in p.nodes(topo) {
            let (l, w) = node_metric(node.0, class_slot);
            loss += l;
            delay += w;
        }
        worst_loss = worst_loss.max(loss);
        worst_delay = worst_delay.max(delay);
    }
    (worst_loss, worst_delay)
}

fn windowed_channel_metrics(
    topo: &Topology,
    classes: &[ServiceClass],
    adm: &AdmittedChannel,
    used: &BTreeSet<PathKey>,
    counters: &[Vec<NodeClassMetrics>],
    prev: &[Vec<NodeClassMetrics>],
    class_slot: usize,
) -> EpochChannelWindow {
    let class = classes
        .iter()
        .find(|c| c.id == adm.channel.class)
        .expect("validated class");
    let (loss_sum, delay_sum) = worst_path_sums(topo, adm, used, class_slot, |node, cs| {
        let d_arrived = counters[node][cs].arrived - prev[node][cs].arrived;
        let d_dropped = counters[node][cs].dropped - prev[node][cs].dropped;
        let d_served = counters[node][cs].served - prev[node][cs].served;
        let d_wait = counters[node][cs].wait_unit_slots - prev[node][cs].wait_unit_slots;
        let loss = if d_arrived > 0.0 {
            d_dropped / d_arrived
        } else {
            0.0
        };
        let wait = if d_served > 0.0 {
            d_wait / d_served
        } else {
            0.0
        };
        (loss, wait)
    });
    EpochChannelWindow {
        loss_sum,
        delay_sum,
        loss_ok: loss_sum <= class.max_loss,
        delay_ok: delay_sum <= class.max_delay,
    }
}

/// Per-slot invariants: global and per-queue volume conservation, work
/// conservation, and strict priority. Enabled by `SimConfig::audit`.
#[allow(clippy::too_many_arguments)]
fn audit_slot(
    topo: &Topology,
    t: u64,
    queues: &[Vec<ClassQueue>],
    counters: &[Vec<NodeClassMetrics>],
    slot_served: &[Vec<f64>],
    available: &[f64],
    transit_next: &[Parcel],
    totals: &Totals,
) {
    let backlog_total: f64 = queues
        .iter()
        .map(|qs| qs.iter().map(|cq| cq.backlog).sum::<f64>())
        .sum();
    let in_flight: f64 = transit_next.iter().map(|p| p.volume).sum();
    let accounted = totals.delivered + totals.dropped() + in_flight + backlog_total;
    let tol = 1e-9 * totals.injected.max(1.0);
    assert!(
        (totals.injected - accounted).abs() <= tol,
        "slot {t}: conservation broke: injected {} vs accounted {accounted}",
        totals.injected
    );
    for (node, qs) in queues.iter().enumerate() {
        for (cs, cq) in qs.iter().enumerate() {
            let c = &counters[node][cs];
            let residue = c.arrived - (c.served + c.dropped + cq.backlog);
            assert!(
                residue.abs() <= 1e-9 * c.arrived.max(1.0),
                "slot {t}: node {node} class slot {cs}: arrived {} != served + dropped + backlog",
                c.arrived
            );
        }
        let served: f64 = slot_served[node].iter().sum();
        let mu = topo.nodes()[node].service_rate;
        let expected = available[node].min(mu);
        assert!(
            (served - expected).abs() <= 1e-9 * (1.0 + expected),
            "slot {t}: node {node} served {served}, expected min(rate, backlog) = {expected}"
        );
        for (cs, _) in qs.iter().enumerate() {
            if slot_served[node][cs] > EPS {
                for (higher, hq) in qs.iter().enumerate().take(cs) {
                    assert!(
                        hq.backlog <= 1e-9,
                        "slot {t}: node {node} served class slot {cs} while {higher} backlogged"
                    );
                }
            }
        }
    }
}
