//! Path costs, burstiness-aware cost recalculation and flow assignment.
//!
//! A path's cost is the sum of its links' base costs. At regular intervals
//! the cost is recalculated from the fractal characteristics of the traffic
//! the path carries — the Hurst exponent H and the coefficient of variation
//! S_v — through a four-branch piecewise rule:
//!
//! ```text
//! (a) H <= 0.5                          ->  C                 unchanged
//! (b) 0.5 < H < 0.9, S_v <= 1           ->  C + (H - 0.5) * C0
//! (c) 0.5 < H < 0.9, 1 < S_v < 3        ->  C + (H - 0.5) * max(1, S_v - 1) * C0
//! (d) H >= 0.9, or H > 0.5 and S_v >= 3 ->  C + C0
//! ```
//!
//! C0 is an administrator constant. The increment is always within [0, C0]
//! and non-decreasing in both H and S_v; recalculation always starts from
//! the base cost, so epochs do not compound.
//!
//! Demands are then spread over admissible paths by a deterministic greedy
//! heuristic minimizing the total cost of routed bandwidth subject to link
//! capacities, followed by a bounded local-improvement pass (within-channel
//! reroutes, blocked-demand retries, and two-channel exchanges).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::RoutingError;
use crate::fractal::FractalEstimate;
use crate::net::{ChannelId, LinkId, Path, PathKey, Topology, TrafficChannel};

const EPS: f64 = 1e-9;

/// Which branch of the recalculation rule fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostBranch {
    /// (a) independent or antipersistent traffic: cost unchanged.
    Unchanged,
    /// (b) persistent, small spread: increment proportional to H.
    Persistence,
    /// (c) persistent, large spread: increment proportional to both.
    PersistenceAndSpread,
    /// (d) strongly persistent or very high spread: full increment C0.
    Saturated,
}

impl fmt::Display for CostBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostBranch::Unchanged => "a",
            CostBranch::Persistence => "b",
            CostBranch::PersistenceAndSpread => "c",
            CostBranch::Saturated => "d",
        })
    }
}

/// Recalculate one path cost from (H, S_v).
///
/// Branch (c) clamps the spread factor at 1 so its increment never dips
/// below branch (b)'s as S_v crosses 1; the rule is then non-decreasing in
/// S_v over the whole domain, which the raw product form is not on
/// 1 < S_v < 2.
pub fn recalc_cost(cost: f64, hurst: f64, coeff_var: f64, c0: f64) -> (f64, CostBranch) {
    debug_assert!(cost > 0.0 && c0 > 0.0 && coeff_var >= 0.0);
    debug_assert!(
        (0.01..=0.99).contains(&hurst),
        "hurst must be clamped upstream"
    );
    if hurst <= 0.5 {
        (cost, CostBranch::Unchanged)
    } else if hurst >= 0.9 || coeff_var >= 3.0 {
        (cost + c0, CostBranch::Saturated)
    } else if coeff_var <= 1.0 {
        (cost + (hurst - 0.5) * c0, CostBranch::Persistence)
    } else {
        let spread = (coeff_var - 1.0).max(1.0);
        (
            cost + (hurst - 0.5) * spread * c0,
            CostBranch::PersistenceAndSpread,
        )
    }
}

/// Current cost view: per-link base costs plus per-path cached costs. After
/// every recalculation the table is the single source of truth for
/// subsequent assignments, modeling the path-state announcement between
/// routers.
#[derive(Debug, Clone)]
pub struct CostTable {
    link_base: Vec<f64>,
    path_base: BTreeMap<PathKey, f64>,
    path_current: BTreeMap<PathKey, f64>,
    update_constant: f64,
    epoch: u64,
}

impl CostTable {
    pub fn new(topo: &Topology, update_constant: f64) -> Self {
        Self {
            link_base: topo.links().iter().map(|l| l.base_cost).collect(),
            path_base: BTreeMap::new(),
            path_current: BTreeMap::new(),
            update_constant,
            epoch: 0,
        }
    }

    pub fn update_constant(&self) -> f64 {
        self.update_constant
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn link_cost(&self, link: LinkId) -> Result<f64, RoutingError> {
        self.link_base
            .get(link.0)
            .copied()
            .ok_or(RoutingError::UnknownLink(link.0))
    }

    /// Sum of link costs along a path.
    pub fn path_cost(&self, links: &[LinkId]) -> Result<f64, RoutingError> {
        if links.is_empty() {
            return Err(RoutingError::EmptyPath);
        }
        links
            .iter()
            .try_fold(0.0, |acc, l| Ok(acc + self.link_cost(*l)?))
    }

    /// Register a channel's admissible paths; cached costs start at the base
    /// sum.
    pub fn register_paths(&mut self, paths: &[Path]) -> Result<(), RoutingError> {
        for p in paths {
            let base = self.path_cost(&p.links)?;
            self.path_base.insert(p.key(), base);
            self.path_current.insert(p.key(), base);
        }
        Ok(())
    }

    pub fn deregister_channel(&mut self, channel: ChannelId) {
        self.path_base.retain(|k, _| k.channel != channel);
        self.path_current.retain(|k, _| k.channel != channel);
    }

    pub fn current_path_cost(&self, key: PathKey) -> Option<f64> {
        self.path_current.get(&key).copied()
    }

    pub fn current_paths(&self) -> &BTreeMap<PathKey, f64> {
        &self.path_current
    }

    /// Recalculate every registered path from its base cost and the supplied
    /// estimate, then bump the epoch. A missing estimate is an error;
    /// callers pass the degenerate fallback for idle paths.
    pub fn recalc_all(
        &mut self,
        estimates: &BTreeMap<PathKey, FractalEstimate>,
    ) -> Result<(), RoutingError> {
        let mut next = BTreeMap::new();
        for (key, base) in &self.path_base {
            let est = estimates
                .get(key)
                .ok_or_else(|| RoutingError::MissingEstimate(key.label()))?;
            let (cost, _) = recalc_cost(*base, est.hurst, est.coeff_var, self.update_constant);
            next.insert(*key, cost);
        }
        self.path_current = next;
        self.epoch += 1;
        Ok(())
    }
}

/// Planned bandwidth per (channel, path) plus any demand that could not be
/// placed within link capacities. Valid from the slot it was computed at
/// until the next reassignment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowAssignment {
    rates: BTreeMap<PathKey, f64>,
    blocked: BTreeMap<ChannelId, f64>,
    epoch: u64,
}

impl FlowAssignment {
    pub fn rates(&self) -> &BTreeMap<PathKey, f64> {
        &self.rates
    }

    pub fn rate(&self, key: PathKey) -> f64 {
        self.rates.get(&key).copied().unwrap_or(0.0)
    }

    pub fn blocked(&self, channel: ChannelId) -> f64 {
        self.blocked.get(&channel).copied().unwrap_or(0.0)
    }

    pub fn blocked_channels(&self) -> &BTreeMap<ChannelId, f64> {
        &self.blocked
    }

    pub fn blocked_total(&self) -> f64 {
        self.blocked.values().sum()
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn assigned_of(&self, channel: ChannelId) -> f64 {
        self.rates
            .iter()
            .filter(|(k, _)| k.channel == channel)
            .map(|(_, r)| r)
            .sum()
    }

    /// Objective value: total cost of routed bandwidth.
    pub fn objective(&self, costs: &CostTable) -> f64 {
        self.rates
            .iter()
            .map(|(k, r)| costs.current_path_cost(*k).unwrap_or(0.0) * r)
            .sum()
    }
}

/// One channel's candidate path, precomputed for the assignment loops.
struct Cand {
    key: PathKey,
    links: Vec<LinkId>,
    cost: f64,
}

struct ChannelCands {
    id: ChannelId,
    demand: f64,
    /// Sorted by (cost, hops, lexicographic link-name sequence).
    cands: Vec<Cand>,
}

/// Assign channel demands to admissible paths, cheapest-first with
/// splitting.
///
/// Channels are processed in descending demand order (ties by id); each
/// fills its cheapest path up to the bottleneck residual and spills the
/// remainder to the next-cheapest. A bounded improvement pass then moves
/// flow toward cheaper paths, retries blocked remainders on freed capacity,
/// and performs two-channel exchanges where one channel's detour lets
/// another save more than the detour costs. Unplaceable demand is recorded
/// per channel, never raised.
pub fn assign_flows(
    channels: &[(&TrafficChannel, &[Path])],
    costs: &CostTable,
    topo: &Topology,
) -> FlowAssignment {
    let mut chans: Vec<ChannelCands> = channels
        .iter()
        .map(|(ch, paths)| {
            let mut cands: Vec<Cand> = paths
                .iter()
                .map(|p| Cand {
                    key: p.key(),
                    links: p.links.clone(),
                    cost: costs.current_path_cost(p.key()).unwrap_or(f64::INFINITY),
                })
                .collect();
            cands.sort_by(|a, b| {
                let names = |c: &Cand| -> Vec<&str> {
                    c.links
                        .iter()
                        .map(|l| topo.link(*l).name.as_str())
                        .collect()
                };
                a.cost
                    .total_cmp(&b.cost)
                    .then(a.links.len().cmp(&b.links.len()))
                    .then_with(|| names(a).cmp(&names(b)))
            });
            ChannelCands {
                id: ch.id,
                demand: ch.demand,
                cands,
            }
        })
        .collect();
    chans.sort_by(|a, b| b.demand.total_cmp(&a.demand).then(a.id.cmp(&b.id)));

    let mut load = vec![0.0f64; topo.links().len()];
    let mut rates: BTreeMap<PathKey, f64> = BTreeMap::new();
    let mut blocked: BTreeMap<ChannelId, f64> = BTreeMap::new();

    let headroom = |load: &[f64], links: &[LinkId]| -> f64 {
        links
            .iter()
            .map(|l| topo.link(*l).capacity - load[l.0])
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    };

    // Greedy construction.
    for ch in &chans {
        let mut remaining = ch.demand;
        for cand in &ch.cands {
            if remaining <= EPS {
                break;
            }
            let take = headroom(&load, &cand.links).min(remaining);
            if take > EPS {
                for l in &cand.links {
                    load[l.0] += take;
                }
                *rates.entry(cand.key).or_insert(0.0) += take;
                remaining -= take;
            }
        }
        if remaining > EPS {
            blocked.insert(ch.id, remaining);
        }
    }

    // Improvement rounds. Every accepted move strictly reduces
    // (blocked total, objective) lexicographically, so this terminates.
    for _ in 0..16 {
        let mut improved = false;
        improved |= reroute_within_channels(&chans, topo, &mut load, &mut rates);
        improved |= retry_blocked(&chans, topo, &mut load, &mut rates, &mut blocked);
        improved |= exchange_between_channels(&chans, topo, &mut load, &mut rates, &mut blocked);
        if !improved {
            break;
        }
    }

    rates.retain(|_, r| *r > EPS);
    FlowAssignment {
        rates,
        blocked,
        epoch: costs.epoch(),
    }
}

/// Move flow from expensive paths to strictly cheaper paths of the same
/// channel wherever the gained links have headroom.
fn reroute_within_channels(
    chans: &[ChannelCands],
    topo: &Topology,
    load: &mut [f64],
    rates: &mut BTreeMap<PathKey, f64>,
) -> bool {
    let mut improved = false;
    for ch in chans {
        for fi in (1..ch.cands.len()).rev() {
            let have = rates.get(&ch.cands[fi].key).copied().unwrap_or(0.0);
            if have <= EPS {
                continue;
            }
            for ti in 0..fi {
                if ch.cands[ti].cost >= ch.cands[fi].cost - EPS {
                    break;
                }
                let gained: Vec<LinkId> = ch.cands[ti]
                    .links
                    .iter()
                    .filter(|l| !ch.cands[fi].links.contains(l))
                    .copied()
                    .collect();
                let room = gained
                    .iter()
                    .map(|l| topo.link(*l).capacity - load[l.0])
                    .fold(f64::INFINITY, f64::min)
                    .max(0.0);
                let delta = have.min(room);
                if delta > EPS {
                    shift(rates, load, &ch.cands[fi], &ch.cands[ti], delta);
                    improved = true;
                    break;
                }
            }
        }
    }
    improved
}

/// Place blocked remainders on whatever capacity improvement moves freed.
fn retry_blocked(
    chans: &[ChannelCands],
    topo: &Topology,
    load: &mut [f64],
    rates: &mut BTreeMap<PathKey, f64>,
    blocked: &mut BTreeMap<ChannelId, f64>,
) -> bool {
    let mut improved = false;
    for ch in chans {
        let Some(mut remaining) = blocked.get(&ch.id).copied() else {
            continue;
        };
        for cand in &ch.cands {
            if remaining <= EPS {
                break;
            }
            let room = cand
                .links
                .iter()
                .map(|l| topo.link(*l).capacity - load[l.0])
                .fold(f64::INFINITY, f64::min)
                .max(0.0);
            let take = room.min(remaining);
            if take > EPS {
                for l in &cand.links {
                    load[l.0] += take;
                }
                *rates.entry(cand.key).or_insert(0.0) += take;
                remaining -= take;
                improved = true;
            }
        }
        if remaining > EPS {
            blocked.insert(ch.id, remaining);
        } else {
            blocked.remove(&ch.id);
        }
    }
    improved
}

/// Two-channel exchange: a victim channel detours off a path so a gainer
/// channel can use the freed capacity, accepted only when the gainer saves
/// strictly more than the victim's detour costs (blocked demand counts as an
/// unconditional save).
fn exchange_between_channels(
    chans: &[ChannelCands],
    topo: &Topology,
    load: &mut [f64],
    rates: &mut BTreeMap<PathKey, f64>,
    blocked: &mut BTreeMap<ChannelId, f64>,
) -> bool {
    for vi in 0..chans.len() {
        for vf in 0..chans[vi].cands.len() {
            let vhave = rates.get(&chans[vi].cands[vf].key).copied().unwrap_or(0.0);
            if vhave <= EPS {
                continue;
            }
            for vt in 0..chans[vi].cands.len() {
                if vt == vf {
                    continue;
                }
                let detour = chans[vi].cands[vt].cost - chans[vi].cands[vf].cost;
                if detour < -EPS || !detour.is_finite() {
                    continue; // strictly cheaper moves belong to the reroute pass
                }
                let gained: Vec<LinkId> = chans[vi].cands[vt]
                    .links
                    .iter()
                    .filter(|l| !chans[vi].cands[vf].links.contains(l))
                    .copied()
                    .collect();
                let vroom = gained
                    .iter()
                    .map(|l| topo.link(*l).capacity - load[l.0])
                    .fold(f64::INFINITY, f64::min)
                    .max(0.0);
                let delta_v = vhave.min(vroom);
                if delta_v <= EPS {
                    continue;
                }
                // trial load with the victim moved
                let mut trial = load.to_vec();
                for l in &chans[vi].cands[vf].links {
                    trial[l.0] -= delta_v;
                }
                for l in &chans[vi].cands[vt].links {
                    trial[l.0] += delta_v;
                }
                for (gi, gch) in chans.iter().enumerate() {
                    if gi == vi {
                        continue;
                    }
                    // (1) blocked demand placed on freed capacity always wins
                    if let Some(gdemand) = blocked.get(&gch.id).copied() {
                        for gcand in &gch.cands {
                            let room = gcand
                                .links
                                .iter()
                                .map(|l| topo.link(*l).capacity - trial[l.0])
                                .fold(f64::INFINITY, f64::min)
                                .max(0.0);
                            let delta_g = gdemand.min(room);
                            if delta_g <= EPS {
                                continue;
                            }
                            shift(
                                rates,
                                load,
                                &chans[vi].cands[vf],
                                &chans[vi].cands[vt],
                                delta_v,
                            );
                            for l in &gcand.links {
                                load[l.0] += delta_g;
                            }
                            *rates.entry(gcand.key).or_insert(0.0) += delta_g;
                            let left = gdemand - delta_g;
                            if left > EPS {
                                blocked.insert(gch.id, left);
                            } else {
                                blocked.remove(&gch.id);
                            }
                            return true; // loads changed; restart the scan
                        }
                    }
                    // (2) reroute the gainer's flow from an expensive path to a
                    // cheaper one through the freed capacity
                    for gf in (0..gch.cands.len()).rev() {
                        let ghave = rates.get(&gch.cands[gf].key).copied().unwrap_or(0.0);
                        if ghave <= EPS {
                            continue;
                        }
                        for gt in 0..gf {
                            let saving = gch.cands[gf].cost - gch.cands[gt].cost;
                            if saving <= EPS || !saving.is_finite() {
                                continue;
                            }
                            let ggained: Vec<LinkId> = gch.cands[gt]
                                .links
                                .iter()
                                .filter(|l| !gch.cands[gf].links.contains(l))
                                .copied()
                                .collect();
                            let groom = ggained
                                .iter()
                                .map(|l| topo.link(*l).capacity - trial[l.0])
                                .fold(f64::INFINITY, f64::min)
                                .max(0.0);
                            let delta_g = ghave.min(groom);
                            if delta_g <= EPS {
                                continue;
                            }
                            let gain = delta_g * saving - delta_v * detour;
                            if gain <= EPS {
                                continue;
                            }
                            shift(
                                rates,
                                load,
                                &chans[vi].cands[vf],
                                &chans[vi].cands[vt],
                                delta_v,
                            );
                            shift(rates, load, &gch.cands[gf], &gch.cands[gt], delta_g);
                            return true;
                        }
                    }
                }
            }
        }
    }
    false
}

fn shift(rates: &mut BTreeMap<PathKey, f64>, load: &mut [f64], from: &Cand, to: &Cand, delta: f64) {
    for l in &from.links {
        load[l.0] -= delta;
    }
    for l in &to.links {
        load[l.0] += delta;
    }
    let r = rates.get_mut(&from.key).expect("source path has flow");
    *r -= delta;
    if *r <= EPS {
        rates.remove(&from.key);
    }
    *rates.entry(to.key).or_insert(0.0) += delta;
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::net::{LinkSpec, NetworkState, NodeRole, NodeSpec, TopologySpec};
    use crate::trace::TraceSeries;

    fn estimate(hurst: f64, coeff_var: f64) -> FractalEstimate {
        FractalEstimate {
            hurst,
            coeff_var,
            std_dev: coeff_var,
            mean: 1.0,
            window_slots: 64,
            degenerate: false,
        }
    }

    #[test]
    fn recalc_examples() {
        let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
        let (c, b) = recalc_cost(10.0, 0.5, 5.0, 4.0);
        assert!(close(c, 10.0) && b == CostBranch::Unchanged);
        let (c, b) = recalc_cost(10.0, 0.7, 0.8, 4.0);
        assert!(close(c, 10.8) && b == CostBranch::Persistence);
        let (c, b) = recalc_cost(10.0, 0.7, 2.0, 4.0);
        assert!(close(c, 10.8) && b == CostBranch::PersistenceAndSpread);
        let (c, b) = recalc_cost(10.0, 0.92, 0.1, 4.0);
        assert!(close(c, 14.0) && b == CostBranch::Saturated);
        let (c, b) = recalc_cost(10.0, 0.6, 3.0, 4.0);
        assert!(close(c, 14.0) && b == CostBranch::Saturated);
    }

    #[test]
    fn recalc_boundaries() {
        // H exactly 0.5 keeps the cost; S_v = 1 stays on the H-only branch;
        // H = 0.9 saturates regardless of spread.
        assert_eq!(recalc_cost(10.0, 0.5, 0.0, 4.0).1, CostBranch::Unchanged);
        assert_eq!(recalc_cost(10.0, 0.49, 9.0, 4.0).1, CostBranch::Unchanged);
        assert_eq!(recalc_cost(10.0, 0.7, 1.0, 4.0).1, CostBranch::Persistence);
        assert_eq!(recalc_cost(10.0, 0.9, 0.0, 4.0).1, CostBranch::Saturated);
        assert_eq!(recalc_cost(10.0, 0.51, 3.0, 4.0).1, CostBranch::Saturated);
    }

    fn three_node_topo(direct_cost: f64) -> Topology {
        let node = |name: &str, role| NodeSpec {
            name: name.into(),
            role,
            service_rate: 100.0,
            buffer_size: 100.0,
        };
        let link = |name: &str, from: &str, to: &str, capacity: f64, cost: f64| LinkSpec {
            name: name.into(),
            from: from.into(),
            to: to.into(),
            capacity,
            cost,
        };
        Topology::build(&TopologySpec {
            nodes: vec![
                node("a", NodeRole::Ler),
                node("b", NodeRole::Ler),
                node("c", NodeRole::Lsr),
            ],
            links: vec![
                link("ab", "a", "b", 6.0, direct_cost),
                link("ac", "a", "c", 10.0, 4.0),
                link("cb", "c", "b", 10.0, 5.0),
            ],
        })
        .unwrap()
    }

    fn channel(id: usize, topo: &Topology, demand: f64) -> TrafficChannel {
        TrafficChannel {
            id: ChannelId(id),
            name: format!("ch{id}"),
            src: topo.node_by_name("a").unwrap(),
            dst: topo.node_by_name("b").unwrap(),
            class: 0,
            demand,
            hop_limit: 2,
            max_paths: 8,
            trace: Arc::new(TraceSeries::new(1.0, vec![demand]).unwrap()),
            start_slot: 0,
            release_slot: None,
        }
    }

    fn admitted(topo: &Topology, costs: &mut CostTable, demand: f64) -> (NetworkState, ChannelId) {
        let mut state = NetworkState::new();
        let base: Vec<f64> = topo.links().iter().map(|l| l.base_cost).collect();
        let id = state
            .admit_channel(topo, channel(0, topo, demand), &|l| base[l.0])
            .unwrap();
        costs.register_paths(&state.get(id).unwrap().paths).unwrap();
        (state, id)
    }

    #[test]
    fn path_cost_sums_link_costs() {
        let topo = three_node_topo(7.0);
        let costs = CostTable::new(&topo, 1.0);
        assert_eq!(costs.path_cost(&[LinkId(0)]).unwrap(), 7.0);
        let two_hop = costs.path_cost(&[LinkId(1), LinkId(2)]).unwrap();
        assert!((two_hop - 9.0).abs() < 1e-12);
        assert!(matches!(costs.path_cost(&[]), Err(RoutingError::EmptyPath)));
        assert!(matches!(
            costs.path_cost(&[LinkId(9)]),
            Err(RoutingError::UnknownLink(9))
        ));
    }

    #[test]
    fn fractional_costs_sum() {
        let node = |name: &str| NodeSpec {
            name: name.into(),
            role: NodeRole::Ler,
            service_rate: 1.0,
            buffer_size: 1.0,
        };
        let link = |name: &str, from: &str, to: &str, cost: f64| LinkSpec {
            name: name.into(),
            from: from.into(),
            to: to.into(),
            capacity: 1.0,
            cost,
        };
        let topo = Topology::build(&TopologySpec {
            nodes: vec![node("a"), node("b"), node("c"), node("d")],
            links: vec![
                link("l0", "a", "b", 3.0),
                link("l1", "b", "c", 4.5),
                link("l2", "c", "d", 2.5),
            ],
        })
        .unwrap();
        let costs = CostTable::new(&topo, 1.0);
        let total = costs.path_cost(&[LinkId(0), LinkId(1), LinkId(2)]).unwrap();
        assert!((total - 10.0).abs() < 1e-12);
    }

    #[test]
    fn recalc_all_replaces_cached_costs_from_base() {
        let topo = three_node_topo(5.0);
        let mut costs = CostTable::new(&topo, 4.0);
        let (state, id) = admitted(&topo, &mut costs, 3.0);
        let paths = &state.get(id).unwrap().paths;
        let direct = paths.iter().find(|p| p.hops() == 1).unwrap().key();
        let relay = paths.iter().find(|p| p.hops() == 2).unwrap().key();

        // degenerate estimates everywhere: table equals base, epoch bumps
        let mut degen = BTreeMap::new();
        degen.insert(direct, FractalEstimate::degenerate_fallback(1.0, 64));
        degen.insert(relay, FractalEstimate::degenerate_fallback(1.0, 64));
        costs.recalc_all(&degen).unwrap();
        assert_eq!(costs.epoch(), 1);
        assert_eq!(costs.current_path_cost(direct), Some(5.0));
        assert_eq!(costs.current_path_cost(relay), Some(9.0));

        // one strongly persistent path rises by exactly C0
        let mut est = degen.clone();
        est.insert(direct, estimate(0.95, 0.2));
        costs.recalc_all(&est).unwrap();
        assert_eq!(costs.current_path_cost(direct), Some(9.0));
        assert_eq!(costs.current_path_cost(relay), Some(9.0));

        // idempotent for identical inputs, and always from base
        costs.recalc_all(&est).unwrap();
        assert_eq!(costs.current_path_cost(direct), Some(9.0));
        assert_eq!(costs.epoch(), 3);

        // a missing estimate is an error
        let mut partial = est.clone();
        partial.remove(&relay);
        assert!(matches!(
            costs.recalc_all(&partial),
            Err(RoutingError::MissingEstimate(_))
        ));
    }

    #[test]
    fn cheapest_path_takes_everything_when_it_fits() {
        let topo = three_node_topo(5.0); // direct cost 5, relay cost 9
        let mut costs = CostTable::new(&topo, 1.0);
        let (state, id) = admitted(&topo, &mut costs, 4.0);
        let adm = state.get(id).unwrap();
        let assignment = assign_flows(&[(&adm.channel, &adm.paths)], &costs, &topo);
        let direct = adm.paths.iter().find(|p| p.hops() == 1).unwrap().key();
        assert!((assignment.rate(direct) - 4.0).abs() < 1e-12);
        assert_eq!(assignment.blocked_total(), 0.0);
    }

    #[test]
    fn demand_splits_at_the_bottleneck() {
        // direct path capacity 6 and cost 5; relay capacity 10 and cost 9
        let topo = three_node_topo(5.0);
        let mut costs = CostTable::new(&topo, 1.0);
        let (state, id) = admitted(&topo, &mut costs, 10.0);
        let adm = state.get(id).unwrap();
        let assignment = assign_flows(&[(&adm.channel, &adm.paths)], &costs, &topo);
        let direct = adm.paths.iter().find(|p| p.hops() == 1).unwrap().key();
        let relay = adm.paths.iter().find(|p| p.hops() == 2).unwrap().key();
        assert!((assignment.rate(direct) - 6.0).abs() < 1e-9);
        assert!((assignment.rate(relay) - 4.0).abs() < 1e-9);
        assert!((assignment.assigned_of(id) - 10.0).abs() < 1e-9);

        // brute force over integer splits on this two-path instance
        let mut best = f64::INFINITY;
        for on_direct in 0..=6 {
            let on_relay = 10 - on_direct;
            if on_relay <= 10 {
                best = best.min(on_direct as f64 * 5.0 + on_relay as f64 * 9.0);
            }
        }
        assert!((assignment.objective(&costs) - best).abs() < 1e-9);
    }

    #[test]
    fn demand_beyond_min_cut_is_blocked() {
        // disjoint capacities 6 + 10 = 16 (the min cut out of 'a'); ask for 18
        let topo = three_node_topo(5.0);
        let mut costs = CostTable::new(&topo, 1.0);
        let (state, id) = admitted(&topo, &mut costs, 18.0);
        let adm = state.get(id).unwrap();
        let assignment = assign_flows(&[(&adm.channel, &adm.paths)], &costs, &topo);
        assert!((assignment.assigned_of(id) - 16.0).abs() < 1e-9);
        assert!((assignment.blocked(id) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn capacity_is_respected_and_assignment_deterministic() {
        let topo = three_node_topo(5.0);
        let mut costs = CostTable::new(&topo, 1.0);
        let mut state = NetworkState::new();
        let base: Vec<f64> = topo.links().iter().map(|l| l.base_cost).collect();
        let ids: Vec<ChannelId> = (0..3)
            .map(|i| {
                state
                    .admit_channel(&topo, channel(i, &topo, 4.0 + i as f64), &|l| base[l.0])
                    .unwrap()
            })
            .collect();
        for id in &ids {
            costs
                .register_paths(&state.get(*id).unwrap().paths)
                .unwrap();
        }
        let chans: Vec<(&TrafficChannel, &[Path])> = ids
            .iter()
            .map(|id| {
                let adm = state.get(*id).unwrap();
                (&adm.channel, adm.paths.as_slice())
            })
            .collect();
        let a1 = assign_flows(&chans, &costs, &topo);
        let a2 = assign_flows(&chans, &costs, &topo);
        assert_eq!(a1, a2);
        for link in topo.links() {
            let load: f64 = a1
                .rates()
                .iter()
                .filter(|(k, _)| {
                    let adm = state.get(k.channel).unwrap();
                    adm.paths[k.index].links.contains(&link.id)
                })
                .map(|(_, r)| r)
                .sum();
            assert!(load <= link.capacity + 1e-9, "{} overloaded", link.name);
        }
        // every non-blocked channel is fully satisfied
        for id in &ids {
            let total = a1.assigned_of(*id) + a1.blocked(*id);
            assert!((total - state.get(*id).unwrap().channel.demand).abs() < 1e-9);
        }
    }

    #[test]
    fn raising_a_path_cost_steers_flow_away() {
        let topo = three_node_topo(5.0);
        let mut costs = CostTable::new(&topo, 9.0);
        let (state, id) = admitted(&topo, &mut costs, 4.0);
        let adm = state.get(id).unwrap();
        let direct = adm.paths.iter().find(|p| p.hops() == 1).unwrap().key();
        let relay = adm.paths.iter().find(|p| p.hops() == 2).unwrap().key();

        let before = assign_flows(&[(&adm.channel, &adm.paths)], &costs, &topo);
        assert!(before.rate(direct) > 0.0);

        // direct path turns strongly persistent: cost 5 -> 14, above the relay's 9
        let mut est = BTreeMap::new();
        est.insert(direct, estimate(0.95, 0.5));
        est.insert(relay, FractalEstimate::degenerate_fallback(1.0, 64));
        costs.recalc_all(&est).unwrap();
        let after = assign_flows(&[(&adm.channel, &adm.paths)], &costs, &topo);
        assert_eq!(after.rate(direct), 0.0);
        assert!((after.rate(relay) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn exchange_rescues_a_costly_displacement() {
        // shared cheap link capacity 10; channel 0 can detour for +1/unit,
        // channel 1's alternative costs +45/unit. Greedy puts the larger
        // demand (processed first) on the shared link; the exchange must
        // hand the shared link to channel 1.
        let node = |name: &str, role| NodeSpec {
            name: name.into(),
            role,
            service_rate: 100.0,
            buffer_size: 100.0,
        };
        let link = |name: &str, from: &str, to: &str, capacity: f64, cost: f64| LinkSpec {
            name: name.into(),
            from: from.into(),
            to: to.into(),
            capacity,
            cost,
        };
        let topo = Topology::build(&TopologySpec {
            nodes: vec![
                node("a", NodeRole::Ler),
                node("b", NodeRole::Ler),
                node("s", NodeRole::Lsr),
                node("x", NodeRole::Lsr),
                node("y", NodeRole::Lsr),
            ],
            links: vec![
                link("as", "a", "s", 10.0, 0.5),
                link("sb", "s", "b", 10.0, 0.5),
                link("ax", "a", "x", 10.0, 1.0),
                link("xb", "x", "b", 10.0, 1.0),
                link("ay", "a", "y", 10.0, 23.0),
                link("yb", "y", "b", 10.0, 23.0),
            ],
        })
        .unwrap();
        let mut costs = CostTable::new(&topo, 1.0);
        let mut state = NetworkState::new();
        let base: Vec<f64> = topo.links().iter().map(|l| l.base_cost).collect();
        // ch0: shared (1.0) or x-route (2.0); ch1: shared (1.0) or y-route (46.0)
        let mut ch0 = channel(0, &topo, 10.0);
        ch0.max_paths = 2;
        let mut ch1 = channel(1, &topo, 10.0);
        ch1.max_paths = 3;
        let id0 = state.admit_channel(&topo, ch0, &|l| base[l.0]).unwrap();
        let id1 = state.admit_channel(&topo, ch1, &|l| base[l.0]).unwrap();
        for id in [id0, id1] {
            costs.register_paths(&state.get(id).unwrap().paths).unwrap();
        }
        let chans: Vec<(&TrafficChannel, &[Path])> = [id0, id1]
            .iter()
            .map(|id| {
                let adm = state.get(*id).unwrap();
                (&adm.channel, adm.paths.as_slice())
            })
            .collect();
        let assignment = assign_flows(&chans, &costs, &topo);
        let objective = assignment.objective(&costs);
        // optimum: ch0 on x-route (20), ch1 on shared (10) = 30
        assert!(
            objective <= 30.0 + 1e-6,
            "exchange missed: objective {objective}"
        );
    }
}
