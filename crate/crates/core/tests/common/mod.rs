//! Shared scenario builders and independent oracles for integration tests.

#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mplsim_core::fractal::EstimatorConfig;
use mplsim_core::net::{
    ChannelId, LinkSpec, NodeRole, NodeSpec, Topology, TopologySpec, TrafficChannel,
};
use mplsim_core::scenario::{Scenario, SimConfig};
use mplsim_core::sim::SimMode;
use mplsim_core::trace::TraceSeries;

pub fn node(name: &str, role: NodeRole, service_rate: f64, buffer_size: f64) -> NodeSpec {
    NodeSpec {
        name: name.into(),
        role,
        service_rate,
        buffer_size,
    }
}

pub fn link(name: &str, from: &str, to: &str, capacity: f64, cost: f64) -> LinkSpec {
    LinkSpec {
        name: name.into(),
        from: from.into(),
        to: to.into(),
        capacity,
        cost,
    }
}

pub fn class(id: u8, max_delay: f64, max_loss: f64) -> mplsim_core::net::ServiceClass {
    mplsim_core::net::ServiceClass {
        id,
        max_delay,
        max_loss,
        priority: id,
    }
}

pub fn sim_config(total_slots: u64, mode: SimMode) -> SimConfig {
    SimConfig {
        total_slots,
        estimation_window: 1024,
        update_interval: 1024,
        seed: 1,
        mode,
        estimator: EstimatorConfig::default(),
        audit: false,
    }
}

pub struct ChannelBuilder {
    pub name: String,
    pub src: String,
    pub dst: String,
    pub class: u8,
    pub demand: f64,
    pub hop_limit: usize,
    pub max_paths: usize,
    pub start: u64,
    pub release: Option<u64>,
    pub trace: TraceSeries,
}

impl ChannelBuilder {
    pub fn constant(name: &str, src: &str, dst: &str, demand: f64) -> Self {
        Self {
            name: name.into(),
            src: src.into(),
            dst: dst.into(),
            class: 0,
            demand,
            hop_limit: 4,
            max_paths: 8,
            start: 0,
            release: None,
            trace: TraceSeries::new(1.0, vec![demand]).unwrap(),
        }
    }

    pub fn with_trace(mut self, trace: TraceSeries) -> Self {
        self.trace = trace;
        self
    }

    pub fn with_class(mut self, class: u8) -> Self {
        self.class = class;
        self
    }

    pub fn with_lifetime(mut self, start: u64, release: Option<u64>) -> Self {
        self.start = start;
        self.release = release;
        self
    }

    pub fn with_hop_limit(mut self, hop_limit: usize) -> Self {
        self.hop_limit = hop_limit;
        self
    }

    fn build(self, idx: usize, topo: &Topology) -> TrafficChannel {
        TrafficChannel {
            id: ChannelId(idx),
            name: self.name,
            src: topo.node_by_name(&self.src).unwrap(),
            dst: topo.node_by_name(&self.dst).unwrap(),
            class: self.class,
            demand: self.demand,
            hop_limit: self.hop_limit,
            max_paths: self.max_paths,
            trace: Arc::new(self.trace),
            start_slot: self.start,
            release_slot: self.release,
        }
    }
}

pub fn scenario(
    nodes: Vec<NodeSpec>,
    links: Vec<LinkSpec>,
    classes: Vec<mplsim_core::net::ServiceClass>,
    channels: Vec<ChannelBuilder>,
    config: SimConfig,
) -> Scenario {
    let topology = Topology::build(&TopologySpec { nodes, links }).unwrap();
    let channels = channels
        .into_iter()
        .enumerate()
        .map(|(i, b)| b.build(i, &topology))
        .collect();
    Scenario {
        topology,
        classes,
        channels,
        config,
        c0_override: None,
    }
}

// ---------------------------------------------------------------------------
// Brute-force assignment oracle for tiny instances

/// One path of a tiny instance: total cost and the link indices it uses.
pub type TinyPath = (f64, Vec<usize>);

/// One tiny assignment instance: link capacities plus, per channel, an
/// integer demand and its paths.
pub struct TinyInstance {
    pub capacities: Vec<f64>,
    pub channels: Vec<(u32, Vec<TinyPath>)>,
}

/// Exhaustive minimum of the routed-bandwidth cost over integer splits that
/// place every channel's full demand; `None` when no full placement fits.
pub fn brute_force_optimum(inst: &TinyInstance) -> Option<f64> {
    fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
        if parts == 1 {
            return vec![vec![total]];
        }
        let mut out = Vec::new();
        for first in 0..=total {
            for mut rest in compositions(total - first, parts - 1) {
                let mut v = vec![first];
                v.append(&mut rest);
                out.push(v);
            }
        }
        out
    }
    fn search(
        inst: &TinyInstance,
        idx: usize,
        load: &mut [f64],
        cost_so_far: f64,
        best: &mut Option<f64>,
    ) {
        if let Some(b) = best {
            if cost_so_far >= *b {
                return;
            }
        }
        if idx == inst.channels.len() {
            *best = Some(best.map_or(cost_so_far, |b: f64| b.min(cost_so_far)));
            return;
        }
        let (demand, paths) = &inst.channels[idx];
        for split in compositions(*demand, paths.len()) {
            let mut ok = true;
            for (p, amount) in paths.iter().zip(&split) {
                if *amount == 0 {
                    continue;
                }
                for l in &p.1 {
                    load[*l] += *amount as f64;
                    if load[*l] > inst.capacities[*l] + 1e-9 {
                        ok = false;
                    }
                }
            }
            if ok {
                let added: f64 = paths.iter().zip(&split).map(|(p, a)| p.0 * *a as f64).sum();
                search(inst, idx + 1, load, cost_so_far + added, best);
            }
            for (p, amount) in paths.iter().zip(&split) {
                if *amount == 0 {
                    continue;
                }
                for l in &p.1 {
                    load[*l] -= *amount as f64;
                }
            }
        }
    }
    let mut best = None;
    let mut load = vec![0.0; inst.capacities.len()];
    search(inst, 0, &mut load, 0.0, &mut best);
    best
}

/// Random parallel-relay topology instance: up to three relay routes plus an
/// optional direct link between two edge routers, shared by up to three
/// channels.
pub fn random_tiny_instance(seed: u64) -> (Scenario, TinyInstance) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_relays = rng.gen_range(1..=3usize);
    let direct = rng.gen_bool(0.5);
    let n_channels = rng.gen_range(1..=3usize);

    let mut nodes = vec![
        node("s", NodeRole::Ler, 1000.0, 10_000.0),
        node("t", NodeRole::Ler, 1000.0, 10_000.0),
    ];
    let mut links = Vec::new();
    for r in 0..n_relays {
        let relay = format!("r{r}");
        nodes.push(node(&relay, NodeRole::Lsr, 1000.0, 10_000.0));
        let cap = rng.gen_range(5..=25) as f64;
        links.push(link(
            &format!("s-{relay}"),
            "s",
            &relay,
            cap,
            rng.gen_range(1..=10) as f64,
        ));
        links.push(link(
            &format!("{relay}-t"),
            &relay,
            "t",
            cap,
            rng.gen_range(1..=10) as f64,
        ));
    }
    if direct {
        links.push(link(
            "s-t",
            "s",
            "t",
            rng.gen_range(5..=25) as f64,
            rng.gen_range(1..=10) as f64,
        ));
    }
    let mut channels = Vec::new();
    for c in 0..n_channels {
        let demand = rng.gen_range(1..=10u32);
        let mut b = ChannelBuilder::constant(&format!("ch{c}"), "s", "t", demand as f64);
        b.hop_limit = 2;
        b.max_paths = 3;
        channels.push(b);
    }
    let sc = scenario(
        nodes,
        links,
        vec![class(0, 100.0, 0.5)],
        channels,
        sim_config(10, SimMode::StaticCosts),
    );

    // Mirror the instance for the oracle: paths exactly as admitted.
    let mut state = mplsim_core::net::NetworkState::new();
    let topo = &sc.topology;
    for ch in &sc.channels {
        state
            .admit_channel(topo, ch.clone(), &|l| topo.link(l).base_cost)
            .unwrap();
    }
    let capacities: Vec<f64> = topo.links().iter().map(|l| l.capacity).collect();
    let mut tiny_channels = Vec::new();
    for (_, adm) in state.iter() {
        let paths = adm
            .paths
            .iter()
            .map(|p| {
                let cost: f64 = p.links.iter().map(|l| topo.link(*l).base_cost).sum();
                (cost, p.links.iter().map(|l| l.0).collect())
            })
            .collect();
        tiny_channels.push((adm.channel.demand as u32, paths));
    }
    (
        sc,
        TinyInstance {
            capacities,
            channels: tiny_channels,
        },
    )
}
