//! Scenario assembly: the validated inputs of one simulation run, plus the
//! JSON file format consumed by the CLI.
//!
//! A scenario file has the top-level keys `simulation`, `nodes`, `links`,
//! `classes`, `channels` and optionally `c0`. Channel traffic is either a
//! reference to a trace file or inline generator parameters; omitted seeds
//! are derived deterministically from the simulation seed and the channel
//! index.

use std::fs;
use std::path::Path as FsPath;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::fractal::EstimatorConfig;
use crate::net::{
    ChannelId, LinkSpec, NodeSpec, ServiceClass, Topology, TopologySpec, TrafficChannel,
};
use crate::rng::derive_seed;
use crate::sim::SimMode;
use crate::trace::TraceSeries;
use crate::traffic::{gen_cascade, gen_fgn, gen_onoff, CascadeParams, FgnParams, OnOffParams};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub total_slots: u64,
    /// Slots per fractal estimate at an update epoch.
    pub estimation_window: usize,
    /// Slots between cost-update epochs; at least one estimation window.
    pub update_interval: u64,
    pub seed: u64,
    pub mode: SimMode,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    /// Per-slot conservation, work-conservation and priority checks; used by
    /// tests, off by default.
    #[serde(default)]
    pub audit: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.total_slots == 0 {
            return Err("total_slots must be >= 1".into());
        }
        if self.estimation_window < 64 {
            return Err(format!(
                "estimation_window must be >= 64 slots, got {}",
                self.estimation_window
            ));
        }
        if self.update_interval < self.estimation_window as u64 {
            return Err(format!(
                "update_interval ({}) must cover at least one estimation_window ({})",
                self.update_interval, self.estimation_window
            ));
        }
        Ok(())
    }
}

/// Validated inputs of one run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub topology: Topology,
    pub classes: Vec<ServiceClass>,
    pub channels: Vec<TrafficChannel>,
    pub config: SimConfig,
    /// Administrator override of the cost-update constant; defaults to the
    /// mean base path cost over all admitted paths.
    pub c0_override: Option<f64>,
}

// ---------------------------------------------------------------------------
// File schema

#[derive(Debug, Deserialize)]
pub struct ScenarioFile {
    pub simulation: SimConfig,
    #[serde(default)]
    pub c0: Option<f64>,
    pub nodes: Vec<NodeSpec>,
    pub links: Vec<LinkFileSpec>,
    pub classes: Vec<ClassFileSpec>,
    pub channels: Vec<ChannelFileSpec>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct LinkFileSpec {
    pub name: String,
    pub from: String,
    pub to: String,
    pub capacity: f64,
    pub cost: f64,
    /// Expand into two directed links (the reverse named `<name>~rev`).
    #[serde(default)]
    pub bidirectional: bool,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ClassFileSpec {
    pub id: u8,
    pub max_delay: f64,
    pub max_loss: f64,
    #[serde(default)]
    pub priority: Option<u8>,
}

#[derive(Debug, Deserialize)]
pub struct ChannelFileSpec {
    pub name: String,
    pub src: String,
    pub dst: String,
    pub class: u8,
    pub demand: f64,
    pub hop_limit: usize,
    #[serde(default = "default_max_paths")]
    pub max_paths: usize,
    #[serde(default)]
    pub start: u64,
    #[serde(default)]
    pub release: Option<u64>,
    pub traffic: TrafficSpec,
}

fn default_max_paths() -> usize {
    8
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficSpec {
    TraceFile { path: String },
    Fgn(FgnFileParams),
    Onoff(OnOffFileParams),
    Cascade(CascadeFileParams),
}

#[derive(Debug, Deserialize)]
pub struct FgnFileParams {
    pub hurst: f64,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
pub struct OnOffFileParams {
    pub n_sources: usize,
    pub pareto_shape: f64,
    pub min_sojourn: u64,
    pub peak_rate: f64,
    pub n: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
pub struct CascadeFileParams {
    pub depth: u32,
    pub multiplier_low: f64,
    pub total_mass: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

// ---------------------------------------------------------------------------
// Assembly

pub fn load_scenario_file(path: &FsPath) -> Result<Scenario, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let base = path.parent().unwrap_or_else(|| FsPath::new("."));
    parse_scenario(&text, base)
}

pub fn parse_scenario(text: &str, base_dir: &FsPath) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text)?;
    build_scenario(file, base_dir)
}

pub fn build_scenario(file: ScenarioFile, base_dir: &FsPath) -> Result<Scenario, ScenarioError> {
    file.simulation
        .validate()
        .map_err(|e| ScenarioError::Invalid(vec![format!("simulation: {e}")]))?;

    // Undirected inputs expand to two directed links.
    let mut links = Vec::with_capacity(file.links.len());
    for l in &file.links {
        links.push(LinkSpec {
            name: l.name.clone(),
            from: l.from.clone(),
            to: l.to.clone(),
            capacity: l.capacity,
            cost: l.cost,
        });
        if l.bidirectional {
            links.push(LinkSpec {
                name: format!("{}~rev", l.name),
                from: l.to.clone(),
                to: l.from.clone(),
                capacity: l.capacity,
                cost: l.cost,
            });
        }
    }
    let topology = Topology::build(&TopologySpec {
        nodes: file.nodes.clone(),
        links,
    })?;

    let mut errors: Vec<String> = Vec::new();

    if file.classes.is_empty() {
        errors.push("classes: at least one service class is required".into());
    }
    if file.classes.len() > 8 {
        errors.push(format!(
            "classes: at most 8 classes are possible, got {}",
            file.classes.len()
        ));
    }
    let mut classes = Vec::new();
    for (i, c) in file.classes.iter().enumerate() {
        if file.classes[..i].iter().any(|prev| prev.id == c.id) {
            errors.push(format!("classes[{i}]: duplicate class id {}", c.id));
        }
        let class = ServiceClass {
            id: c.id,
            max_delay: c.max_delay,
            max_loss: c.max_loss,
            priority: c.priority.unwrap_or(c.id),
        };
        if let Err(e) = class.validate() {
            errors.push(format!("classes[{i}]: {e}"));
        }
        classes.push(class);
    }

    let mut channels = Vec::new();
    for (i, ch) in file.channels.iter().enumerate() {
        if file.channels[..i].iter().any(|prev| prev.name == ch.name) {
            errors.push(format!(
                "channels[{i}].name: duplicate channel '{}'",
                ch.name
            ));
        }
        let src = match topology.node_by_name(&ch.src) {
            Ok(id) => Some(id),
            Err(_) => {
                errors.push(format!("channels[{i}].src: unknown node '{}'", ch.src));
                None
            }
        };
        let dst = match topology.node_by_name(&ch.dst) {
            Ok(id) => Some(id),
            Err(_) => {
                errors.push(format!("channels[{i}].dst: unknown node '{}'", ch.dst));
                None
            }
        };
        if !classes.iter().any(|c| c.id == ch.class) {
            errors.push(format!(
                "channels[{i}].class: unknown class id {}",
                ch.class
            ));
        }
        if let Some(r) = ch.release {
            if r <= ch.start {
                errors.push(format!(
                    "channels[{i}].release: must be after start ({} <= {})",
                    r, ch.start
                ));
            }
        }
        let default_seed = derive_seed(file.simulation.seed, i as u64);
        let trace = match resolve_traffic(&ch.traffic, default_seed, base_dir) {
            Ok(t) => Some(t),
            Err(e) => {
                errors.push(format!("channels[{i}].traffic: {e}"));
                None
            }
        };
        if let (Some(src), Some(dst), Some(trace)) = (src, dst, trace) {
            channels.push(TrafficChannel {
                id: ChannelId(i),
                name: ch.name.clone(),
                src,
                dst,
                class: ch.class,
                demand: ch.demand,
                hop_limit: ch.hop_limit,
                max_paths: ch.max_paths,
                trace: Arc::new(trace),
                start_slot: ch.start,
                release_slot: ch.release,
            });
        }
    }

    if let Some(c0) = file.c0 {
        if !(c0.is_finite() && c0 > 0.0) {
            errors.push(format!("c0: must be positive, got {c0}"));
        }
    }

    if !errors.is_empty() {
        return Err(ScenarioError::Invalid(errors));
    }

    Ok(Scenario {
        topology,
        classes,
        channels,
        config: file.simulation,
        c0_override: file.c0,
    })
}

fn resolve_traffic(
    spec: &TrafficSpec,
    default_seed: u64,
    base_dir: &FsPath,
) -> Result<TraceSeries, ScenarioError> {
    match spec {
        TrafficSpec::TraceFile { path } => {
            let full = base_dir.join(path);
            Ok(TraceSeries::read_file(&full)?)
        }
        TrafficSpec::Fgn(p) => Ok(gen_fgn(&FgnParams {
            hurst: p.hurst,
            mean: p.mean,
            std: p.std,
            n: p.n,
            seed: p.seed.unwrap_or(default_seed),
        })?),
        TrafficSpec::Onoff(p) => Ok(gen_onoff(&OnOffParams {
            n_sources: p.n_sources,
            pareto_shape: p.pareto_shape,
            min_sojourn: p.min_sojourn,
            peak_rate: p.peak_rate,
            n: p.n,
            seed: p.seed.unwrap_or(default_seed),
        })?),
        TrafficSpec::Cascade(p) => Ok(gen_cascade(&CascadeParams {
            depth: p.depth,
            multiplier_low: p.multiplier_low,
            total_mass: p.total_mass,
            seed: p.seed.unwrap_or(default_seed),
        })?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "simulation": {
            "total_slots": 100,
            "estimation_window": 64,
            "update_interval": 64,
            "seed": 1,
            "mode": "static_costs"
        },
        "nodes": [
            {"name": "a", "role": "ler", "service_rate": 10, "buffer_size": 40},
            {"name": "b", "role": "ler", "service_rate": 10, "buffer_size": 40}
        ],
        "links": [
            {"name": "ab", "from": "a", "to": "b", "capacity": 10, "cost": 1.0}
        ],
        "classes": [
            {"id": 0, "max_delay": 10, "max_loss": 0.1}
        ],
        "channels": [
            {"name": "c0", "src": "a", "dst": "b", "class": 0, "demand": 2,
             "hop_limit": 1, "traffic": {"fgn": {"hurst": 0.5, "mean": 2, "std": 0.2, "n": 128}}}
        ]
    }"#;

    #[test]
    fn minimal_scenario_parses() {
        let s = parse_scenario(MINIMAL, FsPath::new(".")).unwrap();
        assert_eq!(s.channels.len(), 1);
        assert_eq!(s.channels[0].trace.len(), 128);
        assert_eq!(s.classes[0].priority, 0);
    }

    #[test]
    fn omitted_channel_seed_is_derived_deterministically() {
        let a = parse_scenario(MINIMAL, FsPath::new(".")).unwrap();
        let b = parse_scenario(MINIMAL, FsPath::new(".")).unwrap();
        assert_eq!(a.channels[0].trace.values(), b.channels[0].trace.values());
    }

    #[test]
    fn unknown_node_is_reported_with_its_path() {
        let bad = MINIMAL.replace("\"src\": \"a\"", "\"src\": \"zz\"");
        let err = parse_scenario(&bad, FsPath::new(".")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("channels[0].src"), "got: {msg}");
    }

    #[test]
    fn bidirectional_links_expand() {
        let two_way = MINIMAL.replace("\"cost\": 1.0}", "\"cost\": 1.0, \"bidirectional\": true}");
        let s = parse_scenario(&two_way, FsPath::new(".")).unwrap();
        assert_eq!(s.topology.links().len(), 2);
        assert_eq!(s.topology.links()[1].name, "ab~rev");
    }

    #[test]
    fn short_estimation_window_is_rejected() {
        let bad = MINIMAL.replace("\"estimation_window\": 64", "\"estimation_window\": 16");
        assert!(parse_scenario(&bad, FsPath::new(".")).is_err());
    }
}
