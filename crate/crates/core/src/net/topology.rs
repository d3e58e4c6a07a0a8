//! Graph of routers and directed communication links.
//!
//! Every node is exactly one of edge router (LER) or core switching router
//! (LSR); the two sets partition the node set. Edge routers originate and
//! terminate traffic, core routers only forward.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::NetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    /// Label edge router: classifies traffic and selects paths; the only
    /// legal source or destination of a channel.
    Ler,
    /// Label switching router: core forwarding only.
    Lsr,
}

/// Raw node description as it appears in a scenario file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    pub role: NodeRole,
    /// Units the node can forward per slot.
    pub service_rate: f64,
    /// Queue capacity per class queue, in units.
    pub buffer_size: f64,
}

/// Raw directed link description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkSpec {
    pub name: String,
    pub from: String,
    pub to: String,
    /// Units per slot the link can be planned to carry.
    pub capacity: f64,
    /// Base routing cost, positive.
    pub cost: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TopologySpec {
    pub nodes: Vec<NodeSpec>,
    pub links: Vec<LinkSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateNode(String),
    /// The same node name declared with both roles; the role sets must
    /// partition the node set.
    RoleConflict(String),
    DuplicateLink(String),
    UnknownEndpoint {
        link: String,
        node: String,
    },
    SelfLoop(String),
    NonPositiveCapacity(String),
    NonPositiveCost(String),
    NonPositiveServiceRate(String),
    NonPositiveBuffer(String),
    TooFewEdgeRouters(usize),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateNode(n) => write!(f, "node '{n}' declared more than once"),
            Violation::RoleConflict(n) => write!(
                f,
                "node '{n}' declared as both edge and core router; roles must partition the nodes"
            ),
            Violation::DuplicateLink(l) => write!(f, "link '{l}' declared more than once"),
            Violation::UnknownEndpoint { link, node } => {
                write!(f, "link '{link}' references unknown node '{node}'")
            }
            Violation::SelfLoop(l) => write!(f, "link '{l}' is a self-loop"),
            Violation::NonPositiveCapacity(l) => write!(f, "link '{l}' capacity must be positive"),
            Violation::NonPositiveCost(l) => write!(f, "link '{l}' cost must be positive"),
            Violation::NonPositiveServiceRate(n) => {
                write!(f, "node '{n}' service_rate must be positive")
            }
            Violation::NonPositiveBuffer(n) => write!(f, "node '{n}' buffer_size must be positive"),
            Violation::TooFewEdgeRouters(c) => {
                write!(f, "need at least 2 edge routers, found {c}")
            }
        }
    }
}

/// Check a raw topology description. An empty report means valid.
pub fn validate_topology(spec: &TopologySpec) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut roles: BTreeMap<&str, NodeRole> = BTreeMap::new();
    for n in &spec.nodes {
        match roles.get(n.name.as_str()) {
            Some(prev) if *prev != n.role => {
                violations.push(Violation::RoleConflict(n.name.clone()))
            }
            Some(_) => violations.push(Violation::DuplicateNode(n.name.clone())),
            None => {
                roles.insert(&n.name, n.role);
            }
        }
        if !(n.service_rate.is_finite() && n.service_rate > 0.0) {
            violations.push(Violation::NonPositiveServiceRate(n.name.clone()));
        }
        if !(n.buffer_size.is_finite() && n.buffer_size > 0.0) {
            violations.push(Violation::NonPositiveBuffer(n.name.clone()));
        }
    }
    let ler_count = spec
        .nodes
        .iter()
        .filter(|n| n.role == NodeRole::Ler)
        .count();
    if ler_count < 2 {
        violations.push(Violation::TooFewEdgeRouters(ler_count));
    }
    let mut link_names = BTreeMap::new();
    for l in &spec.links {
        if link_names.insert(l.name.as_str(), ()).is_some() {
            violations.push(Violation::DuplicateLink(l.name.clone()));
        }
        for endpoint in [&l.from, &l.to] {
            if !roles.contains_key(endpoint.as_str()) {
                violations.push(Violation::UnknownEndpoint {
                    link: l.name.clone(),
                    node: endpoint.clone(),
                });
            }
        }
        if l.from == l.to {
            violations.push(Violation::SelfLoop(l.name.clone()));
        }
        if !(l.capacity.is_finite() && l.capacity > 0.0) {
            violations.push(Violation::NonPositiveCapacity(l.name.clone()));
        }
        if !(l.cost.is_finite() && l.cost > 0.0) {
            violations.push(Violation::NonPositiveCost(l.name.clone()));
        }
    }
    violations
}

#[derive(Debug, Clone)]
pub struct Node {
    pub id: NodeId,
    pub name: String,
    pub role: NodeRole,
    pub service_rate: f64,
    pub buffer_size: f64,
}

#[derive(Debug, Clone)]
pub struct Link {
    pub id: LinkId,
    pub name: String,
    pub from: NodeId,
    pub to: NodeId,
    pub capacity: f64,
    pub base_cost: f64,
}

/// Validated, index-addressed network graph. Immutable once built.
#[derive(Debug, Clone)]
pub struct Topology {
    nodes: Vec<Node>,
    links: Vec<Link>,
    node_names: BTreeMap<String, NodeId>,
    out_links: Vec<Vec<LinkId>>,
}

impl Topology {
    pub fn build(spec: &TopologySpec) -> Result<Self, NetError> {
        let violations = validate_topology(spec);
        if !violations.is_empty() {
            return Err(NetError::InvalidTopology(
                violations.iter().map(|v| v.to_string()).collect(),
            ));
        }
        let mut node_names = BTreeMap::new();
        let nodes: Vec<Node> = spec
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                node_names.insert(n.name.clone(), NodeId(i));
                Node {
                    id: NodeId(i),
                    name: n.name.clone(),
                    role: n.role,
                    service_rate: n.service_rate,
                    buffer_size: n.buffer_size,
                }
            })
            .collect();
        let mut out_links = vec![Vec::new(); nodes.len()];
        let links: Vec<Link> = spec
            .links
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let from = node_names[&l.from];
                let to = node_names[&l.to];
                out_links[from.0].push(LinkId(i));
                Link {
                    id: LinkId(i),
                    name: l.name.clone(),
                    from,
                    to,
                    capacity: l.capacity,
                    base_cost: l.cost,
                }
            })
            .collect();
        Ok(Self {
            nodes,
            links,
            node_names,
            out_links,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0]
    }

    pub fn node_by_name(&self, name: &str) -> Result<NodeId, NetError> {
        self.node_names
            .get(name)
            .copied()
            .ok_or_else(|| NetError::UnknownNode(name.to_string()))
    }

    pub fn out_links(&self, node: NodeId) -> &[LinkId] {
        &self.out_links[node.0]
    }
}

/// One of up to eight differentiated service classes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ServiceClass {
    /// Class identifier, 0..=7.
    pub id: u8,
    /// Maximum allowable end-to-end delay in slots.
    pub max_delay: f64,
    /// Maximum permissible loss fraction, in (0, 1).
    pub max_loss: f64,
    /// Scheduling rank; lower is served first. Defaults to the class id.
    pub priority: u8,
}

impl ServiceClass {
    pub fn validate(&self) -> Result<(), String> {
        if self.id > 7 {
            return Err(format!("class id must be 0..=7, got {}", self.id));
        }
        if !(self.max_delay.is_finite() && self.max_delay > 0.0) {
            return Err(format!("class {}: max_delay must be positive", self.id));
        }
        if !(self.max_loss > 0.0 && self.max_loss < 1.0) {
            return Err(format!("class {}: max_loss must be in (0, 1)", self.id));
        }
        Ok(())
    }
}
