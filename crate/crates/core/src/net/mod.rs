//! Network model: routers with edge/core roles, directed links with capacity
//! and base cost, service classes with QoS bounds, and traffic channels with
//! hop-constrained admissible path sets.

mod channels;
mod paths;
mod topology;

pub use channels::{AdmittedChannel, ChannelId, NetworkState, ReleaseEvent, TrafficChannel};
pub use paths::{enumerate_admissible_paths, Path, PathKey};
pub use topology::{
    validate_topology, Link, LinkId, LinkSpec, Node, NodeId, NodeRole, NodeSpec, ServiceClass,
    Topology, TopologySpec, Violation,
};
