//! Traffic channels, admission and release bookkeeping.
//!
//! A channel is a source-to-destination bandwidth demand of one service
//! class, carried by an arrival trace, restricted to a hop-limited set of
//! admissible paths, and alive on a slot interval. Admission materializes
//! the path set; release strips the channel's planned rates from all link
//! residuals and freezes it.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::NetError;
use crate::net::paths::{enumerate_admissible_paths, Path, PathKey};
use crate::net::topology::{LinkId, NodeId, NodeRole, Topology};
use crate::trace::TraceSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChannelId(pub usize);

#[derive(Debug, Clone)]
pub struct TrafficChannel {
    pub id: ChannelId,
    pub name: String,
    pub src: NodeId,
    pub dst: NodeId,
    /// Service class id.
    pub class: u8,
    /// Required bandwidth in units/slot; the planning quantity.
    pub demand: f64,
    /// Maximum links per admissible path.
    pub hop_limit: usize,
    /// Cap on the admissible path set, cheapest-first.
    pub max_paths: usize,
    /// Arrival intensities; indexed from the channel's start slot and cycled
    /// when shorter than the active interval.
    pub trace: Arc<TraceSeries>,
    pub start_slot: u64,
    /// Open-ended when `None`.
    pub release_slot: Option<u64>,
}

impl TrafficChannel {
    /// Intensity offered at absolute slot `t`; zero outside the lifetime.
    pub fn intensity_at(&self, t: u64) -> f64 {
        if t < self.start_slot {
            return 0.0;
        }
        if let Some(r) = self.release_slot {
            if t >= r {
                return 0.0;
            }
        }
        let idx = ((t - self.start_slot) % self.trace.len() as u64) as usize;
        self.trace.values()[idx]
    }

    pub fn active_at(&self, t: u64) -> bool {
        t >= self.start_slot && self.release_slot.is_none_or(|r| t < r)
    }
}

/// Resource-release notification: traffic admitted at `admitted_at` stopped
/// flowing at `released_at`.
#[derive(Debug, Clone, Copy)]
pub struct ReleaseEvent {
    pub channel: ChannelId,
    pub admitted_at: u64,
    pub released_at: u64,
}

#[derive(Debug, Clone)]
pub struct AdmittedChannel {
    pub channel: TrafficChannel,
    pub paths: Vec<Path>,
    pub released_at: Option<u64>,
}

impl AdmittedChannel {
    pub fn is_released(&self) -> bool {
        self.released_at.is_some()
    }
}

/// Single-owner mutable registry of admitted channels plus the planned path
/// rates currently in force. Link residuals are derived, never stored, so
/// reservation conservation holds by construction.
#[derive(Debug, Clone, Default)]
pub struct NetworkState {
    channels: BTreeMap<ChannelId, AdmittedChannel>,
    /// Planned rate per (channel, path), units/slot.
    rates: BTreeMap<PathKey, f64>,
}

impl NetworkState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Validate and register a channel, materializing its admissible paths
    /// under `link_cost`. Only edge routers may source or sink traffic.
    pub fn admit_channel(
        &mut self,
        topo: &Topology,
        channel: TrafficChannel,
        link_cost: &dyn Fn(LinkId) -> f64,
    ) -> Result<ChannelId, NetError> {
        let name = channel.name.clone();
        let bad = |reason: &str| NetError::BadChannel {
            channel: name.clone(),
            reason: reason.to_string(),
        };
        if channel.src == channel.dst {
            return Err(bad("source and destination must differ"));
        }
        if topo.node(channel.src).role != NodeRole::Ler {
            return Err(bad("source must be an edge router"));
        }
        if topo.node(channel.dst).role != NodeRole::Ler {
            return Err(bad("destination must be an edge router"));
        }
        if !(channel.demand.is_finite() && channel.demand > 0.0) {
            return Err(bad("demand must be positive"));
        }
        if channel.hop_limit == 0 {
            return Err(bad("hop_limit must be at least 1"));
        }
        if let Some(r) = channel.release_slot {
            if r <= channel.start_slot {
                return Err(NetError::BadReleaseSlot {
                    admitted: channel.start_slot,
                    released: r,
                });
            }
        }
        if self.channels.contains_key(&channel.id) {
            return Err(bad("channel id already admitted"));
        }
        let link_seqs = enumerate_admissible_paths(
            topo,
            channel.src,
            channel.dst,
            channel.hop_limit,
            channel.max_paths,
            link_cost,
        )
        .map_err(|e| match e {
            NetError::NoAdmissiblePath {
                src,
                dst,
                hop_limit,
                ..
            } => NetError::NoAdmissiblePath {
                channel: name.clone(),
                src,
                dst,
                hop_limit,
            },
            other => other,
        })?;
        let paths = link_seqs
            .into_iter()
            .enumerate()
            .map(|(index, links)| Path {
                channel: channel.id,
                index,
                links,
            })
            .collect();
        let id = channel.id;
        self.channels.insert(
            id,
            AdmittedChannel {
                channel,
                paths,
                released_at: None,
            },
        );
        Ok(id)
    }

    /// Tear the channel down: drop its planned rates (restoring residuals)
    /// and mark it released.
    pub fn release_channel(&mut self, event: ReleaseEvent) -> Result<(), NetError> {
        if event.released_at <= event.admitted_at {
            return Err(NetError::BadReleaseSlot {
                admitted: event.admitted_at,
                released: event.released_at,
            });
        }
        let adm = self
            .channels
            .get_mut(&event.channel)
            .ok_or_else(|| NetError::UnknownChannel(format!("#{}", event.channel.0)))?;
        if adm.released_at.is_some() {
            return Err(NetError::AlreadyReleased(adm.channel.name.clone()));
        }
        adm.released_at = Some(event.released_at);
        self.rates.retain(|k, _| k.channel != event.channel);
        Ok(())
    }

    /// Replace the planned rates in force. Rates for released or unknown
    /// channels are rejected by debug assertion; callers recompute the
    /// assignment from the active set.
    pub fn set_path_rates(&mut self, rates: BTreeMap<PathKey, f64>) {
        debug_assert!(rates.keys().all(|k| self
            .channels
            .get(&k.channel)
            .is_some_and(|a| !a.is_released())));
        self.rates = rates;
    }

    pub fn path_rates(&self) -> &BTreeMap<PathKey, f64> {
        &self.rates
    }

    /// Planned load on a link: sum of rates over paths crossing it.
    pub fn link_load(&self, link: LinkId) -> f64 {
        self.rates
            .iter()
            .filter_map(|(key, rate)| {
                let adm = self.channels.get(&key.channel)?;
                adm.paths[key.index].links.contains(&link).then_some(*rate)
            })
            .sum()
    }

    /// Unreserved capacity of a link under the rates in force.
    pub fn residual(&self, topo: &Topology, link: LinkId) -> f64 {
        topo.link(link).capacity - self.link_load(link)
    }

    pub fn get(&self, id: ChannelId) -> Option<&AdmittedChannel> {
        self.channels.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ChannelId, &AdmittedChannel)> {
        self.channels.iter()
    }

    /// Channels alive at slot `t` (admitted, started, not yet released).
    pub fn active_at(&self, t: u64) -> impl Iterator<Item = &AdmittedChannel> {
        self.channels
            .values()
            .filter(move |a| a.released_at.is_none() && a.channel.active_at(t))
    }
}
