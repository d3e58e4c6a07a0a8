//! Hop-constrained admissible path enumeration.

use serde::{Deserialize, Serialize};

use crate::error::NetError;
use crate::net::channels::ChannelId;
use crate::net::topology::{LinkId, NodeId, Topology};

/// Identifies one admissible path of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PathKey {
    pub channel: ChannelId,
    pub index: usize,
}

impl PathKey {
    pub fn label(&self) -> String {
        format!("{}/{}", self.channel.0, self.index)
    }
}

/// One loop-free directed path through the topology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub channel: ChannelId,
    pub index: usize,
    pub links: Vec<LinkId>,
}

impl Path {
    pub fn key(&self) -> PathKey {
        PathKey {
            channel: self.channel,
            index: self.index,
        }
    }

    pub fn hops(&self) -> usize {
        self.links.len()
    }

    /// Node sequence from source to destination, one longer than the links.
    pub fn nodes(&self, topo: &Topology) -> Vec<NodeId> {
        let mut seq = Vec::with_capacity(self.links.len() + 1);
        seq.push(topo.link(self.links[0]).from);
        for l in &self.links {
            seq.push(topo.link(*l).to);
        }
        seq
    }
}

/// All simple directed paths from src to dst with at most `hop_limit` links,
/// kept to the `max_paths` cheapest under `link_cost`. Ties break on fewer
/// hops, then on the lexicographic link-name sequence, so enumeration is
/// deterministic.
pub fn enumerate_admissible_paths(
    topo: &Topology,
    src: NodeId,
    dst: NodeId,
    hop_limit: usize,
    max_paths: usize,
    link_cost: &dyn Fn(LinkId) -> f64,
) -> Result<Vec<Vec<LinkId>>, NetError> {
    let mut found: Vec<Vec<LinkId>> = Vec::new();
    let mut stack: Vec<LinkId> = Vec::new();
    let mut visited = vec![false; topo.nodes().len()];
    visited[src.0] = true;
    dfs(
        topo,
        src,
        dst,
        hop_limit,
        &mut stack,
        &mut visited,
        &mut found,
    );
    if found.is_empty() {
        return Err(NetError::NoAdmissiblePath {
            channel: String::new(),
            src: topo.node(src).name.clone(),
            dst: topo.node(dst).name.clone(),
            hop_limit,
        });
    }
    let cost_of = |links: &[LinkId]| links.iter().map(|l| link_cost(*l)).sum::<f64>();
    let name_seq = |links: &[LinkId]| -> Vec<&str> {
        links.iter().map(|l| topo.link(*l).name.as_str()).collect()
    };
    found.sort_by(|a, b| {
        cost_of(a)
            .total_cmp(&cost_of(b))
            .then(a.len().cmp(&b.len()))
            .then_with(|| name_seq(a).cmp(&name_seq(b)))
    });
    found.truncate(max_paths.max(1));
    Ok(found)
}

fn dfs(
    topo: &Topology,
    at: NodeId,
    dst: NodeId,
    budget: usize,
    stack: &mut Vec<LinkId>,
    visited: &mut [bool],
    found: &mut Vec<Vec<LinkId>>,
) {
    if budget == 0 {
        return;
    }
    for &l in topo.out_links(at) {
        let next = topo.link(l).to;
        if next == dst {
            stack.push(l);
            found.push(stack.clone());
            stack.pop();
            continue;
        }
        if visited[next.0] {
            continue;
        }
        visited[next.0] = true;
        stack.push(l);
        dfs(topo, next, dst, budget - 1, stack, visited, found);
        stack.pop();
        visited[next.0] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::topology::{LinkSpec, NodeRole, NodeSpec, TopologySpec};

    fn triangle() -> Topology {
        let node = |name: &str, role| NodeSpec {
            name: name.into(),
            role,
            service_rate: 10.0,
            buffer_size: 10.0,
        };
        let link = |name: &str, from: &str, to: &str, cost: f64| LinkSpec {
            name: name.into(),
            from: from.into(),
            to: to.into(),
            capacity: 10.0,
            cost,
        };
        Topology::build(&TopologySpec {
            nodes: vec![
                node("a", NodeRole::Ler),
                node("b", NodeRole::Ler),
                node("c", NodeRole::Lsr),
            ],
            links: vec![
                link("ab", "a", "b", 3.0),
                link("ac", "a", "c", 1.0),
                link("cb", "c", "b", 1.0),
            ],
        })
        .unwrap()
    }

    /// Independent brute-force path enumerator used as an oracle.
    fn brute_force(topo: &Topology, src: NodeId, dst: NodeId, limit: usize) -> Vec<Vec<LinkId>> {
        fn expand(
            topo: &Topology,
            prefix: Vec<LinkId>,
            at: NodeId,
            seen: Vec<NodeId>,
            dst: NodeId,
            limit: usize,
            out: &mut Vec<Vec<LinkId>>,
        ) {
            if at == dst && !prefix.is_empty() {
                out.push(prefix);
                return;
            }
            if prefix.len() >= limit {
                return;
            }
            for l in topo.links() {
                if l.from == at && !seen.contains(&l.to) {
                    let mut p = prefix.clone();
                    p.push(l.id);
                    let mut s = seen.clone();
                    s.push(l.to);
                    expand(topo, p, l.to, s, dst, limit, out);
                }
            }
        }
        let mut out = Vec::new();
        expand(topo, Vec::new(), src, vec![src], dst, limit, &mut out);
        out
    }

    #[test]
    fn triangle_has_direct_and_relayed_paths() {
        let t = triangle();
        let (a, b) = (t.node_by_name("a").unwrap(), t.node_by_name("b").unwrap());
        let base = |l: LinkId| t.link(l).base_cost;
        let paths = enumerate_admissible_paths(&t, a, b, 2, 8, &base).unwrap();
        assert_eq!(paths.len(), 2);
        // relay a->c->b costs 2, direct a->b costs 3
        assert_eq!(paths[0], vec![LinkId(1), LinkId(2)]);
        assert_eq!(paths[1], vec![LinkId(0)]);

        let mut oracle = brute_force(&t, a, b, 2);
        oracle.sort();
        let mut got = paths.clone();
        got.sort();
        assert_eq!(got, oracle);
    }

    #[test]
    fn hop_limit_excludes_the_relay() {
        let t = triangle();
        let (a, b) = (t.node_by_name("a").unwrap(), t.node_by_name("b").unwrap());
        let base = |l: LinkId| t.link(l).base_cost;
        let paths = enumerate_admissible_paths(&t, a, b, 1, 8, &base).unwrap();
        assert_eq!(paths, vec![vec![LinkId(0)]]);
    }

    #[test]
    fn disconnected_pair_is_infeasible() {
        let t = triangle();
        let (b, a) = (t.node_by_name("b").unwrap(), t.node_by_name("a").unwrap());
        let base = |l: LinkId| t.link(l).base_cost;
        // links are directed; nothing leaves b
        assert!(enumerate_admissible_paths(&t, b, a, 4, 8, &base).is_err());
    }

    #[test]
    fn truncation_keeps_the_cheapest() {
        let t = triangle();
        let (a, b) = (t.node_by_name("a").unwrap(), t.node_by_name("b").unwrap());
        let base = |l: LinkId| t.link(l).base_cost;
        let paths = enumerate_admissible_paths(&t, a, b, 2, 1, &base).unwrap();
        assert_eq!(paths, vec![vec![LinkId(1), LinkId(2)]]);
    }

    #[test]
    fn matches_oracle_on_random_graphs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..25 {
            let n_nodes = rng.gen_range(3..=6);
            let node = |i: usize, role| NodeSpec {
                name: format!("n{i}"),
                role,
                service_rate: 1.0,
                buffer_size: 1.0,
            };
            let mut nodes = vec![node(0, NodeRole::Ler), node(1, NodeRole::Ler)];
            for i in 2..n_nodes {
                nodes.push(node(i, NodeRole::Lsr));
            }
            let mut links = Vec::new();
            for from in 0..n_nodes {
                for to in 0..n_nodes {
                    if from != to && rng.gen_bool(0.5) {
                        links.push(LinkSpec {
                            name: format!("l{from}-{to}"),
                            from: format!("n{from}"),
                            to: format!("n{to}"),
                            capacity: 1.0,
                            cost: rng.gen_range(1..10) as f64,
                        });
                    }
                }
            }
            let Ok(topo) = Topology::build(&TopologySpec { nodes, links }) else {
                continue;
            };
            let (src, dst) = (NodeId(0), NodeId(1));
            let limit = rng.gen_range(1..=4);
            let base = |l: LinkId| topo.link(l).base_cost;
            let mut oracle = brute_force(&topo, src, dst, limit);
            oracle.sort();
            match enumerate_admissible_paths(&topo, src, dst, limit, usize::MAX, &base) {
                Ok(mut got) => {
                    got.sort();
                    assert_eq!(got, oracle);
                }
                Err(_) => assert!(oracle.is_empty()),
            }
        }
    }
}
