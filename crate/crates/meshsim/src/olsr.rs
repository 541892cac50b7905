//! Simplified OLSR: periodic HELLOs with link-state tracking and MPR
//! signaling, TC flooding through multipoint relays, and per-node
//! shortest-path route computation over symmetric links plus advertised
//! topology.
//!
//! No HNA/MID, hysteresis or link-quality extension; TC messages advertise
//! the originator's MPR-selector set, RFC-style.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::engine::SimTime;
use crate::radio::NodeId;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OlsrConfig {
    pub t_hello: f64,
    pub t_tc: f64,
    /// Neighbor and topology entries expire this long after last refresh.
    pub hold_time: f64,
}

impl Default for OlsrConfig {
    fn default() -> Self {
        // 1 s update interval as configured in the evaluated scenarios;
        // hold time is three intervals.
        OlsrConfig { t_hello: 1.0, t_tc: 1.0, hold_time: 3.0 }
    }
}

impl OlsrConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.t_hello <= 0.0 || self.t_tc <= 0.0 || self.hold_time <= 0.0 {
            return Err("olsr timers must be positive".into());
        }
        if self.hold_time < 3.0 * self.t_hello {
            return Err("hold_time must be at least 3 * t_hello".into());
        }
        Ok(())
    }
}

/// HELLO size: 24-byte base plus 8 bytes per listed neighbor.
pub fn hello_size_bytes(n_neighbors: usize) -> u32 {
    24 + 8 * n_neighbors as u32
}

/// TC size: 20-byte base plus 4 bytes per advertised selector.
pub fn tc_size_bytes(n_selectors: usize) -> u32 {
    20 + 4 * n_selectors as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkStatus {
    Asym,
    Sym,
}

#[derive(Debug, Clone)]
pub struct NeighborEntry {
    pub status: LinkStatus,
    pub last_heard: SimTime,
    /// We picked this neighbor as one of our MPRs.
    pub is_mpr: bool,
    /// This neighbor picked us as one of its MPRs (we are in its selector set).
    pub selected_me_as_mpr: bool,
}

/// One advertised HELLO line: neighbor, our view of the link, MPR flag.
#[derive(Debug, Clone)]
pub struct HelloNeighbor {
    pub id: NodeId,
    pub status: LinkStatus,
    pub chosen_as_mpr: bool,
}

#[derive(Debug, Clone)]
pub struct HelloPayload {
    pub neighbors: Vec<HelloNeighbor>,
}

#[derive(Debug, Clone)]
pub struct TcPayload {
    pub advertiser: NodeId,
    pub seq: u32,
    pub selectors: Vec<NodeId>,
    /// Previous hop, rewritten on each re-broadcast.
    pub sender: NodeId,
}

#[derive(Debug, Clone)]
struct TopoRecord {
    seq: u32,
    selectors: BTreeSet<NodeId>,
    expires: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Route {
    pub next_hop: NodeId,
    pub hops: u32,
}

#[derive(Debug)]
pub struct OlsrState {
    pub node: NodeId,
    cfg: OlsrConfig,
    neighbors: BTreeMap<NodeId, NeighborEntry>,
    /// neighbor -> that neighbor's symmetric neighbors (from its HELLOs).
    two_hop: BTreeMap<NodeId, BTreeSet<NodeId>>,
    mprs: BTreeSet<NodeId>,
    topology: BTreeMap<NodeId, TopoRecord>,
    tc_seen: BTreeSet<(NodeId, u32)>,
    tc_seq: u32,
    table: BTreeMap<NodeId, Route>,
}

/// Greedy multipoint-relay selection.
///
/// Covers every strict two-hop neighbor with a subset of the one-hop set,
/// repeatedly picking the neighbor covering the most uncovered two-hop
/// nodes; ties go to the lowest node id.
pub fn select_mprs(
    one_hop: &BTreeSet<NodeId>,
    two_hop_map: &BTreeMap<NodeId, BTreeSet<NodeId>>,
) -> BTreeSet<NodeId> {
    let mut uncovered: BTreeSet<NodeId> = two_hop_map
        .values()
        .flatten()
        .copied()
        .filter(|n| !one_hop.contains(n))
        .collect();
    let mut mprs = BTreeSet::new();
    while !uncovered.is_empty() {
        let best = one_hop
            .iter()
            .filter(|n| !mprs.contains(*n))
            .map(|n| {
                let cover = two_hop_map
                    .get(n)
                    .map(|s| s.intersection(&uncovered).count())
                    .unwrap_or(0);
                (cover, *n)
            })
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
            .filter(|(cover, _)| *cover > 0);
        match best {
            Some((_, n)) => {
                if let Some(covered) = two_hop_map.get(&n) {
                    for c in covered {
                        uncovered.remove(c);
                    }
                }
                mprs.insert(n);
            }
            None => break, // remaining two-hop nodes unreachable via one-hop set
        }
    }
    mprs
}

impl OlsrState {
    pub fn new(node: NodeId, cfg: OlsrConfig) -> Self {
        OlsrState {
            node,
            cfg,
            neighbors: BTreeMap::new(),
            two_hop: BTreeMap::new(),
            mprs: BTreeSet::new(),
            topology: BTreeMap::new(),
            tc_seen: BTreeSet::new(),
            tc_seq: 0,
            table: BTreeMap::new(),
        }
    }

    fn expire(&mut self, now: SimTime) {
        let hold = self.cfg.hold_time;
        let expired: Vec<NodeId> = self
            .neighbors
            .iter()
            .filter(|(_, e)| now.secs() - e.last_heard.secs() > hold)
            .map(|(id, _)| *id)
            .collect();
        for id in expired {
            self.neighbors.remove(&id);
            self.two_hop.remove(&id);
        }
        self.topology.retain(|_, rec| rec.expires > now);
    }

    fn sym_neighbors(&self) -> BTreeSet<NodeId> {
        self.neighbors
            .iter()
            .filter(|(_, e)| e.status == LinkStatus::Sym)
            .map(|(id, _)| *id)
            .collect()
    }

    /// Periodic HELLO: refresh MPR selection and emit the neighbor list.
    pub fn on_hello_tick(&mut self, now: SimTime) -> HelloPayload {
        self.expire(now);
        self.recompute_mprs();
        let neighbors = self
            .neighbors
            .iter()
            .map(|(id, e)| HelloNeighbor {
                id: *id,
                status: e.status,
                chosen_as_mpr: self.mprs.contains(id),
            })
            .collect();
        HelloPayload { neighbors }
    }

    fn recompute_mprs(&mut self) {
        let one_hop = self.sym_neighbors();
        // strict two-hop view: drop self and one-hop members
        let mut two_hop = BTreeMap::new();
        for (nbr, set) in &self.two_hop {
            if !one_hop.contains(nbr) {
                continue;
            }
            let strict: BTreeSet<NodeId> = set
                .iter()
                .copied()
                .filter(|n| *n != self.node && !one_hop.contains(n))
                .collect();
            two_hop.insert(*nbr, strict);
        }
        self.mprs = select_mprs(&one_hop, &two_hop);
        for (id, e) in self.neighbors.iter_mut() {
            e.is_mpr = self.mprs.contains(id);
        }
    }

    /// Process a HELLO heard from `from`. Hearing it makes the link at
    /// least ASYM; being listed in it confirms bidirectionality (SYM).
    pub fn process_hello(&mut self, from: NodeId, payload: &HelloPayload, now: SimTime) {
        let lists_me = payload.neighbors.iter().any(|n| n.id == self.node);
        let selected_me = payload
            .neighbors
            .iter()
            .any(|n| n.id == self.node && n.chosen_as_mpr);
        let e = self.neighbors.entry(from).or_insert(NeighborEntry {
            status: LinkStatus::Asym,
            last_heard: now,
            is_mpr: false,
            selected_me_as_mpr: false,
        });
        e.last_heard = now;
        if lists_me {
            e.status = LinkStatus::Sym;
        }
        e.selected_me_as_mpr = selected_me;
        let sym_of_from: BTreeSet<NodeId> = payload
            .neighbors
            .iter()
            .filter(|n| n.status == LinkStatus::Sym && n.id != self.node)
            .map(|n| n.id)
            .collect();
        self.two_hop.insert(from, sym_of_from);
    }

    /// Nodes someone selected as MPR advertise their selector set.
    pub fn mpr_selector_set(&self) -> BTreeSet<NodeId> {
        self.neighbors
            .iter()
            .filter(|(_, e)| e.selected_me_as_mpr && e.status == LinkStatus::Sym)
            .map(|(id, _)| *id)
            .collect()
    }

    /// Periodic TC origination; `None` when nobody selected us as MPR.
    pub fn on_tc_tick(&mut self, now: SimTime) -> Option<TcPayload> {
        self.expire(now);
        let selectors = self.mpr_selector_set();
        if selectors.is_empty() {
            return None;
        }
        let seq = self.tc_seq;
        self.tc_seq += 1;
        Some(TcPayload {
            advertiser: self.node,
            seq,
            selectors: selectors.into_iter().collect(),
            sender: self.node,
        })
    }

    /// Merge a TC and decide whether to re-flood it.
    ///
    /// Forwarded only when the previous hop selected us as MPR and this
    /// `(advertiser, seq)` was not seen before; duplicates are dropped.
    pub fn process_tc(&mut self, tc: &TcPayload, now: SimTime) -> bool {
        if tc.advertiser == self.node {
            return false;
        }
        if !self.tc_seen.insert((tc.advertiser, tc.seq)) {
            return false; // duplicate
        }
        // keep the dedup set bounded: drop entries older than the window
        if self.tc_seen.len() > 4096 {
            let keep: BTreeSet<_> = self
                .tc_seen
                .iter()
                .copied()
                .filter(|(adv, seq)| {
                    self.topology
                        .get(adv)
                        .map(|r| seq + 64 >= r.seq)
                        .unwrap_or(true)
                })
                .collect();
            self.tc_seen = keep;
        }
        let expires = now.after(3.0 * self.cfg.t_tc);
        let newer = self
            .topology
            .get(&tc.advertiser)
            .map(|rec| tc.seq >= rec.seq)
            .unwrap_or(true);
        if newer {
            self.topology.insert(
                tc.advertiser,
                TopoRecord {
                    seq: tc.seq,
                    selectors: tc.selectors.iter().copied().collect(),
                    expires,
                },
            );
        }
        // forward iff the previous hop selected us as MPR
        self.neighbors
            .get(&tc.sender)
            .map(|e| e.selected_me_as_mpr && e.status == LinkStatus::Sym)
            .unwrap_or(false)
    }

    /// Shortest hop-count paths over the union of our symmetric links and
    /// advertised (advertiser, selector) topology edges. Ties prefer the
    /// lowest next-hop id.
    pub fn compute_routes(&mut self, now: SimTime) {
        self.expire(now);
        let mut adj: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        let mut add_edge = |a: NodeId, b: NodeId| {
            adj.entry(a).or_default().insert(b);
            adj.entry(b).or_default().insert(a);
        };
        for n in self.sym_neighbors() {
            add_edge(self.node, n);
        }
        for (adv, rec) in &self.topology {
            for sel in &rec.selectors {
                add_edge(*adv, *sel);
            }
        }

        let mut table = BTreeMap::new();
        // BFS from self; first_hop[n] = minimal first hop among shortest paths
        let mut dist: BTreeMap<NodeId, u32> = BTreeMap::new();
        let mut first_hop: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        dist.insert(self.node, 0);
        let mut frontier = vec![self.node];
        let mut d = 0u32;
        while !frontier.is_empty() {
            d += 1;
            let mut next_frontier: BTreeSet<NodeId> = BTreeSet::new();
            for u in &frontier {
                if let Some(nbrs) = adj.get(u) {
                    for v in nbrs {
                        if !dist.contains_key(v) {
                            next_frontier.insert(*v);
                        }
                    }
                }
            }
            for v in &next_frontier {
                dist.insert(*v, d);
                // candidate predecessors at distance d-1, adjacent to v
                let fh = adj
                    .get(v)
                    .map(|nbrs| {
                        nbrs.iter()
                            .filter(|p| dist.get(p) == Some(&(d - 1)))
                            .map(|p| {
                                if *p == self.node {
                                    *v // direct neighbor: first hop is itself
                                } else {
                                    first_hop[p]
                                }
                            })
                            .min()
                    })
                    .unwrap_or(None);
                if let Some(fh) = fh {
                    first_hop.insert(*v, fh);
                    table.insert(*v, Route { next_hop: fh, hops: d });
                }
            }
            frontier = next_frontier.into_iter().collect();
        }
        self.table = table;
    }

    pub fn route_to(&self, dst: NodeId) -> Option<Route> {
        self.table.get(&dst).copied()
    }

    pub fn routing_table(&self) -> &BTreeMap<NodeId, Route> {
        &self.table
    }

    pub fn mpr_set(&self) -> &BTreeSet<NodeId> {
        &self.mprs
    }

    pub fn neighbor_status(&self, id: NodeId) -> Option<LinkStatus> {
        self.neighbors.get(&id).map(|e| e.status)
    }

    pub fn topology_edges(&self) -> BTreeSet<(NodeId, NodeId)> {
        let mut edges = BTreeSet::new();
        for (adv, rec) in &self.topology {
            for sel in &rec.selectors {
                let (a, b) = if adv < sel { (*adv, *sel) } else { (*sel, *adv) };
                edges.insert((a, b));
            }
        }
        edges
    }

    /// Snapshot for convergence detection: destination -> (next hop, hops).
    pub fn table_snapshot(&self) -> Vec<(NodeId, NodeId, u32)> {
        self.table
            .iter()
            .map(|(d, r)| (*d, r.next_hop, r.hops))
            .collect()
    }

    /// Inject converged state directly (test support): symmetric links and
    /// full topology knowledge of `edges`.
    pub fn seed_full_topology(
        &mut self,
        my_links: &BTreeSet<NodeId>,
        edges: &BTreeSet<(NodeId, NodeId)>,
        now: SimTime,
    ) {
        for n in my_links {
            self.neighbors.insert(
                *n,
                NeighborEntry {
                    status: LinkStatus::Sym,
                    last_heard: now,
                    is_mpr: false,
                    selected_me_as_mpr: false,
                },
            );
        }
        for (a, b) in edges {
            self.topology
                .entry(*a)
                .or_insert_with(|| TopoRecord {
                    seq: 0,
                    selectors: BTreeSet::new(),
                    expires: now.after(1e9),
                })
                .selectors
                .insert(*b);
        }
    }
}
