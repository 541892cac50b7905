//! OpenWiMesh-style SDN plane.
//!
//! Every node runs a graph client that reports its wireless neighborhood
//! to a central controller over a controller-rooted spanning tree. The
//! controller keeps the network graph, answers Packet-In requests with
//! hop-count flow installs, answers ARP at the origin (no mesh-wide
//! broadcast), and on disassociation of an in-use edge repairs inbound
//! routes (new flow entries) plus outbound routes (gratuitous ARP to the
//! mobile node).
//!
//! The path strategy is pluggable; hop count (HC) is the one that ships,
//! the residual-bandwidth strategies are declared but unimplemented.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::SimTime;
use crate::radio::NodeId;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SdnConfig {
    pub report_interval: f64,
    /// Reports from a node older than this many intervals drop its edges.
    pub stale_report_intervals: u32,
    pub report_base_bytes: u32,
    pub report_per_neighbor_bytes: u32,
    pub packet_in_bytes: u32,
    pub flow_mod_bytes: u32,
    pub arp_bytes: u32,
    /// Controller service time per Packet-In; stand-in for the framework's
    /// request handling latency on real hardware.
    pub controller_service_time: f64,
    /// Packets buffered at a node awaiting flow installation expire after
    /// this long.
    pub ingress_buffer_timeout: f64,
    /// When false, the mobility extension is disabled: disassociations do
    /// not trigger re-routing; repair happens only after the reconnect
    /// timeout (pre-extension behavior).
    pub mobility_extension: bool,
    /// Repair delay of the no-extension baseline.
    pub reconnect_timeout: f64,
}

impl Default for SdnConfig {
    fn default() -> Self {
        SdnConfig {
            report_interval: 1.0,
            stale_report_intervals: 2,
            report_base_bytes: 20,
            report_per_neighbor_bytes: 10,
            packet_in_bytes: 60,
            flow_mod_bytes: 80,
            arp_bytes: 28,
            controller_service_time: 0.08,
            ingress_buffer_timeout: 3.0,
            mobility_extension: true,
            reconnect_timeout: 30.0,
        }
    }
}

impl SdnConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.report_interval <= 0.0 {
            return Err("report_interval must be positive".into());
        }
        if self.stale_report_intervals == 0 {
            return Err("stale_report_intervals must be >= 1".into());
        }
        if self.ingress_buffer_timeout <= 0.0 {
            return Err("ingress_buffer_timeout must be positive".into());
        }
        Ok(())
    }

    pub fn report_size(&self, n_neighbors: usize) -> u32 {
        self.report_base_bytes + self.report_per_neighbor_bytes * n_neighbors as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Backbone,
    Client,
    Controller,
}

#[derive(Debug, Error, PartialEq)]
pub enum SdnError {
    #[error("destination {0} not in network graph")]
    UnknownDestination(NodeId),
    #[error("no path from {0} to {1}")]
    NoPath(NodeId, NodeId),
}

/// Neighborhood observation sent by a graph client.
#[derive(Debug, Clone)]
pub struct NeighborReport {
    pub reporter: NodeId,
    /// (neighbor, received signal dBm); never contains the reporter.
    pub observed: Vec<(NodeId, f64)>,
    pub at: SimTime,
}

#[derive(Debug, Clone, Copy)]
pub struct EdgeInfo {
    pub last_confirmed: SimTime,
    pub signal_dbm: f64,
}

fn canon(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a < b { (a, b) } else { (b, a) }
}

/// Controller-side view of the mesh, built purely from reports.
#[derive(Debug, Default)]
pub struct NetworkGraph {
    roles: BTreeMap<NodeId, NodeRole>,
    edges: BTreeMap<(NodeId, NodeId), EdgeInfo>,
    last_report: BTreeMap<NodeId, SimTime>,
}

#[derive(Debug, Default, Clone)]
pub struct GraphDelta {
    pub added: Vec<(NodeId, NodeId)>,
    pub removed: Vec<(NodeId, NodeId)>,
}

impl NetworkGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_role(&mut self, node: NodeId, role: NodeRole) {
        self.roles.insert(node, role);
    }

    pub fn role(&self, node: NodeId) -> Option<NodeRole> {
        self.roles.get(&node).copied()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.roles.contains_key(&node)
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.edges.contains_key(&canon(a, b))
    }

    pub fn edge_set(&self) -> BTreeSet<(NodeId, NodeId)> {
        self.edges.keys().copied().collect()
    }

    pub fn last_report_of(&self, node: NodeId) -> Option<SimTime> {
        self.last_report.get(&node).copied()
    }

    pub fn neighbors_of(&self, node: NodeId) -> Vec<NodeId> {
        self.edges
            .keys()
            .filter_map(|&(a, b)| {
                if a == node {
                    Some(b)
                } else if b == node {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Merge a report: confirm listed edges, drop edges the reporter no
    /// longer sees (absence from the latest report of either endpoint
    /// removes the edge).
    pub fn apply_report(&mut self, report: &NeighborReport) -> GraphDelta {
        let mut delta = GraphDelta::default();
        self.last_report.insert(report.reporter, report.at);
        let listed: BTreeSet<NodeId> = report.observed.iter().map(|(n, _)| *n).collect();
        let current: Vec<NodeId> = self.neighbors_of(report.reporter);
        for nbr in current {
            if !listed.contains(&nbr) {
                self.edges.remove(&canon(report.reporter, nbr));
                delta.removed.push(canon(report.reporter, nbr));
            }
        }
        for (nbr, signal) in &report.observed {
            if *nbr == report.reporter {
                continue;
            }
            let key = canon(report.reporter, *nbr);
            let fresh = self
                .edges
                .insert(key, EdgeInfo { last_confirmed: report.at, signal_dbm: *signal })
                .is_none();
            if fresh {
                delta.added.push(key);
            }
        }
        delta
    }

    /// Remove every edge touching nodes whose reports went stale.
    pub fn expire_stale(&mut self, now: SimTime, staleness_window: f64) -> GraphDelta {
        let mut delta = GraphDelta::default();
        let stale: BTreeSet<NodeId> = self
            .last_report
            .iter()
            .filter(|(_, t)| now.secs() - t.secs() > staleness_window)
            .map(|(n, _)| *n)
            .collect();
        if stale.is_empty() {
            return delta;
        }
        let doomed: Vec<(NodeId, NodeId)> = self
            .edges
            .keys()
            .filter(|(a, b)| stale.contains(a) || stale.contains(b))
            .copied()
            .collect();
        for key in doomed {
            self.edges.remove(&key);
            delta.removed.push(key);
        }
        delta
    }

    /// Association point of a node: for clients the strongest-signal
    /// backbone edge (ties to lowest id); backbone and controller nodes
    /// associate with themselves.
    pub fn association_of(&self, node: NodeId) -> Option<NodeId> {
        match self.role(node) {
            Some(NodeRole::Client) => self
                .edges
                .iter()
                .filter_map(|(&(a, b), info)| {
                    let peer = if a == node {
                        b
                    } else if b == node {
                        a
                    } else {
                        return None;
                    };
                    match self.role(peer) {
                        Some(NodeRole::Backbone) | Some(NodeRole::Controller) => {
                            Some((peer, info.signal_dbm))
                        }
                        _ => None,
                    }
                })
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
                .map(|(peer, _)| peer),
            Some(_) => Some(node),
            None => None,
        }
    }
}

/// Path selection strategy over the network graph. Only hop count ships;
/// the interface admits the residual-bandwidth strategies.
pub trait PathStrategy {
    fn name(&self) -> &'static str;
    fn compute_path(
        &self,
        graph: &NetworkGraph,
        src: NodeId,
        dst: NodeId,
    ) -> Result<Vec<NodeId>, SdnError>;
}

/// Minimum hop count, ties broken by the lexicographically smallest
/// node-id sequence.
#[derive(Debug, Default, Clone, Copy)]
pub struct HopCountStrategy;

impl PathStrategy for HopCountStrategy {
    fn name(&self) -> &'static str {
        "hc"
    }

    fn compute_path(
        &self,
        graph: &NetworkGraph,
        src: NodeId,
        dst: NodeId,
    ) -> Result<Vec<NodeId>, SdnError> {
        compute_path_hc(graph, src, dst)
    }
}

/// Minimal-hop path from `src` to `dst`; ties resolved toward the
/// lexicographically smallest node-id sequence.
pub fn compute_path_hc(
    graph: &NetworkGraph,
    src: NodeId,
    dst: NodeId,
) -> Result<Vec<NodeId>, SdnError> {
    if !graph.contains(src) {
        return Err(SdnError::UnknownDestination(src));
    }
    if !graph.contains(dst) {
        return Err(SdnError::UnknownDestination(dst));
    }
    if src == dst {
        return Ok(vec![src]);
    }
    // BFS distances from dst, then greedy walk from src choosing the
    // smallest-id neighbor one step closer: yields the lex-min sequence.
    let mut dist: BTreeMap<NodeId, u32> = BTreeMap::new();
    dist.insert(dst, 0);
    let mut frontier = vec![dst];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for u in frontier {
            let d = dist[&u];
            let mut nbrs = graph.neighbors_of(u);
            nbrs.sort_unstable();
            for v in nbrs {
                dist.entry(v).or_insert_with(|| {
                    next.push(v);
                    d + 1
                });
            }
        }
        frontier = next;
    }
    if !dist.contains_key(&src) {
        return Err(SdnError::NoPath(src, dst));
    }
    let mut path = vec![src];
    let mut cur = src;
    while cur != dst {
        let d = dist[&cur];
        let mut nbrs = graph.neighbors_of(cur);
        nbrs.sort_unstable();
        let step = nbrs
            .into_iter()
            .find(|v| dist.get(v) == Some(&(d - 1)))
            .ok_or(SdnError::NoPath(src, dst))?;
        path.push(step);
        cur = step;
    }
    Ok(path)
}

/// Controller-rooted spanning-tree parents (hop count, ties to lowest id;
/// backbone preferred over clients as interior vertices).
pub fn compute_control_tree(graph: &NetworkGraph, controller: NodeId) -> BTreeMap<NodeId, NodeId> {
    let mut parent = BTreeMap::new();
    if !graph.contains(controller) {
        return parent;
    }
    let mut visited = BTreeSet::from([controller]);
    let mut frontier = vec![controller];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        // expand backbone/controller vertices first so clients stay leaves
        // whenever the backbone alone connects the graph
        let mut expand: Vec<NodeId> = frontier.clone();
        expand.sort_unstable_by_key(|n| {
            (matches!(graph.role(*n), Some(NodeRole::Client)), *n)
        });
        for u in expand {
            let mut nbrs = graph.neighbors_of(u);
            nbrs.sort_unstable();
            for v in nbrs {
                if visited.insert(v) {
                    parent.insert(v, u);
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    parent
}

pub type FlowId = (NodeId, NodeId);

/// Per-node match/action rule: packets matching (src, dst) forward to
/// `next_hop` (delivery when `next_hop` is the node itself is implicit).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowEntry {
    pub flow: FlowId,
    pub next_hop: NodeId,
    pub installed_at: SimTime,
}

/// Registry of installed application flows; the "edge in use" test for
/// disassociation handling walks these paths.
#[derive(Debug, Default)]
pub struct ActiveFlowRegistry {
    flows: BTreeMap<FlowId, FlowRecord>,
}

#[derive(Debug, Clone)]
pub struct FlowRecord {
    pub path: Vec<NodeId>,
    pub installed_at: SimTime,
    pub last_used: SimTime,
}

impl ActiveFlowRegistry {
    pub fn register(&mut self, flow: FlowId, path: Vec<NodeId>, now: SimTime) {
        self.flows.insert(flow, FlowRecord { path, installed_at: now, last_used: now });
    }

    pub fn get(&self, flow: &FlowId) -> Option<&FlowRecord> {
        self.flows.get(flow)
    }

    pub fn remove(&mut self, flow: &FlowId) -> Option<FlowRecord> {
        self.flows.remove(flow)
    }

    pub fn flows_using_edge(&self, edge: (NodeId, NodeId)) -> Vec<FlowId> {
        let e = canon(edge.0, edge.1);
        self.flows
            .iter()
            .filter(|(_, rec)| rec.path.windows(2).any(|w| canon(w[0], w[1]) == e))
            .map(|(id, _)| *id)
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FlowId, &FlowRecord)> {
        self.flows.iter()
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }
}

/// Instruction set the controller emits; the simulation layer turns these
/// into control frames over the tree.
#[derive(Debug, Default)]
pub struct ControllerActions {
    /// (target node, flow, next hop) — install or overwrite.
    pub installs: Vec<(NodeId, FlowId, NodeId)>,
    /// (target node, flow) — remove a stale entry.
    pub removals: Vec<(NodeId, FlowId)>,
    /// (mobile node, peer, new association) — gratuitous ARP.
    pub gratuitous_arps: Vec<(NodeId, NodeId, NodeId)>,
    /// (target node, parent) — control-tree parent (re)assignment.
    pub tree_updates: Vec<(NodeId, NodeId)>,
    /// Flows released at their ingress after install (ingress node, flow).
    pub releases: Vec<(NodeId, FlowId)>,
}

/// Central controller state machine.
#[derive(Debug)]
pub struct Controller {
    pub node: NodeId,
    cfg: SdnConfig,
    pub graph: NetworkGraph,
    pub registry: ActiveFlowRegistry,
    tree: BTreeMap<NodeId, NodeId>,
    /// Last tree parent pushed to each node, to emit updates only on change.
    pushed_parents: BTreeMap<NodeId, NodeId>,
    suspended: BTreeSet<FlowId>,
    /// Reroutes deferred by the no-extension baseline: (due, lost edge).
    pub deferred_repairs: Vec<(SimTime, (NodeId, NodeId))>,
    pub reroute_count: u64,
}

impl Controller {
    pub fn new(node: NodeId, cfg: SdnConfig) -> Self {
        let mut graph = NetworkGraph::new();
        graph.set_role(node, NodeRole::Controller);
        Controller {
            node,
            cfg,
            graph,
            registry: ActiveFlowRegistry::default(),
            tree: BTreeMap::new(),
            pushed_parents: BTreeMap::new(),
            suspended: BTreeSet::new(),
            deferred_repairs: Vec::new(),
            reroute_count: 0,
        }
    }

    pub fn tree_parent(&self, node: NodeId) -> Option<NodeId> {
        self.tree.get(&node).copied()
    }

    /// Path controller -> node along the current tree (for source-routed
    /// control frames). None when the node is outside the tree.
    pub fn tree_path_to(&self, node: NodeId) -> Option<Vec<NodeId>> {
        if node == self.node {
            return Some(vec![self.node]);
        }
        let mut rev = vec![node];
        let mut cur = node;
        let mut guard = 0;
        while let Some(&p) = self.tree.get(&cur) {
            rev.push(p);
            cur = p;
            if cur == self.node {
                rev.reverse();
                return Some(rev);
            }
            guard += 1;
            if guard > self.tree.len() + 1 {
                return None;
            }
        }
        None
    }

    fn recompute_tree(&mut self, out: &mut ControllerActions) {
        self.tree = compute_control_tree(&self.graph, self.node);
        for (node, parent) in &self.tree {
            if self.pushed_parents.get(node) != Some(parent) {
                out.tree_updates.push((*node, *parent));
                self.pushed_parents.insert(*node, *parent);
            }
        }
        self.pushed_parents.retain(|n, _| self.tree.contains_key(n) || *n == self.node);
    }

    /// Ingest one graph-client report; may trigger re-routing when edges
    /// in use disappear.
    pub fn handle_report(&mut self, report: &NeighborReport, now: SimTime) -> ControllerActions {
        let mut out = ControllerActions::default();
        for (n, _) in &report.observed {
            if !self.graph.contains(*n) {
                // unseen node: role learned when topology is registered;
                // default to backbone-less client until told otherwise
                self.graph.set_role(*n, NodeRole::Client);
            }
        }
        if !self.graph.contains(report.reporter) {
            self.graph.set_role(report.reporter, NodeRole::Client);
        }
        let mut delta = self.graph.apply_report(report);
        let stale_window = self.cfg.report_interval * self.cfg.stale_report_intervals as f64;
        let expired = self.graph.expire_stale(now, stale_window);
        delta.removed.extend(expired.removed);
        self.recompute_tree(&mut out);
        for edge in &delta.removed {
            self.on_edge_lost(*edge, now, &mut out);
        }
        if !delta.added.is_empty() {
            self.retry_suspended(now, &mut out);
        }
        out
    }

    fn on_edge_lost(&mut self, edge: (NodeId, NodeId), now: SimTime, out: &mut ControllerActions) {
        if self.cfg.mobility_extension {
            self.handle_disassociation(edge, now, out);
        } else {
            // pre-extension behavior: the system times out and re-routes
            // only after the reconnect delay
            if !self.registry.flows_using_edge(edge).is_empty() {
                self.deferred_repairs.push((now.after(self.cfg.reconnect_timeout), edge));
            }
        }
    }

    /// Mobility extension: repair every registered flow whose path used the
    /// lost edge. Inbound routes via new flow entries, outbound via
    /// gratuitous ARP to the mobile endpoint.
    pub fn handle_disassociation(
        &mut self,
        lost_edge: (NodeId, NodeId),
        now: SimTime,
        out: &mut ControllerActions,
    ) {
        let affected = self.registry.flows_using_edge(lost_edge);
        if affected.is_empty() {
            return;
        }
        self.reroute_count += 1;
        for flow in affected {
            self.reroute_flow(flow, Some(lost_edge), now, out);
        }
    }

    fn reroute_flow(
        &mut self,
        flow: FlowId,
        lost_edge: Option<(NodeId, NodeId)>,
        now: SimTime,
        out: &mut ControllerActions,
    ) {
        let (src, dst) = flow;
        let old_path = self.registry.get(&flow).map(|r| r.path.clone()).unwrap_or_default();
        match compute_path_hc(&self.graph, src, dst) {
            Ok(new_path) => {
                for pair in new_path.windows(2) {
                    if !self.forwards_by_binding(pair[0], flow) {
                        out.installs.push((pair[0], flow, pair[1]));
                    }
                }
                let new_set: BTreeSet<NodeId> = new_path.iter().copied().collect();
                for node in &old_path {
                    if !new_set.contains(node) && *node != dst {
                        out.removals.push((*node, flow));
                    }
                }
                // outbound repair: repoint the mobile endpoint's binding
                if let Some(edge) = lost_edge {
                    for mobile in [edge.0, edge.1] {
                        if self.graph.role(mobile) == Some(NodeRole::Client)
                            && (mobile == src || mobile == dst)
                        {
                            let peer = if mobile == src { dst } else { src };
                            if let Some(assoc) = self.graph.association_of(mobile) {
                                out.gratuitous_arps.push((mobile, peer, assoc));
                            }
                        }
                    }
                }
                self.registry.register(flow, new_path, now);
                self.suspended.remove(&flow);
            }
            Err(_) => {
                // no alternative now; retry on the next graph update
                for node in &old_path {
                    out.removals.push((*node, flow));
                }
                self.registry.remove(&flow);
                self.suspended.insert(flow);
            }
        }
    }

    fn retry_suspended(&mut self, now: SimTime, out: &mut ControllerActions) {
        let retry: Vec<FlowId> = self.suspended.iter().copied().collect();
        for flow in retry {
            if compute_path_hc(&self.graph, flow.0, flow.1).is_ok() {
                self.reroute_flow(flow, None, now, out);
            }
        }
    }

    /// Fire any deferred (no-extension) repairs that are due.
    pub fn run_deferred_repairs(&mut self, now: SimTime) -> ControllerActions {
        let mut out = ControllerActions::default();
        let due: Vec<(NodeId, NodeId)> = self
            .deferred_repairs
            .iter()
            .filter(|(t, _)| *t <= now)
            .map(|(_, e)| *e)
            .collect();
        self.deferred_repairs.retain(|(t, _)| *t > now);
        for edge in due {
            let affected = self.registry.flows_using_edge(edge);
            for flow in affected {
                self.reroute_flow(flow, Some(edge), now, &mut out);
            }
        }
        out
    }

    /// A client forwards traffic it originates via its ARP binding (the
    /// outbound route the gratuitous-ARP mechanism repairs), so it never
    /// receives flow entries for its own flows.
    fn forwards_by_binding(&self, node: NodeId, flow: FlowId) -> bool {
        node == flow.0 && self.graph.role(node) == Some(NodeRole::Client)
    }

    /// Packet-In: compute the path, install entries along it (both
    /// directions, the HC metric is symmetric), register the flow and
    /// release the pending packet at its ingress.
    pub fn handle_packet_in(
        &mut self,
        ingress: NodeId,
        flow: FlowId,
        now: SimTime,
    ) -> Result<ControllerActions, SdnError> {
        let (src, dst) = flow;
        if !self.graph.contains(dst) {
            return Err(SdnError::UnknownDestination(dst));
        }
        let path = compute_path_hc(&self.graph, src, dst)?;
        let mut out = ControllerActions::default();
        let reverse_flow = (dst, src);
        for pair in path.windows(2) {
            if !self.forwards_by_binding(pair[0], flow) {
                out.installs.push((pair[0], flow, pair[1]));
            }
            if !self.forwards_by_binding(pair[1], reverse_flow) {
                out.installs.push((pair[1], reverse_flow, pair[0]));
            }
        }
        self.registry.register(flow, path.clone(), now);
        let mut reverse = path;
        reverse.reverse();
        self.registry.register(reverse_flow, reverse, now);
        out.releases.push((ingress, flow));
        Ok(out)
    }

    /// ARP answered from graph knowledge; never broadcast to the mesh.
    ///
    /// The reply carries the link-layer identity the requester's frames
    /// should use — its current association point, which the flow rules
    /// rewrite hop by hop — provided the target is known and attached.
    /// Unknown targets get no reply (the requester times out).
    pub fn answer_arp(&self, requester: NodeId, target: NodeId) -> Option<NodeId> {
        self.graph.association_of(target)?;
        self.graph.association_of(requester)
    }

    pub fn config(&self) -> &SdnConfig {
        &self.cfg
    }

    /// Snapshot for convergence detection: sorted edge set plus reporter
    /// count.
    pub fn graph_snapshot(&self) -> (usize, BTreeSet<(NodeId, NodeId)>) {
        (self.graph.last_report.len(), self.graph.edge_set())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: f64) -> SimTime {
        SimTime::from_secs(s)
    }

    fn report(reporter: NodeId, nbrs: &[NodeId], at: f64) -> NeighborReport {
        NeighborReport {
            reporter,
            observed: nbrs.iter().map(|n| (*n, -60.0)).collect(),
            at: t(at),
        }
    }

    fn line_graph(n: u32) -> NetworkGraph {
        let mut g = NetworkGraph::new();
        for i in 0..n {
            g.set_role(i, NodeRole::Backbone);
        }
        for i in 0..n {
            let nbrs: Vec<NodeId> = [i.checked_sub(1), (i + 1 < n).then_some(i + 1)]
                .into_iter()
                .flatten()
                .collect();
            g.apply_report(&report(i, &nbrs, 0.0));
        }
        g
    }

    #[test]
    fn adjacent_pair_two_node_path() {
        let g = line_graph(3);
        assert_eq!(compute_path_hc(&g, 0, 1).unwrap(), vec![0, 1]);
        assert_eq!(compute_path_hc(&g, 0, 2).unwrap(), vec![0, 1, 2]);
        assert_eq!(compute_path_hc(&g, 1, 1).unwrap(), vec![1]);
    }

    #[test]
    fn disconnected_pair_is_no_path() {
        let mut g = NetworkGraph::new();
        g.set_role(0, NodeRole::Backbone);
        g.set_role(1, NodeRole::Backbone);
        g.apply_report(&report(0, &[], 0.0));
        g.apply_report(&report(1, &[], 0.0));
        assert_eq!(compute_path_hc(&g, 0, 1), Err(SdnError::NoPath(0, 1)));
    }

    #[test]
    fn unknown_destination_rejected() {
        let g = line_graph(2);
        assert_eq!(compute_path_hc(&g, 0, 9), Err(SdnError::UnknownDestination(9)));
    }

    #[test]
    fn tie_breaks_to_lex_smallest_sequence() {
        // square 0-1, 0-2, 1-3, 2-3: both 0-1-3 and 0-2-3 are 2 hops
        let mut g = NetworkGraph::new();
        for i in 0..4 {
            g.set_role(i, NodeRole::Backbone);
        }
        g.apply_report(&report(0, &[1, 2], 0.0));
        g.apply_report(&report(1, &[0, 3], 0.0));
        g.apply_report(&report(2, &[0, 3], 0.0));
        g.apply_report(&report(3, &[1, 2], 0.0));
        assert_eq!(compute_path_hc(&g, 0, 3).unwrap(), vec![0, 1, 3]);
    }

    #[test]
    fn edge_absent_from_latest_report_removed() {
        let mut g = NetworkGraph::new();
        for i in 0..2 {
            g.set_role(i, NodeRole::Backbone);
        }
        g.apply_report(&report(0, &[1], 0.0));
        assert!(g.has_edge(0, 1));
        let d = g.apply_report(&report(0, &[], 1.0));
        assert!(!g.has_edge(0, 1));
        assert_eq!(d.removed, vec![(0, 1)]);
    }

    #[test]
    fn stale_reporter_edges_expire() {
        let mut g = NetworkGraph::new();
        for i in 0..3 {
            g.set_role(i, NodeRole::Backbone);
        }
        g.apply_report(&report(0, &[1], 0.0));
        g.apply_report(&report(1, &[0, 2], 0.5));
        g.apply_report(&report(2, &[1], 10.0));
        // nodes 0 and 1 have not reported for > 2 s
        let d = g.expire_stale(t(10.0), 2.0);
        assert!(d.removed.contains(&(0, 1)));
        assert!(!g.has_edge(0, 1));
        assert!(!g.has_edge(1, 2));
    }

    #[test]
    fn client_association_is_strongest_backbone() {
        let mut g = NetworkGraph::new();
        g.set_role(0, NodeRole::Backbone);
        g.set_role(1, NodeRole::Backbone);
        g.set_role(5, NodeRole::Client);
        g.apply_report(&NeighborReport {
            reporter: 5,
            observed: vec![(0, -70.0), (1, -55.0)],
            at: t(0.0),
        });
        assert_eq!(g.association_of(5), Some(1));
        assert_eq!(g.association_of(0), Some(0));
    }

    #[test]
    fn packet_in_installs_forward_and_reverse_entries() {
        let mut c = Controller::new(0, SdnConfig::default());
        for i in 1..3 {
            c.graph.set_role(i, NodeRole::Backbone);
        }
        c.handle_report(&report(0, &[1], 0.0), t(0.0));
        c.handle_report(&report(1, &[0, 2], 0.0), t(0.0));
        c.handle_report(&report(2, &[1], 0.0), t(0.0));
        let out = c.handle_packet_in(0, (0, 2), t(1.0)).unwrap();
        assert!(out.installs.contains(&(0, (0, 2), 1)));
        assert!(out.installs.contains(&(1, (0, 2), 2)));
        assert!(out.installs.contains(&(1, (2, 0), 0)));
        assert!(out.installs.contains(&(2, (2, 0), 1)));
        assert_eq!(out.releases, vec![(0, (0, 2))]);
        assert_eq!(c.registry.get(&(0, 2)).unwrap().path, vec![0, 1, 2]);
    }

    #[test]
    fn packet_in_unknown_destination_rejected() {
        let mut c = Controller::new(0, SdnConfig::default());
        c.handle_report(&report(0, &[], 0.0), t(0.0));
        assert!(matches!(
            c.handle_packet_in(0, (0, 9), t(0.1)),
            Err(SdnError::UnknownDestination(9))
        ));
    }

    #[test]
    fn lost_edge_unused_by_flows_no_action() {
        let mut c = Controller::new(0, SdnConfig::default());
        for i in 1..3 {
            c.graph.set_role(i, NodeRole::Backbone);
        }
        c.handle_report(&report(0, &[1, 2], 0.0), t(0.0));
        c.handle_report(&report(1, &[0, 2], 0.0), t(0.0));
        c.handle_report(&report(2, &[0, 1], 0.0), t(0.0));
        // no flows registered; dropping an edge must not emit installs
        let out = c.handle_report(&report(2, &[0], 1.0), t(1.0));
        assert!(out.installs.is_empty());
        assert!(out.gratuitous_arps.is_empty());
    }

    #[test]
    fn disassociation_reroutes_and_sends_gratuitous_arp() {
        // backbone 0 (controller) - 1 - 2; client 5 moves from 1 to 2
        let mut c = Controller::new(0, SdnConfig::default());
        c.graph.set_role(1, NodeRole::Backbone);
        c.graph.set_role(2, NodeRole::Backbone);
        c.graph.set_role(5, NodeRole::Client);
        c.handle_report(&report(0, &[1, 2], 0.0), t(0.0));
        c.handle_report(&report(1, &[0, 2, 5], 0.0), t(0.0));
        c.handle_report(&report(2, &[0, 1], 0.0), t(0.0));
        c.handle_report(&report(5, &[1], 0.0), t(0.0));
        let out = c.handle_packet_in(0, (0, 5), t(0.5)).unwrap();
        assert!(out.installs.contains(&(1, (0, 5), 5)));
        assert_eq!(c.registry.get(&(0, 5)).unwrap().path, vec![0, 1, 5]);

        // handoff: 5 now hears only 2; its own report removes edge (1,5)
        let out = c.handle_report(&report(5, &[2], 1.0), t(1.0));
        assert!(
            out.installs.contains(&(2, (0, 5), 5)),
            "inbound path rewritten through new association: {:?}",
            out.installs
        );
        let garps = &out.gratuitous_arps;
        assert!(
            garps.iter().any(|(mobile, peer, assoc)| *mobile == 5 && *peer == 0 && *assoc == 2),
            "gratuitous ARP repoints the mobile's binding: {garps:?}"
        );
        assert_eq!(c.registry.get(&(0, 5)).unwrap().path, vec![0, 2, 5]);
    }

    #[test]
    fn no_alternative_path_suspends_then_retries() {
        let mut c = Controller::new(0, SdnConfig::default());
        c.graph.set_role(1, NodeRole::Backbone);
        c.graph.set_role(5, NodeRole::Client);
        c.handle_report(&report(0, &[1], 0.0), t(0.0));
        c.handle_report(&report(1, &[0, 5], 0.0), t(0.0));
        c.handle_report(&report(5, &[1], 0.0), t(0.0));
        c.handle_packet_in(0, (0, 5), t(0.5)).unwrap();
        // client disappears entirely
        c.handle_report(&report(1, &[0], 1.0), t(1.0));
        let out = c.handle_report(&report(5, &[], 1.0), t(1.0));
        assert!(out.installs.is_empty());
        assert!(c.registry.get(&(0, 5)).is_none());
        // client reappears at 1
        let out = c.handle_report(&report(5, &[1], 2.0), t(2.0));
        assert!(out.installs.iter().any(|(n, f, h)| *n == 1 && *f == (0, 5) && *h == 5));
    }

    #[test]
    fn no_extension_defers_repair_by_reconnect_timeout() {
        let cfg = SdnConfig { mobility_extension: false, ..SdnConfig::default() };
        let mut c = Controller::new(0, cfg);
        c.graph.set_role(1, NodeRole::Backbone);
        c.graph.set_role(2, NodeRole::Backbone);
        c.graph.set_role(5, NodeRole::Client);
        c.handle_report(&report(0, &[1, 2], 0.0), t(0.0));
        c.handle_report(&report(1, &[0, 2, 5], 0.0), t(0.0));
        c.handle_report(&report(2, &[0, 1], 0.0), t(0.0));
        c.handle_report(&report(5, &[1], 0.0), t(0.0));
        c.handle_packet_in(0, (0, 5), t(0.5)).unwrap();
        c.handle_report(&report(5, &[2], 1.0), t(1.0));
        let out = c.handle_report(&report(1, &[0, 2], 1.1), t(1.1));
        assert!(out.installs.is_empty(), "no immediate repair without the extension");
        assert_eq!(c.deferred_repairs.len(), 1);
        assert!(c.run_deferred_repairs(t(5.0)).installs.is_empty(), "not due yet");
        let out = c.run_deferred_repairs(t(31.2));
        assert!(out.installs.iter().any(|(n, f, h)| *n == 2 && *f == (0, 5) && *h == 5));
    }

    #[test]
    fn arp_answered_for_known_target_only() {
        let mut c = Controller::new(0, SdnConfig::default());
        c.graph.set_role(1, NodeRole::Backbone);
        c.graph.set_role(5, NodeRole::Client);
        c.handle_report(&report(0, &[1], 0.0), t(0.0));
        c.handle_report(&report(1, &[0, 5], 0.0), t(0.0));
        c.handle_report(&report(5, &[1], 0.0), t(0.0));
        // client 5 asks for the controller: reply names 5's association point
        assert_eq!(c.answer_arp(5, 0), Some(1));
        // backbone asking for a known client resolves to its own identity
        assert_eq!(c.answer_arp(0, 5), Some(0));
        // unknown target: no reply, requester times out
        assert_eq!(c.answer_arp(5, 99), None);
    }

    #[test]
    fn tree_paths_follow_parent_pointers() {
        let mut c = Controller::new(0, SdnConfig::default());
        for i in 1..4 {
            c.graph.set_role(i, NodeRole::Backbone);
        }
        c.handle_report(&report(0, &[1], 0.0), t(0.0));
        c.handle_report(&report(1, &[0, 2], 0.0), t(0.0));
        c.handle_report(&report(2, &[1, 3], 0.0), t(0.0));
        c.handle_report(&report(3, &[2], 0.0), t(0.0));
        assert_eq!(c.tree_parent(1), Some(0));
        assert_eq!(c.tree_parent(2), Some(1));
        assert_eq!(c.tree_path_to(3), Some(vec![0, 1, 2, 3]));
    }

    #[test]
    fn flow_paths_are_simple() {
        let g = line_graph(6);
        let path = compute_path_hc(&g, 0, 5).unwrap();
        let set: BTreeSet<NodeId> = path.iter().copied().collect();
        assert_eq!(set.len(), path.len(), "loop-free path");
    }
}
