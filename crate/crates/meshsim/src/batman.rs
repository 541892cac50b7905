//! Simplified B.A.T.M.A.N.: periodic originator messages, best-first
//! next-hop adoption, selective rebroadcast with sequence dedup, and the
//! bidirectional link check.
//!
//! First-arrival adoption per (originator, sequence) — no sliding-window
//! quality averaging. Operates at the routing abstraction, not layer-2
//! bridging.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::SimTime;
use crate::radio::NodeId;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BatmanConfig {
    pub ogm_interval: f64,
    pub ogm_ttl: u8,
    pub ogm_bytes: u32,
    /// Originator entries older than this are unroutable.
    pub purge_timeout: f64,
    /// Bidirectional confirmations older than this lapse.
    pub bidir_timeout: f64,
    /// Maximum per-hop OGM rebroadcast hold (aggregation/jitter model);
    /// drawn uniform in [0, max] per forwarded OGM. Zero gives the
    /// equal-delay behavior the oracle suites assume.
    pub forward_jitter_max: f64,
    /// Extra delay between ARP reply arrival and the OS releasing queued
    /// packets; stand-in for neighbor-table latency of a real stack.
    pub arp_resolve_extra_delay: f64,
}

impl Default for BatmanConfig {
    fn default() -> Self {
        BatmanConfig {
            ogm_interval: 1.0,
            ogm_ttl: 50,
            ogm_bytes: 52,
            purge_timeout: 5.0,
            bidir_timeout: 5.0,
            forward_jitter_max: 0.15,
            arp_resolve_extra_delay: 0.25,
        }
    }
}

impl BatmanConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.ogm_interval <= 0.0 {
            return Err("ogm_interval must be positive".into());
        }
        if self.purge_timeout <= 0.0 || self.bidir_timeout <= 0.0 {
            return Err("batman timeouts must be positive".into());
        }
        if self.forward_jitter_max < 0.0 {
            return Err("forward_jitter_max must be >= 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Ogm {
    pub originator: NodeId,
    pub seq: u32,
    pub ttl: u8,
    /// Set when the frame came directly from its originator.
    pub direct: bool,
    /// Previous hop; rewritten per rebroadcast.
    pub sender: NodeId,
}

#[derive(Debug, Clone)]
pub struct OriginatorEntry {
    /// `None` until a copy arrives over a confirmed bidirectional link.
    pub best_next_hop: Option<NodeId>,
    pub last_seq: u32,
    /// Bitmask of recently seen sequences relative to `last_seq`
    /// (bit k = seq `last_seq - k`). Slides forward only.
    pub window: u64,
    pub last_updated: SimTime,
}

/// Outcome of processing one received OGM.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OgmAction {
    AdoptAndRebroadcast,
    DropDuplicate,
    DropEcho,
    DropUnidirectional,
}

#[derive(Debug)]
pub struct BatmanState {
    pub node: NodeId,
    cfg: BatmanConfig,
    seq: u32,
    originators: BTreeMap<NodeId, OriginatorEntry>,
    bidir: BTreeMap<NodeId, SimTime>,
}

impl BatmanState {
    pub fn new(node: NodeId, cfg: BatmanConfig) -> Self {
        BatmanState { node, cfg, seq: 0, originators: BTreeMap::new(), bidir: BTreeMap::new() }
    }

    pub fn config(&self) -> &BatmanConfig {
        &self.cfg
    }

    /// Fresh OGM for periodic origination. Sequences are 0, 1, 2, ... per
    /// originator; size is constant regardless of network size.
    pub fn emit_ogm(&mut self) -> Ogm {
        let seq = self.seq;
        self.seq += 1;
        Ogm { originator: self.node, seq, ttl: self.cfg.ogm_ttl, direct: true, sender: self.node }
    }

    fn link_bidirectional(&self, nbr: NodeId, now: SimTime) -> bool {
        self.bidir
            .get(&nbr)
            .map(|t| now.secs() - t.secs() <= self.cfg.bidir_timeout)
            .unwrap_or(false)
    }

    /// Record (originator, seq) in the dedup window. Returns false when the
    /// sequence was already seen (or is older than the window tracks).
    fn record_seq(&mut self, originator: NodeId, seq: u32, now: SimTime) -> bool {
        match self.originators.get_mut(&originator) {
            None => {
                self.originators.insert(
                    originator,
                    OriginatorEntry { best_next_hop: None, last_seq: seq, window: 1, last_updated: now },
                );
                true
            }
            Some(e) => {
                if seq > e.last_seq {
                    let shift = (seq - e.last_seq) as u64;
                    e.window = if shift >= 64 { 0 } else { e.window << shift };
                    e.window |= 1;
                    e.last_seq = seq;
                    true
                } else {
                    let back = (e.last_seq - seq) as u64;
                    if back >= 64 {
                        return false; // too old to track: treat as duplicate
                    }
                    let bit = 1u64 << back;
                    if e.window & bit != 0 {
                        false
                    } else {
                        e.window |= bit;
                        true
                    }
                }
            }
        }
    }

    /// Core OGM rule, returning the classification plus the frame to
    /// rebroadcast, if any.
    ///
    /// 1. Echo of our own OGM from neighbor X marks the X link
    ///    bidirectional and is never forwarded.
    /// 2. The first copy of a (originator, seq) heard directly from its
    ///    originator is rebroadcast once even on a not-yet-bidirectional
    ///    link — that echo is what lets the originator confirm the link —
    ///    but the route is only adopted when the link is bidirectional.
    /// 3. Other OGMs from non-bidirectional senders are dropped.
    /// 4. The first copy adopts the sender as best next hop and is
    ///    rebroadcast with decremented ttl; later copies are dropped.
    pub fn handle_ogm(&mut self, ogm: &Ogm, now: SimTime) -> (OgmAction, Option<Ogm>) {
        if ogm.originator == self.node {
            self.bidir.insert(ogm.sender, now);
            return (OgmAction::DropEcho, None);
        }

        let direct_from_originator = ogm.sender == ogm.originator;
        let sender_bidir = self.link_bidirectional(ogm.sender, now);

        if !direct_from_originator && !sender_bidir {
            return (OgmAction::DropUnidirectional, None);
        }

        let first_copy = self.record_seq(ogm.originator, ogm.seq, now);
        if !first_copy {
            return (OgmAction::DropDuplicate, None);
        }

        let rebroadcast = if ogm.ttl > 1 {
            Some(Ogm {
                originator: ogm.originator,
                seq: ogm.seq,
                ttl: ogm.ttl - 1,
                direct: false,
                sender: self.node,
            })
        } else {
            None
        };

        if direct_from_originator && !sender_bidir {
            // probe rebroadcast for the bidirectional check, no adoption
            return (OgmAction::DropUnidirectional, rebroadcast);
        }

        let e = self.originators.get_mut(&ogm.originator).expect("entry recorded");
        e.best_next_hop = Some(ogm.sender);
        e.last_updated = now;
        (OgmAction::AdoptAndRebroadcast, rebroadcast)
    }

    /// Best next hop toward `destination` when the entry is fresh.
    pub fn lookup_next_hop(&self, destination: NodeId, now: SimTime) -> Option<NodeId> {
        self.originators.get(&destination).and_then(|e| {
            if now.secs() - e.last_updated.secs() <= self.cfg.purge_timeout {
                e.best_next_hop
            } else {
                None
            }
        })
    }

    pub fn originator_entry(&self, id: NodeId) -> Option<&OriginatorEntry> {
        self.originators.get(&id)
    }

    pub fn known_originators(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.originators.keys().copied()
    }

    /// Snapshot for convergence detection: originator -> best next hop.
    pub fn table_snapshot(&self) -> Vec<(NodeId, NodeId)> {
        self.originators
            .iter()
            .filter_map(|(o, e)| e.best_next_hop.map(|h| (*o, h)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: f64) -> SimTime {
        SimTime::from_secs(s)
    }

    #[test]
    fn sequences_increase_per_originator() {
        let mut s = BatmanState::new(1, BatmanConfig::default());
        assert_eq!(s.emit_ogm().seq, 0);
        assert_eq!(s.emit_ogm().seq, 1);
        assert_eq!(s.emit_ogm().seq, 2);
        let mut s2 = BatmanState::new(2, BatmanConfig::default());
        assert_eq!(s2.emit_ogm().seq, 0, "independent sequence space");
    }

    #[test]
    fn own_echo_marks_bidirectional_and_is_not_forwarded() {
        let mut a = BatmanState::new(0, BatmanConfig::default());
        let echo = Ogm { originator: 0, seq: 0, ttl: 49, direct: false, sender: 1 };
        let (action, fwd) = a.handle_ogm(&echo, t(0.1));
        assert_eq!(action, OgmAction::DropEcho);
        assert!(fwd.is_none());
        assert!(a.link_bidirectional(1, t(0.2)));
    }

    #[test]
    fn direct_ogm_probed_but_not_adopted_until_bidirectional() {
        let mut b = BatmanState::new(1, BatmanConfig::default());
        let ogm = Ogm { originator: 0, seq: 0, ttl: 50, direct: true, sender: 0 };
        let (action, fwd) = b.handle_ogm(&ogm, t(0.0));
        assert_eq!(action, OgmAction::DropUnidirectional);
        assert!(fwd.is_some(), "probe rebroadcast enables the echo check");
        assert!(b.lookup_next_hop(0, t(0.1)).is_none());

        // after the echo of b's own OGM confirms the link, the next direct
        // OGM is adopted
        let echo = Ogm { originator: 1, seq: 0, ttl: 49, direct: false, sender: 0 };
        b.handle_ogm(&echo, t(0.5));
        let ogm1 = Ogm { originator: 0, seq: 1, ttl: 50, direct: true, sender: 0 };
        let (action, fwd) = b.handle_ogm(&ogm1, t(1.0));
        assert_eq!(action, OgmAction::AdoptAndRebroadcast);
        assert!(fwd.is_some());
        assert_eq!(b.lookup_next_hop(0, t(1.1)), Some(0));
    }

    #[test]
    fn duplicate_copies_dropped_next_hop_unchanged() {
        let mut c = BatmanState::new(2, BatmanConfig::default());
        c.bidir.insert(1, t(0.0));
        c.bidir.insert(3, t(0.0));
        let first = Ogm { originator: 0, seq: 17, ttl: 49, direct: false, sender: 1 };
        let (action, _) = c.handle_ogm(&first, t(0.1));
        assert_eq!(action, OgmAction::AdoptAndRebroadcast);
        let second = Ogm { originator: 0, seq: 17, ttl: 49, direct: false, sender: 3 };
        let (action, fwd) = c.handle_ogm(&second, t(0.2));
        assert_eq!(action, OgmAction::DropDuplicate);
        assert!(fwd.is_none());
        assert_eq!(c.lookup_next_hop(0, t(0.3)), Some(1));
    }

    #[test]
    fn ogm_from_unconfirmed_relay_dropped() {
        let mut c = BatmanState::new(2, BatmanConfig::default());
        let relayed = Ogm { originator: 0, seq: 3, ttl: 48, direct: false, sender: 1 };
        let (action, fwd) = c.handle_ogm(&relayed, t(0.1));
        assert_eq!(action, OgmAction::DropUnidirectional);
        assert!(fwd.is_none());
    }

    #[test]
    fn never_heard_originator_unroutable() {
        let s = BatmanState::new(0, BatmanConfig::default());
        assert!(s.lookup_next_hop(42, t(1.0)).is_none());
    }

    #[test]
    fn stale_entry_purged_from_lookup() {
        let mut s = BatmanState::new(0, BatmanConfig::default());
        s.bidir.insert(1, t(0.0));
        let ogm = Ogm { originator: 9, seq: 0, ttl: 40, direct: false, sender: 1 };
        s.handle_ogm(&ogm, t(0.0));
        assert_eq!(s.lookup_next_hop(9, t(4.9)), Some(1));
        assert!(s.lookup_next_hop(9, t(5.1)).is_none(), "older than purge_timeout");
    }

    #[test]
    fn ttl_exhausted_ogm_not_rebroadcast() {
        let mut s = BatmanState::new(0, BatmanConfig::default());
        s.bidir.insert(1, t(0.0));
        let ogm = Ogm { originator: 9, seq: 0, ttl: 1, direct: false, sender: 1 };
        let (action, fwd) = s.handle_ogm(&ogm, t(0.1));
        assert_eq!(action, OgmAction::AdoptAndRebroadcast);
        assert!(fwd.is_none());
    }

    #[test]
    fn window_slides_forward_only() {
        let mut s = BatmanState::new(0, BatmanConfig::default());
        s.bidir.insert(1, t(0.0));
        for seq in [5u32, 7, 6] {
            let ogm = Ogm { originator: 9, seq, ttl: 40, direct: false, sender: 1 };
            s.handle_ogm(&ogm, t(0.1));
        }
        let e = s.originator_entry(9).unwrap();
        assert_eq!(e.last_seq, 7);
        // replay of an already-seen older seq is a duplicate
        let ogm = Ogm { originator: 9, seq: 5, ttl: 40, direct: false, sender: 1 };
        let (action, _) = s.handle_ogm(&ogm, t(0.2));
        assert_eq!(action, OgmAction::DropDuplicate);
    }
}
