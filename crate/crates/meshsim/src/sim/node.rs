//! Per-node runtime state: the protocol state machine plus the host-side
//! bookkeeping (ARP caches and queues, SDN flow tables and ingress buffers).

use std::collections::{BTreeMap, BTreeSet};

use crate::batman::BatmanState;
use crate::engine::SimTime;
use crate::olsr::OlsrState;
use crate::radio::NodeId;
use crate::sdn::FlowId;

/// An application packet in flight through the forwarding plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataPacket {
    /// (source, destination) of the application flow.
    pub flow: FlowId,
    pub kind: DataKind,
    pub ttl: u8,
    pub size: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DataKind {
    /// CBR/VBR payload tracked by a packet record.
    Flow { rec_idx: usize },
    ProbeRequest { seq: u32 },
    ProbeResponse { seq: u32 },
}

impl DataKind {
    pub fn is_probe(self) -> bool {
        !matches!(self, DataKind::Flow { .. })
    }
}

/// B.A.T.M.A.N. host-side extras: the OS ARP model behind the slowpath.
#[derive(Debug, Default)]
pub struct BatmanHost {
    /// Destinations with a completed ARP resolution.
    pub resolved: BTreeSet<NodeId>,
    /// Packets waiting on resolution, per target.
    pub pending: BTreeMap<NodeId, Vec<DataPacket>>,
    /// Per-requester ARP flood sequence.
    pub arp_seq: u32,
    /// Flood duplicate suppression: (requester, seq).
    pub seen_floods: BTreeSet<(NodeId, u32)>,
}

/// SDN host/datapath state.
#[derive(Debug, Default)]
pub struct SdnNode {
    /// Match (src, dst) -> forward to next hop.
    pub flow_table: BTreeMap<FlowId, NodeId>,
    /// Next hop toward the controller on the in-band tree.
    pub tree_parent: Option<NodeId>,
    /// ARP bindings: peer -> this node's association point to use for it.
    pub bindings: BTreeMap<NodeId, NodeId>,
    /// Packets held while a Packet-In is outstanding.
    pub buffer: BTreeMap<FlowId, Vec<(DataPacket, SimTime)>>,
    /// Outstanding Packet-In per flow (dedup).
    pub pending_packet_in: BTreeSet<FlowId>,
    /// Packets held while an ARP query to the controller is outstanding.
    pub pending_arp: BTreeMap<NodeId, Vec<DataPacket>>,
}

#[derive(Debug)]
pub enum ProtoNode {
    Olsr(OlsrState),
    Batman(Box<BatmanState>, BatmanHost),
    Sdn(SdnNode),
}

#[derive(Debug)]
pub struct Node {
    pub id: NodeId,
    pub proto: ProtoNode,
}

impl Node {
    pub fn olsr(&self) -> &OlsrState {
        match &self.proto {
            ProtoNode::Olsr(s) => s,
            _ => panic!("node {} is not running olsr", self.id),
        }
    }

    pub fn olsr_mut(&mut self) -> &mut OlsrState {
        match &mut self.proto {
            ProtoNode::Olsr(s) => s,
            _ => panic!("node {} is not running olsr", self.id),
        }
    }

    pub fn batman_mut(&mut self) -> (&mut BatmanState, &mut BatmanHost) {
        match &mut self.proto {
            ProtoNode::Batman(s, h) => (s, h),
            _ => panic!("node {} is not running batman", self.id),
        }
    }

    pub fn sdn(&self) -> &SdnNode {
        match &self.proto {
            ProtoNode::Sdn(s) => s,
            _ => panic!("node {} is not running sdn", self.id),
        }
    }

    pub fn sdn_mut(&mut self) -> &mut SdnNode {
        match &mut self.proto {
            ProtoNode::Sdn(s) => s,
            _ => panic!("node {} is not running sdn", self.id),
        }
    }
}
