//! Radio layer: positions, free-space link budget, connectivity predicate
//! and frame definitions.
//!
//! The medium itself (delivery scheduling over the event queue) lives in
//! [`crate::sim`]; this module holds the pure physics and the frame
//! vocabulary shared by every protocol.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::SimTime;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Smallest frame put on the medium, bytes (link header allowance).
pub const MIN_FRAME_BYTES: u32 = 28;

pub type NodeId = u32;

#[derive(Debug, Error)]
pub enum RadioError {
    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("invalid radio parameters: {0}")]
    InvalidParams(String),
}

/// Physical-layer budget. Defaults follow the evaluated 802.11ag setup:
/// 20 dBm transmit power, -90 dBm sensitivity, 1 dBi antennas, 2.4 GHz.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RadioParams {
    pub tx_power_dbm: f64,
    pub rx_sensitivity_dbm: f64,
    pub gain_tx_dbi: f64,
    pub gain_rx_dbi: f64,
    pub frequency_hz: f64,
    /// Serialization rate for every frame, bits per second.
    pub phy_rate_bps: f64,
    /// When set, connectivity is a plain disk of this radius (meters)
    /// instead of the budget threshold. The shipped scenarios set 150 m:
    /// the pure budget reaches ~4 km, which would collapse every topology
    /// to one hop.
    pub range_override_m: Option<f64>,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            tx_power_dbm: 20.0,
            rx_sensitivity_dbm: -90.0,
            gain_tx_dbi: 1.0,
            gain_rx_dbi: 1.0,
            frequency_hz: 2.4e9,
            phy_rate_bps: 54e6,
            range_override_m: Some(150.0),
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<(), RadioError> {
        if !self.tx_power_dbm.is_finite() {
            return Err(RadioError::InvalidParams("tx_power_dbm must be finite".into()));
        }
        if self.rx_sensitivity_dbm >= self.tx_power_dbm {
            return Err(RadioError::InvalidParams(
                "rx_sensitivity_dbm must be below tx_power_dbm".into(),
            ));
        }
        if self.frequency_hz <= 0.0 {
            return Err(RadioError::InvalidParams("frequency_hz must be positive".into()));
        }
        if self.phy_rate_bps <= 0.0 {
            return Err(RadioError::InvalidParams("phy_rate_bps must be positive".into()));
        }
        if let Some(r) = self.range_override_m {
            if r <= 0.0 {
                return Err(RadioError::InvalidParams("range_override_m must be positive".into()));
            }
        }
        Ok(())
    }

    /// Serialization delay for `bytes` at the configured PHY rate, seconds.
    pub fn tx_delay(&self, bytes: u32) -> f64 {
        bytes as f64 * 8.0 / self.phy_rate_bps
    }

    /// Effective connectivity radius in meters: the override when present,
    /// otherwise the distance at which the budget meets sensitivity.
    pub fn effective_range_m(&self) -> f64 {
        match self.range_override_m {
            Some(r) => r,
            None => max_budget_range_m(self),
        }
    }
}

/// Free-space path loss in dB: `20 log10(d) + 20 log10(f) + 20 log10(4π/c)`.
pub fn fspl_db(distance_m: f64, frequency_hz: f64) -> f64 {
    20.0 * distance_m.log10()
        + 20.0 * frequency_hz.log10()
        + 20.0 * (4.0 * std::f64::consts::PI / SPEED_OF_LIGHT).log10()
}

/// Received power over the free-space budget, dBm.
pub fn received_power_dbm(params: &RadioParams, distance_m: f64) -> Result<f64, RadioError> {
    if distance_m <= 0.0 {
        // The omni model has no defined zero-distance power.
        return Err(RadioError::NonPositiveDistance(distance_m));
    }
    Ok(params.tx_power_dbm + params.gain_tx_dbi + params.gain_rx_dbi
        - fspl_db(distance_m, params.frequency_hz))
}

/// Distance at which received power equals sensitivity (budget mode).
pub fn max_budget_range_m(params: &RadioParams) -> f64 {
    let budget = params.tx_power_dbm + params.gain_tx_dbi + params.gain_rx_dbi
        - params.rx_sensitivity_dbm;
    let k = 20.0 * params.frequency_hz.log10()
        + 20.0 * (4.0 * std::f64::consts::PI / SPEED_OF_LIGHT).log10();
    10f64.powf((budget - k) / 20.0)
}

/// Planar position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Connectivity predicate between two positions. Symmetric by construction
/// (the budget sum commutes and distance is symmetric). The override radius
/// is inclusive at the boundary; coincident nodes are always in range.
pub fn link_up(params: &RadioParams, a: Position, b: Position) -> bool {
    let d = a.distance(&b);
    match params.range_override_m {
        Some(r) => d <= r,
        None => {
            d == 0.0
                || received_power_dbm(params, d)
                    .map(|p| p >= params.rx_sensitivity_dbm)
                    .unwrap_or(false)
        }
    }
}

/// Frame kinds on the medium. Control kinds count toward overhead; DATA and
/// PROBE do not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FrameKind {
    Hello,
    Tc,
    Ogm,
    GraphReport,
    PacketIn,
    FlowMod,
    GratuitousArp,
    ArpRequest,
    ArpReply,
    Data,
    Probe,
}

impl FrameKind {
    pub fn is_control(self) -> bool {
        !matches!(self, FrameKind::Data | FrameKind::Probe)
    }

    pub fn label(self) -> &'static str {
        match self {
            FrameKind::Hello => "HELLO",
            FrameKind::Tc => "TC",
            FrameKind::Ogm => "OGM",
            FrameKind::GraphReport => "GRAPH_REPORT",
            FrameKind::PacketIn => "PACKET_IN",
            FrameKind::FlowMod => "FLOW_MOD",
            FrameKind::GratuitousArp => "GRATUITOUS_ARP",
            FrameKind::ArpRequest => "ARP_REQUEST",
            FrameKind::ArpReply => "ARP_REPLY",
            FrameKind::Data => "DATA",
            FrameKind::Probe => "PROBE",
        }
    }
}

/// Destination of a transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dest {
    Node(NodeId),
    Broadcast,
}

/// The unit transmitted on the medium.
///
/// `size` is the on-air byte count, clamped to [`MIN_FRAME_BYTES`];
/// protocol size formulas below the clamp (e.g. a neighbor-less HELLO at
/// 24 bytes) still report their nominal value through their own sizing
/// functions.
#[derive(Debug, Clone)]
pub struct Frame<P> {
    pub kind: FrameKind,
    pub src: NodeId,
    pub dst: Dest,
    pub size: u32,
    pub born_at: SimTime,
    pub payload: P,
}

impl<P> Frame<P> {
    pub fn new(kind: FrameKind, src: NodeId, dst: Dest, size: u32, born_at: SimTime, payload: P) -> Self {
        Frame { kind, src, dst, size: size.max(MIN_FRAME_BYTES), born_at, payload }
    }
}
