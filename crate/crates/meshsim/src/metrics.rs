//! Measurement collection and the three comparison metrics: packet loss,
//! aggregate control-traffic rate, and slowpath/fastpath round-trip times,
//! with Student-t confidence intervals across replications.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::engine::SimTime;
use crate::radio::{Dest, FrameKind, NodeId};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("empty measurement window")]
    EmptyWindow,
    #[error("confidence interval requires at least 2 samples, got {0}")]
    TooFewSamples(usize),
}

/// Why a packet never reached its destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DropReason {
    /// Next hop no longer in range at transmission time.
    StaleNextHop,
    /// No route/flow entry and no way to obtain one.
    NoRoute,
    /// Hop budget exhausted (transient routing loop).
    TtlExpired,
    /// Buffered at an ingress awaiting flow installation for too long.
    BufferExpired,
}

impl DropReason {
    pub fn label(self) -> &'static str {
        match self {
            DropReason::StaleNextHop => "stale_next_hop",
            DropReason::NoRoute => "no_route",
            DropReason::TtlExpired => "ttl_expired",
            DropReason::BufferExpired => "buffer_expired",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PacketOutcome {
    Delivered { at: SimTime },
    Dropped { at: SimTime, reason: DropReason },
    InFlight,
}

/// Per-DATA-packet record; exactly one outcome per packet at run end.
#[derive(Debug, Clone)]
pub struct PacketRecord {
    pub flow: (NodeId, NodeId),
    pub seq: u32,
    pub sent_at: SimTime,
    pub size: u32,
    pub outcome: PacketOutcome,
}

/// One probe attempt: a round-trip sample or a timeout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbeOutcome {
    Rtt(f64),
    Timeout,
}

/// Everything one run accumulates.
#[derive(Debug, Default)]
pub struct MetricsCollector {
    /// Pre-traffic control measurement window.
    pub control_window: Option<(SimTime, SimTime)>,
    pub control_bytes_in_window: u64,
    pub control_tx_in_window: u64,
    pub control_tx_total: u64,
    /// Broadcast ARP requests put on the medium, whole run.
    pub broadcast_arp_count: u64,
    /// Control frames dropped in transit (e.g. controller unreachable).
    pub control_losses: u64,
    pub packets: Vec<PacketRecord>,
    pub probes: Vec<ProbeOutcome>,
    /// Latest DATA drop instant, for repair-tail checks.
    pub last_drop_at: Option<SimTime>,
    /// Optional full event log (one line per medium/packet event).
    pub event_log: Option<Vec<String>>,
}

impl MetricsCollector {
    pub fn new(log_events: bool) -> Self {
        MetricsCollector {
            event_log: if log_events { Some(Vec::new()) } else { None },
            ..Default::default()
        }
    }

    pub fn record_transmission(&mut self, t: SimTime, kind: FrameKind, bytes: u32, dst: Dest) {
        if kind.is_control() {
            self.control_tx_total += 1;
            if let Some((start, end)) = self.control_window {
                if t >= start && t < end {
                    self.control_bytes_in_window += bytes as u64;
                    self.control_tx_in_window += 1;
                }
            }
            if kind == FrameKind::ArpRequest && dst == Dest::Broadcast {
                self.broadcast_arp_count += 1;
            }
        }
        if let Some(log) = &mut self.event_log {
            let dst_s = match dst {
                Dest::Node(n) => n.to_string(),
                Dest::Broadcast => "*".to_string(),
            };
            log.push(format!("{},tx,{},{},{}", t, kind.label(), bytes, dst_s));
        }
    }

    pub fn record_control_loss(&mut self, t: SimTime, kind: FrameKind) {
        self.control_losses += 1;
        if let Some(log) = &mut self.event_log {
            log.push(format!("{},ctl_loss,{},,", t, kind.label()));
        }
    }

    pub fn start_packet(&mut self, flow: (NodeId, NodeId), seq: u32, sent_at: SimTime, size: u32) -> usize {
        self.packets.push(PacketRecord { flow, seq, sent_at, size, outcome: PacketOutcome::InFlight });
        self.packets.len() - 1
    }

    pub fn packet_delivered(&mut self, idx: usize, at: SimTime) {
        debug_assert!(matches!(self.packets[idx].outcome, PacketOutcome::InFlight));
        self.packets[idx].outcome = PacketOutcome::Delivered { at };
        if let Some(log) = &mut self.event_log {
            let p = &self.packets[idx];
            log.push(format!("{},delivered,{}->{},{},", at, p.flow.0, p.flow.1, p.seq));
        }
    }

    pub fn packet_dropped(&mut self, idx: usize, at: SimTime, reason: DropReason) {
        debug_assert!(matches!(self.packets[idx].outcome, PacketOutcome::InFlight));
        self.packets[idx].outcome = PacketOutcome::Dropped { at, reason };
        self.last_drop_at = Some(at);
        if let Some(log) = &mut self.event_log {
            let p = &self.packets[idx];
            log.push(format!("{},dropped,{}->{},{},{}", at, p.flow.0, p.flow.1, p.seq, reason.label()));
        }
    }

    pub fn record_probe(&mut self, outcome: ProbeOutcome) {
        self.probes.push(outcome);
        if let Some(log) = &mut self.event_log {
            match outcome {
                ProbeOutcome::Rtt(r) => log.push(format!(",probe,rtt,{r},")),
                ProbeOutcome::Timeout => log.push(",probe,timeout,,".to_string()),
            }
        }
    }

    /// Conservation check: every packet has exactly one terminal outcome or
    /// is still in flight.
    pub fn outcome_counts(&self) -> (u64, u64, u64) {
        let mut delivered = 0;
        let mut dropped = 0;
        let mut in_flight = 0;
        for p in &self.packets {
            match p.outcome {
                PacketOutcome::Delivered { .. } => delivered += 1,
                PacketOutcome::Dropped { .. } => dropped += 1,
                PacketOutcome::InFlight => in_flight += 1,
            }
        }
        (delivered, dropped, in_flight)
    }
}

/// Packet loss percentage: `100 * dropped / (delivered + dropped)`.
/// Packets still in flight at run end are excluded from the denominator.
/// `None` when nothing terminated.
pub fn packet_loss(records: &[PacketRecord]) -> Option<f64> {
    let mut delivered = 0u64;
    let mut dropped = 0u64;
    for r in records {
        match r.outcome {
            PacketOutcome::Delivered { .. } => delivered += 1,
            PacketOutcome::Dropped { .. } => dropped += 1,
            PacketOutcome::InFlight => {}
        }
    }
    let denom = delivered + dropped;
    if denom == 0 {
        return None;
    }
    Some(100.0 * dropped as f64 / denom as f64)
}

/// Aggregate control rate in kb/s over the window: control bytes * 8 /
/// window seconds / 1000, every transmission (originations, relays and
/// rebroadcasts) counted.
pub fn control_overhead_kbps(
    bytes_in_window: u64,
    window: (SimTime, SimTime),
) -> Result<f64, MetricsError> {
    let len = window.1.secs() - window.0.secs();
    if len <= 0.0 {
        return Err(MetricsError::EmptyWindow);
    }
    Ok(bytes_in_window as f64 * 8.0 / len / 1000.0)
}

/// Slowpath (first non-timeout sample when the first attempt succeeded)
/// and fastpath (mean of the remaining non-timeout samples).
pub fn rtt_split(samples: &[ProbeOutcome]) -> (Option<f64>, Option<f64>) {
    if samples.is_empty() {
        return (None, None);
    }
    let slow = match samples[0] {
        ProbeOutcome::Rtt(r) => Some(r),
        ProbeOutcome::Timeout => None,
    };
    let rest: Vec<f64> = samples[1..]
        .iter()
        .filter_map(|s| match s {
            ProbeOutcome::Rtt(r) => Some(*r),
            ProbeOutcome::Timeout => None,
        })
        .collect();
    let fast = if rest.is_empty() {
        None
    } else {
        Some(rest.iter().sum::<f64>() / rest.len() as f64)
    };
    (slow, fast)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiResult {
    pub mean: f64,
    pub half_width: f64,
    pub level: f64,
    pub n: usize,
}

/// Student-t confidence interval: `mean ± t(1-(1-level)/2, n-1) * s / sqrt(n)`.
pub fn confidence_interval(samples: &[f64], level: f64) -> Result<CiResult, MetricsError> {
    let n = samples.len();
    if n < 2 {
        return Err(MetricsError::TooFewSamples(n));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("valid t distribution")
        .inverse_cdf(1.0 - (1.0 - level) / 2.0);
    Ok(CiResult { mean, half_width: t * sd / (n as f64).sqrt(), level, n })
}

/// Two intervals overlap when their ranges intersect.
pub fn ci_overlap(a: &CiResult, b: &CiResult) -> bool {
    (a.mean - a.half_width) <= (b.mean + b.half_width)
        && (b.mean - b.half_width) <= (a.mean + a.half_width)
}

/// Per-run summary row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub protocol: String,
    pub topology: String,
    pub mobility: String,
    pub traffic: String,
    pub seed: u64,
    pub loss_pct: Option<f64>,
    pub control_kbps: f64,
    pub slowpath_ms: Option<f64>,
    pub fastpath_ms: Option<f64>,
}

fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    v.map(|x| format!("{x:.prec$}")).unwrap_or_default()
}

pub const RESULTS_CSV_HEADER: &str =
    "protocol,topology,mobility,traffic,seed,loss_pct,control_kbps,slowpath_ms,fastpath_ms";

impl RunSummary {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.4},{},{}",
            self.protocol,
            self.topology,
            self.mobility,
            self.traffic,
            self.seed,
            fmt_opt(self.loss_pct, 4),
            self.control_kbps,
            fmt_opt(self.slowpath_ms, 4),
            fmt_opt(self.fastpath_ms, 4),
        )
    }
}

/// Recompute loss and windowed control rate from a persisted event log;
/// must equal the in-run values exactly.
pub fn recompute_from_log(
    log: &[String],
    window: (SimTime, SimTime),
) -> (Option<f64>, Result<f64, MetricsError>) {
    let mut delivered = 0u64;
    let mut dropped = 0u64;
    let mut bytes = 0u64;
    for line in log {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 2 {
            continue;
        }
        match fields[1] {
            "delivered" => delivered += 1,
            "dropped" => dropped += 1,
            "tx" => {
                let t: f64 = fields[0].parse().unwrap_or(f64::NAN);
                let kind = fields[2];
                let is_control = !matches!(kind, "DATA" | "PROBE");
                if is_control && t >= window.0.secs() && t < window.1.secs() {
                    bytes += fields[3].parse::<u64>().unwrap_or(0);
                }
            }
            _ => {}
        }
    }
    let loss = if delivered + dropped == 0 {
        None
    } else {
        Some(100.0 * dropped as f64 / (delivered + dropped) as f64)
    };
    (loss, control_overhead_kbps(bytes, window))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn t(s: f64) -> SimTime {
        SimTime::from_secs(s)
    }

    fn rec(outcome: PacketOutcome) -> PacketRecord {
        PacketRecord { flow: (0, 1), seq: 0, sent_at: t(0.0), size: 1400, outcome }
    }

    #[test]
    fn zero_loss_when_everything_delivered() {
        let records: Vec<PacketRecord> =
            (0..100).map(|_| rec(PacketOutcome::Delivered { at: t(1.0) })).collect();
        assert_eq!(packet_loss(&records), Some(0.0));
    }

    #[test]
    fn quarter_dropped_is_25_percent() {
        let mut records: Vec<PacketRecord> =
            (0..75).map(|_| rec(PacketOutcome::Delivered { at: t(1.0) })).collect();
        records.extend(
            (0..25).map(|_| rec(PacketOutcome::Dropped { at: t(1.0), reason: DropReason::StaleNextHop })),
        );
        assert_eq!(packet_loss(&records), Some(25.0));
    }

    #[test]
    fn in_flight_excluded_and_empty_is_none() {
        let records = vec![rec(PacketOutcome::InFlight)];
        assert_eq!(packet_loss(&records), None);
        let records2 = vec![
            rec(PacketOutcome::Delivered { at: t(1.0) }),
            rec(PacketOutcome::InFlight),
            rec(PacketOutcome::Dropped { at: t(1.0), reason: DropReason::NoRoute }),
        ];
        assert_eq!(packet_loss(&records2), Some(50.0));
    }

    #[test]
    fn control_overhead_floor_example() {
        // 20 nodes x one 52-byte OGM per second for 60 s, no rebroadcasts
        let bytes = 20u64 * 52 * 60;
        let kbps = control_overhead_kbps(bytes, (t(0.0), t(60.0))).unwrap();
        assert!((kbps - 8.32).abs() < 1e-9);
        assert_eq!(control_overhead_kbps(0, (t(0.0), t(60.0))).unwrap(), 0.0);
        assert!(matches!(
            control_overhead_kbps(10, (t(5.0), t(5.0))),
            Err(MetricsError::EmptyWindow)
        ));
    }

    #[test]
    fn window_filtering_in_collector() {
        let mut m = MetricsCollector::new(false);
        m.control_window = Some((t(10.0), t(20.0)));
        m.record_transmission(t(5.0), FrameKind::Ogm, 52, Dest::Broadcast);
        m.record_transmission(t(15.0), FrameKind::Ogm, 52, Dest::Broadcast);
        m.record_transmission(t(15.5), FrameKind::Data, 1400, Dest::Node(2));
        m.record_transmission(t(25.0), FrameKind::Ogm, 52, Dest::Broadcast);
        assert_eq!(m.control_bytes_in_window, 52);
        assert_eq!(m.control_tx_total, 3);
    }

    #[test]
    fn broadcast_arp_counted() {
        let mut m = MetricsCollector::new(false);
        m.record_transmission(t(1.0), FrameKind::ArpRequest, 28, Dest::Broadcast);
        m.record_transmission(t(1.1), FrameKind::ArpRequest, 28, Dest::Node(3));
        m.record_transmission(t(1.2), FrameKind::ArpReply, 28, Dest::Node(4));
        assert_eq!(m.broadcast_arp_count, 1);
    }

    #[test]
    fn rtt_split_paper_shape() {
        let samples = vec![
            ProbeOutcome::Rtt(259.0),
            ProbeOutcome::Rtt(1.0),
            ProbeOutcome::Rtt(1.0),
            ProbeOutcome::Rtt(1.0),
        ];
        let (slow, fast) = rtt_split(&samples);
        assert_eq!(slow, Some(259.0));
        assert_eq!(fast, Some(1.0));
    }

    #[test]
    fn rtt_split_edges() {
        let (slow, fast) = rtt_split(&[ProbeOutcome::Rtt(5.0), ProbeOutcome::Rtt(5.0)]);
        assert_eq!((slow, fast), (Some(5.0), Some(5.0)));
        let (slow, fast) = rtt_split(&[
            ProbeOutcome::Timeout,
            ProbeOutcome::Rtt(2.0),
            ProbeOutcome::Rtt(4.0),
        ]);
        assert_eq!(slow, None);
        assert_eq!(fast, Some(3.0));
        assert_eq!(rtt_split(&[]), (None, None));
        assert_eq!(rtt_split(&[ProbeOutcome::Timeout, ProbeOutcome::Timeout]), (None, None));
    }

    #[test]
    fn degenerate_interval_zero_half_width() {
        let ci = confidence_interval(&[5.0, 5.0, 5.0], 0.95).unwrap();
        assert_eq!(ci.mean, 5.0);
        assert_eq!(ci.half_width, 0.0);
    }

    // Hand-computed oracle: t(0.975, 2) = 4.3027, hw = 4.3027 * 1 / sqrt(3).
    #[test]
    fn interval_on_1_2_3_matches_t_table() {
        let ci = confidence_interval(&[1.0, 2.0, 3.0], 0.95).unwrap();
        assert!((ci.mean - 2.0).abs() < 1e-12);
        assert!((ci.half_width - 2.4841).abs() < 1e-4, "half width {}", ci.half_width);
    }

    #[test]
    fn too_few_samples_is_error() {
        assert!(confidence_interval(&[1.0], 0.95).is_err());
        assert!(confidence_interval(&[], 0.95).is_err());
    }

    // Coverage simulation oracle: ~95% of intervals cover the true mean.
    #[test]
    fn coverage_simulation_near_95_percent() {
        let mut rng = crate::engine::RngFactory::new(1234).global_stream("metrics-coverage");
        let normal = Normal::new(10.0, 3.0).unwrap();
        let trials = 10_000;
        let mut covered = 0;
        for _ in 0..trials {
            let samples: Vec<f64> = (0..30).map(|_| normal.sample(&mut rng)).collect();
            let ci = confidence_interval(&samples, 0.95).unwrap();
            if (ci.mean - 10.0).abs() <= ci.half_width {
                covered += 1;
            }
        }
        let rate = covered as f64 / trials as f64;
        assert!((rate - 0.95).abs() <= 0.01, "coverage {rate}");
    }

    #[test]
    fn ci_overlap_detects_separation() {
        let a = CiResult { mean: 10.0, half_width: 1.0, level: 0.95, n: 30 };
        let b = CiResult { mean: 12.5, half_width: 1.0, level: 0.95, n: 30 };
        let c = CiResult { mean: 11.5, half_width: 1.0, level: 0.95, n: 30 };
        assert!(!ci_overlap(&a, &b));
        assert!(ci_overlap(&a, &c));
        assert!(ci_overlap(&b, &c));
    }

    #[test]
    fn csv_row_formats_absent_fields_empty() {
        let s = RunSummary {
            protocol: "olsr".into(),
            topology: "T2".into(),
            mobility: "rwp".into(),
            traffic: "cbr".into(),
            seed: 7,
            loss_pct: Some(1.25),
            control_kbps: 33.5,
            slowpath_ms: None,
            fastpath_ms: None,
        };
        assert_eq!(s.csv_row(), "olsr,T2,rwp,cbr,7,1.2500,33.5000,,");
    }

    #[test]
    fn log_recompute_matches_in_run_values() {
        let mut m = MetricsCollector::new(true);
        m.control_window = Some((t(0.0), t(10.0)));
        let mut rng = crate::engine::RngFactory::new(5).global_stream("metrics-log");
        for i in 0..50 {
            m.record_transmission(
                t(i as f64 * 0.3),
                if i % 3 == 0 { FrameKind::Data } else { FrameKind::Hello },
                if i % 3 == 0 { 1400 } else { 40 },
                Dest::Broadcast,
            );
            let idx = m.start_packet((0, 1), i, t(i as f64 * 0.3), 1400);
            if rng.random_range(0.0..1.0) < 0.8 {
                m.packet_delivered(idx, t(i as f64 * 0.3 + 0.01));
            } else {
                m.packet_dropped(idx, t(i as f64 * 0.3 + 0.01), DropReason::StaleNextHop);
            }
        }
        let expect_loss = packet_loss(&m.packets);
        let expect_ctl = control_overhead_kbps(m.control_bytes_in_window, m.control_window.unwrap()).unwrap();
        let log = m.event_log.as_ref().unwrap();
        let (loss, ctl) = recompute_from_log(log, m.control_window.unwrap());
        assert_eq!(loss, expect_loss);
        assert_eq!(ctl.unwrap(), expect_ctl);
    }
}
