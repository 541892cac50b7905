//! Application traffic: CBR and VBR datagram flow generation and the
//! request/response probe flows behind the slowpath/fastpath measurement.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::radio::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficModel {
    Cbr,
    Vbr,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrafficConfig {
    pub model: TrafficModel,
    /// Mean departure rate, packets per second.
    pub rate_mean: f64,
    /// CBR packet size; also the VBR maximum.
    pub packet_size: u32,
    /// VBR minimum packet size.
    pub packet_size_min: u32,
    pub start: f64,
    pub stop: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        // 50 pps, 1400-byte packets; VBR sizes uniform in [64, 1400]
        TrafficConfig {
            model: TrafficModel::Cbr,
            rate_mean: 50.0,
            packet_size: 1400,
            packet_size_min: 64,
            start: 60.0,
            stop: 180.0,
        }
    }
}

impl TrafficConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.rate_mean <= 0.0 {
            return Err("rate_mean must be positive".into());
        }
        if self.packet_size_min > self.packet_size {
            return Err("packet_size_min must not exceed packet_size".into());
        }
        if self.start >= self.stop {
            return Err("traffic start must precede stop".into());
        }
        Ok(())
    }
}

/// Draw the next inter-departure time and packet size.
///
/// CBR returns the constants; VBR draws the IDT exponentially (Poisson
/// departure process at `rate_mean`) and the size uniform over
/// `[packet_size_min, packet_size]`.
pub fn next_departure(cfg: &TrafficConfig, rng: &mut impl Rng) -> (f64, u32) {
    match cfg.model {
        TrafficModel::Cbr => (1.0 / cfg.rate_mean, cfg.packet_size),
        TrafficModel::Vbr => {
            let u: f64 = rng.random_range(0.0..1.0);
            let idt = -(1.0 - u).ln() / cfg.rate_mean;
            let size = rng.random_range(cfg.packet_size_min..=cfg.packet_size);
            (idt, size)
        }
    }
}

/// One unidirectional datagram flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSpec {
    pub src: NodeId,
    pub dst: NodeId,
    pub start_offset: f64,
    pub stop_offset: f64,
}

/// One flow from the central node to every mobile client, active over the
/// measurement window.
pub fn spawn_flows(central: NodeId, clients: &[NodeId], cfg: &TrafficConfig) -> Vec<FlowSpec> {
    clients
        .iter()
        .map(|c| FlowSpec { src: central, dst: *c, start_offset: cfg.start, stop_offset: cfg.stop })
        .collect()
}

/// Round-trip probe configuration. The paper does not fix probe size or
/// count; these defaults live in the scenario config.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub enabled: bool,
    pub count: u32,
    pub size_bytes: u32,
    pub interval: f64,
    pub timeout: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { enabled: false, count: 100, size_bytes: 64, interval: 1.0, timeout: 2.0 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::RngFactory;

    #[test]
    fn cbr_departures_are_constant() {
        let cfg = TrafficConfig::default();
        let mut rng = RngFactory::new(1).global_stream("traffic-test");
        for _ in 0..100 {
            let (idt, size) = next_departure(&cfg, &mut rng);
            assert_eq!(idt, 0.020);
            assert_eq!(size, 1400);
        }
    }

    // Monte Carlo oracles over the VBR distributions.
    #[test]
    fn vbr_mean_idt_near_20ms() {
        let cfg = TrafficConfig { model: TrafficModel::Vbr, ..TrafficConfig::default() };
        let mut rng = RngFactory::new(2).global_stream("traffic-test");
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| next_departure(&cfg, &mut rng).0).sum::<f64>() / n as f64;
        assert!((mean - 0.020).abs() / 0.020 < 0.01, "mean idt {mean}");
    }

    #[test]
    fn vbr_mean_size_near_732() {
        let cfg = TrafficConfig { model: TrafficModel::Vbr, ..TrafficConfig::default() };
        let mut rng = RngFactory::new(3).global_stream("traffic-test");
        let n = 100_000;
        let mean: f64 =
            (0..n).map(|_| next_departure(&cfg, &mut rng).1 as f64).sum::<f64>() / n as f64;
        // (64 + 1400) / 2 = 732 analytically
        assert!((mean - 732.0).abs() / 732.0 < 0.01, "mean size {mean}");
        let mut rng2 = RngFactory::new(4).global_stream("traffic-test");
        for _ in 0..10_000 {
            let (_, s) = next_departure(&cfg, &mut rng2);
            assert!((64..=1400).contains(&s));
        }
    }

    #[test]
    fn vbr_idt_lag1_autocorrelation_negligible() {
        let cfg = TrafficConfig { model: TrafficModel::Vbr, ..TrafficConfig::default() };
        let mut rng = RngFactory::new(5).global_stream("traffic-test");
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| next_departure(&cfg, &mut rng).0).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let cov = xs
            .windows(2)
            .map(|w| (w[0] - mean) * (w[1] - mean))
            .sum::<f64>()
            / (n - 1) as f64;
        let r = cov / var;
        assert!(r.abs() < 0.02, "lag-1 autocorrelation {r}");
    }

    #[test]
    fn one_flow_per_mobile_client() {
        let cfg = TrafficConfig::default();
        let clients: Vec<NodeId> = (10..20).collect();
        let flows = spawn_flows(3, &clients, &cfg);
        assert_eq!(flows.len(), 10);
        for (f, c) in flows.iter().zip(&clients) {
            assert_eq!(f.src, 3);
            assert_eq!(f.dst, *c);
            assert_eq!(f.start_offset, 60.0);
            assert_eq!(f.stop_offset, 180.0);
        }
    }

    #[test]
    fn cbr_offered_load_is_560_kbps() {
        let cfg = TrafficConfig::default();
        let kbps = cfg.rate_mean * cfg.packet_size as f64 * 8.0 / 1000.0;
        assert_eq!(kbps, 560.0);
    }
}
