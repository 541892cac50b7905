//! Scenario configuration: the factor grid (topology, protocol, mobility,
//! traffic), radio budget, protocol timers and experiment control, loadable
//! from TOML files with per-module sections.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::batman::BatmanConfig;
use crate::mobility::{MobilityConfig, MobilityModel, MobilityTrace};
use crate::olsr::OlsrConfig;
use crate::radio::RadioParams;
use crate::sdn::SdnConfig;
use crate::traffic::{ProbeConfig, TrafficConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "olsr")]
    Olsr,
    #[serde(rename = "batman")]
    Batman,
    #[serde(rename = "sdn")]
    Sdn,
    /// Ablation: OpenWiMesh plane without the mobility extension.
    #[serde(rename = "sdn-no-mobility")]
    SdnNoMobility,
}

impl Protocol {
    pub fn label(self) -> &'static str {
        match self {
            Protocol::Olsr => "olsr",
            Protocol::Batman => "batman",
            Protocol::Sdn => "sdn",
            Protocol::SdnNoMobility => "sdn-no-mobility",
        }
    }

    pub fn is_sdn(self) -> bool {
        matches!(self, Protocol::Sdn | Protocol::SdnNoMobility)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TopologyId {
    T1,
    T2,
    T3,
    #[serde(rename = "custom")]
    Custom,
}

impl TopologyId {
    pub fn label(self) -> &'static str {
        match self {
            TopologyId::T1 => "T1",
            TopologyId::T2 => "T2",
            TopologyId::T3 => "T3",
            TopologyId::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSection {
    pub topology: TopologyId,
    pub protocol: Protocol,
    #[serde(default = "default_replications")]
    pub replications: u32,
    #[serde(default)]
    pub base_seed: u64,
}

fn default_replications() -> u32 {
    30
}

/// Run phase timing. Offsets are relative to the measurement origin (the
/// instant convergence is detected); the monotone period has no traffic and
/// no movement, then mobility and traffic run together.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Timings {
    pub monotone_secs: f64,
    pub mobility_secs: f64,
    /// Runs not converged within this many sim seconds are flagged and
    /// excluded.
    pub convergence_cap: f64,
}

impl Default for Timings {
    fn default() -> Self {
        Timings { monotone_secs: 60.0, mobility_secs: 120.0, convergence_cap: 60.0 }
    }
}

/// Custom topology description (scripted scenarios).
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct CustomTopology {
    pub n_nodes: usize,
    pub area_width: f64,
    pub area_height: f64,
    pub backbone_positions: Vec<(f64, f64)>,
    /// Optional scripted client trace (text format of the mobility module);
    /// when absent, clients follow the configured mobility model.
    #[serde(default)]
    pub client_trace_file: Option<String>,
    /// Programmatic alternative to `client_trace_file`.
    #[serde(skip)]
    pub client_trace: Option<MobilityTrace>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub timings: Timings,
    #[serde(default)]
    pub mobility: MobilityConfig,
    #[serde(default)]
    pub traffic: TrafficConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub radio: RadioParams,
    #[serde(default)]
    pub olsr: OlsrConfig,
    #[serde(default)]
    pub batman: BatmanConfig,
    #[serde(default)]
    pub sdn: SdnConfig,
    #[serde(default)]
    pub custom: Option<CustomTopology>,
    /// Disable client movement entirely (static baseline runs).
    #[serde(default)]
    pub mobility_disabled: bool,
}

impl ScenarioConfig {
    pub fn new(topology: TopologyId, protocol: Protocol) -> Self {
        let mut cfg = ScenarioConfig {
            scenario: ScenarioSection {
                topology,
                protocol,
                replications: default_replications(),
                base_seed: 0,
            },
            timings: Timings::default(),
            mobility: MobilityConfig::default(),
            traffic: TrafficConfig::default(),
            probe: ProbeConfig::default(),
            radio: RadioParams::default(),
            olsr: OlsrConfig::default(),
            batman: BatmanConfig::default(),
            sdn: SdnConfig::default(),
            custom: None,
            mobility_disabled: false,
        };
        cfg.apply_topology_area();
        cfg
    }

    /// Keep the mobility area in sync with the selected topology.
    pub fn apply_topology_area(&mut self) {
        let area = match self.scenario.topology {
            TopologyId::T1 => Some((240.0, 360.0)),
            TopologyId::T2 => Some((400.0, 360.0)),
            TopologyId::T3 => Some((560.0, 360.0)),
            TopologyId::Custom => self.custom.as_ref().map(|c| (c.area_width, c.area_height)),
        };
        if let Some((w, h)) = area {
            self.mobility.area_width = w;
            self.mobility.area_height = h;
        }
    }

    pub fn mobility_label(&self) -> &'static str {
        if self.mobility_disabled {
            "static"
        } else {
            match self.mobility.model {
                MobilityModel::Rwp => "rwp",
                MobilityModel::Rpgm => "rpgm",
            }
        }
    }

    pub fn traffic_label(&self) -> &'static str {
        match self.traffic.model {
            crate::traffic::TrafficModel::Cbr => "cbr",
            crate::traffic::TrafficModel::Vbr => "vbr",
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let field = |name: &str, msg: String| ConfigError::Invalid { field: name.into(), msg };
        if self.scenario.replications == 0 {
            return Err(field("scenario.replications", "must be at least 1".into()));
        }
        if self.scenario.topology == TopologyId::Custom {
            let c = self
                .custom
                .as_ref()
                .ok_or_else(|| field("custom", "custom topology requires a [custom] section".into()))?;
            if c.backbone_positions.is_empty() {
                return Err(field("custom.backbone_positions", "must not be empty".into()));
            }
            if c.n_nodes < c.backbone_positions.len() {
                return Err(field(
                    "custom.n_nodes",
                    "must be at least the backbone node count".into(),
                ));
            }
            if c.area_width <= 0.0 || c.area_height <= 0.0 {
                return Err(field("custom.area", "area must be positive".into()));
            }
        }
        if self.timings.monotone_secs < 0.0
            || self.timings.mobility_secs <= 0.0
            || self.timings.convergence_cap <= 0.0
        {
            return Err(field("timings", "phase durations must be positive".into()));
        }
        self.mobility
            .validate()
            .map_err(|e| field("mobility", e.to_string()))?;
        self.traffic
            .validate()
            .map_err(|e| field("traffic", e))?;
        self.radio
            .validate()
            .map_err(|e| field("radio", e.to_string()))?;
        self.olsr.validate().map_err(|e| field("olsr", e))?;
        self.batman.validate().map_err(|e| field("batman", e))?;
        self.sdn.validate().map_err(|e| field("sdn", e))?;
        let window = self.timings.monotone_secs + self.timings.mobility_secs;
        if self.traffic.stop > window + 1e-9 {
            return Err(field(
                "traffic.stop",
                format!("exceeds measurement window of {window} s"),
            ));
        }
        if self.traffic.start + 1e-9 < self.timings.monotone_secs {
            return Err(field(
                "traffic.start",
                "traffic must not start inside the monotone period".into(),
            ));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let mut cfg: ScenarioConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.apply_topology_area();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(custom) = &mut cfg.custom {
            if let Some(file) = &custom.client_trace_file {
                let base = path.parent().unwrap_or(std::path::Path::new("."));
                let trace_text = std::fs::read_to_string(base.join(file))
                    .map_err(|e| ConfigError::Io(format!("{file}: {e}")))?;
                let trace = crate::mobility::import_trace(&trace_text)
                    .map_err(|e| ConfigError::Invalid {
                        field: "custom.client_trace_file".into(),
                        msg: e.to_string(),
                    })?;
                custom.client_trace = Some(trace);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config field {field}: {msg}")]
    Invalid { field: String, msg: String },
    #[error("topology construction failed: {0}")]
    Topology(String),
    #[error("io error: {0}")]
    Io(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates() {
        let cfg = ScenarioConfig::new(TopologyId::T2, Protocol::Olsr);
        cfg.validate().unwrap();
        assert_eq!(cfg.mobility.area_width, 400.0);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ScenarioConfig::new(TopologyId::T3, Protocol::Sdn);
        let text = cfg.to_toml_string();
        let back = ScenarioConfig::from_toml_str(&text).unwrap();
        assert_eq!(back.scenario.topology, TopologyId::T3);
        assert_eq!(back.scenario.protocol, Protocol::Sdn);
        assert_eq!(back.mobility.area_width, 560.0);
    }

    #[test]
    fn invalid_fields_named_in_error() {
        let mut cfg = ScenarioConfig::new(TopologyId::T1, Protocol::Batman);
        cfg.scenario.replications = 0;
        match cfg.validate() {
            Err(ConfigError::Invalid { field, .. }) => assert_eq!(field, "scenario.replications"),
            other => panic!("expected invalid field, got {other:?}"),
        }
        let mut cfg = ScenarioConfig::new(TopologyId::T1, Protocol::Batman);
        cfg.mobility.min_speed = -1.0;
        match cfg.validate() {
            Err(ConfigError::Invalid { field, .. }) => assert_eq!(field, "mobility"),
            other => panic!("expected invalid field, got {other:?}"),
        }
    }

    #[test]
    fn custom_topology_requires_section() {
        let mut cfg = ScenarioConfig::new(TopologyId::Custom, Protocol::Sdn);
        assert!(cfg.validate().is_err());
        cfg.custom = Some(CustomTopology {
            n_nodes: 3,
            area_width: 500.0,
            area_height: 200.0,
            backbone_positions: vec![(100.0, 100.0), (240.0, 100.0)],
            client_trace_file: None,
            client_trace: None,
        });
        cfg.apply_topology_area();
        cfg.validate().unwrap();
        assert_eq!(cfg.mobility.area_width, 500.0);
    }

    #[test]
    fn minimal_toml_with_defaults() {
        let text = r#"
[scenario]
topology = "T1"
protocol = "olsr"
"#;
        let cfg = ScenarioConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.scenario.replications, 30);
        assert_eq!(cfg.radio.range_override_m, Some(150.0));
        assert_eq!(cfg.olsr.t_hello, 1.0);
    }
}
