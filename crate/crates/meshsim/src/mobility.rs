//! Node movement: Random Waypoint and Reference Point Group Mobility trace
//! generation, piecewise-linear replay and BonnMotion-style serialization.
//!
//! Traces are generated over `warmup_discard + duration` model seconds; the
//! warm-up prefix is cut off and the remainder re-based to t = 0 before the
//! simulator ever sees it, so the consumed trace starts in the model's
//! steady state.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::radio::Position;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MobilityModel {
    Rwp,
    Rpgm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MobilityConfig {
    pub model: MobilityModel,
    pub min_speed: f64,
    pub max_speed: f64,
    pub pause: f64,
    pub area_width: f64,
    pub area_height: f64,
    pub warmup_discard: f64,
    /// RPGM only: target mean group size.
    pub group_size_mean: f64,
    /// RPGM only: members stay within this radius of their reference point.
    pub group_deviation_radius: f64,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        MobilityConfig {
            model: MobilityModel::Rwp,
            min_speed: 2.0,
            max_speed: 6.0,
            pause: 0.0,
            area_width: 240.0,
            area_height: 360.0,
            warmup_discard: 900.0,
            group_size_mean: 3.0,
            group_deviation_radius: 30.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum MobilityError {
    #[error("invalid mobility config: {0}")]
    InvalidConfig(String),
    #[error("time {t} outside trace span [{start}, {end}] for node {node}")]
    OutOfSpan { node: usize, t: f64, start: f64, end: f64 },
    #[error("trace parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl MobilityConfig {
    pub fn validate(&self) -> Result<(), MobilityError> {
        if !(self.min_speed > 0.0 && self.min_speed <= self.max_speed) {
            return Err(MobilityError::InvalidConfig(
                "require 0 < min_speed <= max_speed".into(),
            ));
        }
        if self.pause < 0.0 {
            return Err(MobilityError::InvalidConfig("pause must be >= 0".into()));
        }
        if self.warmup_discard < 0.0 {
            return Err(MobilityError::InvalidConfig("warmup_discard must be >= 0".into()));
        }
        if self.area_width <= 0.0 || self.area_height <= 0.0 {
            return Err(MobilityError::InvalidConfig("area must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub t: f64,
    pub pos: Position,
}

/// Per-node piecewise-linear position-vs-time functions.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityTrace {
    pub nodes: Vec<Vec<Waypoint>>,
}

impl MobilityTrace {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Linear interpolation between the waypoints surrounding `t`.
    pub fn position_at(&self, node: usize, t: f64) -> Result<Position, MobilityError> {
        let wps = &self.nodes[node];
        let start = wps.first().map(|w| w.t).unwrap_or(0.0);
        let end = wps.last().map(|w| w.t).unwrap_or(0.0);
        if wps.is_empty() || t < start || t > end {
            return Err(MobilityError::OutOfSpan { node, t, start, end });
        }
        // Last waypoint with wp.t <= t.
        let idx = match wps.binary_search_by(|w| w.t.total_cmp(&t)) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        if idx + 1 >= wps.len() {
            return Ok(wps[idx].pos);
        }
        let (a, b) = (&wps[idx], &wps[idx + 1]);
        let dt = b.t - a.t;
        if dt <= 0.0 {
            return Ok(b.pos);
        }
        let f = (t - a.t) / dt;
        Ok(Position::new(
            a.pos.x + (b.pos.x - a.pos.x) * f,
            a.pos.y + (b.pos.y - a.pos.y) * f,
        ))
    }

    pub fn span_end(&self, node: usize) -> f64 {
        self.nodes[node].last().map(|w| w.t).unwrap_or(0.0)
    }
}

fn uniform_point(cfg: &MobilityConfig, rng: &mut impl Rng) -> Position {
    Position::new(
        rng.random_range(0.0..=cfg.area_width),
        rng.random_range(0.0..=cfg.area_height),
    )
}

fn clamp_to_area(cfg: &MobilityConfig, p: Position) -> Position {
    Position::new(p.x.clamp(0.0, cfg.area_width), p.y.clamp(0.0, cfg.area_height))
}

/// Raw RWP walk for one node covering `total` seconds, starting uniform.
fn rwp_walk(cfg: &MobilityConfig, total: f64, rng: &mut impl Rng) -> Vec<Waypoint> {
    let mut wps = Vec::new();
    let mut t = 0.0;
    let mut pos = uniform_point(cfg, rng);
    wps.push(Waypoint { t, pos });
    while t < total {
        let dest = uniform_point(cfg, rng);
        let speed = rng.random_range(cfg.min_speed..=cfg.max_speed);
        let dist = pos.distance(&dest);
        if dist > 1e-9 {
            t += dist / speed;
            wps.push(Waypoint { t, pos: dest });
            pos = dest;
        }
        if cfg.pause > 0.0 {
            t += cfg.pause;
            wps.push(Waypoint { t, pos });
        }
    }
    wps
}

/// Cut a walk to `[cut, cut + duration]` and re-base times to zero,
/// interpolating synthetic waypoints at both boundaries.
fn cut_and_rebase(wps: &[Waypoint], cut: f64, duration: f64) -> Vec<Waypoint> {
    let interp = |t: f64| -> Position {
        let idx = match wps.binary_search_by(|w| w.t.total_cmp(&t)) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        if idx + 1 >= wps.len() {
            return wps[wps.len() - 1].pos;
        }
        let (a, b) = (&wps[idx], &wps[idx + 1]);
        let dt = b.t - a.t;
        let f = if dt > 0.0 { ((t - a.t) / dt).clamp(0.0, 1.0) } else { 0.0 };
        Position::new(a.pos.x + (b.pos.x - a.pos.x) * f, a.pos.y + (b.pos.y - a.pos.y) * f)
    };

    let end = cut + duration;
    let mut out = vec![Waypoint { t: 0.0, pos: interp(cut) }];
    for w in wps {
        if w.t > cut && w.t < end {
            out.push(Waypoint { t: w.t - cut, pos: w.pos });
        }
    }
    out.push(Waypoint { t: duration, pos: interp(end) });
    out
}

/// Random Waypoint traces for `n_nodes`, usable span `[0, duration]`.
///
/// Each node independently draws destinations uniform over the area and
/// speeds uniform in `[min_speed, max_speed]`, with the configured warm-up
/// prefix discarded.
pub fn generate_rwp(
    cfg: &MobilityConfig,
    n_nodes: usize,
    duration: f64,
    rng: &mut impl Rng,
) -> Result<MobilityTrace, MobilityError> {
    cfg.validate()?;
    if duration <= 0.0 {
        return Err(MobilityError::InvalidConfig("duration must be positive".into()));
    }
    let total = cfg.warmup_discard + duration;
    let nodes = (0..n_nodes)
        .map(|_| {
            let walk = rwp_walk(cfg, total, rng);
            cut_and_rebase(&walk, cfg.warmup_discard, duration)
        })
        .collect();
    Ok(MobilityTrace { nodes })
}

/// Split `n` nodes into groups with sizes drawn uniformly from {2, 3, 4},
/// adjusted so every node lands in a group.
pub fn partition_groups(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![1];
    }
    let mut sizes = Vec::new();
    let mut left = n;
    while left >= 2 {
        let s = rng.random_range(2..=4usize).min(left);
        sizes.push(s);
        left -= s;
    }
    if left == 1 {
        // put the straggler in the last group
        *sizes.last_mut().expect("at least one group") += 1;
    }
    sizes
}

fn offset_in_disk(radius: f64, rng: &mut impl Rng) -> (f64, f64) {
    if radius <= 0.0 {
        return (0.0, 0.0);
    }
    let r = radius * rng.random_range(0.0..=1.0f64).sqrt();
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    (r * theta.cos(), r * theta.sin())
}

/// Reference Point Group Mobility traces.
///
/// Nodes are partitioned into groups; each group's reference point performs
/// RWP over the area and members ride the reference point plus a fresh
/// uniform-in-disk offset per reference waypoint, interpolated between
/// waypoints and clamped to the area. Member segment speeds can therefore
/// exceed the reference speed bound by up to the offset drift; the speed
/// bounds constrain the reference point, as in the standard formulation.
pub fn generate_rpgm(
    cfg: &MobilityConfig,
    n_nodes: usize,
    duration: f64,
    rng: &mut impl Rng,
) -> Result<MobilityTrace, MobilityError> {
    cfg.validate()?;
    if n_nodes < 1 {
        return Err(MobilityError::InvalidConfig("need at least one node".into()));
    }
    if duration <= 0.0 {
        return Err(MobilityError::InvalidConfig("duration must be positive".into()));
    }
    let total = cfg.warmup_discard + duration;
    let sizes = partition_groups(n_nodes, rng);
    let mut nodes: Vec<Vec<Waypoint>> = Vec::with_capacity(n_nodes);
    for size in sizes {
        let reference = rwp_walk(cfg, total, rng);
        for _ in 0..size {
            let member: Vec<Waypoint> = reference
                .iter()
                .map(|w| {
                    let (dx, dy) = offset_in_disk(cfg.group_deviation_radius, rng);
                    Waypoint {
                        t: w.t,
                        pos: clamp_to_area(cfg, Position::new(w.pos.x + dx, w.pos.y + dy)),
                    }
                })
                .collect();
            nodes.push(cut_and_rebase(&member, cfg.warmup_discard, duration));
        }
    }
    Ok(MobilityTrace { nodes })
}

/// One line per node of whitespace-separated `t x y` triples.
pub fn export_trace(trace: &MobilityTrace) -> String {
    let mut out = String::new();
    for wps in &trace.nodes {
        let mut first = true;
        for w in wps {
            if !first {
                out.push(' ');
            }
            out.push_str(&format!("{} {} {}", w.t, w.pos.x, w.pos.y));
            first = false;
        }
        out.push('\n');
    }
    out
}

pub fn import_trace(text: &str) -> Result<MobilityTrace, MobilityError> {
    let mut nodes = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() % 3 != 0 {
            return Err(MobilityError::Parse {
                line: lineno + 1,
                msg: format!("expected t x y triples, got {} fields", fields.len()),
            });
        }
        let mut wps = Vec::with_capacity(fields.len() / 3);
        let mut prev_t = f64::NEG_INFINITY;
        for chunk in fields.chunks(3) {
            let parse = |s: &str, what: &str| -> Result<f64, MobilityError> {
                s.parse::<f64>().map_err(|e| MobilityError::Parse {
                    line: lineno + 1,
                    msg: format!("bad {what} value {s:?}: {e}"),
                })
            };
            let t = parse(chunk[0], "time")?;
            let x = parse(chunk[1], "x")?;
            let y = parse(chunk[2], "y")?;
            if t <= prev_t {
                return Err(MobilityError::Parse {
                    line: lineno + 1,
                    msg: format!("waypoint times must increase, got {t} after {prev_t}"),
                });
            }
            prev_t = t;
            wps.push(Waypoint { t, pos: Position::new(x, y) });
        }
        nodes.push(wps);
    }
    Ok(MobilityTrace { nodes })
}

/// Trace for a node that never moves: two waypoints spanning `[0, duration]`.
pub fn stationary_trace(pos: Position, duration: f64) -> Vec<Waypoint> {
    vec![Waypoint { t: 0.0, pos }, Waypoint { t: duration, pos }]
}
