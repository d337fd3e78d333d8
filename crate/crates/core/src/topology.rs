//! Body area network layout: a coordinator, relay regions and their source
//! sensors placed on a 2-D body plane.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radio and propagation parameters shared by every node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioParams {
    pub tx_power_dbm: f64,
    pub sensitivity_dbm: f64,
    pub noise_floor_dbm: f64,
    pub data_rate_bps: f64,
    pub base_frequency_hz: f64,
    pub path_loss_exponent: f64,
    pub num_subchannels: usize,
    /// Reference distance d0 of the log-distance model.
    pub ref_distance_m: f64,
    /// Path loss at the reference distance.
    pub pl_ref_db: f64,
    /// Standard deviation of the zero-mean Gaussian (in dB) shadowing term.
    pub shadowing_sigma_db: f64,
    /// Margin below the weakest own source that still counts as interference.
    pub delta_thr_db: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        default_radio_params()
    }
}

pub fn default_radio_params() -> RadioParams {
    RadioParams {
        tx_power_dbm: -10.0,
        sensitivity_dbm: -84.7,
        noise_floor_dbm: -102.0,
        data_rate_bps: 250_000.0,
        base_frequency_hz: 2.4e9,
        path_loss_exponent: 4.22,
        num_subchannels: 8,
        ref_distance_m: 0.1,
        pl_ref_db: 35.2,
        shadowing_sigma_db: 6.0,
        delta_thr_db: 10.0,
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("tx_power_dbm", self.tx_power_dbm),
            ("sensitivity_dbm", self.sensitivity_dbm),
            ("noise_floor_dbm", self.noise_floor_dbm),
            ("data_rate_bps", self.data_rate_bps),
            ("base_frequency_hz", self.base_frequency_hz),
            ("path_loss_exponent", self.path_loss_exponent),
            ("ref_distance_m", self.ref_distance_m),
            ("pl_ref_db", self.pl_ref_db),
            ("shadowing_sigma_db", self.shadowing_sigma_db),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::Parameter(format!("radio.{name} must be finite, got {v}")));
            }
        }
        if self.sensitivity_dbm <= self.noise_floor_dbm {
            return Err(Error::Parameter(format!(
                "radio.sensitivity_dbm ({}) must exceed noise_floor_dbm ({})",
                self.sensitivity_dbm, self.noise_floor_dbm
            )));
        }
        if self.path_loss_exponent <= 0.0 {
            return Err(Error::Parameter("radio.path_loss_exponent must be > 0".into()));
        }
        if self.num_subchannels == 0 {
            return Err(Error::Parameter("radio.num_subchannels must be >= 1".into()));
        }
        if self.data_rate_bps <= 0.0 {
            return Err(Error::Parameter("radio.data_rate_bps must be > 0".into()));
        }
        if self.ref_distance_m <= 0.0 {
            return Err(Error::Parameter("radio.ref_distance_m must be > 0".into()));
        }
        if self.shadowing_sigma_db < 0.0 {
            return Err(Error::Parameter("radio.shadowing_sigma_db must be >= 0".into()));
        }
        // +inf is a legal "admit everything" margin
        if self.delta_thr_db.is_nan() || self.delta_thr_db < 0.0 {
            return Err(Error::Parameter("radio.delta_thr_db must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Source,
    Relay,
    Coordinator,
}

/// A node address: region index, index within that region's relays or
/// sources, and the node's role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId {
    pub region: usize,
    pub node: usize,
    pub kind: NodeKind,
}

impl NodeId {
    pub const fn source(region: usize, node: usize) -> Self {
        NodeId { region, node, kind: NodeKind::Source }
    }

    pub const fn relay(region: usize, node: usize) -> Self {
        NodeId { region, node, kind: NodeKind::Relay }
    }

    pub const fn coordinator() -> Self {
        NodeId { region: 0, node: 0, kind: NodeKind::Coordinator }
    }

    pub fn is_source(&self) -> bool {
        self.kind == NodeKind::Source
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            NodeKind::Source => write!(f, "s{}.{}", self.region, self.node),
            NodeKind::Relay => write!(f, "r{}.{}", self.region, self.node),
            NodeKind::Coordinator => f.write_str("c"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Area {
    pub width_m: f64,
    pub height_m: f64,
}

impl Area {
    fn contains(&self, p: &Position) -> bool {
        (0.0..=self.width_m).contains(&p.x) && (0.0..=self.height_m).contains(&p.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub pos: Position,
    pub label: Option<String>,
}

impl Node {
    /// Display label; falls back to the 1-based index.
    pub fn display_label(&self) -> String {
        self.label.clone().unwrap_or_else(|| (self.id.node + 1).to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelayRegion {
    pub id: usize,
    pub relays: Vec<Node>,
    pub sources: Vec<Node>,
}

impl RelayRegion {
    pub fn relay_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.relays.iter().map(|n| n.id)
    }

    pub fn source_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.sources.iter().map(|n| n.id)
    }

    /// The relay that takes the region's measurements.
    pub fn observer(&self) -> NodeId {
        self.relays[0].id
    }
}

/// Validated, immutable network layout.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    pub regions: Vec<RelayRegion>,
    pub coordinator_pos: Position,
    pub area: Area,
    pub relay_range_m: f64,
    pub radio: RadioParams,
}

impl NetworkTopology {
    pub fn num_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn num_sources(&self) -> usize {
        self.regions.iter().map(|r| r.sources.len()).sum()
    }

    pub fn num_relays(&self) -> usize {
        self.regions.iter().map(|r| r.relays.len()).sum()
    }

    pub fn node(&self, id: NodeId) -> Result<&Node> {
        let region = self.regions.get(id.region);
        let node = match id.kind {
            NodeKind::Source => region.and_then(|r| r.sources.get(id.node)),
            NodeKind::Relay => region.and_then(|r| r.relays.get(id.node)),
            NodeKind::Coordinator => None,
        };
        node.ok_or(Error::UnknownNode(id))
    }

    pub fn position(&self, id: NodeId) -> Result<Position> {
        if id == NodeId::coordinator() {
            return Ok(self.coordinator_pos);
        }
        self.node(id).map(|n| n.pos)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.position(id).is_ok()
    }

    pub fn sources(&self) -> impl Iterator<Item = &Node> + '_ {
        self.regions.iter().flat_map(|r| r.sources.iter())
    }

    pub fn relays(&self) -> impl Iterator<Item = &Node> + '_ {
        self.regions.iter().flat_map(|r| r.relays.iter())
    }

    pub fn source_counts(&self) -> Vec<usize> {
        self.regions.iter().map(|r| r.sources.len()).collect()
    }

    /// Relay of the source's own region closest to it.
    pub fn serving_relay(&self, source: NodeId) -> Result<NodeId> {
        let pos = self.position(source)?;
        let region = &self.regions[source.region];
        let best = region
            .relays
            .iter()
            .min_by(|a, b| a.pos.distance(&pos).total_cmp(&b.pos.distance(&pos)))
            .expect("regions always hold a relay");
        Ok(best.id)
    }

    /// `(region, label)` with 1-based region numbering, e.g. `(2,D)`.
    pub fn member_label(&self, id: NodeId) -> String {
        match self.node(id) {
            Ok(n) => format!("({},{})", id.region + 1, n.display_label()),
            Err(_) => id.to_string(),
        }
    }
}

/// Declarative layout, as found in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    pub area: Area,
    pub coordinator: Position,
    #[serde(default = "default_relay_range")]
    pub relay_range_m: f64,
    #[serde(default)]
    pub radio: RadioParams,
    pub regions: Vec<RegionSpec>,
}

fn default_relay_range() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub relays: Vec<NodeSpec>,
    pub sources: Vec<NodeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub x: f64,
    pub y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl NodeSpec {
    pub fn at(x: f64, y: f64) -> Self {
        NodeSpec { x, y, label: None }
    }

    pub fn labelled(x: f64, y: f64, label: &str) -> Self {
        NodeSpec { x, y, label: Some(label.to_owned()) }
    }
}

pub fn build_topology(spec: &TopologySpec) -> Result<NetworkTopology> {
    spec.radio.validate()?;
    let area = spec.area;
    if !(area.width_m.is_finite() && area.height_m.is_finite() && area.width_m > 0.0 && area.height_m > 0.0) {
        return Err(Error::Parameter(format!("area must be positive and finite, got {area:?}")));
    }
    if !(spec.relay_range_m.is_finite() && spec.relay_range_m > 0.0) {
        return Err(Error::Parameter(format!("relay_range_m must be > 0, got {}", spec.relay_range_m)));
    }
    if spec.regions.is_empty() {
        return Err(Error::Topology { node: "topology".into(), reason: "no relay regions".into() });
    }

    let coord = spec.coordinator;
    check_position("coordinator", &coord, &area)?;

    let mut regions = Vec::with_capacity(spec.regions.len());
    for (r, rs) in spec.regions.iter().enumerate() {
        if rs.relays.is_empty() {
            return Err(Error::Topology { node: format!("region {r}"), reason: "has no relay".into() });
        }
        if rs.sources.is_empty() {
            return Err(Error::Topology { node: format!("region {r}"), reason: "has no source".into() });
        }
        let mut labels = BTreeSet::new();
        let mut make = |id: NodeId, ns: &NodeSpec| -> Result<Node> {
            let pos = Position::new(ns.x, ns.y);
            let name = describe(id, ns.label.as_deref());
            check_position(&name, &pos, &area)?;
            if let Some(l) = &ns.label {
                if !labels.insert((id.kind, l.clone())) {
                    return Err(Error::Topology { node: name, reason: format!("duplicate label '{l}'") });
                }
            }
            Ok(Node { id, pos, label: ns.label.clone() })
        };
        let relays =
            rs.relays.iter().enumerate().map(|(k, ns)| make(NodeId::relay(r, k), ns)).collect::<Result<Vec<_>>>()?;
        let sources =
            rs.sources.iter().enumerate().map(|(k, ns)| make(NodeId::source(r, k), ns)).collect::<Result<Vec<_>>>()?;

        for s in &sources {
            let nearest = relays.iter().map(|rl| rl.pos.distance(&s.pos)).fold(f64::INFINITY, f64::min);
            if nearest > spec.relay_range_m {
                return Err(Error::Topology {
                    node: describe(s.id, s.label.as_deref()),
                    reason: format!(
                        "nearest relay of its region is {nearest:.3} m away, relay range is {} m",
                        spec.relay_range_m
                    ),
                });
            }
        }
        regions.push(RelayRegion { id: r, relays, sources });
    }

    Ok(NetworkTopology { regions, coordinator_pos: coord, area, relay_range_m: spec.relay_range_m, radio: spec.radio })
}

fn describe(id: NodeId, label: Option<&str>) -> String {
    match label {
        Some(l) => format!("{id} ('{l}')"),
        None => id.to_string(),
    }
}

fn check_position(name: &str, p: &Position, area: &Area) -> Result<()> {
    if !(p.x.is_finite() && p.y.is_finite()) {
        return Err(Error::Topology { node: name.into(), reason: "non-finite coordinate".into() });
    }
    if !area.contains(p) {
        return Err(Error::Topology {
            node: name.into(),
            reason: format!("position ({}, {}) lies outside the {} x {} m area", p.x, p.y, area.width_m, area.height_m),
        });
    }
    Ok(())
}

/// Three regions (upper body, arm, lower body) of two relays and four
/// sources each on a 1 x 2 m body plane. The coordinator sits on the right
/// hip; most sources are beyond its direct range and the relays lie
/// between them and the coordinator.
pub fn reference_spec() -> TopologySpec {
    let region = |relays: [(f64, f64); 2], sources: [(f64, f64); 4]| RegionSpec {
        relays: relays.iter().map(|&(x, y)| NodeSpec::at(x, y)).collect(),
        sources: sources.iter().map(|&(x, y)| NodeSpec::at(x, y)).collect(),
    };
    TopologySpec {
        area: Area { width_m: 1.0, height_m: 2.0 },
        coordinator: Position::new(0.95, 1.0),
        relay_range_m: 0.6,
        radio: default_radio_params(),
        regions: vec![
            region([(0.45, 1.45), (0.65, 1.3)], [(0.1, 1.9), (0.35, 1.95), (0.15, 1.6), (0.45, 1.8)]),
            region([(0.35, 1.0), (0.55, 0.9)], [(0.0, 1.2), (0.05, 0.85), (0.2, 1.1), (0.1, 0.7)]),
            region([(0.45, 0.55), (0.65, 0.7)], [(0.1, 0.1), (0.35, 0.05), (0.15, 0.4), (0.45, 0.2)]),
        ],
    }
}

/// Layout of the three-region worked example: sources labelled 1..4 in the
/// first region, A..D in the second and a..d in the third.
pub fn example_spec() -> TopologySpec {
    let labelled = |pts: [(f64, f64); 4], labels: [&str; 4]| -> Vec<NodeSpec> {
        pts.iter().zip(labels).map(|(&(x, y), l)| NodeSpec::labelled(x, y, l)).collect()
    };
    TopologySpec {
        area: Area { width_m: 1.0, height_m: 2.0 },
        coordinator: Position::new(0.5, 1.0),
        relay_range_m: 0.5,
        radio: default_radio_params(),
        regions: vec![
            RegionSpec {
                relays: vec![NodeSpec::at(0.3, 1.5), NodeSpec::at(0.4, 1.35)],
                sources: labelled([(0.1, 1.7), (0.45, 1.2), (0.2, 1.3), (0.5, 1.45)], ["1", "2", "3", "4"]),
            },
            RegionSpec {
                relays: vec![NodeSpec::at(0.7, 1.3), NodeSpec::at(0.75, 1.1)],
                sources: labelled([(0.9, 1.5), (0.95, 1.2), (0.7, 0.95), (0.55, 1.3)], ["A", "B", "C", "D"]),
            },
            RegionSpec {
                relays: vec![NodeSpec::at(0.45, 0.8), NodeSpec::at(0.3, 0.7)],
                sources: labelled([(0.2, 0.5), (0.45, 0.45), (0.7, 0.6), (0.5, 1.05)], ["a", "b", "c", "d"]),
            },
        ],
    }
}

/// Random layout for stress testing: each region is a relay pair with its
/// sources scattered within `relay_range_m` of the first relay.
pub fn random_spec<R: Rng + ?Sized>(
    rng: &mut R,
    regions: std::ops::RangeInclusive<usize>,
    sources: std::ops::RangeInclusive<usize>,
) -> TopologySpec {
    let area = Area { width_m: 1.0, height_m: 2.0 };
    let relay_range_m = 0.5;
    let n_regions = rng.random_range(regions);
    let mut out = Vec::with_capacity(n_regions);
    for _ in 0..n_regions {
        let anchor = Position::new(rng.random_range(0.0..=area.width_m), rng.random_range(0.0..=area.height_m));
        let scatter = |rng: &mut R| loop {
            let r = relay_range_m * rng.random::<f64>().sqrt();
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            let p = Position::new(anchor.x + r * a.cos(), anchor.y + r * a.sin());
            if area.contains(&p) && p.distance(&anchor) > 1e-3 {
                return NodeSpec::at(p.x, p.y);
            }
        };
        let second_relay = scatter(rng);
        let n_src = rng.random_range(sources.clone());
        let srcs = (0..n_src).map(|_| scatter(rng)).collect();
        out.push(RegionSpec { relays: vec![NodeSpec::at(anchor.x, anchor.y), second_relay], sources: srcs });
    }
    TopologySpec {
        area,
        coordinator: Position::new(area.width_m / 2.0, area.height_m / 2.0),
        relay_range_m,
        radio: default_radio_params(),
        regions: out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn reference_layout_counts() {
        let t = build_topology(&reference_spec()).unwrap();
        assert_eq!(t.num_regions(), 3);
        assert_eq!(t.num_sources(), 12);
        assert_eq!(t.num_relays(), 6);
    }

    #[test]
    fn single_source_on_its_relay_is_valid() {
        let spec = TopologySpec {
            area: Area { width_m: 1.0, height_m: 1.0 },
            coordinator: Position::new(0.0, 0.0),
            relay_range_m: 0.5,
            radio: default_radio_params(),
            regions: vec![RegionSpec { relays: vec![NodeSpec::at(0.5, 0.5)], sources: vec![NodeSpec::at(0.5, 0.5)] }],
        };
        let t = build_topology(&spec).unwrap();
        assert_eq!(t.num_sources(), 1);
    }

    #[test]
    fn out_of_range_source_is_named() {
        let spec = TopologySpec {
            area: Area { width_m: 10.0, height_m: 10.0 },
            coordinator: Position::new(0.0, 0.0),
            relay_range_m: 0.5,
            radio: default_radio_params(),
            regions: vec![RegionSpec {
                relays: vec![NodeSpec::at(1.0, 1.0)],
                sources: vec![NodeSpec::at(1.2, 1.0), NodeSpec::labelled(6.0, 1.0, "far")],
            }],
        };
        let err = build_topology(&spec).unwrap_err().to_string();
        assert!(err.contains("s0.1") && err.contains("far"), "{err}");
    }

    #[test]
    fn position_outside_area_rejected() {
        let mut spec = reference_spec();
        spec.regions[1].sources[2].x = 1.5;
        let err = build_topology(&spec).unwrap_err().to_string();
        assert!(err.contains("s1.2"), "{err}");
    }

    #[test]
    fn duplicate_label_rejected() {
        let mut spec = example_spec();
        spec.regions[1].sources[1].label = Some("A".into());
        let err = build_topology(&spec).unwrap_err().to_string();
        assert!(err.contains("duplicate label 'A'"), "{err}");
    }

    #[test]
    fn empty_region_rejected() {
        let mut spec = reference_spec();
        spec.regions[2].sources.clear();
        assert!(matches!(build_topology(&spec), Err(Error::Topology { .. })));
        let mut spec = reference_spec();
        spec.regions[0].relays.clear();
        assert!(matches!(build_topology(&spec), Err(Error::Topology { .. })));
    }

    #[test]
    fn non_finite_coordinate_rejected() {
        let mut spec = reference_spec();
        spec.regions[0].sources[0].y = f64::NAN;
        assert!(build_topology(&spec).is_err());
    }

    #[test]
    fn default_radio_matches_parameter_table() {
        let r = default_radio_params();
        assert_eq!(r.tx_power_dbm, -10.0);
        assert_eq!(r.sensitivity_dbm, -84.7);
        assert_eq!(r.noise_floor_dbm, -102.0);
        assert_eq!(r.data_rate_bps, 250_000.0);
        assert_eq!(r.base_frequency_hz, 2.4e9);
        assert_eq!(r.path_loss_exponent, 4.22);
        assert_eq!(r.num_subchannels, 8);
        assert_eq!(r.ref_distance_m, 0.1);
        assert!(r.sensitivity_dbm > r.noise_floor_dbm);
        assert!(r.path_loss_exponent > 0.0);
        r.validate().unwrap();
    }

    #[test]
    fn radio_invariants_enforced() {
        let mut r = default_radio_params();
        r.sensitivity_dbm = -110.0;
        assert!(r.validate().is_err());
        let mut r = default_radio_params();
        r.num_subchannels = 0;
        assert!(r.validate().is_err());
        let mut r = default_radio_params();
        r.delta_thr_db = -1.0;
        assert!(r.validate().is_err());
        let mut r = default_radio_params();
        r.delta_thr_db = f64::INFINITY;
        assert!(r.validate().is_ok());
    }

    #[test]
    fn build_is_deterministic() {
        let a = build_topology(&example_spec()).unwrap();
        let b = build_topology(&example_spec()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn every_node_resolves_once() {
        let t = build_topology(&reference_spec()).unwrap();
        for r in &t.regions {
            for n in r.relays.iter().chain(&r.sources) {
                assert_eq!(t.node(n.id).unwrap(), n);
            }
        }
        assert!(t.node(NodeId::source(0, 4)).is_err());
        assert!(t.node(NodeId::relay(3, 0)).is_err());
        assert_eq!(t.position(NodeId::coordinator()).unwrap(), t.coordinator_pos);
    }

    #[test]
    fn random_layouts_validate() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let spec = random_spec(&mut rng, 3..=5, 2..=6);
            let t = build_topology(&spec).unwrap();
            assert!((3..=5).contains(&t.num_regions()));
        }
    }

    #[test]
    fn member_label_uses_display_names() {
        let t = build_topology(&example_spec()).unwrap();
        assert_eq!(t.member_label(NodeId::source(1, 3)), "(2,D)");
        assert_eq!(t.member_label(NodeId::source(0, 1)), "(1,2)");
    }
}
