//! Shared domain types: geometry primitives, geospatial records, the power
//! model, and the graph/mapping structures every stage exchanges.
//!
//! All types are immutable after construction and safe to share across
//! threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius in meters, used for great-circle distances.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Coordinate reference flavor of a dataset. All points in one dataset share
/// one kind; there is no reprojection engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrsKind {
    /// Degrees longitude/latitude; distances are great-circle.
    Geographic,
    /// Planar meters; distances are Euclidean.
    Projected,
}

/// A coordinate pair. `x` is longitude or easting, `y` latitude or northing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub x: f64,
    pub y: f64,
}

impl GeoPoint {
    pub fn new(x: f64, y: f64) -> Self {
        GeoPoint { x, y }
    }
}

/// Great-circle distance between two lon/lat points (haversine).
pub fn haversine_m(a: GeoPoint, b: GeoPoint) -> f64 {
    let (lon1, lat1) = (a.x.to_radians(), a.y.to_radians());
    let (lon2, lat2) = (b.x.to_radians(), b.y.to_radians());
    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Distance in meters between two points under the given CRS.
pub fn distance_m(a: GeoPoint, b: GeoPoint, crs: CrsKind) -> f64 {
    match crs {
        CrsKind::Geographic => haversine_m(a, b),
        CrsKind::Projected => ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt(),
    }
}

/// Length in meters of a polyline with at least two vertices.
pub fn path_length(geometry: &[GeoPoint], crs: CrsKind) -> Result<f64> {
    if geometry.len() < 2 {
        return Err(Error::InvalidGeometry(format!(
            "path needs >= 2 points, got {}",
            geometry.len()
        )));
    }
    Ok(geometry
        .windows(2)
        .map(|w| distance_m(w[0], w[1], crs))
        .sum())
}

/// Planar chart anchored at a point, for metric work (point-to-segment
/// distances, vertex clustering) on geographic data at sub-kilometer scales.
/// For projected data this is the identity.
#[derive(Debug, Clone, Copy)]
pub struct LocalFrame {
    crs: CrsKind,
    anchor: GeoPoint,
    m_per_deg_lat: f64,
    m_per_deg_lon: f64,
}

impl LocalFrame {
    pub fn new(anchor: GeoPoint, crs: CrsKind) -> Self {
        let m_per_deg_lat = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        let m_per_deg_lon = m_per_deg_lat * anchor.y.to_radians().cos();
        LocalFrame {
            crs,
            anchor,
            m_per_deg_lat,
            m_per_deg_lon,
        }
    }

    /// Point to local meters relative to the anchor.
    pub fn to_local(&self, p: GeoPoint) -> (f64, f64) {
        match self.crs {
            CrsKind::Projected => (p.x, p.y),
            CrsKind::Geographic => (
                (p.x - self.anchor.x) * self.m_per_deg_lon,
                (p.y - self.anchor.y) * self.m_per_deg_lat,
            ),
        }
    }

    /// Local meters back to dataset coordinates.
    pub fn from_local(&self, x: f64, y: f64) -> GeoPoint {
        match self.crs {
            CrsKind::Projected => GeoPoint::new(x, y),
            CrsKind::Geographic => GeoPoint::new(
                self.anchor.x + x / self.m_per_deg_lon,
                self.anchor.y + y / self.m_per_deg_lat,
            ),
        }
    }
}

/// Kilovolt value usable as an ordered map key. Comparison is by total
/// ordering of the underlying f64; voltages come from data verbatim.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Kv(pub f64);

impl Kv {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl PartialEq for Kv {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == std::cmp::Ordering::Equal
    }
}
impl Eq for Kv {}
impl PartialOrd for Kv {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Kv {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}
impl std::hash::Hash for Kv {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

impl fmt::Display for Kv {
    /// Whole-number voltages print without a trailing `.0` (`115`, not `115.0`).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.fract() == 0.0 && self.0.abs() < 1e9 {
            write!(f, "{}", self.0 as i64)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

pub type SiteId = String;
pub type GroupId = String;
pub type CircuitId = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SiteType {
    PowerPlant,
    TransmissionCenter,
    SwitchYard,
    Substation,
    Other,
}

impl SiteType {
    pub fn parse(s: &str) -> SiteType {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_uppercase();
        match key.as_str() {
            "POWERPLANT" => SiteType::PowerPlant,
            "TRANSMISSIONCENTER" => SiteType::TransmissionCenter,
            "SWITCHYARD" => SiteType::SwitchYard,
            "SUBSTATION" => SiteType::Substation,
            _ => SiteType::Other,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SiteType::PowerPlant => "PowerPlant",
            SiteType::TransmissionCenter => "TransmissionCenter",
            SiteType::SwitchYard => "SwitchYard",
            SiteType::Substation => "Substation",
            SiteType::Other => "Other",
        }
    }
}

/// A geospatial asset record (footprints reduced to centroids at ingest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub id: SiteId,
    pub name: String,
    pub site_type: SiteType,
    pub kv_min: Kv,
    pub kv_max: Kv,
    pub location: GeoPoint,
    pub zone: Option<String>,
}

/// A cluster of sites presumed to correspond to one electrical location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteGroup {
    /// Lexicographically smallest member site id; stable across runs.
    pub id: GroupId,
    pub member_ids: BTreeSet<SiteId>,
    /// Member names, `|`-joined in member-id order.
    pub name: String,
    pub kv_min: Kv,
    pub kv_max: Kv,
    pub location: GeoPoint,
    pub zone: Option<String>,
}

impl SiteGroup {
    /// Compose a group from member sites. Panics on an empty member list.
    pub fn from_members(members: &[&Site]) -> SiteGroup {
        assert!(!members.is_empty(), "site group needs members");
        let mut ordered: Vec<&&Site> = members.iter().collect();
        ordered.sort_by(|a, b| a.id.cmp(&b.id));
        let name = ordered
            .iter()
            .map(|s| s.name.as_str())
            .collect::<Vec<_>>()
            .join("|");
        let kv_min = ordered.iter().map(|s| s.kv_min).min().unwrap();
        let kv_max = ordered.iter().map(|s| s.kv_max).max().unwrap();
        let n = ordered.len() as f64;
        let location = GeoPoint::new(
            ordered.iter().map(|s| s.location.x).sum::<f64>() / n,
            ordered.iter().map(|s| s.location.y).sum::<f64>() / n,
        );
        // Mode of member zones, ties broken by lexicographic order.
        let mut zone_votes: BTreeMap<&str, usize> = BTreeMap::new();
        for s in &ordered {
            if let Some(z) = &s.zone {
                *zone_votes.entry(z.as_str()).or_insert(0) += 1;
            }
        }
        let zone = zone_votes
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(z, _)| z.to_string());
        SiteGroup {
            id: ordered[0].id.clone(),
            member_ids: ordered.iter().map(|s| s.id.clone()).collect(),
            name,
            kv_min,
            kv_max,
            location,
            zone,
        }
    }
}

/// Raw transmission-line geometry. `circuit_id = None` uniformly encodes the
/// source data's "NONE"/"0"/empty/absent forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSegment {
    pub id: String,
    pub circuit_id: Option<CircuitId>,
    pub voltage: Kv,
    pub vertices: Vec<GeoPoint>,
}

/// Undirected edge of a per-circuit connectivity graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetEdge {
    pub a: usize,
    pub b: usize,
    pub length_m: f64,
    pub segment_id: String,
}

/// Endpoint-connectivity graph of one circuit at one voltage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitNetwork {
    pub circuit_id: CircuitId,
    pub voltage: Kv,
    pub vertices: Vec<GeoPoint>,
    pub edges: Vec<NetEdge>,
}

/// Per-voltage geospatial graph: site groups as nodes, transmission-line
/// paths as edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoGraph {
    pub voltage: Kv,
    pub nodes: Vec<GroupId>,
    pub edges: Vec<GeoEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoEdge {
    pub from: GroupId,
    pub to: GroupId,
    pub weight_m: f64,
    pub circuit_id: CircuitId,
    pub geometry: Vec<GeoPoint>,
}

impl GeoGraph {
    /// Distinct neighbor group ids of `node`, sorted.
    pub fn neighbors(&self, node: &str) -> Vec<GroupId> {
        let mut out: BTreeSet<GroupId> = BTreeSet::new();
        for e in &self.edges {
            if e.from == node {
                out.insert(e.to.clone());
            } else if e.to == node {
                out.insert(e.from.clone());
            }
        }
        out.into_iter().collect()
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        self.edges
            .iter()
            .any(|e| (e.from == a && e.to == b) || (e.from == b && e.to == a))
    }
}

/// Power-model bus id (numeric ordering is canonical).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct BusId(pub i64);

impl fmt::Display for BusId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    pub name: String,
    pub kv: Kv,
    pub area: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchKind {
    Line,
    Transformer2W,
    Transformer3WLeg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from_bus: BusId,
    pub to_bus: BusId,
    pub kind: BranchKind,
    pub circuit: String,
}

impl Branch {
    pub fn is_transformer(&self) -> bool {
        matches!(
            self.kind,
            BranchKind::Transformer2W | BranchKind::Transformer3WLeg
        )
    }
}

/// Loaded power model. Star buses are synthetic nodes introduced by
/// three-winding expansion; they carry branches but stay out of per-level
/// graphs and mapping scope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub star_bus_ids: BTreeSet<BusId>,
}

impl PowerModel {
    pub fn bus(&self, id: BusId) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn bus_map(&self) -> BTreeMap<BusId, &Bus> {
        self.buses.iter().map(|b| (b.id, b)).collect()
    }

    /// Per-voltage subgraph induced by kv-equality on non-star buses.
    pub fn level_graph(&self, kv: Kv) -> PowerGraph {
        let nodes: Vec<BusId> = self
            .buses
            .iter()
            .filter(|b| b.kv == kv && !self.star_bus_ids.contains(&b.id))
            .map(|b| b.id)
            .collect();
        let node_set: BTreeSet<BusId> = nodes.iter().copied().collect();
        let edges: Vec<Branch> = self
            .branches
            .iter()
            .filter(|br| node_set.contains(&br.from_bus) && node_set.contains(&br.to_bus))
            .cloned()
            .collect();
        PowerGraph {
            voltage: kv,
            nodes,
            edges,
        }
    }
}

/// Per-voltage power graph: buses at one kv and the branches among them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerGraph {
    pub voltage: Kv,
    pub nodes: Vec<BusId>,
    pub edges: Vec<Branch>,
}

impl PowerGraph {
    pub fn neighbors(&self, bus: BusId) -> Vec<BusId> {
        let mut out: BTreeSet<BusId> = BTreeSet::new();
        for e in &self.edges {
            if e.from_bus == bus {
                out.insert(e.to_bus);
            } else if e.to_bus == bus {
                out.insert(e.from_bus);
            }
        }
        out.into_iter().collect()
    }
}

/// How a bus received its site-group assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MappingOrigin {
    NameSeed,
    Inherited,
    Topology,
    Arbitrary,
}

impl MappingOrigin {
    pub fn as_str(&self) -> &'static str {
        match self {
            MappingOrigin::NameSeed => "NameSeed",
            MappingOrigin::Inherited => "Inherited",
            MappingOrigin::Topology => "Topology",
            MappingOrigin::Arbitrary => "Arbitrary",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappedSite {
    pub group_id: GroupId,
    pub score: f64,
    pub origin: MappingOrigin,
}

/// One bus's assignment; `mapped = None` means unmapped (score 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingEntry {
    pub bus_id: BusId,
    pub mapped: Option<MappedSite>,
}

impl MappingEntry {
    pub fn score(&self) -> f64 {
        self.mapped.as_ref().map_or(0.0, |m| m.score)
    }
}

/// One entry per bus in scope; many buses may share one site group.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MappingTable {
    entries: BTreeMap<BusId, MappingEntry>,
}

impl MappingTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, entry: MappingEntry) {
        self.entries.insert(entry.bus_id, entry);
    }

    pub fn get(&self, bus: BusId) -> Option<&MappingEntry> {
        self.entries.get(&bus)
    }

    pub fn mapped_group(&self, bus: BusId) -> Option<&MappedSite> {
        self.entries.get(&bus).and_then(|e| e.mapped.as_ref())
    }

    pub fn is_mapped(&self, bus: BusId) -> bool {
        self.mapped_group(bus).is_some()
    }

    pub fn entries(&self) -> impl Iterator<Item = &MappingEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Bus-by-group similarity scores in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub rows: Vec<BusId>,
    pub cols: Vec<GroupId>,
    /// Row-major: `values[i * cols.len() + j]`.
    pub values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols.len() + j]
    }
}

/// Working pool of scored mapping candidates accumulated across seeds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidatePool {
    /// Keyed by (bus, group); `checkin_count == seed_origins.len()`.
    pub rows: BTreeMap<(BusId, GroupId), CandidateRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRow {
    pub score: f64,
    pub seed_origins: BTreeSet<BusId>,
}

impl CandidatePool {
    /// Record a proposal from `seed`. Re-proposals by the same seed do not
    /// raise the check-in count; the best score seen is kept.
    pub fn check_in(&mut self, bus: BusId, group: GroupId, score: f64, seed: BusId) {
        let row = self
            .rows
            .entry((bus, group))
            .or_insert_with(|| CandidateRow {
                score,
                seed_origins: BTreeSet::new(),
            });
        if score > row.score {
            row.score = score;
        }
        row.seed_origins.insert(seed);
    }

    pub fn checkin_count(&self, bus: BusId, group: &str) -> usize {
        self.rows
            .get(&(bus, group.to_string()))
            .map_or(0, |r| r.seed_origins.len())
    }
}
