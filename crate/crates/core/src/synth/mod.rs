//! Synthetic paired corpora: a power model and matching geospatial datasets
//! with exact ground truth, plus controllable corruption, standing in for
//! proprietary utility data.

mod corrupt;
mod emit;

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub use corrupt::corrupt;
pub use emit::{
    write_corpus, write_lines_geojson, write_power_csvs, write_sites_geojson,
    write_truth_csv, write_zones_geojson,
};

use crate::config::SynthConfig;
use crate::error::{Error, Result};
use crate::eval::GroundTruth;
use crate::ingest::ZonePolygon;
use crate::model::{
    Branch, BranchKind, Bus, BusId, GeoPoint, Kv, LineSegment, LocalFrame, Site, SiteType,
};

/// Sampling box, roughly an island-sized lon/lat extent.
const LON_RANGE: (f64, f64) = (-67.25, -65.60);
const LAT_RANGE: (f64, f64) = (17.93, 18.52);

const ZONE_COLS: usize = 4;
const ZONE_ROWS: usize = 2;
const ZONE_NAMES: [[&str; ZONE_COLS]; ZONE_ROWS] = [
    ["SOUTHWEST", "SOUTH CENTRAL", "SOUTH", "SOUTHEAST"],
    ["NORTHWEST", "NORTH CENTRAL", "NORTH", "NORTHEAST"],
];

#[derive(Debug, Clone, PartialEq)]
pub struct Xfmr3w {
    pub bus1: BusId,
    pub bus2: BusId,
    pub bus3: BusId,
    pub name: String,
}

/// Bookkeeping tying one generated network edge to its power branch and
/// geospatial segments; consumed by the version-drift corruption.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeLink {
    pub voltage: Kv,
    pub branch_index: usize,
    pub segment_ids: Vec<String>,
}

/// A generated corpus: everything the ingest formats carry, plus truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub sites: Vec<Site>,
    pub zones: Vec<ZonePolygon>,
    pub segments: Vec<LineSegment>,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub xfmr3w: Vec<Xfmr3w>,
    pub truth: GroundTruth,
    /// Raw spelling for Missing circuit ids ("NONE", "0", "" or null),
    /// chosen by the corruption pass and honored by the emitter.
    pub missing_forms: BTreeMap<String, String>,
    pub edge_links: Vec<EdgeLink>,
}

/// Generate a deterministic corpus: stations with unique names, nested
/// per-level bus placement, per-level spanning-tree networks (plus mesh
/// extras at 38 kV), transformers linking levels at shared stations, sites
/// co-located with stations, line geometry along edges, and zone rectangles
/// partitioning the plane.
pub fn generate_truth(cfg: &SynthConfig) -> Result<SynthOutput> {
    let mut levels: Vec<(Kv, usize)> = cfg.n_buses.clone();
    levels.sort_by(|a, b| b.0.cmp(&a.0));
    if levels.is_empty() {
        return Err(Error::Config("synth.n_buses: no levels".into()));
    }
    for w in levels.windows(2) {
        if w[0].1 > w[1].1 {
            return Err(Error::Config(format!(
                "synth.n_buses: {} kV count exceeds {} kV count",
                w[0].0, w[1].0
            )));
        }
    }
    let n_stations = levels.last().unwrap().1;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let positions = sample_positions(&mut rng, n_stations, cfg.min_station_sep_m);
    let names = sample_names(&mut rng, n_stations);
    let zones = zone_rectangles();
    let zone_of: Vec<String> = positions.iter().map(|p| zone_name_at(*p)).collect();

    // Buses: level by level, stations 0..n_level (nested prefixes).
    let mut buses: Vec<Bus> = Vec::new();
    let mut bus_of: BTreeMap<(Kv, usize), BusId> = BTreeMap::new();
    let mut next_id: i64 = 1;
    for &(kv, n) in &levels {
        for st in 0..n {
            let id = BusId(next_id);
            next_id += 1;
            buses.push(Bus {
                id,
                name: names[st].clone(),
                kv,
                area: zone_of[st].clone(),
            });
            bus_of.insert((kv, st), id);
        }
    }

    // Sites: one per station; the voltage range spans the hosted levels.
    let mut sites: Vec<Site> = Vec::new();
    for st in 0..n_stations {
        let hosted: Vec<Kv> = levels
            .iter()
            .filter(|&&(_, n)| st < n)
            .map(|&(kv, _)| kv)
            .collect();
        let kv_min = *hosted.iter().min().unwrap();
        let kv_max = *hosted.iter().max().unwrap();
        let site_type = if hosted.len() >= 3 {
            SiteType::TransmissionCenter
        } else {
            match rng.gen_range(0..10) {
                0 => SiteType::SwitchYard,
                1 => SiteType::PowerPlant,
                2 => SiteType::Other,
                _ => SiteType::Substation,
            }
        };
        sites.push(Site {
            id: station_site_id(st),
            name: names[st].clone(),
            site_type,
            kv_min,
            kv_max,
            location: positions[st],
            zone: None,
        });
    }

    // Per-level networks and their line geometry.
    let mut branches: Vec<Branch> = Vec::new();
    let mut segments: Vec<LineSegment> = Vec::new();
    let mut edge_links: Vec<EdgeLink> = Vec::new();
    let mut segment_counter = 0usize;
    for &(kv, n) in &levels {
        let pts = &positions[..n];
        let mut edges = prim_mst(pts);
        let adjacency = adjacency_of(n, &edges);
        let mesh_extra = if kv == Kv(38.0) {
            (cfg.mesh_fraction_38kv * n as f64).round() as usize
        } else {
            0
        };
        let extra_edges = sample_mesh_edges(&mut rng, pts, &adjacency, mesh_extra);

        let circuits = assign_circuits(&mut rng, kv, &edges, &extra_edges);
        edges.extend(extra_edges.iter().copied());

        for (edge_idx, &(a, b)) in edges.iter().enumerate() {
            let circuit_id = circuits[edge_idx].clone();
            let geometry = edge_geometry(&mut rng, positions[a], positions[b]);
            let seg_ids = emit_edge_segments(
                &mut rng,
                &mut segments,
                &mut segment_counter,
                &circuit_id,
                kv,
                &geometry,
            );
            let branch_index = branches.len();
            branches.push(Branch {
                from_bus: bus_of[&(kv, a)],
                to_bus: bus_of[&(kv, b)],
                kind: BranchKind::Line,
                circuit: circuit_id,
            });
            edge_links.push(EdgeLink {
                voltage: kv,
                branch_index,
                segment_ids: seg_ids,
            });
        }
    }

    // Three-winding transformers across the top three levels, round-robin
    // over the stations hosting all three.
    let mut xfmr3w: Vec<Xfmr3w> = Vec::new();
    if levels.len() >= 3 && cfg.xfmr3w_count > 0 {
        let trio = [levels[0].0, levels[1].0, levels[2].0];
        let hosts = levels[0].1;
        if hosts > 0 {
            for unit in 0..cfg.xfmr3w_count {
                let st = unit % hosts;
                xfmr3w.push(Xfmr3w {
                    bus1: bus_of[&(trio[0], st)],
                    bus2: bus_of[&(trio[1], st)],
                    bus3: bus_of[&(trio[2], st)],
                    name: format!("{} T{}", names[st], unit / hosts + 1),
                });
            }
        }
    }

    // Two-winding transformers per configured (hi, lo) pair. Stations
    // carrying a three-winding unit already link their levels, so fill the
    // others first and wrap around for parallel banks.
    let three_w_hosts = if levels.len() >= 3 { levels[0].1 } else { 0 };
    for &(hi, lo, count) in &cfg.xfmr2w {
        let n_hi = match levels.iter().find(|&&(kv, _)| kv == hi) {
            Some(&(_, n)) => n,
            None => continue,
        };
        if !levels.iter().any(|&(kv, _)| kv == lo) || n_hi == 0 {
            continue;
        }
        let mut order: Vec<usize> = (0..n_hi).collect();
        if hi == levels[1].0 && lo == levels[2].0 {
            order.sort_by_key(|&st| (st < three_w_hosts, st));
        }
        for unit in 0..count {
            let st = order[unit % order.len()];
            branches.push(Branch {
                from_bus: bus_of[&(hi, st)],
                to_bus: bus_of[&(lo, st)],
                kind: BranchKind::Transformer2W,
                circuit: String::new(),
            });
        }
    }

    let mut truth = GroundTruth::default();
    for bus in &buses {
        let st = station_of(&bus_of, bus.id).expect("generated bus has a station");
        truth.bus_to_group.insert(bus.id, station_site_id(st));
        truth.mappable.insert(bus.id, true);
    }

    Ok(SynthOutput {
        sites,
        zones,
        segments,
        buses,
        branches,
        xfmr3w,
        truth,
        missing_forms: BTreeMap::new(),
        edge_links,
    })
}

pub(crate) fn station_site_id(st: usize) -> String {
    format!("S{st:05}")
}

fn station_of(bus_of: &BTreeMap<(Kv, usize), BusId>, id: BusId) -> Option<usize> {
    bus_of
        .iter()
        .find(|(_, &bid)| bid == id)
        .map(|((_, st), _)| *st)
}

fn sample_positions(rng: &mut ChaCha8Rng, n: usize, min_sep_m: f64) -> Vec<GeoPoint> {
    let mut out: Vec<GeoPoint> = Vec::with_capacity(n);
    let frame = LocalFrame::new(
        GeoPoint::new(
            (LON_RANGE.0 + LON_RANGE.1) / 2.0,
            (LAT_RANGE.0 + LAT_RANGE.1) / 2.0,
        ),
        crate::model::CrsKind::Geographic,
    );
    // Coarse grid over local meters for the separation check.
    let cell = min_sep_m.max(1.0);
    let mut grid: BTreeMap<(i64, i64), Vec<(f64, f64)>> = BTreeMap::new();
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        if attempts > 200 * n + 10_000 {
            // Separation unsatisfiable at this density; accept the rest.
            let p = GeoPoint::new(
                rng.gen_range(LON_RANGE.0..LON_RANGE.1),
                rng.gen_range(LAT_RANGE.0..LAT_RANGE.1),
            );
            out.push(p);
            continue;
        }
        let p = GeoPoint::new(
            rng.gen_range(LON_RANGE.0..LON_RANGE.1),
            rng.gen_range(LAT_RANGE.0..LAT_RANGE.1),
        );
        let (x, y) = frame.to_local(p);
        let (cx, cy) = ((x / cell).floor() as i64, (y / cell).floor() as i64);
        let mut ok = true;
        'outer: for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(neighbors) = grid.get(&(cx + dx, cy + dy)) {
                    for &(nx, ny) in neighbors {
                        if (nx - x).hypot(ny - y) < min_sep_m {
                            ok = false;
                            break 'outer;
                        }
                    }
                }
            }
        }
        if ok {
            grid.entry((cx, cy)).or_default().push((x, y));
            out.push(p);
        }
    }
    out
}

const CONSONANTS: [&str; 17] = [
    "B", "C", "D", "G", "K", "L", "M", "N", "P", "R", "S", "T", "V", "Z", "CH", "QU", "Y",
];
const VOWELS: [&str; 5] = ["A", "E", "I", "O", "U"];
const NAME_SUFFIXES: [&str; 10] = [
    "JUNCTION", "RIDGE", "VALLEY", "POINT", "MESA", "GROVE", "HARBOR", "SPRING", "HILLS",
    "CREEK",
];

fn sample_names(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.gen_range(2..=4);
        let mut name = String::new();
        for _ in 0..syllables {
            name.push_str(CONSONANTS[rng.gen_range(0..CONSONANTS.len())]);
            name.push_str(VOWELS[rng.gen_range(0..VOWELS.len())]);
        }
        if rng.gen_bool(0.25) {
            name.push(' ');
            name.push_str(NAME_SUFFIXES[rng.gen_range(0..NAME_SUFFIXES.len())]);
        }
        if seen.insert(name.clone()) {
            out.push(name);
        }
    }
    out
}

fn zone_rectangles() -> Vec<ZonePolygon> {
    let (lon0, lon1) = (LON_RANGE.0 - 0.05, LON_RANGE.1 + 0.05);
    let (lat0, lat1) = (LAT_RANGE.0 - 0.05, LAT_RANGE.1 + 0.05);
    let dx = (lon1 - lon0) / ZONE_COLS as f64;
    let dy = (lat1 - lat0) / ZONE_ROWS as f64;
    let mut zones = Vec::new();
    for row in 0..ZONE_ROWS {
        for col in 0..ZONE_COLS {
            let (x0, y0) = (lon0 + col as f64 * dx, lat0 + row as f64 * dy);
            let (x1, y1) = (x0 + dx, y0 + dy);
            zones.push(ZonePolygon {
                zone_name: ZONE_NAMES[row][col].to_string(),
                ring: vec![
                    GeoPoint::new(x0, y0),
                    GeoPoint::new(x1, y0),
                    GeoPoint::new(x1, y1),
                    GeoPoint::new(x0, y1),
                    GeoPoint::new(x0, y0),
                ],
            });
        }
    }
    zones
}

fn zone_name_at(p: GeoPoint) -> String {
    let (lon0, lon1) = (LON_RANGE.0 - 0.05, LON_RANGE.1 + 0.05);
    let (lat0, lat1) = (LAT_RANGE.0 - 0.05, LAT_RANGE.1 + 0.05);
    let col = (((p.x - lon0) / (lon1 - lon0) * ZONE_COLS as f64) as usize).min(ZONE_COLS - 1);
    let row = (((p.y - lat0) / (lat1 - lat0) * ZONE_ROWS as f64) as usize).min(ZONE_ROWS - 1);
    ZONE_NAMES[row][col].to_string()
}

/// O(n^2) Prim over great-circle distances; edges come out (smaller index,
/// larger index) in insertion order.
fn prim_mst(points: &[GeoPoint]) -> Vec<(usize, usize)> {
    let n = points.len();
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best_dist = vec![f64::INFINITY; n];
    let mut best_link = vec![0usize; n];
    in_tree[0] = true;
    for v in 1..n {
        best_dist[v] = crate::model::haversine_m(points[0], points[v]);
    }
    let mut edges = Vec::with_capacity(n - 1);
    for _ in 1..n {
        let mut pick = usize::MAX;
        for v in 0..n {
            if !in_tree[v] && (pick == usize::MAX || best_dist[v] < best_dist[pick]) {
                pick = v;
            }
        }
        let link = best_link[pick];
        edges.push((link.min(pick), link.max(pick)));
        in_tree[pick] = true;
        for v in 0..n {
            if !in_tree[v] {
                let d = crate::model::haversine_m(points[pick], points[v]);
                if d < best_dist[v] {
                    best_dist[v] = d;
                    best_link[v] = pick;
                }
            }
        }
    }
    edges
}

fn adjacency_of(n: usize, edges: &[(usize, usize)]) -> Vec<BTreeSet<usize>> {
    let mut adjacency = vec![BTreeSet::new(); n];
    for &(a, b) in edges {
        adjacency[a].insert(b);
        adjacency[b].insert(a);
    }
    adjacency
}

fn sample_mesh_edges(
    rng: &mut ChaCha8Rng,
    points: &[GeoPoint],
    adjacency: &[BTreeSet<usize>],
    count: usize,
) -> Vec<(usize, usize)> {
    let n = points.len();
    let mut extra: Vec<(usize, usize)> = Vec::new();
    let mut taken: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut guard = 0usize;
    while extra.len() < count && guard < count * 50 + 100 {
        guard += 1;
        let a = rng.gen_range(0..n);
        // Six nearest non-neighbors keep the mesh local and planar-ish.
        let mut near: Vec<(f64, usize)> = (0..n)
            .filter(|&v| v != a && !adjacency[a].contains(&v))
            .map(|v| (crate::model::haversine_m(points[a], points[v]), v))
            .collect();
        near.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        near.truncate(6);
        if near.is_empty() {
            continue;
        }
        let b = near[rng.gen_range(0..near.len())].1;
        let key = (a.min(b), a.max(b));
        if taken.insert(key) {
            extra.push(key);
        }
    }
    extra
}

/// Circuit labels for tree edges (chunked DFS paths of 1..=4 edges) and mesh
/// extras (half join an endpoint's circuit, which can close rings; half get
/// their own).
fn assign_circuits(
    rng: &mut ChaCha8Rng,
    kv: Kv,
    tree_edges: &[(usize, usize)],
    extra_edges: &[(usize, usize)],
) -> Vec<String> {
    let level_digit = match kv.0 as i64 {
        230 => '2',
        115 => '1',
        38 => '3',
        _ => '9',
    };
    let mut counter = 7100usize;
    let fresh = |counter: &mut usize| {
        let id = format!("{level_digit}{:04}", *counter);
        *counter += 1;
        id
    };

    let n = tree_edges
        .iter()
        .chain(extra_edges)
        .map(|&(a, b)| a.max(b) + 1)
        .max()
        .unwrap_or(0);
    let adjacency = adjacency_of(n, tree_edges);
    // DFS edge order: chains of descent become chunkable paths.
    let mut edge_order: Vec<(usize, usize)> = Vec::new();
    let mut visited = vec![false; n];
    for root in 0..n {
        if visited[root] {
            continue;
        }
        let mut stack = vec![(root, None::<usize>)];
        while let Some((v, parent)) = stack.pop() {
            if visited[v] {
                continue;
            }
            visited[v] = true;
            if let Some(p) = parent {
                edge_order.push((p, v));
            }
            for &w in adjacency[v].iter().rev() {
                if !visited[w] {
                    stack.push((w, Some(v)));
                }
            }
        }
    }

    let mut chunk_circuit: BTreeMap<(usize, usize), String> = BTreeMap::new();
    let mut station_circuits: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    let mut current: Option<(usize, String, usize)> = None; // (tail, circuit, len)
    let mut cap = 0usize;
    for &(from, to) in &edge_order {
        let continue_chunk = matches!(&current, Some((tail, _, len)) if *tail == from && *len < cap);
        if !continue_chunk {
            cap = rng.gen_range(1..=4);
            current = Some((from, fresh(&mut counter), 0));
        }
        let (_, circuit, len) = current.take().unwrap();
        chunk_circuit.insert((from.min(to), from.max(to)), circuit.clone());
        station_circuits.entry(from).or_default().push(circuit.clone());
        station_circuits.entry(to).or_default().push(circuit.clone());
        current = Some((to, circuit, len + 1));
    }

    let mut labels: Vec<String> = tree_edges
        .iter()
        .map(|&(a, b)| chunk_circuit[&(a.min(b), a.max(b))].clone())
        .collect();
    for &(a, b) in extra_edges {
        let joined = if rng.gen_bool(0.5) {
            station_circuits
                .get(&a)
                .and_then(|c| c.first().cloned())
                .or_else(|| station_circuits.get(&b).and_then(|c| c.first().cloned()))
        } else {
            None
        };
        let circuit = joined.unwrap_or_else(|| fresh(&mut counter));
        station_circuits.entry(a).or_default().push(circuit.clone());
        station_circuits.entry(b).or_default().push(circuit.clone());
        labels.push(circuit);
    }
    labels
}

/// Polyline for one edge: straight line with one or two perpendicular bends.
fn edge_geometry(rng: &mut ChaCha8Rng, a: GeoPoint, b: GeoPoint) -> Vec<GeoPoint> {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len = dx.hypot(dy);
    if len == 0.0 {
        return vec![a, b];
    }
    let (px, py) = (-dy / len, dx / len);
    let bends = rng.gen_range(1..=2);
    let mut pts = vec![a];
    let ts: &[f64] = if bends == 1 { &[0.5] } else { &[0.33, 0.66] };
    for &t in ts {
        let mag = len * rng.gen_range(0.02..0.06) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        pts.push(GeoPoint::new(
            a.x + dx * t + px * mag,
            a.y + dy * t + py * mag,
        ));
    }
    pts.push(b);
    pts
}

/// Cut the edge polyline into 1..=N chained segments sharing endpoints.
fn emit_edge_segments(
    rng: &mut ChaCha8Rng,
    segments: &mut Vec<LineSegment>,
    counter: &mut usize,
    circuit_id: &str,
    kv: Kv,
    geometry: &[GeoPoint],
) -> Vec<String> {
    let max_cuts = geometry.len() - 1;
    let n_segs = rng.gen_range(1..=max_cuts.min(3));
    // Interior cut positions: evenly chosen among interior vertices.
    let mut cuts: Vec<usize> = Vec::new();
    if n_segs > 1 {
        let interior: Vec<usize> = (1..geometry.len() - 1).collect();
        let step = interior.len() as f64 / n_segs as f64;
        for k in 1..n_segs {
            let idx = interior[((k as f64 * step) as usize).min(interior.len() - 1)];
            if cuts.last() != Some(&idx) {
                cuts.push(idx);
            }
        }
    }
    let mut bounds = vec![0usize];
    bounds.extend(cuts);
    bounds.push(geometry.len() - 1);

    let mut ids = Vec::new();
    for w in bounds.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let id = format!("L{:05}", *counter);
        *counter += 1;
        segments.push(LineSegment {
            id: id.clone(),
            circuit_id: Some(circuit_id.to_string()),
            voltage: kv,
            vertices: geometry[lo..=hi].to_vec(),
        });
        ids.push(id);
    }
    ids
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::CorruptionKnobs;

    fn small_cfg() -> SynthConfig {
        SynthConfig {
            rng_seed: 7,
            n_buses: vec![(Kv(230.0), 3), (Kv(115.0), 6), (Kv(38.0), 20)],
            mesh_fraction_38kv: 0.2,
            xfmr2w: vec![(Kv(230.0), Kv(115.0), 2), (Kv(115.0), Kv(38.0), 5)],
            xfmr3w_count: 4,
            min_station_sep_m: 1000.0,
            corruption: CorruptionKnobs::default(),
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let a = generate_truth(&small_cfg()).unwrap();
        let b = generate_truth(&small_cfg()).unwrap();
        assert_eq!(a, b);
        let mut other = small_cfg();
        other.rng_seed = 8;
        let c = generate_truth(&other).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn default_scale_matches_config() {
        let cfg = SynthConfig::default();
        let out = generate_truth(&cfg).unwrap();
        assert_eq!(out.buses.len(), 1367);
        assert_eq!(out.sites.len(), 1235);
        assert_eq!(out.xfmr3w.len(), 26);
        let xfmr2w = out
            .branches
            .iter()
            .filter(|b| b.kind == BranchKind::Transformer2W)
            .count();
        assert_eq!(xfmr2w, 24 + 131);
    }

    #[test]
    fn zero_mesh_keeps_38kv_a_forest() {
        let mut cfg = small_cfg();
        cfg.mesh_fraction_38kv = 0.0;
        let out = generate_truth(&cfg).unwrap();
        let lines38 = out
            .branches
            .iter()
            .filter(|b| b.kind == BranchKind::Line)
            .filter(|b| {
                out.buses.iter().any(|x| x.id == b.from_bus && x.kv == Kv(38.0))
            })
            .count();
        // A spanning tree over 20 stations.
        assert_eq!(lines38, 19);
    }

    #[test]
    fn truth_covers_every_bus() {
        let out = generate_truth(&small_cfg()).unwrap();
        for bus in &out.buses {
            assert!(out.truth.bus_to_group.contains_key(&bus.id));
            assert_eq!(out.truth.mappable[&bus.id], true);
        }
        // Site ranges span their hosted levels.
        let s0 = &out.sites[0];
        assert_eq!(s0.kv_min, Kv(38.0));
        assert_eq!(s0.kv_max, Kv(230.0));
    }

    #[test]
    fn names_are_unique() {
        let out = generate_truth(&small_cfg()).unwrap();
        let names: BTreeSet<&str> = out.sites.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names.len(), out.sites.len());
    }

    #[test]
    fn segments_chain_along_edges() {
        let out = generate_truth(&small_cfg()).unwrap();
        for link in &out.edge_links {
            let segs: Vec<&LineSegment> = link
                .segment_ids
                .iter()
                .map(|id| out.segments.iter().find(|s| &s.id == id).unwrap())
                .collect();
            for w in segs.windows(2) {
                assert_eq!(w[0].vertices.last(), Some(&w[1].vertices[0]));
            }
            for s in segs {
                assert!(s.vertices.len() >= 2);
            }
        }
    }
}
