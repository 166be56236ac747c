//! Per-voltage geospatial graph construction: circuit networks, site-group
//! attachment, and MST-plus-add-back edge selection, unioned across circuits.

mod mst;
mod network;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde_json::{json, Value};

pub use mst::{plan_edges, shortest_dist, CandidateEdge, EdgePlan};
pub use network::{attach_site_groups, build_circuit_network, dijkstra, reconstruct_path};

use crate::config::BuildConfig;
use crate::error::{Error, Result};
use crate::model::{
    path_length, CrsKind, GeoEdge, GeoGraph, GeoPoint, GroupId, Kv, LineSegment, SiteGroup,
};

/// Everything recorded about one circuit's edge selection, kept for
/// diagnostics and post-hoc verification of the selection predicate.
#[derive(Debug, Clone)]
pub struct CircuitTrace {
    pub circuit_id: String,
    pub voltage: Kv,
    /// Attached group ids, ascending; candidate endpoints index into this.
    pub node_ids: Vec<GroupId>,
    /// Complete-graph candidates (reachable pairs only), weighted by
    /// along-network shortest-path length.
    pub candidates: Vec<CandidateEdge>,
    pub plan: EdgePlan,
    /// Attachment pairs with no network path between them.
    pub disconnected_pairs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildReportRow {
    pub voltage: Kv,
    pub node_count: usize,
    pub edge_count: usize,
    pub built_length_m: f64,
    pub total_length_m: f64,
    pub coverage_percent: f64,
    pub disconnected_pairs: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildReport {
    pub rows: Vec<BuildReportRow>,
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub graphs: BTreeMap<Kv, GeoGraph>,
    pub report: BuildReport,
    pub traces: Vec<CircuitTrace>,
}

struct CircuitResult {
    attached: Vec<GroupId>,
    edges: Vec<GeoEdge>,
    trace: CircuitTrace,
    used_length_m: f64,
}

/// Run the per-voltage pipeline over every level in `cfg.voltage_levels`.
pub fn build_all(
    groups: &[SiteGroup],
    segments: &[LineSegment],
    cfg: &BuildConfig,
    crs: CrsKind,
) -> BuildOutput {
    let mut graphs = BTreeMap::new();
    let mut report = BuildReport::default();
    let mut traces = Vec::new();
    for &kv in &cfg.voltage_levels {
        let (graph, row, mut level_traces) = build_level(groups, segments, kv, cfg, crs);
        graphs.insert(kv, graph);
        report.rows.push(row);
        traces.append(&mut level_traces);
    }
    BuildOutput {
        graphs,
        report,
        traces,
    }
}

fn build_level(
    groups: &[SiteGroup],
    segments: &[LineSegment],
    voltage: Kv,
    cfg: &BuildConfig,
    crs: CrsKind,
) -> (GeoGraph, BuildReportRow, Vec<CircuitTrace>) {
    let at_level: Vec<&LineSegment> = segments.iter().filter(|s| s.voltage == voltage).collect();
    let total_length_m: f64 = at_level
        .iter()
        .map(|s| path_length(&s.vertices, crs).unwrap_or(0.0))
        .sum();

    let mut circuits: BTreeMap<&str, Vec<&LineSegment>> = BTreeMap::new();
    for seg in &at_level {
        if let Some(cid) = &seg.circuit_id {
            circuits.entry(cid).or_default().push(seg);
        }
    }
    let circuit_list: Vec<(&str, Vec<&LineSegment>)> = circuits.into_iter().collect();

    let results: Vec<CircuitResult> = circuit_list
        .par_iter()
        .map(|(cid, segs)| build_circuit(cid, voltage, segs, groups, cfg, crs))
        .collect();

    let mut nodes: BTreeSet<GroupId> = BTreeSet::new();
    let mut edges: Vec<GeoEdge> = Vec::new();
    let mut traces = Vec::new();
    let mut built_length_m = 0.0;
    let mut disconnected_pairs = 0;
    for r in results {
        nodes.extend(r.attached);
        edges.extend(r.edges);
        built_length_m += r.used_length_m;
        disconnected_pairs += r.trace.disconnected_pairs;
        traces.push(r.trace);
    }

    let coverage_percent = if total_length_m > 0.0 {
        100.0 * built_length_m / total_length_m
    } else {
        100.0
    };
    let graph = GeoGraph {
        voltage,
        nodes: nodes.into_iter().collect(),
        edges,
    };
    let row = BuildReportRow {
        voltage,
        node_count: graph.nodes.len(),
        edge_count: graph.edges.len(),
        built_length_m,
        total_length_m,
        coverage_percent,
        disconnected_pairs,
    };
    (graph, row, traces)
}

fn build_circuit(
    circuit_id: &str,
    voltage: Kv,
    segs: &[&LineSegment],
    groups: &[SiteGroup],
    cfg: &BuildConfig,
    crs: CrsKind,
) -> CircuitResult {
    let mut net = build_circuit_network(circuit_id, voltage, segs, crs);
    let attachments = attach_site_groups(&mut net, groups, cfg.attach_threshold, crs);
    let node_ids: Vec<GroupId> = attachments.iter().map(|(g, _)| g.clone()).collect();

    let mut trace = CircuitTrace {
        circuit_id: circuit_id.to_string(),
        voltage,
        node_ids: node_ids.clone(),
        candidates: Vec::new(),
        plan: EdgePlan::default(),
        disconnected_pairs: 0,
    };
    if attachments.len() < 2 {
        return CircuitResult {
            attached: node_ids,
            edges: Vec::new(),
            trace,
            used_length_m: 0.0,
        };
    }

    // Along-network shortest paths between all attachment pairs.
    let mut paths: BTreeMap<(usize, usize), (Vec<usize>, Vec<usize>)> = BTreeMap::new();
    for i in 0..attachments.len() {
        let (dist, prev) = dijkstra(&net, attachments[i].1);
        for j in (i + 1)..attachments.len() {
            let target = attachments[j].1;
            if dist[target].is_finite() {
                if let Some(path) = reconstruct_path(&prev, attachments[i].1, target) {
                    trace.candidates.push(CandidateEdge {
                        a: i,
                        b: j,
                        weight: dist[target],
                    });
                    paths.insert((i, j), path);
                    continue;
                }
            }
            trace.disconnected_pairs += 1;
        }
    }

    trace.plan = plan_edges(&trace.node_ids, &trace.candidates);

    let mut edges = Vec::new();
    let mut used_edges: BTreeSet<usize> = BTreeSet::new();
    for idx in trace.plan.chosen() {
        let cand = &trace.candidates[idx];
        let (verts, path_edges) = &paths[&(cand.a, cand.b)];
        let geometry: Vec<GeoPoint> = verts.iter().map(|&v| net.vertices[v]).collect();
        used_edges.extend(path_edges.iter().copied());
        edges.push(GeoEdge {
            from: attachments[cand.a].0.clone(),
            to: attachments[cand.b].0.clone(),
            weight_m: cand.weight,
            circuit_id: circuit_id.to_string(),
            geometry,
        });
    }
    let used_length_m = used_edges.iter().map(|&ei| net.edges[ei].length_m).sum();

    CircuitResult {
        attached: node_ids,
        edges,
        trace,
        used_length_m,
    }
}

/// Re-run the strict shorter-path predicate over a recorded trace; returns
/// an error description if any accepted edge failed it at insertion time or
/// any rejected edge would have passed.
pub fn replay_strict_improvement(trace: &CircuitTrace) -> std::result::Result<(), String> {
    let n = trace.node_ids.len();
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &idx in &trace.plan.mst {
        let e = &trace.candidates[idx];
        adjacency[e.a].push((e.b, e.weight));
        adjacency[e.b].push((e.a, e.weight));
    }
    let chosen: BTreeSet<usize> = trace.plan.chosen().into_iter().collect();
    let mut pruned: Vec<usize> = (0..trace.candidates.len())
        .filter(|i| !trace.plan.mst.contains(i))
        .collect();
    pruned.sort_by(|&x, &y| {
        let (ex, ey) = (&trace.candidates[x], &trace.candidates[y]);
        ex.weight.total_cmp(&ey.weight).then_with(|| {
            (&trace.node_ids[ex.a], &trace.node_ids[ex.b])
                .cmp(&(&trace.node_ids[ey.a], &trace.node_ids[ey.b]))
        })
    });
    for idx in pruned {
        let e = &trace.candidates[idx];
        let through = shortest_dist(&adjacency, e.a, e.b);
        let accepted = chosen.contains(&idx);
        if accepted && e.weight >= through {
            return Err(format!(
                "circuit {}: accepted edge {}-{} ({}) not strictly shorter than path {}",
                trace.circuit_id,
                trace.node_ids[e.a],
                trace.node_ids[e.b],
                e.weight,
                through
            ));
        }
        if !accepted && e.weight < through {
            return Err(format!(
                "circuit {}: pruned edge {}-{} ({}) beat the path {}",
                trace.circuit_id,
                trace.node_ids[e.a],
                trace.node_ids[e.b],
                e.weight,
                through
            ));
        }
        if accepted {
            adjacency[e.a].push((e.b, e.weight));
            adjacency[e.b].push((e.a, e.weight));
        }
    }
    Ok(())
}

/// Serialize a geo graph as GeoJSON: nodes as Point features, edges as
/// LineStrings. Node coordinates come from the group centroids.
pub fn geo_graph_to_geojson(graph: &GeoGraph, groups: &[SiteGroup]) -> Value {
    let by_id: BTreeMap<&str, &SiteGroup> =
        groups.iter().map(|g| (g.id.as_str(), g)).collect();
    let mut features = Vec::new();
    for node in &graph.nodes {
        let g = by_id.get(node.as_str());
        let coords = g.map_or(vec![0.0, 0.0], |g| vec![g.location.x, g.location.y]);
        features.push(json!({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": coords},
            "properties": {
                "group_id": node,
                "kv_min": g.map(|g| g.kv_min.0),
                "kv_max": g.map(|g| g.kv_max.0),
            }
        }));
    }
    for e in &graph.edges {
        let coords: Vec<Vec<f64>> = e.geometry.iter().map(|p| vec![p.x, p.y]).collect();
        features.push(json!({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": coords},
            "properties": {
                "from": e.from,
                "to": e.to,
                "weight_m": e.weight_m,
                "circuit_id": e.circuit_id,
            }
        }));
    }
    json!({
        "type": "FeatureCollection",
        "voltage": graph.voltage.0,
        "features": features,
    })
}

/// Parse a geo graph back from its GeoJSON form.
pub fn geo_graph_from_geojson(value: &Value) -> Result<GeoGraph> {
    let voltage = value
        .get("voltage")
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::Parse("geo graph: voltage".into()))?;
    let features = value
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse("geo graph: features".into()))?;
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for f in features {
        let props = f
            .get("properties")
            .ok_or_else(|| Error::Parse("geo graph: properties".into()))?;
        let gtype = f
            .get("geometry")
            .and_then(|g| g.get("type"))
            .and_then(Value::as_str);
        match gtype {
            Some("Point") => {
                let id = props
                    .get("group_id")
                    .and_then(Value::as_str)
                    .ok_or_else(|| Error::Parse("geo graph: group_id".into()))?;
                nodes.push(id.to_string());
            }
            Some("LineString") => {
                let coords = f
                    .get("geometry")
                    .and_then(|g| g.get("coordinates"))
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Parse("geo graph: coordinates".into()))?;
                let geometry: Vec<GeoPoint> = coords
                    .iter()
                    .map(|c| {
                        let a = c.as_array().ok_or_else(|| {
                            Error::Parse("geo graph: coordinates".into())
                        })?;
                        Ok(GeoPoint::new(
                            a[0].as_f64().unwrap_or(0.0),
                            a[1].as_f64().unwrap_or(0.0),
                        ))
                    })
                    .collect::<Result<_>>()?;
                edges.push(GeoEdge {
                    from: props
                        .get("from")
                        .and_then(Value::as_str)
                        .ok_or_else(|| Error::Parse("geo graph: from".into()))?
                        .to_string(),
                    to: props
                        .get("to")
                        .and_then(Value::as_str)
                        .ok_or_else(|| Error::Parse("geo graph: to".into()))?
                        .to_string(),
                    weight_m: props
                        .get("weight_m")
                        .and_then(Value::as_f64)
                        .ok_or_else(|| Error::Parse("geo graph: weight_m".into()))?,
                    circuit_id: props
                        .get("circuit_id")
                        .and_then(Value::as_str)
                        .unwrap_or_default()
                        .to_string(),
                    geometry,
                });
            }
            _ => return Err(Error::Parse("geo graph: geometry".into())),
        }
    }
    nodes.sort();
    Ok(GeoGraph {
        voltage: Kv(voltage),
        nodes,
        edges,
    })
}
