//! Circuit network assembly and site-group attachment.

use std::collections::{BinaryHeap, BTreeMap};

use crate::model::{
    distance_m, CircuitNetwork, CrsKind, GeoPoint, Kv, LineSegment, LocalFrame, NetEdge,
    SiteGroup,
};

/// Attachment points coinciding with an existing vertex within this many
/// meters reuse the vertex instead of splitting an edge.
const VERTEX_REUSE_TOL_M: f64 = 1e-6;

/// Build the endpoint-connectivity graph for one circuit's segments.
/// Vertices are deduplicated by exact coordinate equality (vertices are
/// snapped beforehand); each consecutive vertex pair of a segment becomes
/// one undirected edge weighted by its length.
pub fn build_circuit_network(
    circuit_id: &str,
    voltage: Kv,
    segments: &[&LineSegment],
    crs: CrsKind,
) -> CircuitNetwork {
    let mut vertices: Vec<GeoPoint> = Vec::new();
    let mut index: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    let mut edges: Vec<NetEdge> = Vec::new();
    for seg in segments {
        let mut prev: Option<usize> = None;
        for &p in &seg.vertices {
            let key = (p.x.to_bits(), p.y.to_bits());
            let vi = *index.entry(key).or_insert_with(|| {
                vertices.push(p);
                vertices.len() - 1
            });
            if let Some(pv) = prev {
                if pv != vi {
                    edges.push(NetEdge {
                        a: pv,
                        b: vi,
                        length_m: distance_m(vertices[pv], vertices[vi], crs),
                        segment_id: seg.id.clone(),
                    });
                }
            }
            prev = Some(vi);
        }
    }
    CircuitNetwork {
        circuit_id: circuit_id.to_string(),
        voltage,
        vertices,
        edges,
    }
}

/// Connect qualifying site groups to the network: the group's voltage range
/// must contain the line voltage and its centroid must lie within
/// `attach_threshold` meters of some edge. The centroid projects onto the
/// nearest edge, splitting it at the projection. Returns (group id, vertex).
pub fn attach_site_groups(
    network: &mut CircuitNetwork,
    groups: &[SiteGroup],
    attach_threshold: f64,
    crs: CrsKind,
) -> Vec<(String, usize)> {
    let mut ordered: Vec<&SiteGroup> = groups.iter().collect();
    ordered.sort_by(|a, b| a.id.cmp(&b.id));

    let mut attachments = Vec::new();
    for group in ordered {
        if !(group.kv_min <= network.voltage && network.voltage <= group.kv_max) {
            continue;
        }
        let frame = LocalFrame::new(group.location, crs);
        let (px, py) = frame.to_local(group.location);
        let mut best: Option<(f64, usize, GeoPoint)> = None;
        for (ei, e) in network.edges.iter().enumerate() {
            let (ax, ay) = frame.to_local(network.vertices[e.a]);
            let (bx, by) = frame.to_local(network.vertices[e.b]);
            let (d, t) = point_segment(px, py, ax, ay, bx, by);
            if best.as_ref().map_or(true, |(bd, _, _)| d < *bd) {
                let proj = frame.from_local(ax + t * (bx - ax), ay + t * (by - ay));
                best = Some((d, ei, proj));
            }
        }
        let (dist, edge_idx, proj) = match best {
            Some(b) => b,
            None => continue,
        };
        if dist > attach_threshold {
            continue;
        }
        let vertex = insert_projection(network, edge_idx, proj, crs);
        attachments.push((group.id.clone(), vertex));
    }
    attachments
}

/// Distance and clamped parameter of the projection of p onto segment ab,
/// all in local meters.
fn point_segment(px: f64, py: f64, ax: f64, ay: f64, bx: f64, by: f64) -> (f64, f64) {
    let (dx, dy) = (bx - ax, by - ay);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((px - ax) * dx + (py - ay) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (ax + t * dx, ay + t * dy);
    ((px - cx).hypot(py - cy), t)
}

fn insert_projection(
    network: &mut CircuitNetwork,
    edge_idx: usize,
    proj: GeoPoint,
    crs: CrsKind,
) -> usize {
    let edge = network.edges[edge_idx].clone();
    for end in [edge.a, edge.b] {
        if distance_m(network.vertices[end], proj, crs) <= VERTEX_REUSE_TOL_M {
            return end;
        }
    }
    network.vertices.push(proj);
    let vi = network.vertices.len() - 1;
    let first = NetEdge {
        a: edge.a,
        b: vi,
        length_m: distance_m(network.vertices[edge.a], proj, crs),
        segment_id: edge.segment_id.clone(),
    };
    let second = NetEdge {
        a: vi,
        b: edge.b,
        length_m: distance_m(proj, network.vertices[edge.b], crs),
        segment_id: edge.segment_id.clone(),
    };
    network.edges[edge_idx] = first;
    network.edges.push(second);
    vi
}

/// Shortest-path tree from `source` over the network. Returns per-vertex
/// distance and the (vertex, edge index) predecessor pair for path
/// reconstruction.
pub fn dijkstra(
    network: &CircuitNetwork,
    source: usize,
) -> (Vec<f64>, Vec<Option<(usize, usize)>>) {
    let n = network.vertices.len();
    let mut adjacency: Vec<Vec<(usize, f64, usize)>> = vec![Vec::new(); n];
    for (ei, e) in network.edges.iter().enumerate() {
        adjacency[e.a].push((e.b, e.length_m, ei));
        adjacency[e.b].push((e.a, e.length_m, ei));
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
    dist[source] = 0.0;
    let mut heap: BinaryHeap<std::cmp::Reverse<(u64, usize)>> = BinaryHeap::new();
    heap.push(std::cmp::Reverse((0u64, source)));
    while let Some(std::cmp::Reverse((dbits, u))) = heap.pop() {
        let du = f64::from_bits(dbits);
        if du > dist[u] {
            continue;
        }
        for &(v, w, ei) in &adjacency[u] {
            let nd = du + w;
            // Tie-break on the predecessor vertex keeps paths deterministic.
            if nd < dist[v]
                || (nd == dist[v] && prev[v].map_or(false, |(pu, _)| u < pu))
            {
                dist[v] = nd;
                prev[v] = Some((u, ei));
                heap.push(std::cmp::Reverse((nd.to_bits(), v)));
            }
        }
    }
    (dist, prev)
}

/// Vertex path and traversed edge indices from `source` to `target` given a
/// predecessor map from [`dijkstra`].
pub fn reconstruct_path(
    prev: &[Option<(usize, usize)>],
    source: usize,
    target: usize,
) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut vertices = vec![target];
    let mut edges = Vec::new();
    let mut cur = target;
    while cur != source {
        let (p, ei) = prev[cur]?;
        vertices.push(p);
        edges.push(ei);
        cur = p;
    }
    vertices.reverse();
    edges.reverse();
    Some((vertices, edges))
}
