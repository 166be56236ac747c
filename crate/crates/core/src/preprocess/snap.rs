//! Vertex snapping: density-reachability clustering of segment vertices per
//! (circuit, voltage) stratum, each cluster collapsed to its centroid.
//!
//! With min_pts = 1 the clustering degenerates to eps-radius connected
//! components, which is exactly the snapping semantics wanted: no vertex is
//! ever noise, and chains of close vertices collapse together. Strata keep
//! circuits separate so overlapping lines on different circuits are never
//! fused. Segments with a Missing circuit id pass through untouched; they
//! are excluded from graph building anyway.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::config::SnapConfig;
use crate::model::{distance_m, CrsKind, GeoPoint, Kv, LineSegment};

pub fn snap_vertices(
    segments: &[LineSegment],
    cfg: &SnapConfig,
    crs: CrsKind,
) -> Vec<LineSegment> {
    let mut strata: BTreeMap<(String, Kv), Vec<usize>> = BTreeMap::new();
    for (i, seg) in segments.iter().enumerate() {
        if let Some(cid) = &seg.circuit_id {
            strata
                .entry((cid.clone(), seg.voltage))
                .or_default()
                .push(i);
        }
    }

    let stratum_list: Vec<Vec<usize>> = strata.into_values().collect();
    let snapped: Vec<Vec<(usize, Option<LineSegment>)>> = stratum_list
        .par_iter()
        .map(|indices| snap_stratum(segments, indices, cfg.eps, crs))
        .collect();

    let mut out: Vec<Option<LineSegment>> = segments
        .iter()
        .map(|s| {
            if s.circuit_id.is_none() {
                Some(s.clone())
            } else {
                None
            }
        })
        .collect();
    for stratum in snapped {
        for (idx, seg) in stratum {
            out[idx] = seg;
        }
    }
    out.into_iter().flatten().collect()
}

/// Snap one stratum; returns (original index, segment or None-if-dropped).
fn snap_stratum(
    segments: &[LineSegment],
    indices: &[usize],
    eps: f64,
    crs: CrsKind,
) -> Vec<(usize, Option<LineSegment>)> {
    let mut points: Vec<GeoPoint> = Vec::new();
    let mut owners: Vec<(usize, usize)> = Vec::new(); // (segment index, vertex index)
    for &i in indices {
        for (vi, &p) in segments[i].vertices.iter().enumerate() {
            points.push(p);
            owners.push((i, vi));
        }
    }

    let labels = chain_clusters(&points, eps, crs);
    let n_clusters = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut sum = vec![(0.0f64, 0.0f64, 0usize); n_clusters];
    for (p, &l) in points.iter().zip(&labels) {
        sum[l].0 += p.x;
        sum[l].1 += p.y;
        sum[l].2 += 1;
    }
    let centroids: Vec<GeoPoint> = sum
        .iter()
        .map(|&(x, y, c)| GeoPoint::new(x / c as f64, y / c as f64))
        .collect();

    let mut by_point: BTreeMap<(usize, usize), GeoPoint> = BTreeMap::new();
    for (k, &(si, vi)) in owners.iter().enumerate() {
        by_point.insert((si, vi), centroids[labels[k]]);
    }

    indices
        .iter()
        .map(|&i| {
            let mut verts: Vec<GeoPoint> = Vec::with_capacity(segments[i].vertices.len());
            for vi in 0..segments[i].vertices.len() {
                let p = by_point[&(i, vi)];
                if verts.last() != Some(&p) {
                    verts.push(p);
                }
            }
            if verts.len() < 2 {
                // Collapsed to a point: zero-length segment, dropped.
                (i, None)
            } else {
                let mut seg = segments[i].clone();
                seg.vertices = verts;
                (i, Some(seg))
            }
        })
        .collect()
}

/// Connected components of the "within eps" graph (density reachability
/// with min_pts = 1).
fn chain_clusters(points: &[GeoPoint], eps: f64, crs: CrsKind) -> Vec<usize> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if distance_m(points[i], points[j], crs) <= eps {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut labels = vec![usize::MAX; n];
    let mut next = 0usize;
    for i in 0..n {
        let r = find(&mut parent, i);
        if labels[r] == usize::MAX {
            labels[r] = next;
            next += 1;
        }
        labels[i] = labels[r];
    }
    labels
}
