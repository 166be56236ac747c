//! Circuit-id repair: propagate known ids onto Missing-id segments from
//! touching neighbors, repeatedly, until no more segments can be fixed.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{distance_m, CrsKind, LineSegment};

/// One pass adopts ids simultaneously from the pass-start state, so a chain
/// of k Missing segments resolves in k passes. Returns the repaired segment
/// list (input order preserved) and the count still Missing at fixpoint.
pub fn repair_circuit_ids(
    segments: &[LineSegment],
    eps: f64,
    crs: CrsKind,
) -> (Vec<LineSegment>, usize) {
    let mut segs: Vec<LineSegment> = segments.to_vec();
    loop {
        let adoptions = plan_pass(&segs, eps, crs);
        if adoptions.is_empty() {
            break;
        }
        for (idx, id) in adoptions {
            segs[idx].circuit_id = Some(id);
        }
    }
    let unrepaired = segs.iter().filter(|s| s.circuit_id.is_none()).count();
    (segs, unrepaired)
}

fn endpoints(seg: &LineSegment) -> [crate::model::GeoPoint; 2] {
    [seg.vertices[0], *seg.vertices.last().unwrap()]
}

fn plan_pass(segs: &[LineSegment], eps: f64, crs: CrsKind) -> Vec<(usize, String)> {
    let known: Vec<usize> = (0..segs.len())
        .filter(|&i| segs[i].circuit_id.is_some())
        .collect();
    let mut adoptions = Vec::new();
    for (i, seg) in segs.iter().enumerate() {
        if seg.circuit_id.is_some() {
            continue;
        }
        // Distinct neighbor segments vote once each for their id.
        let mut voters: BTreeSet<usize> = BTreeSet::new();
        for &k in &known {
            let other = &segs[k];
            if other.voltage != seg.voltage {
                continue;
            }
            let touching = endpoints(seg).iter().any(|&p| {
                endpoints(other)
                    .iter()
                    .any(|&q| distance_m(p, q, crs) <= eps)
            });
            if touching {
                voters.insert(k);
            }
        }
        if voters.is_empty() {
            continue;
        }
        let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
        for &k in &voters {
            *votes
                .entry(segs[k].circuit_id.as_deref().unwrap())
                .or_insert(0) += 1;
        }
        // Majority, ties broken by lexicographically smallest id.
        let winner = votes
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(id, _)| id.to_string())
            .unwrap();
        adoptions.push((i, winner));
    }
    adoptions
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GeoPoint, Kv};

    fn seg(id: &str, circuit: Option<&str>, pts: &[(f64, f64)]) -> LineSegment {
        LineSegment {
            id: id.into(),
            circuit_id: circuit.map(String::from),
            voltage: Kv(115.0),
            vertices: pts.iter().map(|&(x, y)| GeoPoint::new(x, y)).collect(),
        }
    }

    #[test]
    fn chain_propagates_over_two_passes() {
        let segs = vec![
            seg("A", Some("37100"), &[(0.0, 0.0), (100.0, 0.0)]),
            seg("B", None, &[(100.0, 0.0), (200.0, 0.0)]),
            seg("C", None, &[(200.0, 0.0), (300.0, 0.0)]),
        ];
        let (out, unrepaired) = repair_circuit_ids(&segs, 10.0, CrsKind::Projected);
        assert_eq!(out[1].circuit_id.as_deref(), Some("37100"));
        assert_eq!(out[2].circuit_id.as_deref(), Some("37100"));
        assert_eq!(unrepaired, 0);
        // One pass alone must not have reached C: verify via a single pass.
        let single = plan_pass(&segs, 10.0, CrsKind::Projected);
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].0, 1);
    }

    #[test]
    fn isolated_segment_stays_missing() {
        let segs = vec![
            seg("A", Some("1"), &[(0.0, 0.0), (10.0, 0.0)]),
            seg("D", None, &[(5000.0, 0.0), (6000.0, 0.0)]),
        ];
        let (out, unrepaired) = repair_circuit_ids(&segs, 10.0, CrsKind::Projected);
        assert!(out[1].circuit_id.is_none());
        assert_eq!(unrepaired, 1);
    }

    #[test]
    fn vote_tie_breaks_lexicographically() {
        let segs = vec![
            seg("A", Some("100"), &[(0.0, 0.0), (100.0, 0.0)]),
            seg("B", None, &[(100.0, 0.0), (200.0, 0.0)]),
            seg("C", Some("200"), &[(200.0, 0.0), (300.0, 0.0)]),
        ];
        let (out, _) = repair_circuit_ids(&segs, 10.0, CrsKind::Projected);
        assert_eq!(out[1].circuit_id.as_deref(), Some("100"));
    }

    #[test]
    fn different_voltage_neighbors_do_not_vote() {
        let mut a = seg("A", Some("1"), &[(0.0, 0.0), (100.0, 0.0)]);
        a.voltage = Kv(230.0);
        let b = seg("B", None, &[(100.0, 0.0), (200.0, 0.0)]);
        let (out, unrepaired) = repair_circuit_ids(&[a, b], 10.0, CrsKind::Projected);
        assert!(out[1].circuit_id.is_none());
        assert_eq!(unrepaired, 1);
    }

    #[test]
    fn fixpoint_leaves_no_repairable_segment() {
        // After return, no Missing segment may have an eps-neighbor with a
        // known id at the same voltage.
        let segs = vec![
            seg("A", Some("9"), &[(0.0, 0.0), (50.0, 0.0)]),
            seg("B", None, &[(52.0, 0.0), (90.0, 0.0)]),
            seg("C", None, &[(500.0, 0.0), (600.0, 0.0)]),
        ];
        let (out, _) = repair_circuit_ids(&segs, 5.0, CrsKind::Projected);
        for s in out.iter().filter(|s| s.circuit_id.is_none()) {
            for o in out.iter().filter(|o| o.circuit_id.is_some()) {
                let near = endpoints(s).iter().any(|&p| {
                    endpoints(o)
                        .iter()
                        .any(|&q| distance_m(p, q, CrsKind::Projected) <= 5.0)
                });
                assert!(!near, "segment {} still repairable", s.id);
            }
        }
    }
}
