//! Bus-to-site-group assignment through fuzzy name matching: bus-name vs
//! group-name similarity merged (elementwise min) with area vs zone
//! similarity, then a per-bus argmax; plus the duplicate-resolution step
//! used inside topology neighborhoods.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::model::{BusId, GroupId, SimilarityMatrix};
use crate::preprocess::lcs_similarity;

/// Geo-graph side of a match: a site group's id, name, and zone.
#[derive(Debug, Clone)]
pub struct GeoNode {
    pub id: GroupId,
    pub name: String,
    pub zone: Option<String>,
}

/// Power side of a match: a bus id, name, and area.
#[derive(Debug, Clone)]
pub struct PsNode {
    pub id: BusId,
    pub name: String,
    pub area: String,
}

#[derive(Debug, Clone)]
pub struct NameMatchOutcome {
    /// min(name similarity, area/zone similarity), the quantity assignments
    /// and seed thresholds are read from.
    pub merged: SimilarityMatrix,
    /// Column choice per row (argmax, ties to the smaller group id).
    pub assignment: Vec<usize>,
    /// Full descending-score column ranking per row; score ties order by
    /// smaller group id.
    pub rankings: Vec<Vec<(usize, f64)>>,
}

impl NameMatchOutcome {
    pub fn assigned_group(&self, row: usize) -> (&GroupId, f64) {
        let col = self.assignment[row];
        (&self.merged.cols[col], self.merged.get(row, col))
    }
}

/// Compute similarity matrices and the per-bus assignment. A group with no
/// zone scores 0 on the area/zone axis for every bus.
pub fn name_matching(geo_nodes: &[GeoNode], ps_nodes: &[PsNode]) -> NameMatchOutcome {
    let rows: Vec<BusId> = ps_nodes.iter().map(|n| n.id).collect();
    let cols: Vec<GroupId> = geo_nodes.iter().map(|n| n.id.clone()).collect();

    // Area/zone pairs repeat heavily; memoize them up front.
    let mut zone_sim: HashMap<(&str, &str), f64> = HashMap::new();
    for ps in ps_nodes {
        for geo in geo_nodes {
            if let Some(z) = &geo.zone {
                zone_sim
                    .entry((ps.area.as_str(), z.as_str()))
                    .or_insert_with(|| lcs_similarity(&ps.area, z));
            }
        }
    }

    let zone_sim = &zone_sim;
    let values: Vec<f64> = ps_nodes
        .par_iter()
        .flat_map_iter(|ps| {
            geo_nodes.iter().map(move |geo| {
                let s_name = lcs_similarity(&ps.name, &geo.name);
                let s_zone = match &geo.zone {
                    Some(z) => zone_sim[&(ps.area.as_str(), z.as_str())],
                    None => 0.0,
                };
                s_name.min(s_zone)
            })
        })
        .collect();

    let merged = SimilarityMatrix { rows, cols, values };
    let assignment = argmax_assignment(&merged);
    let rankings = (0..ps_nodes.len())
        .map(|i| ranked_columns(&merged, i))
        .collect();
    NameMatchOutcome {
        merged,
        assignment,
        rankings,
    }
}

/// Per-row argmax over a similarity matrix, ties broken by the smaller
/// column (group) id. Invariant under strictly increasing transforms of the
/// scores.
pub fn argmax_assignment(matrix: &SimilarityMatrix) -> Vec<usize> {
    (0..matrix.rows.len())
        .map(|i| {
            let mut best = 0usize;
            for j in 1..matrix.cols.len() {
                let (bv, v) = (matrix.get(i, best), matrix.get(i, j));
                if v > bv || (v == bv && matrix.cols[j] < matrix.cols[best]) {
                    best = j;
                }
            }
            best
        })
        .collect()
}

fn ranked_columns(matrix: &SimilarityMatrix, row: usize) -> Vec<(usize, f64)> {
    let mut cols: Vec<(usize, f64)> = (0..matrix.cols.len())
        .map(|j| (j, matrix.get(row, j)))
        .collect();
    cols.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| matrix.cols[a.0].cmp(&matrix.cols[b.0]))
    });
    cols
}

/// Resolve duplicate group assignments within one neighborhood: every group
/// keeps only its highest-scoring bus and displaced buses walk down their
/// rankings; a bus that exhausts its ranking drops out (unmapped within the
/// neighborhood). Returns the per-row column assignment (None = dropped).
pub fn update_duplicates(
    outcome: &NameMatchOutcome,
    max_dup_iters: usize,
) -> Vec<Option<usize>> {
    let n_rows = outcome.merged.rows.len();
    let mut assigned: Vec<Option<usize>> = outcome.assignment.iter().map(|&c| Some(c)).collect();
    // Position of each row's current assignment within its ranking.
    let mut rank_pos: Vec<usize> = (0..n_rows)
        .map(|i| {
            outcome.rankings[i]
                .iter()
                .position(|&(c, _)| c == outcome.assignment[i])
                .unwrap_or(0)
        })
        .collect();

    for _ in 0..max_dup_iters {
        let mut holders: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (row, col) in assigned.iter().enumerate() {
            if let Some(c) = col {
                holders.entry(*c).or_default().push(row);
            }
        }
        let duplicated: Vec<(usize, Vec<usize>)> = holders
            .into_iter()
            .filter(|(_, rows)| rows.len() >= 2)
            .collect();
        if duplicated.is_empty() {
            break;
        }
        for (col, rows) in duplicated {
            // Keep the highest score; ties keep the smaller bus id.
            let winner = *rows
                .iter()
                .max_by(|&&a, &&b| {
                    outcome
                        .merged
                        .get(a, col)
                        .total_cmp(&outcome.merged.get(b, col))
                        .then_with(|| {
                            outcome.merged.rows[b].cmp(&outcome.merged.rows[a])
                        })
                })
                .unwrap();
            for &row in &rows {
                if row == winner {
                    continue;
                }
                assigned[row] = next_free_choice(outcome, &assigned, row, &mut rank_pos);
            }
        }
    }
    assigned
}

/// Advance `row` down its ranking to the first group not held by a
/// higher-scoring bus (for that group).
fn next_free_choice(
    outcome: &NameMatchOutcome,
    assigned: &[Option<usize>],
    row: usize,
    rank_pos: &mut [usize],
) -> Option<usize> {
    let ranking = &outcome.rankings[row];
    let mut pos = rank_pos[row] + 1;
    while pos < ranking.len() {
        let (col, score) = ranking[pos];
        let blocked = assigned.iter().enumerate().any(|(other, &c)| {
            other != row && c == Some(col) && outcome.merged.get(other, col) > score
        });
        if !blocked {
            rank_pos[row] = pos;
            return Some(col);
        }
        pos += 1;
    }
    rank_pos[row] = ranking.len();
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geo(id: &str, name: &str, zone: Option<&str>) -> GeoNode {
        GeoNode {
            id: id.into(),
            name: name.into(),
            zone: zone.map(String::from),
        }
    }

    fn ps(id: i64, name: &str, area: &str) -> PsNode {
        PsNode {
            id: BusId(id),
            name: name.into(),
            area: area.into(),
        }
    }

    #[test]
    fn merges_with_the_worse_score() {
        // Bus "CANA 115" in NORTE: name sim to CANA is ~0.667, zone sim 1.0;
        // merged takes the min.
        let geo_nodes = vec![
            geo("G1", "CANA", Some("NORTE")),
            geo("G2", "PONCE", Some("SUR")),
        ];
        let ps_nodes = vec![ps(1, "CANA 115", "NORTE")];
        let out = name_matching(&geo_nodes, &ps_nodes);
        let (gid, score) = out.assigned_group(0);
        assert_eq!(gid, "G1");
        assert!((score - (1.0 - 4.0 / 12.0)).abs() < 1e-9);
    }

    #[test]
    fn area_similarity_disambiguates_equal_names() {
        let geo_nodes = vec![
            geo("G1", "COSTCO", Some("NORTE")),
            geo("G2", "COSTCO", Some("SUR")),
        ];
        let ps_nodes = vec![ps(1, "COSTCO", "NORTE")];
        let out = name_matching(&geo_nodes, &ps_nodes);
        assert_eq!(out.assigned_group(0).0, "G1");
    }

    #[test]
    fn identical_single_pair_scores_one() {
        let out = name_matching(
            &[geo("G1", "PONCE", Some("Z"))],
            &[ps(1, "PONCE", "Z")],
        );
        let (gid, score) = out.assigned_group(0);
        assert_eq!(gid, "G1");
        assert_eq!(score, 1.0);
    }

    #[test]
    fn missing_zone_scores_zero() {
        let out = name_matching(&[geo("G1", "PONCE", None)], &[ps(1, "PONCE", "Z")]);
        assert_eq!(out.assigned_group(0).1, 0.0);
    }

    #[test]
    fn merged_score_bounded_by_components() {
        let geo_nodes = vec![geo("G1", "ALPHA", Some("NORTH")), geo("G2", "BETA", Some("SOUTH"))];
        let ps_nodes = vec![ps(1, "ALPHA", "SOUTH"), ps(2, "GAMMA", "NORTH")];
        let out = name_matching(&geo_nodes, &ps_nodes);
        for (i, psn) in ps_nodes.iter().enumerate() {
            for (j, g) in geo_nodes.iter().enumerate() {
                let merged = out.merged.get(i, j);
                assert!(merged <= lcs_similarity(&psn.name, &g.name) + 1e-12);
                assert!(
                    merged
                        <= lcs_similarity(&psn.area, g.zone.as_deref().unwrap_or("")) + 1e-12
                );
            }
        }
    }

    #[test]
    fn argmax_tie_prefers_smaller_group_id() {
        let m = SimilarityMatrix {
            rows: vec![BusId(1)],
            cols: vec!["GB".into(), "GA".into()],
            values: vec![0.5, 0.5],
        };
        assert_eq!(argmax_assignment(&m), vec![1]);
    }

    #[test]
    fn displaced_bus_takes_next_best() {
        // Buses 1 and 2 both want G; bus 2 falls back to H.
        let merged = SimilarityMatrix {
            rows: vec![BusId(1), BusId(2)],
            cols: vec!["G".into(), "H".into()],
            values: vec![0.9, 0.2, 0.6, 0.5],
        };
        let assignment = argmax_assignment(&merged);
        let rankings = (0..2).map(|i| super::ranked_columns(&merged, i)).collect();
        let out = NameMatchOutcome {
            merged,
            assignment,
            rankings,
        };
        let resolved = update_duplicates(&out, 10);
        assert_eq!(resolved, vec![Some(0), Some(1)]);
    }

    #[test]
    fn no_duplicates_is_a_noop() {
        let merged = SimilarityMatrix {
            rows: vec![BusId(1), BusId(2)],
            cols: vec!["G".into(), "H".into()],
            values: vec![0.9, 0.2, 0.1, 0.8],
        };
        let assignment = argmax_assignment(&merged);
        let rankings = (0..2).map(|i| super::ranked_columns(&merged, i)).collect();
        let out = NameMatchOutcome {
            merged,
            assignment,
            rankings,
        };
        assert_eq!(update_duplicates(&out, 10), vec![Some(0), Some(1)]);
    }

    #[test]
    fn exhausted_ranking_drops_buses() {
        // Three buses, one group: best keeps it, others go unmapped.
        let merged = SimilarityMatrix {
            rows: vec![BusId(1), BusId(2), BusId(3)],
            cols: vec!["G".into()],
            values: vec![0.9, 0.8, 0.7],
        };
        let assignment = argmax_assignment(&merged);
        let rankings = (0..3).map(|i| super::ranked_columns(&merged, i)).collect();
        let out = NameMatchOutcome {
            merged,
            assignment,
            rankings,
        };
        assert_eq!(update_duplicates(&out, 10), vec![Some(0), None, None]);
    }

    #[test]
    fn neighborhood_injectivity_after_resolution() {
        let merged = SimilarityMatrix {
            rows: vec![BusId(1), BusId(2), BusId(3), BusId(4)],
            cols: vec!["A".into(), "B".into(), "C".into()],
            values: vec![
                0.9, 0.8, 0.1, //
                0.85, 0.2, 0.3, //
                0.84, 0.7, 0.6, //
                0.83, 0.65, 0.6,
            ],
        };
        let assignment = argmax_assignment(&merged);
        let rankings = (0..4).map(|i| super::ranked_columns(&merged, i)).collect();
        let out = NameMatchOutcome {
            merged,
            assignment,
            rankings,
        };
        let resolved = update_duplicates(&out, 10);
        let taken: Vec<usize> = resolved.iter().flatten().copied().collect();
        let dedup: std::collections::BTreeSet<usize> = taken.iter().copied().collect();
        assert_eq!(taken.len(), dedup.len(), "no group holds two buses");
    }
}
