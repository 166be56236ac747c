//! Topology-based mapping growth: seeds expand through their graph
//! neighborhoods, candidates accumulate in a pool with per-seed check-ins,
//! and confirmation happens by score ranking or by multiple check-ins.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::config::MatchConfig;
use crate::matcher::name::{name_matching, update_duplicates, GeoNode, PsNode};
use crate::model::{
    Branch, BranchKind, BusId, CandidatePool, GeoGraph, GroupId, Kv, MappedSite, MappingEntry,
    MappingOrigin, MappingTable, PowerGraph, PowerModel, SiteGroup,
};

/// Propose seeds at `target_kv` by passing confirmed mappings down through
/// transformers (two-winding directly, three-winding through the star bus).
/// A proposal requires the donor's group voltage range to reach down to the
/// target level.
pub fn inherit_seeds(
    mapping: &MappingTable,
    model: &PowerModel,
    groups_by_id: &BTreeMap<GroupId, &SiteGroup>,
    target_kv: Kv,
) -> BTreeMap<BusId, MappedSite> {
    let bus_map = model.bus_map();
    let mut proposals: BTreeMap<BusId, MappedSite> = BTreeMap::new();

    let mut propose = |lo: BusId, donor: BusId| {
        let lo_bus = match bus_map.get(&lo) {
            Some(b) if b.kv == target_kv && !model.star_bus_ids.contains(&lo) => b,
            _ => return,
        };
        let _ = lo_bus;
        if mapping.is_mapped(lo) {
            return;
        }
        let donor_site = match mapping.mapped_group(donor) {
            Some(m) => m,
            None => return,
        };
        let group = match groups_by_id.get(&donor_site.group_id) {
            Some(g) => g,
            None => return,
        };
        if group.kv_min > target_kv {
            return;
        }
        let candidate = MappedSite {
            group_id: donor_site.group_id.clone(),
            score: donor_site.score,
            origin: MappingOrigin::Inherited,
        };
        match proposals.get(&lo) {
            Some(existing)
                if existing.score > candidate.score
                    || (existing.score == candidate.score
                        && existing.group_id <= candidate.group_id) => {}
            _ => {
                proposals.insert(lo, candidate);
            }
        }
    };

    for br in &model.branches {
        match br.kind {
            BranchKind::Transformer2W => {
                propose(br.from_bus, br.to_bus);
                propose(br.to_bus, br.from_bus);
            }
            _ => {}
        }
    }
    // Three-winding legs meet at a star bus; pair up the windings.
    for &star in &model.star_bus_ids {
        let windings: Vec<BusId> = model
            .branches
            .iter()
            .filter(|b| b.kind == BranchKind::Transformer3WLeg)
            .filter_map(|b| {
                if b.to_bus == star {
                    Some(b.from_bus)
                } else if b.from_bus == star {
                    Some(b.to_bus)
                } else {
                    None
                }
            })
            .collect();
        for &a in &windings {
            for &b in &windings {
                if a != b {
                    propose(a, b);
                }
            }
        }
    }
    proposals
}

/// Merge two seed sets by bus id. Conflicts keep the higher score; score
/// ties prefer NameSeed over Inherited (name evidence is local to the
/// level); remaining ties take the smaller group id. Returns the merged set
/// and the number of conflicting assignments observed.
pub fn merge_seeds(
    current: BTreeMap<BusId, MappedSite>,
    incoming: BTreeMap<BusId, MappedSite>,
) -> (BTreeMap<BusId, MappedSite>, usize) {
    let mut merged = current;
    let mut conflicts = 0;
    for (bus, cand) in incoming {
        match merged.get(&bus) {
            None => {
                merged.insert(bus, cand);
            }
            Some(existing) => {
                if existing.group_id != cand.group_id {
                    conflicts += 1;
                }
                let keep_existing = match existing.score.total_cmp(&cand.score) {
                    std::cmp::Ordering::Greater => true,
                    std::cmp::Ordering::Less => false,
                    std::cmp::Ordering::Equal => {
                        match (existing.origin, cand.origin) {
                            (MappingOrigin::NameSeed, MappingOrigin::Inherited) => true,
                            (MappingOrigin::Inherited, MappingOrigin::NameSeed) => false,
                            _ => existing.group_id <= cand.group_id,
                        }
                    }
                };
                if !keep_existing {
                    merged.insert(bus, cand);
                }
            }
        }
    }
    (merged, conflicts)
}

/// Promote pool rows into confirmed mappings. A row (b, g, s, c) qualifies
/// for an unconfirmed bus b iff s clears the score floor and is strictly
/// the bus's best pool score, or c clears the check-in floor and is strictly
/// the bus's most-checked-in group. If the score and check-in clauses name
/// different groups, the strictly better-scoring one wins; a residual tie
/// confirms nothing. Confirmed rows leave the pool.
pub fn candidate_confirm(
    pool: &mut CandidatePool,
    confirmed: &MappingTable,
    cfg: &MatchConfig,
) -> Vec<(BusId, MappedSite)> {
    let mut per_bus: BTreeMap<BusId, Vec<(GroupId, f64, usize)>> = BTreeMap::new();
    for ((bus, group), row) in &pool.rows {
        if confirmed.is_mapped(*bus) {
            continue;
        }
        per_bus
            .entry(*bus)
            .or_default()
            .push((group.clone(), row.score, row.seed_origins.len()));
    }

    let mut newly = Vec::new();
    for (bus, rows) in per_bus {
        let mut qualifying: Vec<&(GroupId, f64, usize)> = Vec::new();
        for row in &rows {
            let (_, s, c) = (&row.0, row.1, row.2);
            let best_other_score = rows
                .iter()
                .filter(|r| r.0 != row.0)
                .map(|r| r.1)
                .fold(f64::NEG_INFINITY, f64::max);
            let best_other_checkins = rows
                .iter()
                .filter(|r| r.0 != row.0)
                .map(|r| r.2)
                .max()
                .unwrap_or(0);
            let by_score = s >= cfg.confirm_score && s > best_other_score;
            let by_checkins = c >= cfg.confirm_min_checkins && c > best_other_checkins;
            if by_score || by_checkins {
                qualifying.push(row);
            }
        }
        let winner = match qualifying.len() {
            0 => continue,
            1 => qualifying[0],
            _ => {
                // Distinct groups qualified through different clauses;
                // take a strict score winner or give up.
                let best = qualifying
                    .iter()
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                if qualifying
                    .iter()
                    .filter(|r| r.1 == best.1)
                    .count()
                    > 1
                {
                    continue;
                }
                best
            }
        };
        newly.push((
            bus,
            MappedSite {
                group_id: winner.0.clone(),
                score: winner.1,
                origin: MappingOrigin::Topology,
            },
        ));
        pool.rows.remove(&(bus, winner.0.clone()));
    }
    newly
}

#[derive(Debug, Clone, Default)]
pub struct TopoStats {
    pub confirmed: usize,
    pub outer_iterations: usize,
}

/// Grow the seeded mapping through graph neighborhoods (Algorithm-3 style).
/// Confirmed entries are immutable; only unconfirmed buses gain entries.
pub fn topo_matching(
    geo_graph: &GeoGraph,
    power_graph: &PowerGraph,
    seeded: &MappingTable,
    groups_by_id: &BTreeMap<GroupId, &SiteGroup>,
    model: &PowerModel,
    cfg: &MatchConfig,
) -> (MappingTable, TopoStats) {
    let mut confirmed = seeded.clone();
    let mut stats = TopoStats::default();
    if !confirmed.entries().any(|e| e.mapped.is_some()) {
        return (confirmed, stats);
    }
    let bus_map = model.bus_map();
    let mut pool = CandidatePool::default();

    for _ in 0..cfg.max_outer_iters {
        stats.outer_iterations += 1;
        let snapshot = pool.clone();

        let seeds: Vec<(BusId, GroupId)> = confirmed
            .entries()
            .filter_map(|e| e.mapped.as_ref().map(|m| (e.bus_id, m.group_id.clone())))
            .collect();

        let proposals: Vec<Vec<(BusId, GroupId, f64, BusId)>> = seeds
            .par_iter()
            .map(|(seed_bus, seed_group)| {
                expand_seed(
                    *seed_bus,
                    seed_group,
                    geo_graph,
                    power_graph,
                    groups_by_id,
                    &bus_map,
                    cfg,
                )
            })
            .collect();
        for batch in proposals {
            for (bus, group, score, seed) in batch {
                pool.check_in(bus, group, score, seed);
            }
        }

        let newly = candidate_confirm(&mut pool, &confirmed, cfg);
        stats.confirmed += newly.len();
        for (bus, site) in newly {
            confirmed.insert(MappingEntry {
                bus_id: bus,
                mapped: Some(site),
            });
        }

        if pool == snapshot {
            break;
        }
    }
    (confirmed, stats)
}

/// One seed's neighborhood matching: the geo neighbors of its group and the
/// power neighbors of its bus, each augmented with the seed itself, matched
/// by name and de-duplicated. Returns (bus, group, score, seed) proposals.
fn expand_seed(
    seed_bus: BusId,
    seed_group: &str,
    geo_graph: &GeoGraph,
    power_graph: &PowerGraph,
    groups_by_id: &BTreeMap<GroupId, &SiteGroup>,
    bus_map: &BTreeMap<BusId, &crate::model::Bus>,
    cfg: &MatchConfig,
) -> Vec<(BusId, GroupId, f64, BusId)> {
    let geo_neighbors = geo_graph.neighbors(seed_group);
    let ps_neighbors = power_graph.neighbors(seed_bus);
    if geo_neighbors.is_empty() || ps_neighbors.is_empty() {
        return Vec::new();
    }

    let mut geo_ids: BTreeSet<GroupId> = geo_neighbors.into_iter().collect();
    geo_ids.insert(seed_group.to_string());
    let mut ps_ids: BTreeSet<BusId> = ps_neighbors.into_iter().collect();
    ps_ids.insert(seed_bus);

    let geo_nodes: Vec<GeoNode> = geo_ids
        .iter()
        .map(|gid| {
            let g = groups_by_id.get(gid);
            GeoNode {
                id: gid.clone(),
                name: g.map(|g| g.name.clone()).unwrap_or_default(),
                zone: g.and_then(|g| g.zone.clone()),
            }
        })
        .collect();
    let ps_nodes: Vec<PsNode> = ps_ids
        .iter()
        .filter_map(|bid| {
            bus_map.get(bid).map(|b| PsNode {
                id: *bid,
                name: b.name.clone(),
                area: b.area.clone(),
            })
        })
        .collect();
    if geo_nodes.is_empty() || ps_nodes.is_empty() {
        return Vec::new();
    }

    let outcome = name_matching(&geo_nodes, &ps_nodes);
    let resolved = update_duplicates(&outcome, cfg.max_dup_iters);
    resolved
        .iter()
        .enumerate()
        .filter_map(|(row, col)| {
            col.map(|c| {
                (
                    outcome.merged.rows[row],
                    outcome.merged.cols[c].clone(),
                    outcome.merged.get(row, c),
                    seed_bus,
                )
            })
        })
        .collect()
}

/// Map a branch row against the geo graph using the node mapping.
pub fn branch_mapped(
    branch: &Branch,
    mapping: &MappingTable,
    geo_graph: &GeoGraph,
) -> (Option<GroupId>, Option<GroupId>, bool) {
    let from = mapping
        .mapped_group(branch.from_bus)
        .map(|m| m.group_id.clone());
    let to = mapping
        .mapped_group(branch.to_bus)
        .map(|m| m.group_id.clone());
    let matched = match (&from, &to) {
        (Some(f), Some(t)) => geo_graph.has_edge(f, t),
        _ => false,
    };
    (from, to, matched)
}
