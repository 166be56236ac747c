//! Voltage-level-ordered graph mapping: name-based seeds, transformer seed
//! inheritance, topology-neighborhood growth, and branch mapping.

mod name;
mod topo;

use std::collections::BTreeMap;
use std::path::Path;

pub use name::{argmax_assignment, name_matching, update_duplicates, GeoNode, NameMatchOutcome, PsNode};
pub use topo::{branch_mapped, candidate_confirm, inherit_seeds, merge_seeds, topo_matching};

use serde::{Deserialize, Serialize};

use crate::config::MatchConfig;
use crate::error::{Error, Result};
use crate::model::{
    BusId, GeoGraph, GroupId, Kv, MappedSite, MappingEntry, MappingOrigin, MappingTable,
    PowerModel, SiteGroup,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelDiagnostics {
    pub voltage: f64,
    pub buses: usize,
    pub name_seeds: usize,
    pub inherited_seeds: usize,
    pub seed_conflicts: usize,
    pub topology_confirmed: usize,
    pub arbitrary_assigned: usize,
    pub unmapped: Vec<i64>,
    pub outer_iterations: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MapDiagnostics {
    /// One record per level, in processing order (descending kV).
    pub levels: Vec<LevelDiagnostics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchMapRow {
    pub from_bus: BusId,
    pub to_bus: BusId,
    pub from_group: Option<GroupId>,
    pub to_group: Option<GroupId>,
    pub matched: bool,
}

#[derive(Debug, Clone)]
pub struct MapOutcome {
    pub mapping: MappingTable,
    pub branches: Vec<BranchMapRow>,
    pub diagnostics: MapDiagnostics,
}

/// Map the power graph onto the geo graphs level by level, highest voltage
/// first. Each level seeds from level-wide name matching (merged score at or
/// above the seed threshold), inherits seeds through transformers from the
/// levels already done, grows the mapping topologically, and finally maps
/// branches via the node mapping.
pub fn map_graphs(
    geo_graphs: &BTreeMap<Kv, GeoGraph>,
    model: &PowerModel,
    groups: &[SiteGroup],
    levels: &[Kv],
    cfg: &MatchConfig,
) -> Result<MapOutcome> {
    let mut ordered: Vec<Kv> = levels.to_vec();
    ordered.sort_by(|a, b| b.cmp(a));
    for kv in &ordered {
        if !geo_graphs.contains_key(kv) {
            return Err(Error::Config(format!("no geo graph for {kv} kV")));
        }
    }

    let groups_by_id: BTreeMap<GroupId, &SiteGroup> =
        groups.iter().map(|g| (g.id.clone(), g)).collect();
    let bus_map = model.bus_map();

    let mut mapping = MappingTable::new();
    let mut branches: Vec<BranchMapRow> = Vec::new();
    let mut diagnostics = MapDiagnostics::default();

    for (level_idx, &kv) in ordered.iter().enumerate() {
        let geo_graph = &geo_graphs[&kv];
        let power_graph = model.level_graph(kv);

        let geo_nodes: Vec<GeoNode> = geo_graph
            .nodes
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
        let ps_nodes: Vec<PsNode> = power_graph
            .nodes
            .iter()
            .map(|bid| {
                let b = bus_map[bid];
                PsNode {
                    id: *bid,
                    name: b.name.clone(),
                    area: b.area.clone(),
                }
            })
            .collect();

        // Level-wide name matching; high scores become seeds.
        let mut name_seeds: BTreeMap<BusId, MappedSite> = BTreeMap::new();
        if !geo_nodes.is_empty() && !ps_nodes.is_empty() {
            let outcome = name_matching(&geo_nodes, &ps_nodes);
            for (row, bid) in outcome.merged.rows.iter().enumerate() {
                let (gid, score) = outcome.assigned_group(row);
                if score >= cfg.seed_threshold {
                    name_seeds.insert(
                        *bid,
                        MappedSite {
                            group_id: gid.clone(),
                            score,
                            origin: MappingOrigin::NameSeed,
                        },
                    );
                }
            }
        }
        let n_name_seeds = name_seeds.len();

        let mut seed_conflicts = 0;
        let mut n_inherited = 0;
        let seeds = if level_idx == 0 {
            name_seeds
        } else {
            let inherited = inherit_seeds(&mapping, model, &groups_by_id, kv);
            n_inherited = inherited.len();
            let (merged, conflicts) = merge_seeds(name_seeds, inherited);
            seed_conflicts = conflicts;
            merged
        };

        let mut seeded = MappingTable::new();
        for (bus, site) in seeds {
            seeded.insert(MappingEntry {
                bus_id: bus,
                mapped: Some(site),
            });
        }

        let (mut level_mapping, stats) = topo_matching(
            geo_graph,
            &power_graph,
            &seeded,
            &groups_by_id,
            model,
            cfg,
        );

        // Optional last resort: hand still-unmapped buses to a mapped
        // neighbor's group so legacy buses get a location.
        let mut arbitrary_assigned = 0;
        if cfg.arbitrary_legacy {
            let mut fallback: Vec<(BusId, GroupId)> = Vec::new();
            for &bid in &power_graph.nodes {
                if level_mapping.is_mapped(bid) {
                    continue;
                }
                let neighbor_site = power_graph
                    .neighbors(bid)
                    .into_iter()
                    .filter_map(|n| level_mapping.mapped_group(n).map(|m| (n, m.clone())))
                    .max_by(|a, b| {
                        a.1.score
                            .total_cmp(&b.1.score)
                            .then_with(|| b.0.cmp(&a.0))
                    });
                if let Some((_, site)) = neighbor_site {
                    fallback.push((bid, site.group_id));
                }
            }
            arbitrary_assigned = fallback.len();
            for (bid, gid) in fallback {
                level_mapping.insert(MappingEntry {
                    bus_id: bid,
                    mapped: Some(MappedSite {
                        group_id: gid,
                        score: 0.0,
                        origin: MappingOrigin::Arbitrary,
                    }),
                });
            }
        }

        // Fold the level into the global table; every level bus gets an
        // entry, mapped or not.
        let mut unmapped = Vec::new();
        for &bid in &power_graph.nodes {
            let entry = level_mapping
                .get(bid)
                .cloned()
                .unwrap_or(MappingEntry {
                    bus_id: bid,
                    mapped: None,
                });
            if entry.mapped.is_none() {
                unmapped.push(bid.0);
            }
            mapping.insert(entry);
        }

        for br in &power_graph.edges {
            let (from_group, to_group, matched) = branch_mapped(br, &mapping, geo_graph);
            branches.push(BranchMapRow {
                from_bus: br.from_bus,
                to_bus: br.to_bus,
                from_group,
                to_group,
                matched,
            });
        }

        diagnostics.levels.push(LevelDiagnostics {
            voltage: kv.0,
            buses: power_graph.nodes.len(),
            name_seeds: n_name_seeds,
            inherited_seeds: n_inherited,
            seed_conflicts,
            topology_confirmed: stats.confirmed,
            arbitrary_assigned,
            unmapped,
            outer_iterations: stats.outer_iterations,
        });
    }

    Ok(MapOutcome {
        mapping,
        branches,
        diagnostics,
    })
}

/// Write the mapping table as `bus_id,bus_name,kv,site_group_id,score,origin`.
pub fn write_mapping_csv(
    mapping: &MappingTable,
    model: &PowerModel,
    path: &Path,
) -> Result<()> {
    let bus_map = model.bus_map();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bus_id", "bus_name", "kv", "site_group_id", "score", "origin"])?;
    for entry in mapping.entries() {
        let bus = bus_map.get(&entry.bus_id);
        let (name, kv) = bus.map_or((String::new(), String::new()), |b| {
            (b.name.clone(), b.kv.to_string())
        });
        match &entry.mapped {
            Some(m) => w.write_record([
                entry.bus_id.to_string(),
                name,
                kv,
                m.group_id.clone(),
                format!("{:.6}", m.score),
                m.origin.as_str().to_string(),
            ])?,
            None => w.write_record([
                entry.bus_id.to_string(),
                name,
                kv,
                String::new(),
                format!("{:.6}", 0.0),
                String::new(),
            ])?,
        }
    }
    w.flush()?;
    Ok(())
}

/// A mapping row read back from CSV (for standalone evaluation).
#[derive(Debug, Clone, Deserialize)]
pub struct MappingCsvRow {
    pub bus_id: i64,
    pub bus_name: String,
    pub kv: f64,
    pub site_group_id: String,
    pub score: f64,
    pub origin: String,
}

pub fn read_mapping_csv(path: &Path) -> Result<Vec<MappingCsvRow>> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<MappingCsvRow>().enumerate() {
        rows.push(rec.map_err(|e| Error::Parse(format!("mapping row {}: {e}", i + 1)))?);
    }
    Ok(rows)
}

/// Write branch mapping rows as
/// `from_bus,to_bus,geo_edge_from_group,geo_edge_to_group,matched`.
pub fn write_branch_csv(rows: &[BranchMapRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "from_bus",
        "to_bus",
        "geo_edge_from_group",
        "geo_edge_to_group",
        "matched",
    ])?;
    for r in rows {
        w.write_record([
            r.from_bus.to_string(),
            r.to_bus.to_string(),
            r.from_group.clone().unwrap_or_default(),
            r.to_group.clone().unwrap_or_default(),
            r.matched.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
