//! Coverage and mapping metrics plus validation against ground truth.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::config::EvalThresholds;
use crate::error::{Error, Result};
use crate::graphbuild::BuildReport;
use crate::model::{BusId, GeoGraph, GroupId, Kv, MappingOrigin};

pub const METERS_PER_MILE: f64 = 1609.344;

/// Known-correct bus assignments for a generated corpus. Unmappable buses
/// (taps, legacy buses) are listed with `mappable = false`; any mapping for
/// them counts as incorrect.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroundTruth {
    pub bus_to_group: BTreeMap<BusId, GroupId>,
    pub mappable: BTreeMap<BusId, bool>,
}

impl GroundTruth {
    pub fn is_correct(&self, bus: BusId, group: &str) -> bool {
        self.mappable.get(&bus).copied().unwrap_or(false)
            && self.bus_to_group.get(&bus).map(String::as_str) == Some(group)
    }
}

pub fn read_truth_csv(path: &Path) -> Result<GroundTruth> {
    #[derive(serde::Deserialize)]
    struct Row {
        bus_id: i64,
        group_id: String,
        mappable: bool,
    }
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut truth = GroundTruth::default();
    for (i, rec) in rdr.deserialize::<Row>().enumerate() {
        let row = rec.map_err(|e| Error::Parse(format!("truth row {}: {e}", i + 1)))?;
        let bus = BusId(row.bus_id);
        if !row.group_id.is_empty() {
            truth.bus_to_group.insert(bus, row.group_id);
        }
        truth.mappable.insert(bus, row.mappable);
    }
    Ok(truth)
}

/// One evaluated bus: its level, mapped group (if any), and whether the
/// assignment came from the arbitrary fallback.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub bus_id: BusId,
    pub kv: Kv,
    pub group_id: Option<GroupId>,
    pub arbitrary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub voltage: Kv,
    pub buses: usize,
    pub mapped: usize,
    pub buses_mapped_pct: f64,
    pub groups_mapped_pct: f64,
    /// None when no bus is mapped (or no truth was supplied).
    pub accuracy: Option<f64>,
    pub arbitrary_count: usize,
}

/// Per-voltage completeness and accuracy. The group denominator is the geo
/// graph's node set; accuracy divides correct mapped buses by mapped buses.
pub fn mapping_metrics(
    rows: &[EvalRow],
    geo_graphs: &BTreeMap<Kv, GeoGraph>,
    truth: Option<&GroundTruth>,
) -> Vec<MetricsRow> {
    let mut levels: Vec<Kv> = geo_graphs.keys().copied().collect();
    levels.sort_by(|a, b| b.cmp(a));

    levels
        .iter()
        .map(|&kv| {
            let graph = &geo_graphs[&kv];
            let graph_nodes: BTreeSet<&str> =
                graph.nodes.iter().map(String::as_str).collect();
            let level_rows: Vec<&EvalRow> = rows.iter().filter(|r| r.kv == kv).collect();
            let buses = level_rows.len();
            let mapped_rows: Vec<&&EvalRow> =
                level_rows.iter().filter(|r| r.group_id.is_some()).collect();
            let mapped = mapped_rows.len();
            let arbitrary_count = mapped_rows.iter().filter(|r| r.arbitrary).count();

            let distinct_groups: BTreeSet<&str> = mapped_rows
                .iter()
                .filter_map(|r| r.group_id.as_deref())
                .filter(|g| graph_nodes.contains(g))
                .collect();

            let buses_mapped_pct = if buses > 0 {
                100.0 * mapped as f64 / buses as f64
            } else {
                100.0
            };
            let groups_mapped_pct = if graph_nodes.is_empty() {
                100.0
            } else {
                100.0 * distinct_groups.len() as f64 / graph_nodes.len() as f64
            };
            let accuracy = truth.and_then(|t| {
                if mapped == 0 {
                    return None;
                }
                let correct = mapped_rows
                    .iter()
                    .filter(|r| t.is_correct(r.bus_id, r.group_id.as_deref().unwrap()))
                    .count();
                Some(100.0 * correct as f64 / mapped as f64)
            });
            MetricsRow {
                voltage: kv,
                buses,
                mapped,
                buses_mapped_pct,
                groups_mapped_pct,
                accuracy,
                arbitrary_count,
            }
        })
        .collect()
}

/// Coverage report rows mirroring the graph-building summary table:
/// `voltage,site_groups,lines,line_length,coverage` with length in miles.
pub fn write_coverage_csv(report: &BuildReport, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["voltage", "site_groups", "lines", "line_length", "coverage"])?;
    for row in &report.rows {
        w.write_record([
            row.voltage.to_string(),
            row.node_count.to_string(),
            row.edge_count.to_string(),
            format!("{:.1}", row.built_length_m / METERS_PER_MILE),
            format!("{:.1}", row.coverage_percent),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Mapping report rows: `voltage,pct_buses,pct_groups,accuracy`; accuracy is
/// left empty when undefined.
pub fn write_metrics_csv(rows: &[MetricsRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["voltage", "pct_buses", "pct_groups", "accuracy"])?;
    for r in rows {
        w.write_record([
            r.voltage.to_string(),
            format!("{:.1}", r.buses_mapped_pct),
            format!("{:.1}", r.groups_mapped_pct),
            r.accuracy.map_or(String::new(), |a| format!("{a:.1}")),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Check configured metric floors; returns one message per violation.
pub fn threshold_violations(
    rows: &[MetricsRow],
    report: Option<&BuildReport>,
    thresholds: &EvalThresholds,
) -> Vec<String> {
    let mut violations = Vec::new();
    for r in rows {
        if let Some(min) = thresholds.min_buses_mapped_pct {
            if r.buses_mapped_pct < min {
                violations.push(format!(
                    "{} kV: buses mapped {:.1}% < {min}",
                    r.voltage, r.buses_mapped_pct
                ));
            }
        }
        if let Some(min) = thresholds.min_groups_mapped_pct {
            if r.groups_mapped_pct < min {
                violations.push(format!(
                    "{} kV: groups mapped {:.1}% < {min}",
                    r.voltage, r.groups_mapped_pct
                ));
            }
        }
        if let (Some(min), Some(acc)) = (thresholds.min_accuracy, r.accuracy) {
            if acc < min {
                violations.push(format!("{} kV: accuracy {acc:.1}% < {min}", r.voltage));
            }
        }
    }
    if let (Some(report), Some(min)) = (report, thresholds.min_coverage_pct) {
        for row in &report.rows {
            if row.coverage_percent < min {
                violations.push(format!(
                    "{} kV: coverage {:.1}% < {min}",
                    row.voltage, row.coverage_percent
                ));
            }
        }
    }
    violations
}

/// Evaluation rows from an in-memory mapping plus the power model.
pub fn eval_rows_from_mapping(
    mapping: &crate::model::MappingTable,
    model: &crate::model::PowerModel,
) -> Vec<EvalRow> {
    let bus_map = model.bus_map();
    mapping
        .entries()
        .filter_map(|e| {
            bus_map.get(&e.bus_id).map(|b| EvalRow {
                bus_id: e.bus_id,
                kv: b.kv,
                group_id: e.mapped.as_ref().map(|m| m.group_id.clone()),
                arbitrary: e
                    .mapped
                    .as_ref()
                    .map_or(false, |m| m.origin == MappingOrigin::Arbitrary),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphbuild::BuildReportRow;

    fn graph(kv: f64, nodes: &[&str]) -> GeoGraph {
        GeoGraph {
            voltage: Kv(kv),
            nodes: nodes.iter().map(|s| s.to_string()).collect(),
            edges: vec![],
        }
    }

    fn row(bus: i64, kv: f64, group: Option<&str>) -> EvalRow {
        EvalRow {
            bus_id: BusId(bus),
            kv: Kv(kv),
            group_id: group.map(String::from),
            arbitrary: false,
        }
    }

    #[test]
    fn perfect_mapping_scores_hundreds() {
        let mut graphs = BTreeMap::new();
        graphs.insert(Kv(115.0), graph(115.0, &["GA", "GB"]));
        let rows = vec![row(1, 115.0, Some("GA")), row(2, 115.0, Some("GB"))];
        let mut truth = GroundTruth::default();
        truth.bus_to_group.insert(BusId(1), "GA".into());
        truth.bus_to_group.insert(BusId(2), "GB".into());
        truth.mappable.insert(BusId(1), true);
        truth.mappable.insert(BusId(2), true);
        let metrics = mapping_metrics(&rows, &graphs, Some(&truth));
        assert_eq!(metrics.len(), 1);
        assert_eq!(metrics[0].buses_mapped_pct, 100.0);
        assert_eq!(metrics[0].groups_mapped_pct, 100.0);
        assert_eq!(metrics[0].accuracy, Some(100.0));
    }

    #[test]
    fn nine_of_ten_mapped_eight_correct() {
        let mut graphs = BTreeMap::new();
        let names: Vec<String> = (0..10).map(|i| format!("G{i}")).collect();
        graphs.insert(
            Kv(38.0),
            graph(38.0, &names.iter().map(String::as_str).collect::<Vec<_>>()),
        );
        let mut truth = GroundTruth::default();
        let mut rows = Vec::new();
        for i in 0..10 {
            truth.bus_to_group.insert(BusId(i), format!("G{i}"));
            truth.mappable.insert(BusId(i), true);
            if i == 9 {
                rows.push(row(i, 38.0, None)); // unmapped
            } else if i == 8 {
                rows.push(row(i, 38.0, Some("G0"))); // wrong
            } else {
                rows.push(row(i, 38.0, Some(&format!("G{i}"))));
            }
        }
        let metrics = mapping_metrics(&rows, &graphs, Some(&truth));
        assert_eq!(metrics[0].buses_mapped_pct, 90.0);
        let acc = metrics[0].accuracy.unwrap();
        assert!((acc - 100.0 * 8.0 / 9.0).abs() < 1e-9);
    }

    #[test]
    fn accuracy_absent_when_nothing_mapped() {
        let mut graphs = BTreeMap::new();
        graphs.insert(Kv(38.0), graph(38.0, &["GA"]));
        let rows = vec![row(1, 38.0, None)];
        let truth = GroundTruth::default();
        let metrics = mapping_metrics(&rows, &graphs, Some(&truth));
        assert_eq!(metrics[0].accuracy, None);
        assert_eq!(metrics[0].buses_mapped_pct, 0.0);
    }

    #[test]
    fn mapped_unmappable_bus_counts_incorrect() {
        let mut graphs = BTreeMap::new();
        graphs.insert(Kv(38.0), graph(38.0, &["GA"]));
        let rows = vec![row(1, 38.0, Some("GA"))];
        let mut truth = GroundTruth::default();
        truth.mappable.insert(BusId(1), false);
        let metrics = mapping_metrics(&rows, &graphs, Some(&truth));
        assert_eq!(metrics[0].accuracy, Some(0.0));
    }

    #[test]
    fn metrics_are_permutation_invariant() {
        let mut graphs = BTreeMap::new();
        graphs.insert(Kv(38.0), graph(38.0, &["GA", "GB"]));
        let rows = vec![
            row(1, 38.0, Some("GA")),
            row(2, 38.0, Some("GB")),
            row(3, 38.0, None),
        ];
        let mut shuffled = rows.clone();
        shuffled.reverse();
        assert_eq!(
            mapping_metrics(&rows, &graphs, None),
            mapping_metrics(&shuffled, &graphs, None)
        );
    }

    #[test]
    fn half_coverage_reported() {
        let report = BuildReport {
            rows: vec![BuildReportRow {
                voltage: Kv(115.0),
                node_count: 2,
                edge_count: 1,
                built_length_m: 5000.0,
                total_length_m: 10_000.0,
                coverage_percent: 50.0,
            disconnected_pairs: 0,
            }],
        };
        let thresholds = EvalThresholds {
            min_coverage_pct: Some(90.0),
            ..Default::default()
        };
        let violations = threshold_violations(&[], Some(&report), &thresholds);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("coverage"));
    }
}
