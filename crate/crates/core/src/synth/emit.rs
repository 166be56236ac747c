//! Writers for the ingest formats; a generated corpus re-read through the
//! loaders yields structurally equal objects.

use std::path::Path;

use serde_json::{json, Value};

use crate::error::Result;
use crate::eval::GroundTruth;
use crate::ingest::ZonePolygon;
use crate::model::{Branch, BranchKind, Bus, LineSegment, Site};
use crate::synth::{SynthOutput, Xfmr3w};

pub fn write_sites_geojson(sites: &[Site], path: &Path) -> Result<()> {
    let features: Vec<Value> = sites
        .iter()
        .map(|s| {
            json!({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [s.location.x, s.location.y]},
                "properties": {
                    "id": s.id,
                    "name": s.name,
                    "type": s.site_type.as_str(),
                    "kv_min": s.kv_min.0,
                    "kv_max": s.kv_max.0,
                }
            })
        })
        .collect();
    write_json(path, &json!({"type": "FeatureCollection", "features": features}))
}

pub fn write_lines_geojson(
    segments: &[LineSegment],
    missing_forms: &std::collections::BTreeMap<String, String>,
    path: &Path,
) -> Result<()> {
    let features: Vec<Value> = segments
        .iter()
        .map(|s| {
            let circuit: Value = match &s.circuit_id {
                Some(c) => Value::String(c.clone()),
                None => match missing_forms.get(&s.id).map(String::as_str) {
                    Some("null") | None => Value::Null,
                    Some(form) => Value::String(form.to_string()),
                },
            };
            let coords: Vec<Vec<f64>> = s.vertices.iter().map(|p| vec![p.x, p.y]).collect();
            json!({
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": coords},
                "properties": {
                    "id": s.id,
                    "circuit_id": circuit,
                    "voltage": s.voltage.0,
                }
            })
        })
        .collect();
    write_json(path, &json!({"type": "FeatureCollection", "features": features}))
}

pub fn write_zones_geojson(zones: &[ZonePolygon], path: &Path) -> Result<()> {
    let features: Vec<Value> = zones
        .iter()
        .map(|z| {
            let ring: Vec<Vec<f64>> = z.ring.iter().map(|p| vec![p.x, p.y]).collect();
            json!({
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": [ring]},
                "properties": {"name": z.zone_name}
            })
        })
        .collect();
    write_json(path, &json!({"type": "FeatureCollection", "features": features}))
}

pub fn write_power_csvs(
    buses: &[Bus],
    branches: &[Branch],
    xfmr3w: &[Xfmr3w],
    dir: &Path,
) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join("buses.csv"))?;
    w.write_record(["id", "name", "kv", "area"])?;
    for b in buses {
        w.write_record([
            b.id.to_string(),
            b.name.clone(),
            b.kv.to_string(),
            b.area.clone(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("branches.csv"))?;
    w.write_record(["from_bus", "to_bus", "kind", "circuit"])?;
    for br in branches {
        let kind = match br.kind {
            BranchKind::Line => "LINE",
            BranchKind::Transformer2W => "XFMR2W",
            BranchKind::Transformer3WLeg => continue,
        };
        w.write_record([
            br.from_bus.to_string(),
            br.to_bus.to_string(),
            kind.to_string(),
            br.circuit.clone(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("xfmr3w.csv"))?;
    w.write_record(["bus1", "bus2", "bus3", "name"])?;
    for x in xfmr3w {
        w.write_record([
            x.bus1.to_string(),
            x.bus2.to_string(),
            x.bus3.to_string(),
            x.name.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `bus_id,group_id,mappable`, one row per bus in id order.
pub fn write_truth_csv(truth: &GroundTruth, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bus_id", "group_id", "mappable"])?;
    for (bus, mappable) in &truth.mappable {
        let group = truth
            .bus_to_group
            .get(bus)
            .cloned()
            .unwrap_or_default();
        w.write_record([bus.to_string(), group, mappable.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Write the whole corpus into a directory using the ingest file names.
pub fn write_corpus(out: &SynthOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_sites_geojson(&out.sites, &dir.join("sites.geojson"))?;
    write_lines_geojson(&out.segments, &out.missing_forms, &dir.join("lines.geojson"))?;
    write_zones_geojson(&out.zones, &dir.join("zones.geojson"))?;
    write_power_csvs(&out.buses, &out.branches, &out.xfmr3w, dir)?;
    write_truth_csv(&out.truth, &dir.join("truth.csv"))?;
    Ok(())
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{CorruptionKnobs, SynthConfig};
    use crate::ingest;
    use crate::model::Kv;
    use crate::synth::{corrupt, generate_truth};

    fn small() -> SynthOutput {
        let cfg = SynthConfig {
            rng_seed: 3,
            n_buses: vec![(Kv(115.0), 3), (Kv(38.0), 8)],
            mesh_fraction_38kv: 0.25,
            xfmr2w: vec![(Kv(115.0), Kv(38.0), 2)],
            xfmr3w_count: 0,
            min_station_sep_m: 1000.0,
            corruption: CorruptionKnobs::default(),
        };
        generate_truth(&cfg).unwrap()
    }

    #[test]
    fn corpus_roundtrips_through_ingest() {
        let out = small();
        let dir = tempfile::tempdir().unwrap();
        write_corpus(&out, dir.path()).unwrap();

        let sites = ingest::load_sites(&dir.path().join("sites.geojson")).unwrap();
        assert_eq!(sites, out.sites);
        let segments = ingest::load_lines(&dir.path().join("lines.geojson")).unwrap();
        assert_eq!(segments, out.segments);
        let zones = ingest::load_zones(&dir.path().join("zones.geojson")).unwrap();
        assert_eq!(zones, out.zones);
        let model = ingest::load_power_model(
            &dir.path().join("buses.csv"),
            &dir.path().join("branches.csv"),
            &dir.path().join("xfmr3w.csv"),
        )
        .unwrap();
        assert_eq!(model.buses, out.buses);
        let truth = crate::eval::read_truth_csv(&dir.path().join("truth.csv")).unwrap();
        assert_eq!(truth, out.truth);
    }

    #[test]
    fn missing_forms_normalize_back_to_missing() {
        let base = small();
        let knobs = CorruptionKnobs {
            missing_circuit_rate: 1.0,
            ..Default::default()
        };
        let corrupted = corrupt(&base, &knobs, 5);
        let dir = tempfile::tempdir().unwrap();
        write_corpus(&corrupted, dir.path()).unwrap();
        let segments = ingest::load_lines(&dir.path().join("lines.geojson")).unwrap();
        assert!(segments.iter().all(|s| s.circuit_id.is_none()));
    }
}
