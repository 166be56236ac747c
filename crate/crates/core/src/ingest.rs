//! Parsers for the geospatial (GeoJSON) and power-model (CSV) inputs, plus
//! the spatial join that assigns planning zones to sites.

use std::collections::BTreeSet;
use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{
    Branch, BranchKind, Bus, BusId, CrsKind, GeoPoint, Kv, LineSegment, PowerModel, Site,
    SiteType,
};

/// A named planning-zone polygon (closed simple ring).
#[derive(Debug, Clone, PartialEq)]
pub struct ZonePolygon {
    pub zone_name: String,
    pub ring: Vec<GeoPoint>,
}

/// Geographic iff every coordinate fits lon/lat bounds. Datasets in planar
/// meters at island scale exceed them immediately; genuinely ambiguous
/// small-extent projected data can be forced via `ingest.crs_kind`.
pub fn infer_crs<'a>(points: impl Iterator<Item = &'a GeoPoint>) -> CrsKind {
    for p in points {
        if p.x.abs() > 180.0 || p.y.abs() > 90.0 {
            return CrsKind::Projected;
        }
    }
    CrsKind::Geographic
}

fn read_feature_collection(path: &Path) -> Result<Vec<Value>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let root: Value = serde_json::from_str(&text)?;
    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(Error::Parse(format!(
            "{}: expected a FeatureCollection",
            path.display()
        )));
    }
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse(format!("{}: missing features array", path.display())))?;
    Ok(features.to_vec())
}

fn feature_label(feature: &Value, index: usize) -> String {
    feature
        .get("properties")
        .and_then(|p| p.get("id"))
        .and_then(value_as_string)
        .unwrap_or_else(|| format!("feature {index}"))
}

fn value_as_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn prop_string(feature: &Value, label: &str, field: &str) -> Result<String> {
    feature
        .get("properties")
        .and_then(|p| p.get(field))
        .and_then(value_as_string)
        .ok_or_else(|| Error::Parse(format!("{label}: {field}")))
}

fn prop_number(feature: &Value, label: &str, field: &str) -> Result<f64> {
    let v = feature
        .get("properties")
        .and_then(|p| p.get(field))
        .ok_or_else(|| Error::Parse(format!("{label}: {field}")))?;
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| Error::Parse(format!("{label}: {field}"))),
        Value::String(s) => s
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("{label}: {field}"))),
        _ => Err(Error::Parse(format!("{label}: {field}"))),
    }
}

fn coord_pair(v: &Value, label: &str) -> Result<GeoPoint> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::Parse(format!("{label}: coordinates")))?;
    if arr.len() < 2 {
        return Err(Error::Parse(format!("{label}: coordinates")));
    }
    let x = arr[0]
        .as_f64()
        .ok_or_else(|| Error::Parse(format!("{label}: coordinates")))?;
    let y = arr[1]
        .as_f64()
        .ok_or_else(|| Error::Parse(format!("{label}: coordinates")))?;
    Ok(GeoPoint::new(x, y))
}

fn ring_coords(geom: &Value, label: &str) -> Result<Vec<GeoPoint>> {
    let rings = geom
        .get("coordinates")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse(format!("{label}: coordinates")))?;
    let outer = rings
        .first()
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse(format!("{label}: coordinates")))?;
    outer.iter().map(|c| coord_pair(c, label)).collect()
}

/// Area centroid of a closed ring (shoelace); falls back to the vertex mean
/// for degenerate rings.
fn ring_centroid(ring: &[GeoPoint]) -> GeoPoint {
    let pts: &[GeoPoint] = if ring.len() > 1 && ring[0] == *ring.last().unwrap() {
        &ring[..ring.len() - 1]
    } else {
        ring
    };
    let mut area2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..pts.len() {
        let a = pts[i];
        let b = pts[(i + 1) % pts.len()];
        let cross = a.x * b.y - b.x * a.y;
        area2 += cross;
        cx += (a.x + b.x) * cross;
        cy += (a.y + b.y) * cross;
    }
    if area2.abs() < 1e-12 {
        let n = pts.len() as f64;
        return GeoPoint::new(
            pts.iter().map(|p| p.x).sum::<f64>() / n,
            pts.iter().map(|p| p.y).sum::<f64>() / n,
        );
    }
    GeoPoint::new(cx / (3.0 * area2), cy / (3.0 * area2))
}

/// Load site records from a GeoJSON FeatureCollection of Points or Polygons
/// with properties `{id, name, type, kv_min, kv_max}`. Polygon footprints
/// reduce to their centroid.
pub fn load_sites(path: &Path) -> Result<Vec<Site>> {
    let features = read_feature_collection(path)?;
    let mut sites = Vec::with_capacity(features.len());
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (i, f) in features.iter().enumerate() {
        let label = feature_label(f, i);
        let id = prop_string(f, &label, "id")?;
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        let name = prop_string(f, &label, "name")?;
        let site_type = SiteType::parse(&prop_string(f, &label, "type")?);
        let kv_min = prop_number(f, &label, "kv_min")?;
        let kv_max = prop_number(f, &label, "kv_max")?;
        if kv_min <= 0.0 || kv_max < kv_min {
            return Err(Error::Parse(format!("{label}: kv_min/kv_max")));
        }
        let geom = f
            .get("geometry")
            .ok_or_else(|| Error::Parse(format!("{label}: geometry")))?;
        let location = match geom.get("type").and_then(Value::as_str) {
            Some("Point") => coord_pair(
                geom.get("coordinates")
                    .ok_or_else(|| Error::Parse(format!("{label}: coordinates")))?,
                &label,
            )?,
            Some("Polygon") => ring_centroid(&ring_coords(geom, &label)?),
            _ => return Err(Error::Parse(format!("{label}: geometry"))),
        };
        sites.push(Site {
            id,
            name,
            site_type,
            kv_min: Kv(kv_min),
            kv_max: Kv(kv_max),
            location,
            zone: None,
        });
    }
    Ok(sites)
}

/// Load line segments from a GeoJSON FeatureCollection of LineStrings with
/// properties `{id, circuit_id, voltage}`. The circuit-id values "NONE",
/// "0", "" and null all normalize to Missing.
pub fn load_lines(path: &Path) -> Result<Vec<LineSegment>> {
    let features = read_feature_collection(path)?;
    let mut segments = Vec::with_capacity(features.len());
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (i, f) in features.iter().enumerate() {
        let label = feature_label(f, i);
        let id = prop_string(f, &label, "id")?;
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        let voltage = prop_number(f, &label, "voltage")?;
        let circuit_id = match f.get("properties").and_then(|p| p.get("circuit_id")) {
            None | Some(Value::Null) => None,
            Some(v) => {
                let s = value_as_string(v)
                    .ok_or_else(|| Error::Parse(format!("{label}: circuit_id")))?;
                normalize_circuit_id(&s)
            }
        };
        let geom = f
            .get("geometry")
            .ok_or_else(|| Error::Parse(format!("{label}: geometry")))?;
        if geom.get("type").and_then(Value::as_str) != Some("LineString") {
            return Err(Error::Parse(format!("{label}: geometry")));
        }
        let coords = geom
            .get("coordinates")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse(format!("{label}: coordinates")))?;
        let vertices: Vec<GeoPoint> = coords
            .iter()
            .map(|c| coord_pair(c, &label))
            .collect::<Result<_>>()?;
        if vertices.len() < 2 {
            return Err(Error::InvalidGeometry(format!(
                "{label}: LineString needs >= 2 points"
            )));
        }
        segments.push(LineSegment {
            id,
            circuit_id,
            voltage: Kv(voltage),
            vertices,
        });
    }
    Ok(segments)
}

/// "NONE", "0" and empty (after trimming, case-insensitive) mean Missing.
pub fn normalize_circuit_id(raw: &str) -> Option<String> {
    let t = raw.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("none") || t == "0" {
        None
    } else {
        Some(t.to_string())
    }
}

/// Load zone polygons from a GeoJSON FeatureCollection of Polygons with a
/// `name` property. Rings must be closed, have at least four points, and be
/// simple.
pub fn load_zones(path: &Path) -> Result<Vec<ZonePolygon>> {
    let features = read_feature_collection(path)?;
    let mut zones = Vec::with_capacity(features.len());
    for (i, f) in features.iter().enumerate() {
        let label = feature_label(f, i);
        let zone_name = prop_string(f, &label, "name")?;
        let geom = f
            .get("geometry")
            .ok_or_else(|| Error::Parse(format!("{label}: geometry")))?;
        if geom.get("type").and_then(Value::as_str) != Some("Polygon") {
            return Err(Error::Parse(format!("{label}: geometry")));
        }
        let ring = ring_coords(geom, &label)?;
        validate_ring(&ring, &zone_name)?;
        zones.push(ZonePolygon { zone_name, ring });
    }
    Ok(zones)
}

fn validate_ring(ring: &[GeoPoint], name: &str) -> Result<()> {
    if ring.len() < 4 {
        return Err(Error::InvalidGeometry(format!(
            "zone {name}: ring needs >= 4 points"
        )));
    }
    if ring[0] != *ring.last().unwrap() {
        return Err(Error::InvalidGeometry(format!(
            "zone {name}: ring is not closed"
        )));
    }
    let n = ring.len() - 1; // edges
    for i in 0..n {
        for j in (i + 1)..n {
            // Skip adjacent edges (shared endpoint), including the wrap pair.
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_properly_intersect(ring[i], ring[i + 1], ring[j], ring[j + 1]) {
                return Err(Error::InvalidGeometry(format!(
                    "zone {name}: ring self-intersects"
                )));
            }
        }
    }
    Ok(())
}

fn orient(a: GeoPoint, b: GeoPoint, c: GeoPoint) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_properly_intersect(a: GeoPoint, b: GeoPoint, c: GeoPoint, d: GeoPoint) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    (o1 * o2 < 0.0) && (o3 * o4 < 0.0)
}

fn point_on_segment(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> bool {
    let cross = orient(a, b, p);
    let scale = (b.x - a.x).hypot(b.y - a.y).max(1.0);
    if cross.abs() > 1e-9 * scale * scale {
        return false;
    }
    let within_x = p.x >= a.x.min(b.x) - 1e-12 && p.x <= a.x.max(b.x) + 1e-12;
    let within_y = p.y >= a.y.min(b.y) - 1e-12 && p.y <= a.y.max(b.y) + 1e-12;
    within_x && within_y
}

/// Even-odd point-in-polygon; boundary points count as inside.
pub fn point_in_polygon(p: GeoPoint, ring: &[GeoPoint]) -> bool {
    let pts: &[GeoPoint] = if ring.len() > 1 && ring[0] == *ring.last().unwrap() {
        &ring[..ring.len() - 1]
    } else {
        ring
    };
    let n = pts.len();
    for i in 0..n {
        if point_on_segment(p, pts[i], pts[(i + 1) % n]) {
            return true;
        }
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (pi, pj) = (pts[i], pts[j]);
        if (pi.y > p.y) != (pj.y > p.y) {
            let x_int = pi.x + (p.y - pi.y) / (pj.y - pi.y) * (pj.x - pi.x);
            if p.x < x_int {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Set each site's zone to the containing polygon's name (first match in
/// zone-name order); sites outside all polygons keep zone = None.
pub fn assign_zones(sites: &[Site], zones: &[ZonePolygon]) -> Vec<Site> {
    let mut ordered: Vec<&ZonePolygon> = zones.iter().collect();
    ordered.sort_by(|a, b| a.zone_name.cmp(&b.zone_name));
    sites
        .iter()
        .map(|s| {
            let zone = ordered
                .iter()
                .find(|z| point_in_polygon(s.location, &z.ring))
                .map(|z| z.zone_name.clone());
            Site {
                zone,
                ..s.clone()
            }
        })
        .collect()
}

/// Load the power model from the three CSV inputs. Three-winding rows expand
/// into three legs meeting at a synthetic star bus whose id is
/// `max bus id + ordinal`.
pub fn load_power_model(
    bus_path: &Path,
    branch_path: &Path,
    xfmr3w_path: &Path,
) -> Result<PowerModel> {
    let mut buses: Vec<Bus> = Vec::new();
    let mut seen: BTreeSet<i64> = BTreeSet::new();
    let mut rdr = csv::Reader::from_path(bus_path)
        .map_err(|e| Error::Parse(format!("{}: {e}", bus_path.display())))?;
    for (i, rec) in rdr.deserialize::<BusRow>().enumerate() {
        let row = rec.map_err(|e| Error::Parse(format!("bus row {}: {e}", i + 1)))?;
        if !seen.insert(row.id) {
            return Err(Error::DuplicateId(row.id.to_string()));
        }
        if row.kv <= 0.0 {
            return Err(Error::Parse(format!("bus {}: kv", row.id)));
        }
        buses.push(Bus {
            id: BusId(row.id),
            name: row.name,
            kv: Kv(row.kv),
            area: row.area,
        });
    }

    let kv_of: std::collections::BTreeMap<i64, Kv> =
        buses.iter().map(|b| (b.id.0, b.kv)).collect();

    let mut branches: Vec<Branch> = Vec::new();
    let mut rdr = csv::Reader::from_path(branch_path)
        .map_err(|e| Error::Parse(format!("{}: {e}", branch_path.display())))?;
    for (i, rec) in rdr.deserialize::<BranchRow>().enumerate() {
        let row = rec.map_err(|e| Error::Parse(format!("branch row {}: {e}", i + 1)))?;
        if row.from_bus == row.to_bus {
            return Err(Error::SelfLoop(row.from_bus));
        }
        for end in [row.from_bus, row.to_bus] {
            if !kv_of.contains_key(&end) {
                return Err(Error::DanglingReference(end));
            }
        }
        let kind = match row.kind.trim().to_ascii_uppercase().as_str() {
            "LINE" => BranchKind::Line,
            "XFMR2W" => BranchKind::Transformer2W,
            other => {
                return Err(Error::Parse(format!("branch row {}: kind {other:?}", i + 1)))
            }
        };
        if kind == BranchKind::Line && kv_of[&row.from_bus] != kv_of[&row.to_bus] {
            return Err(Error::InvalidBranch(format!(
                "line {}-{} joins different voltages",
                row.from_bus, row.to_bus
            )));
        }
        branches.push(Branch {
            from_bus: BusId(row.from_bus),
            to_bus: BusId(row.to_bus),
            kind,
            circuit: row.circuit,
        });
    }

    let max_id = buses.iter().map(|b| b.id.0).max().unwrap_or(0);
    let mut star_bus_ids = BTreeSet::new();
    let mut rdr = csv::Reader::from_path(xfmr3w_path)
        .map_err(|e| Error::Parse(format!("{}: {e}", xfmr3w_path.display())))?;
    for (i, rec) in rdr.deserialize::<Xfmr3wRow>().enumerate() {
        let row = rec.map_err(|e| Error::Parse(format!("xfmr3w row {}: {e}", i + 1)))?;
        let windings = [row.bus1, row.bus2, row.bus3];
        for w in windings {
            if !kv_of.contains_key(&w) {
                return Err(Error::DanglingReference(w));
            }
        }
        let star_id = BusId(max_id + (i as i64) + 1);
        let star_kv = windings.iter().map(|w| kv_of[w]).min().unwrap();
        let area = buses
            .iter()
            .find(|b| b.id.0 == row.bus1)
            .map(|b| b.area.clone())
            .unwrap_or_default();
        buses.push(Bus {
            id: star_id,
            name: format!("{} STAR", row.name),
            kv: star_kv,
            area,
        });
        star_bus_ids.insert(star_id);
        for w in windings {
            branches.push(Branch {
                from_bus: BusId(w),
                to_bus: star_id,
                kind: BranchKind::Transformer3WLeg,
                circuit: String::new(),
            });
        }
    }

    Ok(PowerModel {
        buses,
        branches,
        star_bus_ids,
    })
}

#[derive(serde::Deserialize)]
struct BusRow {
    id: i64,
    name: String,
    kv: f64,
    area: String,
}

#[derive(serde::Deserialize)]
struct BranchRow {
    from_bus: i64,
    to_bus: i64,
    kind: String,
    circuit: String,
}

#[derive(serde::Deserialize)]
struct Xfmr3wRow {
    bus1: i64,
    bus2: i64,
    bus3: i64,
    name: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(dir: &tempfile::TempDir, name: &str, content: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn loads_point_site() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            &dir,
            "sites.geojson",
            r#"{"type":"FeatureCollection","features":[
              {"type":"Feature","geometry":{"type":"Point","coordinates":[-66.1,18.4]},
               "properties":{"id":"S1","name":"CANA","type":"Substation","kv_min":38,"kv_max":115}}]}"#,
        );
        let sites = load_sites(&p).unwrap();
        assert_eq!(sites.len(), 1);
        assert_eq!(sites[0].id, "S1");
        assert_eq!(sites[0].name, "CANA");
        assert_eq!(sites[0].site_type, SiteType::Substation);
        assert_eq!(sites[0].location, GeoPoint::new(-66.1, 18.4));
        assert_eq!(sites[0].kv_min, Kv(38.0));
        assert_eq!(sites[0].kv_max, Kv(115.0));
    }

    #[test]
    fn polygon_site_reduces_to_centroid() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            &dir,
            "sites.geojson",
            r#"{"type":"FeatureCollection","features":[
              {"type":"Feature","geometry":{"type":"Polygon","coordinates":[[[0,0],[2,0],[2,2],[0,2],[0,0]]]},
               "properties":{"id":"S1","name":"SQ","type":"Other","kv_min":38,"kv_max":38}}]}"#,
        );
        let sites = load_sites(&p).unwrap();
        assert_eq!(sites[0].location, GeoPoint::new(1.0, 1.0));
    }

    #[test]
    fn missing_name_names_feature_and_field() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            &dir,
            "sites.geojson",
            r#"{"type":"FeatureCollection","features":[
              {"type":"Feature","geometry":{"type":"Point","coordinates":[0,0]},
               "properties":{"id":"S7","type":"Other","kv_min":38,"kv_max":38}}]}"#,
        );
        let err = load_sites(&p).unwrap_err();
        assert!(err.to_string().contains("S7: name"), "got {err}");
    }

    #[test]
    fn duplicate_site_id_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let feat = r#"{"type":"Feature","geometry":{"type":"Point","coordinates":[0,0]},
               "properties":{"id":"S1","name":"A","type":"Other","kv_min":38,"kv_max":38}}"#;
        let p = write_tmp(
            &dir,
            "sites.geojson",
            &format!(
                r#"{{"type":"FeatureCollection","features":[{feat},{feat}]}}"#
            ),
        );
        assert!(matches!(load_sites(&p), Err(Error::DuplicateId(_))));
    }

    #[test]
    fn circuit_id_normalization() {
        assert_eq!(normalize_circuit_id("37100"), Some("37100".into()));
        assert_eq!(normalize_circuit_id("NONE"), None);
        assert_eq!(normalize_circuit_id("0"), None);
        assert_eq!(normalize_circuit_id("  "), None);
    }

    #[test]
    fn short_linestring_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            &dir,
            "lines.geojson",
            r#"{"type":"FeatureCollection","features":[
              {"type":"Feature","geometry":{"type":"LineString","coordinates":[[0,0]]},
               "properties":{"id":"L1","circuit_id":"1","voltage":115}}]}"#,
        );
        assert!(matches!(load_lines(&p), Err(Error::InvalidGeometry(_))));
    }

    #[test]
    fn zone_assignment_interior_exterior_boundary() {
        let zone = ZonePolygon {
            zone_name: "A".into(),
            ring: vec![
                GeoPoint::new(0.0, 0.0),
                GeoPoint::new(2.0, 0.0),
                GeoPoint::new(2.0, 2.0),
                GeoPoint::new(0.0, 2.0),
                GeoPoint::new(0.0, 0.0),
            ],
        };
        let mk = |x: f64, y: f64| Site {
            id: format!("S{x}{y}"),
            name: "N".into(),
            site_type: SiteType::Other,
            kv_min: Kv(38.0),
            kv_max: Kv(38.0),
            location: GeoPoint::new(x, y),
            zone: None,
        };
        let sites = vec![mk(1.0, 1.0), mk(5.0, 5.0), mk(2.0, 1.0)];
        let out = assign_zones(&sites, &[zone]);
        assert_eq!(out[0].zone.as_deref(), Some("A"));
        assert_eq!(out[1].zone, None);
        // Exactly on the right edge: boundary counts as inside.
        assert_eq!(out[2].zone.as_deref(), Some("A"));
    }

    #[test]
    fn zone_assignment_order_independent_for_disjoint_polygons() {
        let za = ZonePolygon {
            zone_name: "A".into(),
            ring: vec![
                GeoPoint::new(0.0, 0.0),
                GeoPoint::new(1.0, 0.0),
                GeoPoint::new(1.0, 1.0),
                GeoPoint::new(0.0, 1.0),
                GeoPoint::new(0.0, 0.0),
            ],
        };
        let zb = ZonePolygon {
            zone_name: "B".into(),
            ring: vec![
                GeoPoint::new(5.0, 0.0),
                GeoPoint::new(6.0, 0.0),
                GeoPoint::new(6.0, 1.0),
                GeoPoint::new(5.0, 1.0),
                GeoPoint::new(5.0, 0.0),
            ],
        };
        let site = Site {
            id: "S1".into(),
            name: "N".into(),
            site_type: SiteType::Other,
            kv_min: Kv(38.0),
            kv_max: Kv(38.0),
            location: GeoPoint::new(5.5, 0.5),
            zone: None,
        };
        let one = assign_zones(&[site.clone()], &[za.clone(), zb.clone()]);
        let two = assign_zones(&[site], &[zb, za]);
        assert_eq!(one, two);
        assert_eq!(one[0].zone.as_deref(), Some("B"));
    }

    #[test]
    fn self_intersecting_zone_rejected() {
        let ring = vec![
            GeoPoint::new(0.0, 0.0),
            GeoPoint::new(2.0, 2.0),
            GeoPoint::new(2.0, 0.0),
            GeoPoint::new(0.0, 2.0),
            GeoPoint::new(0.0, 0.0),
        ];
        assert!(matches!(
            validate_ring(&ring, "bowtie"),
            Err(Error::InvalidGeometry(_))
        ));
    }

    #[test]
    fn power_model_loads_and_expands_3w() {
        let dir = tempfile::tempdir().unwrap();
        let buses = write_tmp(
            &dir,
            "buses.csv",
            "id,name,kv,area\n101,CANA 115,115,SANJUAN\n102,CANA 230,230,SANJUAN\n103,CANA 38,38,SANJUAN\n",
        );
        let branches = write_tmp(
            &dir,
            "branches.csv",
            "from_bus,to_bus,kind,circuit\n101,102,XFMR2W,\n",
        );
        let xfmr = write_tmp(&dir, "xfmr3w.csv", "bus1,bus2,bus3,name\n102,101,103,CANA T1\n");
        let model = load_power_model(&buses, &branches, &xfmr).unwrap();
        assert_eq!(model.buses.len(), 4);
        let star = model.buses.last().unwrap();
        assert_eq!(star.id, BusId(104));
        assert!(model.star_bus_ids.contains(&BusId(104)));
        let legs: Vec<&Branch> = model
            .branches
            .iter()
            .filter(|b| b.kind == BranchKind::Transformer3WLeg)
            .collect();
        assert_eq!(legs.len(), 3);
        assert!(legs.iter().all(|b| b.to_bus == BusId(104)));
        let b101 = model.bus(BusId(101)).unwrap();
        assert_eq!(b101.name, "CANA 115");
        assert_eq!(b101.kv, Kv(115.0));
    }

    #[test]
    fn star_bus_id_is_max_plus_ordinal() {
        let dir = tempfile::tempdir().unwrap();
        let buses = write_tmp(
            &dir,
            "buses.csv",
            "id,name,kv,area\n1,A,230,Z\n2,B,115,Z\n3,C,38,Z\n10000,D,115,Z\n",
        );
        let branches = write_tmp(&dir, "branches.csv", "from_bus,to_bus,kind,circuit\n");
        let xfmr = write_tmp(&dir, "xfmr3w.csv", "bus1,bus2,bus3,name\n1,2,3,T1\n");
        let model = load_power_model(&buses, &branches, &xfmr).unwrap();
        assert!(model.star_bus_ids.contains(&BusId(10001)));
    }

    #[test]
    fn self_loop_branch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let buses = write_tmp(&dir, "buses.csv", "id,name,kv,area\n5,A,115,Z\n");
        let branches = write_tmp(
            &dir,
            "branches.csv",
            "from_bus,to_bus,kind,circuit\n5,5,LINE,1\n",
        );
        let xfmr = write_tmp(&dir, "xfmr3w.csv", "bus1,bus2,bus3,name\n");
        assert!(matches!(
            load_power_model(&buses, &branches, &xfmr),
            Err(Error::SelfLoop(5))
        ));
    }

    #[test]
    fn dangling_branch_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let buses = write_tmp(&dir, "buses.csv", "id,name,kv,area\n5,A,115,Z\n");
        let branches = write_tmp(
            &dir,
            "branches.csv",
            "from_bus,to_bus,kind,circuit\n5,6,LINE,1\n",
        );
        let xfmr = write_tmp(&dir, "xfmr3w.csv", "bus1,bus2,bus3,name\n");
        assert!(matches!(
            load_power_model(&buses, &branches, &xfmr),
            Err(Error::DanglingReference(6))
        ));
    }

    #[test]
    fn crs_inference() {
        let geo = [GeoPoint::new(-66.1, 18.4)];
        assert_eq!(infer_crs(geo.iter()), CrsKind::Geographic);
        let proj = [GeoPoint::new(152_000.0, 18_000.0)];
        assert_eq!(infer_crs(proj.iter()), CrsKind::Projected);
    }
}
