//! Stage-interchange serialization for site groups (GeoJSON points).

use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::{GeoPoint, Kv, SiteGroup};

pub fn write_groups_geojson(groups: &[SiteGroup], path: &Path) -> Result<()> {
    let features: Vec<Value> = groups
        .iter()
        .map(|g| {
            let members: Vec<&str> = g.member_ids.iter().map(String::as_str).collect();
            json!({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [g.location.x, g.location.y]},
                "properties": {
                    "id": g.id,
                    "name": g.name,
                    "members": members,
                    "kv_min": g.kv_min.0,
                    "kv_max": g.kv_max.0,
                    "zone": g.zone,
                }
            })
        })
        .collect();
    let doc = json!({"type": "FeatureCollection", "features": features});
    std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

pub fn read_groups_geojson(path: &Path) -> Result<Vec<SiteGroup>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let root: Value = serde_json::from_str(&text)?;
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse("site groups: features".into()))?;
    let mut groups = Vec::with_capacity(features.len());
    for (i, f) in features.iter().enumerate() {
        let label = format!("group feature {i}");
        let props = f
            .get("properties")
            .ok_or_else(|| Error::Parse(format!("{label}: properties")))?;
        let get_str = |field: &str| -> Result<String> {
            props
                .get(field)
                .and_then(Value::as_str)
                .map(String::from)
                .ok_or_else(|| Error::Parse(format!("{label}: {field}")))
        };
        let get_num = |field: &str| -> Result<f64> {
            props
                .get(field)
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::Parse(format!("{label}: {field}")))
        };
        let coords = f
            .get("geometry")
            .and_then(|g| g.get("coordinates"))
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse(format!("{label}: coordinates")))?;
        let members = props
            .get("members")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse(format!("{label}: members")))?
            .iter()
            .map(|m| {
                m.as_str()
                    .map(String::from)
                    .ok_or_else(|| Error::Parse(format!("{label}: members")))
            })
            .collect::<Result<_>>()?;
        groups.push(SiteGroup {
            id: get_str("id")?,
            member_ids: members,
            name: get_str("name")?,
            kv_min: Kv(get_num("kv_min")?),
            kv_max: Kv(get_num("kv_max")?),
            location: GeoPoint::new(
                coords[0].as_f64().unwrap_or(0.0),
                coords[1].as_f64().unwrap_or(0.0),
            ),
            zone: props.get("zone").and_then(Value::as_str).map(String::from),
        });
    }
    Ok(groups)
}
