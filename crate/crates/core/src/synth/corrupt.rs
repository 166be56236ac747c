//! Corruption operators, one knob per discrepancy class, applied
//! independently per element. Ground truth changes only where the semantics
//! demand it (taps and legacy buses become unmappable; split sites keep the
//! original group id).

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::CorruptionKnobs;
use crate::model::{
    Branch, BranchKind, Bus, BusId, CrsKind, GeoPoint, LineSegment, LocalFrame, Site,
    SiteType,
};
use crate::synth::SynthOutput;

const MISSING_FORMS: [&str; 4] = ["NONE", "0", "", "null"];

/// Apply the configured corruption to a generated corpus. Deterministic for
/// a given seed; all knobs at zero leave the corpus untouched.
pub fn corrupt(input: &SynthOutput, knobs: &CorruptionKnobs, rng_seed: u64) -> SynthOutput {
    let mut out = input.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    drift_lines(&mut out, knobs.line_version_drift_rate, &mut rng);
    insert_taps(&mut out, knobs.tap_rate, &mut rng);
    retire_legacy_buses(&mut out, knobs.legacy_bus_rate, &mut rng);
    split_sites(&mut out, knobs.site_split_rate, &mut rng);
    corrupt_names(&mut out, knobs, &mut rng);
    blank_circuit_ids(&mut out, knobs.missing_circuit_rate, &mut rng);
    jitter_vertices(&mut out, knobs.vertex_jitter_sigma_m, &mut rng);
    out
}

/// The two datasets drift apart: an edge loses its line in exactly one of
/// them, or one dataset gains a line the other never sees.
fn drift_lines(out: &mut SynthOutput, rate: f64, rng: &mut ChaCha8Rng) {
    let mut drop_branches: Vec<usize> = Vec::new();
    let mut drop_segments: Vec<String> = Vec::new();
    let links = out.edge_links.clone();
    for link in &links {
        if rng.gen::<f64>() >= rate {
            continue;
        }
        if rng.gen_bool(0.5) {
            // Delete from one side.
            if rng.gen_bool(0.5) {
                drop_branches.push(link.branch_index);
            } else {
                drop_segments.extend(link.segment_ids.iter().cloned());
            }
        } else {
            // Add to one side: a fresh connection between the edge's
            // endpoints' stations and a nearby third party is overkill;
            // duplicate the corridor under a new circuit instead.
            let branch = &out.branches[link.branch_index];
            if rng.gen_bool(0.5) {
                out.branches.push(Branch {
                    from_bus: branch.from_bus,
                    to_bus: branch.to_bus,
                    kind: BranchKind::Line,
                    circuit: format!("D{:04}", rng.gen_range(1000..9999)),
                });
            } else {
                let circuit = format!("D{:04}", rng.gen_range(1000..9999));
                let mut vertices: Vec<GeoPoint> = Vec::new();
                for sid in &link.segment_ids {
                    if let Some(seg) = out.segments.iter().find(|s| &s.id == sid) {
                        if vertices.is_empty() {
                            vertices.extend(seg.vertices.iter().copied());
                        } else {
                            vertices.extend(seg.vertices.iter().skip(1).copied());
                        }
                    }
                }
                if vertices.len() >= 2 {
                    let voltage = link.voltage;
                    out.segments.push(LineSegment {
                        id: format!("L9{:04}", out.segments.len()),
                        circuit_id: Some(circuit),
                        voltage,
                        vertices,
                    });
                }
            }
        }
    }
    drop_branches.sort_unstable();
    drop_branches.dedup();
    for idx in drop_branches.into_iter().rev() {
        out.branches.remove(idx);
        for link in &mut out.edge_links {
            if link.branch_index > idx {
                link.branch_index -= 1;
            }
        }
    }
    out.segments.retain(|s| !drop_segments.contains(&s.id));
}

/// Split a line branch at a new tap bus with no site behind it.
fn insert_taps(out: &mut SynthOutput, rate: f64, rng: &mut ChaCha8Rng) {
    let mut next_id = out.buses.iter().map(|b| b.id.0).max().unwrap_or(0) + 1;
    let candidates: Vec<usize> = (0..out.branches.len())
        .filter(|&i| out.branches[i].kind == BranchKind::Line)
        .collect();
    let mut replacements: Vec<(usize, BusId)> = Vec::new();
    for idx in candidates {
        if rng.gen::<f64>() < rate {
            replacements.push((idx, BusId(next_id)));
            next_id += 1;
        }
    }
    for (idx, tap_id) in replacements.into_iter().rev() {
        let branch = out.branches[idx].clone();
        let template = out
            .buses
            .iter()
            .find(|b| b.id == branch.from_bus)
            .cloned()
            .expect("branch endpoints exist");
        out.buses.push(Bus {
            id: tap_id,
            name: format!("TAP {}", tap_id.0),
            kv: template.kv,
            area: template.area,
        });
        out.truth.mappable.insert(tap_id, false);
        out.branches[idx] = Branch {
            from_bus: branch.from_bus,
            to_bus: tap_id,
            kind: BranchKind::Line,
            circuit: branch.circuit.clone(),
        };
        out.branches.push(Branch {
            from_bus: tap_id,
            to_bus: branch.to_bus,
            kind: BranchKind::Line,
            circuit: branch.circuit,
        });
    }
}

/// Retire sites whose station hosts exactly one bus; the bus stays in the
/// model but can no longer be mapped.
fn retire_legacy_buses(out: &mut SynthOutput, rate: f64, rng: &mut ChaCha8Rng) {
    let mut buses_per_group: std::collections::BTreeMap<&str, usize> = Default::default();
    for group in out.truth.bus_to_group.values() {
        *buses_per_group.entry(group.as_str()).or_insert(0) += 1;
    }
    let single_bus: std::collections::BTreeSet<String> = buses_per_group
        .iter()
        .filter(|(_, &n)| n == 1)
        .map(|(g, _)| g.to_string())
        .collect();

    let mut retired_sites: Vec<String> = Vec::new();
    let mut retired_buses: Vec<BusId> = Vec::new();
    for bus in &out.buses {
        let group = match out.truth.bus_to_group.get(&bus.id) {
            Some(g) if single_bus.contains(g) => g.clone(),
            _ => continue,
        };
        if rng.gen::<f64>() < rate {
            retired_sites.push(group);
            retired_buses.push(bus.id);
        }
    }
    out.sites.retain(|s| !retired_sites.contains(&s.id));
    for bus in retired_buses {
        out.truth.bus_to_group.remove(&bus);
        out.truth.mappable.insert(bus, false);
    }
}

/// One site becomes a substation/switch-yard pair within 60 m sharing the
/// name stem. The substation keeps the original id, so the eventual group id
/// (the smallest member id) stays the ground-truth id.
fn split_sites(out: &mut SynthOutput, rate: f64, rng: &mut ChaCha8Rng) {
    let mut additions: Vec<Site> = Vec::new();
    for site in &mut out.sites {
        if rng.gen::<f64>() >= rate {
            continue;
        }
        let frame = LocalFrame::new(site.location, CrsKind::Geographic);
        let bearing = rng.gen_range(0.0..std::f64::consts::TAU);
        let radius = rng.gen_range(20.0..30.0);
        let (dx, dy) = (bearing.cos() * radius, bearing.sin() * radius);
        let twin = Site {
            id: format!("{}B", site.id),
            name: format!("{} SY", site.name),
            site_type: SiteType::SwitchYard,
            kv_min: site.kv_min,
            kv_max: site.kv_max,
            location: frame.from_local(-dx, -dy),
            zone: None,
        };
        site.name = format!("{} SUB", site.name);
        site.site_type = SiteType::Substation;
        site.location = frame.from_local(dx, dy);
        additions.push(twin);
    }
    out.sites.extend(additions);
}

fn corrupt_names(out: &mut SynthOutput, knobs: &CorruptionKnobs, rng: &mut ChaCha8Rng) {
    for bus in &mut out.buses {
        if rng.gen::<f64>() < knobs.name_abbrev_rate {
            bus.name = if rng.gen_bool(0.5) {
                drop_vowels(&bus.name)
            } else {
                truncate_name(&bus.name)
            };
        }
        if rng.gen::<f64>() < knobs.name_voltage_suffix_rate {
            bus.name = format!("{} {}", bus.name, bus.kv);
        }
    }
}

/// Keep each word's first letter, drop its other vowels.
fn drop_vowels(name: &str) -> String {
    name.split(' ')
        .map(|word| {
            let mut chars = word.chars();
            let mut kept: String = chars.next().map(String::from).unwrap_or_default();
            kept.extend(chars.filter(|c| !"AEIOU".contains(*c)));
            kept
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn truncate_name(name: &str) -> String {
    let chars: Vec<char> = name.chars().collect();
    let keep = ((chars.len() as f64 * 0.6).ceil() as usize).max(2).min(chars.len());
    chars[..keep].iter().collect::<String>().trim_end().to_string()
}

/// Blank circuit ids to one of the source forms "NONE", "0", "" or null.
fn blank_circuit_ids(out: &mut SynthOutput, rate: f64, rng: &mut ChaCha8Rng) {
    for seg in &mut out.segments {
        if seg.circuit_id.is_some() && rng.gen::<f64>() < rate {
            seg.circuit_id = None;
            let form = MISSING_FORMS[rng.gen_range(0..MISSING_FORMS.len())];
            out.missing_forms.insert(seg.id.clone(), form.to_string());
        }
    }
}

fn jitter_vertices(out: &mut SynthOutput, sigma_m: f64, rng: &mut ChaCha8Rng) {
    if sigma_m <= 0.0 {
        return;
    }
    let normal = Normal::new(0.0, sigma_m).expect("valid sigma");
    for seg in &mut out.segments {
        for v in &mut seg.vertices {
            let frame = LocalFrame::new(*v, CrsKind::Geographic);
            let (dx, dy) = (normal.sample(rng), normal.sample(rng));
            *v = frame.from_local(dx, dy);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{CorruptionKnobs, SynthConfig};
    use crate::model::Kv;
    use crate::synth::generate_truth;

    fn base() -> SynthOutput {
        let cfg = SynthConfig {
            rng_seed: 11,
            n_buses: vec![(Kv(230.0), 3), (Kv(115.0), 6), (Kv(38.0), 15)],
            mesh_fraction_38kv: 0.2,
            xfmr2w: vec![(Kv(230.0), Kv(115.0), 2), (Kv(115.0), Kv(38.0), 4)],
            xfmr3w_count: 3,
            min_station_sep_m: 1000.0,
            corruption: CorruptionKnobs::default(),
        };
        generate_truth(&cfg).unwrap()
    }

    #[test]
    fn zero_knobs_change_nothing() {
        let input = base();
        let out = corrupt(&input, &CorruptionKnobs::default(), 99);
        assert_eq!(out, input);
    }

    #[test]
    fn saturated_missing_rate_blanks_everything() {
        let input = base();
        let knobs = CorruptionKnobs {
            missing_circuit_rate: 1.0,
            ..Default::default()
        };
        let out = corrupt(&input, &knobs, 99);
        assert!(out.segments.iter().all(|s| s.circuit_id.is_none()));
        assert_eq!(out.missing_forms.len(), out.segments.len());
    }

    #[test]
    fn voltage_suffix_preserves_truth() {
        let input = base();
        let knobs = CorruptionKnobs {
            name_voltage_suffix_rate: 1.0,
            ..Default::default()
        };
        let out = corrupt(&input, &knobs, 99);
        for (i, bus) in out.buses.iter().enumerate() {
            assert!(bus.name.ends_with(&format!(" {}", bus.kv)), "{}", bus.name);
            assert_eq!(
                out.truth.bus_to_group.get(&bus.id),
                input.truth.bus_to_group.get(&input.buses[i].id)
            );
        }
    }

    #[test]
    fn taps_are_the_only_knob_changing_bus_count() {
        let input = base();
        let knobs = CorruptionKnobs {
            name_abbrev_rate: 0.5,
            name_voltage_suffix_rate: 0.5,
            missing_circuit_rate: 0.5,
            vertex_jitter_sigma_m: 5.0,
            site_split_rate: 0.5,
            legacy_bus_rate: 0.5,
            line_version_drift_rate: 0.5,
            tap_rate: 0.0,
        };
        let out = corrupt(&input, &knobs, 99);
        assert_eq!(out.buses.len(), input.buses.len());

        let with_taps = CorruptionKnobs {
            tap_rate: 1.0,
            ..Default::default()
        };
        let out = corrupt(&input, &with_taps, 99);
        assert!(out.buses.len() > input.buses.len());
        for bus in out.buses.iter().skip(input.buses.len()) {
            assert_eq!(out.truth.mappable[&bus.id], false);
            assert!(bus.name.starts_with("TAP "));
        }
    }

    #[test]
    fn split_keeps_original_id_as_smallest_member() {
        let input = base();
        let knobs = CorruptionKnobs {
            site_split_rate: 1.0,
            ..Default::default()
        };
        let out = corrupt(&input, &knobs, 99);
        assert_eq!(out.sites.len(), 2 * input.sites.len());
        for original in &input.sites {
            let sub = out.sites.iter().find(|s| s.id == original.id).unwrap();
            let twin = out
                .sites
                .iter()
                .find(|s| s.id == format!("{}B", original.id))
                .unwrap();
            assert!(sub.name.ends_with(" SUB"));
            assert!(twin.name.ends_with(" SY"));
            let gap = crate::model::distance_m(
                sub.location,
                twin.location,
                CrsKind::Geographic,
            );
            assert!(gap > 30.0 && gap < 70.0, "split gap {gap}");
        }
        assert_eq!(out.truth, input.truth);
    }

    #[test]
    fn legacy_buses_lose_their_site_but_stay_in_the_model() {
        let input = base();
        let knobs = CorruptionKnobs {
            legacy_bus_rate: 1.0,
            ..Default::default()
        };
        let out = corrupt(&input, &knobs, 99);
        assert_eq!(out.buses.len(), input.buses.len());
        assert!(out.sites.len() < input.sites.len());
        let retired = input.sites.len() - out.sites.len();
        let unmappable = out.truth.mappable.values().filter(|&&m| !m).count();
        assert_eq!(retired, unmappable);
    }

    #[test]
    fn abbreviation_operators() {
        assert_eq!(drop_vowels("MONACILLOS"), "MNCLLS");
        assert_eq!(drop_vowels("SAN JUAN SP"), "SN JN SP");
        assert_eq!(truncate_name("MONACILLOS"), "MONACI");
        assert_eq!(truncate_name("AB"), "AB");
    }
}
