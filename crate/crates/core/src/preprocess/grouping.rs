//! Site grouping: per-zone multi-criteria clustering on name and spatial
//! distance, combined by label intersection.

use rayon::prelude::*;

use crate::config::GroupingConfig;
use crate::model::{distance_m, CrsKind, Site, SiteGroup};
use crate::preprocess::cluster::cluster_labels;
use crate::preprocess::lcs::normalized_name_distance;

/// Group sites into presumed electrical locations. Within each zone the
/// sites are clustered twice (name distance, spatial distance) and two sites
/// share a group iff they share a cluster under BOTH criteria. Sites without
/// a zone form singleton groups.
pub fn group_sites(sites: &[Site], cfg: &GroupingConfig, crs: CrsKind) -> Vec<SiteGroup> {
    let mut zoned: std::collections::BTreeMap<&str, Vec<&Site>> = Default::default();
    let mut zoneless: Vec<&Site> = Vec::new();
    for s in sites {
        match &s.zone {
            Some(z) => zoned.entry(z.as_str()).or_default().push(s),
            None => zoneless.push(s),
        }
    }

    let strata: Vec<(&str, Vec<&Site>)> = zoned
        .into_iter()
        .map(|(z, mut members)| {
            members.sort_by(|a, b| a.id.cmp(&b.id));
            (z, members)
        })
        .collect();

    let mut groups: Vec<SiteGroup> = strata
        .par_iter()
        .flat_map_iter(|(_, members)| group_one_zone(members, cfg, crs))
        .collect();

    for s in &zoneless {
        groups.push(SiteGroup::from_members(&[s]));
    }
    groups.sort_by(|a, b| a.id.cmp(&b.id));
    groups
}

fn group_one_zone(members: &[&Site], cfg: &GroupingConfig, crs: CrsKind) -> Vec<SiteGroup> {
    let n = members.len();
    let names: Vec<&str> = members.iter().map(|s| s.name.as_str()).collect();
    let name_labels = cluster_labels(
        n,
        |i, j| normalized_name_distance(names[i], names[j]),
        cfg.linkage,
        cfg.name_dist_threshold,
    );
    let spatial_labels = cluster_labels(
        n,
        |i, j| distance_m(members[i].location, members[j].location, crs),
        cfg.linkage,
        cfg.spatial_threshold,
    );

    let mut combined: std::collections::BTreeMap<(usize, usize), Vec<&Site>> = Default::default();
    for (idx, site) in members.iter().enumerate() {
        combined
            .entry((name_labels[idx], spatial_labels[idx]))
            .or_default()
            .push(site);
    }
    combined
        .into_values()
        .map(|m| SiteGroup::from_members(&m))
        .collect()
}
