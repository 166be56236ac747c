//! Data cleaning ahead of graph building: string distances, site grouping,
//! circuit-id repair, and vertex snapping.

mod cluster;
mod grouping;
mod io;
mod lcs;
mod repair;
mod snap;

pub use grouping::group_sites;
pub use io::{read_groups_geojson, write_groups_geojson};
pub use lcs::{lcs_distance, lcs_similarity, normalize_name, normalized_name_distance};
pub use repair::repair_circuit_ids;
pub use snap::snap_vertices;
