//! Aligns a power-system network model (buses/branches/transformers) with
//! geospatial asset data (sites/transmission-line segments): cleaned
//! geospatial graphs are built per voltage level and matched to the power
//! graph via combined name-similarity and topology-growth strategies.

pub mod config;
pub mod error;
pub mod eval;
pub mod graphbuild;
pub mod ingest;
pub mod matcher;
pub mod model;
pub mod preprocess;
pub mod synth;

pub use error::{Error, Result};
pub use model::{
    Branch, BranchKind, Bus, BusId, CandidatePool, CandidateRow, CircuitNetwork, CrsKind,
    GeoEdge, GeoGraph, GeoPoint, GroupId, Kv, LineSegment, MappedSite, MappingEntry,
    MappingOrigin, MappingTable, NetEdge, PowerGraph, PowerModel, SimilarityMatrix, Site,
    SiteGroup, SiteId, SiteType,
};
