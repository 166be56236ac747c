//! Stage implementations shared by the subcommands and the end-to-end
//! pipeline. Every output file is written to a `.partial` path and renamed
//! on success, so a failed stage leaves only `.partial` artifacts behind.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};

use gridmap_core::config::{Config, CrsOverride};
use gridmap_core::eval::{
    eval_rows_from_mapping, mapping_metrics, read_truth_csv, threshold_violations,
    write_coverage_csv, write_metrics_csv, EvalRow, GroundTruth, MetricsRow,
};
use gridmap_core::graphbuild::{
    build_all, geo_graph_from_geojson, geo_graph_to_geojson, BuildOutput,
};
use gridmap_core::ingest;
use gridmap_core::matcher::{
    map_graphs, read_mapping_csv, write_branch_csv, write_mapping_csv, MapOutcome,
};
use gridmap_core::model::{BusId, CrsKind, GeoGraph, Kv, LineSegment, PowerModel, Site, SiteGroup};
use gridmap_core::preprocess::{
    group_sites, read_groups_geojson, repair_circuit_ids, snap_vertices, write_groups_geojson,
};
use gridmap_core::synth::write_lines_geojson;

use crate::manifest::RunManifest;

/// Stage failures that should exit 2 (bad input/config) versus 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Threshold(Vec<String>),
    Other(anyhow::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Threshold(v) => write!(f, "thresholds violated:\n  {}", v.join("\n  ")),
            CliError::Other(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Other(e)
    }
}

impl From<gridmap_core::Error> for CliError {
    fn from(e: gridmap_core::Error) -> Self {
        match &e {
            gridmap_core::Error::Config(_) | gridmap_core::Error::Parse(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Other(anyhow!(e)),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Threshold(_) => 3,
            CliError::Other(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn require_file(path: &Path) -> CliResult<()> {
    if !path.is_file() {
        return Err(CliError::Usage(format!("missing input file: {}", path.display())));
    }
    Ok(())
}

/// Write through a `.partial` sibling and rename on success.
pub fn write_atomic<F>(final_path: &Path, write_fn: F) -> Result<()>
where
    F: FnOnce(&Path) -> Result<()>,
{
    let partial = partial_path(final_path);
    write_fn(&partial)?;
    std::fs::rename(&partial, final_path)
        .with_context(|| format!("renaming into {}", final_path.display()))?;
    Ok(())
}

fn partial_path(path: &Path) -> PathBuf {
    let mut name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.push_str(".partial");
    path.with_file_name(name)
}

pub struct Corpus {
    pub sites: Vec<Site>,
    pub segments: Vec<LineSegment>,
    pub zones: Vec<ingest::ZonePolygon>,
    pub model: PowerModel,
    pub truth: Option<GroundTruth>,
    pub crs: CrsKind,
}

pub fn load_corpus(data: &Path, cfg: &Config, manifest: &mut RunManifest) -> CliResult<Corpus> {
    let sites_path = data.join("sites.geojson");
    let lines_path = data.join("lines.geojson");
    let zones_path = data.join("zones.geojson");
    let buses_path = data.join("buses.csv");
    let branches_path = data.join("branches.csv");
    let xfmr_path = data.join("xfmr3w.csv");
    for p in [&sites_path, &lines_path, &zones_path, &buses_path, &branches_path, &xfmr_path] {
        require_file(p)?;
        manifest.record_input(p)?;
    }
    let sites = ingest::load_sites(&sites_path)?;
    let segments = ingest::load_lines(&lines_path)?;
    let zones = ingest::load_zones(&zones_path)?;
    let model = ingest::load_power_model(&buses_path, &branches_path, &xfmr_path)?;
    let truth_path = data.join("truth.csv");
    let truth = if truth_path.is_file() {
        manifest.record_input(&truth_path)?;
        Some(read_truth_csv(&truth_path)?)
    } else {
        None
    };
    let crs = resolve_crs(cfg, &sites, &segments, &zones);
    log::info!(
        "loaded corpus: {} sites, {} segments, {} zones, {} buses ({:?})",
        sites.len(),
        segments.len(),
        zones.len(),
        model.buses.len(),
        crs
    );
    Ok(Corpus {
        sites,
        segments,
        zones,
        model,
        truth,
        crs,
    })
}

fn resolve_crs(
    cfg: &Config,
    sites: &[Site],
    segments: &[LineSegment],
    zones: &[ingest::ZonePolygon],
) -> CrsKind {
    match cfg.crs_override {
        CrsOverride::Geographic => CrsKind::Geographic,
        CrsOverride::Projected => CrsKind::Projected,
        CrsOverride::Auto => ingest::infer_crs(
            sites
                .iter()
                .map(|s| &s.location)
                .chain(segments.iter().flat_map(|s| s.vertices.iter()))
                .chain(zones.iter().flat_map(|z| z.ring.iter())),
        ),
    }
}

pub struct PreprocessResult {
    pub groups: Vec<SiteGroup>,
    pub segments: Vec<LineSegment>,
    pub unrepaired: usize,
}

pub fn run_preprocess(corpus: &Corpus, cfg: &Config) -> PreprocessResult {
    let sites = ingest::assign_zones(&corpus.sites, &corpus.zones);
    let groups = group_sites(&sites, &cfg.grouping, corpus.crs);
    let (repaired, unrepaired) = repair_circuit_ids(&corpus.segments, cfg.repair_eps, corpus.crs);
    let segments = snap_vertices(&repaired, &cfg.snap, corpus.crs);
    log::info!(
        "preprocess: {} sites -> {} groups, {} segments kept, {} unrepaired circuit ids",
        corpus.sites.len(),
        groups.len(),
        segments.len(),
        unrepaired
    );
    PreprocessResult {
        groups,
        segments,
        unrepaired,
    }
}

pub fn write_preprocess_outputs(
    pre: &PreprocessResult,
    out: &Path,
    manifest: &mut RunManifest,
) -> CliResult<()> {
    let groups_path = out.join("site_groups.geojson");
    write_atomic(&groups_path, |p| Ok(write_groups_geojson(&pre.groups, p)?))?;
    manifest.record_output(&groups_path)?;

    let segs_path = out.join("segments_clean.geojson");
    let no_forms = BTreeMap::new();
    write_atomic(&segs_path, |p| {
        Ok(write_lines_geojson(&pre.segments, &no_forms, p)?)
    })?;
    manifest.record_output(&segs_path)?;

    let report_path = out.join("preprocess_report.json");
    let report = serde_json::json!({
        "site_groups": pre.groups.len(),
        "segments_kept": pre.segments.len(),
        "unrepaired_circuit_ids": pre.unrepaired,
    });
    write_atomic(&report_path, |p| {
        Ok(std::fs::write(p, serde_json::to_string_pretty(&report)?)?)
    })?;
    manifest.record_output(&report_path)?;
    Ok(())
}

pub fn graph_file_name(kv: Kv) -> String {
    format!("geo_graph_{kv}.geojson")
}

pub fn write_build_outputs(
    built: &BuildOutput,
    groups: &[SiteGroup],
    out: &Path,
    manifest: &mut RunManifest,
) -> CliResult<()> {
    for (kv, graph) in &built.graphs {
        let path = out.join(graph_file_name(*kv));
        let doc = geo_graph_to_geojson(graph, groups);
        write_atomic(&path, |p| {
            Ok(std::fs::write(p, serde_json::to_string_pretty(&doc)?)?)
        })?;
        manifest.record_output(&path)?;
    }
    let coverage_path = out.join("coverage_report.csv");
    write_atomic(&coverage_path, |p| Ok(write_coverage_csv(&built.report, p)?))?;
    manifest.record_output(&coverage_path)?;
    Ok(())
}

pub fn read_geo_graphs(dir: &Path, manifest: &mut RunManifest) -> CliResult<BTreeMap<Kv, GeoGraph>> {
    let mut graphs = BTreeMap::new();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))
        .map_err(CliError::from)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map_or(false, |n| n.starts_with("geo_graph_") && n.ends_with(".geojson"))
        })
        .collect();
    paths.sort();
    for path in paths {
        manifest.record_input(&path)?;
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(CliError::from)?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", path.display()))
            .map_err(CliError::from)?;
        let graph = geo_graph_from_geojson(&value)?;
        graphs.insert(graph.voltage, graph);
    }
    if graphs.is_empty() {
        return Err(CliError::Usage(format!(
            "no geo_graph_*.geojson files in {}",
            dir.display()
        )));
    }
    Ok(graphs)
}

pub fn write_map_outputs(
    outcome: &MapOutcome,
    model: &PowerModel,
    out: &Path,
    manifest: &mut RunManifest,
) -> CliResult<()> {
    let mapping_path = out.join("mapping.csv");
    write_atomic(&mapping_path, |p| {
        Ok(write_mapping_csv(&outcome.mapping, model, p)?)
    })?;
    manifest.record_output(&mapping_path)?;

    let branch_path = out.join("branch_mapping.csv");
    write_atomic(&branch_path, |p| Ok(write_branch_csv(&outcome.branches, p)?))?;
    manifest.record_output(&branch_path)?;

    let diag_path = out.join("map_diagnostics.json");
    write_atomic(&diag_path, |p| {
        Ok(std::fs::write(
            p,
            serde_json::to_string_pretty(&outcome.diagnostics)?,
        )?)
    })?;
    manifest.record_output(&diag_path)?;
    Ok(())
}

pub fn eval_rows_from_csv(path: &Path) -> CliResult<Vec<EvalRow>> {
    let rows = read_mapping_csv(path)?;
    Ok(rows
        .into_iter()
        .map(|r| EvalRow {
            bus_id: BusId(r.bus_id),
            kv: Kv(r.kv),
            group_id: if r.site_group_id.is_empty() {
                None
            } else {
                Some(r.site_group_id)
            },
            arbitrary: r.origin == "Arbitrary",
        })
        .collect())
}

pub fn print_metrics(rows: &[MetricsRow]) {
    println!("voltage,pct_buses,pct_groups,accuracy");
    for r in rows {
        println!(
            "{},{:.1},{:.1},{}",
            r.voltage,
            r.buses_mapped_pct,
            r.groups_mapped_pct,
            r.accuracy.map_or(String::new(), |a| format!("{a:.1}"))
        );
    }
}

/// Full pipeline over an ingest corpus directory; returns the metric rows.
pub fn run_pipeline(
    data: &Path,
    out: &Path,
    cfg: &Config,
    manifest: &mut RunManifest,
) -> CliResult<Vec<MetricsRow>> {
    std::fs::create_dir_all(out)
        .with_context(|| format!("creating {}", out.display()))
        .map_err(CliError::from)?;

    let t = Instant::now();
    let corpus = load_corpus(data, cfg, manifest)?;
    manifest.record_timing("load", t.elapsed());

    let t = Instant::now();
    let pre = run_preprocess(&corpus, cfg);
    manifest.record_timing("preprocess", t.elapsed());
    write_preprocess_outputs(&pre, out, manifest)?;

    let t = Instant::now();
    let built = build_all(&pre.groups, &pre.segments, &cfg.build, corpus.crs);
    manifest.record_timing("build", t.elapsed());
    write_build_outputs(&built, &pre.groups, out, manifest)?;

    let t = Instant::now();
    let outcome = map_graphs(
        &built.graphs,
        &corpus.model,
        &pre.groups,
        &cfg.build.voltage_levels,
        &cfg.matcher,
    )?;
    manifest.record_timing("map", t.elapsed());
    write_map_outputs(&outcome, &corpus.model, out, manifest)?;

    let t = Instant::now();
    let rows = eval_rows_from_mapping(&outcome.mapping, &corpus.model);
    let metrics = mapping_metrics(&rows, &built.graphs, corpus.truth.as_ref());
    manifest.record_timing("eval", t.elapsed());
    let metrics_path = out.join("mapping_report.csv");
    write_atomic(&metrics_path, |p| Ok(write_metrics_csv(&metrics, p)?))?;
    manifest.record_output(&metrics_path)?;

    let violations = threshold_violations(&metrics, Some(&built.report), &cfg.eval);
    manifest.write(out).map_err(CliError::from)?;
    if !violations.is_empty() {
        return Err(CliError::Threshold(violations));
    }
    Ok(metrics)
}
