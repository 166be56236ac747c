//! End-to-end pipeline runs over small generated corpora.

use gridmap_core::config::{Config, CorruptionKnobs, SynthConfig};
use gridmap_core::eval::{eval_rows_from_mapping, mapping_metrics};
use gridmap_core::graphbuild::{build_all, replay_strict_improvement};
use gridmap_core::ingest::{assign_zones, infer_crs};
use gridmap_core::matcher::map_graphs;
use gridmap_core::model::{path_length, Kv, MappingTable, PowerModel};
use gridmap_core::preprocess::{group_sites, repair_circuit_ids, snap_vertices};
use gridmap_core::synth::{corrupt, generate_truth, SynthOutput};
use gridmap_core::CrsKind;

fn small_cfg(seed: u64) -> SynthConfig {
    SynthConfig {
        rng_seed: seed,
        n_buses: vec![(Kv(230.0), 4), (Kv(115.0), 10), (Kv(38.0), 40)],
        mesh_fraction_38kv: 0.2,
        xfmr2w: vec![(Kv(230.0), Kv(115.0), 3), (Kv(115.0), Kv(38.0), 8)],
        xfmr3w_count: 5,
        min_station_sep_m: 1000.0,
        corruption: CorruptionKnobs::default(),
    }
}

struct PipelineRun {
    mapping: MappingTable,
    model: PowerModel,
    metrics: Vec<gridmap_core::eval::MetricsRow>,
    coverage: Vec<f64>,
}

fn run_pipeline(corpus: &SynthOutput, cfg: &Config) -> PipelineRun {
    let crs = infer_crs(corpus.sites.iter().map(|s| &s.location));
    assert_eq!(crs, CrsKind::Geographic);

    let sites = assign_zones(&corpus.sites, &corpus.zones);
    let groups = group_sites(&sites, &cfg.grouping, crs);
    let (repaired, _unrepaired) = repair_circuit_ids(&corpus.segments, cfg.repair_eps, crs);
    let snapped = snap_vertices(&repaired, &cfg.snap, crs);
    let built = build_all(&groups, &snapped, &cfg.build, crs);
    for trace in &built.traces {
        replay_strict_improvement(trace).unwrap();
    }
    // Every built edge's weight matches its geometry length.
    for graph in built.graphs.values() {
        for e in &graph.edges {
            let len = path_length(&e.geometry, crs).unwrap();
            assert!(
                (len - e.weight_m).abs() <= 1e-6 * e.weight_m.max(1.0),
                "edge weight {} vs geometry {}",
                e.weight_m,
                len
            );
        }
    }

    let model = PowerModel {
        buses: corpus.buses.clone(),
        branches: corpus.branches.clone(),
        star_bus_ids: Default::default(),
    };
    // Expand 3W rows the way the ingest path would.
    let model = expand_3w(model, corpus);

    let outcome = map_graphs(
        &built.graphs,
        &model,
        &groups,
        &cfg.build.voltage_levels,
        &cfg.matcher,
    )
    .unwrap();
    let rows = eval_rows_from_mapping(&outcome.mapping, &model);
    let metrics = mapping_metrics(&rows, &built.graphs, Some(&corpus.truth));
    let coverage = built
        .report
        .rows
        .iter()
        .map(|r| r.coverage_percent)
        .collect();
    PipelineRun {
        mapping: outcome.mapping,
        model,
        metrics,
        coverage,
    }
}

fn expand_3w(mut model: PowerModel, corpus: &SynthOutput) -> PowerModel {
    use gridmap_core::model::{Branch, BranchKind, Bus, BusId};
    let max_id = model.buses.iter().map(|b| b.id.0).max().unwrap_or(0);
    for (i, x) in corpus.xfmr3w.iter().enumerate() {
        let star = BusId(max_id + i as i64 + 1);
        let kv = [x.bus1, x.bus2, x.bus3]
            .iter()
            .map(|b| model.bus(*b).unwrap().kv)
            .min()
            .unwrap();
        let area = model.bus(x.bus1).unwrap().area.clone();
        model.buses.push(Bus {
            id: star,
            name: format!("{} STAR", x.name),
            kv,
            area,
        });
        model.star_bus_ids.insert(star);
        for w in [x.bus1, x.bus2, x.bus3] {
            model.branches.push(Branch {
                from_bus: w,
                to_bus: star,
                kind: BranchKind::Transformer3WLeg,
                circuit: String::new(),
            });
        }
    }
    model
}

#[test]
fn identity_pipeline_is_perfect() {
    let corpus = generate_truth(&small_cfg(21)).unwrap();
    let cfg = Config::default();
    let run = run_pipeline(&corpus, &cfg);
    for cov in &run.coverage {
        assert!((cov - 100.0).abs() < 1e-9, "coverage {cov}");
    }
    for m in &run.metrics {
        assert_eq!(m.buses_mapped_pct, 100.0, "{} kV buses", m.voltage);
        assert_eq!(m.groups_mapped_pct, 100.0, "{} kV groups", m.voltage);
        assert_eq!(m.accuracy, Some(100.0), "{} kV accuracy", m.voltage);
    }
}

#[test]
fn corrupted_pipeline_still_maps_most_buses() {
    let corpus = generate_truth(&small_cfg(5)).unwrap();
    let knobs = CorruptionKnobs {
        name_abbrev_rate: 0.2,
        name_voltage_suffix_rate: 0.2,
        missing_circuit_rate: 0.1,
        vertex_jitter_sigma_m: 5.0,
        site_split_rate: 0.1,
        tap_rate: 0.05,
        legacy_bus_rate: 0.02,
        line_version_drift_rate: 0.02,
    };
    let corrupted = corrupt(&corpus, &knobs, 5);
    let cfg = Config::default();
    let run = run_pipeline(&corrupted, &cfg);
    let top = &run.metrics[0];
    assert!(top.buses_mapped_pct > 50.0);
    let acc = top.accuracy.expect("some buses mapped");
    assert!(acc >= 75.0, "230 kV accuracy {acc}");
}

#[test]
fn seed_immutability_holds_end_to_end() {
    // Pre/post diff: every seed present before topology growth survives
    // unchanged in the final table.
    let corpus = generate_truth(&small_cfg(9)).unwrap();
    let cfg = Config::default();
    let run = run_pipeline(&corpus, &cfg);
    use gridmap_core::MappingOrigin;
    for entry in run.mapping.entries() {
        if let Some(m) = &entry.mapped {
            if m.origin == MappingOrigin::NameSeed {
                let bus = run.model.bus(entry.bus_id).unwrap();
                // Identity corpus: the seed is the bus's own station group.
                assert_eq!(
                    corpus.truth.bus_to_group[&bus.id], m.group_id,
                    "seed for bus {} intact",
                    bus.id
                );
            }
        }
    }
}

#[test]
#[ignore = "full-scale probe; run explicitly in release"]
fn identity_pipeline_full_scale_probe() {
    let start = std::time::Instant::now();
    let corpus = generate_truth(&SynthConfig::default()).unwrap();
    eprintln!("generate: {:?}", start.elapsed());
    let cfg = Config::default();
    let t = std::time::Instant::now();
    let run = run_pipeline(&corpus, &cfg);
    eprintln!("pipeline: {:?}", t.elapsed());
    for m in &run.metrics {
        eprintln!(
            "{} kV: mapped {:.1}% groups {:.1}% acc {:?}",
            m.voltage, m.buses_mapped_pct, m.groups_mapped_pct, m.accuracy
        );
    }
    for c in &run.coverage {
        eprintln!("coverage {c:.2}");
    }
    assert!(run.metrics.iter().all(|m| m.accuracy == Some(100.0)));
}

#[test]
#[ignore = "corruption sweep probe; run explicitly in release"]
fn moderate_corruption_probe() {
    let knobs = CorruptionKnobs {
        name_abbrev_rate: 0.2,
        name_voltage_suffix_rate: 0.2,
        missing_circuit_rate: 0.1,
        vertex_jitter_sigma_m: 5.0,
        site_split_rate: 0.1,
        tap_rate: 0.05,
        legacy_bus_rate: 0.02,
        line_version_drift_rate: 0.02,
    };
    let mut sums = [0.0f64; 3];
    let seeds = 5u64;
    for seed in 0..seeds {
        let mut synth_cfg = SynthConfig::default();
        synth_cfg.rng_seed = 1000 + seed;
        let corpus = generate_truth(&synth_cfg).unwrap();
        let corrupted = corrupt(&corpus, &knobs, 1000 + seed);
        let t = std::time::Instant::now();
        let run = run_pipeline(&corrupted, &Config::default());
        eprint!("seed {seed} ({:?}):", t.elapsed());
        for (i, m) in run.metrics.iter().enumerate() {
            let acc = m.accuracy.unwrap_or(0.0);
            sums[i] += acc;
            eprint!("  {} kV acc {:.2} mapped {:.1} cov-", m.voltage, acc, m.buses_mapped_pct);
        }
        for c in &run.coverage {
            eprint!(" {c:.1}");
        }
        eprintln!();
    }
    eprintln!(
        "averages: 230={:.2} 115={:.2} 38={:.2}",
        sums[0] / seeds as f64,
        sums[1] / seeds as f64,
        sums[2] / seeds as f64
    );
}
