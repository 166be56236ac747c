//! Flat keyed configuration file (`key = value` lines, `#` comments) and the
//! typed per-stage configs derived from it.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Kv;

/// String distance clustered on by site grouping (name criterion).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linkage {
    Single,
    Complete,
}

#[derive(Debug, Clone)]
pub struct GroupingConfig {
    /// Normalized name-distance cut, in [0,1].
    pub name_dist_threshold: f64,
    /// Spatial cut in meters.
    pub spatial_threshold: f64,
    pub linkage: Linkage,
}

impl Default for GroupingConfig {
    fn default() -> Self {
        GroupingConfig {
            name_dist_threshold: 0.4,
            spatial_threshold: 200.0,
            linkage: Linkage::Complete,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SnapConfig {
    pub eps: f64,
    /// Fixed at 1: snapping must not label isolated vertices as noise.
    pub min_pts: usize,
}

impl Default for SnapConfig {
    fn default() -> Self {
        SnapConfig {
            eps: 10.0,
            min_pts: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuildConfig {
    /// Max perpendicular distance (meters) from a group centroid to a
    /// circuit line for the group to count as connected.
    pub attach_threshold: f64,
    pub voltage_levels: Vec<Kv>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            attach_threshold: 100.0,
            voltage_levels: vec![Kv(230.0), Kv(115.0), Kv(38.0)],
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatchConfig {
    pub seed_threshold: f64,
    pub max_outer_iters: usize,
    pub max_dup_iters: usize,
    pub confirm_min_checkins: usize,
    pub confirm_score: f64,
    /// Assign still-unmapped buses to a mapped neighbor's group
    /// (origin=Arbitrary). Off by default to keep accuracy honest.
    pub arbitrary_legacy: bool,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            seed_threshold: 0.6,
            max_outer_iters: 2000,
            max_dup_iters: 10,
            confirm_min_checkins: 2,
            confirm_score: 0.8,
            arbitrary_legacy: false,
        }
    }
}

/// Discrepancy-injection rates, one knob per discrepancy class.
#[derive(Debug, Clone)]
pub struct CorruptionKnobs {
    pub name_abbrev_rate: f64,
    pub name_voltage_suffix_rate: f64,
    pub missing_circuit_rate: f64,
    pub vertex_jitter_sigma_m: f64,
    pub site_split_rate: f64,
    pub tap_rate: f64,
    pub legacy_bus_rate: f64,
    pub line_version_drift_rate: f64,
}

impl Default for CorruptionKnobs {
    fn default() -> Self {
        CorruptionKnobs {
            name_abbrev_rate: 0.0,
            name_voltage_suffix_rate: 0.0,
            missing_circuit_rate: 0.0,
            vertex_jitter_sigma_m: 0.0,
            site_split_rate: 0.0,
            tap_rate: 0.0,
            legacy_bus_rate: 0.0,
            line_version_drift_rate: 0.0,
        }
    }
}

impl CorruptionKnobs {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("synth.corruption.name_abbrev_rate", self.name_abbrev_rate),
            (
                "synth.corruption.name_voltage_suffix_rate",
                self.name_voltage_suffix_rate,
            ),
            (
                "synth.corruption.missing_circuit_rate",
                self.missing_circuit_rate,
            ),
            ("synth.corruption.site_split_rate", self.site_split_rate),
            ("synth.corruption.tap_rate", self.tap_rate),
            ("synth.corruption.legacy_bus_rate", self.legacy_bus_rate),
            (
                "synth.corruption.line_version_drift_rate",
                self.line_version_drift_rate,
            ),
        ];
        for (key, v) in rates {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{key}: rate must be in [0,1]")));
            }
        }
        if self.vertex_jitter_sigma_m < 0.0 {
            return Err(Error::Config(
                "synth.corruption.vertex_jitter_sigma_m: must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub rng_seed: u64,
    /// Bus count per voltage level, highest level first.
    pub n_buses: Vec<(Kv, usize)>,
    pub mesh_fraction_38kv: f64,
    /// Two-winding transformer counts per (high, low) level pair.
    pub xfmr2w: Vec<(Kv, Kv, usize)>,
    /// Three-winding transformers across the top three levels.
    pub xfmr3w_count: usize,
    /// Minimum separation between generated stations, meters.
    pub min_station_sep_m: f64,
    pub corruption: CorruptionKnobs,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            rng_seed: 42,
            // 1367 buses total across the three levels.
            n_buses: vec![(Kv(230.0), 17), (Kv(115.0), 115), (Kv(38.0), 1235)],
            mesh_fraction_38kv: 0.2,
            xfmr2w: vec![(Kv(230.0), Kv(115.0), 24), (Kv(115.0), Kv(38.0), 131)],
            xfmr3w_count: 26,
            min_station_sep_m: 1000.0,
            corruption: CorruptionKnobs::default(),
        }
    }
}

/// Metric floors checked by the eval stage; a violated floor makes the CLI
/// exit nonzero.
#[derive(Debug, Clone, Default)]
pub struct EvalThresholds {
    pub min_accuracy: Option<f64>,
    pub min_buses_mapped_pct: Option<f64>,
    pub min_groups_mapped_pct: Option<f64>,
    pub min_coverage_pct: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrsOverride {
    Auto,
    Geographic,
    Projected,
}

/// Everything the pipeline reads from one keyed config file.
#[derive(Debug, Clone)]
pub struct Config {
    pub grouping: GroupingConfig,
    pub snap: SnapConfig,
    /// Radius for circuit-id repair neighbor search, meters.
    pub repair_eps: f64,
    pub build: BuildConfig,
    pub matcher: MatchConfig,
    pub synth: SynthConfig,
    pub eval: EvalThresholds,
    pub threads: Option<usize>,
    pub crs_override: CrsOverride,
    /// Raw key/value pairs as parsed, for manifests.
    pub raw: BTreeMap<String, String>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            grouping: GroupingConfig::default(),
            snap: SnapConfig::default(),
            repair_eps: 25.0,
            build: BuildConfig::default(),
            matcher: MatchConfig::default(),
            synth: SynthConfig::default(),
            eval: EvalThresholds::default(),
            threads: None,
            crs_override: CrsOverride::Auto,
            raw: BTreeMap::new(),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| Error::Config(format!("{key}: expected number, got {v:?}")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| Error::Config(format!("{key}: expected integer, got {v:?}")))
}

fn parse_u64(key: &str, v: &str) -> Result<u64> {
    v.parse::<u64>()
        .map_err(|_| Error::Config(format!("{key}: expected integer, got {v:?}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected bool, got {v:?}"))),
    }
}

fn parse_kv_list(key: &str, v: &str) -> Result<Vec<Kv>> {
    v.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map(Kv)
                .map_err(|_| Error::Config(format!("{key}: bad voltage {s:?}")))
        })
        .collect()
}

impl Config {
    /// Parse the keyed text format. Unknown keys are rejected so typos fail
    /// loudly, with the key name in the error.
    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg = Config::default();
        let mut n_buses_overrides: BTreeMap<String, usize> = BTreeMap::new();
        let mut xfmr2w_overrides: BTreeMap<String, usize> = BTreeMap::new();

        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            cfg.raw.insert(key.to_string(), value.to_string());

            match key {
                "grouping.name_dist_threshold" => {
                    cfg.grouping.name_dist_threshold = parse_f64(key, value)?
                }
                "grouping.spatial_threshold" => {
                    cfg.grouping.spatial_threshold = parse_f64(key, value)?
                }
                "grouping.linkage" => {
                    cfg.grouping.linkage = match value.to_ascii_lowercase().as_str() {
                        "single" => Linkage::Single,
                        "complete" => Linkage::Complete,
                        _ => {
                            return Err(Error::Config(format!(
                                "{key}: expected single|complete, got {value:?}"
                            )))
                        }
                    }
                }
                "snap.eps" => cfg.snap.eps = parse_f64(key, value)?,
                "repair.eps" => cfg.repair_eps = parse_f64(key, value)?,
                "build.attach_threshold" => cfg.build.attach_threshold = parse_f64(key, value)?,
                "build.voltage_levels" => cfg.build.voltage_levels = parse_kv_list(key, value)?,
                "match.seed_threshold" => cfg.matcher.seed_threshold = parse_f64(key, value)?,
                "match.max_outer_iters" => cfg.matcher.max_outer_iters = parse_usize(key, value)?,
                "match.max_dup_iters" => cfg.matcher.max_dup_iters = parse_usize(key, value)?,
                "match.confirm_min_checkins" => {
                    cfg.matcher.confirm_min_checkins = parse_usize(key, value)?
                }
                "match.confirm_score" => cfg.matcher.confirm_score = parse_f64(key, value)?,
                "match.arbitrary_legacy" => {
                    cfg.matcher.arbitrary_legacy = parse_bool(key, value)?
                }
                "synth.rng_seed" => cfg.synth.rng_seed = parse_u64(key, value)?,
                "synth.mesh_fraction_38kv" => {
                    cfg.synth.mesh_fraction_38kv = parse_f64(key, value)?
                }
                "synth.xfmr3w" => cfg.synth.xfmr3w_count = parse_usize(key, value)?,
                "synth.min_station_sep_m" => {
                    cfg.synth.min_station_sep_m = parse_f64(key, value)?
                }
                "synth.corruption.name_abbrev_rate" => {
                    cfg.synth.corruption.name_abbrev_rate = parse_f64(key, value)?
                }
                "synth.corruption.name_voltage_suffix_rate" => {
                    cfg.synth.corruption.name_voltage_suffix_rate = parse_f64(key, value)?
                }
                "synth.corruption.missing_circuit_rate" => {
                    cfg.synth.corruption.missing_circuit_rate = parse_f64(key, value)?
                }
                "synth.corruption.vertex_jitter_sigma_m" => {
                    cfg.synth.corruption.vertex_jitter_sigma_m = parse_f64(key, value)?
                }
                "synth.corruption.site_split_rate" => {
                    cfg.synth.corruption.site_split_rate = parse_f64(key, value)?
                }
                "synth.corruption.tap_rate" => {
                    cfg.synth.corruption.tap_rate = parse_f64(key, value)?
                }
                "synth.corruption.legacy_bus_rate" => {
                    cfg.synth.corruption.legacy_bus_rate = parse_f64(key, value)?
                }
                "synth.corruption.line_version_drift_rate" => {
                    cfg.synth.corruption.line_version_drift_rate = parse_f64(key, value)?
                }
                "eval.min_accuracy" => cfg.eval.min_accuracy = Some(parse_f64(key, value)?),
                "eval.min_buses_mapped_pct" => {
                    cfg.eval.min_buses_mapped_pct = Some(parse_f64(key, value)?)
                }
                "eval.min_groups_mapped_pct" => {
                    cfg.eval.min_groups_mapped_pct = Some(parse_f64(key, value)?)
                }
                "eval.min_coverage_pct" => {
                    cfg.eval.min_coverage_pct = Some(parse_f64(key, value)?)
                }
                "runtime.threads" => cfg.threads = Some(parse_usize(key, value)?),
                "ingest.crs_kind" => {
                    cfg.crs_override = match value.to_ascii_lowercase().as_str() {
                        "auto" => CrsOverride::Auto,
                        "geographic" => CrsOverride::Geographic,
                        "projected" => CrsOverride::Projected,
                        _ => {
                            return Err(Error::Config(format!(
                                "{key}: expected auto|geographic|projected, got {value:?}"
                            )))
                        }
                    }
                }
                _ if key.starts_with("synth.n_buses.") => {
                    let kv = key.trim_start_matches("synth.n_buses.");
                    n_buses_overrides.insert(kv.to_string(), parse_usize(key, value)?);
                }
                _ if key.starts_with("synth.xfmr2w.") => {
                    let pair = key.trim_start_matches("synth.xfmr2w.");
                    xfmr2w_overrides.insert(pair.to_string(), parse_usize(key, value)?);
                }
                _ => return Err(Error::Config(format!("unknown key: {key}"))),
            }
        }

        if !n_buses_overrides.is_empty() {
            let mut levels: Vec<(Kv, usize)> = Vec::new();
            for (kv_str, n) in &n_buses_overrides {
                let kv = kv_str.parse::<f64>().map_err(|_| {
                    Error::Config(format!("synth.n_buses.{kv_str}: bad voltage"))
                })?;
                levels.push((Kv(kv), *n));
            }
            levels.sort_by(|a, b| b.0.cmp(&a.0));
            cfg.synth.n_buses = levels;
        }
        if !xfmr2w_overrides.is_empty() {
            let mut pairs: Vec<(Kv, Kv, usize)> = Vec::new();
            for (pair, n) in &xfmr2w_overrides {
                let (hi, lo) = pair.split_once('-').ok_or_else(|| {
                    Error::Config(format!("synth.xfmr2w.{pair}: expected HI-LO key"))
                })?;
                let hi = hi.parse::<f64>().map_err(|_| {
                    Error::Config(format!("synth.xfmr2w.{pair}: bad voltage"))
                })?;
                let lo = lo.parse::<f64>().map_err(|_| {
                    Error::Config(format!("synth.xfmr2w.{pair}: bad voltage"))
                })?;
                pairs.push((Kv(hi), Kv(lo), *n));
            }
            pairs.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)));
            cfg.synth.xfmr2w = pairs;
        }

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)?;
        Config::parse(&text)
    }

    fn validate(&self) -> Result<()> {
        if self.grouping.name_dist_threshold < 0.0 || self.grouping.spatial_threshold < 0.0 {
            return Err(Error::Config("grouping thresholds must be >= 0".into()));
        }
        if self.snap.eps <= 0.0 {
            return Err(Error::Config("snap.eps: must be > 0".into()));
        }
        if self.build.attach_threshold <= 0.0 {
            return Err(Error::Config("build.attach_threshold: must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.matcher.seed_threshold)
            || !(0.0..=1.0).contains(&self.matcher.confirm_score)
        {
            return Err(Error::Config("match thresholds must be in [0,1]".into()));
        }
        if self.matcher.max_outer_iters < 1
            || self.matcher.max_dup_iters < 1
            || self.matcher.confirm_min_checkins < 1
        {
            return Err(Error::Config("match iteration caps must be >= 1".into()));
        }
        for (kv, n) in &self.synth.n_buses {
            if *n < 2 {
                return Err(Error::Config(format!(
                    "synth.n_buses.{kv}: need at least 2 buses per level"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.synth.mesh_fraction_38kv) {
            return Err(Error::Config(
                "synth.mesh_fraction_38kv: must be in [0,1]".into(),
            ));
        }
        self.synth.corruption.validate()?;
        Ok(())
    }
}
