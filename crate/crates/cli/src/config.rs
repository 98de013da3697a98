//! Experiment configuration, read from a TOML file.
//!
//! ```toml
//! output_dir = "out/highway"
//! seeds = [1, 2, 3]
//!
//! [scenario]
//! coverage_km = 5.0
//! rate_mbps = 1.8
//! storage_bytes = 2000000000     # per RSU
//! speeds_kmh = [120.0, 60.0, 40.0, 30.0]
//! frames_per_chunk = 300
//! frame_rate = 30.0
//!
//! [catalog]
//! videos = 10
//! zipf_exponent = 0.8
//! chunk_counts = [120]           # one shared count, or one per video
//! chunk_size_bytes = 2250000
//!
//! [catalog.series]
//! kind = "synthetic"             # or "traces" with `paths = [...]`
//! bumps = 3
//! bump_width = 3.0
//! noise = 0.1
//!
//! [wavelet]                      # optional
//! boundary = "symmetric"
//! noise_floor = 0.05
//!
//! [[strategies]]
//! name = "dhpc"
//!
//! [[strategies]]
//! name = "nsp"
//! stride = 2
//!
//! [sweep]
//! axis = "service_duration"      # or "speed_sets" with `speeds_kmh = [[...], ...]`
//! minutes = [30.0, 45.0, 60.0]
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use precache_core::optimizer::{EgaParams, StrategyKind, EXHAUSTIVE_LIMIT};
use precache_core::popularity::{
    generate_catalog_series, ingest_series, ChunkGrid, IngestMode, PopularitySeries, SyntheticProfile,
    VideoCatalog,
};
use precache_core::scenario::RsuChain;
use precache_core::wavelet::{segment_series, BoundaryMode, CwtPlan, Segmentation, WaveletKind};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    pub seeds: Vec<u64>,
    pub scenario: ScenarioConfig,
    pub catalog: CatalogConfig,
    #[serde(default)]
    pub wavelet: WaveletConfig,
    pub strategies: Vec<StrategySpec>,
    pub sweep: SweepConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub coverage_km: f64,
    pub rate_mbps: f64,
    /// Storage of each RSU.
    pub storage_bytes: u64,
    pub speeds_kmh: Vec<f64>,
    #[serde(default = "default_frames_per_chunk")]
    pub frames_per_chunk: u32,
    #[serde(default = "default_frame_rate")]
    pub frame_rate: f64,
}

fn default_frames_per_chunk() -> u32 {
    300
}

fn default_frame_rate() -> f64 {
    30.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogConfig {
    pub videos: usize,
    pub zipf_exponent: f64,
    /// A single shared chunk count, or one per video.
    pub chunk_counts: Vec<usize>,
    pub chunk_size_bytes: u64,
    pub series: SeriesSource,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeriesSource {
    Synthetic(SyntheticProfile),
    /// One trace CSV per video, in catalog order. Relative paths are
    /// resolved against the configuration file's directory.
    Traces {
        paths: Vec<PathBuf>,
        #[serde(default)]
        strict: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveletConfig {
    /// Defaults to dyadic scales up to a quarter of each video's length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<u32>>,
    #[serde(default)]
    pub wavelet: WaveletKind,
    #[serde(default)]
    pub boundary: BoundaryMode,
    #[serde(default = "default_noise_floor")]
    pub noise_floor: f64,
}

fn default_noise_floor() -> f64 {
    0.05
}

impl Default for WaveletConfig {
    fn default() -> Self {
        Self {
            scales: None,
            wavelet: WaveletKind::default(),
            boundary: BoundaryMode::default(),
            noise_floor: default_noise_floor(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum StrategySpec {
    Dhpc,
    Nsp {
        #[serde(default = "default_stride")]
        stride: usize,
    },
    Ahap,
    Ega {
        #[serde(default = "default_population")]
        population: usize,
        #[serde(default = "default_generations")]
        generations: usize,
    },
    Oracle,
}

fn default_stride() -> usize {
    2
}

fn default_population() -> usize {
    EgaParams::default().population
}

fn default_generations() -> usize {
    EgaParams::default().generations
}

impl StrategySpec {
    pub fn kind(&self) -> StrategyKind {
        match self {
            StrategySpec::Dhpc => StrategyKind::Dhpc,
            StrategySpec::Nsp { .. } => StrategyKind::Nsp,
            StrategySpec::Ahap => StrategyKind::Ahap,
            StrategySpec::Ega { .. } => StrategyKind::Ega,
            StrategySpec::Oracle => StrategyKind::Oracle,
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind().as_str()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "snake_case")]
pub enum SweepConfig {
    /// Scales every dwell time uniformly so the chain's service duration
    /// hits each target.
    ServiceDuration { minutes: Vec<f64> },
    /// Replaces the speeds of the chain, one set per sweep point.
    SpeedSets { speeds_kmh: Vec<Vec<f64>> },
}

/// One point on the sweep axis. `value` is the resulting service duration
/// in minutes.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub chain: RsuChain,
}

/// Catalog, popularity series and candidate segmentation for one seed.
#[derive(Clone, Debug)]
pub struct Instance {
    pub seed: u64,
    pub catalog: VideoCatalog,
    pub series: Vec<PopularitySeries>,
    pub segmentations: Vec<Segmentation>,
}

fn message(e: precache_core::Error) -> String {
    match e {
        precache_core::Error::InvalidArgument(m) => m,
        other => other.to_string(),
    }
}

impl ExperimentConfig {
    /// Reads, resolves and validates a configuration file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let config = Self::parse(&text, path, base)?;
        config.check()?;
        Ok(config)
    }

    /// Parses without validating. `origin` only labels errors; relative
    /// trace paths are joined onto `base`.
    pub fn parse(text: &str, origin: &Path, base: &Path) -> Result<Self> {
        let mut config: Self = toml::from_str(text).map_err(|e| CliError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        if let SeriesSource::Traces { paths, .. } = &mut config.catalog.series {
            for p in paths.iter_mut() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    pub fn check(&self) -> Result<()> {
        let violations = self.violations();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(violations))
        }
    }

    /// Every problem with the configuration, one message each.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.output_dir.as_os_str().is_empty() {
            note(
                &mut out,
                "output_dir",
                Err(precache_core::Error::invalid("must not be empty")),
            );
        }
        if self.seeds.is_empty() {
            note(
                &mut out,
                "seeds",
                Err(precache_core::Error::invalid("at least one seed is required")),
            );
        }
        if let Some(s) = self.seeds.iter().find(|&&s| s > i64::MAX as u64) {
            note(
                &mut out,
                "seeds",
                Err(precache_core::Error::invalid(format!(
                    "seed {s} exceeds {}",
                    i64::MAX
                ))),
            );
        }
        let distinct: BTreeSet<u64> = self.seeds.iter().copied().collect();
        if distinct.len() != self.seeds.len() {
            note(
                &mut out,
                "seeds",
                Err(precache_core::Error::invalid("seeds must be distinct")),
            );
        }

        note(
            &mut out,
            "scenario",
            self.base_chain().map(drop).map_err(core_error),
        );
        note(
            &mut out,
            "scenario",
            self.chunk_grid().map(drop).map_err(core_error),
        );

        let catalog = self.catalog();
        if let Err(e) = &catalog {
            out.push(format!("catalog: {}", flatten(e)));
        }
        let counts = self.chunk_counts();
        match &self.catalog.series {
            SeriesSource::Synthetic(profile) => {
                let mut r = profile.validate();
                if r.is_ok() && profile.bumps > 0 {
                    if let Some(&x) = counts.iter().find(|&&x| profile.bump_width > x as f64) {
                        r = Err(precache_core::Error::invalid(format!(
                            "bump width {} exceeds chunk count {x}",
                            profile.bump_width
                        )));
                    }
                }
                if let Err(e) = r {
                    out.push(format!("catalog.series: {}", message(e)));
                }
            }
            SeriesSource::Traces { paths, .. } => {
                if paths.len() != self.catalog.videos {
                    out.push(format!(
                        "catalog.series: {} trace paths for {} videos",
                        paths.len(),
                        self.catalog.videos
                    ));
                }
                for p in paths.iter().filter(|p| !p.is_file()) {
                    out.push(format!(
                        "catalog.series: trace file {} does not exist",
                        p.display()
                    ));
                }
            }
        }

        let shortest = counts.iter().copied().min().unwrap_or(1);
        if let Err(e) = self.cwt_plan(shortest) {
            out.push(format!("wavelet: {}", message(e)));
        }

        if self.strategies.is_empty() {
            out.push("strategies: at least one strategy is required".into());
        }
        let mut seen = BTreeSet::new();
        for s in &self.strategies {
            if !seen.insert(s.name()) {
                out.push(format!("strategies: `{}` is listed more than once", s.name()));
            }
            match s {
                StrategySpec::Nsp { stride } if *stride < 2 => {
                    out.push(format!("strategies.nsp: stride must be >= 2, got {stride}"));
                }
                StrategySpec::Ega {
                    population,
                    generations,
                } => {
                    let params = EgaParams {
                        population: *population,
                        generations: *generations,
                    };
                    if let Err(e) = params.validate() {
                        out.push(format!("strategies.ega: {}", message(e)));
                    }
                }
                StrategySpec::Oracle => {
                    let total: usize = counts.iter().sum();
                    if total > EXHAUSTIVE_LIMIT {
                        out.push(format!(
                            "strategies.oracle: catalog has {total} chunks, exhaustive search allows {EXHAUSTIVE_LIMIT}"
                        ));
                    }
                }
                _ => {}
            }
        }

        match &self.sweep {
            SweepConfig::ServiceDuration { minutes } => {
                if minutes.is_empty() {
                    out.push("sweep: no service durations given".into());
                }
                for m in minutes.iter().filter(|m| !(**m > 0.0 && m.is_finite())) {
                    out.push(format!("sweep: service duration must be positive, got {m}"));
                }
            }
            SweepConfig::SpeedSets { speeds_kmh } => {
                if speeds_kmh.is_empty() {
                    out.push("sweep: no speed sets given".into());
                }
                for (i, set) in speeds_kmh.iter().enumerate() {
                    if set.is_empty() || set.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                        out.push(format!(
                            "sweep: speed set {} must be non-empty and positive",
                            i + 1
                        ));
                    }
                }
            }
        }
        out
    }

    /// Per-video chunk counts, with a single shared entry broadcast.
    pub fn chunk_counts(&self) -> Vec<usize> {
        match self.catalog.chunk_counts.as_slice() {
            [x] => vec![*x; self.catalog.videos],
            many => many.to_vec(),
        }
    }

    pub fn catalog(&self) -> Result<VideoCatalog> {
        let counts = &self.catalog.chunk_counts;
        if counts.len() != 1 && counts.len() != self.catalog.videos {
            return Err(precache_core::Error::invalid(format!(
                "chunk_counts needs 1 or {} entries, got {}",
                self.catalog.videos,
                counts.len()
            ))
            .into());
        }
        Ok(VideoCatalog::zipf(
            &self.chunk_counts(),
            self.catalog.chunk_size_bytes,
            self.catalog.zipf_exponent,
        )?)
    }

    pub fn chunk_grid(&self) -> Result<ChunkGrid> {
        Ok(ChunkGrid::new(
            self.scenario.frames_per_chunk,
            self.scenario.frame_rate,
        )?)
    }

    pub fn base_chain(&self) -> Result<RsuChain> {
        self.chain_with_speeds(&self.scenario.speeds_kmh)
    }

    fn chain_with_speeds(&self, speeds: &[f64]) -> Result<RsuChain> {
        let s = &self.scenario;
        Ok(RsuChain::uniform(
            s.coverage_km,
            s.rate_mbps,
            s.storage_bytes,
            speeds,
        )?)
    }

    pub fn sweep_points(&self) -> Result<Vec<SweepPoint>> {
        match &self.sweep {
            SweepConfig::ServiceDuration { minutes } => {
                let base = self.base_chain()?;
                minutes
                    .iter()
                    .map(|&m| {
                        Ok(SweepPoint {
                            value: m,
                            chain: base.with_service_duration(m * 60.0)?,
                        })
                    })
                    .collect()
            }
            SweepConfig::SpeedSets { speeds_kmh } => speeds_kmh
                .iter()
                .map(|set| {
                    let chain = self.chain_with_speeds(set)?;
                    Ok(SweepPoint {
                        value: chain.service_duration() / 60.0,
                        chain,
                    })
                })
                .collect(),
        }
    }

    /// Transform plan for a video of `len` chunks.
    pub fn cwt_plan(&self, len: usize) -> precache_core::Result<CwtPlan> {
        let w = &self.wavelet;
        let scales = w.scales.clone().unwrap_or_else(|| CwtPlan::default_scales(len));
        CwtPlan::new(scales, w.wavelet, w.boundary, w.noise_floor)
    }

    pub fn instance(&self, seed: u64) -> Result<Instance> {
        let catalog = self.catalog()?;
        let series = match &self.catalog.series {
            SeriesSource::Synthetic(profile) => generate_catalog_series(&catalog, profile, seed)?,
            SeriesSource::Traces { paths, strict } => {
                let mode = if *strict {
                    IngestMode::Strict
                } else {
                    IngestMode::Clamp
                };
                catalog
                    .videos()
                    .iter()
                    .zip(paths)
                    .map(|(meta, p)| ingest_series(p, meta, mode))
                    .collect::<precache_core::Result<_>>()?
            }
        };
        let segmentations = series
            .iter()
            .map(|s| segment_series(s, &self.cwt_plan(s.len())?))
            .collect::<precache_core::Result<_>>()?;
        Ok(Instance {
            seed,
            catalog,
            series,
            segmentations,
        })
    }
}

fn note(out: &mut Vec<String>, section: &str, r: precache_core::Result<()>) {
    if let Err(e) = r {
        out.push(format!("{section}: {}", message(e)));
    }
}

fn core_error(e: CliError) -> precache_core::Error {
    match e {
        CliError::Core(e) => e,
        other => precache_core::Error::invalid(other.to_string()),
    }
}

fn flatten(e: &CliError) -> String {
    match e {
        CliError::Core(precache_core::Error::InvalidArgument(m)) => m.clone(),
        other => other.to_string(),
    }
}
