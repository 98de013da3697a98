//! Roadside-unit chain, vehicle dwell times and the shared caching budget.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::CacheDecision;
use crate::popularity::{ChunkGrid, VideoCatalog};

const SECONDS_PER_HOUR: f64 = 3600.0;
const BITS_PER_MEGABIT: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rsu {
    pub coverage_km: f64,
    pub rate_mbps: f64,
    pub storage_bytes: u64,
    /// Average vehicle speed inside this RSU's coverage.
    pub speed_kmh: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RsuChain {
    rsus: Vec<Rsu>,
}

impl RsuChain {
    pub fn new(rsus: Vec<Rsu>) -> Result<Self> {
        if rsus.is_empty() {
            return Err(Error::invalid("RSU chain is empty"));
        }
        for (m, r) in rsus.iter().enumerate() {
            let positive = |v: f64| v > 0.0 && v.is_finite();
            if !(positive(r.coverage_km) && positive(r.rate_mbps) && positive(r.speed_kmh))
                || r.storage_bytes == 0
            {
                return Err(Error::invalid(format!(
                    "RSU {} needs positive coverage, rate, storage and speed: {r:?}",
                    m + 1
                )));
            }
        }
        Ok(Self { rsus })
    }

    /// `M` identical RSUs that differ only in vehicle speed.
    pub fn uniform(coverage_km: f64, rate_mbps: f64, storage_bytes: u64, speeds_kmh: &[f64]) -> Result<Self> {
        Self::new(
            speeds_kmh
                .iter()
                .map(|&speed_kmh| Rsu {
                    coverage_km,
                    rate_mbps,
                    storage_bytes,
                    speed_kmh,
                })
                .collect(),
        )
    }

    pub fn rsus(&self) -> &[Rsu] {
        &self.rsus
    }

    pub fn len(&self) -> usize {
        self.rsus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rsus.is_empty()
    }

    /// Seconds spent under each RSU: `d_m / v_m`.
    pub fn dwell_times(&self) -> Vec<f64> {
        self.rsus
            .iter()
            .map(|r| r.coverage_km / r.speed_kmh * SECONDS_PER_HOUR)
            .collect()
    }

    pub fn service_duration(&self) -> f64 {
        self.dwell_times().iter().sum()
    }

    /// Same chain with every speed scaled by one factor so the service
    /// duration becomes `target_seconds`.
    pub fn with_service_duration(&self, target_seconds: f64) -> Result<Self> {
        if !(target_seconds > 0.0 && target_seconds.is_finite()) {
            return Err(Error::invalid(format!(
                "target service duration must be positive, got {target_seconds}"
            )));
        }
        let factor = self.service_duration() / target_seconds;
        Self::new(
            self.rsus
                .iter()
                .map(|r| Rsu {
                    speed_kmh: r.speed_kmh * factor,
                    ..*r
                })
                .collect(),
        )
    }
}

/// Service duration and the three budget terms capping the cached volume.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServicePlan {
    pub dwell_times: Vec<f64>,
    pub service_duration: f64,
    /// Bytes the chain can deliver during the service duration.
    pub transmit_budget: u64,
    /// Chunks playable during the service duration.
    pub playout_chunks: u64,
    /// `playout_chunks` at the catalog's mean chunk size.
    pub playout_bytes: u64,
    /// `Z_p · F / Σ z_f` evaluated literally, reported for reference only.
    pub playout_literal: f64,
    pub storage_budget: u64,
    /// Minimum of the transmit, storage and playout byte budgets.
    pub cache_budget: u64,
}

impl ServicePlan {
    /// A plan whose every term equals `bytes`, for instances built directly
    /// around a cache budget.
    pub fn fixed(bytes: u64) -> Self {
        Self {
            dwell_times: Vec::new(),
            service_duration: 0.0,
            transmit_budget: bytes,
            playout_chunks: 0,
            playout_bytes: bytes,
            playout_literal: 0.0,
            storage_budget: bytes,
            cache_budget: bytes,
        }
    }
}

/// Floors `x`, snapping values within relative 1e-9 of an integer onto it so
/// that rounding in the dwell-time sum cannot drop a whole byte or chunk.
fn floor_snapped(x: f64) -> u64 {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * x.abs().max(1.0) {
        nearest as u64
    } else {
        x.floor() as u64
    }
}

pub fn budget(chain: &RsuChain, grid: &ChunkGrid, catalog: &VideoCatalog) -> Result<ServicePlan> {
    let dwell_times = chain.dwell_times();
    let service_duration: f64 = dwell_times.iter().sum();
    if service_duration.is_nan() || service_duration <= 0.0 {
        return Err(Error::invalid("service duration is zero"));
    }
    let transmit_bits: f64 = chain
        .rsus()
        .iter()
        .zip(&dwell_times)
        .map(|(r, t)| r.rate_mbps * BITS_PER_MEGABIT * t)
        .sum();
    let transmit_budget = floor_snapped(transmit_bits / 8.0);
    let playout_chunks = floor_snapped(service_duration / grid.chunk_duration());
    let size_sum = catalog.total_chunk_size() as f64;
    let videos = catalog.len() as f64;
    let playout_bytes = floor_snapped(playout_chunks as f64 * size_sum / videos);
    let playout_literal = playout_chunks as f64 * videos / size_sum;
    let storage_budget = chain.rsus().iter().map(|r| r.storage_bytes).sum();
    let cache_budget = transmit_budget.min(storage_budget).min(playout_bytes);
    Ok(ServicePlan {
        dwell_times,
        service_duration,
        transmit_budget,
        playout_chunks,
        playout_bytes,
        playout_literal,
        storage_budget,
        cache_budget,
    })
}

/// Bytes and chunks handed to one RSU by [`assign_to_rsus`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RsuLoad {
    pub rsu: usize,
    pub capacity_bytes: u64,
    pub chunks: Vec<(usize, usize)>,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub loads: Vec<RsuLoad>,
    /// (video, chunk) pairs that fit no RSU.
    pub unplaced: Vec<(usize, usize)>,
}

/// In-order fill of cached chunks onto the chain: chunks sorted by playback
/// position (then video id) go to the earliest RSU with room left, where an
/// RSU holds at most `min(storage, rate · dwell time)` bytes.
pub fn assign_to_rsus(chain: &RsuChain, catalog: &VideoCatalog, decisions: &[CacheDecision]) -> Placement {
    let mut wanted: Vec<(usize, usize, u64)> = decisions
        .iter()
        .filter_map(|d| catalog.video(d.video_id()).map(|m| (d, m.chunk_size)))
        .flat_map(|(d, size)| d.cached_chunks().map(move |x| (x, d.video_id(), size)))
        .collect();
    wanted.sort_unstable();
    let mut loads: Vec<RsuLoad> = chain
        .rsus()
        .iter()
        .zip(chain.dwell_times())
        .enumerate()
        .map(|(m, (r, t))| RsuLoad {
            rsu: m + 1,
            capacity_bytes: r
                .storage_bytes
                .min(floor_snapped(r.rate_mbps * BITS_PER_MEGABIT * t / 8.0)),
            chunks: Vec::new(),
            bytes: 0,
        })
        .collect();
    let mut unplaced = Vec::new();
    let mut current = 0;
    for (chunk, video, size) in wanted {
        while current < loads.len() && loads[current].bytes + size > loads[current].capacity_bytes {
            current += 1;
        }
        match loads.get_mut(current) {
            Some(load) => {
                load.chunks.push((video, chunk));
                load.bytes += size;
            }
            None => unplaced.push((video, chunk)),
        }
    }
    Placement { loads, unplaced }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MB: u64 = 1_000_000;

    fn chain(speeds: &[f64]) -> RsuChain {
        RsuChain::uniform(5.0, 1.8, 8_000 * MB, speeds).unwrap()
    }

    fn catalog(videos: usize) -> VideoCatalog {
        VideoCatalog::zipf(&vec![100; videos], 2_250_000, 0.8).unwrap()
    }

    #[test]
    fn dwell_time_examples() {
        assert_eq!(chain(&[60.0]).dwell_times(), vec![300.0]);
        assert_eq!(chain(&[120.0]).dwell_times(), vec![150.0]);
        let c = chain(&[120.0, 60.0, 40.0, 30.0]);
        assert_eq!(c.dwell_times(), vec![150.0, 300.0, 450.0, 600.0]);
        assert_eq!(c.service_duration(), 1500.0);
    }

    #[test]
    fn doubling_speed_halves_dwell_time() {
        let c = chain(&[120.0, 60.0, 40.0, 30.0, 17.0]);
        let fast = chain(&[240.0, 120.0, 80.0, 60.0, 34.0]);
        for (a, b) in c.dwell_times().iter().zip(fast.dwell_times()) {
            assert_eq!(*a, 2.0 * b);
        }
        assert_eq!(c.service_duration(), 2.0 * fast.service_duration());
    }

    #[test]
    fn invalid_chains_rejected() {
        assert!(RsuChain::new(vec![]).is_err());
        assert!(RsuChain::uniform(5.0, 1.8, 1, &[0.0]).is_err());
        assert!(RsuChain::uniform(5.0, -1.0, 1, &[60.0]).is_err());
    }

    #[test]
    fn single_rsu_transmit_budget() {
        let grid = ChunkGrid::new(300, 30.0).unwrap();
        let plan = budget(&chain(&[60.0]), &grid, &catalog(10)).unwrap();
        // 1.8 Mbit/s over 300 s = 540 Mbit = 67.5 MB.
        assert_eq!(plan.transmit_budget, 67_500_000);
    }

    #[test]
    fn freeway_parameters_budget() {
        let grid = ChunkGrid::new(300, 30.0).unwrap();
        let plan = budget(&chain(&[120.0, 60.0, 40.0, 30.0]), &grid, &catalog(10)).unwrap();
        assert_eq!(plan.service_duration, 1500.0);
        assert_eq!(plan.playout_chunks, 150);
        assert_eq!(plan.playout_bytes, 150 * 2_250_000);
        assert_eq!(plan.storage_budget, 4 * 8_000 * MB);
        assert_eq!(plan.transmit_budget, 337_500_000);
        assert_eq!(plan.cache_budget, 337_500_000);
        assert!((plan.playout_literal - 150.0 * 10.0 / 22_500_000.0).abs() < 1e-18);
    }

    #[test]
    fn transmit_term_binds_under_large_storage() {
        let grid = ChunkGrid::new(300, 30.0).unwrap();
        let slow_link = RsuChain::uniform(5.0, 0.5, 64_000 * MB, &[60.0]).unwrap();
        let plan = budget(&slow_link, &grid, &catalog(10)).unwrap();
        assert_eq!(plan.cache_budget, plan.transmit_budget);
        assert!(plan.cache_budget <= plan.storage_budget && plan.cache_budget <= plan.playout_bytes);
    }

    #[test]
    fn scaled_duration_hits_target_budget_exactly() {
        let grid = ChunkGrid::new(300, 30.0).unwrap();
        let base = chain(&[120.0, 60.0, 40.0, 30.0]);
        for minutes in [30.0, 45.0, 60.0, 37.0] {
            let scaled = base.with_service_duration(minutes * 60.0).unwrap();
            assert!((scaled.service_duration() - minutes * 60.0).abs() < 1e-9);
            let plan = budget(&scaled, &grid, &catalog(10)).unwrap();
            assert_eq!(plan.playout_chunks, (minutes * 6.0) as u64);
            assert_eq!(plan.transmit_budget, (minutes * 60.0 * 225_000.0) as u64);
        }
    }

    #[test]
    fn rate_increase_never_shrinks_budget() {
        let grid = ChunkGrid::new(300, 30.0).unwrap();
        let mut prev = 0;
        for rate in [0.1, 0.5, 1.0, 1.8, 3.0, 10.0] {
            let c = RsuChain::uniform(5.0, rate, 100 * MB, &[60.0, 30.0]).unwrap();
            let b = budget(&c, &grid, &catalog(4)).unwrap().cache_budget;
            assert!(b >= prev);
            prev = b;
        }
    }

    #[test]
    fn placement_fills_rsus_in_order() {
        let c = RsuChain::new(vec![
            Rsu {
                coverage_km: 1.0,
                rate_mbps: 1.0,
                storage_bytes: 20,
                speed_kmh: 3600.0,
            },
            Rsu {
                coverage_km: 1.0,
                rate_mbps: 1.0,
                storage_bytes: 10,
                speed_kmh: 3600.0,
            },
        ])
        .unwrap();
        let cat = VideoCatalog::zipf(&[4, 4], 10, 1.0).unwrap();
        let decisions = vec![
            CacheDecision::from_chunks(1, 4, &[0, 1]).unwrap(),
            CacheDecision::from_chunks(2, 4, &[0, 3]).unwrap(),
        ];
        let p = assign_to_rsus(&c, &cat, &decisions);
        assert_eq!(p.loads[0].chunks, vec![(1, 0), (2, 0)]);
        assert_eq!(p.loads[1].chunks, vec![(1, 1)]);
        assert_eq!(p.unplaced, vec![(2, 3)]);
    }
}
