//! Video-level Zipf popularity and per-chunk popularity series.
//!
//! A catalog holds `F` videos with 1-based ids. Each video is cut into
//! `chunk_count` equally long chunks of `chunk_size` bytes, and every chunk
//! carries a popularity value in `[0, 1]`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;
const MAX_PLACEMENT_ATTEMPTS: usize = 256;

/// One video of the catalog.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoMeta {
    /// 1-based video index.
    pub id: usize,
    pub chunk_count: usize,
    /// Bytes per chunk.
    pub chunk_size: u64,
    /// Request probability of this video.
    pub zipf_weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoCatalog {
    videos: Vec<VideoMeta>,
    zipf_exponent: f64,
}

impl VideoCatalog {
    /// Builds a catalog from explicit metadata. Weights are taken as given, so
    /// externally supplied (non-Zipf) weights are accepted as long as they
    /// sum to one.
    pub fn new(videos: Vec<VideoMeta>, zipf_exponent: f64) -> Result<Self> {
        if videos.is_empty() {
            return Err(Error::invalid("catalog must contain at least one video"));
        }
        if zipf_exponent.is_nan() || zipf_exponent < 0.0 {
            return Err(Error::invalid(format!(
                "zipf exponent must be >= 0, got {zipf_exponent}"
            )));
        }
        let mut total = 0.0;
        for (pos, v) in videos.iter().enumerate() {
            if v.id != pos + 1 {
                return Err(Error::invalid(format!(
                    "video ids must be 1..F in order; position {} has id {}",
                    pos + 1,
                    v.id
                )));
            }
            if v.chunk_count == 0 {
                return Err(Error::invalid(format!("video {} has no chunks", v.id)));
            }
            if v.chunk_size == 0 {
                return Err(Error::invalid(format!("video {} has zero chunk size", v.id)));
            }
            if !(v.zipf_weight >= 0.0 && v.zipf_weight.is_finite()) {
                return Err(Error::invalid(format!(
                    "video {} has invalid weight {}",
                    v.id, v.zipf_weight
                )));
            }
            total += v.zipf_weight;
        }
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::invalid(format!(
                "video weights sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            videos,
            zipf_exponent,
        })
    }

    /// Zipf-weighted catalog with one chunk count per video and a shared chunk size.
    pub fn zipf(chunk_counts: &[usize], chunk_size: u64, zipf_exponent: f64) -> Result<Self> {
        let weights = zipf_weights(chunk_counts.len(), zipf_exponent)?;
        let videos = chunk_counts
            .iter()
            .zip(weights)
            .enumerate()
            .map(|(pos, (&chunk_count, zipf_weight))| VideoMeta {
                id: pos + 1,
                chunk_count,
                chunk_size,
                zipf_weight,
            })
            .collect();
        Self::new(videos, zipf_exponent)
    }

    pub fn videos(&self) -> &[VideoMeta] {
        &self.videos
    }

    pub fn video(&self, id: usize) -> Option<&VideoMeta> {
        id.checked_sub(1).and_then(|i| self.videos.get(i))
    }

    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    pub fn zipf_exponent(&self) -> f64 {
        self.zipf_exponent
    }

    pub fn total_chunks(&self) -> usize {
        self.videos.iter().map(|v| v.chunk_count).sum()
    }

    pub fn total_chunk_size(&self) -> u64 {
        self.videos.iter().map(|v| v.chunk_size).sum()
    }
}

/// Zipf request probabilities `p_f = f^-β / Σ_i i^-β` for `f = 1..=count`.
pub fn zipf_weights(count: usize, exponent: f64) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::invalid("zipf weights need at least one video"));
    }
    if !(exponent >= 0.0 && exponent.is_finite()) {
        return Err(Error::invalid(format!(
            "zipf exponent must be >= 0, got {exponent}"
        )));
    }
    let raw: Vec<f64> = (1..=count).map(|f| (f as f64).powf(-exponent)).collect();
    let norm: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / norm).collect())
}

/// Per-chunk popularity of one video. Values are always within `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopularitySeries {
    video_id: usize,
    values: Vec<f64>,
}

impl PopularitySeries {
    /// Clamps every value into `[0, 1]`; NaN is rejected.
    pub fn new(video_id: usize, values: Vec<f64>) -> Result<Self> {
        let mut values = values;
        for (i, v) in values.iter_mut().enumerate() {
            if v.is_nan() {
                return Err(Error::invalid(format!("chunk {} popularity is NaN", i + 1)));
            }
            *v = v.clamp(0.0, 1.0);
        }
        Ok(Self { video_id, values })
    }

    pub fn video_id(&self) -> usize {
        self.video_id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the largest value in `start..=end`, lowest index on ties.
    pub fn argmax_in(&self, start: usize, end: usize) -> usize {
        let mut best = start;
        for i in start..=end {
            if self.values[i] > self.values[best] {
                best = i;
            }
        }
        best
    }
}

/// Frame-level chunk geometry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChunkGrid {
    pub frames_per_chunk: u32,
    /// Frames per second.
    pub frame_rate: f64,
}

impl ChunkGrid {
    pub fn new(frames_per_chunk: u32, frame_rate: f64) -> Result<Self> {
        if frames_per_chunk == 0 {
            return Err(Error::invalid("frames per chunk must be positive"));
        }
        if !(frame_rate > 0.0 && frame_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "frame rate must be positive, got {frame_rate}"
            )));
        }
        Ok(Self {
            frames_per_chunk,
            frame_rate,
        })
    }

    /// Seconds of playback per chunk.
    pub fn chunk_duration(&self) -> f64 {
        self.frames_per_chunk as f64 / self.frame_rate
    }

    pub fn chunks_per_second(&self) -> f64 {
        self.frame_rate / self.frames_per_chunk as f64
    }
}

/// Shape of a synthetic popularity trace: Gaussian highlight bumps over
/// uniform background noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticProfile {
    pub bumps: usize,
    /// Standard deviation of each bump, in chunks.
    pub bump_width: f64,
    /// Background noise is drawn uniformly from `[0, noise]`.
    pub noise: f64,
    #[serde(default = "default_min_peak")]
    pub min_peak: f64,
    #[serde(default = "default_max_peak")]
    pub max_peak: f64,
}

fn default_min_peak() -> f64 {
    0.5
}

fn default_max_peak() -> f64 {
    1.0
}

impl SyntheticProfile {
    pub fn new(bumps: usize, bump_width: f64, noise: f64) -> Self {
        Self {
            bumps,
            bump_width,
            noise,
            min_peak: default_min_peak(),
            max_peak: default_max_peak(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bumps > 0 && !(self.bump_width > 0.0 && self.bump_width.is_finite()) {
            return Err(Error::invalid(format!(
                "bump width must be positive, got {}",
                self.bump_width
            )));
        }
        if !(self.noise >= 0.0 && self.noise <= 1.0) {
            return Err(Error::invalid(format!(
                "noise must lie in [0, 1], got {}",
                self.noise
            )));
        }
        if !(0.0 < self.min_peak && self.min_peak <= self.max_peak && self.max_peak <= 1.0) {
            return Err(Error::invalid(format!(
                "peak range must satisfy 0 < min <= max <= 1, got [{}, {}]",
                self.min_peak, self.max_peak
            )));
        }
        Ok(())
    }
}

/// Deterministic synthetic popularity series for one video.
pub fn generate_series(meta: &VideoMeta, profile: &SyntheticProfile, seed: u64) -> Result<PopularitySeries> {
    profile.validate()?;
    let len = meta.chunk_count;
    if profile.bumps > 0 && profile.bump_width > len as f64 {
        return Err(Error::invalid(format!(
            "bump width {} exceeds chunk count {}",
            profile.bump_width, len
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = if profile.bumps == 0 {
        vec![0.0; len]
    } else {
        place_bumps(len, profile, &mut rng)?
    };
    let values = base
        .into_iter()
        .map(|b| {
            let noise = if profile.noise > 0.0 {
                rng.gen_range(0.0..profile.noise)
            } else {
                0.0
            };
            b + noise
        })
        .collect();
    PopularitySeries::new(meta.id, values)
}

fn place_bumps(len: usize, profile: &SyntheticProfile, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let width = profile.bump_width;
    let min_gap = 3.0 * width;
    let margin = width.ceil() as usize;
    let (lo, hi) = if len > 2 * margin {
        (margin, len - 1 - margin)
    } else {
        (0, len - 1)
    };
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let mut centers: Vec<usize> = (0..profile.bumps).map(|_| rng.gen_range(lo..=hi)).collect();
        centers.sort_unstable();
        let heights: Vec<f64> = (0..profile.bumps)
            .map(|_| {
                if profile.max_peak > profile.min_peak {
                    rng.gen_range(profile.min_peak..=profile.max_peak)
                } else {
                    profile.min_peak
                }
            })
            .collect();
        if centers.windows(2).any(|w| ((w[1] - w[0]) as f64) < min_gap) {
            continue;
        }
        let base: Vec<f64> = (0..len)
            .map(|x| {
                centers
                    .iter()
                    .zip(&heights)
                    .map(|(&c, &h)| {
                        let d = (x as f64 - c as f64) / width;
                        h * (-0.5 * d * d).exp()
                    })
                    .sum::<f64>()
                    .min(1.0)
            })
            .collect();
        if strict_local_maxima(&base).len() == profile.bumps {
            return Ok(base);
        }
    }
    Err(Error::invalid(format!(
        "cannot place {} separated bumps of width {} in {} chunks",
        profile.bumps, width, len
    )))
}

/// Indices strictly greater than every existing neighbour.
pub(crate) fn strict_local_maxima(values: &[f64]) -> Vec<usize> {
    (0..values.len())
        .filter(|&i| {
            let left = i == 0 || values[i] > values[i - 1];
            let right = i + 1 == values.len() || values[i] > values[i + 1];
            values.len() > 1 && left && right
        })
        .collect()
}

/// Mixes a run seed with a stream id (splitmix64 finaliser).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One synthetic series per catalog video, each with its own derived seed.
pub fn generate_catalog_series(
    catalog: &VideoCatalog,
    profile: &SyntheticProfile,
    seed: u64,
) -> Result<Vec<PopularitySeries>> {
    catalog
        .videos()
        .iter()
        .map(|meta| generate_series(meta, profile, derive_seed(seed, meta.id as u64)))
        .collect()
}

/// How out-of-range trace values are handled on ingestion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IngestMode {
    #[default]
    Clamp,
    Strict,
}

const TRACE_HEADER: [&str; 2] = ["chunk", "popularity"];

/// Reads a `chunk,popularity` trace for one video.
pub fn ingest_series(path: &Path, meta: &VideoMeta, mode: IngestMode) -> Result<PopularitySeries> {
    let format_err = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != TRACE_HEADER {
        return Err(format_err(format!(
            "expected header `chunk,popularity`, found `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut values = Vec::with_capacity(meta.chunk_count);
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let chunk: usize = record[0]
            .parse()
            .map_err(|_| format_err(format!("row {line}: chunk `{}` is not an integer", &record[0])))?;
        if chunk != values.len() + 1 {
            return Err(format_err(format!(
                "row {line}: expected chunk {}, found {chunk}",
                values.len() + 1
            )));
        }
        let value: f64 = record[1]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| format_err(format!("row {line}: popularity `{}` is not numeric", &record[1])))?;
        if mode == IngestMode::Strict && !(0.0..=1.0).contains(&value) {
            return Err(format_err(format!(
                "row {line}: popularity {value} outside [0, 1]"
            )));
        }
        values.push(value);
    }
    if values.len() != meta.chunk_count {
        return Err(format_err(format!(
            "expected {} chunk rows for video {}, found {}",
            meta.chunk_count,
            meta.id,
            values.len()
        )));
    }
    PopularitySeries::new(meta.id, values)
}

/// Writes a series in the trace format read by [`ingest_series`].
pub fn write_series(path: &Path, series: &PopularitySeries) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    writer
        .write_record(TRACE_HEADER)
        .map_err(|e| csv_error(path, e))?;
    for (i, v) in series.values().iter().enumerate() {
        writer
            .write_record([(i + 1).to_string(), v.to_string()])
            .map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    if err.is_io_error() {
        if let csv::ErrorKind::Io(source) = err.into_kind() {
            return Error::Io {
                path: path.to_path_buf(),
                source,
            };
        }
        unreachable!()
    }
    Error::Format {
        path: path.to_path_buf(),
        message: err.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn meta(chunks: usize) -> VideoMeta {
        VideoMeta {
            id: 1,
            chunk_count: chunks,
            chunk_size: 1,
            zipf_weight: 1.0,
        }
    }

    #[test]
    fn zipf_single_video_takes_all_mass() {
        assert_eq!(zipf_weights(1, 0.8).unwrap(), vec![1.0]);
    }

    #[test]
    fn zipf_zero_exponent_is_uniform() {
        for w in zipf_weights(10, 0.0).unwrap() {
            assert!((w - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn zipf_golden_head_and_tail() {
        // 1 / Σ_{i=1..10} i^-0.8 and its 10th term, evaluated at 40 digits.
        let w = zipf_weights(10, 0.8).unwrap();
        assert!((w[0] - 0.280_495_743_014_390_2).abs() < 1e-14);
        assert!((w[9] - 0.044_455_579_361_782_89).abs() < 1e-14);
    }

    #[test]
    fn zipf_rejects_empty_catalog() {
        assert!(matches!(zipf_weights(0, 1.0), Err(Error::InvalidArgument(_))));
    }

    proptest! {
        #[test]
        fn zipf_normalised_and_non_increasing(count in 1usize..20_000, exponent in 0.0f64..5.0) {
            let w = zipf_weights(count, exponent).unwrap();
            let total: f64 = w.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            prop_assert!(w.windows(2).all(|p| p[1] <= p[0]));
        }

        #[test]
        fn trace_round_trip(values in proptest::collection::vec(0.0f64..=1.0, 1..50)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("trace.csv");
            let series = PopularitySeries::new(1, values.clone()).unwrap();
            write_series(&path, &series).unwrap();
            let back = ingest_series(&path, &meta(values.len()), IngestMode::Strict).unwrap();
            prop_assert_eq!(back, series);
        }
    }

    #[test]
    fn large_zipf_catalog_normalises() {
        let w = zipf_weights(100_000, 5.0).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn catalog_rejects_unnormalised_weights() {
        let videos = vec![
            VideoMeta {
                id: 1,
                chunk_count: 3,
                chunk_size: 10,
                zipf_weight: 0.5,
            },
            VideoMeta {
                id: 2,
                chunk_count: 3,
                chunk_size: 10,
                zipf_weight: 0.4,
            },
        ];
        assert!(VideoCatalog::new(videos, 1.0).is_err());
    }

    #[test]
    fn catalog_accepts_external_weights() {
        let videos = vec![
            VideoMeta {
                id: 1,
                chunk_count: 3,
                chunk_size: 10,
                zipf_weight: 0.3,
            },
            VideoMeta {
                id: 2,
                chunk_count: 3,
                chunk_size: 10,
                zipf_weight: 0.7,
            },
        ];
        let cat = VideoCatalog::new(videos, 0.0).unwrap();
        assert_eq!(cat.video(2).unwrap().zipf_weight, 0.7);
    }

    #[test]
    fn catalog_rejects_gapped_ids() {
        let videos = vec![VideoMeta {
            id: 2,
            chunk_count: 3,
            chunk_size: 10,
            zipf_weight: 1.0,
        }];
        assert!(VideoCatalog::new(videos, 0.0).is_err());
    }

    #[test]
    fn no_bumps_no_noise_is_silent() {
        let s = generate_series(&meta(100), &SyntheticProfile::new(0, 5.0, 0.0), 1).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn three_bumps_give_three_strict_maxima() {
        let s = generate_series(&meta(100), &SyntheticProfile::new(3, 4.0, 0.0), 7).unwrap();
        // Independent scan: interior strict maxima plus edge points beating their single neighbour.
        let v = s.values();
        let mut count = 0;
        for i in 0..v.len() {
            let l = if i == 0 { f64::NEG_INFINITY } else { v[i - 1] };
            let r = if i == v.len() - 1 {
                f64::NEG_INFINITY
            } else {
                v[i + 1]
            };
            if v[i] > l && v[i] > r {
                count += 1;
            }
        }
        assert_eq!(count, 3);
    }

    #[test]
    fn generation_is_deterministic() {
        let p = SyntheticProfile::new(3, 4.0, 0.05);
        let a = generate_series(&meta(100), &p, 7).unwrap();
        let b = generate_series(&meta(100), &p, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_series(&meta(100), &p, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generated_values_in_unit_interval() {
        let p = SyntheticProfile::new(4, 3.0, 0.3);
        for seed in 0..20 {
            let s = generate_series(&meta(80), &p, seed).unwrap();
            assert!(s.values().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn too_wide_bump_rejected() {
        let err = generate_series(&meta(10), &SyntheticProfile::new(1, 11.0, 0.0), 0).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn chunk_grid_duration() {
        let g = ChunkGrid::new(300, 30.0).unwrap();
        assert_eq!(g.chunk_duration(), 10.0);
        assert_eq!(g.chunks_per_second() * g.chunk_duration(), 1.0);
    }

    fn write(dir: &Path, body: &str) -> std::path::PathBuf {
        let path = dir.join("t.csv");
        std::fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn ingest_well_formed() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "chunk,popularity\n1,0.1\n2,0.5\n3,0.25\n4,1\n");
        let s = ingest_series(&p, &meta(4), IngestMode::Clamp).unwrap();
        assert_eq!(s.values(), &[0.1, 0.5, 0.25, 1.0]);
    }

    #[test]
    fn ingest_clamps_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "chunk,popularity\n1,1.7\n2,-0.2\n");
        let s = ingest_series(&p, &meta(2), IngestMode::Clamp).unwrap();
        assert_eq!(s.values(), &[1.0, 0.0]);
        assert!(ingest_series(&p, &meta(2), IngestMode::Strict).is_err());
    }

    #[test]
    fn ingest_row_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "chunk,popularity\n1,0.1\n2,0.2\n3,0.3\n");
        let msg = ingest_series(&p, &meta(4), IngestMode::Clamp)
            .unwrap_err()
            .to_string();
        assert!(msg.contains("expected 4") && msg.contains("found 3"), "{msg}");
    }

    #[test]
    fn ingest_non_numeric_names_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "chunk,popularity\n1,0.1\n2,abc\n");
        let msg = ingest_series(&p, &meta(2), IngestMode::Clamp)
            .unwrap_err()
            .to_string();
        assert!(msg.contains("row 3"), "{msg}");
    }
}
