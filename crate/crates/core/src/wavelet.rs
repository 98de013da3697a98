//! Continuous wavelet transform of popularity series and modulus-maxima
//! segmentation into candidate highlight segments.
//!
//! The transform treats the series as a step function (one step per chunk)
//! and integrates the wavelet exactly over each chunk cell, so a constant
//! series is annihilated to rounding precision at every scale.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::popularity::PopularitySeries;

/// Wavelet support is truncated at `|t| <= SUPPORT` (in scale units).
const SUPPORT: f64 = 8.0;
const ZERO_MEAN_TOLERANCE: f64 = 1e-8;
const DEFAULT_SCALES: [u32; 5] = [1, 2, 4, 8, 16];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveletKind {
    /// Negative normalised second derivative of a Gaussian.
    #[default]
    MexicanHat,
}

impl WaveletKind {
    pub fn value(self, t: f64) -> f64 {
        match self {
            WaveletKind::MexicanHat => mexican_hat_norm() * (1.0 - t * t) * (-0.5 * t * t).exp(),
        }
    }

    /// Antiderivative of [`WaveletKind::value`], vanishing at ±∞.
    fn primitive(self, t: f64) -> f64 {
        match self {
            WaveletKind::MexicanHat => mexican_hat_norm() * t * (-0.5 * t * t).exp(),
        }
    }
}

fn mexican_hat_norm() -> f64 {
    2.0 / (3.0f64.sqrt() * std::f64::consts::PI.powf(0.25))
}

/// How the series is extended past its ends.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    /// Mirror including the edge sample: `.. b a | a b c .. z | z y ..`.
    #[default]
    Symmetric,
    /// Repeat the edge value.
    Constant,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CwtPlan {
    scales: Vec<u32>,
    wavelet: WaveletKind,
    boundary: BoundaryMode,
    /// Maxima weaker than this fraction of the largest modulus are dropped.
    noise_floor: f64,
}

impl CwtPlan {
    pub fn new(
        scales: Vec<u32>,
        wavelet: WaveletKind,
        boundary: BoundaryMode,
        noise_floor: f64,
    ) -> Result<Self> {
        if scales.is_empty() {
            return Err(Error::invalid("scale set is empty"));
        }
        if scales[0] < 1 {
            return Err(Error::invalid("scales must be >= 1"));
        }
        if scales.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "scales must be strictly increasing: {scales:?}"
            )));
        }
        if !(0.0..1.0).contains(&noise_floor) {
            return Err(Error::invalid(format!(
                "noise floor must lie in [0, 1), got {noise_floor}"
            )));
        }
        let mean = wavelet_integral(wavelet);
        if mean.abs() >= ZERO_MEAN_TOLERANCE {
            return Err(Error::invalid(format!(
                "wavelet {wavelet:?} has non-zero mean {mean:e}"
            )));
        }
        Ok(Self {
            scales,
            wavelet,
            boundary,
            noise_floor,
        })
    }

    /// Dyadic scales `1, 2, 4, 8, 16` restricted to `s <= max(len / 4, 1)`.
    pub fn default_scales(len: usize) -> Vec<u32> {
        let cap = (len / 4).max(1) as u32;
        DEFAULT_SCALES.iter().copied().filter(|&s| s <= cap).collect()
    }

    pub fn for_length(len: usize, boundary: BoundaryMode, noise_floor: f64) -> Result<Self> {
        Self::new(
            Self::default_scales(len),
            WaveletKind::MexicanHat,
            boundary,
            noise_floor,
        )
    }

    pub fn scales(&self) -> &[u32] {
        &self.scales
    }

    pub fn wavelet(&self) -> WaveletKind {
        self.wavelet
    }

    pub fn boundary(&self) -> BoundaryMode {
        self.boundary
    }

    pub fn noise_floor(&self) -> f64 {
        self.noise_floor
    }
}

/// Composite Simpson estimate of the wavelet integral over its support.
fn wavelet_integral(wavelet: WaveletKind) -> f64 {
    let intervals = 4800;
    let (a, b) = (-1.5 * SUPPORT, 1.5 * SUPPORT);
    let h = (b - a) / intervals as f64;
    let mut acc = wavelet.value(a) + wavelet.value(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * wavelet.value(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Wavelet coefficients indexed by (scale, shift).
#[derive(Clone, Debug, PartialEq)]
pub struct CwtMatrix {
    video_id: usize,
    scales: Vec<u32>,
    len: usize,
    coefficients: Vec<f64>,
}

impl CwtMatrix {
    pub fn from_rows(video_id: usize, scales: Vec<u32>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != scales.len() {
            return Err(Error::invalid("one coefficient row per scale required"));
        }
        let len = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != len) {
            return Err(Error::invalid("coefficient rows differ in length"));
        }
        Ok(Self {
            video_id,
            scales,
            len,
            coefficients: rows.concat(),
        })
    }

    pub fn video_id(&self) -> usize {
        self.video_id
    }

    pub fn scales(&self) -> &[u32] {
        &self.scales
    }

    /// Number of shifts (chunks).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, scale_index: usize, shift: usize) -> f64 {
        self.coefficients[scale_index * self.len + shift]
    }

    pub fn row(&self, scale_index: usize) -> &[f64] {
        &self.coefficients[scale_index * self.len..(scale_index + 1) * self.len]
    }

    pub fn max_modulus(&self) -> f64 {
        self.coefficients.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Scalogram dump with header `scale,chunk,coefficient` (chunks 1-based).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut out = String::from("scale,chunk,coefficient\n");
        for (si, s) in self.scales.iter().enumerate() {
            for (b, c) in self.row(si).iter().enumerate() {
                out.push_str(&format!("{s},{},{c}\n", b + 1));
            }
        }
        std::fs::write(path, out).map_err(io)
    }
}

fn extended(values: &[f64], index: isize, mode: BoundaryMode) -> f64 {
    let n = values.len() as isize;
    if (0..n).contains(&index) {
        return values[index as usize];
    }
    match mode {
        BoundaryMode::Zero => 0.0,
        BoundaryMode::Constant => values[index.clamp(0, n - 1) as usize],
        BoundaryMode::Symmetric => {
            let m = index.rem_euclid(2 * n);
            if m < n {
                values[m as usize]
            } else {
                values[(2 * n - 1 - m) as usize]
            }
        }
    }
}

/// Cell-integrated kernel `k[d] = s^-1/2 ∫_{d-1/2}^{d+1/2} ψ(u/s) du` for
/// offsets `d = -h..=h`.
fn kernel(wavelet: WaveletKind, scale: u32) -> Vec<f64> {
    let s = scale as f64;
    let half = (SUPPORT * s).ceil() as isize + 1;
    (-half..=half)
        .map(|d| {
            let d = d as f64;
            s.sqrt() * (wavelet.primitive((d + 0.5) / s) - wavelet.primitive((d - 0.5) / s))
        })
        .collect()
}

/// `W(b, s) = s^-1/2 ∫ y(x) ψ((x - b) / s) dx` with `y` piecewise constant
/// over unit chunk cells and extended by the plan's boundary mode.
pub fn cwt(series: &PopularitySeries, plan: &CwtPlan) -> Result<CwtMatrix> {
    let values = series.values();
    if values.len() < 2 {
        return Err(Error::invalid(format!(
            "wavelet transform needs at least 2 chunks, got {}",
            values.len()
        )));
    }
    let rows = plan
        .scales
        .iter()
        .map(|&s| {
            let k = kernel(plan.wavelet, s);
            let half = (k.len() / 2) as isize;
            (0..values.len() as isize)
                .map(|b| {
                    k.iter()
                        .enumerate()
                        .map(|(j, w)| w * extended(values, b + j as isize - half, plan.boundary))
                        .sum()
                })
                .collect()
        })
        .collect();
    CwtMatrix::from_rows(series.video_id(), plan.scales.clone(), rows)
}

/// A (chunk, scale) point where the modulus peaks across both scale and shift.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModulusMaximum {
    pub chunk: usize,
    pub scale_index: usize,
    pub scale: u32,
    pub coefficient: f64,
}

/// Modulus maxima that mark popularity peaks.
///
/// A point qualifies when `|W|` is a strict maximum against both adjacent
/// scales, a maximum along the shift axis (strict on the left, so a
/// two-sample plateau yields its left sample), the coefficient is positive
/// (a bump rather than a dip or a wavelet side lobe), and the modulus is at
/// least `noise_floor` times the largest modulus. Boundary scales never
/// qualify.
pub fn modulus_maxima(matrix: &CwtMatrix, plan: &CwtPlan) -> Result<Vec<ModulusMaximum>> {
    let scales = matrix.scales();
    if scales.len() < 3 {
        return Err(Error::invalid(format!(
            "modulus maxima need at least 3 scales, got {}",
            scales.len()
        )));
    }
    let floor = plan.noise_floor * matrix.max_modulus();
    let n = matrix.len();
    let mut out = Vec::new();
    for (si, &scale) in scales.iter().enumerate().take(scales.len() - 1).skip(1) {
        for x in 0..n {
            let w = matrix.get(si, x);
            let m = w.abs();
            if w <= 0.0 || m < floor {
                continue;
            }
            let across_scale = m > matrix.get(si - 1, x).abs() && m > matrix.get(si + 1, x).abs();
            let along_shift = (x == 0 || m > matrix.get(si, x - 1).abs())
                && (x + 1 == n || m >= matrix.get(si, x + 1).abs());
            if across_scale && along_shift {
                out.push(ModulusMaximum {
                    chunk: x,
                    scale_index: si,
                    scale,
                    coefficient: w,
                });
            }
        }
    }
    Ok(out)
}

/// Inclusive chunk range `[start, end]` whose popularity peak sits at `seed`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub seed: usize,
}

impl Segment {
    pub fn contains(&self, chunk: usize) -> bool {
        (self.start..=self.end).contains(&chunk)
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Partition of a video's chunks into candidate highlight segments.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segmentation {
    pub video_id: usize,
    pub segments: Vec<Segment>,
    /// Set when no maxima were available and the whole video forms one segment.
    pub degenerate: bool,
}

impl Segmentation {
    /// The whole video as one segment seeded at its global peak.
    pub fn single(series: &PopularitySeries) -> Self {
        let end = series.len() - 1;
        Self {
            video_id: series.video_id(),
            segments: vec![Segment {
                start: 0,
                end,
                seed: series.argmax_in(0, end),
            }],
            degenerate: true,
        }
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    pub fn segment_of(&self, chunk: usize) -> Option<usize> {
        self.segments.iter().position(|s| s.contains(chunk))
    }
}

/// Splits the series at the popularity minimum between consecutive maxima
/// chunks and seeds every segment at its own popularity peak.
pub fn candidate_segmentation(series: &PopularitySeries, maxima: &[ModulusMaximum]) -> Segmentation {
    let mut seeds: Vec<usize> = maxima.iter().map(|m| m.chunk).collect();
    seeds.sort_unstable();
    seeds.dedup();
    if seeds.is_empty() || series.is_empty() {
        return Segmentation::single(series);
    }
    let y = series.values();
    let mut segments = Vec::with_capacity(seeds.len());
    let mut start = 0;
    for pair in seeds.windows(2) {
        let mut cut = pair[0];
        for x in pair[0]..pair[1] {
            if y[x] < y[cut] {
                cut = x;
            }
        }
        segments.push(Segment {
            start,
            end: cut,
            seed: series.argmax_in(start, cut),
        });
        start = cut + 1;
    }
    let end = series.len() - 1;
    segments.push(Segment {
        start,
        end,
        seed: series.argmax_in(start, end),
    });
    Segmentation {
        video_id: series.video_id(),
        segments,
        degenerate: false,
    }
}

/// Transform, maxima extraction and segmentation in one pass. Series too
/// short for three scales fall back to a single segment.
pub fn segment_series(series: &PopularitySeries, plan: &CwtPlan) -> Result<Segmentation> {
    if series.len() < 2 || plan.scales().len() < 3 {
        return Ok(Segmentation::single(series));
    }
    let matrix = cwt(series, plan)?;
    let maxima = modulus_maxima(&matrix, plan)?;
    Ok(candidate_segmentation(series, &maxima))
}
