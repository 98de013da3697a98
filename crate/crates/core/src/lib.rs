//! Duration-adaptive highlight pre-caching for roadside-unit video caches.
//!
//! The crate is organised along the processing chain:
//!
//! - [`popularity`]: Zipf request weights, per-chunk popularity series
//!   (synthetic or ingested from trace CSV files).
//! - [`wavelet`]: continuous wavelet transform and modulus-maxima
//!   segmentation into candidate highlight segments.
//! - [`metrics`]: highlight entropy, skipped segments, objective jitter and
//!   cache hit ratio of a cache decision.
//! - [`scenario`]: RSU chain, service duration and the shared byte budget.
//! - [`optimizer`]: highlight-direction trimming, the NSP / AHAP / EGA
//!   baselines and an exhaustive oracle.

pub mod error;
pub mod metrics;
pub mod optimizer;
pub mod popularity;
pub mod scenario;
pub mod wavelet;

pub use error::{Error, Result};
