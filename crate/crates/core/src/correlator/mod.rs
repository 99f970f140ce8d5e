//! Normalized intensity autocorrelation g₂(τ) = ⟨I(t)I(t+τ)⟩ / ⟨I⟩².
//!
//! Per-pixel accumulators are exact integers (photon counts and their
//! products), so a curve depends only on the counts and the schedule, never
//! on how frames were chunked on the way in. The final ratio is formed as a
//! reduced integer fraction before conversion to `f64`, which makes g₂
//! exactly invariant under integer rescaling of the trace.

mod event;
mod features;
mod oracle;
mod schedule;
mod stream;

pub use event::{assemble_event_vector, fiber_average, EventVector, FiberCurve};
pub use features::{read_features, write_features, FeatureSet};
pub use oracle::oracle_g2;
pub use schedule::{make_lag_schedule, LagEntry, LagSchedule, ScheduleConfig};
pub use stream::{Correlator, PixelCorrState};

use serde::{Deserialize, Serialize};

/// Pixels below this mean count per bin are left out of fiber averages.
pub const DEFAULT_MIN_MEAN: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// ⟨I(t)I(t+τ)⟩ / ⟨I⟩² over the whole window.
    #[default]
    Plain,
    /// ⟨I(t)I(t+τ)⟩ / (⟨I⟩_left · ⟨I⟩_right), with the two means taken over
    /// exactly the samples that enter the product sum.
    Symmetric,
}

impl std::str::FromStr for Normalization {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "plain" => Ok(Normalization::Plain),
            "symmetric" => Ok(Normalization::Symmetric),
            other => Err(crate::Error::config(format!("unknown normalization {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveSource {
    /// Row-major pixel index.
    Pixel(usize),
    Fiber(usize),
    /// A bare count trace (oracle or single-trace use).
    Trace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct G2Curve {
    /// Lag times in seconds.
    pub lags: Vec<f64>,
    pub values: Vec<f64>,
    pub valid: bool,
    pub source: CurveSource,
    /// Mean photon count per sample bin over the window.
    pub mean_count: f64,
}

impl G2Curve {
    pub(crate) fn invalid(lags: Vec<f64>, source: CurveSource, mean_count: f64) -> Self {
        let n = lags.len();
        G2Curve {
            lags,
            values: vec![f64::NAN; n],
            valid: false,
            source,
            mean_count,
        }
    }
}

/// Integer sums that fully determine g₂ at one lag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct LagSums {
    /// Σ C(t)·C(t+j) over fully observed pairs.
    pub products: u128,
    /// Number of pairs, n_ℓ − j.
    pub pairs: u64,
    /// Complete level-ℓ samples.
    pub count: u64,
    /// Σ C(t) over all complete level-ℓ samples.
    pub total: u128,
    /// Σ C(t) over the first n_ℓ − j samples.
    pub left: u128,
    /// Σ C(t) over the last n_ℓ − j samples.
    pub right: u128,
}

/// g₂ at one lag; `None` when the denominator vanishes.
pub(crate) fn normalize(sums: &LagSums, mode: Normalization) -> Option<f64> {
    let (num, den) = match mode {
        // (S/P) / (T/n)² = S·n² / (P·T²)
        Normalization::Plain => (
            [sums.products, sums.count as u128, sums.count as u128],
            [sums.pairs as u128, sums.total, sums.total],
        ),
        // (S/P) / ((L/P)(R/P)) = S·P / (L·R)
        Normalization::Symmetric => (
            [sums.products, sums.pairs as u128, 1],
            [sums.left, sums.right, 1],
        ),
    };
    exact_ratio(num, den)
}

fn product(xs: [u128; 3]) -> Option<u128> {
    xs[0].checked_mul(xs[1])?.checked_mul(xs[2])
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// Π num / Π den, reduced to lowest terms before rounding to `f64`.
pub(crate) fn exact_ratio(num: [u128; 3], den: [u128; 3]) -> Option<f64> {
    if den.contains(&0) {
        return None;
    }
    match (product(num), product(den)) {
        (Some(n), Some(d)) => {
            let g = gcd(n, d).max(1);
            Some((n / g) as f64 / (d / g) as f64)
        }
        _ => {
            let f = |xs: [u128; 3]| xs.iter().map(|&x| x as f64).product::<f64>();
            Some(f(num) / f(den))
        }
    }
}
