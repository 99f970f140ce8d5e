use std::collections::HashMap;

use super::{CurveSource, G2Curve};
use crate::error::{Error, Result};
use crate::frame::FiberMap;

/// Ensemble-averaged curve of one fiber.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberCurve {
    pub fiber: usize,
    pub curve: G2Curve,
    /// Q_p, pixels mapped to the fiber.
    pub q_mapped: usize,
    /// Q′_p, pixels that entered the average.
    pub q_valid: usize,
}

/// Averages per-pixel curves over each fiber's pixel set, skipping invalid
/// pixels and pixels whose mean count is below `min_mean`. A fiber with no
/// usable pixel comes back invalid.
pub fn fiber_average(curves: &[G2Curve], map: &FiberMap, min_mean: f64) -> Vec<FiberCurve> {
    let by_pixel: HashMap<usize, &G2Curve> = curves
        .iter()
        .filter_map(|c| match c.source {
            CurveSource::Pixel(px) => Some((px, c)),
            _ => None,
        })
        .collect();
    let lags = curves.first().map(|c| c.lags.clone()).unwrap_or_default();

    map.fibers()
        .iter()
        .map(|fiber| {
            let members: Vec<&G2Curve> = fiber
                .pixels
                .iter()
                .filter_map(|px| by_pixel.get(px).copied())
                .filter(|c| c.valid && c.mean_count >= min_mean)
                .collect();
            let q_valid = members.len();
            let mean_count = if fiber.pixels.is_empty() {
                0.0
            } else {
                fiber
                    .pixels
                    .iter()
                    .filter_map(|px| by_pixel.get(px))
                    .map(|c| c.mean_count)
                    .sum::<f64>()
                    / fiber.pixels.len() as f64
            };
            let curve = if q_valid == 0 {
                G2Curve::invalid(lags.clone(), CurveSource::Fiber(fiber.id), mean_count)
            } else {
                let mut values = vec![0.0; lags.len()];
                for c in &members {
                    for (acc, v) in values.iter_mut().zip(&c.values) {
                        *acc += v;
                    }
                }
                for v in &mut values {
                    *v /= q_valid as f64;
                }
                G2Curve {
                    lags: lags.clone(),
                    values,
                    valid: true,
                    source: CurveSource::Fiber(fiber.id),
                    mean_count,
                }
            };
            FiberCurve {
                fiber: fiber.id,
                curve,
                q_mapped: fiber.q(),
                q_valid,
            }
        })
        .collect()
}

/// One decorrelation event: F fiber curves concatenated fiber-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EventVector {
    pub event_id: u64,
    /// Integration time in seconds.
    pub t_int: f64,
    /// Raw g₂ values, `fibers · lags` long.
    pub x: Vec<f64>,
    /// `false` where the fiber block was imputed.
    pub mask: Vec<bool>,
    /// Lag times in seconds (shared by every fiber block).
    pub lags: Vec<f64>,
}

impl EventVector {
    pub fn fibers(&self) -> usize {
        self.mask.len()
    }

    pub fn lags_per_fiber(&self) -> usize {
        self.lags.len()
    }

    pub fn fiber_block(&self, slot: usize) -> &[f64] {
        let l = self.lags.len();
        &self.x[slot * l..(slot + 1) * l]
    }
}

/// Concatenates fiber curves. An invalid fiber's block is filled with the
/// mean of the valid fiber curves (or with g₂ ≡ 1 when no fiber is valid).
pub fn assemble_event_vector(
    fiber_curves: &[FiberCurve],
    event_id: u64,
    t_int: f64,
) -> Result<EventVector> {
    let Some(first) = fiber_curves.first() else {
        return Err(Error::shape("event needs at least one fiber curve"));
    };
    let lags = first.curve.lags.clone();
    for fc in fiber_curves {
        if fc.curve.lags.len() != lags.len() || fc.curve.values.len() != lags.len() {
            return Err(Error::shape(format!(
                "fiber {} has {} lags, fiber {} has {}",
                fc.fiber,
                fc.curve.lags.len(),
                first.fiber,
                lags.len()
            )));
        }
        if fc.curve.lags != lags {
            return Err(Error::shape(format!(
                "fiber {} uses a different lag schedule",
                fc.fiber
            )));
        }
    }
    let valid: Vec<&FiberCurve> = fiber_curves.iter().filter(|f| f.curve.valid).collect();
    let fill: Vec<f64> = if valid.is_empty() {
        vec![1.0; lags.len()]
    } else {
        (0..lags.len())
            .map(|j| valid.iter().map(|f| f.curve.values[j]).sum::<f64>() / valid.len() as f64)
            .collect()
    };
    let mut x = Vec::with_capacity(fiber_curves.len() * lags.len());
    let mut mask = Vec::with_capacity(fiber_curves.len());
    for fc in fiber_curves {
        if fc.curve.valid {
            x.extend_from_slice(&fc.curve.values);
        } else {
            x.extend_from_slice(&fill);
        }
        mask.push(fc.curve.valid);
    }
    Ok(EventVector {
        event_id,
        t_int,
        x,
        mask,
        lags,
    })
}
