use super::schedule::LagSchedule;
use super::{normalize, CurveSource, G2Curve, LagSums, Normalization};
use crate::error::{Error, Result};

/// Direct O(n·L) evaluation of g₂ on a whole trace, used to check the
/// streaming correlator.
///
/// Each level works on an explicit rebinned copy of the trace (sums of
/// `b^ℓ` consecutive samples, incomplete trailing bins dropped), and every
/// sum is computed from scratch over fully observed pairs.
pub fn oracle_g2(
    trace: &[u16],
    schedule: &LagSchedule,
    mode: Normalization,
    min_mean: f64,
    sample_period: f64,
) -> Result<G2Curve> {
    if trace.len() as u64 <= schedule.max_lag() {
        return Err(Error::InsufficientData(format!(
            "trace of {} samples, longest lag is {}",
            trace.len(),
            schedule.max_lag()
        )));
    }
    let lags = schedule.lag_seconds(sample_period);
    let mean = trace.iter().map(|&c| c as f64).sum::<f64>() / trace.len() as f64;
    if mean <= 0.0 || mean < min_mean {
        return Ok(G2Curve::invalid(lags, CurveSource::Trace, mean));
    }

    let b = schedule.bin_factor().max(1) as usize;
    let mut coarse: Vec<u128> = trace.iter().map(|&c| c as u128).collect();
    let mut level = 0;
    let mut values = Vec::with_capacity(schedule.len());
    for e in schedule.entries() {
        while level < e.level {
            coarse = coarse.chunks_exact(b).map(|c| c.iter().sum()).collect();
            level += 1;
        }
        let n = coarse.len();
        let j = e.coarse as usize;
        if n <= j {
            return Err(Error::InsufficientData(format!(
                "level {level} has {n} bins, lag needs more than {j}"
            )));
        }
        let pairs = n - j;
        let products: u128 = (0..pairs).map(|t| coarse[t] * coarse[t + j]).sum();
        let sums = LagSums {
            products,
            pairs: pairs as u64,
            count: n as u64,
            total: coarse.iter().sum(),
            left: coarse[..pairs].iter().sum(),
            right: coarse[j..].iter().sum(),
        };
        match normalize(&sums, mode) {
            Some(v) => values.push(v),
            None => return Ok(G2Curve::invalid(lags, CurveSource::Trace, mean)),
        }
    }
    Ok(G2Curve {
        lags,
        values,
        valid: true,
        source: CurveSource::Trace,
        mean_count: mean,
    })
}
