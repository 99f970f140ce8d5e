//! Least-squares fit of g₂(τ) = 1 + β·exp(−2τ/τ_c).
//!
//! For fixed τ_c the model is linear in β, so β has a closed form and the
//! search is one-dimensional in log τ_c: a coarse log grid followed by a
//! golden-section refinement around the best grid point.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiegertFit {
    pub tau_c: f64,
    pub beta: f64,
    /// Residual sum of squares.
    pub sse: f64,
}

fn beta_and_sse(lags: &[f64], y: &[f64], tau_c: f64) -> (f64, f64) {
    let mut ee = 0.0;
    let mut ye = 0.0;
    for (&t, &v) in lags.iter().zip(y) {
        let e = (-2.0 * t / tau_c).exp();
        ee += e * e;
        ye += v * e;
    }
    let beta = if ee > 0.0 { ye / ee } else { 0.0 };
    let sse = lags
        .iter()
        .zip(y)
        .map(|(&t, &v)| (v - beta * (-2.0 * t / tau_c).exp()).powi(2))
        .sum();
    (beta, sse)
}

/// Fits g₂ values at `lags` (seconds). τ_c is searched in
/// [lags[0]/10, 10·lags[last]].
pub fn fit_siegert(lags: &[f64], g2: &[f64]) -> Result<SiegertFit> {
    if lags.len() != g2.len() || lags.len() < 2 {
        return Err(Error::shape("fit needs at least two lags and one value per lag"));
    }
    if g2.iter().chain(lags).any(|v| !v.is_finite()) || lags.iter().any(|&t| t <= 0.0) {
        return Err(Error::config("fit needs finite values and positive lags"));
    }
    let y: Vec<f64> = g2.iter().map(|v| v - 1.0).collect();
    let lo = (lags[0] / 10.0).ln();
    let hi = (lags[lags.len() - 1] * 10.0).ln();
    let steps = 200;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .collect();
    let sse = |x: f64| beta_and_sse(lags, &y, x.exp()).1;
    let best = (0..grid.len())
        .min_by(|&a, &b| sse(grid[a]).total_cmp(&sse(grid[b])))
        .expect("grid is nonempty");
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(steps)]);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (sse(c), sse(d));
    for _ in 0..100 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = sse(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = sse(d);
        }
        if (b - a).abs() < 1e-12 {
            break;
        }
    }
    let tau_c = ((a + b) / 2.0).exp();
    let (beta, sse) = beta_and_sse(lags, &y, tau_c);
    Ok(SiegertFit { tau_c, beta, sse })
}
