//! Exact O(N²) t-SNE.

use ndarray::{Array2, ArrayView2};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub out_dims: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch: usize,
    pub min_gain: f64,
    /// Allowed |H(P_i) − log₂ perplexity| in bits.
    pub entropy_tol: f64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            out_dims: 2,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch: 250,
            min_gain: 0.01,
            entropy_tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Tsne {
    pub embedding: Array2<f64>,
    /// Entropy (bits) of each conditional P_i after calibration.
    pub entropies: Vec<f64>,
    pub kl: f64,
}

fn sq_distances(x: ArrayView2<f64>) -> Vec<f64> {
    let n = x.nrows();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v: f64 = x
                .row(i)
                .iter()
                .zip(x.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

/// Row-conditional P_{j|i} and its entropy (bits) at precision `beta`.
fn conditional(dist: &[f64], i: usize, beta: f64, out: &mut [f64]) -> f64 {
    let n = out.len();
    let dmin = (0..n)
        .filter(|&j| j != i)
        .map(|j| dist[j])
        .fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    for j in 0..n {
        out[j] = if j == i {
            0.0
        } else {
            (-beta * (dist[j] - dmin)).exp()
        };
        sum += out[j];
    }
    let mut h = 0.0;
    for p in out.iter_mut() {
        *p /= sum;
        if *p > 0.0 {
            h -= *p * p.log2();
        }
    }
    h
}

/// Calibrates each row's Gaussian bandwidth by bisection so that the
/// conditional entropy equals log₂(perplexity). Returns (P rows, entropies).
pub fn calibrate(x: ArrayView2<f64>, perplexity: f64, tol: f64) -> (Vec<f64>, Vec<f64>) {
    let n = x.nrows();
    let dist = sq_distances(x);
    let target = perplexity.log2();
    let mut p = vec![0.0; n * n];
    let mut entropies = vec![0.0; n];
    for i in 0..n {
        let row = &dist[i * n..(i + 1) * n];
        let out = &mut p[i * n..(i + 1) * n];
        let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
        let mut beta = 1.0;
        let mut h = conditional(row, i, beta, out);
        for _ in 0..200 {
            if (h - target).abs() <= tol {
                break;
            }
            if h > target {
                lo = beta;
                beta = if hi.is_finite() { (lo + hi) / 2.0 } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = (lo + hi) / 2.0;
            }
            h = conditional(row, i, beta, out);
        }
        entropies[i] = h;
    }
    (p, entropies)
}

pub fn tsne_embed(x: ArrayView2<f64>, cfg: &TsneConfig, seed: u64) -> Result<Tsne> {
    let n = x.nrows();
    if n < 4 || !(cfg.perplexity >= 5.0 && cfg.perplexity <= (n as f64 - 1.0) / 3.0) {
        return Err(Error::config(format!(
            "perplexity must lie in [5, (N-1)/3] (perplexity {}, N={n})",
            cfg.perplexity
        )));
    }
    if cfg.out_dims == 0 {
        return Err(Error::config("t-SNE needs at least one output dimension"));
    }
    let (cond, entropies) = calibrate(x, cfg.perplexity, cfg.entropy_tol);
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = ((cond[i * n + j] + cond[j * n + i]) / (2.0 * n as f64)).max(1e-12);
        }
        p[i * n + i] = 0.0;
    }

    let dims = cfg.out_dims;
    let mut rng = rng::stream(seed, &[]);
    let normal = Normal::new(0.0, 1e-2).expect("valid normal");
    let mut y: Vec<f64> = (0..n * dims).map(|_| normal.sample(&mut rng)).collect();
    let mut velocity = vec![0.0; n * dims];
    let mut gains = vec![1.0f64; n * dims];
    let mut num = vec![0.0; n * n];
    let mut grad = vec![0.0; n * dims];

    for iter in 0..cfg.iterations {
        let exaggeration = if iter < cfg.exaggeration_iters {
            cfg.early_exaggeration
        } else {
            1.0
        };
        let momentum = if iter < cfg.momentum_switch {
            cfg.initial_momentum
        } else {
            cfg.final_momentum
        };
        let mut qsum = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let d: f64 = (0..dims).map(|k| (y[i * dims + k] - y[j * dims + k]).powi(2)).sum();
                let q = 1.0 / (1.0 + d);
                num[i * n + j] = q;
                num[j * n + i] = q;
                qsum += 2.0 * q;
            }
        }
        grad.iter_mut().for_each(|g| *g = 0.0);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let q = num[i * n + j];
                let coeff = 4.0 * (exaggeration * p[i * n + j] - q / qsum) * q;
                for k in 0..dims {
                    grad[i * dims + k] += coeff * (y[i * dims + k] - y[j * dims + k]);
                }
            }
        }
        for idx in 0..n * dims {
            let same_sign = (grad[idx] > 0.0) == (velocity[idx] > 0.0);
            gains[idx] = if same_sign { gains[idx] * 0.8 } else { gains[idx] + 0.2 };
            gains[idx] = gains[idx].max(cfg.min_gain);
            velocity[idx] = momentum * velocity[idx] - cfg.learning_rate * gains[idx] * grad[idx];
            y[idx] += velocity[idx];
        }
        for k in 0..dims {
            let mean = (0..n).map(|i| y[i * dims + k]).sum::<f64>() / n as f64;
            (0..n).for_each(|i| y[i * dims + k] -= mean);
        }
    }

    let mut qsum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d: f64 = (0..dims).map(|k| (y[i * dims + k] - y[j * dims + k]).powi(2)).sum();
                num[i * n + j] = 1.0 / (1.0 + d);
                qsum += num[i * n + j];
            }
        }
    }
    let kl = (0..n * n)
        .filter(|&ij| ij / n != ij % n && p[ij] > 0.0)
        .map(|ij| p[ij] * (p[ij] / (num[ij] / qsum)).ln())
        .sum();
    Ok(Tsne {
        embedding: Array2::from_shape_vec((n, dims), y).expect("n × dims"),
        entropies,
        kl,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_hits_target_entropy() {
        let x = Array2::from_shape_fn((60, 3), |(i, j)| ((i * 31 + j * 17) % 23) as f64 * 0.3);
        let (_, h) = calibrate(x.view(), 10.0, 1e-5);
        let target = 10f64.log2();
        assert!(h.iter().all(|e| (e - target).abs() <= 1e-5));
    }

    #[test]
    fn perplexity_range_enforced() {
        let x = Array2::<f64>::zeros((30, 2));
        let cfg = TsneConfig {
            perplexity: 20.0,
            ..TsneConfig::default()
        };
        assert!(matches!(tsne_embed(x.view(), &cfg, 0), Err(Error::Config(_))));
        let cfg = TsneConfig {
            perplexity: 4.0,
            ..TsneConfig::default()
        };
        assert!(tsne_embed(x.view(), &cfg, 0).is_err());
    }
}
