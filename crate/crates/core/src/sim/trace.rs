//! Photon-count traces from a decorrelating speckle field.
//!
//! The field is a stationary complex Gaussian AR(1) process with
//! |g₁(k·period)| = exp(−k·period/τ_c). A fraction √β of the light is
//! coherent, the rest a constant pedestal, so the rate λ(t) = rate·(√β|E|² +
//! 1 − √β) has g₂(τ) = 1 + β·exp(−2τ/τ_c). Counts are a Cox process driven by
//! λ: unit-rate exponential arrivals in integrated-intensity time, the
//! intensity held constant over each bin.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

const ARRIVALS: usize = 1024;
/// Refill before the buffer could run dry inside one bin.
const HEADROOM: usize = 64;

#[derive(Debug, Clone)]
pub struct TraceGen {
    rng: StreamRng,
    coherent: bool,
    rho: f64,
    step: f64,
    weight: f64,
    rate: f64,
    re: f64,
    im: f64,
    /// Integrated intensity since the last rebase.
    lam: f64,
    /// Ascending arrival times in integrated-intensity units.
    arrivals: Vec<f64>,
    next: usize,
}

impl TraceGen {
    /// Speckle trace generator. Needs τ_c > period/10, 0 < β ≤ 1, rate > 0.
    pub fn new(tau_c: f64, beta: f64, rate: f64, period: f64, seed: u64) -> Result<Self> {
        if !(period > 0.0) || !(tau_c > 0.0) || !(beta > 0.0 && beta <= 1.0) || !(rate > 0.0) {
            return Err(Error::config(format!(
                "need tau_c > 0, 0 < beta <= 1, rate > 0, period > 0 (got tau_c={tau_c}, beta={beta}, rate={rate}, period={period})"
            )));
        }
        if tau_c <= period / 10.0 {
            return Err(Error::config(format!(
                "tau_c={tau_c} s is not resolvable at a {period} s sample period"
            )));
        }
        let rho = (-period / tau_c).exp();
        let mut gen = Self::base(rate, seed);
        gen.coherent = true;
        gen.rho = rho;
        gen.step = ((1.0 - rho * rho) / 2.0).sqrt();
        gen.weight = beta.sqrt();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        gen.re = s * gen.rng.sample::<f64, _>(StandardNormal);
        gen.im = s * gen.rng.sample::<f64, _>(StandardNormal);
        gen.prime();
        Ok(gen)
    }

    /// Plain Poisson(rate) counts, no speckle.
    pub fn poisson(rate: f64, seed: u64) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::config(format!("rate must be > 0, got {rate}")));
        }
        let mut gen = Self::base(rate, seed);
        gen.prime();
        Ok(gen)
    }

    fn base(rate: f64, seed: u64) -> Self {
        TraceGen {
            rng: rng::stream(seed, &[]),
            coherent: false,
            rho: 0.0,
            step: 0.0,
            weight: 0.0,
            rate,
            re: 0.0,
            im: 0.0,
            lam: 0.0,
            arrivals: Vec::with_capacity(ARRIVALS),
            next: 0,
        }
    }

    fn prime(&mut self) {
        let mut t = 0.0;
        for _ in 0..ARRIVALS {
            t += self.rng.sample::<f64, _>(Exp1);
            self.arrivals.push(t);
        }
    }

    /// Writes the next `out.len()` bins. Consecutive calls continue the same
    /// trace, so chunking never changes the result.
    pub fn fill(&mut self, out: &mut [u16]) {
        if self.coherent {
            self.fill_with::<true>(out);
        } else {
            self.fill_with::<false>(out);
        }
    }

    fn fill_with<const COHERENT: bool>(&mut self, out: &mut [u16]) {
        let pedestal = self.rate * (1.0 - self.weight);
        let gain = self.rate * self.weight;
        let (rho, step, rate) = (self.rho, self.step, self.rate);
        let (mut re, mut im, mut lam, mut k) = (self.re, self.im, self.lam, self.next);
        let rng = &mut self.rng;
        let arrivals = &mut self.arrivals[..];
        for slot in out.iter_mut() {
            if COHERENT {
                let n1: f64 = rng.sample(StandardNormal);
                let n2: f64 = rng.sample(StandardNormal);
                re = rho * re + step * n1;
                im = rho * im + step * n2;
                lam += pedestal + gain * (re * re + im * im);
            } else {
                lam += rate;
            }
            if k + HEADROOM >= ARRIVALS {
                (k, lam) = refill(rng, arrivals, k, lam);
            }
            let mut c = (lam >= arrivals[k]) as usize;
            k += c;
            while lam >= arrivals[k] {
                k += 1;
                c += 1;
                if k == ARRIVALS {
                    (k, lam) = refill(rng, arrivals, k, lam);
                }
            }
            *slot = c.min(u16::MAX as usize) as u16;
        }
        self.re = re;
        self.im = im;
        self.lam = lam;
        self.next = k;
    }

    pub fn generate(&mut self, n: usize) -> Vec<u16> {
        let mut out = vec![0; n];
        self.fill(&mut out);
        out
    }
}

/// Drops consumed arrivals, draws new ones, and rebases times to the
/// current integrated intensity `lam`.
#[cold]
fn refill(rng: &mut StreamRng, arrivals: &mut [f64], k: usize, lam: f64) -> (usize, f64) {
    let base = lam;
    let mut t = arrivals[ARRIVALS - 1] - base;
    arrivals.copy_within(k.., 0);
    let kept = ARRIVALS - k;
    for a in &mut arrivals[..kept] {
        *a -= base;
    }
    for a in &mut arrivals[kept..] {
        t += rng.sample::<f64, _>(Exp1);
        *a = t;
    }
    (0, 0.0)
}

/// `n` bins of a speckle count trace, deterministic in `seed`.
pub fn simulate_intensity_trace(
    tau_c: f64,
    beta: f64,
    rate: f64,
    n: usize,
    period: f64,
    seed: u64,
) -> Result<Vec<u16>> {
    Ok(TraceGen::new(tau_c, beta, rate, period, seed)?.generate(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_trace() {
        let a = simulate_intensity_trace(1e-4, 0.5, 0.3, 5000, 1.5e-6, 9).unwrap();
        let b = simulate_intensity_trace(1e-4, 0.5, 0.3, 5000, 1.5e-6, 9).unwrap();
        let c = simulate_intensity_trace(1e-4, 0.5, 0.3, 5000, 1.5e-6, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn chunked_fill_is_identical() {
        let whole = simulate_intensity_trace(5e-5, 0.8, 2.0, 20_000, 1.5e-6, 4).unwrap();
        let mut g = TraceGen::new(5e-5, 0.8, 2.0, 1.5e-6, 4).unwrap();
        let mut parts = Vec::new();
        for len in [1, 17, 999, 3000, 15_983] {
            parts.extend(g.generate(len));
        }
        assert_eq!(whole, parts);
    }

    #[test]
    fn mean_count_matches_rate() {
        let t = simulate_intensity_trace(1e-4, 0.5, 0.3, 400_000, 1.5e-6, 1).unwrap();
        let mean = t.iter().map(|&c| c as f64).sum::<f64>() / t.len() as f64;
        assert!((mean - 0.3).abs() < 0.01, "mean {mean}");
        let p = TraceGen::poisson(0.3, 2).unwrap().generate(400_000);
        let m = p.iter().map(|&c| c as f64).sum::<f64>() / p.len() as f64;
        let v = p.iter().map(|&c| (c as f64 - m).powi(2)).sum::<f64>() / p.len() as f64;
        assert!((m - 0.3).abs() < 0.005 && (v - 0.3).abs() < 0.01);
    }

    #[test]
    fn high_rates_do_not_overrun_the_buffer() {
        let t = TraceGen::poisson(500.0, 5).unwrap().generate(2000);
        let mean = t.iter().map(|&c| c as f64).sum::<f64>() / 2000.0;
        assert!((mean - 500.0).abs() < 5.0);
    }

    #[test]
    fn bad_parameters() {
        assert!(simulate_intensity_trace(0.0, 0.5, 0.3, 10, 1.5e-6, 0).is_err());
        assert!(simulate_intensity_trace(1e-4, 0.0, 0.3, 10, 1.5e-6, 0).is_err());
        assert!(simulate_intensity_trace(1e-4, 1.5, 0.3, 10, 1.5e-6, 0).is_err());
        assert!(simulate_intensity_trace(1e-4, 0.5, -1.0, 10, 1.5e-6, 0).is_err());
        assert!(simulate_intensity_trace(1e-7, 0.5, 0.3, 10, 1.5e-6, 0).is_err());
    }
}
