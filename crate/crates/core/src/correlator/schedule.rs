use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How lags are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScheduleConfig {
    /// Lags `1..=max_lag` at the base sample period.
    Linear { max_lag: u64 },
    /// `m` lags at level 0, then lags `j·b^ℓ` for `j` in `m/b+1..=m` at each
    /// coarser level ℓ, where level ℓ sees the trace rebinned by `b^ℓ`.
    MultiTau { m: u64, b: u64, levels: u32 },
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig::MultiTau {
            m: 16,
            b: 2,
            levels: 5,
        }
    }
}

/// One lag: level ℓ, lag `coarse` in level-ℓ bins, `lag` = coarse·b^ℓ samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagEntry {
    pub level: u32,
    pub coarse: u64,
    pub lag: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LagSchedule {
    config: ScheduleConfig,
    entries: Vec<LagEntry>,
    bin: u64,
    levels: u32,
}

pub fn make_lag_schedule(cfg: ScheduleConfig) -> Result<LagSchedule> {
    match cfg {
        ScheduleConfig::Linear { max_lag } => {
            if max_lag < 1 {
                return Err(Error::config("linear schedule needs max_lag >= 1"));
            }
            let entries = (1..=max_lag)
                .map(|j| LagEntry {
                    level: 0,
                    coarse: j,
                    lag: j,
                })
                .collect();
            Ok(LagSchedule {
                config: cfg,
                entries,
                bin: 1,
                levels: 1,
            })
        }
        ScheduleConfig::MultiTau { m, b, levels } => {
            if m < 2 {
                return Err(Error::config(format!("multi-tau needs m >= 2, got {m}")));
            }
            if b < 2 {
                return Err(Error::config(format!("multi-tau needs b >= 2, got {b}")));
            }
            if levels < 1 {
                return Err(Error::config("multi-tau needs at least one level"));
            }
            let mut entries: Vec<LagEntry> = (1..=m)
                .map(|j| LagEntry {
                    level: 0,
                    coarse: j,
                    lag: j,
                })
                .collect();
            let mut scale: u64 = 1;
            for level in 1..levels {
                scale = scale
                    .checked_mul(b)
                    .ok_or_else(|| Error::config("multi-tau lag overflows u64"))?;
                for j in (m / b + 1)..=m {
                    let lag = j
                        .checked_mul(scale)
                        .ok_or_else(|| Error::config("multi-tau lag overflows u64"))?;
                    entries.push(LagEntry {
                        level,
                        coarse: j,
                        lag,
                    });
                }
            }
            Ok(LagSchedule {
                config: cfg,
                entries,
                bin: b,
                levels,
            })
        }
    }
}

impl LagSchedule {
    pub fn config(&self) -> ScheduleConfig {
        self.config
    }

    pub fn entries(&self) -> &[LagEntry] {
        &self.entries
    }

    /// Lags in samples.
    pub fn lags(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.lag).collect()
    }

    pub fn lag_seconds(&self, sample_period: f64) -> Vec<f64> {
        self.entries.iter().map(|e| e.lag as f64 * sample_period).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_lag(&self) -> u64 {
        self.entries.last().map_or(0, |e| e.lag)
    }

    /// Rebinning factor between consecutive levels (1 for linear).
    pub fn bin_factor(&self) -> u64 {
        self.bin
    }

    pub fn level_count(&self) -> u32 {
        self.levels
    }

    /// Coarse lags at one level, ascending.
    pub fn level_lags(&self, level: u32) -> Vec<u64> {
        self.entries
            .iter()
            .filter(|e| e.level == level)
            .map(|e| e.coarse)
            .collect()
    }

    /// Samples needed before a curve can be finalized.
    pub fn min_samples(&self) -> u64 {
        2 * self.max_lag()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_four() {
        let s = make_lag_schedule(ScheduleConfig::Linear { max_lag: 4 }).unwrap();
        assert_eq!(s.lags(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn small_multi_tau_by_hand() {
        let s = make_lag_schedule(ScheduleConfig::MultiTau {
            m: 4,
            b: 2,
            levels: 2,
        })
        .unwrap();
        assert_eq!(s.lags(), vec![1, 2, 3, 4, 6, 8]);
        assert_eq!(s.level_lags(1), vec![3, 4]);
    }

    #[test]
    fn default_schedule_shape() {
        let s = make_lag_schedule(ScheduleConfig::default()).unwrap();
        assert_eq!(s.len(), 16 + 4 * 8);
        assert_eq!(s.max_lag(), 256);
        let secs = s.lag_seconds(1.5e-6);
        assert!((secs[0] - 1.5e-6).abs() < 1e-18);
        assert!((secs[secs.len() - 1] - 384e-6).abs() < 1e-15);
        for e in s.entries() {
            assert_eq!(e.lag % 2u64.pow(e.level), 0);
        }
        assert!(s.lags().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn bad_parameters() {
        let bad = [
            ScheduleConfig::MultiTau {
                m: 1,
                b: 2,
                levels: 2,
            },
            ScheduleConfig::MultiTau {
                m: 4,
                b: 1,
                levels: 2,
            },
            ScheduleConfig::MultiTau {
                m: 4,
                b: 2,
                levels: 0,
            },
            ScheduleConfig::Linear { max_lag: 0 },
        ];
        for cfg in bad {
            assert!(matches!(make_lag_schedule(cfg), Err(Error::Config(_))), "{cfg:?}");
        }
    }

    #[test]
    fn odd_ratio_stays_increasing() {
        let s = make_lag_schedule(ScheduleConfig::MultiTau {
            m: 5,
            b: 3,
            levels: 3,
        })
        .unwrap();
        assert_eq!(s.lags(), vec![1, 2, 3, 4, 5, 6, 9, 12, 15, 18, 27, 36, 45]);
    }
}
