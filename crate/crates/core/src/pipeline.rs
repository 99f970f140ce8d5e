//! Recording → feature-vector plumbing shared by the CLI and the tests.
//!
//! Two routes lead to the same numbers: reading recordings from disk, or
//! simulating the mapped pixels in memory and correlating them on the fly.
//! Both feed each pixel the same count sequence, so the features agree
//! exactly; the in-memory route just skips the unmapped pixels and the disk.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlator::{
    assemble_event_vector, fiber_average, make_lag_schedule, Correlator, CurveSource,
    EventVector, FeatureSet, G2Curve, LagSchedule, Normalization, PixelCorrState,
    ScheduleConfig, DEFAULT_MIN_MEAN,
};
use crate::error::{Error, Result};
use crate::frame::{FiberMap, RecordingReader};
use crate::sim::{DatasetSpec, EventSimulator};

/// Samples per pixel generated per step of the in-memory route.
const SIM_BLOCK: usize = 16_384;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrelateConfig {
    pub schedule: ScheduleConfig,
    pub normalization: Normalization,
    pub min_mean: f64,
}

impl Default for CorrelateConfig {
    fn default() -> Self {
        CorrelateConfig {
            schedule: ScheduleConfig::default(),
            normalization: Normalization::Plain,
            min_mean: DEFAULT_MIN_MEAN,
        }
    }
}

impl CorrelateConfig {
    pub fn lag_schedule(&self) -> Result<LagSchedule> {
        make_lag_schedule(self.schedule)
    }
}

/// Sample counts for each integration time, validated ascending-unique.
fn snapshot_samples(t_ints: &[f64], period: f64) -> Result<Vec<u64>> {
    if t_ints.is_empty() {
        return Err(Error::config("at least one integration time is required"));
    }
    let mut out = Vec::with_capacity(t_ints.len());
    for &t in t_ints {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::config(format!("integration time must be positive, got {t}")));
        }
        out.push((t / period).round() as u64);
    }
    Ok(out)
}

/// Durations actually integrated: whole samples times the period.
fn realized(samples: &[u64], period: f64) -> Vec<f64> {
    samples.iter().map(|&n| n as f64 * period).collect()
}

/// Per-pixel curves of one simulated event at several integration times,
/// `result[snapshot][pixel]`, pixels in `pixels` order.
pub fn simulate_pixel_curves(
    sim: &EventSimulator,
    pixels: &[usize],
    cfg: &CorrelateConfig,
    t_ints: &[f64],
) -> Result<Vec<Vec<G2Curve>>> {
    let schedule = cfg.lag_schedule()?;
    let period = sim.period();
    let targets = snapshot_samples(t_ints, period)?;
    let last = *targets.iter().max().expect("nonempty");
    let per_pixel = pixels
        .iter()
        .map(|&px| {
            let mut gen = sim.pixel_generator(px)?;
            let mut state = PixelCorrState::new(&schedule);
            let mut order: Vec<usize> = (0..targets.len()).collect();
            order.sort_by_key(|&i| targets[i]);
            let mut curves: Vec<Option<G2Curve>> = vec![None; targets.len()];
            let mut buf = vec![0u16; SIM_BLOCK];
            let mut done = 0u64;
            let mut next = 0;
            while next < order.len() {
                let stop = targets[order[next]];
                while done < stop {
                    let len = SIM_BLOCK.min((stop - done) as usize);
                    gen.fill(&mut buf[..len]);
                    state.feed(&buf[..len]);
                    done += len as u64;
                }
                while next < order.len() && targets[order[next]] == done {
                    curves[order[next]] = Some(state.finalize(
                        cfg.normalization,
                        cfg.min_mean,
                        period,
                        CurveSource::Pixel(px),
                    )?);
                    next += 1;
                }
            }
            debug_assert_eq!(done, last);
            Ok(curves.into_iter().map(|c| c.expect("every snapshot taken")).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<Vec<G2Curve>>>>()?;
    Ok((0..targets.len())
        .map(|s| per_pixel.iter().map(|c| c[s].clone()).collect())
        .collect())
}

fn vectors_from_curves(
    snapshots: Vec<Vec<G2Curve>>,
    map: &FiberMap,
    min_mean: f64,
    event_id: u64,
    durations: &[f64],
) -> Result<Vec<EventVector>> {
    snapshots
        .into_iter()
        .zip(durations)
        .map(|(curves, &t)| assemble_event_vector(&fiber_average(&curves, map, min_mean), event_id, t))
        .collect()
}

/// Event vectors of one simulated event, one per integration time.
pub fn simulate_event_vectors(
    sim: &EventSimulator,
    map: &FiberMap,
    cfg: &CorrelateConfig,
    t_ints: &[f64],
    event_id: u64,
) -> Result<Vec<EventVector>> {
    let curves = simulate_pixel_curves(sim, &map.mapped_pixels(), cfg, t_ints)?;
    let durations = realized(&snapshot_samples(t_ints, sim.period())?, sim.period());
    vectors_from_curves(curves, map, cfg.min_mean, event_id, &durations)
}

/// Features of a whole dataset at each integration time, without writing
/// recordings. Events run in parallel; the output is in event-id order.
pub fn simulate_dataset_features(
    dspec: &DatasetSpec,
    map: &FiberMap,
    cfg: &CorrelateConfig,
    t_ints: &[f64],
) -> Result<Vec<FeatureSet>> {
    let t_max = t_ints.iter().cloned().fold(f64::NAN, f64::max);
    let dspec = dspec.clone().with_t_int(t_max);
    let events = dspec.plan()?;
    let geom = dspec.geometry()?;
    let per_event = events
        .par_iter()
        .map(|e| {
            let sim = EventSimulator::new(&e.spec, &geom, map, e.seed, dspec.sample_period_ns)?;
            simulate_event_vectors(&sim, map, cfg, t_ints, e.event_id)
        })
        .collect::<Result<Vec<_>>>()?;
    (0..t_ints.len())
        .map(|s| {
            let vs: Vec<EventVector> = per_event.iter().map(|v| v[s].clone()).collect();
            FeatureSet::from_vectors(&vs)
        })
        .collect()
}

/// Event id encoded in a recording file name (`event_00042.crpe` → 42).
pub fn event_id_from_path(path: &Path) -> Option<u64> {
    let stem = path.file_stem()?.to_str()?;
    let digits: String = stem
        .chars()
        .rev()
        .take_while(|c| c.is_ascii_digit())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    digits.parse().ok()
}

/// Recording files (`*.crpe`) in a directory, sorted by name.
pub fn list_recordings(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "crpe"))
        .collect();
    out.sort();
    Ok(out)
}

/// Correlates the mapped pixels of one recording file. `t_ints` of `None`
/// uses the whole recording. Only the first `max(t_ints)` seconds are read.
pub fn recording_vectors(
    path: &Path,
    map: &FiberMap,
    cfg: &CorrelateConfig,
    t_ints: Option<&[f64]>,
    event_id: u64,
) -> Result<Vec<EventVector>> {
    let mut reader = RecordingReader::open(path)?;
    let h = reader.header();
    let (w, ht) = (h.width as usize, h.height as usize);
    if map.dims() != (w, ht) {
        return Err(Error::shape(format!(
            "{}: recording is {w}x{ht}, fiber map is {}x{}",
            path.display(),
            map.dims().0,
            map.dims().1
        )));
    }
    let period = h.sample_period();
    let whole = [h.frame_count as f64 * period];
    let t_ints = t_ints.unwrap_or(&whole);
    let targets = snapshot_samples(t_ints, period)?;
    let last = *targets.iter().max().expect("nonempty");
    if last > h.frame_count {
        return Err(Error::InsufficientData(format!(
            "{}: {} frames, integration time needs {last}",
            path.display(),
            h.frame_count
        )));
    }
    let schedule = cfg.lag_schedule()?;
    let mut corr = Correlator::new(&schedule, w, ht, map.mapped_pixels())?;
    let mut snaps: Vec<Option<Vec<G2Curve>>> = vec![None; targets.len()];
    let mut counts = Vec::new();
    let mut done = 0u64;
    loop {
        for (i, &t) in targets.iter().enumerate() {
            if t == done && snaps[i].is_none() {
                snaps[i] = Some(corr.finalize(cfg.normalization, cfg.min_mean, period)?);
            }
        }
        if done == last || !reader.read_into(&mut counts)? {
            break;
        }
        corr.feed_counts(&counts)?;
        done += 1;
    }
    let snaps: Vec<Vec<G2Curve>> = snaps.into_iter().map(|s| s.expect("all snapshots taken")).collect();
    vectors_from_curves(snaps, map, cfg.min_mean, event_id, &realized(&targets, period))
}

/// Features of every recording in `dir`, one set per integration time.
pub fn directory_features(
    dir: &Path,
    map: &FiberMap,
    cfg: &CorrelateConfig,
    t_ints: Option<&[f64]>,
) -> Result<Vec<FeatureSet>> {
    let paths = list_recordings(dir)?;
    if paths.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no .crpe recordings in {}",
            dir.display()
        )));
    }
    let per_event = paths
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let id = event_id_from_path(p).unwrap_or(i as u64);
            recording_vectors(p, map, cfg, t_ints, id)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = per_event[0].len();
    (0..n)
        .map(|s| {
            let vs: Vec<EventVector> = per_event.iter().map(|v| v[s].clone()).collect();
            FeatureSet::from_vectors(&vs)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn event_ids_from_names() {
        assert_eq!(event_id_from_path(Path::new("a/event_00042.crpe")), Some(42));
        assert_eq!(event_id_from_path(Path::new("x.crpe")), None);
    }
}
