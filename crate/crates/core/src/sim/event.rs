use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::pattern::{perturb, FiberGeometry, Pattern};
use super::trace::TraceGen;
use crate::error::{Error, Result};
use crate::frame::{FiberMap, PhotonFrame, PhotonRecording, RecordingHeader, RecordingWriter};
use crate::rng::{self, STREAM_JITTER, STREAM_PIXEL};

fn default_tau_base() -> f64 {
    200e-6
}
fn default_tau_event() -> f64 {
    50e-6
}
fn default_beta() -> f64 {
    0.5
}
fn default_rate() -> f64 {
    0.3
}
fn default_t_int() -> f64 {
    0.4
}
fn one() -> f64 {
    1.0
}

/// A decorrelation event template. Only `pattern` and `label` are required
/// in JSON; everything else falls back to the desk-scale defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    pub pattern: Pattern,
    /// Background decorrelation time (s).
    #[serde(default = "default_tau_base")]
    pub tau_base: f64,
    /// Perturbation scale (s).
    #[serde(default = "default_tau_event")]
    pub tau_event: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Mean counts per bin per pixel.
    #[serde(default = "default_rate")]
    pub rate: f64,
    /// Integration time (s).
    #[serde(default = "default_t_int")]
    pub t_int: f64,
    pub label: u32,
    /// Multiplies every overlap w_p.
    #[serde(default = "one")]
    pub contrast: f64,
    /// Translation jitter as a fraction of the grid side.
    #[serde(default)]
    pub jitter: f64,
    /// Per-cell flip probability.
    #[serde(default)]
    pub flip_noise: f64,
}

impl EventSpec {
    pub fn new(pattern: Pattern, label: u32) -> Self {
        EventSpec {
            pattern,
            tau_base: default_tau_base(),
            tau_event: default_tau_event(),
            beta: default_beta(),
            rate: default_rate(),
            t_int: default_t_int(),
            label,
            contrast: 1.0,
            jitter: 0.0,
            flip_noise: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !(pos(self.tau_base) && pos(self.tau_event) && pos(self.rate) && pos(self.t_int)) {
            return Err(Error::config(
                "tau_base, tau_event, rate and t_int must be positive",
            ));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::config(format!("beta must lie in (0, 1], got {}", self.beta)));
        }
        if !(self.contrast >= 0.0) || !(0.0..=0.5).contains(&self.jitter) || !(0.0..=1.0).contains(&self.flip_noise) {
            return Err(Error::config("contrast ≥ 0, jitter in [0, 0.5], flip_noise in [0, 1]"));
        }
        self.pattern.validate()
    }

    /// Samples covering `t_int` at the given period.
    pub fn samples(&self, period: f64) -> u64 {
        (self.t_int / period).round() as u64
    }
}

/// Per-fiber decorrelation times of the nominal (unjittered) pattern.
pub fn pattern_to_fiber_tau(spec: &EventSpec, geom: &FiberGeometry) -> Result<Vec<f64>> {
    spec.validate()?;
    let layers = spec.pattern.layers(geom.grid())?;
    Ok(geom.fiber_tau(&layers, spec.tau_base, spec.tau_event, spec.contrast))
}

/// Per-fiber decorrelation times of one realization, with the spec's jitter
/// and flip noise drawn from `seed`.
pub fn realized_fiber_tau(spec: &EventSpec, geom: &FiberGeometry, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut layers = spec.pattern.layers(geom.grid())?;
    let mut rng = rng::stream(seed, &[STREAM_JITTER]);
    perturb(&mut layers, geom.grid(), spec.jitter, spec.flip_noise, &mut rng);
    Ok(geom.fiber_tau(&layers, spec.tau_base, spec.tau_event, spec.contrast))
}

/// Everything needed to regenerate any pixel of one event.
#[derive(Debug, Clone)]
pub struct EventSimulator {
    spec: EventSpec,
    seed: u64,
    width: usize,
    height: usize,
    period_ns: u32,
    fiber_tau: Vec<f64>,
    /// Fiber slot per row-major pixel.
    owner: Vec<Option<usize>>,
}

impl EventSimulator {
    pub fn new(
        spec: &EventSpec,
        geom: &FiberGeometry,
        map: &FiberMap,
        seed: u64,
        period_ns: u32,
    ) -> Result<Self> {
        if map.fiber_count() != geom.fiber_count() {
            return Err(Error::config(format!(
                "fiber map has {} fibers, geometry has {}",
                map.fiber_count(),
                geom.fiber_count()
            )));
        }
        if period_ns == 0 {
            return Err(Error::config("sample period must be positive"));
        }
        let fiber_tau = realized_fiber_tau(spec, geom, seed)?;
        let period = period_ns as f64 * 1e-9;
        if let Some(t) = fiber_tau.iter().find(|&&t| t <= period / 10.0) {
            return Err(Error::config(format!(
                "fiber decorrelation time {t} s is not resolvable at {period} s"
            )));
        }
        let (width, height) = map.dims();
        let mut owner = vec![None; width * height];
        for (slot, fiber) in map.fibers().iter().enumerate() {
            for &px in &fiber.pixels {
                owner[px] = Some(slot);
            }
        }
        Ok(EventSimulator {
            spec: spec.clone(),
            seed,
            width,
            height,
            period_ns,
            fiber_tau,
            owner,
        })
    }

    pub fn spec(&self) -> &EventSpec {
        &self.spec
    }

    pub fn fiber_tau(&self) -> &[f64] {
        &self.fiber_tau
    }

    pub fn period(&self) -> f64 {
        self.period_ns as f64 * 1e-9
    }

    pub fn samples(&self) -> u64 {
        self.spec.samples(self.period())
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Generator for one row-major pixel. Mapped pixels decorrelate at their
    /// fiber's τ_c, unmapped ones see Poisson(rate) noise.
    pub fn pixel_generator(&self, pixel: usize) -> Result<TraceGen> {
        let seed = rng::derive_seed(self.seed, &[STREAM_PIXEL, pixel as u64]);
        match self.owner.get(pixel) {
            Some(Some(slot)) => TraceGen::new(
                self.fiber_tau[*slot],
                self.spec.beta,
                self.spec.rate,
                self.period(),
                seed,
            ),
            Some(None) => TraceGen::poisson(self.spec.rate, seed),
            None => Err(Error::shape(format!("pixel {pixel} outside the frame"))),
        }
    }

    pub fn metadata(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("label".into(), self.spec.label.to_string());
        m.insert("seed".into(), self.seed.to_string());
        m.insert("t_int_s".into(), self.spec.t_int.to_string());
        m.insert(
            "fiber_tau_s".into(),
            self.fiber_tau
                .iter()
                .map(|t| t.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        m
    }

    /// Streams every frame to `path`, `block` frames at a time.
    pub fn write_recording(&self, path: &Path, block: usize) -> Result<()> {
        let n = self.samples();
        let header = RecordingHeader {
            width: self.width as u16,
            height: self.height as u16,
            sample_period_ns: self.period_ns,
            frame_count: n,
        };
        let mut writer = RecordingWriter::create(path, header, &self.metadata())?;
        let mut gens = (0..self.width * self.height)
            .map(|px| self.pixel_generator(px))
            .collect::<Result<Vec<_>>>()?;
        let block = block.max(1);
        let npx = gens.len();
        let mut traces = vec![0u16; npx * block];
        let mut frame = vec![0u16; npx];
        let mut done = 0u64;
        while done < n {
            let len = block.min((n - done) as usize);
            for (g, chunk) in gens.iter_mut().zip(traces.chunks_mut(block)) {
                g.fill(&mut chunk[..len]);
            }
            for t in 0..len {
                for (px, slot) in frame.iter_mut().enumerate() {
                    *slot = traces[px * block + t];
                }
                writer.write_counts(&frame)?;
            }
            done += len as u64;
        }
        writer.finish()
    }

    /// The whole recording in memory.
    pub fn to_recording(&self) -> Result<PhotonRecording> {
        let n = self.samples() as usize;
        let traces = (0..self.width * self.height)
            .map(|px| Ok(self.pixel_generator(px)?.generate(n)))
            .collect::<Result<Vec<_>>>()?;
        let frames = (0..n)
            .map(|t| PhotonFrame::new(self.width, self.height, traces.iter().map(|tr| tr[t]).collect()))
            .collect::<Result<Vec<_>>>()?;
        PhotonRecording::new(frames, self.period_ns, self.metadata())
    }
}

/// One event as an in-memory recording at the default sample period.
pub fn simulate_event(
    spec: &EventSpec,
    geom: &FiberGeometry,
    map: &FiberMap,
    seed: u64,
) -> Result<PhotonRecording> {
    EventSimulator::new(spec, geom, map, seed, crate::frame::DEFAULT_SAMPLE_PERIOD_NS)?.to_recording()
}
