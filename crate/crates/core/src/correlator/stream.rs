use std::sync::Arc;

use rayon::prelude::*;

use super::schedule::LagSchedule;
use super::{normalize, CurveSource, G2Curve, LagSums, Normalization};
use crate::error::{Error, Result};
use crate::frame::PhotonFrame;

/// Frames buffered per pixel before the lag kernels run.
const BLOCK: usize = 8192;

#[derive(Debug)]
struct Plan {
    bin: u64,
    /// Coarse lags per level.
    level_lags: Vec<Vec<u64>>,
    /// Largest coarse lag per level, i.e. how much history each level keeps.
    depth: Vec<usize>,
    min_samples: u64,
    schedule: LagSchedule,
}

impl Plan {
    fn new(schedule: &LagSchedule) -> Self {
        let level_lags: Vec<Vec<u64>> = (0..schedule.level_count())
            .map(|l| schedule.level_lags(l))
            .collect();
        let depth = level_lags
            .iter()
            .map(|l| l.last().copied().unwrap_or(0) as usize)
            .collect();
        Plan {
            bin: schedule.bin_factor(),
            level_lags,
            depth,
            min_samples: schedule.min_samples(),
            schedule: schedule.clone(),
        }
    }
}

#[derive(Debug, Clone, Default)]
struct LevelState {
    /// Last `depth` complete values, oldest first.
    hist: Vec<u64>,
    /// First `depth` values ever seen.
    first: Vec<u64>,
    total: u128,
    count: u64,
    /// Σ C(t)C(t+j), aligned with the level's lag list.
    products: Vec<u128>,
    /// Running sum toward the next level's bin.
    partial: u64,
    partial_n: u64,
}

impl LevelState {
    fn sums(&self, lag_index: usize, coarse: u64) -> LagSums {
        let j = coarse as usize;
        let tail: u128 = self.hist[self.hist.len() - j..].iter().map(|&v| v as u128).sum();
        let head: u128 = self.first[..j].iter().map(|&v| v as u128).sum();
        LagSums {
            products: self.products[lag_index],
            pairs: self.count - coarse,
            count: self.count,
            total: self.total,
            left: self.total - tail,
            right: self.total - head,
        }
    }

    /// Records `vals` (already folded into the product sums) as seen.
    fn absorb<T: Copy + Into<u64>>(&mut self, vals: &[T], depth: usize) {
        self.total += vals.iter().map(|&v| v.into()).sum::<u64>() as u128;
        if self.first.len() < depth {
            let take = (depth - self.first.len()).min(vals.len());
            self.first.extend(vals[..take].iter().map(|&v| v.into()));
        }
        self.count += vals.len() as u64;
        if vals.len() >= depth {
            self.hist.clear();
            self.hist
                .extend(vals[vals.len() - depth..].iter().map(|&v| v.into()));
        } else {
            self.hist.extend(vals.iter().map(|&v| v.into()));
            let excess = self.hist.len().saturating_sub(depth);
            self.hist.drain(..excess);
        }
    }

    /// Folds `vals` into next-level bins of `bin` samples.
    fn rebin<T: Copy + Into<u64>>(&mut self, vals: &[T], bin: u64, out: &mut Vec<u64>) {
        out.clear();
        for &v in vals {
            self.partial += v.into();
            self.partial_n += 1;
            if self.partial_n == bin {
                out.push(self.partial);
                self.partial = 0;
                self.partial_n = 0;
            }
        }
    }
}

/// Adds Σ work[i]·work[i−j] over new positions `i ≥ h` (pairs that reach
/// back before the first sample ever seen are skipped). `work` is the kept
/// history followed by the new values; the narrowest integer type that
/// cannot overflow is picked from the block maximum.
fn accumulate<T: Copy + Into<u64>>(hist: &[u64], new: &[T], lags: &[u64], products: &mut [u128]) {
    let h = hist.len();
    let len = (h + new.len()) as u128;
    let maxv = hist
        .iter()
        .copied()
        .chain(new.iter().map(|&v| v.into()))
        .max()
        .unwrap_or(0) as u128;
    let bound = maxv * maxv * len;
    if maxv <= i16::MAX as u128 && bound <= i32::MAX as u128 {
        let mut work: Vec<i16> = Vec::with_capacity(h + new.len());
        work.extend(hist.iter().map(|&v| v as i16));
        work.extend(new.iter().map(|&v| v.into() as i16));
        products_i16(&work, h, lags, products);
    } else if maxv <= u32::MAX as u128 && bound <= u64::MAX as u128 {
        let mut work: Vec<u32> = Vec::with_capacity(h + new.len());
        work.extend(hist.iter().map(|&v| v as u32));
        work.extend(new.iter().map(|&v| v.into() as u32));
        products_u32(&work, h, lags, products);
    } else {
        let mut work: Vec<u64> = Vec::with_capacity(h + new.len());
        work.extend_from_slice(hist);
        work.extend(new.iter().map(|&v| v.into()));
        products_u128(&work, h, lags, products);
    }
}

fn pair_range(h: usize, j: usize, end: usize) -> Option<(usize, usize)> {
    let start = h.max(j);
    (start < end).then_some((start, end))
}

fn products_u128(work: &[u64], h: usize, lags: &[u64], products: &mut [u128]) {
    for (acc, &j) in products.iter_mut().zip(lags) {
        let j = j as usize;
        if let Some((start, end)) = pair_range(h, j, work.len()) {
            *acc += work[start..end]
                .iter()
                .zip(&work[start - j..end - j])
                .map(|(&x, &y)| x as u128 * y as u128)
                .sum::<u128>();
        }
    }
}

fn products_u32(work: &[u32], h: usize, lags: &[u64], products: &mut [u128]) {
    for (acc, &j) in products.iter_mut().zip(lags) {
        let j = j as usize;
        if let Some((start, end)) = pair_range(h, j, work.len()) {
            let mut s: u64 = 0;
            for (&x, &y) in work[start..end].iter().zip(&work[start - j..end - j]) {
                s += x as u64 * y as u64;
            }
            *acc += s as u128;
        }
    }
}

fn products_i16(work: &[i16], h: usize, lags: &[u64], products: &mut [u128]) {
    for (acc, &j) in products.iter_mut().zip(lags) {
        let j = j as usize;
        if let Some((start, end)) = pair_range(h, j, work.len()) {
            let mut s: i32 = 0;
            for (&x, &y) in work[start..end].iter().zip(&work[start - j..end - j]) {
                s += x as i32 * y as i32;
            }
            *acc += s as u128;
        }
    }
}

/// Streaming accumulator for one pixel.
#[derive(Debug, Clone)]
pub struct PixelCorrState {
    plan: Arc<Plan>,
    levels: Vec<LevelState>,
    samples: u64,
}

impl PixelCorrState {
    pub fn new(schedule: &LagSchedule) -> Self {
        Self::with_plan(Arc::new(Plan::new(schedule)))
    }

    fn with_plan(plan: Arc<Plan>) -> Self {
        let levels = plan
            .level_lags
            .iter()
            .map(|lags| LevelState {
                products: vec![0; lags.len()],
                ..LevelState::default()
            })
            .collect();
        PixelCorrState {
            plan,
            levels,
            samples: 0,
        }
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn total_counts(&self) -> u128 {
        self.levels[0].total
    }

    /// Σ I(t)I(t+τ) for each schedule lag, in schedule order.
    pub fn product_sums(&self) -> Vec<u128> {
        self.plan
            .schedule
            .entries()
            .iter()
            .map(|e| {
                let level = e.level as usize;
                let idx = self.plan.level_lags[level]
                    .iter()
                    .position(|&c| c == e.coarse)
                    .expect("lag belongs to its level");
                self.levels[level].products[idx]
            })
            .collect()
    }

    /// Pairs accumulated at each lag, in schedule order (coarse units).
    pub fn pair_counts(&self) -> Vec<u64> {
        self.plan
            .schedule
            .entries()
            .iter()
            .map(|e| {
                self.levels[e.level as usize]
                    .count
                    .saturating_sub(e.coarse)
            })
            .collect()
    }

    /// Advances the state by consecutive samples. Samples must arrive in
    /// time order; chunk boundaries do not matter.
    pub fn feed(&mut self, samples: &[u16]) {
        if samples.is_empty() {
            return;
        }
        let plan = Arc::clone(&self.plan);
        let n_levels = self.levels.len();
        let level0 = &mut self.levels[0];
        accumulate(&level0.hist, samples, &plan.level_lags[0], &mut level0.products);
        level0.absorb(samples, plan.depth[0]);
        self.samples += samples.len() as u64;
        if n_levels == 1 {
            return;
        }

        let mut vals = Vec::new();
        let mut next = Vec::new();
        self.levels[0].rebin(samples, plan.bin, &mut vals);
        for level in 1..n_levels {
            if vals.is_empty() {
                break;
            }
            let st = &mut self.levels[level];
            accumulate(&st.hist, &vals, &plan.level_lags[level], &mut st.products);
            st.absorb(&vals, plan.depth[level]);
            if level + 1 < n_levels {
                st.rebin(&vals, plan.bin, &mut next);
                std::mem::swap(&mut vals, &mut next);
            }
        }
    }

    /// g₂ at every schedule lag. Pixels whose mean count per bin is below
    /// `min_mean` (or zero) come back flagged invalid rather than as errors.
    pub fn finalize(
        &self,
        mode: Normalization,
        min_mean: f64,
        sample_period: f64,
        source: CurveSource,
    ) -> Result<G2Curve> {
        if self.samples < self.plan.min_samples {
            return Err(Error::InsufficientData(format!(
                "{} samples accumulated, schedule needs at least {}",
                self.samples, self.plan.min_samples
            )));
        }
        let lags = self.plan.schedule.lag_seconds(sample_period);
        let mean = self.levels[0].total as f64 / self.samples as f64;
        if mean <= 0.0 || mean < min_mean {
            return Ok(G2Curve::invalid(lags, source, mean));
        }
        let mut values = Vec::with_capacity(lags.len());
        for (level, lag_list) in self.plan.level_lags.iter().enumerate() {
            let st = &self.levels[level];
            for (idx, &coarse) in lag_list.iter().enumerate() {
                match normalize(&st.sums(idx, coarse), mode) {
                    Some(v) => values.push(v),
                    None => return Ok(G2Curve::invalid(lags, source, mean)),
                }
            }
        }
        Ok(G2Curve {
            lags,
            values,
            valid: true,
            source,
            mean_count: mean,
        })
    }
}

/// Correlator states for a set of pixels of a frame grid.
#[derive(Debug, Clone)]
pub struct Correlator {
    width: usize,
    height: usize,
    pixels: Vec<usize>,
    states: Vec<PixelCorrState>,
    /// Slot-major staging area, `BLOCK` samples per tracked pixel.
    pending: Vec<u16>,
    pending_len: usize,
}

impl Correlator {
    /// Tracks the listed row-major pixel indices.
    pub fn new(schedule: &LagSchedule, width: usize, height: usize, pixels: Vec<usize>) -> Result<Self> {
        if pixels.is_empty() {
            return Err(Error::config("correlator needs at least one pixel"));
        }
        if let Some(&px) = pixels.iter().find(|&&p| p >= width * height) {
            return Err(Error::shape(format!(
                "pixel {px} outside {width}x{height} frame"
            )));
        }
        let plan = Arc::new(Plan::new(schedule));
        let states = pixels
            .iter()
            .map(|_| PixelCorrState::with_plan(Arc::clone(&plan)))
            .collect();
        Ok(Correlator {
            width,
            height,
            pending: vec![0; pixels.len() * BLOCK],
            pixels,
            states,
            pending_len: 0,
        })
    }

    /// Tracks every pixel of the frame.
    pub fn full_frame(schedule: &LagSchedule, width: usize, height: usize) -> Result<Self> {
        Self::new(schedule, width, height, (0..width * height).collect())
    }

    pub fn pixels(&self) -> &[usize] {
        &self.pixels
    }

    pub fn samples(&self) -> u64 {
        self.states[0].samples() + self.pending_len as u64
    }

    pub fn feed_frame(&mut self, frame: &PhotonFrame) -> Result<()> {
        if frame.width() != self.width || frame.height() != self.height {
            return Err(Error::shape(format!(
                "frame is {}x{}, correlator expects {}x{}",
                frame.width(),
                frame.height(),
                self.width,
                self.height
            )));
        }
        self.feed_counts(frame.counts())
    }

    /// Like [`Correlator::feed_frame`] for a bare row-major count slice.
    pub fn feed_counts(&mut self, counts: &[u16]) -> Result<()> {
        if counts.len() != self.width * self.height {
            return Err(Error::shape(format!(
                "frame has {} counts, correlator expects {}",
                counts.len(),
                self.width * self.height
            )));
        }
        let t = self.pending_len;
        for (slot, &px) in self.pixels.iter().enumerate() {
            self.pending[slot * BLOCK + t] = counts[px];
        }
        self.pending_len += 1;
        if self.pending_len == BLOCK {
            self.flush();
        }
        Ok(())
    }

    /// Feeds a run of samples per tracked pixel (same order as
    /// [`Correlator::pixels`], equal lengths). Skips the frame staging.
    pub fn feed_traces<T: AsRef<[u16]> + Sync>(&mut self, traces: &[T]) -> Result<()> {
        if traces.len() != self.states.len() {
            return Err(Error::shape(format!(
                "{} traces for {} tracked pixels",
                traces.len(),
                self.states.len()
            )));
        }
        let len = traces[0].as_ref().len();
        if traces.iter().any(|t| t.as_ref().len() != len) {
            return Err(Error::shape("per-pixel traces differ in length"));
        }
        self.flush();
        self.states
            .par_iter_mut()
            .zip(traces.par_iter())
            .for_each(|(s, t)| s.feed(t.as_ref()));
        Ok(())
    }

    fn flush(&mut self) {
        if self.pending_len == 0 {
            return;
        }
        let n = self.pending_len;
        self.states
            .par_iter_mut()
            .zip(self.pending.par_chunks(BLOCK))
            .for_each(|(s, chunk)| s.feed(&chunk[..n]));
        self.pending_len = 0;
    }

    /// Per-pixel curves in [`Correlator::pixels`] order. Feeding may continue
    /// afterwards, so this doubles as a snapshot at shorter integration times.
    pub fn finalize(
        &mut self,
        mode: Normalization,
        min_mean: f64,
        sample_period: f64,
    ) -> Result<Vec<G2Curve>> {
        self.flush();
        self.states
            .par_iter()
            .zip(self.pixels.par_iter())
            .map(|(s, &px)| s.finalize(mode, min_mean, sample_period, CurveSource::Pixel(px)))
            .collect()
    }

    pub fn states(&mut self) -> &[PixelCorrState] {
        self.flush();
        &self.states
    }
}

#[cfg(test)]
mod tests {
    use super::super::{make_lag_schedule, ScheduleConfig};
    use super::*;

    fn linear(max_lag: u64) -> LagSchedule {
        make_lag_schedule(ScheduleConfig::Linear { max_lag }).unwrap()
    }

    #[test]
    fn constant_frames_give_c_squared_products() {
        let s = make_lag_schedule(ScheduleConfig::default()).unwrap();
        let mut corr = Correlator::full_frame(&s, 3, 2).unwrap();
        let n = 1000u64;
        let frame = PhotonFrame::new(3, 2, vec![5; 6]).unwrap();
        for _ in 0..n {
            corr.feed_frame(&frame).unwrap();
        }
        let st = &corr.states()[4];
        for ((e, &prod), &pairs) in s
            .entries()
            .iter()
            .zip(&st.product_sums())
            .zip(&st.pair_counts())
        {
            let scale = 2u128.pow(e.level);
            let n_level = n / 2u64.pow(e.level);
            assert_eq!(pairs, n_level - e.coarse);
            assert_eq!(prod, 25 * scale * scale * (n_level - e.coarse) as u128);
        }
        // level 0 is literally c²·(n−τ)
        assert_eq!(st.product_sums()[0], 25 * (n as u128 - 1));
    }

    #[test]
    fn dark_pixel_is_invalid_not_error() {
        let s = linear(4);
        let mut st = PixelCorrState::new(&s);
        st.feed(&[0; 100]);
        assert!(st.product_sums().iter().all(|&p| p == 0));
        let c = st
            .finalize(Normalization::Plain, 0.005, 1.5e-6, CurveSource::Trace)
            .unwrap();
        assert!(!c.valid);
        let c = st
            .finalize(Normalization::Plain, 0.0, 1.5e-6, CurveSource::Trace)
            .unwrap();
        assert!(!c.valid);
    }

    #[test]
    fn constant_trace_is_exactly_one() {
        let s = make_lag_schedule(ScheduleConfig::default()).unwrap();
        for c in [1u16, 3, 255, 256, 40_000] {
            let mut st = PixelCorrState::new(&s);
            st.feed(&vec![c; 2000]);
            for mode in [Normalization::Plain, Normalization::Symmetric] {
                let g = st.finalize(mode, 0.0, 1.5e-6, CurveSource::Trace).unwrap();
                assert!(g.valid);
                assert!(g.values.iter().all(|&v| v == 1.0), "{c} {mode:?} {:?}", g.values);
            }
        }
    }

    #[test]
    fn period_two_trace() {
        let s = linear(2);
        let mut st = PixelCorrState::new(&s);
        let trace: Vec<u16> = (0..1000).map(|t| if t % 2 == 0 { 2 } else { 0 }).collect();
        st.feed(&trace);
        let g = st
            .finalize(Normalization::Plain, 0.0, 1.5e-6, CurveSource::Trace)
            .unwrap();
        assert_eq!(g.values, vec![0.0, 2.0]);
    }

    #[test]
    fn too_few_samples() {
        let s = linear(8);
        let mut st = PixelCorrState::new(&s);
        st.feed(&[1; 15]);
        assert!(matches!(
            st.finalize(Normalization::Plain, 0.0, 1.0, CurveSource::Trace),
            Err(Error::InsufficientData(_))
        ));
        st.feed(&[1]);
        assert!(st
            .finalize(Normalization::Plain, 0.0, 1.0, CurveSource::Trace)
            .is_ok());
    }

    #[test]
    fn chunking_does_not_matter() {
        let s = make_lag_schedule(ScheduleConfig::MultiTau {
            m: 8,
            b: 2,
            levels: 4,
        })
        .unwrap();
        let trace: Vec<u16> = (0..5000u32)
            .map(|t| ((t.wrapping_mul(2_654_435_761) >> 13) % 4) as u16 + if t % 97 == 0 { 300 } else { 0 })
            .collect();
        let mut whole = PixelCorrState::new(&s);
        whole.feed(&trace);
        let mut pieces = PixelCorrState::new(&s);
        let mut at = 0;
        for len in [1usize, 2, 3, 7, 64, 1000].iter().cycle() {
            if at >= trace.len() {
                break;
            }
            let end = (at + len).min(trace.len());
            pieces.feed(&trace[at..end]);
            at = end;
        }
        assert_eq!(whole.product_sums(), pieces.product_sums());
        assert_eq!(whole.pair_counts(), pieces.pair_counts());
        let a = whole.finalize(Normalization::Symmetric, 0.0, 1.0, CurveSource::Trace).unwrap();
        let b = pieces.finalize(Normalization::Symmetric, 0.0, 1.0, CurveSource::Trace).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn frame_shape_mismatch() {
        let s = linear(2);
        let mut corr = Correlator::full_frame(&s, 4, 4).unwrap();
        assert!(matches!(
            corr.feed_frame(&PhotonFrame::zeros(4, 3)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn frame_path_equals_trace_path() {
        let s = make_lag_schedule(ScheduleConfig::default()).unwrap();
        let (w, h) = (4, 3);
        let n = 20_000;
        let traces: Vec<Vec<u16>> = (0..w * h)
            .map(|p| (0..n).map(|t| ((t * (p + 3) + t / 7) % 3) as u16).collect())
            .collect();
        let mut by_frame = Correlator::new(&s, w, h, vec![1, 5, 11]).unwrap();
        for t in 0..n {
            let counts: Vec<u16> = (0..w * h).map(|p| traces[p][t]).collect();
            by_frame.feed_counts(&counts).unwrap();
        }
        let mut by_trace = Correlator::new(&s, w, h, vec![1, 5, 11]).unwrap();
        let picked: Vec<&[u16]> = [1, 5, 11].iter().map(|&p| traces[p].as_slice()).collect();
        by_trace.feed_traces(&picked[..]).unwrap();
        let a = by_frame.finalize(Normalization::Plain, 0.0, 1.5e-6).unwrap();
        let b = by_trace.finalize(Normalization::Plain, 0.0, 1.5e-6).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[1].source, CurveSource::Pixel(5));
    }
}
