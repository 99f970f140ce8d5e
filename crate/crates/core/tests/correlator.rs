use crepe_core::correlator::{
    make_lag_schedule, oracle_g2, Correlator, Normalization, PixelCorrState, ScheduleConfig,
};
use crepe_core::correlator::CurveSource;
use proptest::prelude::*;

fn schedule_strategy() -> impl Strategy<Value = ScheduleConfig> {
    prop_oneof![
        (1u64..40).prop_map(|max_lag| ScheduleConfig::Linear { max_lag }),
        (2u64..9, 2u64..4, 1u32..5).prop_map(|(m, b, levels)| ScheduleConfig::MultiTau {
            m,
            b,
            levels
        }),
    ]
}

fn trace_strategy() -> impl Strategy<Value = Vec<u16>> {
    prop_oneof![
        proptest::collection::vec(0u16..4, 400..1500),
        proptest::collection::vec(0u16..=u16::MAX, 400..1500),
    ]
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

fn stream_chunked(trace: &[u16], cuts: &[usize], schedule: &crepe_core::correlator::LagSchedule) -> PixelCorrState {
    let mut st = PixelCorrState::new(schedule);
    let mut at = 0;
    for &c in cuts {
        let end = (at + c).min(trace.len());
        st.feed(&trace[at..end]);
        at = end;
    }
    st.feed(&trace[at..]);
    st
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn streaming_matches_oracle(
        cfg in schedule_strategy(),
        trace in trace_strategy(),
        cuts in proptest::collection::vec(1usize..300, 0..8),
    ) {
        let schedule = make_lag_schedule(cfg).unwrap();
        prop_assume!(trace.len() as u64 >= schedule.min_samples());
        let st = stream_chunked(&trace, &cuts, &schedule);
        for mode in [Normalization::Plain, Normalization::Symmetric] {
            let got = st.finalize(mode, 0.0, 1.0, CurveSource::Trace).unwrap();
            let want = oracle_g2(&trace, &schedule, mode, 0.0, 1.0).unwrap();
            prop_assert_eq!(got.valid, want.valid);
            if want.valid {
                for (g, w) in got.values.iter().zip(&want.values) {
                    prop_assert!(rel(*g, *w) <= 1e-12, "{} vs {}", g, w);
                }
            }
        }
    }

    #[test]
    fn integer_rescaling_is_exact(
        trace in proptest::collection::vec(0u16..20, 600..1200),
        c in prop_oneof![Just(2u16), Just(3u16), Just(10u16)],
    ) {
        let schedule = make_lag_schedule(ScheduleConfig::default()).unwrap();
        let scaled: Vec<u16> = trace.iter().map(|&x| x * c).collect();
        for mode in [Normalization::Plain, Normalization::Symmetric] {
            let a = oracle_g2(&trace, &schedule, mode, 0.0, 1.0).unwrap();
            let mut st = PixelCorrState::new(&schedule);
            st.feed(&scaled);
            let b = st.finalize(mode, 0.0, 1.0, CurveSource::Trace).unwrap();
            prop_assert_eq!(a.valid, b.valid);
            if a.valid {
                for (x, y) in a.values.iter().zip(&b.values) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }

    #[test]
    fn constant_trace_is_one(level in 1u16..=u16::MAX, len in 512usize..3000) {
        let schedule = make_lag_schedule(ScheduleConfig::default()).unwrap();
        let mut st = PixelCorrState::new(&schedule);
        st.feed(&vec![level; len]);
        for mode in [Normalization::Plain, Normalization::Symmetric] {
            let g = st.finalize(mode, 0.0, 1.0, CurveSource::Trace).unwrap();
            prop_assert!(g.values.iter().all(|&v| v == 1.0));
        }
    }
}

#[test]
fn grid_feed_matches_single_pixel_states() {
    let schedule = make_lag_schedule(ScheduleConfig::default()).unwrap();
    let (w, h) = (4, 3);
    let n = 20_000;
    let traces: Vec<Vec<u16>> = (0..w * h)
        .map(|p| (0..n).map(|t| ((t * 7 + p * 13) % 5) as u16).collect())
        .collect();
    let mut grid = Correlator::full_frame(&schedule, w, h).unwrap();
    for t in 0..n {
        let frame: Vec<u16> = traces.iter().map(|tr| tr[t]).collect();
        grid.feed_counts(&frame).unwrap();
    }
    let curves = grid.finalize(Normalization::Plain, 0.0, 1.5e-6).unwrap();
    for (p, c) in curves.iter().enumerate() {
        let want = oracle_g2(&traces[p], &schedule, Normalization::Plain, 0.0, 1.5e-6).unwrap();
        assert_eq!(c.source, CurveSource::Pixel(p));
        for (a, b) in c.values.iter().zip(&want.values) {
            assert!(rel(*a, *b) <= 1e-12);
        }
    }
}
