//! Synthetic decorrelation events.
//!
//! A pattern (letter, circle pair, tube pair, free bitmap) is rasterized on
//! a square grid. Each collection fiber sees it through a Gaussian kernel,
//! and the overlap speeds up that fiber's decorrelation:
//! 1/τ_p = 1/τ_base + Σ w_p/τ_event. Every mapped pixel then receives an
//! independent speckle trace with its fiber's τ_p.

mod dataset;
mod event;
mod pattern;
mod trace;

pub use dataset::{
    generate_dataset, read_labels, recording_name, write_labels, ClassSpec, DatasetSpec,
    GeneratedDataset, PlannedEvent, Tissue, LABELS_FILE,
};
pub use event::{
    pattern_to_fiber_tau, realized_fiber_tau, simulate_event, EventSimulator, EventSpec,
};
pub use pattern::{
    glyph_names, perturb, FiberGeometry, GeometrySpec, Layer, Pattern, DEFAULT_GRID,
    FULL_SPEED_MM_S, REFERENCE_FLIP_KHZ,
};
pub use trace::{simulate_intensity_trace, TraceGen};
