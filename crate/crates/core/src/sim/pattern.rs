//! Event patterns, fiber sensitivity kernels and the pattern → τ_c mapping.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// Side of the square pattern grid. Cells cover [−1, 1]².
pub const DEFAULT_GRID: usize = 28;

/// Reference flow speed (mm/s) whose tube contributes its full overlap.
pub const FULL_SPEED_MM_S: f64 = 1.4;

/// Modulation rate (kHz) at which a circle perturbs at `tau_event`.
pub const REFERENCE_FLIP_KHZ: f64 = 5.0;

const GLYPHS: [(char, [&str; 7]); 4] = [
    (
        'D',
        [
            "#####..", "#....#.", "#.....#", "#.....#", "#.....#", "#....#.", "#####..",
        ],
    ),
    (
        'U',
        [
            "#.....#", "#.....#", "#.....#", "#.....#", "#.....#", "#.....#", ".#####.",
        ],
    ),
    (
        'K',
        [
            "#....#.", "#...#..", "#..#...", "###....", "#..#...", "#...#..", "#....#.",
        ],
    ),
    (
        'E',
        [
            "#######", "#......", "#......", "######.", "#......", "#......", "#######",
        ],
    ),
];

/// Letters with a built-in bitmap.
pub fn glyph_names() -> Vec<char> {
    GLYPHS.iter().map(|(c, _)| *c).collect()
}

fn glyph(c: char) -> Option<&'static [&'static str; 7]> {
    GLYPHS
        .iter()
        .find(|(g, _)| g.eq_ignore_ascii_case(&c))
        .map(|(_, rows)| rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Pattern {
    /// Free-form bitmap, `#` (or `1`) marks an active cell. Scaled to the
    /// whole grid.
    Bitmap { rows: Vec<String> },
    /// Built-in letter, drawn over the central three quarters of the grid.
    Letter { glyph: char },
    /// Two discs on the horizontal axis at x = ∓`offset`. Each perturbs at
    /// a rate proportional to its modulation frequency.
    CirclePair {
        radius: f64,
        #[serde(default = "default_circle_offset")]
        offset: f64,
        left_khz: f64,
        right_khz: f64,
    },
    /// Two vertical tubes at x = ∓`offset` with the given flow speeds (mm/s).
    TubePair {
        speed_left: f64,
        speed_right: f64,
        #[serde(default = "default_tube_offset")]
        offset: f64,
        #[serde(default = "default_tube_width")]
        width: f64,
    },
}

fn default_circle_offset() -> f64 {
    0.45
}

fn default_tube_offset() -> f64 {
    0.5
}

fn default_tube_width() -> f64 {
    0.35
}

/// One active region and its decorrelation-rate multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// Row-major `grid × grid` occupancy.
    pub cells: Vec<bool>,
    pub rate: f64,
}

fn cell_center(grid: usize, idx: usize) -> (f64, f64) {
    let step = 2.0 / grid as f64;
    let (r, c) = (idx / grid, idx % grid);
    (-1.0 + (c as f64 + 0.5) * step, 1.0 - (r as f64 + 0.5) * step)
}

fn from_fn(grid: usize, f: impl Fn(f64, f64) -> bool) -> Vec<bool> {
    (0..grid * grid)
        .map(|i| {
            let (x, y) = cell_center(grid, i);
            f(x, y)
        })
        .collect()
}

fn bitmap_cells(rows: &[String], grid: usize, inset: usize) -> Result<Vec<bool>> {
    let h = rows.len();
    let w = rows.first().map(|r| r.chars().count()).unwrap_or(0);
    if h == 0 || w == 0 || rows.iter().any(|r| r.chars().count() != w) {
        return Err(Error::config("bitmap rows must be nonempty and equally long"));
    }
    let bits: Vec<Vec<bool>> = rows
        .iter()
        .map(|r| r.chars().map(|c| c == '#' || c == '1').collect())
        .collect();
    let span = grid - 2 * inset;
    let mut cells = vec![false; grid * grid];
    for r in 0..span {
        for c in 0..span {
            cells[(r + inset) * grid + c + inset] = bits[r * h / span][c * w / span];
        }
    }
    Ok(cells)
}

impl Pattern {
    pub fn validate(&self) -> Result<()> {
        match self {
            Pattern::Bitmap { rows } => bitmap_cells(rows, DEFAULT_GRID, 0).map(|_| ()),
            Pattern::Letter { glyph: g } => glyph(*g)
                .map(|_| ())
                .ok_or_else(|| Error::config(format!("no built-in glyph {g:?}"))),
            Pattern::CirclePair {
                radius,
                left_khz,
                right_khz,
                ..
            } => {
                if !(*radius > 0.0) || *left_khz < 0.0 || *right_khz < 0.0 {
                    return Err(Error::config("circle radius must be > 0 and rates ≥ 0"));
                }
                Ok(())
            }
            Pattern::TubePair {
                speed_left,
                speed_right,
                width,
                ..
            } => {
                if *speed_left < 0.0 || *speed_right < 0.0 || !(*width > 0.0) {
                    return Err(Error::config("tube speeds must be ≥ 0 and width > 0"));
                }
                Ok(())
            }
        }
    }

    /// Rasterizes the pattern onto a `grid × grid` raster.
    pub fn layers(&self, grid: usize) -> Result<Vec<Layer>> {
        self.validate()?;
        Ok(match self {
            Pattern::Bitmap { rows } => vec![Layer {
                cells: bitmap_cells(rows, grid, 0)?,
                rate: 1.0,
            }],
            Pattern::Letter { glyph: g } => {
                let rows: Vec<String> = glyph(*g).expect("validated").iter().map(|s| s.to_string()).collect();
                vec![Layer {
                    cells: bitmap_cells(&rows, grid, grid / 8)?,
                    rate: 1.0,
                }]
            }
            Pattern::CirclePair {
                radius,
                offset,
                left_khz,
                right_khz,
            } => [(-offset, left_khz), (*offset, right_khz)]
                .into_iter()
                .map(|(cx, khz)| Layer {
                    cells: from_fn(grid, |x, y| (x - cx).powi(2) + y * y <= radius * radius),
                    rate: khz / REFERENCE_FLIP_KHZ,
                })
                .collect(),
            Pattern::TubePair {
                speed_left,
                speed_right,
                offset,
                width,
            } => [(-offset, speed_left), (*offset, speed_right)]
                .into_iter()
                .map(|(cx, v)| Layer {
                    cells: from_fn(grid, |x, _| (x - cx).abs() <= width / 2.0),
                    rate: v / FULL_SPEED_MM_S,
                })
                .collect(),
        })
    }
}

/// Shifts every layer by a random whole-cell offset of up to `jitter · grid`
/// per axis, then flips each cell independently with probability
/// `flip_noise`. The same offset applies to all layers.
pub fn perturb(layers: &mut [Layer], grid: usize, jitter: f64, flip_noise: f64, rng: &mut StreamRng) {
    let reach = (jitter * grid as f64).round() as i64;
    let (dr, dc) = if reach > 0 {
        (rng.random_range(-reach..=reach), rng.random_range(-reach..=reach))
    } else {
        (0, 0)
    };
    for layer in layers.iter_mut() {
        if dr != 0 || dc != 0 {
            let mut shifted = vec![false; grid * grid];
            for r in 0..grid as i64 {
                for c in 0..grid as i64 {
                    let (sr, sc) = (r - dr, c - dc);
                    if (0..grid as i64).contains(&sr) && (0..grid as i64).contains(&sc) {
                        shifted[(r * grid as i64 + c) as usize] =
                            layer.cells[(sr * grid as i64 + sc) as usize];
                    }
                }
            }
            layer.cells = shifted;
        }
        if flip_noise > 0.0 {
            for cell in layer.cells.iter_mut() {
                if rng.random::<f64>() < flip_noise {
                    *cell = !*cell;
                }
            }
        }
    }
}

/// Gaussian sensitivity kernels of the collection fibers over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberGeometry {
    grid: usize,
    centers: Vec<(f64, f64)>,
    sigma: f64,
    /// One unit-sum kernel per fiber, row-major over the grid.
    kernels: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeometrySpec {
    pub grid: usize,
    pub fibers: usize,
    pub radius: f64,
    pub sigma: f64,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        GeometrySpec {
            grid: DEFAULT_GRID,
            fibers: crate::frame::DEFAULT_FIBERS,
            radius: 0.5,
            sigma: 0.35,
        }
    }
}

impl GeometrySpec {
    pub fn build(&self) -> Result<FiberGeometry> {
        FiberGeometry::ring(self.grid, self.fibers, self.radius, self.sigma)
    }
}

impl FiberGeometry {
    pub fn new(grid: usize, centers: Vec<(f64, f64)>, sigma: f64) -> Result<Self> {
        if grid == 0 || centers.is_empty() || !(sigma > 0.0) {
            return Err(Error::config("geometry needs grid > 0, at least one fiber and sigma > 0"));
        }
        let kernels = centers
            .iter()
            .map(|&(fx, fy)| {
                let raw: Vec<f64> = (0..grid * grid)
                    .map(|i| {
                        let (x, y) = cell_center(grid, i);
                        (-((x - fx).powi(2) + (y - fy).powi(2)) / (2.0 * sigma * sigma)).exp()
                    })
                    .collect();
                let total: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / total).collect()
            })
            .collect();
        Ok(FiberGeometry {
            grid,
            centers,
            sigma,
            kernels,
        })
    }

    /// `fibers` centers evenly spaced on a circle, fiber 0 at 12 o'clock,
    /// proceeding clockwise.
    pub fn ring(grid: usize, fibers: usize, radius: f64, sigma: f64) -> Result<Self> {
        let centers = (0..fibers)
            .map(|p| {
                let a = std::f64::consts::FRAC_PI_2 - 2.0 * std::f64::consts::PI * p as f64 / fibers as f64;
                (radius * a.cos(), radius * a.sin())
            })
            .collect();
        Self::new(grid, centers, sigma)
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn centers(&self) -> &[(f64, f64)] {
        &self.centers
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn fiber_count(&self) -> usize {
        self.centers.len()
    }

    pub fn kernel(&self, fiber: usize) -> &[f64] {
        &self.kernels[fiber]
    }

    /// Kernel-weighted overlap of each fiber with the active cells.
    pub fn overlap(&self, cells: &[bool]) -> Vec<f64> {
        self.kernels
            .iter()
            .map(|k| {
                k.iter()
                    .zip(cells)
                    .filter(|(_, &on)| on)
                    .map(|(w, _)| w)
                    .sum::<f64>()
                    .min(1.0)
            })
            .collect()
    }

    /// Per-fiber decorrelation times from rate additivity:
    /// 1/τ_p = 1/τ_base + contrast · Σ_layers rate · w_p / τ_event.
    pub fn fiber_tau(&self, layers: &[Layer], tau_base: f64, tau_event: f64, contrast: f64) -> Vec<f64> {
        let mut inv = vec![1.0 / tau_base; self.fiber_count()];
        for layer in layers {
            for (acc, w) in inv.iter_mut().zip(self.overlap(&layer.cells)) {
                *acc += contrast * layer.rate * w / tau_event;
            }
        }
        inv.into_iter().map(|v| 1.0 / v).collect()
    }
}
