use std::path::{Path, PathBuf};

use clap::Args;
use crepe_core::frame::{FiberMap, FiberMapDoc, DEFAULT_HEIGHT, DEFAULT_WIDTH};
use crepe_core::sim::{generate_dataset, DatasetSpec, Tissue};
use serde_json::json;

use crate::manifest::{self, Manifest};
use crate::{usage, CliResult};

pub const DATASET_FILE: &str = "dataset.json";
pub const FIBER_MAP_FILE: &str = "fiber_map.json";

/// Where the dataset description comes from, shared with `correlate` and
/// `sweep`.
#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    /// Built-in dataset: letters, circles or tubes.
    #[arg(long, conflicts_with = "spec")]
    pub preset: Option<String>,
    /// Dataset description (JSON).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Overrides the dataset seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the tissue preset (tissue-I or tissue-II).
    #[arg(long)]
    pub tissue: Option<Tissue>,
    /// Overrides every event's integration time (s).
    #[arg(long = "event-tint")]
    pub event_tint: Option<f64>,
    /// Overrides the number of events per class.
    #[arg(long = "per-class")]
    pub per_class: Option<usize>,
}

impl DatasetArgs {
    pub fn given(&self) -> bool {
        self.preset.is_some() || self.spec.is_some()
    }

    pub fn resolve(&self) -> CliResult<DatasetSpec> {
        let mut d = match (&self.preset, &self.spec) {
            (Some(name), None) => DatasetSpec::preset(name, self.seed.unwrap_or(0))?,
            (None, Some(path)) => DatasetSpec::load(path)?,
            _ => return usage("exactly one of --preset or --spec is required"),
        };
        if let Some(seed) = self.seed {
            d.seed = seed;
        }
        if let Some(t) = self.tissue {
            d.tissue = Some(t);
        }
        if let Some(t) = self.event_tint {
            d = d.with_t_int(t);
        }
        if let Some(n) = self.per_class {
            d.classes.iter_mut().for_each(|c| c.count = n);
        }
        d.validate()?;
        Ok(d)
    }
}

/// A fiber map from a JSON document, or the default 12-fiber ring.
pub fn load_fiber_map(path: Option<&Path>, dims: (usize, usize)) -> CliResult<FiberMap> {
    match path {
        Some(p) => Ok(FiberMap::resolve(&FiberMapDoc::load(p)?, dims)?),
        None if dims == (DEFAULT_WIDTH, DEFAULT_HEIGHT) => Ok(FiberMap::default_ring()),
        None => usage("--fiber-map is required for non-default frame sizes"),
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Fiber map (JSON); defaults to the 12-fiber ring on a 32×32 array.
    #[arg(long = "fiber-map")]
    pub fiber_map: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &SimulateArgs, argv: &[String]) -> CliResult<()> {
    let dspec = args.dataset.resolve()?;
    let map = load_fiber_map(args.fiber_map.as_deref(), (DEFAULT_WIDTH, DEFAULT_HEIGHT))?;
    std::fs::create_dir_all(&args.out)?;
    let generated = generate_dataset(&dspec, &map, &args.out)?;
    let dataset_path = args.out.join(DATASET_FILE);
    std::fs::write(&dataset_path, dspec.to_json() + "\n")?;
    let map_path = args.out.join(FIBER_MAP_FILE);
    let doc = serde_json::to_string_pretty(&map.to_doc()).map_err(crepe_core::Error::from)?;
    std::fs::write(&map_path, doc + "\n")?;
    Manifest::new(
        "simulate",
        argv,
        Some(dspec.seed),
        json!({"dataset": dspec, "events": generated.recordings.len()}),
    )
    .output(&args.out)
    .output(&generated.labels)
    .output(&dataset_path)
    .output(&map_path)
    .write(&manifest::in_dir(&args.out))?;
    println!(
        "simulated {} events into {}",
        generated.recordings.len(),
        args.out.display()
    );
    Ok(())
}
