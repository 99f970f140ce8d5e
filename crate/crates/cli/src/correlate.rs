use std::path::{Path, PathBuf};

use clap::Args;
use crepe_core::correlator::{write_features, Normalization, ScheduleConfig, DEFAULT_MIN_MEAN};
use crepe_core::frame::{RecordingReader, DEFAULT_HEIGHT, DEFAULT_WIDTH};
use crepe_core::pipeline::{directory_features, list_recordings, simulate_dataset_features, CorrelateConfig};
use crepe_core::sim::write_labels;
use serde_json::json;

use crate::manifest::{self, Manifest};
use crate::simulate::{load_fiber_map, DatasetArgs};
use crate::{parse_list, usage, CliError, CliResult};

#[derive(Debug, Clone, Args)]
pub struct CorrelatorArgs {
    /// Lag schedule: `multi-tau:M,B,LEVELS` or `linear:MAX_LAG`.
    #[arg(long, default_value = "multi-tau:16,2,5")]
    pub schedule: String,
    #[arg(long, default_value = "plain")]
    pub normalization: Normalization,
    /// Pixels with a lower mean count per bin are left out of fiber averages.
    #[arg(long = "min-mean", default_value_t = DEFAULT_MIN_MEAN)]
    pub min_mean: f64,
}

impl CorrelatorArgs {
    pub fn config(&self) -> CliResult<CorrelateConfig> {
        let schedule = parse_schedule(&self.schedule)?;
        if !(self.min_mean >= 0.0) {
            return usage("--min-mean must be >= 0");
        }
        Ok(CorrelateConfig {
            schedule,
            normalization: self.normalization,
            min_mean: self.min_mean,
        })
    }
}

pub fn parse_schedule(text: &str) -> CliResult<ScheduleConfig> {
    let bad = || CliError::Usage(format!("bad schedule {text:?}; expected multi-tau:M,B,LEVELS or linear:MAX"));
    let (kind, rest) = text.split_once(':').ok_or_else(bad)?;
    match kind {
        "multi-tau" => {
            let v: Vec<u64> = parse_list(rest, "schedule parameter")?;
            match v[..] {
                [m, b, levels] => Ok(ScheduleConfig::MultiTau {
                    m,
                    b,
                    levels: u32::try_from(levels).map_err(|_| bad())?,
                }),
                _ => Err(bad()),
            }
        }
        "linear" => Ok(ScheduleConfig::Linear {
            max_lag: rest.trim().parse().map_err(|_| bad())?,
        }),
        _ => Err(bad()),
    }
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Directory of `.crpe` recordings.
    #[arg(long = "in", conflicts_with_all = ["preset", "spec"])]
    pub input: Option<PathBuf>,
    /// Simulate the dataset in memory instead of reading recordings.
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Fiber map (JSON); defaults to the 12-fiber ring.
    #[arg(long = "fiber-map")]
    pub fiber_map: Option<PathBuf>,
    /// Integration time(s) in seconds, comma-separated. Defaults to the whole
    /// recording (or the dataset's event length).
    #[arg(long)]
    pub tint: Option<String>,
    #[command(flatten)]
    pub correlator: CorrelatorArgs,
    /// Feature CSV. With several integration times, `_t<T>` is appended to
    /// the file stem for each.
    #[arg(long)]
    pub out: PathBuf,
    /// In simulation mode, also write the event labels here.
    #[arg(long = "labels-out")]
    pub labels_out: Option<PathBuf>,
}

/// Output path for one integration time.
pub fn tint_path(out: &Path, t: f64, several: bool) -> PathBuf {
    if !several {
        return out.to_path_buf();
    }
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = out.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    out.with_file_name(format!("{stem}_t{t}.{ext}"))
}

pub fn run(args: &CorrelateArgs, argv: &[String]) -> CliResult<()> {
    let cfg = args.correlator.config()?;
    let t_ints: Option<Vec<f64>> = args.tint.as_deref().map(|t| parse_list(t, "integration time")).transpose()?;
    if let Some(ts) = &t_ints {
        if ts.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return usage("integration times must be positive");
        }
    }
    let (sets, source, seed) = match (&args.input, args.dataset.given()) {
        (Some(dir), false) => {
            let first = list_recordings(dir)?.into_iter().next();
            let dims = match first {
                Some(p) => {
                    let h = RecordingReader::open(&p)?.header();
                    (h.width as usize, h.height as usize)
                }
                None => (DEFAULT_WIDTH, DEFAULT_HEIGHT),
            };
            let map = load_fiber_map(args.fiber_map.as_deref(), dims)?;
            let sets = directory_features(dir, &map, &cfg, t_ints.as_deref())?;
            (sets, json!({"recordings": dir}), None)
        }
        (None, true) => {
            let dspec = args.dataset.resolve()?;
            let map = load_fiber_map(args.fiber_map.as_deref(), (DEFAULT_WIDTH, DEFAULT_HEIGHT))?;
            let ts = match &t_ints {
                Some(ts) => ts.clone(),
                None => {
                    let plan = dspec.plan()?;
                    vec![plan.iter().map(|e| e.spec.t_int).fold(f64::INFINITY, f64::min)]
                }
            };
            let sets = simulate_dataset_features(&dspec, &map, &cfg, &ts)?;
            if let Some(path) = &args.labels_out {
                manifest::ensure_parent(path)?;
                write_labels(path, &dspec.plan()?)?;
            }
            let seed = dspec.seed;
            (sets, json!({"dataset": dspec}), Some(seed))
        }
        _ => return usage("give either --in DIR or --preset/--spec"),
    };
    let several = sets.len() > 1;
    manifest::ensure_parent(&args.out)?;
    let mut written = Vec::new();
    for (i, set) in sets.iter().enumerate() {
        // Name files by the requested time; the table holds the realized one.
        let t = match &t_ints {
            Some(ts) => ts[i],
            None => set.t_int.first().copied().unwrap_or(0.0),
        };
        let path = tint_path(&args.out, t, several);
        write_features(&path, set)?;
        written.push(path);
    }
    let mut m = Manifest::new(
        "correlate",
        argv,
        seed,
        json!({"source": source, "correlator": cfg, "t_int": t_ints}),
    );
    for p in &written {
        m = m.output(p);
    }
    if let Some(p) = &args.labels_out {
        m = m.output(p);
    }
    m.write(&manifest::beside(&args.out))?;
    for (p, s) in written.iter().zip(&sets) {
        println!("{} events x {} features -> {}", s.len(), s.dim(), p.display());
    }
    Ok(())
}

