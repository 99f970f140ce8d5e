use std::path::{Path, PathBuf};

use clap::Args;
use crepe_core::correlator::{write_features, FeatureSet};
use crepe_core::embed::write_embedding;
use crepe_core::eval::clustering_accuracy;
use crepe_core::frame::{DEFAULT_HEIGHT, DEFAULT_WIDTH};
use crepe_core::pipeline::simulate_dataset_features;
use crepe_core::sim::{write_labels, DatasetSpec, Tissue};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::correlate::CorrelatorArgs;
use crate::embed::{embed_matrix, EmbedOptions, Method};
use crate::manifest::{self, Manifest};
use crate::simulate::{load_fiber_map, DatasetArgs};
use crate::{parse_list, usage, CliError, CliResult};

pub const TABLE_FILE: &str = "accuracy.csv";

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Integration times (s), comma-separated.
    #[arg(long)]
    pub tint: String,
    /// Methods, comma-separated (dcn, tsne, pca).
    #[arg(long, default_value = "dcn,tsne")]
    pub methods: String,
    /// Tissue presets, comma-separated; defaults to the dataset's own.
    #[arg(long)]
    pub tissues: Option<String>,
    /// Dataset seeds, comma-separated; defaults to the dataset's seed.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Fiber map (JSON); defaults to the 12-fiber ring.
    #[arg(long = "fiber-map")]
    pub fiber_map: Option<PathBuf>,
    #[command(flatten)]
    pub correlator: CorrelatorArgs,
    #[command(flatten)]
    pub options: EmbedOptions,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    Failed,
}

/// One row of the accuracy table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub dataset: String,
    pub tissue: String,
    pub seed: u64,
    pub t_int_s: f64,
    pub method: String,
    pub accuracy: f64,
    pub chance: f64,
    pub majority: f64,
    pub n: usize,
    pub status: CellStatus,
    pub message: String,
}

pub fn write_table(path: &Path, rows: &[SweepRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(crepe_core::Error::from)?;
    for r in rows {
        w.serialize(r).map_err(crepe_core::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_table(path: &Path) -> CliResult<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path).map_err(crepe_core::Error::from)?;
    let rows = r
        .deserialize()
        .collect::<Result<Vec<SweepRow>, _>>()
        .map_err(|e| crepe_core::Error::Format(format!("{}: {e}", path.display())))?;
    Ok(rows)
}

fn tissue_name(t: Option<Tissue>) -> String {
    t.map_or_else(|| "none".to_string(), |t| t.tag().to_string())
}

/// Features plus labels of one (tissue, seed) group, shared by all its
/// (integration time, method) cells.
struct Group {
    dataset: String,
    tissue: String,
    seed: u64,
    sets: crepe_core::Result<Vec<FeatureSet>>,
    labels: Vec<usize>,
    k: usize,
}

pub fn run(args: &SweepArgs, argv: &[String]) -> CliResult<()> {
    let t_ints: Vec<f64> = parse_list(&args.tint, "integration time")?;
    if t_ints.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return usage("integration times must be positive");
    }
    let methods: Vec<Method> = parse_list::<String>(&args.methods, "method")?
        .iter()
        .map(|m| {
            <Method as clap::ValueEnum>::from_str(m, true).map_err(|_| CliError::Usage(format!("unknown method {m:?}")))
        })
        .collect::<CliResult<_>>()?;
    let base = args.dataset.resolve()?;
    let tissues: Vec<Option<Tissue>> = match &args.tissues {
        Some(t) => parse_list::<Tissue>(t, "tissue")?.into_iter().map(Some).collect(),
        None => vec![base.tissue],
    };
    let seeds: Vec<u64> = match &args.seeds {
        Some(s) => parse_list(s, "seed")?,
        None => vec![base.seed],
    };
    let cfg = args.correlator.config()?;
    let map = load_fiber_map(args.fiber_map.as_deref(), (DEFAULT_WIDTH, DEFAULT_HEIGHT))?;
    let feat_dir = args.out.join("features");
    let emb_dir = args.out.join("embeddings");
    std::fs::create_dir_all(&feat_dir)?;
    std::fs::create_dir_all(&emb_dir)?;

    let mut groups = Vec::new();
    for &tissue in &tissues {
        for &seed in &seeds {
            let dspec = DatasetSpec {
                tissue,
                seed,
                ..base.clone()
            };
            let tag = format!("{}_seed{seed}", tissue_name(tissue));
            let plan = dspec.plan()?;
            let sets = simulate_dataset_features(&dspec, &map, &cfg, &t_ints);
            if let Ok(sets) = &sets {
                for (t, s) in t_ints.iter().zip(sets) {
                    write_features(&feat_dir.join(format!("{tag}_t{t}.csv")), s)?;
                }
                write_labels(&feat_dir.join(format!("{tag}_labels.csv")), &plan)?;
            }
            let by_id: std::collections::HashMap<u64, usize> =
                plan.iter().map(|e| (e.event_id, e.label as usize)).collect();
            let labels = match &sets {
                Ok(s) => s[0].event_ids.iter().map(|id| by_id[id]).collect(),
                Err(_) => Vec::new(),
            };
            groups.push(Group {
                dataset: dspec.name.clone(),
                tissue: tissue_name(tissue),
                seed,
                sets,
                labels,
                k: args.options.k.unwrap_or(dspec.class_count()),
            });
        }
    }

    let mut cells: Vec<(usize, usize, Method)> = Vec::new();
    for g in 0..groups.len() {
        for t in 0..t_ints.len() {
            cells.extend(methods.iter().map(|&m| (g, t, m)));
        }
    }
    let rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(g, t, method)| {
            let group = &groups[g];
            let mut row = SweepRow {
                dataset: group.dataset.clone(),
                tissue: group.tissue.clone(),
                seed: group.seed,
                t_int_s: t_ints[t],
                method: method.name().to_string(),
                accuracy: f64::NAN,
                chance: f64::NAN,
                majority: f64::NAN,
                n: 0,
                status: CellStatus::Failed,
                message: String::new(),
            };
            let result = (|| -> CliResult<(f64, f64, f64, usize)> {
                let set = match &group.sets {
                    Ok(s) => &s[t],
                    Err(e) => return Err(CliError::Stage(crepe_core::Error::InsufficientData(e.to_string()))),
                };
                let e = embed_matrix(&set.matrix(), method, group.k, &args.options)?;
                let name = format!("{}_seed{}_t{}_{}.csv", group.tissue, group.seed, t_ints[t], method.name());
                write_embedding(&emb_dir.join(name), &set.event_ids, e.z.view(), &e.cluster)?;
                let r = clustering_accuracy(&e.cluster, &group.labels)?;
                Ok((r.accuracy, r.chance.uniform, r.chance.majority, r.n))
            })();
            match result {
                Ok((acc, chance, majority, n)) => {
                    row.accuracy = acc;
                    row.chance = chance;
                    row.majority = majority;
                    row.n = n;
                    row.status = CellStatus::Ok;
                }
                Err(CliError::Stage(e)) => row.message = e.to_string(),
                Err(CliError::Usage(m)) => row.message = m,
            }
            row
        })
        .collect();

    let table = args.out.join(TABLE_FILE);
    write_table(&table, &rows)?;
    Manifest::new(
        "sweep",
        argv,
        Some(base.seed),
        json!({
            "dataset": base,
            "t_int": t_ints,
            "methods": methods,
            "tissues": tissues.iter().map(|t| tissue_name(*t)).collect::<Vec<_>>(),
            "seeds": seeds,
            "correlator": cfg,
            "train": args.options.train_config(groups.first().map_or(2, |g| g.k))?,
            "tsne": args.options.tsne_config(),
        }),
    )
    .output(&table)
    .output(&feat_dir)
    .output(&emb_dir)
    .write(&manifest::in_dir(&args.out))?;
    for r in &rows {
        match r.status {
            CellStatus::Ok => println!(
                "{} {} seed {} t_int {} {}: accuracy {:.4} (chance {:.4})",
                r.dataset, r.tissue, r.seed, r.t_int_s, r.method, r.accuracy, r.chance
            ),
            CellStatus::Failed => println!(
                "{} {} seed {} t_int {} {}: failed: {}",
                r.dataset, r.tissue, r.seed, r.t_int_s, r.method, r.message
            ),
        }
    }
    Ok(())
}
