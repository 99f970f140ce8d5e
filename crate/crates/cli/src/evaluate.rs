use std::collections::HashMap;
use std::path::{Path, PathBuf};

use clap::Args;
use crepe_core::embed::read_embedding;
use crepe_core::eval::{clustering_accuracy, ClusterReport};
use crepe_core::sim::read_labels;
use crepe_core::Error;
use serde_json::json;

use crate::manifest::{self, Manifest};
use crate::CliResult;

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Embedding CSV with a cluster column.
    #[arg(long)]
    pub pred: PathBuf,
    /// `event_id,label` CSV.
    #[arg(long)]
    pub labels: PathBuf,
    /// JSON report; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Confusion table CSV (defaults to `<out>.confusion.csv` when --out is given).
    #[arg(long)]
    pub confusion: Option<PathBuf>,
}

/// Labels aligned to `event_ids`; every event must have one.
pub fn align_labels(event_ids: &[u64], labels: &[(u64, u32)]) -> crepe_core::Result<Vec<usize>> {
    let lookup: HashMap<u64, u32> = labels.iter().copied().collect();
    event_ids
        .iter()
        .map(|id| {
            lookup
                .get(id)
                .map(|&l| l as usize)
                .ok_or_else(|| Error::Shape(format!("event {id} has no label")))
        })
        .collect()
}

pub fn evaluate_files(pred: &Path, labels: &Path) -> CliResult<ClusterReport> {
    let table = read_embedding(pred)?;
    let truth = align_labels(&table.event_ids, &read_labels(labels)?)?;
    Ok(clustering_accuracy(&table.cluster, &truth)?)
}

pub fn run(args: &EvaluateArgs, argv: &[String]) -> CliResult<()> {
    let report = evaluate_files(&args.pred, &args.labels)?;
    let text = serde_json::to_string_pretty(&report).map_err(Error::from)? + "\n";
    let confusion = args
        .confusion
        .clone()
        .or_else(|| args.out.as_ref().map(|o| manifest::sibling(o, "confusion.csv")));
    if let Some(c) = &confusion {
        manifest::ensure_parent(c)?;
        report.confusion.write_csv(c)?;
    }
    match &args.out {
        Some(out) => {
            manifest::ensure_parent(out)?;
            std::fs::write(out, &text)?;
            let mut m = Manifest::new(
                "evaluate",
                argv,
                None,
                json!({"pred": args.pred, "labels": args.labels}),
            )
            .output(out);
            if let Some(c) = &confusion {
                m = m.output(c);
            }
            m.write(&manifest::beside(out))?;
            println!(
                "accuracy {:.4} (chance {:.4}, majority {:.4}, N={}, K={})",
                report.accuracy, report.chance.uniform, report.chance.majority, report.n, report.k
            );
        }
        None => print!("{text}"),
    }
    Ok(())
}
