use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use crepe_core::embed::read_embedding;
use crepe_core::eval::clustering_accuracy;
use crepe_core::sim::read_labels;
use crepe_core::Error;
use serde_json::json;

use crate::evaluate::align_labels;
use crate::manifest::{self, Manifest};
use crate::svg::{self, Bar, ScatterPoint};
use crate::sweep::{read_table, CellStatus};
use crate::{parse_list, usage, CliResult};

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Embedding CSV to scatter.
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    /// Labels for outline colors and a matched legend.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Embedding dimensions on the x and y axes.
    #[arg(long, default_value = "0,1")]
    pub dims: String,
    /// Sweep accuracy table for the bar chart.
    #[arg(long)]
    pub accuracy: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &ReportArgs, argv: &[String]) -> CliResult<()> {
    if args.embedding.is_none() && args.accuracy.is_none() {
        return usage("nothing to plot: give --embedding and/or --accuracy");
    }
    std::fs::create_dir_all(&args.out)?;
    let mut m = Manifest::new(
        "report",
        argv,
        None,
        json!({"embedding": args.embedding, "labels": args.labels, "dims": args.dims, "accuracy": args.accuracy}),
    );
    if let Some(path) = &args.embedding {
        let dims: Vec<usize> = parse_list(&args.dims, "dimension")?;
        let [dx, dy] = dims[..] else {
            return usage("--dims takes exactly two indices");
        };
        let table = read_embedding(path)?;
        let d = table.z.ncols();
        if dx >= d || dy >= d {
            return Err(Error::Format(format!(
                "{}: no column z_{} (embedding has z_0..z_{})",
                path.display(),
                dx.max(dy),
                d - 1
            ))
            .into());
        }
        let labels = match &args.labels {
            Some(l) => Some(align_labels(&table.event_ids, &read_labels(l)?)?),
            None => None,
        };
        let points: Vec<ScatterPoint> = (0..table.event_ids.len())
            .map(|i| ScatterPoint {
                x: table.z[[i, dx]],
                y: table.z[[i, dy]],
                fill: table.cluster[i],
                stroke: labels.as_ref().map(|l| l[i]),
            })
            .collect();
        let mut clusters = table.cluster.clone();
        clusters.sort_unstable();
        clusters.dedup();
        let legend: Vec<(usize, String)> = match &labels {
            Some(l) => {
                let r = clustering_accuracy(&table.cluster, l)?;
                let matched: BTreeMap<usize, usize> = r.matching.iter().copied().collect();
                clusters
                    .iter()
                    .map(|&c| {
                        let row = r.confusion.clusters.iter().position(|&k| k == c).expect("cluster present");
                        let size: u64 = r.confusion.counts[row].iter().sum();
                        let text = match matched.get(&c) {
                            Some(&lab) => {
                                let col = r.confusion.labels.iter().position(|&x| x == lab).expect("label present");
                                format!("cluster {c} -> label {lab} ({}/{size})", r.confusion.counts[row][col])
                            }
                            None => format!("cluster {c} unmatched ({size})"),
                        };
                        (c, text)
                    })
                    .collect()
            }
            None => clusters.iter().map(|&c| (c, format!("cluster {c}"))).collect(),
        };
        let title = match &labels {
            Some(l) => format!(
                "Embedding (fill: cluster, outline: label; accuracy {:.3})",
                clustering_accuracy(&table.cluster, l)?.accuracy
            ),
            None => "Embedding (fill: cluster)".to_string(),
        };
        let svg_path = args.out.join("scatter.svg");
        std::fs::write(&svg_path, svg::scatter(&title, &format!("z_{dx}"), &format!("z_{dy}"), &points, &legend))?;
        let csv_path = args.out.join("scatter.csv");
        let mut out = std::io::BufWriter::new(std::fs::File::create(&csv_path)?);
        write!(out, "event_id,z_{dx},z_{dy},cluster")?;
        writeln!(out, "{}", if labels.is_some() { ",label" } else { "" })?;
        for (i, p) in points.iter().enumerate() {
            write!(out, "{},{},{},{}", table.event_ids[i], p.x, p.y, p.fill)?;
            match p.stroke {
                Some(l) => writeln!(out, ",{l}")?,
                None => writeln!(out)?,
            }
        }
        out.flush()?;
        m = m.output(&svg_path).output(&csv_path);
    }
    if let Some(path) = &args.accuracy {
        let rows = read_table(path)?;
        let ok: Vec<_> = rows.iter().filter(|r| r.status == CellStatus::Ok).collect();
        if ok.is_empty() {
            return Err(Error::InsufficientData(format!("{}: no successful cells", path.display())).into());
        }
        // Mean accuracy per (integration time, method[/tissue]) over seeds.
        let multi_tissue = ok.iter().any(|r| r.tissue != ok[0].tissue);
        let mut cells: BTreeMap<(String, String), (f64, f64, usize)> = BTreeMap::new();
        for r in &ok {
            let series = if multi_tissue {
                format!("{} {}", r.method, r.tissue)
            } else {
                r.method.clone()
            };
            let e = cells.entry((format!("{}", r.t_int_s), series)).or_insert((0.0, 0.0, 0));
            e.0 += r.accuracy;
            e.1 += r.chance;
            e.2 += 1;
        }
        let mut groups: Vec<String> = cells.keys().map(|(g, _)| g.clone()).collect();
        groups.dedup();
        groups.sort_by(|a, b| a.parse::<f64>().unwrap_or(0.0).total_cmp(&b.parse::<f64>().unwrap_or(0.0)));
        let mut series: Vec<String> = cells.keys().map(|(_, s)| s.clone()).collect();
        series.sort();
        series.dedup();
        let chance = ok.iter().map(|r| r.chance).sum::<f64>() / ok.len() as f64;
        let csv_path = args.out.join("accuracy.csv");
        let mut out = std::io::BufWriter::new(std::fs::File::create(&csv_path)?);
        writeln!(out, "t_int_s,series,mean_accuracy,chance,cells")?;
        let mut data = Vec::new();
        for ((g, s), (acc, ch, n)) in &cells {
            let mean = acc / *n as f64;
            writeln!(out, "{g},{s},{mean},{},{n}", ch / *n as f64)?;
            data.push(Bar {
                group: g.clone(),
                series: series.iter().position(|x| x == s).expect("series present"),
                series_name: s.clone(),
                value: mean,
            });
        }
        out.flush()?;
        let groups: Vec<String> = groups.iter().map(|g| format!("{g} s")).collect();
        let data: Vec<Bar> = data
            .into_iter()
            .map(|b| Bar {
                group: format!("{} s", b.group),
                ..b
            })
            .collect();
        let svg_path = args.out.join("accuracy.svg");
        std::fs::write(
            &svg_path,
            svg::bars("Clustering accuracy (dashed: chance)", "integration time", "accuracy", &groups, &data, Some(chance)),
        )?;
        m = m.output(&svg_path).output(&csv_path);
    }
    m.write(&manifest::in_dir(&args.out))?;
    println!("report written to {}", args.out.display());
    Ok(())
}
