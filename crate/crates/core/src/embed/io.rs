use std::io::Write;
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::audit;
use crate::error::{Error, Result};

/// Per-event latent codes and cluster ids, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub event_ids: Vec<u64>,
    pub z: Array2<f64>,
    pub cluster: Vec<usize>,
}

/// Writes `event_id,z_0,…,z_{d-1},cluster`. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_embedding(path: &Path, event_ids: &[u64], z: ArrayView2<f64>, cluster: &[usize]) -> Result<()> {
    if event_ids.len() != z.nrows() || cluster.len() != z.nrows() {
        return Err(Error::shape("event ids, codes and clusters differ in length"));
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(out, "event_id")?;
    for j in 0..z.ncols() {
        write!(out, ",z_{j}")?;
    }
    writeln!(out, ",cluster")?;
    for ((id, row), c) in event_ids.iter().zip(z.outer_iter()).zip(cluster) {
        write!(out, "{id}")?;
        for v in row {
            write!(out, ",{v}")?;
        }
        writeln!(out, ",{c}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_embedding(path: &Path) -> Result<EmbeddingTable> {
    let bad = |msg: String| Error::Format(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_reader(audit::open(path)?);
    let headers = reader.headers()?.clone();
    let cols = headers.len();
    if cols < 3 || &headers[0] != "event_id" || &headers[cols - 1] != "cluster" {
        return Err(bad("expected event_id,z_0..,cluster header".into()));
    }
    let d = cols - 2;
    let (mut ids, mut values, mut cluster) = (Vec::new(), Vec::new(), Vec::new());
    for rec in reader.records() {
        let rec = rec?;
        ids.push(rec[0].parse().map_err(|_| bad(format!("bad event id {:?}", &rec[0])))?);
        for j in 0..d {
            values.push(rec[j + 1].parse::<f64>().map_err(|_| bad(format!("bad value {:?}", &rec[j + 1])))?);
        }
        cluster.push(rec[cols - 1].parse().map_err(|_| bad(format!("bad cluster {:?}", &rec[cols - 1])))?);
    }
    let z = Array2::from_shape_vec((ids.len(), d), values).expect("rows × d");
    Ok(EmbeddingTable {
        event_ids: ids,
        z,
        cluster,
    })
}
