//! Model checkpoints: `CRPM`, a little-endian u32 header length, a JSON
//! header, then every weight as a little-endian f64.
//!
//! Weight order: model parameters (layer by layer, W row-major then b),
//! standardizer mean, standardizer scale, centroids row-major.

use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::kmeans::Centroids;
use super::mlp::{DcnModel, Dense, ModelSpec};
use super::train::{Standardizer, TrainConfig};
use crate::audit;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CRPM";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: DcnModel,
    pub standardizer: Standardizer,
    pub centroids: Centroids,
    pub config: TrainConfig,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    spec: ModelSpec,
    lambda: f64,
    seed: u64,
    clusters: usize,
    param_count: usize,
    config: TrainConfig,
}

pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let header = Header {
        version: VERSION,
        spec: ckpt.model.spec().clone(),
        lambda: ckpt.config.lambda,
        seed: ckpt.config.seed,
        clusters: ckpt.centroids.k(),
        param_count: ckpt.model.param_count(),
        config: ckpt.config.clone(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&(json.len() as u32).to_le_bytes())?;
    out.write_all(&json)?;
    let values = ckpt
        .model
        .params()
        .into_iter()
        .chain(ckpt.standardizer.mean.iter().copied())
        .chain(ckpt.standardizer.scale.iter().copied())
        .chain(ckpt.centroids.m.iter().copied());
    for v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let corrupt = |reason: &str| Error::Corrupt {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let mut bytes = Vec::new();
    audit::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(corrupt("not a model checkpoint"));
    }
    let hlen = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let body = bytes.get(8..8 + hlen).ok_or_else(|| corrupt("truncated header"))?;
    let header: Header = serde_json::from_slice(body).map_err(|e| corrupt(&e.to_string()))?;
    if header.version != VERSION {
        return Err(corrupt(&format!("unsupported version {}", header.version)));
    }
    header.spec.validate()?;
    let raw = &bytes[8 + hlen..];
    if raw.len() % 8 != 0 {
        return Err(corrupt("weight block is not a whole number of f64"));
    }
    let values: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let widths = header.spec.widths();
    let d = header.spec.input;
    let expected = header.param_count + 2 * d + header.clusters * header.spec.latent;
    if values.len() != expected {
        return Err(corrupt(&format!("expected {expected} weights, found {}", values.len())));
    }
    let mut at = 0;
    let mut take = |n: usize| {
        let s = &values[at..at + n];
        at += n;
        s.to_vec()
    };
    let mut layers = Vec::with_capacity(widths.len() - 1);
    for l in 0..widths.len() - 1 {
        let (fan_in, fan_out) = (widths[l], widths[l + 1]);
        let activation = if l + 1 == header.spec.encoder_layers() || l + 2 == widths.len() {
            super::mlp::Activation::Identity
        } else {
            header.spec.activation
        };
        layers.push(Dense {
            w: Array2::from_shape_vec((fan_out, fan_in), take(fan_in * fan_out)).expect("sized"),
            b: Array1::from(take(fan_out)),
            activation,
        });
    }
    let model = DcnModel::from_layers(header.spec.clone(), layers)?;
    if model.param_count() != header.param_count {
        return Err(corrupt("parameter count disagrees with architecture"));
    }
    let standardizer = Standardizer {
        mean: Array1::from(take(d)),
        scale: Array1::from(take(d)),
    };
    let centroids = Centroids {
        m: Array2::from_shape_vec((header.clusters, header.spec.latent), take(header.clusters * header.spec.latent))
            .expect("sized"),
    };
    Ok(Checkpoint {
        model,
        standardizer,
        centroids,
        config: header.config,
    })
}
