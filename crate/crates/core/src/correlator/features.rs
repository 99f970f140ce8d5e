//! Feature CSV: one row per event,
//! `event_id,t_int_s,mask,f{p}_lag{j}...` with fiber-major columns and
//! baseline-subtracted values g₂ − 1. The lag times live in a companion
//! `<stem>.schedule.csv`.

use std::io::Write;
use std::path::{Path, PathBuf};

use super::EventVector;
use crate::audit;
use crate::error::{Error, Result};

/// Marker written at the top of the schedule companion.
const VALUES_TAG: &str = "# values=g2-1";

/// Feature rows as read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub event_ids: Vec<u64>,
    pub t_int: Vec<f64>,
    pub masks: Vec<Vec<bool>>,
    /// g₂ − 1, fiber-major.
    pub rows: Vec<Vec<f64>>,
    pub fibers: usize,
    /// Lag times in seconds.
    pub lags: Vec<f64>,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.fibers * self.lags.len()
    }

    /// Rows as an N × D matrix.
    pub fn matrix(&self) -> ndarray::Array2<f64> {
        let d = self.dim();
        ndarray::Array2::from_shape_fn((self.len(), d), |(i, j)| self.rows[i][j])
    }

    pub fn from_vectors(vectors: &[EventVector]) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return Err(Error::shape("no event vectors"));
        };
        for v in vectors {
            if v.x.len() != first.x.len() || v.mask.len() != first.mask.len() || v.lags != first.lags {
                return Err(Error::shape(format!(
                    "event {} has a different shape from event {}",
                    v.event_id, first.event_id
                )));
            }
        }
        Ok(FeatureSet {
            event_ids: vectors.iter().map(|v| v.event_id).collect(),
            t_int: vectors.iter().map(|v| v.t_int).collect(),
            masks: vectors.iter().map(|v| v.mask.clone()).collect(),
            rows: vectors
                .iter()
                .map(|v| v.x.iter().map(|g| g - 1.0).collect())
                .collect(),
            fibers: first.mask.len(),
            lags: first.lags.clone(),
        })
    }
}

pub fn schedule_path(features: &Path) -> PathBuf {
    let stem = features
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "features".into());
    features.with_file_name(format!("{stem}.schedule.csv"))
}

fn mask_string(mask: &[bool]) -> String {
    mask.iter().map(|&m| if m { '1' } else { '0' }).collect()
}

pub fn write_features(path: &Path, set: &FeatureSet) -> Result<()> {
    let l = set.lags.len();
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut header = String::from("event_id,t_int_s,mask");
    for p in 0..set.fibers {
        for j in 0..l {
            header.push_str(&format!(",f{p}_lag{j}"));
        }
    }
    writeln!(out, "{header}")?;
    for i in 0..set.len() {
        write!(
            out,
            "{},{},{}",
            set.event_ids[i],
            set.t_int[i],
            mask_string(&set.masks[i])
        )?;
        for v in &set.rows[i] {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;

    let mut sched = std::io::BufWriter::new(std::fs::File::create(schedule_path(path))?);
    writeln!(sched, "{VALUES_TAG}")?;
    writeln!(sched, "lag_index,lag_s")?;
    for (j, t) in set.lags.iter().enumerate() {
        writeln!(sched, "{j},{t}")?;
    }
    sched.flush()?;
    Ok(())
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("bad {what} value {s:?}")))
}

pub fn read_features(path: &Path) -> Result<FeatureSet> {
    let sched_text = audit::read_to_string(&schedule_path(path))?;
    let mut lags = Vec::new();
    let mut tagged = false;
    for line in sched_text.lines() {
        let line = line.trim();
        if line == VALUES_TAG {
            tagged = true;
            continue;
        }
        if line.is_empty() || line.starts_with('#') || line.starts_with("lag_index") {
            continue;
        }
        let (_, t) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("bad schedule line {line:?}")))?;
        lags.push(parse_f64(t, "lag")?);
    }
    if !tagged {
        return Err(Error::Format("schedule file lacks the values=g2-1 tag".into()));
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(audit::open(path)?);
    let headers = reader.headers()?.clone();
    if headers.len() < 3 || &headers[0] != "event_id" || &headers[1] != "t_int_s" || &headers[2] != "mask" {
        return Err(Error::Format("feature header must start with event_id,t_int_s,mask".into()));
    }
    let value_cols = headers.len() - 3;
    if lags.is_empty() || value_cols % lags.len() != 0 {
        return Err(Error::Format(format!(
            "{value_cols} value columns do not divide into {} lags",
            lags.len()
        )));
    }
    let fibers = value_cols / lags.len();
    let mut set = FeatureSet {
        event_ids: Vec::new(),
        t_int: Vec::new(),
        masks: Vec::new(),
        rows: Vec::new(),
        fibers,
        lags,
    };
    for rec in reader.records() {
        let rec = rec?;
        set.event_ids.push(
            rec[0]
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("bad event id {:?}", &rec[0])))?,
        );
        set.t_int.push(parse_f64(&rec[1], "t_int_s")?);
        let mask: Vec<bool> = rec[2].chars().map(|c| c == '1').collect();
        if mask.len() != fibers {
            return Err(Error::Format(format!(
                "mask {:?} does not cover {fibers} fibers",
                &rec[2]
            )));
        }
        set.masks.push(mask);
        let row = (3..rec.len())
            .map(|k| parse_f64(&rec[k], "feature"))
            .collect::<Result<Vec<f64>>>()?;
        set.rows.push(row);
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let vectors: Vec<EventVector> = (0..3)
            .map(|i| EventVector {
                event_id: i,
                t_int: 0.4,
                x: (0..6).map(|k| 1.0 + 0.1 / (1.0 + k as f64 + i as f64 * 0.37)).collect(),
                mask: vec![true, i != 1],
                lags: vec![1.5e-6, 3e-6, 4.5e-6],
            })
            .collect();
        let set = FeatureSet::from_vectors(&vectors).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("feats.csv");
        write_features(&path, &set).unwrap();
        assert!(dir.path().join("feats.schedule.csv").exists());
        let back = read_features(&path).unwrap();
        assert_eq!(back, set);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("event_id,t_int_s,mask,f0_lag0,f0_lag1,f0_lag2,f1_lag0"));
        assert!(text.lines().nth(2).unwrap().starts_with("1,0.4,10,"));
    }
}
