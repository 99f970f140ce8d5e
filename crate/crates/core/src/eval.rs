//! Scoring label-free cluster assignments against held-out labels.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts n[k][c] of events in cluster k with true label c. Rows and columns
/// follow the sorted distinct ids returned alongside.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub clusters: Vec<usize>,
    pub labels: Vec<usize>,
    pub counts: Vec<Vec<u64>>,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(out, "cluster")?;
        for c in &self.labels {
            write!(out, ",label_{c}")?;
        }
        writeln!(out)?;
        for (k, row) in self.clusters.iter().zip(&self.counts) {
            write!(out, "{k}")?;
            for n in row {
                write!(out, ",{n}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn check_lengths(pred: &[usize], labels: &[usize]) -> Result<()> {
    if pred.len() != labels.len() {
        return Err(Error::shape(format!(
            "{} predictions for {} labels",
            pred.len(),
            labels.len()
        )));
    }
    Ok(())
}

pub fn confusion(pred: &[usize], labels: &[usize]) -> Result<Confusion> {
    check_lengths(pred, labels)?;
    let clusters: Vec<usize> = pred.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let classes: Vec<usize> = labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut counts = vec![vec![0u64; classes.len()]; clusters.len()];
    for (p, l) in pred.iter().zip(labels) {
        let k = clusters.binary_search(p).expect("present");
        let c = classes.binary_search(l).expect("present");
        counts[k][c] += 1;
    }
    Ok(Confusion {
        clusters,
        labels: classes,
        counts,
    })
}

/// Maximum-weight one-to-one matching of rows to columns (Hungarian method
/// with potentials). The matrix is padded to square with zeros; returns
/// `col_of[row]`, `None` for rows matched to padding.
pub fn max_weight_matching(weights: &[Vec<u64>]) -> Vec<Option<usize>> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    let n = rows.max(cols);
    if n == 0 {
        return Vec::new();
    }
    let top = weights.iter().flatten().copied().max().unwrap_or(0) as i64;
    // Minimize top − w on the padded square matrix.
    let cost = |i: usize, j: usize| -> i64 {
        let w = if i < rows && j < cols { weights[i][j] as i64 } else { 0 };
        top - w
    };
    // 1-based arrays as in the classic formulation; p[j] = row matched to column j.
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![None; rows];
    for j in 1..=n {
        let i = p[j];
        if i >= 1 && i <= rows && j <= cols {
            col_of[i - 1] = Some(j - 1);
        }
    }
    col_of
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chance {
    /// 1 / number of distinct labels.
    pub uniform: f64,
    /// Frequency of the most common label.
    pub majority: f64,
}

pub fn chance_baseline(labels: &[usize]) -> Result<Chance> {
    if labels.is_empty() {
        return Err(Error::InsufficientData("no labels".into()));
    }
    let c = confusion(labels, labels)?;
    let top = c.counts.iter().map(|row| row.iter().sum::<u64>()).max().unwrap_or(0);
    Ok(Chance {
        uniform: 1.0 / c.labels.len() as f64,
        majority: top as f64 / labels.len() as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub accuracy: f64,
    pub chance: Chance,
    /// (cluster id, matched label id) pairs; unmatched clusters are omitted.
    pub matching: Vec<(usize, usize)>,
    pub confusion: Confusion,
    pub n: usize,
    pub k: usize,
}

/// Accuracy under the best one-to-one matching of clusters to labels.
pub fn clustering_accuracy(pred: &[usize], labels: &[usize]) -> Result<ClusterReport> {
    let conf = confusion(pred, labels)?;
    let chance = chance_baseline(labels)?;
    let col_of = max_weight_matching(&conf.counts);
    let mut matched = 0u64;
    let mut matching = Vec::new();
    for (k, c) in col_of.iter().enumerate() {
        if let Some(c) = *c {
            matched += conf.counts[k][c];
            matching.push((conf.clusters[k], conf.labels[c]));
        }
    }
    Ok(ClusterReport {
        accuracy: matched as f64 / pred.len() as f64,
        chance,
        matching,
        k: conf.clusters.len(),
        n: pred.len(),
        confusion: conf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(w: &[Vec<u64>]) -> u64 {
        fn rec(w: &[Vec<u64>], row: usize, used: &mut Vec<bool>) -> u64 {
            if row == w.len() {
                return 0;
            }
            let mut best = rec(w, row + 1, used);
            for c in 0..used.len() {
                if !used[c] {
                    used[c] = true;
                    best = best.max(w[row][c] + rec(w, row + 1, used));
                    used[c] = false;
                }
            }
            best
        }
        rec(w, 0, &mut vec![false; w[0].len()])
    }

    #[test]
    fn six_point_example() {
        let r = clustering_accuracy(&[0, 0, 1, 1, 2, 2], &[1, 1, 0, 2, 2, 0]).unwrap();
        assert!((r.accuracy - 4.0 / 6.0).abs() < 1e-15);
        assert_eq!(r.confusion.total(), 6);
    }

    #[test]
    fn hungarian_matches_exhaustive_search() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) % 20
        };
        for trial in 0..300 {
            let rows = 1 + trial % 6;
            let cols = 1 + (trial / 6) % 6;
            let w: Vec<Vec<u64>> = (0..rows).map(|_| (0..cols).map(|_| next()).collect()).collect();
            let m = max_weight_matching(&w);
            let total: u64 = m
                .iter()
                .enumerate()
                .filter_map(|(i, c)| c.map(|c| w[i][c]))
                .sum();
            let mut seen = std::collections::HashSet::new();
            assert!(m.iter().flatten().all(|c| seen.insert(*c)));
            assert_eq!(total, brute_force(&w), "{w:?}");
        }
    }

    #[test]
    fn chance_values() {
        let four: Vec<usize> = (0..40).map(|i| i % 4).collect();
        assert_eq!(chance_baseline(&four).unwrap().uniform, 0.25);
        let nine: Vec<usize> = (0..90).map(|i| i % 9).collect();
        assert!((chance_baseline(&nine).unwrap().uniform - 1.0 / 9.0).abs() < 1e-15);
        let same = chance_baseline(&[3, 3, 3]).unwrap();
        assert_eq!((same.uniform, same.majority), (1.0, 1.0));
        let skew = chance_baseline(&[0, 0, 0, 1]).unwrap();
        assert_eq!(skew.majority, 0.75);
        assert!(chance_baseline(&[]).is_err());
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(clustering_accuracy(&[0, 1], &[0]), Err(Error::Shape(_))));
    }

    #[test]
    fn single_event() {
        let c = confusion(&[2], &[5]).unwrap();
        assert_eq!(c.counts, vec![vec![1]]);
    }
}
