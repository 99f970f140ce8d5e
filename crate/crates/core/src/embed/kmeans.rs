//! k-means++ seeding, assignment and centroid updates in embedding space.

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;

use super::mlp::sq_dist;
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng, STREAM_KMEANS};

/// Cluster centers, one row per cluster (row k is the k-th column of M).
#[derive(Debug, Clone, PartialEq)]
pub struct Centroids {
    pub m: Array2<f64>,
}

impl Centroids {
    pub fn k(&self) -> usize {
        self.m.nrows()
    }

    pub fn dim(&self) -> usize {
        self.m.ncols()
    }

    /// Rows M s_i for the given assignment.
    pub fn targets(&self, assignment: &[usize]) -> Array2<f64> {
        self.m.select(Axis(0), assignment)
    }
}

fn check_dims(z: ArrayView2<f64>, m: &Centroids) -> Result<()> {
    if z.ncols() != m.dim() {
        return Err(Error::shape(format!(
            "points have {} dims, centroids {}",
            z.ncols(),
            m.dim()
        )));
    }
    Ok(())
}

fn seed_with(z: ArrayView2<f64>, k: usize, rng: &mut StreamRng) -> Centroids {
    let n = z.nrows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(z.row(i), z.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in nearest.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave `target` just above the final sum.
            pick.unwrap_or_else(|| nearest.iter().rposition(|&d| d > 0.0).expect("total > 0"))
        } else {
            rng.random_range(0..n)
        };
        chosen.push(pick);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(z.row(i), z.row(pick)));
        }
    }
    Centroids {
        m: z.select(Axis(0), &chosen),
    }
}

/// k-means++ seeding: first center uniform, then each next center drawn with
/// probability proportional to the squared distance to the nearest chosen
/// center.
pub fn kmeans_init(z: ArrayView2<f64>, k: usize, seed: u64) -> Result<Centroids> {
    if k == 0 || z.nrows() < k {
        return Err(Error::config(format!(
            "k-means needs 1 <= K <= N (K={k}, N={})",
            z.nrows()
        )));
    }
    Ok(seed_with(z, k, &mut rng::stream(seed, &[STREAM_KMEANS])))
}

/// Nearest centroid per point; ties go to the smaller index.
pub fn assign_clusters(z: ArrayView2<f64>, m: &Centroids) -> Result<Vec<usize>> {
    check_dims(z, m)?;
    Ok(z.outer_iter()
        .map(|row| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (k, c) in m.m.outer_iter().enumerate() {
                let d = sq_dist(row, c);
                if d < best_d {
                    best = k;
                    best_d = d;
                }
            }
            best
        })
        .collect())
}

/// Σ‖z_i − M s_i‖².
pub fn clustering_loss(z: ArrayView2<f64>, m: &Centroids, assignment: &[usize]) -> f64 {
    z.outer_iter()
        .zip(assignment)
        .map(|(row, &k)| sq_dist(row, m.m.row(k)))
        .sum()
}

/// Cluster means. An empty cluster is moved onto the point farthest from its
/// own centroid; the assignment itself is left unchanged, so the clustering
/// loss cannot go up.
pub fn update_centroids(z: ArrayView2<f64>, assignment: &[usize], k: usize) -> Result<Centroids> {
    if assignment.len() != z.nrows() {
        return Err(Error::shape("assignment length differs from point count"));
    }
    if let Some(&bad) = assignment.iter().find(|&&a| a >= k) {
        return Err(Error::shape(format!("cluster id {bad} out of range for K={k}")));
    }
    let d = z.ncols();
    let mut m = Array2::<f64>::zeros((k, d));
    let mut counts = vec![0usize; k];
    for (row, &a) in z.outer_iter().zip(assignment) {
        m.row_mut(a).zip_mut_with(&row, |s, &v| *s += v);
        counts[a] += 1;
    }
    for (mut row, &c) in m.outer_iter_mut().zip(&counts) {
        if c > 0 {
            row.mapv_inplace(|v| v / c as f64);
        }
    }
    let empty: Vec<usize> = (0..k).filter(|&c| counts[c] == 0).collect();
    if !empty.is_empty() {
        let mut far: Vec<(f64, usize)> = z
            .outer_iter()
            .zip(assignment)
            .enumerate()
            .map(|(i, (row, &a))| (sq_dist(row, m.row(a)), i))
            .collect();
        far.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for (slot, &c) in empty.iter().enumerate() {
            let (_, i) = far[slot % far.len()];
            m.row_mut(c).assign(&z.row(i));
        }
    }
    Ok(Centroids { m })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Centroids,
    pub assignment: Vec<usize>,
    pub inertia: f64,
}

/// Lloyd iterations from k-means++ seeds, best of `restarts` by inertia.
pub fn kmeans(z: ArrayView2<f64>, k: usize, seed: u64, restarts: usize, max_iter: usize) -> Result<KMeansResult> {
    if k == 0 || z.nrows() < k {
        return Err(Error::config(format!(
            "k-means needs 1 <= K <= N (K={k}, N={})",
            z.nrows()
        )));
    }
    let mut best: Option<KMeansResult> = None;
    for r in 0..restarts.max(1) {
        let mut rng = rng::stream(seed, &[STREAM_KMEANS, r as u64]);
        let mut m = seed_with(z, k, &mut rng);
        let mut s = assign_clusters(z, &m)?;
        for _ in 0..max_iter {
            m = update_centroids(z, &s, k)?;
            let next = assign_clusters(z, &m)?;
            if next == s {
                break;
            }
            s = next;
        }
        let inertia = clustering_loss(z, &m, &s);
        if best.as_ref().is_none_or(|b| inertia < b.inertia) {
            best = Some(KMeansResult {
                centroids: m,
                assignment: s,
                inertia,
            });
        }
    }
    Ok(best.expect("at least one restart"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn tie_goes_to_lower_index() {
        let m = Centroids {
            m: array![[-1.0, 0.0], [1.0, 0.0], [5.0, 5.0]],
        };
        let z = array![[0.0, 0.0], [5.0, 5.0]];
        assert_eq!(assign_clusters(z.view(), &m).unwrap(), vec![0, 2]);
    }

    #[test]
    fn k_equals_n_is_a_permutation() {
        let z = array![[0.0, 1.0], [2.0, 3.0], [4.0, -1.0], [7.0, 7.0]];
        let c = kmeans_init(z.view(), 4, 11).unwrap();
        let mut rows: Vec<Vec<f64>> = c.m.outer_iter().map(|r| r.to_vec()).collect();
        rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut want: Vec<Vec<f64>> = z.outer_iter().map(|r| r.to_vec()).collect();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(rows, want);
        let s = assign_clusters(z.view(), &c).unwrap();
        assert_eq!(clustering_loss(z.view(), &c, &s), 0.0);
    }

    #[test]
    fn k_one_and_bad_k() {
        let z = array![[0.0], [2.0], [4.0]];
        let c = kmeans_init(z.view(), 1, 0).unwrap();
        assert!(z.outer_iter().any(|r| r == c.m.row(0)));
        assert!(matches!(kmeans_init(z.view(), 4, 0), Err(Error::Config(_))));
    }

    #[test]
    fn update_means_and_empty_reseed() {
        let z = array![[0.0, 0.0], [2.0, 0.0], [10.0, 0.0]];
        let c = update_centroids(z.view(), &[0, 0, 0], 1).unwrap();
        assert_eq!(c.m.row(0).to_vec(), vec![4.0, 0.0]);
        let c = update_centroids(z.view(), &[0, 1, 2], 3).unwrap();
        assert_eq!(c.m, z);
        let c = update_centroids(z.view(), &[0, 0, 0], 2).unwrap();
        assert_eq!(c.m.row(1).to_vec(), vec![10.0, 0.0]);
    }
}
