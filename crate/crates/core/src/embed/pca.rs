use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    /// N × d projections of the centered data.
    pub embedding: Array2<f64>,
    /// d × D principal directions (zero rows past the numerical rank).
    pub components: Array2<f64>,
    /// Covariance eigenvalues (1/N normalization), descending, full
    /// spectrum of length min(N, D).
    pub eigenvalues: Vec<f64>,
    pub mean: Array1<f64>,
}

/// Projection onto the top-`d` principal components of the centered data.
pub fn pca_embed(x: ArrayView2<f64>, d: usize) -> Result<Pca> {
    let (n, dim) = x.dim();
    if d == 0 || n <= d {
        return Err(Error::config(format!("PCA needs N > d >= 1 (N={n}, d={d})")));
    }
    let mean = x.sum_axis(Axis(0)) / n as f64;
    let xc = &x - &mean;
    let xm = DMatrix::from_row_iterator(n, dim, xc.iter().copied());

    // Eigen-decompose the smaller of XᵀX (D×D) and XXᵀ (N×N).
    let (values, vectors) = if dim <= n {
        let eig = SymmetricEigen::new(xm.transpose() * &xm);
        (eig.eigenvalues, eig.eigenvectors)
    } else {
        let eig = SymmetricEigen::new(&xm * xm.transpose());
        let mut v = xm.transpose() * &eig.eigenvectors;
        for (j, &lam) in eig.eigenvalues.iter().enumerate() {
            let norm = v.column(j).norm();
            if lam > 0.0 && norm > 0.0 {
                v.column_mut(j).unscale_mut(norm);
            } else {
                v.column_mut(j).fill(0.0);
            }
        }
        (eig.eigenvalues, v)
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let top = values[order[0]].max(0.0);
    let tol = top * 1e-12 * n.max(dim) as f64;

    let mut components = Array2::<f64>::zeros((d, dim));
    for (r, &j) in order.iter().take(d).enumerate() {
        if values[j] <= tol {
            continue;
        }
        let col = vectors.column(j);
        // Sign convention: largest-magnitude entry positive.
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for c in 0..dim {
            components[[r, c]] = sign * col[c];
        }
    }
    let eigenvalues: Vec<f64> = order
        .iter()
        .take(n.min(dim))
        .map(|&j| values[j].max(0.0) / n as f64)
        .collect();
    let embedding = xc.dot(&components.t());
    Ok(Pca {
        embedding,
        components,
        eigenvalues,
        mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn line_is_recovered_up_to_scale() {
        let t: Vec<f64> = (0..20).map(|i| (i as f64 * 0.7).sin() * 3.0 + i as f64).collect();
        let dir = [1.0, -2.0, 0.5, 3.0];
        let x = Array2::from_shape_fn((20, 4), |(i, j)| 5.0 + t[i] * dir[j]);
        let p = pca_embed(x.view(), 1).unwrap();
        let e: Vec<f64> = p.embedding.column(0).to_vec();
        let (mt, me) = (t.iter().sum::<f64>() / 20.0, e.iter().sum::<f64>() / 20.0);
        let cov: f64 = t.iter().zip(&e).map(|(a, b)| (a - mt) * (b - me)).sum();
        let vt: f64 = t.iter().map(|a| (a - mt).powi(2)).sum();
        let ve: f64 = e.iter().map(|b| (b - me).powi(2)).sum();
        assert!((cov.abs() / (vt * ve).sqrt() - 1.0).abs() < 1e-10);
        assert!(p.eigenvalues[1] < 1e-9 * p.eigenvalues[0]);
    }

    #[test]
    fn wide_data_uses_gram_route() {
        let x = Array2::from_shape_fn((6, 40), |(i, j)| ((i * 7 + j * 3) % 11) as f64 + (i * j) as f64 * 0.01);
        let p = pca_embed(x.view(), 3).unwrap();
        assert_eq!(p.eigenvalues.len(), 6);
        let xc = &x - &p.mean;
        let recon = p.embedding.dot(&p.components);
        let err = (&xc - &recon).mapv(|v| v * v).sum();
        let tail: f64 = p.eigenvalues[3..].iter().sum::<f64>() * 6.0;
        assert!((err - tail).abs() < 1e-8 * (1.0 + tail));
    }

    #[test]
    fn too_few_rows() {
        let x = Array2::<f64>::zeros((3, 5));
        assert!(pca_embed(x.view(), 3).is_err());
    }
}
