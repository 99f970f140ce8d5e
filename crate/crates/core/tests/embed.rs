use crepe_core::embed::*;
use crepe_core::eval::clustering_accuracy;
use crepe_core::rng;
use crepe_core::Error;
use ndarray::{Array2, ArrayView2};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut r = rng::stream(seed, &[99]);
    Array2::from_shape_fn((rows, cols), |_| StandardNormal.sample(&mut r))
}

/// `per` points around each center with unit variance.
fn blobs(centers: &[Vec<f64>], per: usize, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let d = centers[0].len();
    let noise = gaussian(centers.len() * per, d, seed);
    let labels: Vec<usize> = (0..centers.len() * per).map(|i| i / per).collect();
    let x = Array2::from_shape_fn((labels.len(), d), |(i, j)| centers[labels[i]][j] + noise[[i, j]]);
    (x, labels)
}

fn small_cfg() -> TrainConfig {
    TrainConfig {
        hidden: vec![16, 8],
        latent: 3,
        k: 3,
        ..TrainConfig::default()
    }
}

#[test]
fn gradient_check_without_clustering_term() {
    let cfg = small_cfg();
    let model = DcnModel::new(cfg.model_spec(12), 4).unwrap();
    let x = gaussian(10, 12, 1);
    let m = Centroids { m: gaussian(3, 3, 2) };
    let s: Vec<usize> = (0..10).map(|i| i % 3).collect();
    let err = gradient_check(&model, x.view(), &s, &m, 0.0, 1e-5, 200, 7).unwrap();
    assert!(err <= 1e-6, "max relative error {err:e}");
}

#[test]
fn gradient_check_with_clustering_term() {
    let cfg = small_cfg();
    let model = DcnModel::new(cfg.model_spec(12), 5).unwrap();
    let x = gaussian(10, 12, 3);
    let m = Centroids { m: gaussian(3, 3, 4) };
    let s: Vec<usize> = (0..10).map(|i| (i * 7) % 3).collect();
    let err = gradient_check(&model, x.view(), &s, &m, 1.0, 1e-5, 200, 8).unwrap();
    assert!(err <= 1e-6, "max relative error {err:e}");
}

#[test]
fn gradient_check_rejects_zero_step() {
    let cfg = small_cfg();
    let model = DcnModel::new(cfg.model_spec(4), 0).unwrap();
    let x = gaussian(3, 4, 0);
    let m = Centroids { m: gaussian(3, 3, 0) };
    let r = gradient_check(&model, x.view(), &[0, 1, 2], &m, 1.0, 0.0, 10, 0);
    assert!(matches!(r, Err(Error::Config(_))));
}

#[test]
fn pretrain_fits_constant_dataset() {
    let row = gaussian(1, 64, 11);
    let x = Array2::from_shape_fn((500, 64), |(_, j)| row[[0, j]]);
    let cfg = TrainConfig {
        hidden: vec![32, 16],
        latent: 8,
        ..TrainConfig::default()
    };
    let (_, trace) = pretrain(x.view(), &cfg).unwrap();
    let first = trace[0].recon;
    let last = trace.last().unwrap().recon;
    assert!(last < 1e-4 * first, "first {first:e} last {last:e}");
}

#[test]
fn pretrain_recovers_linear_subspace() {
    let (n, d) = (600, 768);
    let basis = gaussian(3, d, 21).mapv(|v| v / (d as f64).sqrt() * 4.0);
    let coeffs = gaussian(n, 3, 22);
    let x = coeffs.dot(&basis);
    let mean = x.mean_axis(ndarray::Axis(0)).unwrap();
    let variance = (&x - &mean).mapv(|v| v * v).sum() / n as f64;
    let cfg = TrainConfig::default();
    let (model, _) = pretrain(x.view(), &cfg).unwrap();
    let recon = model.reconstruct(x.view()).unwrap();
    let loss = (&recon - &x).mapv(|v| v * v).sum() / n as f64;
    assert!(loss < 0.01 * variance, "loss {loss:e} variance {variance:e}");
}

#[test]
fn training_is_deterministic() {
    let (x, _) = blobs(&[vec![0.0; 10], vec![6.0; 10], vec![-6.0; 10]], 40, 5);
    let cfg = TrainConfig {
        pretrain_epochs: 5,
        joint_epochs: 5,
        ..small_cfg()
    };
    let a = train_dcn(x.view(), &cfg).unwrap();
    let b = train_dcn(x.view(), &cfg).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.assignment, b.assignment);
    assert_eq!(a.centroids, b.centroids);
    let (p1, _) = pretrain(x.view(), &cfg).unwrap();
    let (p2, _) = pretrain(x.view(), &cfg).unwrap();
    assert_eq!(p1.params(), p2.params());
}

#[test]
fn zero_lambda_matches_longer_pretraining() {
    let (x, _) = blobs(&[vec![0.0; 10], vec![5.0; 10], vec![-5.0; 10]], 30, 6);
    let cfg = TrainConfig {
        pretrain_epochs: 4,
        joint_epochs: 6,
        lambda: 0.0,
        ..small_cfg()
    };
    let joint = train_dcn(x.view(), &cfg).unwrap();
    let long = TrainConfig {
        pretrain_epochs: 10,
        ..cfg.clone()
    };
    let (model, _) = pretrain(x.view(), &long).unwrap();
    assert_eq!(joint.model.params(), model.params());
    let post = kmeans(joint.embedding.view(), 3, cfg.seed, cfg.kmeans_restarts, 300).unwrap();
    assert_eq!(joint.assignment, post.assignment);
}

#[test]
fn separated_blobs_are_clustered_perfectly() {
    // Centers 20σ apart along the diagonal, so per-feature standardization
    // keeps the gap visible in every coordinate.
    let step = 20.0 / 20f64.sqrt();
    let (x, labels) = blobs(&[vec![0.0; 20], vec![step; 20]], 100, 7);
    let cfg = TrainConfig {
        k: 2,
        pretrain_epochs: 20,
        joint_epochs: 10,
        ..TrainConfig::default()
    };
    let fit = fit_embedding(x.view(), &cfg).unwrap();
    let r = clustering_accuracy(&fit.result.assignment, &labels).unwrap();
    assert_eq!(r.accuracy, 1.0);
}

#[test]
fn joint_kmeans_steps_never_increase_loss() {
    let (x, _) = blobs(&[vec![0.0; 8], vec![3.0; 8], vec![-3.0; 8]], 30, 8);
    let cfg = TrainConfig {
        pretrain_epochs: 3,
        joint_epochs: 8,
        lambda: 1.0,
        ..small_cfg()
    };
    let r = train_dcn(x.view(), &cfg).unwrap();
    for e in r.trace.iter().filter(|e| e.phase == Phase::Joint) {
        assert!(e.kmeans_assigned <= e.kmeans_before, "{e:?}");
        assert!(e.kmeans_updated <= e.kmeans_assigned, "{e:?}");
    }
}

#[test]
fn standardization_removes_constant_shift() {
    // Dyadic values and a power-of-two row count make the mean exact.
    let n = 64;
    let x = Array2::from_shape_fn((n, 6), |(i, j)| ((i * 7 + j * 13) % 17) as f64 / 8.0 + (i % 4) as f64);
    let shift = [3.0, -17.0, 1024.0, 0.5, -2.0, 64.0];
    let shifted = Array2::from_shape_fn((n, 6), |(i, j)| x[[i, j]] + shift[j]);
    let cfg = TrainConfig {
        pretrain_epochs: 3,
        joint_epochs: 2,
        batch_size: 16,
        ..small_cfg()
    };
    let a = fit_embedding(x.view(), &cfg).unwrap();
    let b = fit_embedding(shifted.view(), &cfg).unwrap();
    assert_eq!(a.result.embedding, b.result.embedding);
    assert_eq!(a.result.assignment, b.result.assignment);
}

#[test]
fn kmeans_plus_plus_finds_each_blob() {
    let (z, labels) = blobs(&[vec![0.0, 0.0], vec![50.0, 0.0], vec![25.0, 43.3]], 50, 9);
    let mut good = 0;
    for seed in 0..100 {
        let c = kmeans_init(z.view(), 3, seed).unwrap();
        let s = assign_clusters(z.view(), &c).unwrap();
        if clustering_accuracy(&s, &labels).unwrap().accuracy == 1.0 {
            good += 1;
        }
    }
    assert!(good >= 99, "{good} of 100");
}

#[test]
fn exact_point_and_tie_assignment() {
    let m = Centroids {
        m: ndarray::array![[0.0, 0.0], [2.0, 0.0], [5.0, 5.0]],
    };
    let z = ndarray::array![[5.0, 5.0], [1.0, 0.0]];
    assert_eq!(assign_clusters(z.view(), &m).unwrap(), vec![2, 0]);
}

fn brute_assign(z: ArrayView2<f64>, m: &Centroids) -> Vec<usize> {
    z.outer_iter()
        .map(|row| {
            let d: Vec<f64> = m.m.outer_iter().map(|c| sq_dist(row, c)).collect();
            let best = d.iter().copied().fold(f64::INFINITY, f64::min);
            d.iter().position(|&v| v == best).unwrap()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn assignment_is_the_nearest_centroid(seed in 0u64..1000) {
        let z = gaussian(50, 4, seed);
        let m = Centroids { m: gaussian(3, 4, seed + 5000) };
        prop_assert_eq!(assign_clusters(z.view(), &m).unwrap(), brute_assign(z.view(), &m));
    }

    #[test]
    fn centroid_update_never_increases_loss(seed in 0u64..1000, k in 1usize..6) {
        let z = gaussian(30, 3, seed);
        let mut r = rng::stream(seed, &[7]);
        let s: Vec<usize> = (0..30).map(|_| r.random_range(0..k)).collect();
        let m = Centroids { m: gaussian(k, 3, seed + 1) };
        let before = clustering_loss(z.view(), &m, &s);
        let after = clustering_loss(z.view(), &update_centroids(z.view(), &s, k).unwrap(), &s);
        prop_assert!(after <= before);
        let s2 = assign_clusters(z.view(), &m).unwrap();
        prop_assert!(clustering_loss(z.view(), &m, &s2) <= before);
    }

    #[test]
    fn pca_spectrum_is_rotation_invariant(seed in 0u64..200) {
        let x = gaussian(40, 5, seed);
        let q = nalgebra::DMatrix::from_iterator(5, 5, gaussian(5, 5, seed + 1).into_iter()).qr().q();
        let rot = Array2::from_shape_fn((5, 5), |(i, j)| q[(i, j)]);
        let a = pca_embed(x.view(), 2).unwrap();
        let b = pca_embed(x.dot(&rot).view(), 2).unwrap();
        for (u, v) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            prop_assert!((u - v).abs() <= 1e-10 * (1.0 + u.abs()));
        }
    }

    #[test]
    fn pca_residual_equals_eigenvalue_tail(seed in 0u64..200, d in 1usize..5) {
        let x = gaussian(30, 6, seed);
        let p = pca_embed(x.view(), d).unwrap();
        let xc = &x - &p.mean;
        let err = (&xc - &p.embedding.dot(&p.components)).mapv(|v| v * v).sum();
        let tail: f64 = p.eigenvalues[d..].iter().sum::<f64>() * 30.0;
        prop_assert!((err - tail).abs() <= 1e-8 * (1.0 + tail));
    }
}

#[test]
fn tsne_entropies_match_perplexity() {
    let x = gaussian(120, 5, 30);
    let cfg = TsneConfig {
        perplexity: 20.0,
        iterations: 10,
        ..TsneConfig::default()
    };
    let t = tsne_embed(x.view(), &cfg, 1).unwrap();
    let target = 20f64.log2();
    assert!(t.entropies.iter().all(|h| (h - target).abs() <= 1e-4));
}

#[test]
fn tsne_keeps_duplicates_together() {
    let mut c = vec![vec![0.0; 10]; 3];
    c[1][0] = 15.0;
    c[2][1] = 15.0;
    let (mut x, _) = blobs(&c, 100, 31);
    let row = x.row(0).to_owned();
    x.row_mut(1).assign(&row);
    let t = tsne_embed(x.view(), &TsneConfig::default(), 2).unwrap();
    let e = &t.embedding;
    let mut diameter: f64 = 0.0;
    for i in 0..e.nrows() {
        for j in 0..i {
            diameter = diameter.max(sq_dist(e.row(i), e.row(j)).sqrt());
        }
    }
    assert!(sq_dist(e.row(0), e.row(1)).sqrt() < 0.01 * diameter);
}

#[test]
fn tsne_separates_blobs() {
    let mut c = vec![vec![0.0; 10]; 3];
    c[1][0] = 15.0;
    c[2][1] = 15.0;
    let (x, labels) = blobs(&c, 100, 32);
    let t = tsne_embed(x.view(), &TsneConfig::default(), 3).unwrap();
    let k = kmeans(t.embedding.view(), 3, 0, 10, 300).unwrap();
    let r = clustering_accuracy(&k.assignment, &labels).unwrap();
    assert!(r.accuracy >= 0.98, "accuracy {}", r.accuracy);
    let again = tsne_embed(x.view(), &TsneConfig::default(), 3).unwrap();
    assert_eq!(t.embedding, again.embedding);
}
