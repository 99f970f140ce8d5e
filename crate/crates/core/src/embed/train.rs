//! Autoencoder pretraining and the alternating joint objective
//! Σ_i ‖g(f(x_i)) − x_i‖² + (λ/2)‖f(x_i) − M s_i‖².

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kmeans::{assign_clusters, clustering_loss, kmeans, update_centroids, Centroids};
use super::mlp::{DcnModel, Grads, ModelSpec};
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng, STREAM_SHUFFLE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub pretrain_epochs: usize,
    pub joint_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Multiplies the learning rate after every epoch.
    pub lr_decay: f64,
    pub lambda: f64,
    pub seed: u64,
    pub k: usize,
    pub standardize: bool,
    pub hidden: Vec<usize>,
    pub latent: usize,
    /// k-means restarts used for the initial centroids.
    pub kmeans_restarts: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            pretrain_epochs: 60,
            joint_epochs: 40,
            batch_size: 32,
            learning_rate: 1e-3,
            lr_decay: 1.0,
            lambda: 0.5,
            seed: 1,
            k: 4,
            standardize: true,
            hidden: vec![256, 64],
            latent: 8,
            kmeans_restarts: 50,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pretrain_epochs == 0 || self.batch_size == 0 || self.latent == 0 {
            return Err(Error::config("epochs, batch size and latent width must be >= 1"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.learning_rate > 0.0) || !(self.lr_decay > 0.0) {
            return Err(Error::config("learning rate and decay must be positive"));
        }
        Ok(())
    }

    pub fn model_spec(&self, input: usize) -> ModelSpec {
        ModelSpec {
            input,
            hidden: self.hidden.clone(),
            latent: self.latent,
            activation: super::mlp::Activation::Tanh,
        }
    }
}

/// Per-feature z-scoring fitted on a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Array1<f64>,
    pub scale: Array1<f64>,
}

impl Standardizer {
    /// Mean and population standard deviation per column; constant columns
    /// get scale 1.
    pub fn fit(x: ArrayView2<f64>) -> Self {
        let n = x.nrows() as f64;
        let mean = x.sum_axis(Axis(0)) / n;
        let scale = x
            .axis_iter(Axis(1))
            .zip(mean.iter())
            .map(|(col, &m)| {
                let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn identity(dim: usize) -> Self {
        Standardizer {
            mean: Array1::zeros(dim),
            scale: Array1::ones(dim),
        }
    }

    pub fn apply(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::shape(format!(
                "{} features, standardizer fitted on {}",
                x.ncols(),
                self.mean.len()
            )));
        }
        Ok((&x - &self.mean) / &self.scale)
    }
}

/// Adam with the usual defaults (β₁ = 0.9, β₂ = 0.999, ε = 1e-8).
#[derive(Debug, Clone)]
pub struct Adam {
    m: Grads,
    v: Grads,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(model: &DcnModel) -> Self {
        Adam {
            m: Grads::zeros_like(model),
            v: Grads::zeros_like(model),
            t: 0,
        }
    }

    pub fn step(&mut self, model: &mut DcnModel, grads: &Grads, lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
            *m = Self::B1 * *m + (1.0 - Self::B1) * g;
            *v = Self::B2 * *v + (1.0 - Self::B2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        };
        for (((layer, g), m), v) in model
            .layers_mut()
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.m.layers)
            .zip(&mut self.v.layers)
        {
            ndarray::Zip::from(&mut layer.w)
                .and(&g.0)
                .and(&mut m.0)
                .and(&mut v.0)
                .for_each(|p, &g, m, v| update(p, g, m, v));
            ndarray::Zip::from(&mut layer.b)
                .and(&g.1)
                .and(&mut m.1)
                .and(&mut v.1)
                .for_each(|p, &g, m, v| update(p, g, m, v));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Pretrain,
    Joint,
}

/// One epoch of the loss trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub phase: Phase,
    pub epoch: usize,
    /// Batch-averaged reconstruction term.
    pub recon: f64,
    /// Batch-averaged ‖z − M s‖² (joint epochs only).
    pub cluster: f64,
    /// Σ‖f(x_i) − M s_i‖² after the gradient steps, before re-assignment.
    pub kmeans_before: f64,
    /// Same sum after re-assignment with the old centroids.
    pub kmeans_assigned: f64,
    /// Same sum after the centroid update.
    pub kmeans_updated: f64,
}

/// Mini-batch loop state shared by both phases, so the joint phase with
/// λ = 0 continues exactly where pretraining stopped.
struct Trainer<'a> {
    x: ArrayView2<'a, f64>,
    cfg: &'a TrainConfig,
    model: DcnModel,
    adam: Adam,
    shuffle: StreamRng,
    epoch: usize,
}

impl<'a> Trainer<'a> {
    fn new(x: ArrayView2<'a, f64>, cfg: &'a TrainConfig) -> Result<Self> {
        cfg.validate()?;
        if x.nrows() < cfg.batch_size {
            return Err(Error::config(format!(
                "{} samples is fewer than the batch size {}",
                x.nrows(),
                cfg.batch_size
            )));
        }
        let model = DcnModel::new(cfg.model_spec(x.ncols()), cfg.seed)?;
        let adam = Adam::new(&model);
        Ok(Trainer {
            x,
            cfg,
            model,
            adam,
            shuffle: rng::stream(cfg.seed, &[STREAM_SHUFFLE]),
            epoch: 0,
        })
    }

    /// One pass over the data; returns the batch-averaged (recon, cluster).
    fn epoch(&mut self, clusters: Option<(&Centroids, &[usize])>, lambda: f64) -> Result<(f64, f64)> {
        let n = self.x.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut self.shuffle);
        let lr = self.cfg.learning_rate * self.cfg.lr_decay.powi(self.epoch as i32);
        let (mut recon, mut cluster, mut batches) = (0.0, 0.0, 0usize);
        for (bi, idx) in order.chunks(self.cfg.batch_size).enumerate() {
            let xb = self.x.select(Axis(0), idx);
            let targets = match clusters {
                Some((m, s)) if lambda != 0.0 => {
                    let assigned: Vec<usize> = idx.iter().map(|&i| s[i]).collect();
                    Some(m.targets(&assigned))
                }
                _ => None,
            };
            let (loss, grads) = self
                .model
                .loss_and_grad(xb.view(), targets.as_ref().map(|t| t.view()), lambda)?;
            if !loss.total.is_finite() {
                return Err(Error::Training(format!(
                    "loss became {} at epoch {} batch {bi} (recon {}, cluster {}, lr {lr})",
                    loss.total, self.epoch, loss.recon, loss.cluster
                )));
            }
            self.adam.step(&mut self.model, &grads, lr);
            recon += loss.recon;
            cluster += loss.cluster;
            batches += 1;
        }
        self.epoch += 1;
        Ok((recon / batches as f64, cluster / batches as f64))
    }
}

/// Reconstruction-only training; returns the model and per-epoch losses.
pub fn pretrain(x: ArrayView2<f64>, cfg: &TrainConfig) -> Result<(DcnModel, Vec<EpochLog>)> {
    let mut t = Trainer::new(x, cfg)?;
    let mut trace = Vec::with_capacity(cfg.pretrain_epochs);
    for e in 0..cfg.pretrain_epochs {
        let (recon, _) = t.epoch(None, 0.0)?;
        trace.push(EpochLog {
            phase: Phase::Pretrain,
            epoch: e,
            recon,
            cluster: 0.0,
            kmeans_before: 0.0,
            kmeans_assigned: 0.0,
            kmeans_updated: 0.0,
        });
    }
    Ok((t.model, trace))
}

#[derive(Debug, Clone)]
pub struct DcnResult {
    pub model: DcnModel,
    pub centroids: Centroids,
    pub assignment: Vec<usize>,
    pub trace: Vec<EpochLog>,
    /// Latent codes of the training data under the final model.
    pub embedding: Array2<f64>,
}

/// Pretrains, seeds centroids with k-means++ on the embeddings, then
/// alternates one epoch of gradient steps (S, M frozen) with a
/// re-assignment and centroid update (θ frozen).
pub fn train_dcn(x: ArrayView2<f64>, cfg: &TrainConfig) -> Result<DcnResult> {
    if cfg.k < 2 || x.nrows() < cfg.k {
        return Err(Error::config(format!(
            "need 2 <= K <= N (K={}, N={})",
            cfg.k,
            x.nrows()
        )));
    }
    let mut t = Trainer::new(x, cfg)?;
    let mut trace = Vec::with_capacity(cfg.pretrain_epochs + cfg.joint_epochs);
    for e in 0..cfg.pretrain_epochs {
        let (recon, _) = t.epoch(None, 0.0)?;
        trace.push(EpochLog {
            phase: Phase::Pretrain,
            epoch: e,
            recon,
            cluster: 0.0,
            kmeans_before: 0.0,
            kmeans_assigned: 0.0,
            kmeans_updated: 0.0,
        });
    }
    let z = t.model.encode(x)?;
    let init = kmeans(z.view(), cfg.k, cfg.seed, cfg.kmeans_restarts, 300)?;
    let mut m = init.centroids;
    let mut s = init.assignment;
    for e in 0..cfg.joint_epochs {
        let (recon, cluster) = t.epoch(Some((&m, &s)), cfg.lambda)?;
        let z = t.model.encode(x)?;
        let before = clustering_loss(z.view(), &m, &s);
        s = assign_clusters(z.view(), &m)?;
        let assigned = clustering_loss(z.view(), &m, &s);
        m = update_centroids(z.view(), &s, cfg.k)?;
        let updated = clustering_loss(z.view(), &m, &s);
        trace.push(EpochLog {
            phase: Phase::Joint,
            epoch: cfg.pretrain_epochs + e,
            recon,
            cluster,
            kmeans_before: before,
            kmeans_assigned: assigned,
            kmeans_updated: updated,
        });
    }
    let embedding = t.model.encode(x)?;
    if cfg.joint_epochs == 0 || cfg.lambda == 0.0 {
        // No clustering pressure: cluster the final embedding directly.
        let post = kmeans(embedding.view(), cfg.k, cfg.seed, cfg.kmeans_restarts, 300)?;
        m = post.centroids;
        s = post.assignment;
    }
    Ok(DcnResult {
        model: t.model,
        centroids: m,
        assignment: s,
        trace,
        embedding,
    })
}

/// Standardizer fitted on the training data (identity when standardization
/// is off) together with the trained network.
#[derive(Debug, Clone)]
pub struct FittedEmbedding {
    pub standardizer: Standardizer,
    pub result: DcnResult,
}

/// Optional per-feature standardization followed by [`train_dcn`].
pub fn fit_embedding(x: ArrayView2<f64>, cfg: &TrainConfig) -> Result<FittedEmbedding> {
    let standardizer = if cfg.standardize {
        Standardizer::fit(x)
    } else {
        Standardizer::identity(x.ncols())
    };
    let xs = standardizer.apply(x)?;
    let result = train_dcn(xs.view(), cfg)?;
    Ok(FittedEmbedding { standardizer, result })
}

/// Largest relative error between the analytic gradient of the batch
/// objective and central differences with step `eps`, over `samples`
/// randomly chosen parameters. `assignment` and `m` supply the frozen
/// clustering targets.
#[allow(clippy::too_many_arguments)]
pub fn gradient_check(
    model: &DcnModel,
    x: ArrayView2<f64>,
    assignment: &[usize],
    m: &Centroids,
    lambda: f64,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if !(1e-7..=1e-3).contains(&eps) {
        return Err(Error::config(format!("eps must lie in [1e-7, 1e-3], got {eps}")));
    }
    if assignment.len() != x.nrows() {
        return Err(Error::shape("one cluster id per row is required"));
    }
    let targets = m.targets(assignment);
    let (_, grads) = model.loss_and_grad(x, Some(targets.view()), lambda)?;
    let mut probe = model.clone();
    let mut rng = rng::stream(seed, &[]);
    let count = model.param_count();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let i = rng.random_range(0..count);
        let p = model.param(i);
        probe.set_param(i, p + eps);
        let up = probe.loss(x, Some(targets.view()), lambda)?.total;
        probe.set_param(i, p - eps);
        let down = probe.loss(x, Some(targets.view()), lambda)?.total;
        probe.set_param(i, p);
        let numeric = (up - down) / (2.0 * eps);
        let analytic = grads.get(i);
        let scale = analytic.abs().max(numeric.abs());
        let err = if scale == 0.0 {
            0.0
        } else {
            (analytic - numeric).abs() / scale
        };
        worst = worst.max(err);
    }
    Ok(worst)
}
