//! Mirrored fully connected autoencoder.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, STREAM_INIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, a: &mut Array2<f64>) {
        if self == Activation::Tanh {
            a.mapv_inplace(f64::tanh);
        }
    }
}

/// Encoder widths; the decoder mirrors them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub input: usize,
    /// Hidden widths between input and bottleneck, outermost first.
    pub hidden: Vec<usize>,
    pub latent: usize,
    pub activation: Activation,
}

impl ModelSpec {
    /// D → 256 → 64 → 8 → 64 → 256 → D with tanh hidden units.
    pub fn standard(input: usize) -> Self {
        ModelSpec {
            input,
            hidden: vec![256, 64],
            latent: 8,
            activation: Activation::Tanh,
        }
    }

    /// Every layer width from input to reconstruction.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input];
        w.extend(&self.hidden);
        w.push(self.latent);
        w.extend(self.hidden.iter().rev());
        w.push(self.input);
        w
    }

    /// Number of encoder layers; the latent code is their output.
    pub fn encoder_layers(&self) -> usize {
        self.hidden.len() + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.input == 0 || self.latent == 0 || self.hidden.contains(&0) {
            return Err(Error::config("layer widths must be positive"));
        }
        Ok(())
    }
}

/// Affine layer y = act(W x + b), W stored out × in.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcnModel {
    spec: ModelSpec,
    layers: Vec<Dense>,
}

/// Per-layer gradients (or any per-layer parameter-shaped quantity).
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl Grads {
    pub fn zeros_like(model: &DcnModel) -> Self {
        Grads {
            layers: model
                .layers
                .iter()
                .map(|l| (Array2::zeros(l.w.raw_dim()), Array1::zeros(l.b.raw_dim())))
                .collect(),
        }
    }

    /// Flat view in the same order as [`DcnModel::param`].
    pub fn get(&self, index: usize) -> f64 {
        let mut i = index;
        for (w, b) in &self.layers {
            if i < w.len() {
                return w.as_slice().expect("standard layout")[i];
            }
            i -= w.len();
            if i < b.len() {
                return b[i];
            }
            i -= b.len();
        }
        panic!("parameter index {index} out of range")
    }
}

/// Loss terms of one batch, averaged over its rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchLoss {
    /// Mean ‖x̂ − x‖².
    pub recon: f64,
    /// Mean ‖z − M s‖² (0 when no centroid targets are given).
    pub cluster: f64,
    /// recon + (λ/2)·cluster.
    pub total: f64,
}

impl DcnModel {
    /// Glorot-uniform weights and zero biases drawn from `seed`.
    pub fn new(spec: ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let widths = spec.widths();
        let mut rng = rng::stream(seed, &[STREAM_INIT]);
        let n = widths.len() - 1;
        let enc = spec.encoder_layers();
        let layers = (0..n)
            .map(|l| {
                let (fan_in, fan_out) = (widths[l], widths[l + 1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let w = Array2::from_shape_fn((fan_out, fan_in), |_| rng.random_range(-limit..limit));
                let linear = l + 1 == enc || l + 1 == n;
                Dense {
                    w,
                    b: Array1::zeros(fan_out),
                    activation: if linear { Activation::Identity } else { spec.activation },
                }
            })
            .collect();
        Ok(DcnModel { spec, layers })
    }

    /// Builds a model from explicit layers (checked against `spec`).
    pub fn from_layers(spec: ModelSpec, layers: Vec<Dense>) -> Result<Self> {
        spec.validate()?;
        let widths = spec.widths();
        if layers.len() + 1 != widths.len()
            || layers.iter().enumerate().any(|(l, d)| {
                d.w.dim() != (widths[l + 1], widths[l]) || d.b.len() != widths[l + 1]
            })
        {
            return Err(Error::shape("layers do not match the model spec"));
        }
        Ok(DcnModel { spec, layers })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input
    }

    pub fn latent_dim(&self) -> usize {
        self.spec.latent
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    fn locate(&self, index: usize) -> (usize, Option<usize>, usize) {
        let mut i = index;
        for (l, d) in self.layers.iter().enumerate() {
            if i < d.w.len() {
                return (l, Some(i), 0);
            }
            i -= d.w.len();
            if i < d.b.len() {
                return (l, None, i);
            }
            i -= d.b.len();
        }
        panic!("parameter index {index} out of range")
    }

    /// Flat parameter order: layer by layer, W row-major then b.
    pub fn param(&self, index: usize) -> f64 {
        match self.locate(index) {
            (l, Some(i), _) => self.layers[l].w.as_slice().expect("standard layout")[i],
            (l, None, i) => self.layers[l].b[i],
        }
    }

    pub fn set_param(&mut self, index: usize, value: f64) {
        match self.locate(index) {
            (l, Some(i), _) => self.layers[l].w.as_slice_mut().expect("standard layout")[i] = value,
            (l, None, i) => self.layers[l].b[i] = value,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for d in &self.layers {
            out.extend(d.w.iter());
            out.extend(d.b.iter());
        }
        out
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.spec.input {
            return Err(Error::shape(format!(
                "input has {cols} features, model expects {}",
                self.spec.input
            )));
        }
        Ok(())
    }

    /// Activations of every layer for a batch (rows are samples); element 0
    /// is the input itself.
    fn activations(&self, x: ArrayView2<f64>) -> Vec<Array2<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_owned());
        for d in &self.layers {
            let mut a = acts.last().expect("input present").dot(&d.w.t());
            a += &d.b;
            d.activation.apply(&mut a);
            acts.push(a);
        }
        acts
    }

    /// z = f(x) and x̂ = g(f(x)) for a single vector.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_input(x.len())?;
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        let acts = self.activations(view);
        let z = acts[self.spec.encoder_layers()].row(0).to_vec();
        let xh = acts.last().expect("output").row(0).to_vec();
        Ok((z, xh))
    }

    /// Latent codes of a batch.
    pub fn encode(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(x.ncols())?;
        let mut a = x.to_owned();
        for d in &self.layers[..self.spec.encoder_layers()] {
            let mut next = a.dot(&d.w.t());
            next += &d.b;
            d.activation.apply(&mut next);
            a = next;
        }
        Ok(a)
    }

    pub fn reconstruct(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(x.ncols())?;
        Ok(self.activations(x).pop().expect("output"))
    }

    /// Batch-mean objective ‖x̂ − x‖² + (λ/2)‖z − t‖², where row i of
    /// `targets` is M s_i. Without targets the clustering term is absent.
    pub fn loss(&self, x: ArrayView2<f64>, targets: Option<ArrayView2<f64>>, lambda: f64) -> Result<BatchLoss> {
        self.check_input(x.ncols())?;
        let acts = self.activations(x);
        Ok(self.loss_from(&acts, x, targets, lambda))
    }

    fn loss_from(
        &self,
        acts: &[Array2<f64>],
        x: ArrayView2<f64>,
        targets: Option<ArrayView2<f64>>,
        lambda: f64,
    ) -> BatchLoss {
        let b = x.nrows() as f64;
        let recon = (acts.last().expect("output") - &x).mapv(|v| v * v).sum() / b;
        let cluster = match targets {
            Some(t) => (&acts[self.spec.encoder_layers()] - &t).mapv(|v| v * v).sum() / b,
            None => 0.0,
        };
        BatchLoss {
            recon,
            cluster,
            total: recon + 0.5 * lambda * cluster,
        }
    }

    /// Loss and its gradient with respect to every weight and bias.
    pub fn loss_and_grad(
        &self,
        x: ArrayView2<f64>,
        targets: Option<ArrayView2<f64>>,
        lambda: f64,
    ) -> Result<(BatchLoss, Grads)> {
        self.check_input(x.ncols())?;
        if let Some(t) = targets {
            if t.dim() != (x.nrows(), self.spec.latent) {
                return Err(Error::shape("centroid targets must be batch × latent"));
            }
        }
        let acts = self.activations(x);
        let loss = self.loss_from(&acts, x, targets, lambda);
        let b = x.nrows() as f64;
        let enc = self.spec.encoder_layers();
        let n = self.layers.len();

        let mut delta = (acts[n].clone() - &x) * (2.0 / b);
        let mut grads = Vec::with_capacity(n);
        for l in (0..n).rev() {
            let d = &self.layers[l];
            if l + 1 == enc {
                if let (Some(t), true) = (targets, lambda != 0.0) {
                    delta = delta + (&acts[enc] - &t) * (lambda / b);
                }
            }
            if d.activation == Activation::Tanh {
                delta.zip_mut_with(&acts[l + 1], |g, &y| *g *= 1.0 - y * y);
            }
            let gw = delta.t().dot(&acts[l]);
            let gb = delta.sum_axis(Axis(0));
            let next = if l > 0 { Some(delta.dot(&d.w)) } else { None };
            grads.push((gw, gb));
            if let Some(nd) = next {
                delta = nd;
            }
        }
        grads.reverse();
        Ok((loss, Grads { layers: grads }))
    }
}

/// Squared distance between two equal-length vectors.
pub fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}
