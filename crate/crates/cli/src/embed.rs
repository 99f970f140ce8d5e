use std::path::PathBuf;

use clap::{Args, ValueEnum};
use crepe_core::correlator::{read_features, FeatureSet};
use crepe_core::embed::{
    fit_embedding, kmeans, pca_embed, tsne_embed, write_checkpoint, write_embedding, Checkpoint, EpochLog,
    Standardizer, TrainConfig, TsneConfig,
};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::manifest::{self, Manifest};
use crate::{usage, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Dcn,
    Tsne,
    Pca,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Dcn => "dcn",
            Method::Tsne => "tsne",
            Method::Pca => "pca",
        }
    }
}

/// Embedding settings shared by `embed` and `sweep`.
#[derive(Debug, Clone, Args)]
pub struct EmbedOptions {
    /// Number of clusters.
    #[arg(long)]
    pub k: Option<usize>,
    /// Embedding dimension for dcn and pca (t-SNE always uses 2).
    #[arg(long, default_value_t = 8)]
    pub d: usize,
    /// Weight of the clustering term.
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long = "embed-seed", default_value_t = 1)]
    pub embed_seed: u64,
    #[arg(long = "pretrain-epochs", default_value_t = 60)]
    pub pretrain_epochs: usize,
    #[arg(long = "joint-epochs", default_value_t = 40)]
    pub joint_epochs: usize,
    #[arg(long = "batch-size", default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long = "learning-rate", default_value_t = 1e-3)]
    pub learning_rate: f64,
    /// Hidden widths of the encoder, outermost first.
    #[arg(long, default_value = "256,64")]
    pub hidden: String,
    #[arg(long, default_value_t = 30.0)]
    pub perplexity: f64,
    /// k-means++ restarts; the lowest-inertia run is kept.
    #[arg(long = "kmeans-restarts", default_value_t = 50)]
    pub kmeans_restarts: usize,
    /// Skip per-feature standardization.
    #[arg(long = "no-standardize")]
    pub no_standardize: bool,
}

impl EmbedOptions {
    pub fn train_config(&self, k: usize) -> CliResult<TrainConfig> {
        let hidden = crate::parse_list(&self.hidden, "hidden width")?;
        let cfg = TrainConfig {
            pretrain_epochs: self.pretrain_epochs,
            joint_epochs: self.joint_epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            lambda: self.lambda,
            seed: self.embed_seed,
            k,
            standardize: !self.no_standardize,
            hidden,
            latent: self.d,
            kmeans_restarts: self.kmeans_restarts,
            ..TrainConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn tsne_config(&self) -> TsneConfig {
        TsneConfig {
            perplexity: self.perplexity,
            ..TsneConfig::default()
        }
    }
}

/// Result of one embedding run.
pub struct Embedded {
    pub z: Array2<f64>,
    pub cluster: Vec<usize>,
    /// Present for dcn.
    pub checkpoint: Option<Checkpoint>,
    pub trace: Vec<EpochLog>,
}

/// Embeds and clusters a feature matrix. Labels never enter here.
pub fn embed_matrix(x: &Array2<f64>, method: Method, k: usize, opts: &EmbedOptions) -> CliResult<Embedded> {
    if k < 2 {
        return usage("--k must be at least 2");
    }
    let restarts = opts.kmeans_restarts;
    let standardized = || -> CliResult<Array2<f64>> {
        if opts.no_standardize {
            Ok(x.clone())
        } else {
            Ok(Standardizer::fit(x.view()).apply(x.view())?)
        }
    };
    match method {
        Method::Dcn => {
            let cfg = opts.train_config(k)?;
            let fit = fit_embedding(x.view(), &cfg)?;
            let r = fit.result;
            Ok(Embedded {
                checkpoint: Some(Checkpoint {
                    model: r.model,
                    standardizer: fit.standardizer,
                    centroids: r.centroids,
                    config: cfg,
                }),
                z: r.embedding,
                cluster: r.assignment,
                trace: r.trace,
            })
        }
        Method::Tsne => {
            let t = tsne_embed(standardized()?.view(), &opts.tsne_config(), opts.embed_seed)?;
            let km = kmeans(t.embedding.view(), k, opts.embed_seed, restarts, 300)?;
            Ok(Embedded {
                z: t.embedding,
                cluster: km.assignment,
                checkpoint: None,
                trace: Vec::new(),
            })
        }
        Method::Pca => {
            let p = pca_embed(standardized()?.view(), opts.d)?;
            let km = kmeans(p.embedding.view(), k, opts.embed_seed, restarts, 300)?;
            Ok(Embedded {
                z: p.embedding,
                cluster: km.assignment,
                checkpoint: None,
                trace: Vec::new(),
            })
        }
    }
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Feature CSV from `correlate`.
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, value_enum, default_value = "dcn")]
    pub method: Method,
    #[command(flatten)]
    pub options: EmbedOptions,
    /// Same as --embed-seed.
    #[arg(long, conflicts_with = "embed_seed")]
    pub seed: Option<u64>,
    /// Embedding CSV (event_id, z_0.., cluster).
    #[arg(long)]
    pub out: PathBuf,
}

fn write_trace(path: &std::path::Path, trace: &[EpochLog]) -> CliResult<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "phase,epoch,recon,cluster,kmeans_before,kmeans_assigned,kmeans_updated")?;
    for e in trace {
        writeln!(
            out,
            "{:?},{},{},{},{},{},{}",
            e.phase, e.epoch, e.recon, e.cluster, e.kmeans_before, e.kmeans_assigned, e.kmeans_updated
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn run(args: &EmbedArgs, argv: &[String]) -> CliResult<()> {
    let mut opts = args.options.clone();
    if let Some(s) = args.seed {
        opts.embed_seed = s;
    }
    let Some(k) = opts.k else {
        return usage("--k is required");
    };
    let set: FeatureSet = read_features(&args.features)?;
    let x = set.matrix();
    let out = embed_matrix(&x, args.method, k, &opts)?;
    manifest::ensure_parent(&args.out)?;
    write_embedding(&args.out, &set.event_ids, out.z.view(), &out.cluster)?;
    let mut m = Manifest::new(
        "embed",
        argv,
        Some(opts.embed_seed),
        json!({
            "features": args.features,
            "method": args.method,
            "k": k,
            "train": opts.train_config(k)?,
            "tsne": opts.tsne_config(),
        }),
    )
    .output(&args.out);
    if let Some(ckpt) = &out.checkpoint {
        let model = manifest::sibling(&args.out, "model");
        write_checkpoint(&model, ckpt)?;
        let trace = manifest::sibling(&args.out, "trace.csv");
        write_trace(&trace, &out.trace)?;
        m = m.output(&model).output(&trace);
    }
    m.write(&manifest::beside(&args.out))?;
    println!(
        "{} events -> {} ({} dims, K={k})",
        set.len(),
        args.out.display(),
        out.z.ncols()
    );
    Ok(())
}
