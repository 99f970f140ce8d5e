//! Label-free embedding of feature vectors.
//!
//! The main model is a mirrored autoencoder trained jointly with k-means in
//! its bottleneck. PCA and exact t-SNE are provided as baselines.

mod checkpoint;
mod io;
mod kmeans;
mod mlp;
mod pca;
mod train;
mod tsne;

pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
pub use io::{read_embedding, write_embedding, EmbeddingTable};
pub use kmeans::{assign_clusters, clustering_loss, kmeans, kmeans_init, update_centroids, Centroids, KMeansResult};
pub use mlp::{sq_dist, Activation, BatchLoss, DcnModel, Dense, Grads, ModelSpec};
pub use pca::{pca_embed, Pca};
pub use train::{
    fit_embedding, gradient_check, pretrain, train_dcn, Adam, DcnResult, EpochLog, FittedEmbedding, Phase,
    Standardizer, TrainConfig,
};
pub use tsne::{calibrate as tsne_calibrate, tsne_embed, Tsne, TsneConfig};
