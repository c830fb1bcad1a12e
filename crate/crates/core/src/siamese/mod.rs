//! Multi-path Siamese BiLSTM scoring `(paths, relation)` pairs.
//!
//! Each path is embedded and run through `layers` stacked bidirectional LSTM
//! layers; the same weights serve every path. Outputs are max-pooled over
//! the path's tokens, concatenated across paths and fused by a dense tanh
//! layer into `p`. The score is `sigmoid(cos(p, r))` for the relation
//! embedding `r`.
//!
//! All parameters live in one flat `f64` vector; [`Layout`] names the
//! tensors in it. Gradients use the same layout.

mod checkpoint;
mod net;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use net::ForwardCache;
pub use train::{gradient_check, GradientCheck, TrainReport};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("token {token} outside vocabulary of {vocab}")]
    TokenOutOfRange { token: u32, vocab: usize },
    #[error("relation {relation} outside {relations} relations")]
    RelationOutOfRange { relation: u32, relations: usize },
    #[error("sample has {found} paths, model expects {expected}")]
    PathCount { found: usize, expected: usize },
    #[error("non-finite loss in epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("non-finite parameter after epoch {epoch}, batch {batch}")]
    NonFiniteParameter { epoch: usize, batch: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub relations: usize,
    pub num_paths: usize,
    pub embed_dim: usize,
    /// Hidden units per direction.
    pub hidden_dim: usize,
    pub layers: usize,
    pub fusion_dim: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(vocab_size: usize, relations: usize) -> Self {
        ModelConfig {
            vocab_size,
            relations,
            num_paths: 3,
            embed_dim: 32,
            hidden_dim: 32,
            layers: 2,
            fusion_dim: 64,
            learning_rate: 1e-3,
            batch_size: 32,
            epochs: 3,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let dims = [
            ("vocab_size", self.vocab_size),
            ("relations", self.relations),
            ("num_paths", self.num_paths),
            ("embed_dim", self.embed_dim),
            ("hidden_dim", self.hidden_dim),
            ("layers", self.layers),
            ("fusion_dim", self.fusion_dim),
            ("batch_size", self.batch_size),
            ("epochs", self.epochs),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(ModelError::Config(format!("{name} must be at least 1")));
            }
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(ModelError::Config(
                "learning_rate must be finite and >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Offsets of one LSTM direction's tensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmBlock {
    pub input_dim: usize,
    /// `4h × input_dim`, gate blocks in order input, forget, cell, output.
    pub w: usize,
    /// `4h × h`.
    pub u: usize,
    /// `4h`.
    pub b: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tensor {
    pub name: String,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub embedding: usize,
    pub relation: usize,
    /// `[forward, backward]` per layer.
    pub lstm: Vec<[LstmBlock; 2]>,
    /// `fusion_dim × num_paths·2h`.
    pub fusion_w: usize,
    pub fusion_b: usize,
    pub tensors: Vec<Tensor>,
    pub total: usize,
}

impl Layout {
    pub fn new(cfg: &ModelConfig) -> Self {
        let mut tensors = Vec::new();
        let mut at = 0;
        let mut push = |name: String, rows: usize, cols: usize| {
            tensors.push(Tensor {
                name,
                offset: at,
                rows,
                cols,
            });
            at += rows * cols;
            at - rows * cols
        };
        let h = cfg.hidden_dim;
        let embedding = push("embedding".into(), cfg.vocab_size, cfg.embed_dim);
        let relation = push("relation".into(), cfg.relations, cfg.fusion_dim);
        let mut lstm = Vec::with_capacity(cfg.layers);
        for l in 0..cfg.layers {
            let input_dim = if l == 0 { cfg.embed_dim } else { 2 * h };
            let mut block = |dir: &str| LstmBlock {
                input_dim,
                w: push(format!("lstm{l}.{dir}.w"), 4 * h, input_dim),
                u: push(format!("lstm{l}.{dir}.u"), 4 * h, h),
                b: push(format!("lstm{l}.{dir}.b"), 4 * h, 1),
            };
            let fwd = block("forward");
            let bwd = block("backward");
            lstm.push([fwd, bwd]);
        }
        let fusion_w = push("fusion.w".into(), cfg.fusion_dim, cfg.num_paths * 2 * h);
        let fusion_b = push("fusion.b".into(), cfg.fusion_dim, 1);
        Layout {
            embedding,
            relation,
            lstm,
            fusion_w,
            fusion_b,
            total: at,
            tensors,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub cfg: ModelConfig,
    pub layout: Layout,
    pub params: Vec<f64>,
}

impl Model {
    /// Randomly initialised model: embeddings ~ N(0, 0.1), weights uniform
    /// in ±1/√h, biases zero except the forget gate at 1.
    pub fn new(cfg: ModelConfig) -> Result<Self, ModelError> {
        cfg.validate()?;
        let layout = Layout::new(&cfg);
        let mut params = vec![0.0; layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let normal = Normal::new(0.0, 0.1).expect("valid");
        let bound = 1.0 / (cfg.hidden_dim as f64).sqrt();
        let h = cfg.hidden_dim;
        for t in &layout.tensors {
            let block = &mut params[t.offset..t.offset + t.rows * t.cols];
            if t.name == "embedding" || t.name == "relation" {
                block.iter_mut().for_each(|x| *x = normal.sample(&mut rng));
            } else if t.name.ends_with(".b") && t.name.starts_with("lstm") {
                block[h..2 * h].iter_mut().for_each(|x| *x = 1.0);
            } else if t.name != "fusion.b" {
                block
                    .iter_mut()
                    .for_each(|x| *x = rng.random_range(-bound..=bound));
            }
        }
        Ok(Model {
            cfg,
            layout,
            params,
        })
    }

    /// Model with explicit parameters, e.g. from a checkpoint.
    pub fn from_params(cfg: ModelConfig, params: Vec<f64>) -> Result<Self, ModelError> {
        cfg.validate()?;
        let layout = Layout::new(&cfg);
        if params.len() != layout.total {
            return Err(ModelError::Config(format!(
                "{} parameters given, layout needs {}",
                params.len(),
                layout.total
            )));
        }
        Ok(Model {
            cfg,
            layout,
            params,
        })
    }

    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        let t = self.layout.tensors.iter().find(|t| t.name == name)?;
        Some(&self.params[t.offset..t.offset + t.rows * t.cols])
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let t = self.layout.tensors.iter().find(|t| t.name == name)?;
        Some(&mut self.params[t.offset..t.offset + t.rows * t.cols])
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|x| x.is_finite())
    }
}
