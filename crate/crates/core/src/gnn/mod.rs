//! Minimal message-passing graph classifier: GIN/GCN layers, global add pooling and a
//! linear head, trained with hand-derived gradients and Adam.

mod checkpoint;
mod model;
mod train;

pub use checkpoint::{
    load_activations, load_checkpoint, save_activations, save_checkpoint, ActivationExport, Checkpoint,
    LayerActivationsExport,
};
pub use model::{
    argmax, build_features, cross_entropy, features_for, forward_with_activations, gcn_layer_forward,
    gin_layer_forward, softmax, ActivationRecord, FeatureSpec, Linear, MessageLayer, ModelParams,
};
pub use train::{
    evaluate, gradient_check, gradient_check_entries, train, EpochStats, GradCheckEntry, TrainOutcome,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerType {
    Gin,
    Gcn,
}

impl std::str::FromStr for LayerType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gin" => Ok(LayerType::Gin),
            "gcn" => Ok(LayerType::Gcn),
            other => Err(Error::Config(format!("unknown layer type {other:?}"))),
        }
    }
}

impl std::fmt::Display for LayerType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LayerType::Gin => "gin",
            LayerType::Gcn => "gcn",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    Add,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub layer_type: LayerType,
    pub pooling: Pooling,
    pub num_classes: usize,
    pub learning_rate: f64,
    /// L2 coefficient added to every parameter gradient.
    pub weight_decay: f64,
    pub epochs: usize,
    /// Stop once test accuracy has not improved for this many epochs.
    pub early_stop_patience: Option<usize>,
    pub batch_size: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn builder(num_layers: usize, hidden_dim: usize, layer_type: LayerType, num_classes: usize) -> ModelConfigBuilder {
        ModelConfigBuilder(ModelConfig {
            num_layers,
            hidden_dim,
            layer_type,
            pooling: Pooling::Add,
            num_classes,
            learning_rate: 1e-3,
            weight_decay: 0.0,
            epochs: 100,
            early_stop_patience: None,
            batch_size: 32,
            seed: 0,
        })
    }

    /// Architecture and training defaults for the known benchmark datasets.
    ///
    /// The printed learning rates and decays of `10e-4` are taken literally as `1e-3`.
    pub fn for_dataset(name: &str) -> Option<Self> {
        let base = |n, layer, lr, epochs, patience| {
            ModelConfig::builder(n, 64, layer, 2)
                .learning_rate(lr)
                .weight_decay(1e-3)
                .epochs(epochs)
                .early_stop(patience)
                .batch_size(32)
                .build()
        };
        match name.to_ascii_uppercase().as_str() {
            "MUTAG" => Some(base(3, LayerType::Gin, 1e-3, 850, None)),
            "PROTEINS" => Some(base(2, LayerType::Gin, 1e-3, 700, Some(60))),
            "IMDB-B" | "IMDB-BINARY" => Some(base(3, LayerType::Gin, 4e-3, 1000, Some(400))),
            "REDDIT-B" | "REDDIT-BINARY" => Some(base(3, LayerType::Gcn, 1e-3, 20000, Some(1000))),
            "SYNTHETIC-DEGREE" => Some(
                ModelConfig::builder(2, 16, LayerType::Gin, 2)
                    .learning_rate(1e-2)
                    .weight_decay(0.0)
                    .epochs(150)
                    .batch_size(32)
                    .build(),
            ),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 || self.hidden_dim == 0 {
            return Err(Error::Config("a model needs at least one layer of width at least one".into()));
        }
        if self.num_classes == 0 {
            return Err(Error::Config("a model needs at least one class".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::Config(format!("weight decay {} must be nonnegative", self.weight_decay)));
        }
        Ok(())
    }
}

pub struct ModelConfigBuilder(ModelConfig);

impl ModelConfigBuilder {
    pub fn learning_rate(mut self, lr: f64) -> Self {
        self.0.learning_rate = lr;
        self
    }

    pub fn weight_decay(mut self, wd: f64) -> Self {
        self.0.weight_decay = wd;
        self
    }

    pub fn epochs(mut self, epochs: usize) -> Self {
        self.0.epochs = epochs;
        self
    }

    pub fn early_stop(mut self, patience: Option<usize>) -> Self {
        self.0.early_stop_patience = patience;
        self
    }

    pub fn batch_size(mut self, batch_size: usize) -> Self {
        self.0.batch_size = batch_size;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.0.seed = seed;
        self
    }

    pub fn build(self) -> ModelConfig {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mutag_defaults_follow_the_architecture_table() {
        let c = ModelConfig::for_dataset("MUTAG").unwrap();
        assert_eq!((c.num_layers, c.hidden_dim, c.layer_type), (3, 64, LayerType::Gin));
        assert_eq!(c.learning_rate, 1e-3);
        assert_eq!(c.weight_decay, 1e-3);
        assert_eq!(c.epochs, 850);
        assert_eq!(c.batch_size, 32);
        assert_eq!(c.early_stop_patience, None);
        let r = ModelConfig::for_dataset("reddit-binary").unwrap();
        assert_eq!(r.layer_type, LayerType::Gcn);
        assert_eq!(r.early_stop_patience, Some(1000));
        assert!(ModelConfig::for_dataset("unknown").is_none());
    }

    #[test]
    fn rejects_empty_models() {
        let c = ModelConfig::builder(0, 4, LayerType::Gin, 2).build();
        assert!(c.validate().is_err());
    }
}
