use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    LogisticRegression,
    Mlp,
    MlpEmbedding,
}

impl ModelKind {
    /// Short name used in file names, CSV rows and on the command line.
    pub fn short_name(self) -> &'static str {
        match self {
            ModelKind::LogisticRegression => "lr",
            ModelKind::Mlp => "mlp",
            ModelKind::MlpEmbedding => "mlp-embedding",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "lr" | "logistic-regression" => Ok(ModelKind::LogisticRegression),
            "mlp" => Ok(ModelKind::Mlp),
            "mlp-embedding" | "embedding" | "mlp-emb" => Ok(ModelKind::MlpEmbedding),
            other => Err(Error::invalid_arg(format!("unknown model kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// `2K`: presence and absence channel per symptom.
    pub input_dim: usize,
    pub n_classes: usize,
    /// Hidden layer widths after the input layer. Unused by logistic
    /// regression.
    pub hidden_sizes: Vec<usize>,
    /// Embedding width `E` (embedding model only).
    pub embedding_dim: usize,
    pub dropout_p: f64,
    pub l2_lambda: f64,
}

impl ModelSpec {
    pub fn logistic_regression(input_dim: usize, n_classes: usize) -> Self {
        ModelSpec {
            kind: ModelKind::LogisticRegression,
            input_dim,
            n_classes,
            hidden_sizes: Vec::new(),
            embedding_dim: 0,
            dropout_p: 0.0,
            l2_lambda: 0.01,
        }
    }

    /// Two ReLU layers of 256 and 128 units.
    pub fn mlp(input_dim: usize, n_classes: usize) -> Self {
        ModelSpec {
            kind: ModelKind::Mlp,
            hidden_sizes: vec![256, 128],
            ..Self::logistic_regression(input_dim, n_classes)
        }
    }

    /// Embedding width 128 followed by one hidden layer of 64 units, dropout 0.5.
    pub fn mlp_embedding(input_dim: usize, n_classes: usize) -> Self {
        ModelSpec {
            kind: ModelKind::MlpEmbedding,
            hidden_sizes: vec![64],
            embedding_dim: 128,
            dropout_p: 0.5,
            ..Self::logistic_regression(input_dim, n_classes)
        }
    }

    pub fn new(kind: ModelKind, input_dim: usize, n_classes: usize) -> Self {
        match kind {
            ModelKind::LogisticRegression => Self::logistic_regression(input_dim, n_classes),
            ModelKind::Mlp => Self::mlp(input_dim, n_classes),
            ModelKind::MlpEmbedding => Self::mlp_embedding(input_dim, n_classes),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.n_classes == 0 {
            return Err(Error::invalid_arg("input_dim and n_classes must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(Error::invalid_arg("dropout_p must lie in [0, 1)"));
        }
        if !(self.l2_lambda >= 0.0 && self.l2_lambda.is_finite()) {
            return Err(Error::invalid_arg("l2_lambda must be non-negative"));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(Error::invalid_arg("hidden sizes must be positive"));
        }
        match self.kind {
            ModelKind::LogisticRegression => {}
            ModelKind::Mlp if self.hidden_sizes.is_empty() => {
                return Err(Error::invalid_arg("mlp needs at least one hidden layer"));
            }
            ModelKind::MlpEmbedding if !self.input_dim.is_multiple_of(2) || self.embedding_dim == 0 => {
                return Err(Error::invalid_arg(
                    "embedding model needs an even input_dim and a positive embedding_dim",
                ));
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub early_stop_patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 128,
            learning_rate: 0.01,
            momentum: 0.9,
            max_epochs: 50,
            early_stop_patience: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid_arg("batch_size must be at least 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid_arg("learning_rate must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid_arg("momentum must lie in [0, 1)"));
        }
        Ok(())
    }
}
