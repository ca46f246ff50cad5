use rand::Rng;
use serde::{Deserialize, Serialize};

use super::spec::{ModelKind, ModelSpec};
use crate::ehr::SymptomUniverse;
use crate::error::{Error, Result};
use crate::seed;

/// A named row-major matrix. Weight matrices are stored input-major
/// (`rows = fan_in`, `cols = fan_out`); biases have one row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    /// Included in the L2 penalty.
    pub regularized: bool,
    #[serde(skip)]
    pub data: Vec<f64>,
}

impl Tensor {
    fn zeros(name: &str, rows: usize, cols: usize, regularized: bool) -> Self {
        Tensor {
            name: name.to_string(),
            rows,
            cols,
            regularized,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Parameters of one classifier plus the metadata that binds them to a label
/// order and a symptom universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub spec: ModelSpec,
    pub label_index: Vec<String>,
    /// Symptom names in feature order (may be empty when unbound).
    pub symptoms: Vec<String>,
    pub universe_digest: String,
    pub tensors: Vec<Tensor>,
}

/// Tensor shapes for a spec, in storage order.
pub(crate) fn layout(spec: &ModelSpec) -> Vec<Tensor> {
    let l = spec.n_classes;
    let d = spec.input_dim;
    let mut t = Vec::new();
    let mut width = match spec.kind {
        ModelKind::LogisticRegression => {
            t.push(Tensor::zeros("out.weight", d, l, true));
            t.push(Tensor::zeros("out.bias", 1, l, false));
            return t;
        }
        ModelKind::Mlp => {
            let h = spec.hidden_sizes[0];
            t.push(Tensor::zeros("fc1.weight", d, h, true));
            t.push(Tensor::zeros("fc1.bias", 1, h, false));
            h
        }
        ModelKind::MlpEmbedding => {
            let e = spec.embedding_dim;
            t.push(Tensor::zeros("emb.present", d / 2, e, true));
            t.push(Tensor::zeros("emb.absent", d / 2, e, true));
            e
        }
    };
    let rest = match spec.kind {
        ModelKind::Mlp => &spec.hidden_sizes[1..],
        _ => &spec.hidden_sizes[..],
    };
    let first = if spec.kind == ModelKind::Mlp { 2 } else { 1 };
    for (i, &h) in rest.iter().enumerate() {
        let n = first + i;
        t.push(Tensor::zeros(&format!("fc{n}.weight"), width, h, true));
        t.push(Tensor::zeros(&format!("fc{n}.bias"), 1, h, false));
        width = h;
    }
    t.push(Tensor::zeros("out.weight", width, l, true));
    t.push(Tensor::zeros("out.bias", 1, l, false));
    t
}

impl ModelParams {
    /// All-zero parameters.
    pub fn zeros(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        Ok(ModelParams {
            spec: spec.clone(),
            label_index: (0..spec.n_classes).map(|i| format!("class_{i}")).collect(),
            symptoms: Vec::new(),
            universe_digest: String::new(),
            tensors: layout(spec),
        })
    }

    /// Uniform in `±1/sqrt(fan_in)` per tensor; embedding tables use the
    /// embedding width as fan-in.
    pub fn init(spec: &ModelSpec, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(spec)?;
        let mut rng = seed::rng(seed);
        // a bias shares the fan-in of the weight matrix before it
        let mut last_fan_in = 1usize;
        for t in &mut p.tensors {
            let fan_in = if t.name.starts_with("emb.") {
                t.cols
            } else if t.name.ends_with(".bias") {
                last_fan_in
            } else {
                t.rows
            };
            last_fan_in = fan_in;
            let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
            for v in &mut t.data {
                *v = rng.random_range(-bound..=bound);
            }
        }
        Ok(p)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.spec.n_classes {
            return Err(Error::DimensionMismatch {
                expected: self.spec.n_classes,
                actual: labels.len(),
            });
        }
        self.label_index = labels;
        Ok(self)
    }

    /// Records the universe the features were encoded against.
    pub fn attach_universe(&mut self, universe: &SymptomUniverse) -> Result<()> {
        if 2 * universe.len() != self.spec.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.spec.input_dim,
                actual: 2 * universe.len(),
            });
        }
        self.symptoms = universe.symptoms().to_vec();
        self.universe_digest = universe.digest();
        Ok(())
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.iter_mut().find(|t| t.name == name)
    }

    /// Sum of squares over the tensors included in the L2 penalty.
    pub fn l2_sum(&self) -> f64 {
        self.tensors
            .iter()
            .filter(|t| t.regularized)
            .flat_map(|t| t.data.iter())
            .map(|v| v * v)
            .sum()
    }

    pub fn n_parameters(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.data.iter().all(|v| v.is_finite()))
    }

    /// Human-readable name of input feature `j`: the symptom for the
    /// presence channel, `NOT <symptom>` for the absence channel.
    pub fn feature_name(&self, j: usize) -> String {
        let k = self.spec.input_dim / 2;
        let sym = |i: usize| self.symptoms.get(i).cloned().unwrap_or_else(|| format!("feature_{i}"));
        if j < k {
            sym(j)
        } else {
            format!("NOT {}", sym(j - k))
        }
    }
}
