//! Ranked-prediction evaluation: top-k accuracy and mean per-class accuracy.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::models::{forward, Dropout, ModelParams};

/// Table 1 columns.
pub const DEFAULT_KS: [usize; 5] = [1, 3, 5, 10, 20];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPrediction {
    pub case_id: String,
    /// Label indices, best first.
    pub ranked_labels: Vec<usize>,
}

/// Label indices by descending probability; equal probabilities keep
/// ascending index order.
pub fn rank_probabilities(probs: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..probs.len()).collect();
    idx.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    idx
}

/// Ranks every label for every case of `dataset`, which must use the
/// model's label index.
pub fn predict_ranked(params: &ModelParams, dataset: &LabeledDataset) -> Result<Vec<RankedPrediction>> {
    if dataset.label_index != params.label_index {
        return Err(Error::InvalidInput(
            "dataset label index differs from the model's".into(),
        ));
    }
    dataset
        .examples
        .iter()
        .enumerate()
        .map(|(i, ex)| {
            let probs = forward(params, &ex.features, Dropout::Off)?;
            Ok(RankedPrediction {
                case_id: if ex.patient_id.is_empty() {
                    i.to_string()
                } else {
                    format!("{}#{i}", ex.patient_id)
                },
                ranked_labels: rank_probabilities(&probs),
            })
        })
        .collect()
}

fn check_lengths(predictions: &[RankedPrediction], gold: &[usize]) -> Result<()> {
    if predictions.is_empty() {
        return Err(Error::InvalidInput("empty evaluation set".into()));
    }
    if predictions.len() != gold.len() {
        return Err(Error::DimensionMismatch {
            expected: predictions.len(),
            actual: gold.len(),
        });
    }
    Ok(())
}

/// Fraction of cases whose gold label is among the first `k` ranked labels,
/// for each requested `k`.
pub fn top_k_accuracy(predictions: &[RankedPrediction], gold: &[usize], ks: &[usize]) -> Result<BTreeMap<usize, f64>> {
    check_lengths(predictions, gold)?;
    let n_labels = predictions.iter().map(|p| p.ranked_labels.len()).min().unwrap_or(0);
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > n_labels) {
        return Err(Error::invalid_arg(format!("k = {k} outside 1..={n_labels}")));
    }
    // rank of the gold label in each prediction (usize::MAX when absent)
    let ranks: Vec<usize> = predictions
        .iter()
        .zip(gold)
        .map(|(p, g)| p.ranked_labels.iter().position(|l| l == g).unwrap_or(usize::MAX))
        .collect();
    let t = ranks.len() as f64;
    Ok(ks
        .iter()
        .map(|&k| (k, ranks.iter().filter(|&&r| r < k).count() as f64 / t))
        .collect())
}

/// Unweighted mean of per-class top-1 accuracy over the classes present in
/// `gold`.
pub fn mean_class_accuracy(predictions: &[RankedPrediction], gold: &[usize]) -> Result<f64> {
    check_lengths(predictions, gold)?;
    let mut tally: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (p, &g) in predictions.iter().zip(gold) {
        let e = tally.entry(g).or_default();
        e.1 += 1;
        if p.ranked_labels.first() == Some(&g) {
            e.0 += 1;
        }
    }
    let sum: f64 = tally.values().map(|&(hit, n)| hit as f64 / n as f64).sum();
    Ok(sum / tally.len() as f64)
}

/// One row of a metrics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub run_id: String,
    pub model_kind: String,
    pub dataset_step: usize,
    pub seed: usize,
    pub k: usize,
    pub accuracy: f64,
}

pub const METRICS_HEADER: &str = "run_id,model_kind,dataset_step,seed,k,accuracy";

pub fn write_metrics_csv(path: &Path, rows: &[MetricRow]) -> Result<()> {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.run_id, r.model_kind, r.dataset_step, r.seed, r.k, r.accuracy
        ));
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
