//! Feature encoding, patient-level splits, class balancing and nested
//! coverage datasets.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ehr::{read_jsonl, ClinicalCase, Finding, Polarity, SymptomUniverse};
use crate::error::{Error, Result};
use crate::seed;

/// Sparse binary vector of length `2K`: index `i` is "symptom i present",
/// index `K + i` is "symptom i absent". Both may be set; neither means unknown.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeatureVector {
    active: Vec<u32>,
    dim: u32,
}

impl FeatureVector {
    pub fn from_indices(mut active: Vec<u32>, dim: usize) -> Result<Self> {
        active.sort_unstable();
        active.dedup();
        if let Some(&last) = active.last() {
            if last as usize >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: last as usize + 1,
                });
            }
        }
        Ok(FeatureVector {
            active,
            dim: dim as u32,
        })
    }

    pub fn zeros(dim: usize) -> Self {
        FeatureVector {
            active: Vec::new(),
            dim: dim as u32,
        }
    }

    /// Sorted indices of the set bits.
    pub fn active(&self) -> &[u32] {
        &self.active
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        for &i in &self.active {
            v[i as usize] = 1.0;
        }
        v
    }
}

pub fn encode_findings(findings: &BTreeSet<Finding>, universe: &SymptomUniverse) -> Result<FeatureVector> {
    let k = universe.len();
    let mut active = Vec::with_capacity(findings.len());
    for f in findings {
        let i = universe
            .index_of(&f.symptom)
            .ok_or_else(|| Error::UnknownSymptom(f.symptom.clone()))?;
        active.push(match f.polarity {
            Polarity::Present => i as u32,
            Polarity::Absent => (k + i) as u32,
        });
    }
    FeatureVector::from_indices(active, 2 * k)
}

pub fn encode_case(case: &ClinicalCase, universe: &SymptomUniverse) -> Result<FeatureVector> {
    encode_findings(&case.findings, universe)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub features: FeatureVector,
    pub label: usize,
    /// Originating patient, when known.
    #[serde(default)]
    pub patient_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub examples: Vec<Example>,
    pub label_index: Vec<String>,
    /// `2K` for the universe the features were encoded against.
    pub feature_dim: usize,
}

impl LabeledDataset {
    pub fn n_labels(&self) -> usize {
        self.label_index.len()
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn label_of(&self, name: &str) -> Option<usize> {
        self.label_index.iter().position(|l| l == name)
    }

    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_labels()];
        for e in &self.examples {
            counts[e.label] += 1;
        }
        counts
    }

    /// Encodes `cases` against `label_index`. Cases whose label is not in
    /// the index are an error.
    pub fn from_cases(cases: &[ClinicalCase], label_index: Vec<String>, universe: &SymptomUniverse) -> Result<Self> {
        let lookup: HashMap<&str, usize> = label_index.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let mut examples = Vec::with_capacity(cases.len());
        for c in cases {
            let label = *lookup
                .get(c.label.as_str())
                .ok_or_else(|| Error::UnknownLabel(c.label.clone()))?;
            examples.push(Example {
                features: encode_case(c, universe)?,
                label,
                patient_id: c.patient_id.clone(),
            });
        }
        Ok(LabeledDataset {
            examples,
            label_index,
            feature_dim: 2 * universe.len(),
        })
    }

    /// Re-indexes this dataset's examples against a superset label index.
    pub fn relabel(&self, label_index: &[String]) -> Result<Self> {
        let map: Vec<usize> = self
            .label_index
            .iter()
            .map(|l| {
                label_index
                    .iter()
                    .position(|x| x == l)
                    .ok_or_else(|| Error::UnknownLabel(l.clone()))
            })
            .collect::<Result<_>>()?;
        Ok(LabeledDataset {
            examples: self
                .examples
                .iter()
                .map(|e| Example {
                    label: map[e.label],
                    ..e.clone()
                })
                .collect(),
            label_index: label_index.to_vec(),
            feature_dim: self.feature_dim,
        })
    }
}

/// Sorted, distinct labels of a case list.
pub fn labels_of(cases: &[ClinicalCase]) -> Vec<String> {
    cases
        .iter()
        .map(|c| c.label.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Holds out `round(val_fraction × patients)` patients (at least one, and at
/// least one left for training) with all of their cases.
pub fn split_by_patient(
    cases: &[ClinicalCase],
    val_fraction: f64,
    seed: u64,
) -> Result<(Vec<ClinicalCase>, Vec<ClinicalCase>)> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::invalid_arg("val_fraction must lie in (0, 1)"));
    }
    let mut patients: Vec<&str> = cases
        .iter()
        .map(|c| c.patient_id.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if patients.len() < 2 {
        return Err(Error::invalid_arg("need at least two patients to split"));
    }
    let n_val = ((val_fraction * patients.len() as f64).round() as usize).clamp(1, patients.len() - 1);
    patients.shuffle(&mut seed::rng(seed));
    let held: BTreeSet<&str> = patients[..n_val].iter().copied().collect();
    let (val, train): (Vec<_>, Vec<_>) = cases
        .iter()
        .cloned()
        .partition(|c| held.contains(c.patient_id.as_str()));
    Ok((train, val))
}

/// Resamples every label to exactly `cap` examples: without replacement when
/// it has more, with replacement when it has fewer, untouched when equal.
pub fn balance(train: &LabeledDataset, cap: usize, seed: u64) -> Result<LabeledDataset> {
    if cap == 0 {
        return Err(Error::invalid_arg("cap must be at least 1"));
    }
    let mut by_label: Vec<Vec<usize>> = vec![Vec::new(); train.n_labels()];
    for (i, e) in train.examples.iter().enumerate() {
        by_label[e.label].push(i);
    }
    if let Some(l) = by_label.iter().position(Vec::is_empty) {
        return Err(Error::EmptyLabel(train.label_index[l].clone()));
    }
    let mut rng = seed::rng(seed);
    let mut examples = Vec::with_capacity(cap * train.n_labels());
    for idx in &by_label {
        let n = idx.len();
        if n > cap {
            let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, n, cap).into_vec();
            picked.sort_unstable();
            examples.extend(picked.into_iter().map(|i| train.examples[idx[i]].clone()));
        } else if n < cap {
            examples.extend((0..cap).map(|_| train.examples[idx[rng.random_range(0..n)]].clone()));
        } else {
            examples.extend(idx.iter().map(|&i| train.examples[i].clone()));
        }
    }
    Ok(LabeledDataset {
        examples,
        label_index: train.label_index.clone(),
        feature_dim: train.feature_dim,
    })
}

/// Which extra diseases are added at each coverage step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveragePlan {
    pub base_diseases: Vec<String>,
    pub steps: Vec<Vec<String>>,
    pub seed: u64,
}

impl CoveragePlan {
    pub fn new(
        base_diseases: &[String],
        extra_pool: &[String],
        n_steps: usize,
        step_size: usize,
        seed: u64,
    ) -> Result<Self> {
        let base: BTreeSet<&String> = base_diseases.iter().collect();
        if base.len() != base_diseases.len() {
            return Err(Error::invalid_arg("duplicate base disease"));
        }
        let pool: BTreeSet<&String> = extra_pool.iter().collect();
        if pool.len() != extra_pool.len() {
            return Err(Error::invalid_arg("duplicate disease in extra pool"));
        }
        if let Some(d) = pool.iter().find(|d| base.contains(*d)) {
            return Err(Error::invalid_arg(format!("`{d}` is in both base and pool")));
        }
        let needed = n_steps * step_size;
        if extra_pool.len() < needed {
            return Err(Error::invalid_arg(format!(
                "pool has {} diseases, {n_steps} steps of {step_size} need {needed}",
                extra_pool.len()
            )));
        }
        let mut rng = seed::rng(seed);
        let drawn: Vec<String> = rand::seq::index::sample(&mut rng, extra_pool.len(), needed)
            .into_iter()
            .map(|i| extra_pool[i].clone())
            .collect();
        let steps = if step_size == 0 {
            vec![Vec::new(); n_steps]
        } else {
            drawn.chunks(step_size).map(<[String]>::to_vec).collect()
        };
        Ok(CoveragePlan {
            base_diseases: base_diseases.to_vec(),
            steps,
            seed,
        })
    }

    /// Label index of dataset `step` (0 is the base set): base labels first,
    /// then added diseases in draw order.
    pub fn labels_at(&self, step: usize) -> Vec<String> {
        let mut labels = self.base_diseases.clone();
        for s in &self.steps[..step] {
            labels.extend(s.iter().cloned());
        }
        labels
    }

    pub fn n_datasets(&self) -> usize {
        self.steps.len() + 1
    }
}

/// Cases restricted to `labels`, encoded with that label order. Every label's
/// cases appear in corpus order, so a label shared by two datasets has the
/// same examples in both.
pub fn dataset_for_labels(
    all_cases: &[ClinicalCase],
    labels: Vec<String>,
    universe: &SymptomUniverse,
) -> Result<LabeledDataset> {
    let keep: BTreeSet<&str> = labels.iter().map(String::as_str).collect();
    let selected: Vec<ClinicalCase> = all_cases
        .iter()
        .filter(|c| keep.contains(c.label.as_str()))
        .cloned()
        .collect();
    LabeledDataset::from_cases(&selected, labels, universe)
}

/// Datasets D0, D+step, D+2·step, ... for one disease-sampling seed.
pub fn make_coverage_splits(
    all_cases: &[ClinicalCase],
    base_diseases: &[String],
    extra_pool: &[String],
    n_steps: usize,
    step_size: usize,
    seed: u64,
    universe: &SymptomUniverse,
) -> Result<Vec<LabeledDataset>> {
    let plan = CoveragePlan::new(base_diseases, extra_pool, n_steps, step_size, seed)?;
    (0..plan.n_datasets())
        .map(|s| dataset_for_labels(all_cases, plan.labels_at(s), universe))
        .collect()
}

/// One evaluation vignette: findings plus gold diagnosis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vignette {
    pub findings: Vec<Finding>,
    pub diagnosis: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VignetteLoad {
    pub dataset: LabeledDataset,
    /// (1-based row, symptom) pairs skipped because the symptom is not in
    /// the universe.
    pub skipped: Vec<(usize, String)>,
}

pub fn vignettes_to_dataset(
    rows: &[Vignette],
    universe: &SymptomUniverse,
    label_index: &[String],
) -> Result<VignetteLoad> {
    let lookup: BTreeMap<&str, usize> = label_index.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let bad: Vec<String> = rows
        .iter()
        .enumerate()
        .filter(|(_, v)| !lookup.contains_key(v.diagnosis.as_str()))
        .map(|(i, v)| format!("row {}: `{}`", i + 1, v.diagnosis))
        .collect();
    if !bad.is_empty() {
        return Err(Error::InvalidInput(format!(
            "vignette diagnoses outside the label index: {}",
            bad.join(", ")
        )));
    }
    let mut skipped = Vec::new();
    let mut examples = Vec::with_capacity(rows.len());
    for (i, v) in rows.iter().enumerate() {
        let mut kept = BTreeSet::new();
        for f in &v.findings {
            if universe.contains(&f.symptom) {
                kept.insert(f.clone());
            } else {
                skipped.push((i + 1, f.symptom.clone()));
            }
        }
        examples.push(Example {
            features: encode_findings(&kept, universe)?,
            label: lookup[v.diagnosis.as_str()],
            patient_id: format!("vignette-{}", i + 1),
        });
    }
    Ok(VignetteLoad {
        dataset: LabeledDataset {
            examples,
            label_index: label_index.to_vec(),
            feature_dim: 2 * universe.len(),
        },
        skipped,
    })
}

/// Loads a vignette JSONL file (`{findings:[{symptom, polarity}], diagnosis}`).
pub fn load_vignettes(path: &Path, universe: &SymptomUniverse, label_index: &[String]) -> Result<VignetteLoad> {
    let rows: Vec<Vignette> = read_jsonl(path)?;
    vignettes_to_dataset(&rows, universe, label_index)
}
