//! The accuracy-versus-coverage experiment: train every model on every
//! coverage step for several disease-sampling seeds, score a fixed
//! evaluation set, and fit accuracy against the number of added diseases.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    balance, dataset_for_labels, labels_of, load_vignettes, split_by_patient, CoveragePlan, LabeledDataset,
};
use crate::ehr::{read_jsonl, ClinicalCase, SymptomUniverse};
use crate::error::{Error, Result};
use crate::metrics::{predict_ranked, top_k_accuracy, DEFAULT_KS};
use crate::models::{train, ModelKind, ModelParams, ModelSpec, TrainConfig};
use crate::seed;
use crate::stats::{fit_slope, mean_std, SlopeFit};

/// Overrides applied on top of the default spec of one model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dropout_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l2_lambda: Option<f64>,
    /// Replaces the shared `train.learning_rate` for this model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
}

impl ModelEntry {
    pub fn new(kind: ModelKind) -> Self {
        ModelEntry {
            kind: kind.short_name().to_string(),
            hidden_sizes: None,
            embedding_dim: None,
            dropout_p: None,
            l2_lambda: None,
            learning_rate: None,
        }
    }

    pub fn kind(&self) -> Result<ModelKind> {
        self.kind.parse()
    }

    pub fn spec(&self, input_dim: usize, n_classes: usize) -> Result<ModelSpec> {
        let mut s = ModelSpec::new(self.kind()?, input_dim, n_classes);
        if let Some(h) = &self.hidden_sizes {
            s.hidden_sizes = h.clone();
        }
        if let Some(e) = self.embedding_dim {
            s.embedding_dim = e;
        }
        if let Some(p) = self.dropout_p {
            s.dropout_p = p;
        }
        if let Some(l) = self.l2_lambda {
            s.l2_lambda = l;
        }
        s.validate()?;
        Ok(s)
    }

    /// The shared training settings with this model's overrides applied.
    pub fn train_config(&self, shared: &TrainConfig) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate.unwrap_or(shared.learning_rate),
            ..shared.clone()
        }
    }
}

fn default_models() -> Vec<ModelEntry> {
    vec![
        ModelEntry::new(ModelKind::LogisticRegression),
        ModelEntry::new(ModelKind::Mlp),
    ]
}

/// Sweep settings. Relative paths are resolved against the directory of the
/// config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Clinical cases (JSONL) used for training.
    pub cases: PathBuf,
    /// Symptom universe (JSON).
    pub universe: PathBuf,
    /// Optional evaluation cases (JSONL). Without this or `vignettes`, a
    /// held-out share of patients with base-disease cases is used.
    pub eval_cases: Option<PathBuf>,
    /// Optional evaluation vignettes (JSONL).
    pub vignettes: Option<PathBuf>,
    /// Base disease set D0. Defaults to the evaluation labels, or to the
    /// first `n_base` labels in sorted order.
    pub base_diseases: Option<Vec<String>>,
    pub n_base: Option<usize>,
    /// Extra disease pool. Defaults to every other label in the cases.
    pub pool: Option<Vec<String>>,
    pub n_steps: usize,
    pub step_size: usize,
    pub n_seeds: usize,
    pub models: Vec<ModelEntry>,
    pub train: TrainConfig,
    pub cap: usize,
    pub ks: Vec<usize>,
    pub val_fraction: f64,
    /// Share of patients held out for evaluation when no evaluation file
    /// is given.
    pub test_fraction: f64,
    pub master_seed: u64,
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            cases: PathBuf::from("cases.jsonl"),
            universe: PathBuf::from("universe.json"),
            eval_cases: None,
            vignettes: None,
            base_diseases: None,
            n_base: None,
            pool: None,
            n_steps: 5,
            step_size: 20,
            n_seeds: 5,
            models: default_models(),
            train: TrainConfig::default(),
            cap: 300,
            ks: DEFAULT_KS.to_vec(),
            val_fraction: 0.1,
            test_fraction: 0.2,
            master_seed: 0,
            workers: 1,
        }
    }
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(dir);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("sweep config serializes")
    }

    pub fn resolve_paths(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        fix(&mut self.cases);
        fix(&mut self.universe);
        if let Some(p) = &mut self.eval_cases {
            fix(p);
        }
        if let Some(p) = &mut self.vignettes {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_seeds == 0 {
            return Err(Error::invalid_arg("n_seeds must be at least 1"));
        }
        if self.models.is_empty() {
            return Err(Error::invalid_arg("no models configured"));
        }
        for m in &self.models {
            m.spec(2, 2)?;
            m.train_config(&self.train).validate()?;
        }
        let kinds: BTreeSet<_> = self.models.iter().map(|m| m.kind.clone()).collect();
        if kinds.len() != self.models.len() {
            return Err(Error::invalid_arg("each model kind may appear once"));
        }
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(Error::invalid_arg("ks must be non-empty and positive"));
        }
        if self.cap == 0 {
            return Err(Error::invalid_arg("cap must be at least 1"));
        }
        if self.eval_cases.is_some() && self.vignettes.is_some() {
            return Err(Error::invalid_arg("give eval_cases or vignettes, not both"));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::invalid_arg("test_fraction must lie in (0, 1)"));
        }
        if self.workers == 0 {
            return Err(Error::invalid_arg("workers must be at least 1"));
        }
        self.train.validate()
    }
}

/// Everything a sweep reads, loaded into memory.
#[derive(Debug, Clone)]
pub struct SweepInputs {
    pub cases: Vec<ClinicalCase>,
    pub universe: SymptomUniverse,
    pub eval: Option<EvalSource>,
}

#[derive(Debug, Clone)]
pub enum EvalSource {
    Cases(Vec<ClinicalCase>),
    /// Already encoded, with its own label index.
    Dataset(LabeledDataset),
}

impl SweepInputs {
    pub fn load(cfg: &SweepConfig) -> Result<Self> {
        let universe = SymptomUniverse::load(&cfg.universe)?;
        let cases: Vec<ClinicalCase> = read_jsonl(&cfg.cases)?;
        let eval = if let Some(p) = &cfg.eval_cases {
            Some(EvalSource::Cases(read_jsonl(p)?))
        } else if let Some(p) = &cfg.vignettes {
            let labels = match &cfg.base_diseases {
                Some(b) => b.clone(),
                None => labels_of(&cases),
            };
            let load = load_vignettes(p, &universe, &labels)?;
            let used: BTreeSet<usize> = load.dataset.examples.iter().map(|e| e.label).collect();
            // keep only the labels that actually occur
            let kept: Vec<String> = used.iter().map(|&i| labels[i].clone()).collect();
            let mut ds = load.dataset;
            for e in &mut ds.examples {
                e.label = kept.iter().position(|l| *l == labels[e.label]).expect("label kept");
            }
            ds.label_index = kept;
            Some(EvalSource::Dataset(ds))
        } else {
            None
        };
        Ok(SweepInputs { cases, universe, eval })
    }
}

/// Splits shared by every run of a sweep.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub base: Vec<String>,
    pub pool: Vec<String>,
    pub train_cases: Vec<ClinicalCase>,
    pub val_cases: Vec<ClinicalCase>,
    /// Encoded with `base` as label index.
    pub eval: LabeledDataset,
}

/// Seed of the disease draw for seed index `seed_index`.
pub fn plan_seed(master: u64, seed_index: usize) -> u64 {
    seed::derive(&[master, seed::hash_str("plan"), seed_index as u64])
}

/// Seed of the class-balancing draw; independent of the step so the base
/// labels are resampled identically at every step.
pub fn balance_seed(master: u64, seed_index: usize) -> u64 {
    seed::derive(&[master, seed::hash_str("balance"), seed_index as u64])
}

/// Training seed of one run.
pub fn run_seed(master: u64, step: usize, seed_index: usize, kind: ModelKind) -> u64 {
    seed::derive(&[
        master,
        step as u64,
        seed_index as u64,
        seed::hash_str(kind.short_name()),
    ])
}

/// Resolves base and pool, holds out evaluation patients when needed, and
/// splits the remaining cases into training and validation patients.
pub fn prepare(cfg: &SweepConfig, inputs: &SweepInputs) -> Result<Prepared> {
    cfg.validate()?;
    let all_labels = labels_of(&inputs.cases);
    let eval_labels: Option<Vec<String>> = match &inputs.eval {
        Some(EvalSource::Cases(c)) => Some(labels_of(c)),
        Some(EvalSource::Dataset(d)) => Some(d.label_index.clone()),
        None => None,
    };
    let base = match (&cfg.base_diseases, cfg.n_base, &eval_labels) {
        (Some(b), _, _) => b.clone(),
        (None, Some(n), _) => {
            if n > all_labels.len() {
                return Err(Error::invalid_arg(format!(
                    "n_base = {n} but the cases have {} labels",
                    all_labels.len()
                )));
            }
            all_labels[..n].to_vec()
        }
        (None, None, Some(l)) => l.clone(),
        (None, None, None) => {
            return Err(Error::invalid_arg(
                "set base_diseases or n_base when no evaluation file is given",
            ))
        }
    };
    let base_set: BTreeSet<&String> = base.iter().collect();
    let pool = match &cfg.pool {
        Some(p) => p.clone(),
        None => all_labels.iter().filter(|l| !base_set.contains(l)).cloned().collect(),
    };
    let present: BTreeSet<&String> = all_labels.iter().collect();
    if let Some(missing) = base.iter().chain(&pool).find(|l| !present.contains(l)) {
        return Err(Error::InvalidInput(format!("no cases for disease `{missing}`")));
    }
    // validates pool size and disjointness
    CoveragePlan::new(&base, &pool, cfg.n_steps, cfg.step_size, 0)?;

    let (pool_cases, eval) = match &inputs.eval {
        Some(EvalSource::Cases(c)) => {
            if let Some(l) = labels_of(c).into_iter().find(|l| !base_set.contains(l)) {
                return Err(Error::InvalidInput(format!(
                    "evaluation label `{l}` is not a base disease"
                )));
            }
            (
                inputs.cases.clone(),
                LabeledDataset::from_cases(c, base.clone(), &inputs.universe)?,
            )
        }
        Some(EvalSource::Dataset(d)) => (inputs.cases.clone(), d.relabel(&base)?),
        None => {
            let (rest, test) = split_by_patient(
                &inputs.cases,
                cfg.test_fraction,
                seed::derive(&[cfg.master_seed, seed::hash_str("test")]),
            )?;
            let test: Vec<ClinicalCase> = test.into_iter().filter(|c| base_set.contains(&c.label)).collect();
            (rest, LabeledDataset::from_cases(&test, base.clone(), &inputs.universe)?)
        }
    };
    if eval.is_empty() {
        return Err(Error::InvalidInput("evaluation set is empty".into()));
    }
    let (train_cases, val_cases) = split_by_patient(
        &pool_cases,
        cfg.val_fraction,
        seed::derive(&[cfg.master_seed, seed::hash_str("val")]),
    )?;
    Ok(Prepared {
        base,
        pool,
        train_cases,
        val_cases,
        eval,
    })
}

/// Accuracy of one (model, step, seed) run at one `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub model_kind: String,
    pub dataset_step: usize,
    pub n_added_diseases: usize,
    pub seed: usize,
    pub k: usize,
    pub accuracy: f64,
}

impl SweepRecord {
    pub fn run_id(&self) -> String {
        format!("{}-step{}-seed{}", self.model_kind, self.dataset_step, self.seed)
    }
}

/// A trained run and its scores.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub params: ModelParams,
    pub records: Vec<SweepRecord>,
    pub epochs: usize,
}

/// Builds the split for `(step, seed_index)`, balances it, trains `model`
/// and scores the evaluation set.
pub fn run_one(
    cfg: &SweepConfig,
    prepared: &Prepared,
    universe: &SymptomUniverse,
    model: &ModelEntry,
    step: usize,
    seed_index: usize,
) -> Result<RunResult> {
    let kind = model.kind()?;
    let plan = CoveragePlan::new(
        &prepared.base,
        &prepared.pool,
        cfg.n_steps,
        cfg.step_size,
        plan_seed(cfg.master_seed, seed_index),
    )?;
    let labels = plan.labels_at(step);
    let train_ds = dataset_for_labels(&prepared.train_cases, labels.clone(), universe)?;
    let val_ds = dataset_for_labels(&prepared.val_cases, labels.clone(), universe)?;
    let balanced = balance(&train_ds, cfg.cap, balance_seed(cfg.master_seed, seed_index))?;
    let spec = model.spec(2 * universe.len(), labels.len())?;
    let tcfg = TrainConfig {
        seed: run_seed(cfg.master_seed, step, seed_index, kind),
        ..model.train_config(&cfg.train)
    };
    let (mut params, log) = train(&spec, &balanced, &val_ds, &tcfg)?;
    params.attach_universe(universe)?;
    let eval = prepared.eval.relabel(&labels)?;
    let preds = predict_ranked(&params, &eval)?;
    let gold: Vec<usize> = eval.examples.iter().map(|e| e.label).collect();
    let ks: Vec<usize> = cfg.ks.iter().map(|&k| k.min(labels.len())).collect();
    let acc = top_k_accuracy(&preds, &gold, &ks)?;
    let records = cfg
        .ks
        .iter()
        .zip(&ks)
        .map(|(&k, kk)| SweepRecord {
            model_kind: kind.short_name().to_string(),
            dataset_step: step,
            n_added_diseases: step * cfg.step_size,
            seed: seed_index,
            k,
            accuracy: acc[kk],
        })
        .collect();
    Ok(RunResult {
        params,
        records,
        epochs: log.epochs.len(),
    })
}

/// Runs every (model, step, seed) combination on a pool of `cfg.workers`
/// threads. Records are sorted by model, step, seed and k.
pub fn run_sweep(cfg: &SweepConfig, inputs: &SweepInputs) -> Result<Vec<SweepRecord>> {
    let prepared = prepare(cfg, inputs)?;
    let mut jobs = Vec::new();
    for (m, model) in cfg.models.iter().enumerate() {
        for step in 0..=cfg.n_steps {
            for s in 0..cfg.n_seeds {
                jobs.push((m, model, step, s));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::invalid_arg(e.to_string()))?;
    let results: Vec<Result<(usize, Vec<SweepRecord>)>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(m, model, step, s)| {
                run_one(cfg, &prepared, &inputs.universe, model, step, s)
                    .map(|r| (m, r.records))
                    .map_err(|e| Error::Run {
                        step,
                        seed: s,
                        model: model.kind.clone(),
                        source: Box::new(e),
                    })
            })
            .collect()
    });
    let mut tagged = Vec::new();
    for r in results {
        let (m, recs) = r?;
        tagged.extend(recs.into_iter().map(|rec| (m, rec)));
    }
    tagged.sort_by(|(ma, a), (mb, b)| (ma, a.dataset_step, a.seed, a.k).cmp(&(mb, b.dataset_step, b.seed, b.k)));
    Ok(tagged.into_iter().map(|(_, r)| r).collect())
}

pub const RECORDS_HEADER: &str = "run_id,model_kind,dataset_step,n_added_diseases,seed,k,accuracy";

pub fn records_to_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from(RECORDS_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.run_id(),
            r.model_kind,
            r.dataset_step,
            r.n_added_diseases,
            r.seed,
            r.k,
            r.accuracy
        );
    }
    out
}

pub fn parse_records_csv(text: &str) -> Result<Vec<SweepRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == RECORDS_HEADER => {}
        _ => return Err(Error::InvalidInput("records CSV header not recognized".into())),
    }
    let bad = |line: usize, msg: &str| Error::Parse {
        path: PathBuf::from("<records>"),
        line: line + 1,
        message: msg.to_string(),
    };
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad(i, "expected 7 fields"));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad(i, "bad integer"));
        out.push(SweepRecord {
            model_kind: f[1].to_string(),
            dataset_step: num(f[2])?,
            n_added_diseases: num(f[3])?,
            seed: num(f[4])?,
            k: num(f[5])?,
            accuracy: f[6].parse().map_err(|_| bad(i, "bad accuracy"))?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRow {
    pub model_kind: String,
    pub k: usize,
    pub fit: SlopeFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRow {
    pub model_kind: String,
    pub k: usize,
    pub dataset_step: usize,
    pub n_added_diseases: usize,
    pub n_seeds: usize,
    /// In percent.
    pub mean: f64,
    pub std: f64,
}

/// Slope fits per (model, k) and per-step means with seed standard
/// deviations. Accuracies enter both in percent, so `beta_d` is percentage
/// points per added disease.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub fits: Vec<FitRow>,
    pub steps: Vec<StepRow>,
}

pub fn summarize(records: &[SweepRecord]) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::InvalidInput("no records to summarize".into()));
    }
    let mut groups: BTreeMap<(String, usize), Vec<&SweepRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.model_kind.clone(), r.k)).or_default().push(r);
    }
    let mut fits = Vec::new();
    let mut steps = Vec::new();
    for ((model, k), rs) in &groups {
        let points: Vec<(f64, f64)> = rs
            .iter()
            .map(|r| (r.n_added_diseases as f64, 100.0 * r.accuracy))
            .collect();
        if let Ok(fit) = fit_slope(&points) {
            fits.push(FitRow {
                model_kind: model.clone(),
                k: *k,
                fit,
            });
        }
        let mut by_step: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
        for r in rs {
            by_step
                .entry((r.dataset_step, r.n_added_diseases))
                .or_default()
                .push(100.0 * r.accuracy);
        }
        for ((step, added), vals) in by_step {
            let (mean, std) = mean_std(&vals);
            steps.push(StepRow {
                model_kind: model.clone(),
                k: *k,
                dataset_step: step,
                n_added_diseases: added,
                n_seeds: vals.len(),
                mean,
                std,
            });
        }
    }
    Ok(Summary { fits, steps })
}

impl Summary {
    pub fn fit(&self, model: &str, k: usize) -> Option<&SlopeFit> {
        self.fits
            .iter()
            .find(|f| f.model_kind == model && f.k == k)
            .map(|f| &f.fit)
    }

    pub fn step_means(&self, model: &str, k: usize) -> Vec<&StepRow> {
        self.steps
            .iter()
            .filter(|s| s.model_kind == model && s.k == k)
            .collect()
    }

    pub fn fits_csv(&self) -> String {
        let mut out = String::from("model_kind,k,beta_d,beta_m,std_err,t_value,p_value,n_points\n");
        for f in &self.fits {
            let s = &f.fit;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                f.model_kind, f.k, s.beta_d, s.beta_m, s.std_err, s.t_value, s.p_value, s.n_points
            );
        }
        out
    }

    pub fn steps_csv(&self) -> String {
        let mut out = String::from("model_kind,k,dataset_step,n_added_diseases,n_seeds,mean,std\n");
        for s in &self.steps {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.model_kind, s.k, s.dataset_step, s.n_added_diseases, s.n_seeds, s.mean, s.std
            );
        }
        out
    }

    /// One `x,y,yerr` table per (model, k), keyed by file name.
    pub fn plot_data(&self) -> BTreeMap<String, String> {
        let mut files: BTreeMap<String, String> = BTreeMap::new();
        for s in &self.steps {
            let out = files
                .entry(format!("plot_{}_top{}.csv", s.model_kind, s.k))
                .or_insert_with(|| String::from("x,y,yerr\n"));
            let _ = writeln!(out, "{},{},{}", s.n_added_diseases, s.mean, s.std);
        }
        files
    }

    /// Writes `summary.csv`, `steps.csv` and the plot files into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = vec![
            ("summary.csv".to_string(), self.fits_csv()),
            ("steps.csv".to_string(), self.steps_csv()),
        ];
        files.extend(self.plot_data());
        let mut written = Vec::new();
        for (name, body) in files {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
            written.push(p);
        }
        Ok(written)
    }
}
