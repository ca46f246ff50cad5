use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use dxcover::cases::build_cases_with_stats;
use dxcover::dataset::{balance, labels_of, load_vignettes, split_by_patient, LabeledDataset};
use dxcover::ehr::{load_corpus, load_phenotypes, read_jsonl, write_jsonl, ClinicalCase, SymptomUniverse};
use dxcover::metrics::{mean_class_accuracy, predict_ranked, top_k_accuracy, write_metrics_csv, MetricRow};
use dxcover::models::{top_weights, train, ModelKind, ModelParams, ModelSpec, TrainConfig};
use dxcover::sweep::{parse_records_csv, records_to_csv, run_sweep, summarize, SweepConfig, SweepInputs};
use dxcover::synth::{generate_timelines_with_truth, generate_world_with, GenConfig, ScenarioMix, WorldParams};
use dxcover::text::{FindingExtractor, NegationRules};
use dxcover::{seed, Error};

#[derive(Parser)]
#[command(
    name = "dxcover",
    version,
    about = "Diagnosis models from EHR timelines and the accuracy/coverage trade-off"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic disease world and patient corpus.
    Generate(GenerateArgs),
    /// Build clinical cases from a corpus and a phenotype map.
    BuildCases(BuildCasesArgs),
    /// Train one model on a case file.
    Train(TrainArgs),
    /// Score a trained model on vignettes or cases.
    Eval(EvalArgs),
    /// Run the coverage sweep described by a config file.
    Sweep(SweepArgs),
    /// Fit slopes and per-step means from a records CSV.
    Analyze(AnalyzeArgs),
    /// Print the largest weights of a logistic regression model.
    Report(ReportArgs),
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn open_unit_interval(s: &str) -> Result<f64, String> {
    let v = unit_interval(s)?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside (0, 1)"))
    }
}

fn model_kind(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(clap::Args, Serialize)]
struct GenerateArgs {
    #[arg(long, default_value_t = 15)]
    diseases: usize,
    #[arg(long, default_value_t = 200)]
    symptoms: usize,
    #[arg(long, default_value_t = 1000)]
    patients: usize,
    /// Mean pairwise support overlap between diseases.
    #[arg(long, default_value_t = 0.3, value_parser = unit_interval)]
    overlap: f64,
    /// Power-law exponent of disease prevalence.
    #[arg(long, default_value_t = 0.0)]
    skew: f64,
    /// Scenario weights, e.g. `A=0.6,B=0.2,C=0.1,D=0.1`.
    #[arg(long, default_value = "A=0.6,B=0.2,C=0.1,D=0.1")]
    mix: String,
    /// Expected present-symptom mentions per index note.
    #[arg(long, default_value_t = 5.0)]
    findings: f64,
    /// Expected negated mentions per index note.
    #[arg(long, default_value_t = 3.0)]
    negated: f64,
    #[arg(long, default_value_t = 30)]
    tau: i64,
    #[arg(long, default_value_t = 0.05, value_parser = unit_interval)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(clap::Args, Serialize)]
struct BuildCasesArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    phenotypes: PathBuf,
    #[arg(long)]
    universe: PathBuf,
    /// Negation rules (TOML); built-in rules when omitted.
    #[arg(long)]
    negation: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    tau: i64,
    #[arg(long, default_value = "cases.jsonl")]
    out: PathBuf,
}

#[derive(clap::Args, Serialize)]
struct TrainArgs {
    #[arg(long, value_parser = model_kind)]
    model: ModelKind,
    #[arg(long)]
    cases: PathBuf,
    #[arg(long)]
    universe: PathBuf,
    #[arg(long, default_value_t = 300)]
    cap: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.1, value_parser = open_unit_interval)]
    val_fraction: f64,
    #[arg(long, default_value_t = 128)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.01)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 5)]
    patience: usize,
    /// L2 strength; the model default when omitted.
    #[arg(long)]
    l2: Option<f64>,
    /// Hidden layer widths, e.g. `256,128`.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    embedding_dim: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long, default_value = "model.bin")]
    out: PathBuf,
}

#[derive(clap::Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, conflicts_with = "cases", required_unless_present = "cases")]
    vignettes: Option<PathBuf>,
    #[arg(long)]
    cases: Option<PathBuf>,
    /// Universe to encode with; the one stored in the model when omitted.
    #[arg(long)]
    universe: Option<PathBuf>,
    #[arg(long, default_value = "1,3,5,10,20", value_delimiter = ',')]
    ks: Vec<usize>,
    #[arg(long, default_value = "metrics.csv")]
    out: PathBuf,
}

#[derive(clap::Args, Serialize)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's worker count.
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "records.csv")]
    out: PathBuf,
}

#[derive(clap::Args, Serialize)]
struct AnalyzeArgs {
    #[arg(long, default_value = "records.csv")]
    records: PathBuf,
    #[arg(long, default_value = "analysis")]
    out: PathBuf,
}

#[derive(clap::Args, Serialize)]
struct ReportArgs {
    #[arg(long)]
    model: PathBuf,
    /// Diseases to report; all when omitted.
    #[arg(long)]
    disease: Vec<String>,
    #[arg(long, default_value_t = 5)]
    top: usize,
    /// Also write the table as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(m) => Failure::Usage(m),
            other => Failure::Run(other),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

#[derive(Serialize)]
struct Manifest {
    command: String,
    config_hash: String,
    master_seed: Option<u64>,
    inputs: BTreeMap<String, String>,
    tool_version: String,
    outputs: Vec<String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn file_digest(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| {
        Failure::Run(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })?;
    Ok(sha256_hex(&bytes))
}

fn write_manifest<A: Serialize>(
    path: &Path,
    command: &str,
    args: &A,
    master_seed: Option<u64>,
    inputs: &[&Path],
    outputs: &[&Path],
) -> CliResult {
    let mut digests = BTreeMap::new();
    for p in inputs {
        digests.insert(p.display().to_string(), file_digest(p)?);
    }
    let m = Manifest {
        command: command.to_string(),
        config_hash: sha256_hex(&serde_json::to_vec(args).map_err(Error::from)?),
        master_seed,
        inputs: digests,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    let text = serde_json::to_string_pretty(&m).map_err(Error::from)? + "\n";
    write_file(path, text.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| {
            Failure::Run(Error::Io {
                path: dir.to_path_buf(),
                source: e,
            })
        })?;
    }
    std::fs::write(path, bytes).map_err(|e| {
        Failure::Run(Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

/// `out.jsonl` -> `out.manifest.json`
fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn cmd_generate(a: &GenerateArgs) -> CliResult {
    let mix = ScenarioMix::parse(&a.mix)?;
    let world = generate_world_with(&WorldParams {
        mean_positive: a.findings,
        mean_negative: a.negated,
        ..WorldParams::new(a.diseases, a.symptoms, a.overlap, a.skew, a.seed)
    })?;
    let cfg = GenConfig {
        n_patients: a.patients,
        scenario_mix: mix,
        tau: a.tau,
        noise: a.noise,
        seed: a.seed,
        ..GenConfig::default()
    };
    let (corpus, truth) = generate_timelines_with_truth(&world, &cfg)?;
    std::fs::create_dir_all(&a.out).map_err(|e| {
        Failure::Run(Error::Io {
            path: a.out.clone(),
            source: e,
        })
    })?;
    let corpus_path = a.out.join("corpus.jsonl");
    let truth_path = a.out.join("truth.jsonl");
    let world_path = a.out.join("world.json");
    let pheno_path = a.out.join("phenotypes.toml");
    let universe_path = a.out.join("universe.json");
    write_jsonl(&corpus_path, &corpus)?;
    write_jsonl(&truth_path, &truth)?;
    world.save(&world_path)?;
    write_file(
        &pheno_path,
        dxcover::ehr::phenotypes_to_toml(&world.phenotypes()).as_bytes(),
    )?;
    world.universe.save(&universe_path)?;
    let outputs = [&corpus_path, &truth_path, &world_path, &pheno_path, &universe_path].map(|p| p.as_path());
    write_manifest(&a.out.join("manifest.json"), "generate", a, Some(a.seed), &[], &outputs)?;
    println!(
        "generated {} patients over {} diseases and {} symptoms (mean overlap {:.3}) in {}",
        corpus.len(),
        world.profiles.len(),
        world.universe.len(),
        world.mean_pairwise_overlap(),
        a.out.display()
    );
    Ok(())
}

fn cmd_build_cases(a: &BuildCasesArgs) -> CliResult {
    let corpus = load_corpus(&a.corpus)?;
    let phenotypes = load_phenotypes(&a.phenotypes)?;
    let universe = SymptomUniverse::load(&a.universe)?;
    let rules = match &a.negation {
        Some(p) => NegationRules::load(p)?,
        None => NegationRules::default(),
    };
    if a.tau < 1 {
        return Err(Failure::Usage("tau must be at least 1".into()));
    }
    let extractor = FindingExtractor::new(&universe, &rules);
    let mut all = Vec::new();
    let mut counts = String::from("disease,patients,runs,resolved,confounded,followed_up,empty_findings,cases\n");
    for p in &phenotypes {
        let (cases, s) = build_cases_with_stats(&corpus, &p.disease, p, &phenotypes, &extractor, a.tau);
        if cases.is_empty() {
            eprintln!("warning: no cases for `{}`", p.disease);
        }
        counts.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            p.disease, s.patients, s.runs, s.resolved, s.confounded, s.followed_up, s.empty_findings, s.cases
        ));
        all.extend(cases);
    }
    write_jsonl(&a.out, &all)?;
    let counts_path = sidecar(&a.out, "counts.csv");
    write_file(&counts_path, counts.as_bytes())?;
    let mut inputs = vec![a.corpus.as_path(), a.phenotypes.as_path(), a.universe.as_path()];
    if let Some(n) = &a.negation {
        inputs.push(n.as_path());
    }
    write_manifest(
        &sidecar(&a.out, "manifest.json"),
        "build-cases",
        a,
        None,
        &inputs,
        &[a.out.as_path(), counts_path.as_path()],
    )?;
    print!("{counts}");
    println!("{} cases written to {}", all.len(), a.out.display());
    Ok(())
}

fn cmd_train(a: &TrainArgs) -> CliResult {
    let universe = SymptomUniverse::load(&a.universe)?;
    let cases: Vec<ClinicalCase> = read_jsonl(&a.cases)?;
    let labels = labels_of(&cases);
    if labels.is_empty() {
        return Err(Failure::Run(Error::InvalidInput("no cases to train on".into())));
    }
    let (train_cases, val_cases) =
        split_by_patient(&cases, a.val_fraction, seed::derive(&[a.seed, seed::hash_str("val")]))?;
    let train_ds = LabeledDataset::from_cases(&train_cases, labels.clone(), &universe)?;
    let val_ds = LabeledDataset::from_cases(&val_cases, labels.clone(), &universe)?;
    let balanced = balance(&train_ds, a.cap, seed::derive(&[a.seed, seed::hash_str("balance")]))?;
    let mut spec = ModelSpec::new(a.model, 2 * universe.len(), labels.len());
    if let Some(l) = a.l2 {
        spec.l2_lambda = l;
    }
    if let Some(h) = &a.hidden {
        spec.hidden_sizes = h.clone();
    }
    if let Some(e) = a.embedding_dim {
        spec.embedding_dim = e;
    }
    if let Some(d) = a.dropout {
        spec.dropout_p = d;
    }
    let cfg = TrainConfig {
        batch_size: a.batch_size,
        learning_rate: a.learning_rate,
        momentum: a.momentum,
        max_epochs: a.epochs,
        early_stop_patience: a.patience,
        seed: a.seed,
    };
    let (mut params, log) = train(&spec, &balanced, &val_ds, &cfg)?;
    params.attach_universe(&universe)?;
    params.save(&a.out)?;
    let log_path = sidecar(&a.out, "log.json");
    write_file(
        &log_path,
        (serde_json::to_string_pretty(&log).map_err(Error::from)? + "\n").as_bytes(),
    )?;
    write_manifest(
        &sidecar(&a.out, "manifest.json"),
        "train",
        a,
        Some(a.seed),
        &[a.cases.as_path(), a.universe.as_path()],
        &[a.out.as_path(), log_path.as_path()],
    )?;
    let last = log.epochs.last();
    println!(
        "trained {} on {} examples ({} labels) for {} epochs; best epoch {} with validation top-1 {:.4}",
        a.model,
        balanced.len(),
        labels.len(),
        log.epochs.len(),
        log.best_epoch,
        log.epochs
            .iter()
            .find(|e| e.epoch == log.best_epoch)
            .map_or(log.initial_val_top1, |e| e.val_top1)
    );
    if let Some(e) = last {
        println!("final train loss {:.4}", e.train_loss);
    }
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> CliResult {
    let params = ModelParams::load(&a.model)?;
    let universe = match &a.universe {
        Some(p) => SymptomUniverse::load(p)?,
        None => SymptomUniverse::from_names(params.symptoms.iter().cloned())?,
    };
    if !params.universe_digest.is_empty() && universe.digest() != params.universe_digest {
        return Err(Failure::Run(Error::InvalidInput(
            "universe does not match the one the model was trained with".into(),
        )));
    }
    let (dataset, input) = if let Some(v) = &a.vignettes {
        let load = load_vignettes(v, &universe, &params.label_index)?;
        if !load.skipped.is_empty() {
            eprintln!(
                "warning: skipped {} out-of-universe symptom mentions",
                load.skipped.len()
            );
            for (row, s) in &load.skipped {
                eprintln!("  row {row}: `{s}`");
            }
        }
        (load.dataset, v.clone())
    } else {
        let p = a.cases.clone().expect("clap requires cases or vignettes");
        let cases: Vec<ClinicalCase> = read_jsonl(&p)?;
        (
            LabeledDataset::from_cases(&cases, params.label_index.clone(), &universe)?,
            p,
        )
    };
    let preds = predict_ranked(&params, &dataset)?;
    let gold: Vec<usize> = dataset.examples.iter().map(|e| e.label).collect();
    let acc = top_k_accuracy(&preds, &gold, &a.ks)?;
    let mca = mean_class_accuracy(&preds, &gold)?;
    let run_id = a
        .model
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let rows: Vec<MetricRow> = acc
        .iter()
        .map(|(&k, &accuracy)| MetricRow {
            run_id: run_id.clone(),
            model_kind: params.spec.kind.short_name().to_string(),
            dataset_step: 0,
            seed: 0,
            k,
            accuracy,
        })
        .collect();
    write_metrics_csv(&a.out, &rows)?;
    write_manifest(
        &sidecar(&a.out, "manifest.json"),
        "eval",
        a,
        None,
        &[a.model.as_path(), input.as_path()],
        &[a.out.as_path()],
    )?;
    println!("{} cases", dataset.len());
    for (k, v) in &acc {
        println!("top-{k:<3} {:.2}%", 100.0 * v);
    }
    println!("mca    {:.2}%", 100.0 * mca);
    Ok(())
}

fn cmd_sweep(a: &SweepArgs) -> CliResult {
    let mut cfg = SweepConfig::load(&a.config)?;
    if let Some(w) = a.workers {
        cfg.workers = w;
    }
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    cfg.validate()?;
    let inputs = SweepInputs::load(&cfg)?;
    let records = run_sweep(&cfg, &inputs)?;
    write_file(&a.out, records_to_csv(&records).as_bytes())?;
    let mut in_paths = vec![a.config.as_path(), cfg.cases.as_path(), cfg.universe.as_path()];
    for p in [&cfg.eval_cases, &cfg.vignettes].into_iter().flatten() {
        in_paths.push(p.as_path());
    }
    // workers do not change results, so they are left out of the hash
    let hashed = SweepConfig {
        workers: 1,
        ..cfg.clone()
    };
    write_manifest(
        &sidecar(&a.out, "manifest.json"),
        "sweep",
        &hashed.to_toml(),
        Some(cfg.master_seed),
        &in_paths,
        &[a.out.as_path()],
    )?;
    println!("{} records written to {}", records.len(), a.out.display());
    Ok(())
}

fn cmd_analyze(a: &AnalyzeArgs) -> CliResult {
    let text = std::fs::read_to_string(&a.records).map_err(|e| {
        Failure::Run(Error::Io {
            path: a.records.clone(),
            source: e,
        })
    })?;
    let records = parse_records_csv(&text)?;
    let summary = summarize(&records)?;
    let written = summary.write(&a.out)?;
    let refs: Vec<&Path> = written.iter().map(PathBuf::as_path).collect();
    write_manifest(
        &a.out.join("manifest.json"),
        "analyze",
        a,
        None,
        &[a.records.as_path()],
        &refs,
    )?;
    println!(
        "{:<14} {:>4} {:>10} {:>10} {:>9} {:>9} {:>10}",
        "model", "k", "beta_D", "beta_M", "std_err", "t", "p"
    );
    for f in &summary.fits {
        let s = &f.fit;
        println!(
            "{:<14} {:>4} {:>10.4} {:>10.3} {:>9.4} {:>9.2} {:>10.3e}",
            f.model_kind, f.k, s.beta_d, s.beta_m, s.std_err, s.t_value, s.p_value
        );
    }
    Ok(())
}

fn cmd_report(a: &ReportArgs) -> CliResult {
    let params = ModelParams::load(&a.model)?;
    let diseases = if a.disease.is_empty() {
        params.label_index.clone()
    } else {
        a.disease.clone()
    };
    let mut tables = Vec::new();
    for d in &diseases {
        let t = top_weights(&params, d, a.top)?;
        let fmt = |v: &[dxcover::models::WeightedFeature]| {
            v.iter()
                .map(|f| format!("{} ({:+.3})", f.name, f.weight))
                .collect::<Vec<_>>()
                .join(", ")
        };
        println!("{d}");
        println!("  positive: {}", fmt(&t.positive));
        println!("  negative: {}", fmt(&t.negative));
        tables.push(t);
    }
    if let Some(p) = &a.json {
        write_file(
            p,
            (serde_json::to_string_pretty(&tables).map_err(Error::from)? + "\n").as_bytes(),
        )?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::BuildCases(a) => cmd_build_cases(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
