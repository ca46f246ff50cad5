//! Acceptance suite. Every criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.
//!
//! Run with `cargo test -p dxcover --test acceptance` (use `--release` for a
//! realistic timing of the coverage sweep).

use std::collections::{BTreeSet, HashSet};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use dxcover::cases::{build_all_cases, resolved_windows, EncounterWindow};
use dxcover::dataset::{balance, Example, FeatureVector, LabeledDataset};
use dxcover::ehr::{ClinicalCase, Encounter, Phenotype, Polarity, SymptomUniverse, Timeline, VisitClass};
use dxcover::metrics::{top_k_accuracy, RankedPrediction};
use dxcover::models::{batch_loss, forward, gradients, Dropout, ModelKind, ModelParams, ModelSpec};
use dxcover::seed::{derive, rng};
use dxcover::stats::{fit_slope, spearman};
use dxcover::sweep::{run_sweep, summarize, ModelEntry, Summary, SweepConfig, SweepInputs};
use dxcover::synth::{generate_timelines, generate_world_with, GenConfig, WorldParams};
use dxcover::text::{
    evaluate_negation, match_entities, parse_negation_corpus, FindingExtractor, NegationRules, NEGATION_MINI_CORPUS,
};

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1: resolved windows

fn enc(time: i64, code: &str, class: VisitClass) -> Encounter {
    Encounter {
        encounter_id: format!("e{time}"),
        time,
        visit_class: class,
        icd_codes: BTreeSet::from([code.to_string()]),
        note: "Patient reports fever.".into(),
    }
}

fn timeline(id: &str, encounters: Vec<Encounter>) -> Timeline {
    Timeline {
        patient_id: id.into(),
        age: None,
        encounters,
    }
}

fn window(id: &str, start_index: usize, end_index: usize, start_time: i64, end_time: i64) -> EncounterWindow {
    EncounterWindow {
        patient_id: id.into(),
        start_index,
        end_index,
        start_time,
        end_time,
    }
}

fn scenarios() -> Outcome {
    let tau = 30;
    let d = Phenotype::new("d", ["D1"]).map_err(|e| e.to_string())?;
    let q = Phenotype::new("q", ["Q1"]).map_err(|e| e.to_string())?;
    let all = vec![d.clone(), q];
    let out = VisitClass::Outpatient;
    let cases: Vec<(&str, Timeline, Vec<EncounterWindow>)> = vec![
        // single coded visit, then nothing for longer than tau
        (
            "A",
            timeline("a", vec![enc(100, "D1", out), enc(200, "Z00", out)]),
            vec![window("a", 0, 0, 100, 100)],
        ),
        // two episodes separated by more than tau
        (
            "B",
            timeline("b", vec![enc(100, "D1", out), enc(300, "D1", out)]),
            vec![window("b", 0, 0, 100, 100), window("b", 1, 1, 300, 300)],
        ),
        // a different phenotype's code within tau of the episode
        (
            "C",
            timeline("c", vec![enc(100, "D1", out), enc(110, "Q1", VisitClass::Inpatient)]),
            vec![],
        ),
        // same-code follow-up within tau extends the window
        (
            "D",
            timeline(
                "d",
                vec![enc(100, "D1", out), enc(115, "D1", out), enc(400, "Z00", out)],
            ),
            vec![window("d", 0, 1, 100, 115)],
        ),
    ];
    let mut got = Vec::new();
    for (name, tl, expected) in &cases {
        let w = resolved_windows(tl, &d, &all, tau);
        check(&w == expected, || {
            format!("scenario {name}: expected {expected:?}, got {w:?}")
        })?;
        got.push(format!("{name}:{}", w.len()));
    }
    Ok(format!("windows {}", got.join(" ")))
}

// 2: gradients

fn gradient_specs() -> Vec<ModelSpec> {
    let (k, l) = (5, 4);
    let lr = ModelSpec {
        l2_lambda: 0.01,
        ..ModelSpec::logistic_regression(2 * k, l)
    };
    let mlp = ModelSpec {
        hidden_sizes: vec![7, 6],
        dropout_p: 0.3,
        l2_lambda: 0.01,
        ..ModelSpec::mlp(2 * k, l)
    };
    let emb = ModelSpec {
        hidden_sizes: vec![6],
        embedding_dim: 4,
        dropout_p: 0.5,
        l2_lambda: 0.01,
        ..ModelSpec::mlp_embedding(2 * k, l)
    };
    vec![lr, mlp, emb]
}

fn random_params(spec: &ModelSpec, seed: u64) -> ModelParams {
    let mut p = ModelParams::init(spec, seed).expect("valid spec");
    let mut r = rng(derive(&[seed, 1]));
    for t in &mut p.tensors {
        for v in &mut t.data {
            *v = r.random_range(-1.0..1.0);
        }
    }
    p
}

fn random_features<R: Rng>(r: &mut R, dim: usize, density: f64) -> FeatureVector {
    let active = (0..dim as u32).filter(|_| r.random_bool(density)).collect();
    FeatureVector::from_indices(active, dim).expect("in range")
}

fn random_batch(seed: u64, dim: usize, n_classes: usize, n: usize) -> Vec<Example> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| Example {
            features: random_features(&mut r, dim, 0.4),
            label: r.random_range(0..n_classes),
            patient_id: format!("p{i}"),
        })
        .collect()
}

fn gradient_check() -> Outcome {
    const EPS: f64 = 1e-5;
    // Below this magnitude both gradients are compared absolutely: central
    // differences carry ~1e-11 of rounding noise.
    const FLOOR: f64 = 1e-6;
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for seed in 0..10u64 {
        for spec in gradient_specs() {
            let mut params = random_params(&spec, derive(&[seed, 7]));
            let batch = random_batch(derive(&[seed, 8]), spec.input_dim, spec.n_classes, 6);
            let dropout = Dropout::Seeded(derive(&[seed, 9]));
            let analytic = gradients(&params, &batch, dropout).map_err(|e| e.to_string())?;
            for t in 0..params.tensors.len() {
                for j in 0..params.tensors[t].data.len() {
                    let orig = params.tensors[t].data[j];
                    params.tensors[t].data[j] = orig + EPS;
                    let up = batch_loss(&params, &batch, dropout).map_err(|e| e.to_string())?;
                    params.tensors[t].data[j] = orig - EPS;
                    let down = batch_loss(&params, &batch, dropout).map_err(|e| e.to_string())?;
                    params.tensors[t].data[j] = orig;
                    let numeric = (up - down) / (2.0 * EPS);
                    let a = analytic.tensors[t][j];
                    let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR);
                    worst = worst.max(rel);
                    checked += 1;
                    check(rel < 1e-4, || {
                        format!(
                            "seed {seed} {} tensor {} [{j}]: analytic {a:e}, numeric {numeric:e}, rel {rel:e}",
                            spec.kind, params.tensors[t].name
                        )
                    })?;
                }
            }
        }
    }
    Ok(format!("{checked} coordinates, max relative error {worst:.2e}"))
}

// 3: normalization

fn normalization() -> Outcome {
    let mut worst = 0.0f64;
    for kind in [ModelKind::LogisticRegression, ModelKind::Mlp, ModelKind::MlpEmbedding] {
        for i in 0..1000u64 {
            let mut r = rng(derive(&[kind as u64, i]));
            let k = r.random_range(1..=40usize);
            let l = r.random_range(2..=30usize);
            let mut spec = ModelSpec::new(kind, 2 * k, l);
            spec.hidden_sizes = vec![16, 8][..r.random_range(1..=2)].to_vec();
            spec.embedding_dim = 8;
            let mut params = ModelParams::init(&spec, i).map_err(|e| e.to_string())?;
            // widen the logits well past the init scale
            let scale = r.random_range(1.0..20.0);
            for t in &mut params.tensors {
                for v in &mut t.data {
                    *v *= scale;
                }
            }
            let density = r.random_range(0.0..0.6);
            let z = random_features(&mut r, 2 * k, density);
            let p = forward(&params, &z, Dropout::Off).map_err(|e| e.to_string())?;
            let dev = (p.iter().sum::<f64>() - 1.0).abs();
            worst = worst.max(dev);
            check(dev < 1e-9 && p.iter().all(|v| (0.0..=1.0).contains(v)), || {
                format!("{kind} pass {i}: sum deviates by {dev:e}")
            })?;
        }
    }
    Ok(format!("3000 passes, max |sum - 1| = {worst:.1e}"))
}

// 4: top-k oracle

fn top_k_oracle() -> Outcome {
    for f in 0..100u64 {
        let mut r = rng(derive(&[44, f]));
        let t = r.random_range(1..=50usize);
        let l = r.random_range(1..=30usize);
        let mut preds = Vec::with_capacity(t);
        let mut gold = Vec::with_capacity(t);
        for i in 0..t {
            let mut ranked: Vec<usize> = (0..l).collect();
            ranked.shuffle(&mut r);
            preds.push(RankedPrediction {
                case_id: i.to_string(),
                ranked_labels: ranked,
            });
            gold.push(r.random_range(0..l));
        }
        let ks: Vec<usize> = (1..=l).filter(|_| r.random_bool(0.5)).chain([l]).collect();
        let got = top_k_accuracy(&preds, &gold, &ks).map_err(|e| e.to_string())?;
        for &k in &ks {
            let mut hits = 0usize;
            for (p, g) in preds.iter().zip(&gold) {
                let mut member = false;
                for label in p.ranked_labels.iter().take(k) {
                    if label == g {
                        member = true;
                    }
                }
                if member {
                    hits += 1;
                }
            }
            let expected = hits as f64 / t as f64;
            check(got.get(&k) == Some(&expected), || {
                format!("fixture {f} k={k}: expected {expected}, got {:?}", got.get(&k))
            })?;
        }
    }
    Ok("100 fixtures match exactly".into())
}

// 5: OLS

fn normal<R: Rng>(r: &mut R) -> f64 {
    // Box-Muller
    let u1: f64 = 1.0 - r.random::<f64>();
    let u2: f64 = r.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn ols() -> Outcome {
    let line: Vec<(f64, f64)> = (0..6)
        .map(|i| (20.0 * i as f64, 50.0 - 0.1 * 20.0 * i as f64))
        .collect();
    let f = fit_slope(&line).map_err(|e| e.to_string())?;
    check((f.beta_d + 0.1).abs() < 1e-9 && (f.beta_m - 50.0).abs() < 1e-9, || {
        format!("exact line fitted as {} x + {}", f.beta_d, f.beta_m)
    })?;
    let n = 30;
    let t_crit = StudentsT::new(0.0, 1.0, (n - 2) as f64)
        .map_err(|e| e.to_string())?
        .inverse_cdf(0.995);
    let mut covered = 0;
    for trial in 0..100u64 {
        let mut r = rng(derive(&[55, trial]));
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let x = 5.0 * i as f64;
                (x, 50.0 - 0.1 * x + 0.5 * normal(&mut r))
            })
            .collect();
        let fit = fit_slope(&pts).map_err(|e| e.to_string())?;
        if (fit.beta_d + 0.1).abs() <= t_crit * fit.std_err {
            covered += 1;
        }
    }
    check(covered >= 98, || {
        format!("true slope inside the 99% CI in only {covered}/100 trials")
    })?;
    Ok(format!(
        "exact line recovered; 99% CI covers the true slope in {covered}/100 trials"
    ))
}

// 6 and 7: coverage trade-off on a synthetic corpus

struct SweepOutcome {
    summary: Summary,
    min_cases: usize,
    elapsed: Duration,
}

fn coverage_corpus() -> Result<(Vec<ClinicalCase>, SymptomUniverse, usize), String> {
    let world = generate_world_with(&WorldParams {
        mean_positive: 2.0,
        mean_negative: 2.0,
        ..WorldParams::new(139, 400, 0.3, 0.0, 1)
    })
    .map_err(|e| e.to_string())?;
    let corpus = generate_timelines(
        &world,
        &GenConfig {
            n_patients: 16_000,
            seed: 1,
            ..GenConfig::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let built = build_all_cases(
        &corpus,
        &world.phenotypes(),
        &world.universe,
        &NegationRules::default(),
        30,
    );
    let min_cases = built.iter().map(|(c, _)| c.len()).min().unwrap_or(0);
    let cases = built.into_iter().flat_map(|(c, _)| c).collect();
    Ok((cases, world.universe, min_cases))
}

fn coverage_config() -> SweepConfig {
    let lr = ModelEntry {
        l2_lambda: Some(1e-5),
        learning_rate: Some(0.5),
        ..ModelEntry::new(ModelKind::LogisticRegression)
    };
    let mlp = ModelEntry {
        hidden_sizes: Some(vec![64, 32]),
        l2_lambda: Some(1e-4),
        learning_rate: Some(0.1),
        ..ModelEntry::new(ModelKind::Mlp)
    };
    SweepConfig {
        n_base: Some(39),
        n_steps: 5,
        step_size: 20,
        n_seeds: 5,
        cap: 100,
        master_seed: 1,
        models: vec![lr, mlp],
        ..SweepConfig::default()
    }
}

fn run_coverage_sweep() -> Result<SweepOutcome, String> {
    let start = Instant::now();
    let (cases, universe, min_cases) = coverage_corpus()?;
    let cfg = coverage_config();
    cfg.validate().map_err(|e| e.to_string())?;
    let inputs = SweepInputs {
        cases,
        universe,
        eval: None,
    };
    let records = run_sweep(&cfg, &inputs).map_err(|e| e.to_string())?;
    let summary = summarize(&records).map_err(|e| e.to_string())?;
    Ok(SweepOutcome {
        summary,
        min_cases,
        elapsed: start.elapsed(),
    })
}

fn coverage(s: &SweepOutcome) -> Outcome {
    check(s.min_cases >= 80, || {
        format!("smallest disease has {} cases", s.min_cases)
    })?;
    check(s.elapsed <= Duration::from_secs(15 * 60), || {
        format!("sweep took {:?}", s.elapsed)
    })?;
    let mut notes = Vec::new();
    for model in ["lr", "mlp"] {
        let fit = |k| {
            s.summary
                .fit(model, k)
                .ok_or_else(|| format!("no fit for {model} top-{k}"))
        };
        for k in [1, 3] {
            let f = fit(k)?;
            check(f.beta_d < 0.0 && f.p_value < 0.05, || {
                format!("{model} top-{k}: beta_D {:.4}, p {:.3e}", f.beta_d, f.p_value)
            })?;
        }
        let rows = s.summary.step_means(model, 1);
        let steps: Vec<f64> = rows.iter().map(|r| r.dataset_step as f64).collect();
        let means: Vec<f64> = rows.iter().map(|r| r.mean).collect();
        let rho = spearman(&steps, &means).map_err(|e| e.to_string())?;
        check(rho <= -0.8, || format!("{model}: Spearman(step, top-1) = {rho:.3}"))?;
        let (b1, b20) = (fit(1)?.beta_d, fit(20)?.beta_d);
        check(b1 < b20, || {
            format!("{model}: top-1 slope {b1:.4} not below top-20 slope {b20:.4}")
        })?;
        notes.push(format!(
            "{model}: b1 {b1:.4} (p {:.1e}), b3 {:.4} (p {:.1e}), b20 {b20:.4}, rho {rho:.2}",
            fit(1)?.p_value,
            fit(3)?.beta_d,
            fit(3)?.p_value
        ));
    }
    Ok(format!(
        "min {} cases/disease, {:.0?}; {}",
        s.min_cases,
        s.elapsed,
        notes.join("; ")
    ))
}

fn parity(s: &SweepOutcome) -> Outcome {
    let lr = s.summary.step_means("lr", 3);
    let mlp = s.summary.step_means("mlp", 3);
    check(lr.len() == 6 && mlp.len() == 6, || {
        "expected six steps per model".into()
    })?;
    let mut worst = f64::INFINITY;
    for (a, b) in lr.iter().zip(&mlp) {
        let margin = a.mean - (b.mean - 3.0);
        worst = worst.min(a.mean - b.mean);
        check(margin >= 0.0, || {
            format!("step {}: LR top-3 {:.2}% vs MLP {:.2}%", a.dataset_step, a.mean, b.mean)
        })?;
    }
    Ok(format!("min(LR - MLP) top-3 over steps = {worst:+.2} pp"))
}

// 8: balancing

fn balancing() -> Outcome {
    let sizes = [1000usize, 301, 300, 299, 40, 1];
    let dim = 16;
    let mut r = rng(88);
    let mut examples = Vec::new();
    for (label, &n) in sizes.iter().enumerate() {
        for i in 0..n {
            examples.push(Example {
                features: random_features(&mut r, dim, 0.3),
                label,
                patient_id: format!("L{label}-{i}"),
            });
        }
    }
    examples.shuffle(&mut r);
    let train = LabeledDataset {
        examples,
        label_index: (0..sizes.len()).map(|l| format!("d{l}")).collect(),
        feature_dim: dim,
    };
    for seed in 0..5u64 {
        let out = balance(&train, 300, seed).map_err(|e| e.to_string())?;
        check(out.label_index == train.label_index, || "label index changed".into())?;
        for (label, &n) in sizes.iter().enumerate() {
            let originals: Vec<&Example> = train.examples.iter().filter(|e| e.label == label).collect();
            let drawn: Vec<&Example> = out.examples.iter().filter(|e| e.label == label).collect();
            check(drawn.len() == 300, || {
                format!("seed {seed} label {label}: {} examples", drawn.len())
            })?;
            check(drawn.iter().all(|e| originals.contains(e)), || {
                format!("seed {seed} label {label}: invented an example")
            })?;
            if n >= 300 {
                let ids: HashSet<&str> = drawn.iter().map(|e| e.patient_id.as_str()).collect();
                check(ids.len() == 300, || {
                    format!("seed {seed} label {label}: duplicates drawn")
                })?;
            }
        }
    }
    Ok(format!("label sizes {sizes:?} -> 300 each over 5 seeds"))
}

// 9: CLI determinism

fn cli(args: &[&str], dir: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_dxcover"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.success(), || {
        format!(
            "`dxcover {}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    cli(
        &[
            "generate",
            "--diseases",
            "12",
            "--symptoms",
            "120",
            "--patients",
            "1500",
            "--seed",
            "9",
            "--out",
            "corpus",
        ],
        dir,
    )?;
    cli(
        &[
            "build-cases",
            "--corpus",
            "corpus/corpus.jsonl",
            "--phenotypes",
            "corpus/phenotypes.toml",
            "--universe",
            "corpus/universe.json",
            "--out",
            "corpus/cases.jsonl",
        ],
        dir,
    )?;
    let config = "cases = \"corpus/cases.jsonl\"\nuniverse = \"corpus/universe.json\"\n\
        n_base = 4\nn_steps = 2\nstep_size = 4\nn_seeds = 2\ncap = 40\nks = [1, 3]\nmaster_seed = 3\n\n\
        [train]\nmax_epochs = 8\n\n\
        [[models]]\nkind = \"lr\"\nlearning_rate = 0.5\n\n\
        [[models]]\nkind = \"mlp\"\nhidden_sizes = [16]\nlearning_rate = 0.1\n\n\
        [[models]]\nkind = \"mlp-embedding\"\nembedding_dim = 8\nhidden_sizes = [8]\nlearning_rate = 0.1\n";
    std::fs::write(dir.join("sweep.toml"), config).map_err(|e| e.to_string())?;
    cli(&["sweep", "--config", "sweep.toml", "--out", "run1.csv"], dir)?;
    cli(&["sweep", "--config", "sweep.toml", "--out", "run2.csv"], dir)?;
    cli(
        &["sweep", "--config", "sweep.toml", "--workers", "3", "--out", "run3.csv"],
        dir,
    )?;
    let read = |name: &str| std::fs::read(dir.join(name)).map_err(|e| e.to_string());
    let (a, b, c) = (read("run1.csv")?, read("run2.csv")?, read("run3.csv")?);
    check(a == b, || "two identical sweeps wrote different records".into())?;
    check(a == c, || "records depend on the worker count".into())?;
    let rows = a.iter().filter(|&&b| b == b'\n').count() - 1;
    check(rows == 3 * 3 * 2 * 2, || format!("expected 36 records, found {rows}"))?;
    Ok(format!(
        "{rows} records, {} bytes, identical across runs and worker counts",
        a.len()
    ))
}

// 10: negation

fn negation() -> Outcome {
    let rules = NegationRules::default();
    let corpus = parse_negation_corpus(NEGATION_MINI_CORPUS).map_err(|e| e.to_string())?;
    check(corpus.len() == 40, || {
        format!("mini-corpus has {} sentences", corpus.len())
    })?;
    let report = evaluate_negation(&corpus, &rules).map_err(|e| e.to_string())?;
    check(report.accuracy() >= 0.95, || {
        format!("accuracy {:.3}, errors {:?}", report.accuracy(), report.errors)
    })?;
    let universe = SymptomUniverse::from_names(["fever", "chest pain", "cough"]).map_err(|e| e.to_string())?;
    let extractor = FindingExtractor::new(&universe, &rules);
    let worked: [(&str, Vec<(&str, Polarity)>); 3] = [
        ("no fever", vec![("fever", Polarity::Absent)]),
        ("patient reports fever", vec![("fever", Polarity::Present)]),
        (
            "denies chest pain but reports cough",
            vec![("chest pain", Polarity::Absent), ("cough", Polarity::Present)],
        ),
    ];
    for (text, expected) in &worked {
        let got: Vec<(String, Polarity)> = extractor
            .mentions(text)
            .into_iter()
            .map(|m| (m.symptom, m.polarity))
            .collect();
        let want: Vec<(String, Polarity)> = expected.iter().map(|(s, p)| (s.to_string(), *p)).collect();
        check(got == want, || format!("`{text}`: expected {want:?}, got {got:?}"))?;
        check(match_entities(text, &universe).len() == want.len(), || {
            format!("`{text}`: matcher found a different number of mentions")
        })?;
    }
    Ok(format!(
        "{}/{} correct ({:.1}%), worked examples exact",
        report.correct,
        report.total,
        100.0 * report.accuracy()
    ))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        Criterion {
            id: 1,
            name: "scenario suite",
            budget: Some(Duration::from_secs(1)),
            run: scenarios,
        },
        Criterion {
            id: 2,
            name: "gradient check",
            budget: Some(Duration::from_secs(30)),
            run: gradient_check,
        },
        Criterion {
            id: 3,
            name: "probability normalization",
            budget: Some(Duration::from_secs(10)),
            run: normalization,
        },
        Criterion {
            id: 4,
            name: "top-k oracle",
            budget: Some(Duration::from_secs(5)),
            run: top_k_oracle,
        },
        Criterion {
            id: 5,
            name: "OLS correctness",
            budget: Some(Duration::from_secs(10)),
            run: ols,
        },
    ];
    let mut failures = 0;
    let mut report = |id: u32, name: &str, outcome: Outcome, elapsed: Duration, budget: Option<Duration>| {
        let outcome = match (outcome, budget) {
            (Ok(_), Some(b)) if elapsed > b => Err(format!("took {elapsed:.2?}, budget {b:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(msg) => println!("PASS  [{id:>2}] {name} ({elapsed:.2?}): {msg}"),
            Err(msg) => {
                failures += 1;
                println!("FAIL  [{id:>2}] {name} ({elapsed:.2?}): {msg}");
            }
        }
    };
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        report(c.id, c.name, outcome, start.elapsed(), c.budget);
    }

    let start = Instant::now();
    match run_coverage_sweep() {
        Ok(s) => {
            report(6, "coverage trade-off", coverage(&s), start.elapsed(), None);
            report(7, "LR vs MLP top-3 parity", parity(&s), Duration::ZERO, None);
        }
        Err(e) => {
            report(6, "coverage trade-off", Err(e.clone()), start.elapsed(), None);
            report(7, "LR vs MLP top-3 parity", Err(e), Duration::ZERO, None);
        }
    }

    let rest = [
        Criterion {
            id: 8,
            name: "balancing contract",
            budget: None,
            run: balancing,
        },
        Criterion {
            id: 9,
            name: "sweep determinism",
            budget: None,
            run: determinism,
        },
        Criterion {
            id: 10,
            name: "negation mini-corpus",
            budget: None,
            run: negation,
        },
    ];
    for c in &rest {
        let start = Instant::now();
        let outcome = (c.run)();
        report(c.id, c.name, outcome, start.elapsed(), c.budget);
    }

    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
