use std::collections::BTreeSet;

use proptest::prelude::*;

use dxcover::cases::resolved_windows;
use dxcover::dataset::{balance, encode_findings, CoveragePlan, Example, FeatureVector, LabeledDataset};
use dxcover::ehr::{validate_timeline, Encounter, Finding, Phenotype, SymptomUniverse, Timeline, VisitClass};
use dxcover::metrics::{top_k_accuracy, RankedPrediction};
use dxcover::models::{forward, Dropout, ModelParams, ModelSpec};
use dxcover::stats::fit_slope;
use dxcover::text::{detect_negation, match_entities, tokenize, FindingExtractor, NegationRules};

const SYMPTOMS: [&str; 6] = ["fever", "cough", "rash", "chest pain", "headache", "nausea"];

fn universe() -> SymptomUniverse {
    SymptomUniverse::from_names(SYMPTOMS).unwrap()
}

fn timeline_strategy() -> impl Strategy<Value = Timeline> {
    prop::collection::vec((1i64..40, prop::sample::select(vec!["D1", "Q1", "Z00"]), 0u8..3), 0..12).prop_map(|steps| {
        let mut t = 0;
        let encounters = steps
            .into_iter()
            .enumerate()
            .map(|(i, (gap, code, class))| {
                t += gap;
                Encounter {
                    encounter_id: format!("e{i}"),
                    time: t,
                    visit_class: [VisitClass::Outpatient, VisitClass::Inpatient, VisitClass::Other][class as usize],
                    icd_codes: BTreeSet::from([code.to_string()]),
                    note: String::new(),
                }
            })
            .collect();
        Timeline {
            patient_id: "p".into(),
            age: None,
            encounters,
        }
    })
}

fn sentence_strategy() -> impl Strategy<Value = String> {
    let templates = vec![
        "Patient reports {}.",
        "No {}.",
        "Denies {} but reports {}.",
        "Negative for {}.",
        "{} is ruled out.",
        "Has {} without {}.",
        "Complains of {}; no {}.",
    ];
    (
        prop::sample::select(templates),
        prop::sample::select(SYMPTOMS.to_vec()),
        prop::sample::select(SYMPTOMS.to_vec()),
    )
        .prop_map(|(t, a, b)| t.replacen("{}", a, 1).replacen("{}", b, 1))
}

fn feature_strategy(dim: usize) -> impl Strategy<Value = FeatureVector> {
    prop::collection::btree_set(0..dim as u32, 0..dim)
        .prop_map(move |s| FeatureVector::from_indices(s.into_iter().collect(), dim).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn timelines_roundtrip_through_json(tl in timeline_strategy()) {
        prop_assert!(validate_timeline(&tl).is_valid());
        let text = serde_json::to_string(&tl).unwrap();
        let back: Timeline = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &tl);
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn larger_tau_never_adds_windows(tl in timeline_strategy(), tau in 1i64..60, extra in 0i64..60) {
        let d = Phenotype::new("d", ["D1"]).unwrap();
        let all = vec![d.clone(), Phenotype::new("q", ["Q1"]).unwrap()];
        let small = resolved_windows(&tl, &d, &all, tau).len();
        let large = resolved_windows(&tl, &d, &all, tau + extra).len();
        prop_assert!(large <= small);
    }

    #[test]
    fn polarity_ignores_other_sentences(
        sentences in prop::collection::vec(sentence_strategy(), 1..6),
        rotation in 0usize..6,
    ) {
        let ex = FindingExtractor::new(&universe(), &NegationRules::default());
        let per_sentence = |list: &[String]| -> Vec<Vec<(String, dxcover::ehr::Polarity)>> {
            let mentions = ex.mentions(&list.join(" "));
            (0..list.len())
                .map(|idx| {
                    mentions
                        .iter()
                        .filter(|m| m.sentence_index == idx)
                        .map(|m| (m.symptom.clone(), m.polarity))
                        .collect()
                })
                .collect()
        };
        let before = per_sentence(&sentences);
        let mut rotated = sentences.clone();
        let r = rotation % sentences.len();
        rotated.rotate_left(r);
        let mut after = per_sentence(&rotated);
        after.rotate_right(r);
        prop_assert_eq!(before, after);
    }

    #[test]
    fn negation_keeps_every_mention(sentence in sentence_strategy()) {
        let u = universe();
        let mentions = match_entities(&sentence, &u);
        let tokens = &tokenize(&sentence)[0].tokens;
        let out = detect_negation(tokens, mentions.clone(), &NegationRules::default());
        prop_assert_eq!(out.len(), mentions.len());
        for (a, b) in out.iter().zip(&mentions) {
            prop_assert_eq!((&a.symptom, &a.span), (&b.symptom, &b.span));
        }
    }

    #[test]
    fn encoding_is_injective(
        a in prop::collection::btree_set((0usize..6, any::<bool>()), 0..8),
        b in prop::collection::btree_set((0usize..6, any::<bool>()), 0..8),
    ) {
        let u = universe();
        let to_findings = |s: &BTreeSet<(usize, bool)>| -> BTreeSet<Finding> {
            s.iter()
                .map(|&(i, p)| if p { Finding::present(SYMPTOMS[i]) } else { Finding::absent(SYMPTOMS[i]) })
                .collect()
        };
        let (fa, fb) = (to_findings(&a), to_findings(&b));
        let (ea, eb) = (encode_findings(&fa, &u).unwrap(), encode_findings(&fb, &u).unwrap());
        prop_assert_eq!(fa == fb, ea == eb);
    }

    #[test]
    fn balance_preserves_labels_and_originals(
        sizes in prop::collection::vec(1usize..40, 1..6),
        cap in 1usize..30,
        seed in any::<u64>(),
    ) {
        let mut examples = Vec::new();
        for (label, &n) in sizes.iter().enumerate() {
            for i in 0..n {
                examples.push(Example {
                    features: FeatureVector::from_indices(vec![(i % 8) as u32], 8).unwrap(),
                    label,
                    patient_id: format!("{label}-{i}"),
                });
            }
        }
        let ds = LabeledDataset {
            examples,
            label_index: (0..sizes.len()).map(|i| format!("d{i}")).collect(),
            feature_dim: 8,
        };
        let out = balance(&ds, cap, seed).unwrap();
        prop_assert_eq!(&out.label_index, &ds.label_index);
        prop_assert_eq!(out.len(), cap * sizes.len());
        prop_assert!(out.examples.iter().all(|e| ds.examples.contains(e)));
        prop_assert_eq!(balance(&ds, cap, seed).unwrap(), out);
    }

    #[test]
    fn coverage_label_sets_are_nested(n_steps in 1usize..5, step_size in 1usize..4, seed in any::<u64>()) {
        let base: Vec<String> = (0..3).map(|i| format!("b{i}")).collect();
        let pool: Vec<String> = (0..20).map(|i| format!("p{i}")).collect();
        let plan = CoveragePlan::new(&base, &pool, n_steps, step_size, seed).unwrap();
        for s in 0..n_steps {
            let (a, b) = (plan.labels_at(s), plan.labels_at(s + 1));
            prop_assert!(b.len() > a.len());
            prop_assert_eq!(&b[..a.len()], &a[..]);
        }
        let last = plan.labels_at(n_steps);
        let added: BTreeSet<&String> = last[3..].iter().collect();
        prop_assert_eq!(added.len(), n_steps * step_size);
    }

    #[test]
    fn lr_is_invariant_to_logit_shift(z in feature_strategy(12), shift in -50.0f64..50.0, seed in any::<u64>()) {
        let params = ModelParams::init(&ModelSpec::logistic_regression(12, 5), seed).unwrap();
        let mut shifted = params.clone();
        for b in &mut shifted.tensor_mut("out.bias").unwrap().data {
            *b += shift;
        }
        let p = forward(&params, &z, Dropout::Off).unwrap();
        let q = forward(&shifted, &z, Dropout::Off).unwrap();
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn top_k_monotone_and_order_free(
        rows in prop::collection::vec((Just((0..8usize).collect::<Vec<_>>()).prop_shuffle(), 0usize..8), 1..30),
        rotation in 0usize..30,
    ) {
        let preds: Vec<RankedPrediction> = rows
            .iter()
            .map(|(r, _)| RankedPrediction { case_id: String::new(), ranked_labels: r.clone() })
            .collect();
        let gold: Vec<usize> = rows.iter().map(|(_, g)| *g).collect();
        let ks: Vec<usize> = (1..=8).collect();
        let acc = top_k_accuracy(&preds, &gold, &ks).unwrap();
        let vals: Vec<f64> = acc.values().copied().collect();
        prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(vals[7], 1.0);
        let r = rotation % preds.len();
        let (mut p2, mut g2) = (preds.clone(), gold.clone());
        p2.rotate_left(r);
        g2.rotate_left(r);
        prop_assert_eq!(top_k_accuracy(&p2, &g2, &ks).unwrap(), acc);
    }

    #[test]
    fn slope_fit_equivariance(
        ys in prop::collection::vec(-100.0f64..100.0, 4..12),
        c in -50.0f64..50.0,
        s in 0.1f64..10.0,
    ) {
        let pts: Vec<(f64, f64)> = ys.iter().enumerate().map(|(i, &y)| (20.0 * i as f64, y)).collect();
        let f = fit_slope(&pts).unwrap();
        let shifted: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x, y + c)).collect();
        let g = fit_slope(&shifted).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-8 * (1.0 + a.abs().max(b.abs()));
        prop_assert!(close(g.beta_m, f.beta_m + c));
        prop_assert!(close(g.beta_d, f.beta_d) && close(g.std_err, f.std_err));
        prop_assert!(close(g.t_value, f.t_value) && close(g.p_value, f.p_value));
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (s * x, y)).collect();
        let h = fit_slope(&scaled).unwrap();
        prop_assert!(close(h.beta_d, f.beta_d / s) && close(h.std_err, f.std_err / s));
        prop_assert!(close(h.t_value, f.t_value) && close(h.p_value, f.p_value));
    }
}
