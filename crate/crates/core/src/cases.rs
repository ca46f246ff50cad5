//! Clinical case construction for one disease: select patients by
//! phenotype, find resolved encounter windows, and read findings from the
//! first note of each window.

use serde::Serialize;

use crate::ehr::{ClinicalCase, Finding, Phenotype, SymptomUniverse, Timeline, VisitClass};
use crate::text::{FindingExtractor, NegationRules};
use std::collections::BTreeSet;

/// A maximal run of phenotype-coded encounters with no follow-up for `tau`
/// days after its last encounter. Indices are inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EncounterWindow {
    pub patient_id: String,
    pub start_index: usize,
    pub end_index: usize,
    pub start_time: i64,
    pub end_time: i64,
}

/// Why a run of phenotype-coded encounters was or was not kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunOutcome {
    Resolved,
    /// A different phenotype shows up within `tau` days after the run.
    Confounded {
        disease: String,
    },
    /// Some other encounter follows within `tau` days.
    FollowedUp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    pub window: EncounterWindow,
    pub outcome: RunOutcome,
}

/// Patients with at least one outpatient encounter carrying a phenotype code,
/// in corpus order.
pub fn identify_patients(corpus: &[Timeline], phenotype: &Phenotype) -> Vec<String> {
    corpus
        .iter()
        .filter(|t| {
            t.encounters
                .iter()
                .any(|e| e.visit_class == VisitClass::Outpatient && e.matches(phenotype))
        })
        .map(|t| t.patient_id.clone())
        .collect()
}

/// Every maximal run of phenotype-coded encounters, classified. Adjacent coded
/// encounters less than `tau` days apart belong to the same run; a gap of at
/// least `tau` days counts as resolution.
pub fn classify_runs(timeline: &Timeline, phenotype: &Phenotype, all_phenotypes: &[Phenotype], tau: i64) -> Vec<Run> {
    let enc = &timeline.encounters;
    let mut runs = Vec::new();
    let mut i = 0;
    while i < enc.len() {
        if !enc[i].matches(phenotype) {
            i += 1;
            continue;
        }
        let start = i;
        let mut end = i;
        while end + 1 < enc.len() && enc[end + 1].matches(phenotype) && enc[end + 1].time - enc[end].time < tau {
            end += 1;
        }
        let last = enc[end].time;
        let follow_ups = enc[end + 1..].iter().take_while(|e| e.time - last < tau);
        let mut outcome = RunOutcome::Resolved;
        for e in follow_ups {
            let other = all_phenotypes
                .iter()
                .find(|q| q.disease != phenotype.disease && e.matches(q));
            match other {
                Some(q) => {
                    outcome = RunOutcome::Confounded {
                        disease: q.disease.clone(),
                    };
                    break;
                }
                None => outcome = RunOutcome::FollowedUp,
            }
        }
        runs.push(Run {
            window: EncounterWindow {
                patient_id: timeline.patient_id.clone(),
                start_index: start,
                end_index: end,
                start_time: enc[start].time,
                end_time: last,
            },
            outcome,
        });
        i = end + 1;
    }
    runs
}

/// The resolved windows of one timeline for `phenotype`.
pub fn resolved_windows(
    timeline: &Timeline,
    phenotype: &Phenotype,
    all_phenotypes: &[Phenotype],
    tau: i64,
) -> Vec<EncounterWindow> {
    classify_runs(timeline, phenotype, all_phenotypes, tau)
        .into_iter()
        .filter(|r| r.outcome == RunOutcome::Resolved)
        .map(|r| r.window)
        .collect()
}

/// Findings from the note of the window's first encounter only.
pub fn extract_findings(
    window: &EncounterWindow,
    timeline: &Timeline,
    universe: &SymptomUniverse,
    rules: &NegationRules,
) -> BTreeSet<Finding> {
    FindingExtractor::new(universe, rules).findings(&timeline.encounters[window.start_index].note)
}

/// Per-disease counters reported alongside built cases.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BuildStats {
    pub patients: usize,
    pub runs: usize,
    pub resolved: usize,
    pub confounded: usize,
    pub followed_up: usize,
    pub empty_findings: usize,
    pub cases: usize,
}

/// Cases for one disease together with counters.
pub fn build_cases_with_stats(
    corpus: &[Timeline],
    disease: &str,
    phenotype: &Phenotype,
    all_phenotypes: &[Phenotype],
    extractor: &FindingExtractor,
    tau: i64,
) -> (Vec<ClinicalCase>, BuildStats) {
    let selected: BTreeSet<String> = identify_patients(corpus, phenotype).into_iter().collect();
    let mut stats = BuildStats {
        patients: selected.len(),
        ..Default::default()
    };
    let mut cases = Vec::new();
    for timeline in corpus.iter().filter(|t| selected.contains(&t.patient_id)) {
        for run in classify_runs(timeline, phenotype, all_phenotypes, tau) {
            stats.runs += 1;
            match run.outcome {
                RunOutcome::Resolved => stats.resolved += 1,
                RunOutcome::Confounded { .. } => {
                    stats.confounded += 1;
                    continue;
                }
                RunOutcome::FollowedUp => {
                    stats.followed_up += 1;
                    continue;
                }
            }
            let note = &timeline.encounters[run.window.start_index].note;
            let findings = extractor.findings(note);
            if findings.is_empty() {
                stats.empty_findings += 1;
                continue;
            }
            cases.push(ClinicalCase {
                patient_id: timeline.patient_id.clone(),
                label: disease.to_string(),
                findings,
            });
        }
    }
    stats.cases = cases.len();
    (cases, stats)
}

/// Builds the clinical cases of one disease. Windows whose first note yields
/// no findings are dropped.
pub fn build_cases(
    corpus: &[Timeline],
    disease: &str,
    phenotype: &Phenotype,
    all_phenotypes: &[Phenotype],
    universe: &SymptomUniverse,
    rules: &NegationRules,
    tau: i64,
) -> Vec<ClinicalCase> {
    let extractor = FindingExtractor::new(universe, rules);
    build_cases_with_stats(corpus, disease, phenotype, all_phenotypes, &extractor, tau).0
}

/// Cases for every phenotype, in phenotype order.
pub fn build_all_cases(
    corpus: &[Timeline],
    phenotypes: &[Phenotype],
    universe: &SymptomUniverse,
    rules: &NegationRules,
    tau: i64,
) -> Vec<(Vec<ClinicalCase>, BuildStats)> {
    let extractor = FindingExtractor::new(universe, rules);
    phenotypes
        .iter()
        .map(|p| build_cases_with_stats(corpus, &p.disease, p, phenotypes, &extractor, tau))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ehr::{Encounter, Polarity};

    fn enc(time: i64, codes: &[&str], note: &str) -> Encounter {
        Encounter {
            encounter_id: format!("e{time}"),
            time,
            visit_class: VisitClass::Outpatient,
            icd_codes: codes.iter().map(|c| c.to_string()).collect(),
            note: note.into(),
        }
    }

    fn tl(encounters: Vec<Encounter>) -> Timeline {
        Timeline {
            patient_id: "p1".into(),
            age: None,
            encounters,
        }
    }

    fn phenos() -> Vec<Phenotype> {
        vec![
            Phenotype::new("d", ["D1"]).unwrap(),
            Phenotype::new("q", ["Q1"]).unwrap(),
        ]
    }

    #[test]
    fn gerd_outpatient_identified_inpatient_not() {
        let gerd = Phenotype::new("GERD", ["K21.0", "K21.9"]).unwrap();
        let a = tl(vec![enc(0, &["K21.9"], "")]);
        let mut b = tl(vec![enc(0, &["K21.9"], "")]);
        b.patient_id = "p2".into();
        b.encounters[0].visit_class = VisitClass::Inpatient;
        assert_eq!(identify_patients(&[a, b], &gerd), vec!["p1".to_string()]);
        assert!(identify_patients(&[], &gerd).is_empty());
    }

    #[test]
    fn single_encounter_resolves() {
        let p = phenos();
        let w = resolved_windows(&tl(vec![enc(0, &["D1"], "")]), &p[0], &p, 30);
        assert_eq!(w.len(), 1);
        assert_eq!((w[0].start_time, w[0].end_time), (0, 0));
    }

    #[test]
    fn follow_up_within_tau_merges() {
        let p = phenos();
        let t = tl(vec![enc(0, &["D1"], ""), enc(10, &["D1"], ""), enc(41, &[], "")]);
        let w = resolved_windows(&t, &p[0], &p, 30);
        assert_eq!(w.len(), 1);
        assert_eq!((w[0].start_index, w[0].end_index), (0, 1));
        assert_eq!((w[0].start_time, w[0].end_time), (0, 10));
    }

    #[test]
    fn other_phenotype_within_tau_discards() {
        let p = phenos();
        let t = tl(vec![enc(0, &["D1"], ""), enc(14, &["Q1"], "")]);
        assert!(resolved_windows(&t, &p[0], &p, 30).is_empty());
        let runs = classify_runs(&t, &p[0], &p, 30);
        assert_eq!(runs[0].outcome, RunOutcome::Confounded { disease: "q".into() });
    }

    #[test]
    fn uncoded_follow_up_blocks_and_gap_of_tau_resolves() {
        let p = phenos();
        let t = tl(vec![enc(0, &["D1"], ""), enc(29, &[], "")]);
        assert_eq!(classify_runs(&t, &p[0], &p, 30)[0].outcome, RunOutcome::FollowedUp);
        let t = tl(vec![enc(0, &["D1"], ""), enc(30, &[], "")]);
        assert_eq!(resolved_windows(&t, &p[0], &p, 30).len(), 1);
    }

    #[test]
    fn findings_come_from_first_note() {
        let u = SymptomUniverse::from_names(["fever", "cough", "rash"]).unwrap();
        let t = tl(vec![enc(0, &["D1"], "Fever. No cough."), enc(5, &["D1"], "Rash.")]);
        let p = phenos();
        let w = &resolved_windows(&t, &p[0], &p, 30)[0];
        let f = extract_findings(w, &t, &u, &NegationRules::default());
        let expect: BTreeSet<Finding> = [Finding::present("fever"), Finding::absent("cough")].into();
        assert_eq!(f, expect);
        assert!(f.iter().all(|x| x.symptom != "rash"));

        let empty = tl(vec![enc(0, &["D1"], "")]);
        let w = &resolved_windows(&empty, &p[0], &p, 30)[0];
        assert!(extract_findings(w, &empty, &u, &NegationRules::default()).is_empty());
    }

    #[test]
    fn build_cases_drops_empty_windows_and_labels() {
        let u = SymptomUniverse::from_names(["fever"]).unwrap();
        let p = phenos();
        let mut other = tl(vec![enc(0, &["D1"], "Nothing notable.")]);
        other.patient_id = "p2".into();
        let corpus = vec![tl(vec![enc(0, &["D1"], "no fever")]), other];
        let cases = build_cases(&corpus, "d", &p[0], &p, &u, &NegationRules::default(), 30);
        assert_eq!(cases.len(), 1);
        assert_eq!(cases[0].label, "d");
        assert_eq!(cases[0].findings.iter().next().unwrap().polarity, Polarity::Absent);
        let none = build_cases(&corpus, "q", &p[1], &p, &u, &NegationRules::default(), 30);
        assert!(none.is_empty());
    }
}
