//! Synthetic EHR corpora: a world of diseases with symptom profiles and
//! phenotype codes, and patient timelines drawn from it.
//!
//! Each patient follows one of four scenarios:
//!
//! * `A` a single coded visit followed by at least `tau` quiet days,
//! * `B` two such episodes separated by more than `tau` days,
//! * `C` a coded visit followed within `tau` days by an encounter coded for a
//!   different disease (never yields a case),
//! * `D` a coded visit plus a same-code follow-up inside `tau`, merged into a
//!   single window.

use std::collections::{BTreeMap, BTreeSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ehr::{Encounter, Phenotype, SymptomUniverse, Timeline, VisitClass};
use crate::error::{Error, Result};
use crate::seed;

const SINGLE_SYMPTOMS: &[&str] = &[
    "fever",
    "cough",
    "fatigue",
    "nausea",
    "vomiting",
    "diarrhea",
    "constipation",
    "headache",
    "dizziness",
    "chills",
    "rash",
    "itching",
    "wheezing",
    "palpitations",
    "insomnia",
    "anxiety",
    "sneezing",
    "congestion",
    "hoarseness",
    "dysuria",
    "hematuria",
    "bloating",
    "heartburn",
    "malaise",
    "myalgia",
    "tingling",
    "confusion",
    "sweating",
    "weight loss",
    "runny nose",
    "sore throat",
    "shortness of breath",
    "urinary frequency",
    "black stool",
    "blurred vision",
    "loss of appetite",
];

const SITES: &[&str] = &[
    "head",
    "neck",
    "chest",
    "back",
    "abdominal",
    "pelvic",
    "ear",
    "eye",
    "throat",
    "knee",
    "hip",
    "shoulder",
    "wrist",
    "ankle",
    "foot",
    "hand",
    "jaw",
    "flank",
    "groin",
    "elbow",
    "lower back",
    "arm",
    "thigh",
    "calf",
    "skin",
    "scalp",
    "tooth",
    "sinus",
    "nasal",
    "rectal",
];

const QUALITIES: &[&str] = &[
    "pain",
    "swelling",
    "stiffness",
    "redness",
    "tenderness",
    "burning",
    "cramping",
    "pressure",
    "discharge",
    "bruising",
    "weakness",
    "lump",
    "bleeding",
    "soreness",
    "numbness",
];

const SYNONYMS: &[(&str, &str)] = &[
    ("pyrexia", "fever"),
    ("emesis", "vomiting"),
    ("dyspnea", "shortness of breath"),
    ("rhinorrhea", "runny nose"),
    ("pruritus", "itching"),
    ("vertigo", "dizziness"),
    ("melena", "black stool"),
    ("pharyngeal pain", "sore throat"),
];

/// The first `k` names of a fixed symptom vocabulary.
pub fn symptom_names(k: usize) -> Vec<String> {
    let mut names: Vec<String> = SINGLE_SYMPTOMS.iter().map(|s| s.to_string()).collect();
    'outer: for q in QUALITIES {
        for s in SITES {
            if names.len() >= k {
                break 'outer;
            }
            names.push(format!("{s} {q}"));
        }
    }
    let mut extra = 1;
    while names.len() < k {
        names.push(format!("finding {extra}"));
        extra += 1;
    }
    names.truncate(k);
    names
}

/// A universe of `k` symptoms with synonyms for those that have one.
pub fn synthetic_universe(k: usize) -> Result<SymptomUniverse> {
    let names = symptom_names(k);
    let present: BTreeSet<&str> = names.iter().map(String::as_str).collect();
    let synonyms = SYNONYMS
        .iter()
        .filter(|(_, c)| present.contains(c))
        .map(|(s, c)| (s.to_string(), c.to_string()))
        .collect();
    SymptomUniverse::new(names, synonyms)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiseaseProfile {
    pub disease: String,
    pub phenotype: Phenotype,
    /// Probability that a symptom is mentioned as present.
    pub finding_probs: BTreeMap<String, f64>,
    /// Probability that a symptom not present is mentioned negated.
    pub negated_probs: BTreeMap<String, f64>,
    pub prevalence_weight: f64,
}

impl DiseaseProfile {
    /// Symptoms with a positive presence probability.
    pub fn support(&self) -> BTreeSet<&str> {
        self.finding_probs
            .iter()
            .filter(|(_, &p)| p > 0.0)
            .map(|(s, _)| s.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldParams {
    pub n_diseases: usize,
    pub k_symptoms: usize,
    pub overlap: f64,
    pub prevalence_skew: f64,
    pub seed: u64,
    /// Symptoms per disease profile. Defaults to `min(12, k / n)` when
    /// `overlap` is zero; otherwise a size in 10..=14 is chosen together
    /// with the shared-symptom count to approach the target overlap.
    pub support_size: Option<usize>,
    /// Expected number of present mentions per note.
    pub mean_positive: f64,
    /// Expected number of negated mentions per note.
    pub mean_negative: f64,
}

impl WorldParams {
    pub fn new(n_diseases: usize, k_symptoms: usize, overlap: f64, prevalence_skew: f64, seed: u64) -> Self {
        WorldParams {
            n_diseases,
            k_symptoms,
            overlap,
            prevalence_skew,
            seed,
            support_size: None,
            mean_positive: 5.0,
            mean_negative: 3.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_diseases == 0 {
            return Err(Error::invalid_arg("n_diseases must be at least 1"));
        }
        if self.k_symptoms < self.n_diseases {
            return Err(Error::invalid_arg("k_symptoms must be at least n_diseases"));
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(Error::invalid_arg(format!("overlap {} outside [0, 1]", self.overlap)));
        }
        if !(self.prevalence_skew >= 0.0 && self.prevalence_skew.is_finite()) {
            return Err(Error::invalid_arg("prevalence_skew must be finite and non-negative"));
        }
        if !(self.mean_positive > 0.0 && self.mean_negative >= 0.0) {
            return Err(Error::invalid_arg("mention means must be positive"));
        }
        if self.support_size == Some(0) {
            return Err(Error::invalid_arg("support_size must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub universe: SymptomUniverse,
    pub profiles: Vec<DiseaseProfile>,
    pub overlap: f64,
    pub seed: u64,
    pub params: WorldParams,
}

impl World {
    pub fn phenotypes(&self) -> Vec<Phenotype> {
        self.profiles.iter().map(|p| p.phenotype.clone()).collect()
    }

    pub fn diseases(&self) -> Vec<String> {
        self.profiles.iter().map(|p| p.disease.clone()).collect()
    }

    /// Mean over disease pairs of |S_i ∩ S_j| / min(|S_i|, |S_j|), where S is
    /// a profile's support.
    pub fn mean_pairwise_overlap(&self) -> f64 {
        let supports: Vec<BTreeSet<&str>> = self.profiles.iter().map(|p| p.support()).collect();
        let mut total = 0.0;
        let mut pairs = 0usize;
        for i in 0..supports.len() {
            for j in i + 1..supports.len() {
                let shared = supports[i].intersection(&supports[j]).count();
                total += shared as f64 / supports[i].len().min(supports[j].len()) as f64;
                pairs += 1;
            }
        }
        if pairs == 0 {
            0.0
        } else {
            total / pairs as f64
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn generate_world(
    n_diseases: usize,
    k_symptoms: usize,
    overlap: f64,
    prevalence_skew: f64,
    seed: u64,
) -> Result<World> {
    generate_world_with(&WorldParams::new(
        n_diseases,
        k_symptoms,
        overlap,
        prevalence_skew,
        seed,
    ))
}

fn expected_overlap(n: usize, k: usize, m: usize, c: usize) -> f64 {
    let p = m - c;
    let pool = k - c;
    let random = if n * p <= pool || pool == 0 {
        0.0
    } else {
        (p * p) as f64 / pool as f64
    };
    (c as f64 + random) / m as f64
}

/// Support size and number of shared symptoms whose expected pairwise
/// overlap is closest to the target. Sizes near 12 are preferred on ties.
fn support_layout(n: usize, k: usize, sizes: &[usize], target: f64) -> (usize, usize) {
    let mut best = (sizes[0], 0, f64::INFINITY);
    for &m in sizes {
        for c in 0..=m {
            let err = (expected_overlap(n, k, m, c) - target).abs();
            let closer =
                err < best.2 - 1e-12 || ((err - best.2).abs() <= 1e-12 && m.abs_diff(12) < best.0.abs_diff(12));
            if closer {
                best = (m, c, err);
            }
        }
    }
    (best.0, best.1)
}

pub fn generate_world_with(params: &WorldParams) -> Result<World> {
    params.validate()?;
    let n = params.n_diseases;
    let k = params.k_symptoms;
    let universe = synthetic_universe(k)?;
    let mut rng = seed::rng(seed::derive(&[params.seed, seed::hash_str("world")]));

    let (m, shared) = match params.support_size {
        _ if params.overlap == 0.0 => (params.support_size.unwrap_or((k / n).clamp(1, 12)).min(k), 0),
        Some(m) => support_layout(n, k, &[m.min(k)], params.overlap),
        None => {
            let sizes: Vec<usize> = (10..=14).filter(|&m| m <= k).collect();
            if sizes.is_empty() {
                support_layout(n, k, &[k], params.overlap)
            } else {
                support_layout(n, k, &sizes, params.overlap)
            }
        }
    };
    let private = m - shared;
    if params.overlap == 0.0 && n * m > k {
        return Err(Error::invalid_arg(format!(
            "{n} disjoint supports of {m} symptoms need more than {k} symptoms"
        )));
    }

    let mut order: Vec<usize> = (0..k).collect();
    order.shuffle(&mut rng);
    let (shared_pool, private_pool) = order.split_at(shared);
    let disjoint = n * private <= private_pool.len();

    let names = universe.symptoms();
    let mut profiles = Vec::with_capacity(n);
    for d in 0..n {
        let private_idx: Vec<usize> = if disjoint {
            private_pool[d * private..(d + 1) * private].to_vec()
        } else {
            rand::seq::index::sample(&mut rng, private_pool.len(), private)
                .into_iter()
                .map(|i| private_pool[i])
                .collect()
        };

        let mut probs: Vec<(usize, f64)> = Vec::with_capacity(m);
        for &s in shared_pool {
            probs.push((s, rng.random_range(0.05..0.6)));
        }
        for &s in &private_idx {
            probs.push((s, rng.random_range(0.25..0.9)));
        }
        let total: f64 = probs.iter().map(|(_, p)| p).sum();
        let scale = params.mean_positive / total;
        let finding_probs: BTreeMap<String, f64> = probs
            .iter()
            .map(|&(s, p)| (names[s].clone(), (p * scale).clamp(0.02, 0.95)))
            .collect();

        // pertinent negatives: some support symptoms and a few outside it
        let mut negated: Vec<(usize, f64)> = probs.iter().map(|&(s, _)| (s, 0.25)).collect();
        let support: BTreeSet<usize> = probs.iter().map(|&(s, _)| s).collect();
        let outside: Vec<usize> = (0..k).filter(|s| !support.contains(s)).collect();
        for &s in outside.choose_multiple(&mut rng, 6) {
            negated.push((s, rng.random_range(0.1..0.5)));
        }
        let neg_total: f64 = negated.iter().map(|(_, p)| p).sum();
        let neg_scale = if neg_total > 0.0 {
            params.mean_negative / neg_total
        } else {
            0.0
        };
        let negated_probs = negated
            .iter()
            .map(|&(s, p)| (names[s].clone(), (p * neg_scale).clamp(0.0, 0.95)))
            .collect();

        let disease = format!("disease_{:03}", d + 1);
        let n_codes = rng.random_range(1..=3);
        let codes: Vec<String> = (0..n_codes).map(|j| format!("S{:03}.{j}", d + 1)).collect();
        profiles.push(DiseaseProfile {
            phenotype: Phenotype::new(disease.clone(), codes)?,
            disease,
            finding_probs,
            negated_probs,
            prevalence_weight: ((d + 1) as f64).powf(-params.prevalence_skew),
        });
    }

    Ok(World {
        universe,
        profiles,
        overlap: params.overlap,
        seed: params.seed,
        params: params.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    A,
    B,
    C,
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioMix {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for ScenarioMix {
    fn default() -> Self {
        ScenarioMix {
            a: 0.6,
            b: 0.2,
            c: 0.1,
            d: 0.1,
        }
    }
}

impl ScenarioMix {
    pub fn only(s: Scenario) -> Self {
        let mut m = ScenarioMix {
            a: 0.0,
            b: 0.0,
            c: 0.0,
            d: 0.0,
        };
        match s {
            Scenario::A => m.a = 1.0,
            Scenario::B => m.b = 1.0,
            Scenario::C => m.c = 1.0,
            Scenario::D => m.d = 1.0,
        }
        m
    }

    fn weights(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Parses `A=0.6,B=0.2,C=0.1,D=0.1`; omitted scenarios get weight 0.
    pub fn parse(s: &str) -> Result<Self> {
        let mut m = ScenarioMix::only(Scenario::A);
        m.a = 0.0;
        for part in s.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid_arg(format!("bad scenario weight `{part}`")))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::invalid_arg(format!("bad scenario weight `{part}`")))?;
            match key.trim().to_ascii_uppercase().as_str() {
                "A" => m.a = v,
                "B" => m.b = v,
                "C" => m.c = v,
                "D" => m.d = v,
                other => return Err(Error::invalid_arg(format!("unknown scenario `{other}`"))),
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n_patients: usize,
    pub scenario_mix: ScenarioMix,
    /// Resolution period in days.
    pub tau: i64,
    /// Probability of dropped, spurious or contradictory mentions.
    pub noise: f64,
    pub seed: u64,
    /// Prefix of generated patient ids; lets several corpora share a world.
    pub id_prefix: String,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_patients: 1000,
            scenario_mix: ScenarioMix::default(),
            tau: 30,
            noise: 0.05,
            seed: 0,
            id_prefix: "P".into(),
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let w = self.scenario_mix.weights();
        if w.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::invalid_arg("scenario weights must lie in [0, 1]"));
        }
        if (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid_arg("scenario mix must sum to 1"));
        }
        if self.tau < 1 || ((self.scenario_mix.c > 0.0 || self.scenario_mix.d > 0.0) && self.tau < 2) {
            return Err(Error::invalid_arg("tau too small for the scenario mix"));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::invalid_arg("noise must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// The scenario and disease a generated patient was drawn with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatientTruth {
    pub patient_id: String,
    pub disease: String,
    pub scenario: Scenario,
}

const PRESENT_TEMPLATES: &[&str] = &[
    "Patient reports {}.",
    "Complains of {}.",
    "Has had {} since yesterday.",
    "Endorses {}.",
    "{} for the past few days.",
];

const ABSENT_TEMPLATES: &[&str] = &["No {}.", "Denies {}.", "Negative for {}.", "Patient does not have {}."];

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
        None => String::new(),
    }
}

struct NoteWriter<'a> {
    universe: &'a SymptomUniverse,
    surface: BTreeMap<&'a str, Vec<&'a str>>,
}

impl<'a> NoteWriter<'a> {
    fn new(universe: &'a SymptomUniverse) -> Self {
        let mut surface: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (syn, canon) in universe.synonyms() {
            surface.entry(canon.as_str()).or_default().push(syn.as_str());
        }
        NoteWriter { universe, surface }
    }

    fn name<R: Rng>(&self, symptom: &'a str, rng: &mut R) -> &'a str {
        match self.surface.get(symptom) {
            Some(syns) if rng.random_bool(0.3) => syns.choose(rng).unwrap(),
            _ => symptom,
        }
    }

    fn sentence<R: Rng>(&self, templates: &[&str], symptom: &'a str, rng: &mut R) -> String {
        let t = templates.choose(rng).unwrap();
        let s = t.replace("{}", self.name(symptom, rng));
        if t.starts_with("{}") {
            capitalize(&s)
        } else {
            s
        }
    }

    fn episode_note<R: Rng>(&self, profile: &'a DiseaseProfile, noise: f64, rng: &mut R) -> String {
        let mut present: Vec<&str> = profile
            .finding_probs
            .iter()
            .filter(|(_, &p)| rng.random_bool(p))
            .map(|(s, _)| s.as_str())
            .collect();
        if present.is_empty() {
            let top = profile
                .finding_probs
                .iter()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(a.0)))
                .unwrap();
            present.push(top.0.as_str());
        }
        let absent: Vec<&str> = profile
            .negated_probs
            .iter()
            .filter(|(s, _)| !present.contains(&s.as_str()))
            .filter(|(_, &p)| rng.random_bool(p))
            .map(|(s, _)| s.as_str())
            .collect();

        let mut sentences = Vec::new();
        let keep_floor = present.len() == 1;
        for s in &present {
            if !keep_floor && noise > 0.0 && rng.random_bool(noise) {
                continue;
            }
            sentences.push(self.sentence(PRESENT_TEMPLATES, s, rng));
        }
        for s in &absent {
            sentences.push(self.sentence(ABSENT_TEMPLATES, s, rng));
            if noise > 0.0 && rng.random_bool(noise) {
                sentences.push(format!("Return if {} develops.", self.name(s, rng)));
            }
        }
        if noise > 0.0 && rng.random_bool(noise) {
            let spurious = self.universe.symptoms().choose(rng).unwrap();
            sentences.push(self.sentence(PRESENT_TEMPLATES, spurious, rng));
        }
        sentences.shuffle(rng);
        sentences.join(" ")
    }
}

fn encounter(id: String, time: i64, class: VisitClass, codes: &[&str], note: String) -> Encounter {
    Encounter {
        encounter_id: id,
        time,
        visit_class: class,
        icd_codes: codes.iter().map(|c| c.to_string()).collect(),
        note,
    }
}

fn generate_patient(world: &World, cfg: &GenConfig, index: usize, writer: &NoteWriter) -> (Timeline, PatientTruth) {
    let mut rng = seed::rng(seed::derive(&[cfg.seed, seed::hash_str("patient"), index as u64]));
    let weights: Vec<f64> = world.profiles.iter().map(|p| p.prevalence_weight).collect();
    let d = WeightedIndex::new(&weights).expect("positive weights").sample(&mut rng);
    let mix = cfg.scenario_mix.weights();
    let scenario = [Scenario::A, Scenario::B, Scenario::C, Scenario::D]
        [WeightedIndex::new(mix).expect("validated mix").sample(&mut rng)];
    let profile = &world.profiles[d];
    let patient_id = format!("{}{:06}", cfg.id_prefix, index);
    let codes: Vec<&str> = profile.phenotype.codes.iter().map(String::as_str).collect();
    let tau = cfg.tau;

    let mut encounters = Vec::new();
    let mut next_id = 0;
    let mut push = |encs: &mut Vec<Encounter>, time: i64, class, codes: &[&str], note: String| {
        encs.push(encounter(format!("{patient_id}-e{next_id}"), time, class, codes, note));
        next_id += 1;
    };

    let t0: i64 = rng.random_range(400..800);
    let n_background = rng.random_range(0..=2);
    let mut bg: Vec<i64> = rand::seq::index::sample(&mut rng, 300, n_background)
        .into_iter()
        .map(|t| t as i64)
        .collect();
    bg.sort_unstable();
    for t in bg {
        push(&mut encounters, t, VisitClass::Outpatient, &[], "Routine visit.".into());
    }

    let code = |rng: &mut rand_chacha::ChaCha8Rng| *codes.choose(rng).unwrap();
    let c0 = code(&mut rng);
    let note = writer.episode_note(profile, cfg.noise, &mut rng);
    push(&mut encounters, t0, VisitClass::Outpatient, &[c0], note);
    let mut last = t0;
    match scenario {
        Scenario::A => {}
        Scenario::B => {
            let t1 = t0 + tau + rng.random_range(1..=120);
            let c1 = code(&mut rng);
            let note = writer.episode_note(profile, cfg.noise, &mut rng);
            push(&mut encounters, t1, VisitClass::Outpatient, &[c1], note);
            last = t1;
        }
        Scenario::C => {
            let others: Vec<usize> = (0..world.profiles.len()).filter(|&i| i != d).collect();
            let t1 = t0 + rng.random_range(1..tau);
            let q = match others.choose(&mut rng) {
                Some(&q) => world.profiles[q].phenotype.codes.iter().next().unwrap().as_str(),
                // a one-disease world has no confounder; use an unrelated code
                None => "ZZZ.9",
            };
            push(
                &mut encounters,
                t1,
                VisitClass::Inpatient,
                &[q],
                "Admitted for evaluation.".into(),
            );
            last = t1;
        }
        Scenario::D => {
            let t1 = t0 + rng.random_range(1..tau);
            let c1 = code(&mut rng);
            let mut note = "Follow-up visit. Symptoms improving.".to_string();
            if let Some(extra) = writer.universe.symptoms().choose(&mut rng) {
                note.push_str(&format!(" Now reports {extra}."));
            }
            push(&mut encounters, t1, VisitClass::Outpatient, &[c1], note);
            last = t1;
        }
    }
    if rng.random_bool(0.3) {
        let t = last + tau + rng.random_range(0..200);
        push(
            &mut encounters,
            t,
            VisitClass::Outpatient,
            &[],
            "Annual physical.".into(),
        );
    }

    let truth = PatientTruth {
        patient_id: patient_id.clone(),
        disease: profile.disease.clone(),
        scenario,
    };
    (
        Timeline {
            patient_id,
            age: None,
            encounters,
        },
        truth,
    )
}

/// Timelines plus each patient's drawn disease and scenario.
pub fn generate_timelines_with_truth(world: &World, cfg: &GenConfig) -> Result<(Vec<Timeline>, Vec<PatientTruth>)> {
    if world.profiles.is_empty() {
        return Err(Error::invalid_arg("world has no diseases"));
    }
    cfg.validate()?;
    let writer = NoteWriter::new(&world.universe);
    let out: Vec<(Timeline, PatientTruth)> = (0..cfg.n_patients)
        .into_par_iter()
        .map(|i| generate_patient(world, cfg, i, &writer))
        .collect();
    Ok(out.into_iter().unzip())
}

pub fn generate_timelines(world: &World, cfg: &GenConfig) -> Result<Vec<Timeline>> {
    Ok(generate_timelines_with_truth(world, cfg)?.0)
}
