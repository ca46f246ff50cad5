//! Patients, encounters, phenotypes, findings and clinical cases.
//!
//! Everything here is plain data: immutable once built and `Send + Sync`.
//! ICD codes are opaque strings compared after trimming and uppercasing.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Canonical form used for every ICD code comparison.
pub fn normalize_code(code: &str) -> String {
    code.trim().to_uppercase()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VisitClass {
    Outpatient,
    Inpatient,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Encounter {
    pub encounter_id: String,
    /// Days since the corpus epoch.
    pub time: i64,
    pub visit_class: VisitClass,
    #[serde(default)]
    pub icd_codes: BTreeSet<String>,
    #[serde(default)]
    pub note: String,
}

impl Encounter {
    /// True if any of this encounter's codes belongs to `phenotype`.
    pub fn matches(&self, phenotype: &Phenotype) -> bool {
        self.icd_codes.iter().any(|c| phenotype.contains(c))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timeline {
    pub patient_id: String,
    /// Optional age in years; synthetic corpora usually leave it unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age: Option<u32>,
    pub encounters: Vec<Encounter>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NegativeTime { index: usize, time: i64 },
    DuplicateTime { index: usize, time: i64 },
    OutOfOrder { index: usize, previous: i64, time: i64 },
    DuplicateId { index: usize, encounter_id: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeTime { index, time } => {
                write!(f, "encounter {index}: negative time {time}")
            }
            Violation::DuplicateTime { index, time } => {
                write!(f, "encounter {index}: duplicate time {time}")
            }
            Violation::OutOfOrder { index, previous, time } => {
                write!(f, "encounter {index}: time {time} precedes {previous}")
            }
            Violation::DuplicateId { index, encounter_id } => {
                write!(f, "encounter {index}: duplicate id `{encounter_id}`")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Validation {
    pub violations: Vec<Violation>,
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that encounter times are non-negative and strictly increasing and
/// that encounter ids are unique. Every violation is reported.
pub fn validate_timeline(timeline: &Timeline) -> Validation {
    let mut violations = Vec::new();
    let mut seen = HashSet::new();
    for (index, enc) in timeline.encounters.iter().enumerate() {
        if enc.time < 0 {
            violations.push(Violation::NegativeTime { index, time: enc.time });
        }
        if index > 0 {
            let previous = timeline.encounters[index - 1].time;
            if enc.time == previous {
                violations.push(Violation::DuplicateTime { index, time: enc.time });
            } else if enc.time < previous {
                violations.push(Violation::OutOfOrder {
                    index,
                    previous,
                    time: enc.time,
                });
            }
        }
        if !seen.insert(enc.encounter_id.as_str()) {
            violations.push(Violation::DuplicateId {
                index,
                encounter_id: enc.encounter_id.clone(),
            });
        }
    }
    Validation { violations }
}

/// The set of codes that identifies one disease.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPhenotype")]
pub struct Phenotype {
    pub disease: String,
    pub codes: BTreeSet<String>,
}

#[derive(Deserialize)]
struct RawPhenotype {
    disease: String,
    codes: Vec<String>,
}

impl TryFrom<RawPhenotype> for Phenotype {
    type Error = Error;

    fn try_from(raw: RawPhenotype) -> Result<Self> {
        Phenotype::new(raw.disease, raw.codes)
    }
}

impl Phenotype {
    pub fn new<I, S>(disease: impl Into<String>, codes: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let disease = disease.into();
        let codes: BTreeSet<String> = codes
            .into_iter()
            .map(|c| normalize_code(c.as_ref()))
            .filter(|c| !c.is_empty())
            .collect();
        if codes.is_empty() {
            return Err(Error::InvalidInput(format!("phenotype `{disease}` has no codes")));
        }
        Ok(Phenotype { disease, codes })
    }

    pub fn contains(&self, code: &str) -> bool {
        self.codes.contains(&normalize_code(code))
    }
}

/// Loads a phenotype map: a TOML table mapping disease name to code list.
///
/// ```toml
/// GERD = ["530.11", "530.81", "K21.0", "K21.9"]
/// ```
pub fn load_phenotypes(path: &Path) -> Result<Vec<Phenotype>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_phenotypes(&text)
}

pub fn parse_phenotypes(text: &str) -> Result<Vec<Phenotype>> {
    let map: BTreeMap<String, Vec<String>> = toml::from_str(text)?;
    map.into_iter()
        .map(|(disease, codes)| Phenotype::new(disease, codes))
        .collect()
}

pub fn phenotypes_to_toml(phenotypes: &[Phenotype]) -> String {
    let map: BTreeMap<&str, Vec<&str>> = phenotypes
        .iter()
        .map(|p| (p.disease.as_str(), p.codes.iter().map(String::as_str).collect()))
        .collect();
    toml::to_string(&map).expect("phenotype map is always representable")
}

/// Example phenotype map covering fifteen common outpatient conditions.
pub const BUNDLED_PHENOTYPES: &str = include_str!("../data/phenotypes.toml");

/// The universe of patient-answerable symptoms, in feature order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawUniverse")]
pub struct SymptomUniverse {
    symptoms: Vec<String>,
    #[serde(default)]
    synonyms: BTreeMap<String, String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct RawUniverse {
    symptoms: Vec<String>,
    #[serde(default)]
    synonyms: BTreeMap<String, String>,
}

impl TryFrom<RawUniverse> for SymptomUniverse {
    type Error = Error;

    fn try_from(raw: RawUniverse) -> Result<Self> {
        SymptomUniverse::new(raw.symptoms, raw.synonyms)
    }
}

impl SymptomUniverse {
    pub fn new(symptoms: Vec<String>, synonyms: BTreeMap<String, String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(symptoms.len());
        for (i, s) in symptoms.iter().enumerate() {
            if s.trim().is_empty() {
                return Err(Error::InvalidInput("empty symptom name".into()));
            }
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate symptom `{s}`")));
            }
        }
        for (surface, canonical) in &synonyms {
            if !index.contains_key(canonical) {
                return Err(Error::InvalidInput(format!(
                    "synonym `{surface}` maps to unknown symptom `{canonical}`"
                )));
            }
        }
        Ok(SymptomUniverse {
            symptoms,
            synonyms,
            index,
        })
    }

    pub fn from_names<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(names.into_iter().map(Into::into).collect(), BTreeMap::new())
    }

    pub fn len(&self) -> usize {
        self.symptoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symptoms.is_empty()
    }

    pub fn symptoms(&self) -> &[String] {
        &self.symptoms
    }

    pub fn synonyms(&self) -> &BTreeMap<String, String> {
        &self.synonyms
    }

    pub fn index_of(&self, symptom: &str) -> Option<usize> {
        self.index.get(symptom).copied()
    }

    pub fn contains(&self, symptom: &str) -> bool {
        self.index.contains_key(symptom)
    }

    /// Hex SHA-256 over the ordered symptom list. Two universes with the same
    /// digest produce identical feature layouts.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for s in &self.symptoms {
            h.update(s.as_bytes());
            h.update([0u8]);
        }
        hex_digest(h)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn hex_digest(h: Sha256) -> String {
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Present,
    Absent,
}

/// A symptom mentioned with a polarity. Equality is on the pair, so a case
/// can hold both `fever:present` and `fever:absent`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Finding {
    pub symptom: String,
    pub polarity: Polarity,
}

impl Finding {
    pub fn present(symptom: impl Into<String>) -> Self {
        Finding {
            symptom: symptom.into(),
            polarity: Polarity::Present,
        }
    }

    pub fn absent(symptom: impl Into<String>) -> Self {
        Finding {
            symptom: symptom.into(),
            polarity: Polarity::Absent,
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.polarity {
            Polarity::Present => write!(f, "{}", self.symptom),
            Polarity::Absent => write!(f, "NOT {}", self.symptom),
        }
    }
}

/// One labeled example: findings plus the ground-truth disease.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClinicalCase {
    pub patient_id: String,
    pub label: String,
    pub findings: BTreeSet<Finding>,
}

/// Reads a JSONL file, one value per non-blank line. Parse failures name the
/// 1-based line number.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: json_message(&e),
        })?;
        out.push(value);
    }
    Ok(out)
}

/// serde_json's message with its "at line 1 column N" suffix reduced to the
/// column.
fn json_message(e: &serde_json::Error) -> String {
    let full = e.to_string();
    let head = full.split(" at line ").next().unwrap_or(&full);
    format!("{head} (column {})", e.column())
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Loads a corpus and rejects any timeline that fails [`validate_timeline`].
pub fn load_corpus(path: &Path) -> Result<Vec<Timeline>> {
    let corpus: Vec<Timeline> = read_jsonl(path)?;
    for (i, t) in corpus.iter().enumerate() {
        let v = validate_timeline(t);
        if let Some(first) = v.violations.first() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("patient `{}`: {first}", t.patient_id),
            });
        }
    }
    Ok(corpus)
}
