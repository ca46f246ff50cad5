//! Dictionary entity matching and NegEx-style negation scoping for notes.

use std::collections::{BTreeSet, HashMap};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ehr::{Finding, Polarity, SymptomUniverse};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Lowercased token text.
    pub text: String,
    /// Byte range in the source text.
    pub offset: Range<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Splits text into sentences of lowercased tokens. Words are runs of
/// alphanumerics, optionally joined by `-` or `'`; decimals such as `38.5`
/// stay whole; every other non-space character is its own token. A sentence
/// ends after `.`, `!`, `?` or a newline.
pub fn tokenize(text: &str) -> Vec<Sentence> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let end_of = |i: usize| chars.get(i).map_or(text.len(), |&(b, _)| b);
    let mut sentences = Vec::new();
    let mut current = Sentence::default();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        if c == '\n' {
            if !current.tokens.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if is_word_char(c) {
            let mut j = i + 1;
            while j < chars.len() {
                let cj = chars[j].1;
                if is_word_char(cj) {
                    j += 1;
                } else if matches!(cj, '-' | '\'' | '.')
                    && j + 1 < chars.len()
                    && is_word_char(chars[j + 1].1)
                    && (cj != '.' || (chars[j - 1].1.is_ascii_digit() && chars[j + 1].1.is_ascii_digit()))
                {
                    j += 2;
                } else {
                    break;
                }
            }
            let end = end_of(j);
            current.tokens.push(Token {
                text: text[start..end].to_lowercase(),
                offset: start..end,
            });
            i = j;
            continue;
        }
        let end = end_of(i + 1);
        current.tokens.push(Token {
            text: c.to_string(),
            offset: start..end,
        });
        if matches!(c, '.' | '!' | '?') {
            sentences.push(std::mem::take(&mut current));
        }
        i += 1;
    }
    if !current.tokens.is_empty() {
        sentences.push(current);
    }
    sentences
}

fn phrase_tokens(phrase: &str) -> Vec<String> {
    tokenize(phrase)
        .into_iter()
        .flat_map(|s| s.tokens)
        .map(|t| t.text)
        .collect()
}

/// A symptom mention inside one sentence. `span` indexes the sentence's tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub symptom: String,
    pub polarity: Polarity,
    pub sentence_index: usize,
    pub span: Range<usize>,
}

/// Longest-match lookup over a universe's canonical names and synonyms.
/// Canonical names match with `_` read as a space.
#[derive(Debug, Clone)]
pub struct EntityMatcher {
    forms: HashMap<Vec<String>, usize>,
    max_len: usize,
    symptoms: Vec<String>,
}

impl EntityMatcher {
    pub fn new(universe: &SymptomUniverse) -> Self {
        let mut forms = HashMap::new();
        for (surface, canonical) in universe.synonyms() {
            let idx = universe.index_of(canonical).expect("universe validated");
            let toks = phrase_tokens(surface);
            if !toks.is_empty() {
                forms.insert(toks, idx);
            }
        }
        // canonical names win over colliding synonyms
        for (idx, name) in universe.symptoms().iter().enumerate() {
            let toks = phrase_tokens(&name.replace('_', " "));
            if !toks.is_empty() {
                forms.insert(toks, idx);
            }
        }
        let max_len = forms.keys().map(Vec::len).max().unwrap_or(0);
        EntityMatcher {
            forms,
            max_len,
            symptoms: universe.symptoms().to_vec(),
        }
    }

    /// Leftmost-longest, non-overlapping matches in one sentence.
    pub fn match_sentence(&self, sentence: &Sentence, sentence_index: usize) -> Vec<Mention> {
        let words: Vec<&str> = sentence.tokens.iter().map(|t| t.text.as_str()).collect();
        let mut out = Vec::new();
        let mut key: Vec<String> = Vec::with_capacity(self.max_len);
        let mut i = 0;
        while i < words.len() {
            let mut found = None;
            let longest = self.max_len.min(words.len() - i);
            for len in (1..=longest).rev() {
                key.clear();
                key.extend(words[i..i + len].iter().map(|w| w.to_string()));
                if let Some(&idx) = self.forms.get(&key) {
                    found = Some((len, idx));
                    break;
                }
            }
            match found {
                Some((len, idx)) => {
                    out.push(Mention {
                        symptom: self.symptoms[idx].clone(),
                        polarity: Polarity::Present,
                        sentence_index,
                        span: i..i + len,
                    });
                    i += len;
                }
                None => i += 1,
            }
        }
        out
    }
}

/// Finds every universe symptom mentioned in `text`; polarity is provisional
/// (`Present`) until [`detect_negation`] runs.
pub fn match_entities(text: &str, universe: &SymptomUniverse) -> Vec<Mention> {
    let matcher = EntityMatcher::new(universe);
    tokenize(text)
        .iter()
        .enumerate()
        .flat_map(|(i, s)| matcher.match_sentence(s, i))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NegationRules {
    pub pre_triggers: Vec<String>,
    pub post_triggers: Vec<String>,
    pub terminators: Vec<String>,
    pub window: usize,
}

impl Default for NegationRules {
    fn default() -> Self {
        let strs = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        NegationRules {
            pre_triggers: strs(&["no", "denies", "without", "not", "negative for"]),
            post_triggers: strs(&["is ruled out"]),
            terminators: strs(&["but", "however", ";", "."]),
            window: 6,
        }
    }
}

impl NegationRules {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::invalid_arg("negation window must be at least 1"));
        }
        if self.pre_triggers.is_empty() || self.post_triggers.is_empty() {
            return Err(Error::invalid_arg("negation trigger lists must be non-empty"));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rules: NegationRules = toml::from_str(&text)?;
        rules.validate()?;
        Ok(rules)
    }

    fn compile(&self) -> CompiledRules {
        let compile = |v: &[String]| -> Vec<Vec<String>> {
            v.iter().map(|p| phrase_tokens(p)).filter(|t| !t.is_empty()).collect()
        };
        CompiledRules {
            pre: compile(&self.pre_triggers),
            post: compile(&self.post_triggers),
            term: compile(&self.terminators),
            window: self.window,
        }
    }
}

struct CompiledRules {
    pre: Vec<Vec<String>>,
    post: Vec<Vec<String>>,
    term: Vec<Vec<String>>,
    window: usize,
}

fn ends_at(words: &[&str], end: usize, phrase: &[String]) -> bool {
    let len = phrase.len();
    end + 1 >= len && words[end + 1 - len..=end].iter().zip(phrase).all(|(w, p)| *w == p)
}

fn starts_at(words: &[&str], start: usize, phrase: &[String]) -> bool {
    start + phrase.len() <= words.len()
        && words[start..start + phrase.len()]
            .iter()
            .zip(phrase)
            .all(|(w, p)| *w == p)
}

impl CompiledRules {
    fn negated(&self, words: &[&str], span: &Range<usize>) -> bool {
        // pre-triggers: trigger ends within `window` tokens before the mention
        let lo = span.start.saturating_sub(self.window);
        for p in (lo..span.start).rev() {
            if self.term.iter().any(|t| ends_at(words, p, t)) {
                break;
            }
            if self.pre.iter().any(|t| ends_at(words, p, t)) {
                return true;
            }
        }
        // post-triggers: trigger starts within `window` tokens after it
        let hi = (span.end + self.window).min(words.len());
        for p in span.end..hi {
            if self.term.iter().any(|t| starts_at(words, p, t)) {
                break;
            }
            if self.post.iter().any(|t| starts_at(words, p, t)) {
                return true;
            }
        }
        false
    }
}

/// Sets the final polarity of each mention in one sentence. Mentions are
/// neither added nor removed.
pub fn detect_negation(sentence_tokens: &[Token], mentions: Vec<Mention>, rules: &NegationRules) -> Vec<Mention> {
    let compiled = rules.compile();
    let words: Vec<&str> = sentence_tokens.iter().map(|t| t.text.as_str()).collect();
    mentions
        .into_iter()
        .map(|mut m| {
            m.polarity = if compiled.negated(&words, &m.span) {
                Polarity::Absent
            } else {
                Polarity::Present
            };
            m
        })
        .collect()
}

/// Matcher plus compiled rules, reusable across many notes.
pub struct FindingExtractor {
    matcher: EntityMatcher,
    rules: CompiledRules,
}

impl FindingExtractor {
    pub fn new(universe: &SymptomUniverse, rules: &NegationRules) -> Self {
        FindingExtractor {
            matcher: EntityMatcher::new(universe),
            rules: rules.compile(),
        }
    }

    pub fn mentions(&self, text: &str) -> Vec<Mention> {
        let mut out = Vec::new();
        for (i, sentence) in tokenize(text).iter().enumerate() {
            let words: Vec<&str> = sentence.tokens.iter().map(|t| t.text.as_str()).collect();
            for mut m in self.matcher.match_sentence(sentence, i) {
                if self.rules.negated(&words, &m.span) {
                    m.polarity = Polarity::Absent;
                }
                out.push(m);
            }
        }
        out
    }

    /// Deduplicated (symptom, polarity) pairs. Conflicting polarities for the
    /// same symptom are both kept.
    pub fn findings(&self, text: &str) -> BTreeSet<Finding> {
        self.mentions(text)
            .into_iter()
            .map(|m| Finding {
                symptom: m.symptom,
                polarity: m.polarity,
            })
            .collect()
    }
}

/// One row of a labeled negation corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegationExample {
    pub sentence: String,
    pub symptom: String,
    pub gold: Polarity,
}

/// Reads `sentence<TAB>symptom<TAB>present|absent` rows; `#` lines are comments.
pub fn parse_negation_corpus(text: &str) -> Result<Vec<NegationExample>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let bad = |msg: &str| Error::InvalidInput(format!("negation corpus line {}: {msg}", i + 1));
        if cols.len() != 3 {
            return Err(bad("expected 3 tab-separated columns"));
        }
        let gold = match cols[2].trim() {
            "present" => Polarity::Present,
            "absent" => Polarity::Absent,
            other => return Err(bad(&format!("unknown polarity `{other}`"))),
        };
        out.push(NegationExample {
            sentence: cols[0].trim().to_string(),
            symptom: cols[1].trim().to_string(),
            gold,
        });
    }
    Ok(out)
}

/// Labeled sentences for checking the negation rules.
pub const NEGATION_MINI_CORPUS: &str = include_str!("../data/negation_minicorpus.tsv");

#[derive(Debug, Clone, PartialEq)]
pub struct NegationReport {
    pub total: usize,
    pub correct: usize,
    /// Rows where the symptom was missed or got the wrong polarity.
    pub errors: Vec<(usize, String)>,
}

impl NegationReport {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.correct as f64 / self.total as f64
    }
}

/// Scores polarity assignment on a labeled corpus. The universe is the set of
/// symptoms named in the corpus.
pub fn evaluate_negation(examples: &[NegationExample], rules: &NegationRules) -> Result<NegationReport> {
    let names: BTreeSet<&str> = examples.iter().map(|e| e.symptom.as_str()).collect();
    let universe = SymptomUniverse::from_names(names)?;
    let extractor = FindingExtractor::new(&universe, rules);
    let mut correct = 0;
    let mut errors = Vec::new();
    for (row, ex) in examples.iter().enumerate() {
        let got: Vec<Polarity> = extractor
            .mentions(&ex.sentence)
            .into_iter()
            .filter(|m| m.symptom == ex.symptom)
            .map(|m| m.polarity)
            .collect();
        if got.len() == 1 && got[0] == ex.gold {
            correct += 1;
        } else {
            errors.push((row, format!("{}: {:?} -> {:?}", ex.sentence, ex.gold, got)));
        }
    }
    Ok(NegationReport {
        total: examples.len(),
        correct,
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn universe(names: &[&str]) -> SymptomUniverse {
        SymptomUniverse::from_names(names.iter().copied()).unwrap()
    }

    fn polarity_of(text: &str, u: &SymptomUniverse, symptom: &str) -> Vec<Polarity> {
        FindingExtractor::new(u, &NegationRules::default())
            .mentions(text)
            .into_iter()
            .filter(|m| m.symptom == symptom)
            .map(|m| m.polarity)
            .collect()
    }

    #[test]
    fn tokenizer_splits_sentences_and_keeps_decimals() {
        let s = tokenize("Temp 38.5, light-headed. No cough!\nRash");
        assert_eq!(s.len(), 3);
        let words: Vec<&str> = s[0].tokens.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(words, ["temp", "38.5", ",", "light-headed", "."]);
        assert_eq!(s[2].tokens[0].text, "rash");
        assert_eq!(s[2].tokens[0].offset, 35..39);
    }

    #[test]
    fn single_mention_found() {
        let m = match_entities("Patient reports fever.", &universe(&["fever"]));
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].symptom, "fever");
        assert_eq!(m[0].sentence_index, 0);
        assert_eq!(m[0].span, 2..3);
    }

    #[test]
    fn longest_match_wins() {
        let mut syn = BTreeMap::new();
        syn.insert("chest pain".to_string(), "chest_pain".to_string());
        syn.insert("pain".to_string(), "pain".to_string());
        let u = SymptomUniverse::new(vec!["chest_pain".into(), "pain".into()], syn).unwrap();
        let m = match_entities("severe chest pain", &u);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].symptom, "chest_pain");
    }

    #[test]
    fn unknown_terms_never_match() {
        assert!(match_entities("lightheadedness", &universe(&["fever", "dizziness"])).is_empty());
        assert!(match_entities("", &universe(&["fever"])).is_empty());
    }

    #[test]
    fn pre_trigger_negates() {
        let u = universe(&["fever"]);
        assert_eq!(polarity_of("no fever", &u, "fever"), [Polarity::Absent]);
        assert_eq!(polarity_of("patient reports fever", &u, "fever"), [Polarity::Present]);
    }

    #[test]
    fn terminator_ends_scope() {
        let u = universe(&["chest pain", "cough"]);
        let text = "denies chest pain but reports cough";
        assert_eq!(polarity_of(text, &u, "chest pain"), [Polarity::Absent]);
        assert_eq!(polarity_of(text, &u, "cough"), [Polarity::Present]);
    }

    #[test]
    fn post_trigger_and_window() {
        let u = universe(&["strep throat", "rash"]);
        assert_eq!(
            polarity_of("strep throat is ruled out", &u, "strep throat"),
            [Polarity::Absent]
        );
        // trigger seven tokens back is out of reach
        let far = "no one two three four five six rash";
        assert_eq!(polarity_of(far, &u, "rash"), [Polarity::Present]);
        let near = "no one two three four five rash";
        assert_eq!(polarity_of(near, &u, "rash"), [Polarity::Absent]);
    }

    #[test]
    fn conflicting_mentions_both_kept() {
        let u = universe(&["fever"]);
        let ex = FindingExtractor::new(&u, &NegationRules::default());
        let f = ex.findings("No fever. Return if fever develops.");
        assert!(f.contains(&Finding::absent("fever")));
        assert!(f.contains(&Finding::present("fever")));
    }

    #[test]
    fn detect_negation_preserves_mentions() {
        let u = universe(&["fever", "cough"]);
        let s = &tokenize("no fever or cough")[0];
        let mentions = EntityMatcher::new(&u).match_sentence(s, 0);
        let out = detect_negation(&s.tokens, mentions.clone(), &NegationRules::default());
        assert_eq!(out.len(), mentions.len());
        assert!(out.iter().all(|m| m.polarity == Polarity::Absent));
        for (a, b) in out.iter().zip(&mentions) {
            assert_eq!((&a.symptom, &a.span), (&b.symptom, &b.span));
        }
    }

    #[test]
    fn rules_validation_and_toml() {
        let mut r = NegationRules::default();
        assert!(r.validate().is_ok());
        r.window = 0;
        assert!(r.validate().is_err());
        let parsed: NegationRules = toml::from_str("window = 3\npre_triggers = [\"absent\"]").unwrap();
        assert_eq!(parsed.window, 3);
        assert_eq!(parsed.post_triggers, NegationRules::default().post_triggers);
    }

    #[test]
    fn mini_corpus_parses() {
        let rows = parse_negation_corpus(NEGATION_MINI_CORPUS).unwrap();
        assert_eq!(rows.len(), 40);
        assert!(parse_negation_corpus("a\tb\tmaybe").is_err());
    }
}
