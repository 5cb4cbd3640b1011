//! Virtual pilot read-back generation: grammar conversion (callsign moved
//! to the end), word fixing with the `rules.txt` table, optional read-back
//! error insertion and rendering.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entity::{CommandCategory, ParsedCommunication};
use crate::phraseology::{alphabet_words, digit_words, is_digit_word, is_letter_word, word_to_char};

const DEFAULT_RULES: &str = include_str!("../assets/rules.txt");

/// Right-hand side token that drops the matched command.
pub const DROP_TOKEN: &str = "NONE";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RulesError {
    #[error("rules line {line}: duplicate lhs {lhs:?}")]
    DuplicateLhs { line: usize, lhs: String },
    #[error("rules line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("rules: {0}")]
    Io(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum RbeError {
    #[error("no allowed read-back error kind applies to this plan")]
    NoApplicableKind,
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rhs {
    Phrase(Vec<String>),
    Drop,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordFixerRule {
    pub lhs: Vec<String>,
    pub rhs: Rhs,
    pub category: CommandCategory,
    /// Set when an earlier rule has the same lhs; never applied.
    pub shadowed: bool,
}

impl WordFixerRule {
    fn drops_values(&self) -> bool {
        self.rhs == Rhs::Drop && self.category == CommandCategory::Handover
    }
}

impl fmt::Display for WordFixerRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rhs = match &self.rhs {
            Rhs::Phrase(words) => words.join(" "),
            Rhs::Drop => DROP_TOKEN.to_string(),
        };
        write!(f, "{} -> {rhs} [{}]", self.lhs.join(" "), self.category)
    }
}

/// What to do when a later rule repeats an earlier lhs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DuplicatePolicy {
    #[default]
    Reject,
    /// Keep the first rule active and mark later ones as shadowed.
    Shadow,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleLint {
    /// Later duplicate of an lhs; only the first rule applies.
    Shadowed { rule: usize, first: usize },
    /// Rule maps a phrase onto itself.
    Identity { rule: usize },
    /// Re-applying the table to this rule's output changes it again.
    NotIdempotent { rule: usize, second_pass: String },
    /// The rhs swaps one command keyword for a different one.
    SuspectKeyword { rule: usize, from: String, to: String },
}

const COMMAND_KEYWORDS: [&str; 3] = ["heading", "altitude", "speed"];

/// Ordered rule table.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WordFixerRules {
    pub rules: Vec<WordFixerRule>,
}

impl WordFixerRules {
    /// The bundled table.
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_RULES, DuplicatePolicy::Shadow).expect("bundled rules are valid")
    }

    pub fn parse(text: &str, policy: DuplicatePolicy) -> Result<Self, RulesError> {
        let mut rules: Vec<WordFixerRule> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let malformed = |reason: &str| RulesError::MalformedLine { line: i + 1, reason: reason.into() };
            let (lhs, rest) = line.split_once("->").ok_or_else(|| malformed("missing '->'"))?;
            let rest = rest.trim();
            let (rhs, category) = match rest.rfind('[') {
                Some(open) if rest.ends_with(']') => (rest[..open].trim(), &rest[open + 1..rest.len() - 1]),
                _ => return Err(malformed("missing [category]")),
            };
            let category: CommandCategory = category.trim().parse().map_err(|e: String| malformed(&e))?;
            let lhs: Vec<String> = lhs.split_whitespace().map(str::to_string).collect();
            if lhs.is_empty() {
                return Err(malformed("empty lhs"));
            }
            if lhs.iter().any(|w| w.chars().any(|c| c.is_uppercase())) {
                return Err(malformed("lhs must be lowercase"));
            }
            let rhs = match rhs {
                DROP_TOKEN => Rhs::Drop,
                "" => return Err(malformed("empty rhs")),
                words => Rhs::Phrase(words.split_whitespace().map(str::to_lowercase).collect()),
            };
            let shadowed = match rules.iter().position(|r| r.lhs == lhs) {
                Some(_) if policy == DuplicatePolicy::Reject => {
                    return Err(RulesError::DuplicateLhs { line: i + 1, lhs: lhs.join(" ") })
                }
                Some(_) => true,
                None => false,
            };
            rules.push(WordFixerRule { lhs, rhs, category, shadowed });
        }
        let table = Self { rules };
        for lint in table.lints() {
            log::debug!("rules lint: {lint:?}");
        }
        Ok(table)
    }

    /// Strict load: duplicate lhs is an error.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, RulesError> {
        Self::load_with(path, DuplicatePolicy::Reject)
    }

    pub fn load_with(path: impl AsRef<Path>, policy: DuplicatePolicy) -> Result<Self, RulesError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| RulesError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text, policy)
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Longest active rule whose lhs prefixes `words`; earliest on ties.
    fn longest_match(&self, words: &[String]) -> Option<(usize, &WordFixerRule)> {
        self.rules
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.shadowed && r.lhs.len() <= words.len() && r.lhs[..] == words[..r.lhs.len()])
            .fold(None, |best, (i, r)| match best {
                Some((_, b)) if b.lhs.len() >= r.lhs.len() => best,
                _ => Some((i, r)),
            })
    }

    /// Load-time diagnostics over the table.
    pub fn lints(&self) -> Vec<RuleLint> {
        let mut lints = Vec::new();
        for (i, rule) in self.rules.iter().enumerate() {
            if rule.shadowed {
                let first = self.rules.iter().position(|r| r.lhs == rule.lhs).unwrap_or(i);
                lints.push(RuleLint::Shadowed { rule: i, first });
                continue;
            }
            let Rhs::Phrase(rhs) = &rule.rhs else { continue };
            if *rhs == rule.lhs {
                lints.push(RuleLint::Identity { rule: i });
            }
            let (again, _) = fix_command(rhs, self);
            if again != *rhs {
                lints.push(RuleLint::NotIdempotent { rule: i, second_pass: again.join(" ") });
            }
            let from = COMMAND_KEYWORDS.iter().find(|k| rule.lhs.iter().any(|w| w == *k));
            let to = COMMAND_KEYWORDS.iter().find(|k| rhs.iter().any(|w| w == *k));
            if let (Some(from), Some(to)) = (from, to) {
                if from != to && !rhs.iter().any(|w| w == from) {
                    lints.push(RuleLint::SuspectKeyword { rule: i, from: from.to_string(), to: to.to_string() });
                }
            }
        }
        lints
    }
}

/// One command with its values in the read-back.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanElement {
    pub command: Vec<String>,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RbeKind {
    DirectionFlip,
    ValueDigitSwap,
    CallsignCorruption,
}

impl RbeKind {
    pub const ALL: [RbeKind; 3] = [RbeKind::DirectionFlip, RbeKind::ValueDigitSwap, RbeKind::CallsignCorruption];
}

impl std::str::FromStr for RbeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "DIRECTION_FLIP" => Ok(RbeKind::DirectionFlip),
            "VALUE_DIGIT_SWAP" => Ok(RbeKind::ValueDigitSwap),
            "CALLSIGN_CORRUPTION" => Ok(RbeKind::CallsignCorruption),
            other => Err(format!("unknown read-back error kind {other:?}")),
        }
    }
}

/// Location of an inserted read-back error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "part", rename_all = "snake_case")]
pub enum RbeSite {
    Command { element: usize, word: usize },
    Value { element: usize, word: usize },
    Callsign { word: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadbackError {
    pub kind: RbeKind,
    pub original: String,
    pub replacement: String,
    pub site: RbeSite,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReadbackPlan {
    pub elements: Vec<PlanElement>,
    pub callsign_words: Vec<String>,
    pub rbe: Option<ReadbackError>,
}

impl ReadbackPlan {
    pub fn is_empty(&self) -> bool {
        self.elements.is_empty() && self.callsign_words.is_empty()
    }
}

fn owned(words: Vec<&str>) -> Vec<String> {
    words.into_iter().map(str::to_string).collect()
}

/// Reorders the parse for the pilot: commands with their values in parse
/// order, callsign last. Unattached values become command-less elements.
pub fn convert_grammar(p: &ParsedCommunication) -> ReadbackPlan {
    let mut keyed: Vec<(usize, PlanElement)> = p
        .pairs
        .iter()
        .map(|pair| {
            let element = PlanElement {
                command: owned(p.words(&pair.command)),
                values: pair.values.iter().flat_map(|v| p.words(v)).map(str::to_string).collect(),
            };
            (pair.command.start, element)
        })
        .chain(p.unattached.iter().map(|v| (v.start, PlanElement { command: Vec::new(), values: owned(p.words(v)) })))
        .collect();
    keyed.sort_by_key(|(start, _)| *start);
    ReadbackPlan {
        elements: keyed.into_iter().map(|(_, e)| e).collect(),
        callsign_words: owned(p.callsign_words()),
        rbe: None,
    }
}

/// A rule fired while fixing one element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleApplication {
    pub element: usize,
    pub rule: usize,
    pub lhs: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FixOutcome {
    pub plan: ReadbackPlan,
    pub applied: Vec<RuleApplication>,
    /// Elements whose command matched no rule.
    pub unmatched: Vec<usize>,
}

struct CommandFix {
    applied: Vec<usize>,
    drop_values: bool,
}

/// Single left-to-right pass with longest-lhs matching. A word produced by
/// a rule is not emitted twice within one command.
fn fix_command(command: &[String], rules: &WordFixerRules) -> (Vec<String>, CommandFix) {
    let mut out: Vec<String> = Vec::with_capacity(command.len());
    let mut fix = CommandFix { applied: Vec::new(), drop_values: false };
    let mut i = 0;
    while i < command.len() {
        match rules.longest_match(&command[i..]) {
            Some((idx, rule)) => {
                fix.applied.push(idx);
                match &rule.rhs {
                    Rhs::Drop => fix.drop_values |= rule.drops_values(),
                    Rhs::Phrase(words) => {
                        for w in words {
                            if !out.contains(w) {
                                out.push(w.clone());
                            }
                        }
                    }
                }
                i += rule.lhs.len();
            }
            None => {
                out.push(command[i].clone());
                i += 1;
            }
        }
    }
    (out, fix)
}

pub fn apply_word_fixer(plan: &ReadbackPlan, rules: &WordFixerRules) -> FixOutcome {
    let mut outcome = FixOutcome { plan: ReadbackPlan { elements: Vec::new(), ..plan.clone() }, ..Default::default() };
    for (index, element) in plan.elements.iter().enumerate() {
        let (command, fix) = fix_command(&element.command, rules);
        if fix.applied.is_empty() && !element.command.is_empty() {
            log::warn!("word fixer: no rule for command {:?}", element.command.join(" "));
            outcome.unmatched.push(index);
        }
        let element_index = outcome.plan.elements.len();
        outcome.applied.extend(fix.applied.iter().map(|&rule| RuleApplication {
            element: element_index,
            rule,
            lhs: rules.rules[rule].lhs.join(" "),
        }));
        let values = if fix.drop_values { Vec::new() } else { element.values.clone() };
        if command.is_empty() && values.is_empty() {
            continue;
        }
        outcome.plan.elements.push(PlanElement { command, values });
    }
    outcome
}

/// Space-joined read-back: each element's command then values, callsign last.
pub fn render_readback(plan: &ReadbackPlan) -> String {
    plan.elements
        .iter()
        .flat_map(|e| e.command.iter().chain(&e.values))
        .chain(&plan.callsign_words)
        .map(String::as_str)
        .collect::<Vec<_>>()
        .join(" ")
}

fn candidate_sites(plan: &ReadbackPlan, kind: RbeKind) -> Vec<RbeSite> {
    let mut sites = Vec::new();
    match kind {
        RbeKind::DirectionFlip => {
            for (e, el) in plan.elements.iter().enumerate() {
                for (w, word) in el.command.iter().enumerate() {
                    if word == "left" || word == "right" {
                        sites.push(RbeSite::Command { element: e, word: w });
                    }
                }
            }
        }
        RbeKind::ValueDigitSwap => {
            for (e, el) in plan.elements.iter().enumerate() {
                for (w, word) in el.values.iter().enumerate() {
                    if is_digit_word(word) {
                        sites.push(RbeSite::Value { element: e, word: w });
                    }
                }
            }
        }
        RbeKind::CallsignCorruption => {
            for (w, word) in plan.callsign_words.iter().enumerate() {
                if is_digit_word(word) || is_letter_word(word) {
                    sites.push(RbeSite::Callsign { word: w });
                }
            }
        }
    }
    sites
}

fn word_at_mut(plan: &mut ReadbackPlan, site: RbeSite) -> &mut String {
    match site {
        RbeSite::Command { element, word } => &mut plan.elements[element].command[word],
        RbeSite::Value { element, word } => &mut plan.elements[element].values[word],
        RbeSite::Callsign { word } => &mut plan.callsign_words[word],
    }
}

fn replacement_for<R: Rng + ?Sized>(kind: RbeKind, original: &str, rng: &mut R) -> String {
    match kind {
        RbeKind::DirectionFlip => if original == "left" { "right" } else { "left" }.to_string(),
        _ => {
            let pool: &[&str] = if is_digit_word(original) { digit_words() } else { alphabet_words() };
            let own = word_to_char(original);
            let others: Vec<&str> = pool.iter().copied().filter(|w| word_to_char(w) != own).collect();
            others.choose(rng).expect("pools have more than one word").to_string()
        }
    }
}

/// Kinds from `allowed` that have at least one site in `plan`.
pub fn applicable_kinds(plan: &ReadbackPlan, allowed: &[RbeKind]) -> Vec<RbeKind> {
    let mut kinds: Vec<RbeKind> = allowed.iter().copied().collect::<HashSet<_>>().into_iter().collect();
    kinds.sort();
    kinds.retain(|k| !candidate_sites(plan, *k).is_empty());
    kinds
}

/// With probability `p` inserts exactly one read-back error of a uniformly
/// chosen applicable kind. One Bernoulli draw is consumed per call.
pub fn insert_readback_error<R: Rng + ?Sized>(
    plan: &ReadbackPlan,
    p: f64,
    rng: &mut R,
    allowed: &[RbeKind],
) -> Result<(ReadbackPlan, bool), RbeError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(RbeError::InvalidProbability(p));
    }
    if !rng.gen_bool(p) {
        return Ok((plan.clone(), false));
    }
    let kinds = applicable_kinds(plan, allowed);
    let kind = *kinds.choose(rng).ok_or(RbeError::NoApplicableKind)?;
    let site = *candidate_sites(plan, kind).choose(rng).expect("applicable kind has a site");
    let mut out = plan.clone();
    let slot = word_at_mut(&mut out, site);
    let original = slot.clone();
    let replacement = replacement_for(kind, &original, rng);
    *slot = replacement.clone();
    out.rbe = Some(ReadbackError { kind, original, replacement, site });
    Ok((out, true))
}
