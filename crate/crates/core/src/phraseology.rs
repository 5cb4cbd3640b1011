//! Text normalization, the ICAO radiotelephony vocabulary and callsign
//! verbalization shared by the parser, the resolver and the read-back
//! generator.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PhraseologyError {
    #[error("invalid character {0:?}: expected 0-9 or A-Z")]
    InvalidChar(char),
    #[error("invalid ICAO callsign {0:?}")]
    InvalidCallsign(String),
    #[error("unknown airline designator {0:?}")]
    UnknownDesignator(String),
    #[error("spoken callsign must contain at least one word")]
    EmptySpokenCallsign,
    #[error("designator table line {line}: {reason}")]
    MalformedTableLine { line: usize, reason: String },
    #[error("designator table: {0}")]
    Io(String),
}

const DIGIT_WORDS: [&str; 10] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
];

const ALPHABET_WORDS: [&str; 26] = [
    "alfa", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel", "india", "juliett",
    "kilo", "lima", "mike", "november", "oscar", "papa", "quebec", "romeo", "sierra", "tango",
    "uniform", "victor", "whiskey", "xray", "yankee", "zulu",
];

/// Accepted on input only.
const DIGIT_VARIANTS: [(&str, char); 3] = [("niner", '9'), ("tree", '3'), ("fife", '5')];
const LETTER_VARIANTS: [(&str, char); 3] = [("alpha", 'A'), ("juliet", 'J'), ("whisky", 'W')];

const DEFAULT_DESIGNATORS: &str = include_str!("../assets/designators.txt");

/// Spelling-alphabet or digit word for a single character.
pub fn spell_char(c: char) -> Result<&'static str, PhraseologyError> {
    match c {
        '0'..='9' => Ok(DIGIT_WORDS[(c as u8 - b'0') as usize]),
        'A'..='Z' => Ok(ALPHABET_WORDS[(c as u8 - b'A') as usize]),
        _ => Err(PhraseologyError::InvalidChar(c)),
    }
}

/// Inverse of [`spell_char`], tolerant of pronunciation variants.
pub fn word_to_char(word: &str) -> Option<char> {
    if let Some(i) = DIGIT_WORDS.iter().position(|w| *w == word) {
        return Some((b'0' + i as u8) as char);
    }
    if let Some(i) = ALPHABET_WORDS.iter().position(|w| *w == word) {
        return Some((b'A' + i as u8) as char);
    }
    DIGIT_VARIANTS
        .iter()
        .chain(LETTER_VARIANTS.iter())
        .find(|(w, _)| *w == word)
        .map(|(_, c)| *c)
}

pub fn is_digit_word(word: &str) -> bool {
    matches!(word_to_char(word), Some(c) if c.is_ascii_digit())
}

pub fn is_letter_word(word: &str) -> bool {
    matches!(word_to_char(word), Some(c) if c.is_ascii_uppercase())
}

/// Digit or spelling-alphabet word, including input variants.
pub fn is_spelled_word(word: &str) -> bool {
    word_to_char(word).is_some()
}

pub fn digit_words() -> &'static [&'static str] {
    &DIGIT_WORDS
}

pub fn alphabet_words() -> &'static [&'static str] {
    &ALPHABET_WORDS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SpeakerRole {
    #[default]
    Atco,
    Pilot,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub text: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Utterance {
    pub tokens: Vec<Token>,
    pub speaker_role: SpeakerRole,
    pub source_id: String,
}

impl Utterance {
    /// Builds an utterance from already-normalized words.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens = words
            .into_iter()
            .enumerate()
            .map(|(index, w)| Token { text: w.into(), index })
            .collect();
        Self { tokens, ..Self::default() }
    }

    pub fn with_source(mut self, role: SpeakerRole, source_id: impl Into<String>) -> Self {
        self.speaker_role = role;
        self.source_id = source_id.into();
        self
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn words(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }

    /// Tokens joined with single spaces.
    pub fn render(&self) -> String {
        self.words().join(" ")
    }
}

fn is_markup(raw: &str) -> bool {
    raw.len() > 2 && raw.starts_with('<') && raw.ends_with('>')
}

/// Lowercases, drops entity markup and punctuation, and splits on whitespace.
pub fn normalize(raw_text: &str) -> Utterance {
    let words = raw_text
        .split_whitespace()
        .filter(|w| !is_markup(w))
        .filter_map(|w| {
            let cleaned: String = w
                .chars()
                .filter(|c| c.is_alphanumeric())
                .flat_map(char::to_lowercase)
                .collect();
            (!cleaned.is_empty()).then_some(cleaned)
        });
    Utterance::from_words(words)
}

/// Compact ICAO form of an aircraft identifier, e.g. `RYR92BQ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct IcaoCallsign(String);

impl IcaoCallsign {
    pub const MAX_LEN: usize = 8;

    pub fn new(value: &str) -> Result<Self, PhraseologyError> {
        let value = value.trim();
        let ok = (2..=Self::MAX_LEN).contains(&value.len())
            && value.starts_with(|c: char| c.is_ascii_uppercase())
            && value.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit());
        if ok {
            Ok(Self(value.to_string()))
        } else {
            Err(PhraseologyError::InvalidCallsign(value.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Leading three letters when followed by at least one more character.
    pub fn designator_prefix(&self) -> Option<&str> {
        let prefix = self.0.get(..3)?;
        (self.0.len() > 3 && prefix.chars().all(|c| c.is_ascii_uppercase())).then_some(prefix)
    }

    /// Three letters followed by a digit, the shape of an airline callsign.
    fn looks_like_airline(&self) -> bool {
        self.designator_prefix().is_some()
            && self.0[3..].chars().next().is_some_and(|c| c.is_ascii_digit())
    }
}

impl FromStr for IcaoCallsign {
    type Err = PhraseologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(&s.trim().to_ascii_uppercase())
    }
}

impl TryFrom<String> for IcaoCallsign {
    type Error = PhraseologyError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(&value)
    }
}

impl From<IcaoCallsign> for String {
    fn from(value: IcaoCallsign) -> Self {
        value.0
    }
}

impl fmt::Display for IcaoCallsign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A callsign as a sequence of spoken words.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpokenCallsign {
    words: Vec<String>,
}

impl SpokenCallsign {
    pub fn new<I, S>(words: I) -> Result<Self, PhraseologyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let words: Vec<String> = words.into_iter().map(Into::into).collect();
        if words.is_empty() || words.iter().any(|w| w.is_empty()) {
            return Err(PhraseologyError::EmptySpokenCallsign);
        }
        Ok(Self { words })
    }

    pub fn parse(text: &str) -> Result<Self, PhraseologyError> {
        Self::new(normalize(text).words())
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// True when every word is a digit, alphabet or telephony word of `table`.
    pub fn is_in_vocabulary(&self, table: &AirlineDesignatorTable) -> bool {
        self.words
            .iter()
            .all(|w| is_spelled_word(w) || table.is_telephony_word(w))
    }
}

impl fmt::Display for SpokenCallsign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.words.join(" "))
    }
}

/// Map from three-letter ICAO airline designator to its telephony words.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AirlineDesignatorTable {
    entries: BTreeMap<String, Vec<String>>,
    telephony_words: HashSet<String>,
}

impl AirlineDesignatorTable {
    /// The bundled table.
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_DESIGNATORS).expect("bundled designator table is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PhraseologyError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| PhraseologyError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }

    /// Parses `ICAO<TAB>telephony words` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, PhraseologyError> {
        let mut table = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let malformed = |reason: &str| PhraseologyError::MalformedTableLine {
                line: i + 1,
                reason: reason.to_string(),
            };
            let (code, telephony) = line
                .split_once('\t')
                .or_else(|| line.split_once(char::is_whitespace))
                .ok_or_else(|| malformed("expected ICAO<TAB>telephony"))?;
            table
                .insert(code.trim(), telephony.trim())
                .map_err(|e| malformed(&e.to_string()))?;
        }
        Ok(table)
    }

    pub fn insert(&mut self, code: &str, telephony: &str) -> Result<(), PhraseologyError> {
        if code.len() != 3 || !code.chars().all(|c| c.is_ascii_uppercase()) {
            return Err(PhraseologyError::UnknownDesignator(code.to_string()));
        }
        let words: Vec<String> = telephony.split_whitespace().map(str::to_string).collect();
        if words.is_empty() {
            return Err(PhraseologyError::EmptySpokenCallsign);
        }
        for w in &words {
            let lowercase = w.chars().all(|c| c.is_ascii_lowercase());
            if !lowercase || is_spelled_word(w) {
                return Err(PhraseologyError::MalformedTableLine {
                    line: 0,
                    reason: format!("telephony word {w:?} is not a lowercase non-alphabet word"),
                });
            }
        }
        if self.entries.values().any(|v| *v == words) {
            return Err(PhraseologyError::MalformedTableLine {
                line: 0,
                reason: format!("telephony {telephony:?} already assigned"),
            });
        }
        self.telephony_words.extend(words.iter().cloned());
        self.entries.insert(code.to_string(), words);
        Ok(())
    }

    pub fn telephony(&self, code: &str) -> Option<&[String]> {
        self.entries.get(code).map(Vec::as_slice)
    }

    pub fn is_telephony_word(&self, word: &str) -> bool {
        self.telephony_words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Longest telephony phrase that prefixes `words`, with its designator.
    pub fn match_telephony<S: AsRef<str>>(&self, words: &[S]) -> Option<(&str, usize)> {
        self.entries
            .iter()
            .filter(|(_, tel)| {
                tel.len() <= words.len()
                    && tel.iter().zip(words).all(|(t, w)| t == w.as_ref())
            })
            .max_by_key(|(_, tel)| tel.len())
            .map(|(code, tel)| (code.as_str(), tel.len()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VerbalizeMode {
    /// Unknown designators are spelled letter by letter.
    #[default]
    Lenient,
    /// Airline-shaped callsigns with an unknown designator are rejected.
    Strict,
}

pub fn verbalize_callsign(
    cs: &IcaoCallsign,
    table: &AirlineDesignatorTable,
    mode: VerbalizeMode,
) -> Result<SpokenCallsign, PhraseologyError> {
    let mut words = Vec::with_capacity(cs.as_str().len());
    let mut rest = cs.as_str();
    match cs.designator_prefix().and_then(|p| table.telephony(p)) {
        Some(telephony) => {
            words.extend(telephony.iter().cloned());
            rest = &rest[3..];
        }
        None if mode == VerbalizeMode::Strict && cs.looks_like_airline() => {
            return Err(PhraseologyError::UnknownDesignator(cs.as_str()[..3].to_string()));
        }
        None => {}
    }
    for c in rest.chars() {
        words.push(spell_char(c)?.to_string());
    }
    SpokenCallsign::new(words)
}

/// Inverse of [`verbalize_callsign`]: the ICAO form of a spoken callsign,
/// if every word can be mapped back.
pub fn icao_from_spoken<S: AsRef<str>>(
    words: &[S],
    table: &AirlineDesignatorTable,
) -> Option<IcaoCallsign> {
    let mut out = String::new();
    let mut rest = words;
    if let Some((code, n)) = table.match_telephony(words) {
        out.push_str(code);
        rest = &words[n..];
        if rest.is_empty() {
            return None;
        }
    }
    for w in rest {
        out.push(word_to_char(w.as_ref())?);
    }
    IcaoCallsign::new(&out).ok()
}

/// Shortest form a shortened callsign may take on frequency.
pub const MIN_SHORTENED_WORDS: usize = 3;

/// Full form first, then every proper suffix of at least
/// [`MIN_SHORTENED_WORDS`] words, longest first.
pub fn shortened_variants(full: &SpokenCallsign) -> Vec<SpokenCallsign> {
    let words = full.words();
    let mut out = vec![full.clone()];
    for start in 1..words.len() {
        if words.len() - start < MIN_SHORTENED_WORDS {
            break;
        }
        out.push(SpokenCallsign { words: words[start..].to_vec() });
    }
    out
}
