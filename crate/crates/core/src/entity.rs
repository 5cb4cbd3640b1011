//! High-level entity parser: tags an utterance with callsign, command and
//! value spans and assembles them into a [`ParsedCommunication`].
//!
//! The default tagger is a deterministic phraseology grammar. Any other
//! tagger (for instance a service wrapping a learned token classifier) can
//! be plugged in through [`EntityParser::register_external_tagger`]; its
//! output is repaired to valid BIO before assembly.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phraseology::{
    is_digit_word, is_letter_word, is_spelled_word, normalize, AirlineDesignatorTable, Utterance,
};

const DEFAULT_GRAMMAR: &str = include_str!("../assets/grammar.txt");

/// Greeting and courtesy words, never part of an entity.
const COURTESY_WORDS: [&str; 15] = [
    "good", "morning", "afternoon", "evening", "day", "hello", "hi", "thanks", "thank", "you",
    "bye", "goodbye", "please", "servus", "ciao",
];

const NUMBER_WORDS: [&str; 2] = ["hundred", "thousand"];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("external tagger returned {got} tags for {expected} tokens")]
    AdapterTagArity { expected: usize, got: usize },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GrammarError {
    #[error("grammar line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("grammar: {0}")]
    Io(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("tagged line: {0}")]
pub struct TaggedFormatError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EntityClass {
    Callsign,
    Command,
    Value,
}

impl EntityClass {
    pub const ALL: [EntityClass; 3] = [EntityClass::Callsign, EntityClass::Command, EntityClass::Value];

    /// Lowercase name used in the inline tagged format.
    pub fn markup_name(self) -> &'static str {
        match self {
            EntityClass::Callsign => "callsign",
            EntityClass::Command => "command",
            EntityClass::Value => "value",
        }
    }

    fn from_markup(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.markup_name() == name)
    }
}

impl fmt::Display for EntityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.markup_name().to_ascii_uppercase())
    }
}

/// BIO tag over the three entity classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    Begin(EntityClass),
    Inside(EntityClass),
    Outside,
}

impl Tag {
    pub const ALL: [Tag; 7] = [
        Tag::Begin(EntityClass::Callsign),
        Tag::Inside(EntityClass::Callsign),
        Tag::Begin(EntityClass::Command),
        Tag::Inside(EntityClass::Command),
        Tag::Begin(EntityClass::Value),
        Tag::Inside(EntityClass::Value),
        Tag::Outside,
    ];

    pub fn class(self) -> Option<EntityClass> {
        match self {
            Tag::Begin(c) | Tag::Inside(c) => Some(c),
            Tag::Outside => None,
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Begin(c) => write!(f, "B-{c}"),
            Tag::Inside(c) => write!(f, "I-{c}"),
            Tag::Outside => f.write_str("O"),
        }
    }
}

impl FromStr for Tag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Tag::ALL
            .into_iter()
            .find(|t| t.to_string() == s)
            .ok_or_else(|| format!("unknown tag {s:?}"))
    }
}

/// Half-open token range `[start, end)` of one entity. Orders by position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntitySpan {
    pub cls: EntityClass,
    pub start: usize,
    pub end: usize,
}

impl Ord for EntitySpan {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.start, self.end, self.cls).cmp(&(other.start, other.end, other.cls))
    }
}

impl PartialOrd for EntitySpan {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl EntitySpan {
    pub fn new(cls: EntityClass, start: usize, end: usize) -> Self {
        debug_assert!(start < end);
        Self { cls, start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn words<'a>(&self, u: &'a Utterance) -> Vec<&'a str> {
        u.tokens[self.start..self.end].iter().map(|t| t.text.as_str()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandCategory {
    Horizontal,
    Level,
    Speed,
    Handover,
}

impl CommandCategory {
    pub const ALL: [CommandCategory; 4] = [
        CommandCategory::Horizontal,
        CommandCategory::Level,
        CommandCategory::Speed,
        CommandCategory::Handover,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CommandCategory::Horizontal => "horizontal",
            CommandCategory::Level => "level",
            CommandCategory::Speed => "speed",
            CommandCategory::Handover => "handover",
        }
    }
}

impl FromStr for CommandCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command category {s:?}"))
    }
}

impl fmt::Display for CommandCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandPhrase {
    pub words: Vec<String>,
    pub category: CommandCategory,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternElement {
    Word(String),
    /// One or more digit words.
    Digits,
    /// One or more digit words or `hundred`/`thousand`.
    Number,
    /// One or more spelling-alphabet words.
    Letters,
}

impl PatternElement {
    fn accepts_repeated(&self, word: &str) -> bool {
        match self {
            PatternElement::Word(_) => false,
            PatternElement::Digits => is_digit_word(word),
            PatternElement::Number => is_digit_word(word) || NUMBER_WORDS.contains(&word),
            PatternElement::Letters => is_letter_word(word),
        }
    }
}

/// A value shape such as `flight level <digits>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValuePattern {
    pub elements: Vec<PatternElement>,
}

impl ValuePattern {
    pub fn parse(text: &str) -> Result<Self, String> {
        let elements = text
            .split_whitespace()
            .map(|w| match w {
                "<digits>" => Ok(PatternElement::Digits),
                "<number>" => Ok(PatternElement::Number),
                "<letters>" => Ok(PatternElement::Letters),
                w if w.starts_with('<') => Err(format!("unknown placeholder {w}")),
                w => Ok(PatternElement::Word(w.to_lowercase())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if elements.is_empty() {
            return Err("empty value pattern".into());
        }
        Ok(Self { elements })
    }

    /// Length of the longest match anchored at the start of `words`.
    pub fn longest_match<S: AsRef<str>>(&self, words: &[S]) -> Option<usize> {
        let mut frontier = vec![0usize];
        for element in &self.elements {
            let mut next = Vec::new();
            for &pos in &frontier {
                match element {
                    PatternElement::Word(lit) => {
                        if words.get(pos).is_some_and(|w| w.as_ref() == lit) {
                            next.push(pos + 1);
                        }
                    }
                    repeated => {
                        let mut end = pos;
                        while words.get(end).is_some_and(|w| repeated.accepts_repeated(w.as_ref())) {
                            end += 1;
                            next.push(end);
                        }
                    }
                }
            }
            next.sort_unstable();
            next.dedup();
            if next.is_empty() {
                return None;
            }
            frontier = next;
        }
        frontier.into_iter().max()
    }
}

/// Command lexicon grouped by category plus value patterns.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PhraseologyGrammar {
    pub commands: Vec<CommandPhrase>,
    pub values: Vec<ValuePattern>,
}

impl PhraseologyGrammar {
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_GRAMMAR).expect("bundled grammar is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GrammarError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| GrammarError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }

    /// Sections `[horizontal] [level] [speed] [handover] [values]`, one
    /// phrase or pattern per line, `#` comments.
    pub fn parse(text: &str) -> Result<Self, GrammarError> {
        enum Section {
            None,
            Commands(CommandCategory),
            Values,
        }
        let mut grammar = Self::default();
        let mut section = Section::None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| GrammarError::MalformedLine { line: i + 1, reason };
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = match name.trim() {
                    "values" => Section::Values,
                    other => Section::Commands(other.parse().map_err(err)?),
                };
                continue;
            }
            match section {
                Section::None => return Err(err("entry outside of a section".into())),
                Section::Commands(category) => {
                    let words: Vec<String> = line.split_whitespace().map(str::to_lowercase).collect();
                    if words.iter().any(|w| w.starts_with('<')) {
                        return Err(err("placeholders are only allowed in [values]".into()));
                    }
                    grammar.commands.push(CommandPhrase { words, category });
                }
                Section::Values => grammar.values.push(ValuePattern::parse(line).map_err(err)?),
            }
        }
        Ok(grammar)
    }

    /// Longest command phrase matching at the start of `words`.
    pub fn longest_command<S: AsRef<str>>(&self, words: &[S]) -> Option<&CommandPhrase> {
        self.commands
            .iter()
            .filter(|c| {
                c.words.len() <= words.len()
                    && c.words.iter().zip(words).all(|(a, b)| a == b.as_ref())
            })
            .fold(None, |best: Option<&CommandPhrase>, c| match best {
                Some(b) if b.words.len() >= c.words.len() => Some(b),
                _ => Some(c),
            })
    }

    pub fn longest_value<S: AsRef<str>>(&self, words: &[S]) -> Option<usize> {
        self.values.iter().filter_map(|p| p.longest_match(words)).max()
    }

    pub fn category_of<S: AsRef<str>>(&self, words: &[S]) -> Option<CommandCategory> {
        self.commands
            .iter()
            .find(|c| c.words.len() == words.len() && c.words.iter().zip(words).all(|(a, b)| a == b.as_ref()))
            .map(|c| c.category)
    }
}

/// Token classifier producing one BIO tag per token.
pub trait Tagger: Send + Sync {
    fn tag(&self, utterance: &Utterance) -> Vec<Tag>;
}

fn is_courtesy(word: &str) -> bool {
    COURTESY_WORDS.contains(&word)
}

fn callsign_at<S: AsRef<str>>(
    words: &[S],
    start: usize,
    table: &AirlineDesignatorTable,
    require_telephony: bool,
) -> Option<(usize, usize)> {
    let telephony = table.match_telephony(&words[start..]).map_or(0, |(_, n)| n);
    if require_telephony && telephony == 0 {
        return None;
    }
    let spelled_start = start + telephony;
    let spelled = words[spelled_start..]
        .iter()
        .take_while(|w| is_spelled_word(w.as_ref()))
        .count();
    let enough = if telephony > 0 { spelled >= 1 } else { spelled >= 2 };
    enough.then_some((start, spelled_start + spelled))
}

/// Prefix-anchored callsign span, falling back to the first
/// telephony-anchored run anywhere in the utterance.
fn find_callsign<S: AsRef<str>>(words: &[S], table: &AirlineDesignatorTable) -> Option<(usize, usize)> {
    let first = words.iter().position(|w| !is_courtesy(w.as_ref()))?;
    callsign_at(words, first, table, false)
        .or_else(|| (first..words.len()).find_map(|i| callsign_at(words, i, table, true)))
}

/// Entity spans found by the grammar, in token order.
pub fn grammar_spans(
    u: &Utterance,
    grammar: &PhraseologyGrammar,
    table: &AirlineDesignatorTable,
) -> Vec<EntitySpan> {
    let words = u.words();
    let callsign = find_callsign(&words, table);
    let mut spans = Vec::new();
    if let Some((s, e)) = callsign {
        spans.push(EntitySpan::new(EntityClass::Callsign, s, e));
    }
    let mut i = 0;
    while i < words.len() {
        if let Some((s, e)) = callsign {
            if i == s {
                i = e;
                continue;
            }
        }
        if is_courtesy(words[i]) {
            i += 1;
            continue;
        }
        let limit = match callsign {
            Some((s, _)) if i < s => s,
            _ => words.len(),
        };
        let window = &words[i..limit];
        let command = grammar.longest_command(window).map_or(0, |c| c.words.len());
        let value = grammar.longest_value(window).unwrap_or(0);
        if command == 0 && value == 0 {
            i += 1;
            continue;
        }
        let (cls, len) = if command >= value {
            (EntityClass::Command, command)
        } else {
            (EntityClass::Value, value)
        };
        spans.push(EntitySpan::new(cls, i, i + len));
        i += len;
    }
    spans.sort();
    spans
}

pub fn tags_from_spans(len: usize, spans: &[EntitySpan]) -> Vec<Tag> {
    let mut tags = vec![Tag::Outside; len];
    for span in spans {
        tags[span.start] = Tag::Begin(span.cls);
        for t in &mut tags[span.start + 1..span.end] {
            *t = Tag::Inside(span.cls);
        }
    }
    tags
}

/// Grammar tagging of a normalized utterance.
pub fn tag_tokens(u: &Utterance, grammar: &PhraseologyGrammar, table: &AirlineDesignatorTable) -> Vec<Tag> {
    tags_from_spans(u.len(), &grammar_spans(u, grammar, table))
}

/// Rewrites every `I-x` that does not continue an `x` entity to `B-x`.
pub fn repair_tags(tags: &[Tag]) -> Vec<Tag> {
    let mut out: Vec<Tag> = Vec::with_capacity(tags.len());
    for &tag in tags {
        let fixed = match tag {
            Tag::Inside(c) if out.last().and_then(|p| p.class()) != Some(c) => Tag::Begin(c),
            t => t,
        };
        out.push(fixed);
    }
    out
}

/// Spans of a valid BIO sequence.
pub fn spans_from_tags(tags: &[Tag]) -> Vec<EntitySpan> {
    let mut spans: Vec<EntitySpan> = Vec::new();
    for (i, tag) in tags.iter().enumerate() {
        match *tag {
            Tag::Begin(c) => spans.push(EntitySpan::new(c, i, i + 1)),
            Tag::Inside(c) => match spans.last_mut() {
                Some(last) if last.cls == c && last.end == i => last.end = i + 1,
                _ => spans.push(EntitySpan::new(c, i, i + 1)),
            },
            Tag::Outside => {}
        }
    }
    spans
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandPair {
    pub command: EntitySpan,
    pub values: Vec<EntitySpan>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ParseDiagnostic {
    /// A value with no preceding command; kept in `unattached`.
    DanglingValue { span: EntitySpan },
    /// A second callsign span; ignored.
    ExtraCallsign { span: EntitySpan },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedCommunication {
    pub utterance: Utterance,
    pub callsign: Option<EntitySpan>,
    pub pairs: Vec<CommandPair>,
    pub no_callsign: bool,
    pub unattached: Vec<EntitySpan>,
    pub diagnostics: Vec<ParseDiagnostic>,
}

impl ParsedCommunication {
    /// Assembles spans (token order, non-overlapping) into a parse: each
    /// value attaches to the nearest preceding command.
    pub fn from_spans(utterance: Utterance, spans: &[EntitySpan]) -> Self {
        let mut sorted = spans.to_vec();
        sorted.sort();
        let mut callsign = None;
        let mut pairs: Vec<CommandPair> = Vec::new();
        let mut unattached = Vec::new();
        let mut diagnostics = Vec::new();
        for span in sorted {
            match span.cls {
                EntityClass::Callsign if callsign.is_none() => callsign = Some(span),
                EntityClass::Callsign => diagnostics.push(ParseDiagnostic::ExtraCallsign { span }),
                EntityClass::Command => pairs.push(CommandPair { command: span, values: Vec::new() }),
                EntityClass::Value => match pairs.last_mut() {
                    Some(pair) => pair.values.push(span),
                    None => {
                        unattached.push(span);
                        diagnostics.push(ParseDiagnostic::DanglingValue { span });
                    }
                },
            }
        }
        Self {
            utterance,
            no_callsign: callsign.is_none(),
            callsign,
            pairs,
            unattached,
            diagnostics,
        }
    }

    /// Every retained span in token order.
    pub fn spans(&self) -> Vec<EntitySpan> {
        let mut spans: Vec<EntitySpan> = self
            .callsign
            .iter()
            .copied()
            .chain(self.unattached.iter().copied())
            .chain(self.pairs.iter().flat_map(|p| std::iter::once(p.command).chain(p.values.iter().copied())))
            .collect();
        spans.sort();
        spans
    }

    pub fn callsign_words(&self) -> Vec<&str> {
        self.callsign.map(|s| s.words(&self.utterance)).unwrap_or_default()
    }

    pub fn words(&self, span: &EntitySpan) -> Vec<&str> {
        span.words(&self.utterance)
    }

    pub fn tags(&self) -> Vec<Tag> {
        tags_from_spans(self.utterance.len(), &self.spans())
    }

    pub fn render_tagged(&self) -> String {
        render_spans(&self.utterance, &self.spans())
    }

    pub fn is_empty(&self) -> bool {
        self.callsign.is_none() && self.pairs.is_empty() && self.unattached.is_empty()
    }
}

/// Inline `<callsign> ... </callsign>` rendering; untagged tokens are kept.
pub fn render_spans(u: &Utterance, spans: &[EntitySpan]) -> String {
    let mut parts: Vec<&str> = Vec::with_capacity(u.len() + spans.len() * 2);
    let mut sorted = spans.to_vec();
    sorted.sort();
    let mut next = sorted.iter().peekable();
    let mut i = 0;
    while i < u.len() {
        match next.peek() {
            Some(span) if span.start == i => {
                parts.push(OPEN_TAGS[span.cls as usize]);
                parts.extend(u.tokens[span.start..span.end].iter().map(|t| t.text.as_str()));
                parts.push(CLOSE_TAGS[span.cls as usize]);
                i = span.end;
                next.next();
            }
            _ => {
                parts.push(&u.tokens[i].text);
                i += 1;
            }
        }
    }
    parts.join(" ")
}

const OPEN_TAGS: [&str; 3] = ["<callsign>", "<command>", "<value>"];
const CLOSE_TAGS: [&str; 3] = ["</callsign>", "</command>", "</value>"];

/// One line of the tagged corpus format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedUtterance {
    pub utterance: Utterance,
    pub spans: Vec<EntitySpan>,
}

impl TaggedUtterance {
    pub fn parse(line: &str) -> Result<Self, TaggedFormatError> {
        let mut words = Vec::new();
        let mut spans = Vec::new();
        let mut open: Option<(EntityClass, usize)> = None;
        for raw in line.split_whitespace() {
            if let Some(name) = raw.strip_prefix("</").and_then(|r| r.strip_suffix('>')) {
                let cls = EntityClass::from_markup(name)
                    .ok_or_else(|| TaggedFormatError(format!("unknown tag {raw}")))?;
                match open.take() {
                    Some((c, start)) if c == cls && start < words.len() => {
                        spans.push(EntitySpan::new(cls, start, words.len()))
                    }
                    Some((c, _)) if c == cls => return Err(TaggedFormatError(format!("empty {raw} span"))),
                    _ => return Err(TaggedFormatError(format!("unbalanced {raw}"))),
                }
            } else if let Some(name) = raw.strip_prefix('<').and_then(|r| r.strip_suffix('>')) {
                let cls = EntityClass::from_markup(name)
                    .ok_or_else(|| TaggedFormatError(format!("unknown tag {raw}")))?;
                if open.is_some() {
                    return Err(TaggedFormatError(format!("nested {raw}")));
                }
                open = Some((cls, words.len()));
            } else {
                words.extend(normalize(raw).tokens.into_iter().map(|t| t.text));
            }
        }
        if let Some((cls, _)) = open {
            return Err(TaggedFormatError(format!("unclosed <{}>", cls.markup_name())));
        }
        Ok(Self { utterance: Utterance::from_words(words), spans })
    }

    pub fn callsign_span(&self) -> Option<EntitySpan> {
        self.spans.iter().copied().find(|s| s.cls == EntityClass::Callsign)
    }

    pub fn render(&self) -> String {
        render_spans(&self.utterance, &self.spans)
    }
}

impl From<&ParsedCommunication> for TaggedUtterance {
    fn from(p: &ParsedCommunication) -> Self {
        Self { utterance: p.utterance.clone(), spans: p.spans() }
    }
}

/// Grammar-backed parser with an optional external tagger.
///
/// Immutable once built; register any external tagger before sharing.
pub struct EntityParser {
    grammar: Arc<PhraseologyGrammar>,
    table: Arc<AirlineDesignatorTable>,
    external: Option<Box<dyn Tagger>>,
}

impl fmt::Debug for EntityParser {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EntityParser")
            .field("commands", &self.grammar.commands.len())
            .field("values", &self.grammar.values.len())
            .field("designators", &self.table.len())
            .field("external_tagger", &self.external.is_some())
            .finish()
    }
}

impl EntityParser {
    pub fn new(grammar: Arc<PhraseologyGrammar>, table: Arc<AirlineDesignatorTable>) -> Self {
        Self { grammar, table, external: None }
    }

    pub fn builtin() -> Self {
        Self::new(
            Arc::new(PhraseologyGrammar::builtin()),
            Arc::new(AirlineDesignatorTable::builtin()),
        )
    }

    pub fn register_external_tagger(&mut self, adapter: Box<dyn Tagger>) {
        self.external = Some(adapter);
    }

    pub fn grammar(&self) -> &PhraseologyGrammar {
        &self.grammar
    }

    pub fn table(&self) -> &AirlineDesignatorTable {
        &self.table
    }

    pub fn tag(&self, u: &Utterance) -> Result<Vec<Tag>, ParseError> {
        match &self.external {
            Some(adapter) => {
                let tags = adapter.tag(u);
                if tags.len() != u.len() {
                    return Err(ParseError::AdapterTagArity { expected: u.len(), got: tags.len() });
                }
                Ok(repair_tags(&tags))
            }
            None => Ok(tag_tokens(u, &self.grammar, &self.table)),
        }
    }

    pub fn parse(&self, u: &Utterance) -> Result<ParsedCommunication, ParseError> {
        let tags = self.tag(u)?;
        Ok(ParsedCommunication::from_spans(u.clone(), &spans_from_tags(&tags)))
    }

    /// Normalizes then parses raw text.
    pub fn parse_text(&self, raw: &str) -> Result<ParsedCommunication, ParseError> {
        self.parse(&normalize(raw))
    }
}
