//! Evaluation: word error rate, callsign-restricted WER, ICAO callsign
//! accuracy and per-class precision/recall/F1.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entity::{EntityClass, EntityParser, EntitySpan, ParseError, TaggedUtterance};
use crate::phraseology::{icao_from_spoken, AirlineDesignatorTable, IcaoCallsign};
use crate::resolver::CallsignResolver;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("reference has no words")]
    EmptyReference,
    #[error("no reference utterance carries a callsign")]
    NoCallsignInCorpus,
    #[error("length mismatch: {reference} references, {hypothesis} hypotheses")]
    LengthMismatch { reference: usize, hypothesis: usize },
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AlignmentCounts {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub reference_len: usize,
    pub correct: usize,
}

impl AlignmentCounts {
    pub fn errors(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }
}

impl Add for AlignmentCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            substitutions: self.substitutions + o.substitutions,
            insertions: self.insertions + o.insertions,
            deletions: self.deletions + o.deletions,
            reference_len: self.reference_len + o.reference_len,
            correct: self.correct + o.correct,
        }
    }
}

impl AddAssign for AlignmentCounts {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl std::iter::Sum for AlignmentCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

/// One step of an alignment; indices into reference and hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    Match { reference: usize, hypothesis: usize },
    Substitute { reference: usize, hypothesis: usize },
    Delete { reference: usize },
    Insert { hypothesis: usize },
}

/// Minimal unit-cost alignment. The backtrace prefers the diagonal
/// (match or substitution), then deletion, then insertion.
pub fn align_ops<R: AsRef<str>, H: AsRef<str>>(reference: &[R], hypothesis: &[H]) -> Vec<EditOp> {
    let (n, m) = (reference.len(), hypothesis.len());
    let width = m + 1;
    let mut d = vec![0usize; (n + 1) * width];
    for (j, cell) in d[..width].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=n {
        d[i * width] = i;
        for j in 1..=m {
            let diff = usize::from(reference[i - 1].as_ref() != hypothesis[j - 1].as_ref());
            d[i * width + j] = (d[(i - 1) * width + j - 1] + diff)
                .min(d[(i - 1) * width + j] + 1)
                .min(d[i * width + j - 1] + 1);
        }
    }
    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[i * width + j];
        if i > 0 && j > 0 {
            let same = reference[i - 1].as_ref() == hypothesis[j - 1].as_ref();
            if here == d[(i - 1) * width + j - 1] + usize::from(!same) {
                ops.push(if same {
                    EditOp::Match { reference: i - 1, hypothesis: j - 1 }
                } else {
                    EditOp::Substitute { reference: i - 1, hypothesis: j - 1 }
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && here == d[(i - 1) * width + j] + 1 {
            ops.push(EditOp::Delete { reference: i - 1 });
            i -= 1;
        } else {
            ops.push(EditOp::Insert { hypothesis: j - 1 });
            j -= 1;
        }
    }
    ops.reverse();
    ops
}

fn count_ops<'a>(ops: impl IntoIterator<Item = &'a EditOp>) -> AlignmentCounts {
    let mut c = AlignmentCounts::default();
    for op in ops {
        match op {
            EditOp::Match { .. } => c.correct += 1,
            EditOp::Substitute { .. } => c.substitutions += 1,
            EditOp::Delete { .. } => c.deletions += 1,
            EditOp::Insert { .. } => c.insertions += 1,
        }
    }
    c.reference_len = c.correct + c.substitutions + c.deletions;
    c
}

pub fn align<R: AsRef<str>, H: AsRef<str>>(reference: &[R], hypothesis: &[H]) -> AlignmentCounts {
    count_ops(&align_ops(reference, hypothesis))
}

/// `(S + D + I) / N * 100`.
pub fn wer(counts: &AlignmentCounts) -> Result<f64, MetricsError> {
    if counts.reference_len == 0 {
        return Err(MetricsError::EmptyReference);
    }
    Ok(counts.errors() as f64 / counts.reference_len as f64 * 100.0)
}

/// Rounds a percentage to the one decimal it is reported with.
pub fn round1(percent: f64) -> f64 {
    (percent * 10.0).round() / 10.0
}

/// Alignment restricted to reference tokens `[start, end)`, plus the
/// hypothesis range they project onto. Insertions count when they fall
/// strictly inside the region.
pub fn project_region(ops: &[EditOp], start: usize, end: usize) -> (AlignmentCounts, std::ops::Range<usize>) {
    let mut consumed = 0;
    let mut selected = Vec::new();
    let mut hyp_lo = usize::MAX;
    let mut hyp_hi = 0;
    for op in ops {
        let (inside, hyp) = match *op {
            EditOp::Match { reference, hypothesis } | EditOp::Substitute { reference, hypothesis } => {
                consumed = reference + 1;
                ((start..end).contains(&reference), Some(hypothesis))
            }
            EditOp::Delete { reference } => {
                consumed = reference + 1;
                ((start..end).contains(&reference), None)
            }
            EditOp::Insert { hypothesis } => (consumed > start && consumed < end, Some(hypothesis)),
        };
        if inside {
            selected.push(*op);
            if let Some(h) = hyp {
                hyp_lo = hyp_lo.min(h);
                hyp_hi = hyp_hi.max(h + 1);
            }
        }
    }
    let range = if hyp_lo == usize::MAX { 0..0 } else { hyp_lo..hyp_hi };
    (count_ops(&selected), range)
}

/// Callsign-region counts summed over a corpus.
pub fn entity_counts<H: AsRef<str>>(
    refs: &[TaggedUtterance],
    hyps: &[Vec<H>],
) -> Result<AlignmentCounts, MetricsError> {
    if refs.len() != hyps.len() {
        return Err(MetricsError::LengthMismatch { reference: refs.len(), hypothesis: hyps.len() });
    }
    let mut total = AlignmentCounts::default();
    let mut any = false;
    for (r, h) in refs.iter().zip(hyps) {
        let Some(span) = r.callsign_span() else { continue };
        any = true;
        let ops = align_ops(&r.utterance.words(), h);
        total += project_region(&ops, span.start, span.end).0;
    }
    if !any {
        return Err(MetricsError::NoCallsignInCorpus);
    }
    Ok(total)
}

/// WER over the callsign words only.
pub fn entity_wer<H: AsRef<str>>(refs: &[TaggedUtterance], hyps: &[Vec<H>]) -> Result<f64, MetricsError> {
    wer(&entity_counts(refs, hyps)?)
}

/// Exact-match percentage; a missing prediction is wrong.
pub fn callsign_accuracy(
    reference: &[IcaoCallsign],
    predicted: &[Option<IcaoCallsign>],
) -> Result<f64, MetricsError> {
    if reference.len() != predicted.len() {
        return Err(MetricsError::LengthMismatch { reference: reference.len(), hypothesis: predicted.len() });
    }
    if reference.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let hits = reference.iter().zip(predicted).filter(|(r, p)| p.as_ref() == Some(*r)).count();
    Ok(hits as f64 / reference.len() as f64 * 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Add for Counts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self { tp: self.tp + o.tp, fp: self.fp + o.fp, fn_: self.fn_ + o.fn_ }
    }
}

/// True/false positives and false negatives per entity class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassCounts {
    per_class: [Counts; 3],
}

impl ClassCounts {
    pub fn get(&self, cls: EntityClass) -> Counts {
        self.per_class[cls as usize]
    }

    pub fn get_mut(&mut self, cls: EntityClass) -> &mut Counts {
        &mut self.per_class[cls as usize]
    }

    pub fn with(mut self, cls: EntityClass, counts: Counts) -> Self {
        *self.get_mut(cls) = counts;
        self
    }
}

impl Add for ClassCounts {
    type Output = Self;

    fn add(mut self, o: Self) -> Self {
        for cls in EntityClass::ALL {
            *self.get_mut(cls) = self.get(cls) + o.get(cls);
        }
        self
    }
}

impl AddAssign for ClassCounts {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// A zero denominator occurred; the affected ratio is reported as 0.
    pub undefined: bool,
}

impl Prf1 {
    pub fn from_counts(c: Counts) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { None } else { Some(num as f64 / den as f64) };
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_);
        Self {
            precision: precision.unwrap_or(0.0),
            recall: recall.unwrap_or(0.0),
            f1: f1.unwrap_or(0.0),
            undefined: precision.is_none() || recall.is_none() || f1.is_none(),
        }
    }
}

pub fn prf1(counts: &ClassCounts) -> BTreeMap<EntityClass, Prf1> {
    EntityClass::ALL.into_iter().map(|c| (c, Prf1::from_counts(counts.get(c)))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    /// A hit needs class, start and end to agree.
    #[default]
    Strict,
    /// Tokens are scored individually by class.
    Token,
}

fn units(spans: &[EntitySpan], mode: MatchMode) -> BTreeSet<(EntityClass, usize, usize)> {
    match mode {
        MatchMode::Strict => spans.iter().map(|s| (s.cls, s.start, s.end)).collect(),
        MatchMode::Token => spans.iter().flat_map(|s| (s.start..s.end).map(move |t| (s.cls, t, t + 1))).collect(),
    }
}

/// Reference spans moved into hypothesis token positions through the
/// alignment. A span whose words were all deleted is parked past the end of
/// the hypothesis so it can only count as missed.
pub fn project_spans(ops: &[EditOp], spans: &[EntitySpan], hyp_len: usize) -> Vec<EntitySpan> {
    let mut parked = hyp_len;
    spans
        .iter()
        .map(|s| {
            let (_, range) = project_region(ops, s.start, s.end);
            if range.is_empty() {
                let start = parked;
                parked += s.len();
                EntitySpan::new(s.cls, start, parked)
            } else {
                EntitySpan::new(s.cls, range.start, range.end)
            }
        })
        .collect()
}

pub fn span_match_counts(
    reference: &[Vec<EntitySpan>],
    hypothesis: &[Vec<EntitySpan>],
    mode: MatchMode,
) -> Result<ClassCounts, MetricsError> {
    if reference.len() != hypothesis.len() {
        return Err(MetricsError::LengthMismatch { reference: reference.len(), hypothesis: hypothesis.len() });
    }
    let mut counts = ClassCounts::default();
    for (r, h) in reference.iter().zip(hypothesis) {
        let (r, h) = (units(r, mode), units(h, mode));
        for unit in r.intersection(&h) {
            counts.get_mut(unit.0).tp += 1;
        }
        for unit in h.difference(&r) {
            counts.get_mut(unit.0).fp += 1;
        }
        for unit in r.difference(&h) {
            counts.get_mut(unit.0).fn_ += 1;
        }
    }
    Ok(counts)
}

/// How hypothesis callsigns are turned into ICAO form.
#[derive(Debug, Clone, Copy)]
pub enum CallsignPrediction<'a> {
    /// Map the spoken words back directly.
    Direct,
    /// Re-rank against surveillance; adopt the best candidate when its
    /// normalized cost is within the threshold.
    Reranked { resolver: &'a CallsignResolver<f64>, threshold: f64 },
}

impl CallsignPrediction<'_> {
    pub fn predict(&self, words: &[&str], table: &AirlineDesignatorTable) -> Option<IcaoCallsign> {
        if words.is_empty() {
            return None;
        }
        match self {
            CallsignPrediction::Direct => icao_from_spoken(words, table),
            CallsignPrediction::Reranked { resolver, threshold } => resolver
                .best(words)
                .ok()
                .flatten()
                .filter(|m| m.normalized_cost <= *threshold)
                .map(|m| m.candidate),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub utterances: usize,
    pub wer: f64,
    pub ent_wer: Option<f64>,
    pub callsign_acc: Option<f64>,
    pub per_class: BTreeMap<EntityClass, Prf1>,
}

impl EvalReport {
    pub fn to_table(&self) -> String {
        let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{:.1}", v));
        let mut out = String::new();
        let _ = writeln!(out, "utterances        {}", self.utterances);
        let _ = writeln!(out, "WER (%)           {:.1}", self.wer);
        let _ = writeln!(out, "EntWER (%)        {}", pct(self.ent_wer));
        let _ = writeln!(out, "Callsign ACC (%)  {}", pct(self.callsign_acc));
        let _ = writeln!(out, "{:<10} {:>6} {:>6} {:>6}", "class", "P", "R", "F1");
        for (cls, m) in &self.per_class {
            let flag = if m.undefined { " *" } else { "" };
            let _ = writeln!(out, "{:<10} {:>6.3} {:>6.3} {:>6.3}{flag}", cls.to_string(), m.precision, m.recall, m.f1);
        }
        out
    }

    /// One `key=value` metric per line.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "utterances={}", self.utterances);
        let _ = writeln!(out, "wer={:.1}", self.wer);
        if let Some(v) = self.ent_wer {
            let _ = writeln!(out, "ent_wer={v:.1}");
        }
        if let Some(v) = self.callsign_acc {
            let _ = writeln!(out, "callsign_acc={v:.1}");
        }
        for (cls, m) in &self.per_class {
            let name = cls.markup_name();
            let _ = writeln!(out, "{name}_precision={:.4}", m.precision);
            let _ = writeln!(out, "{name}_recall={:.4}", m.recall);
            let _ = writeln!(out, "{name}_f1={:.4}", m.f1);
        }
        out
    }
}

/// Scores plain-text hypotheses against a tagged reference corpus.
pub fn evaluate_corpus(
    refs: &[TaggedUtterance],
    hyps: &[String],
    parser: &EntityParser,
    prediction: CallsignPrediction<'_>,
    mode: MatchMode,
) -> Result<EvalReport, MetricsError> {
    if refs.len() != hyps.len() {
        return Err(MetricsError::LengthMismatch { reference: refs.len(), hypothesis: hyps.len() });
    }
    let parsed = hyps
        .iter()
        .map(|h| parser.parse_text(h))
        .collect::<Result<Vec<_>, _>>()?;
    let hyp_words: Vec<Vec<&str>> = parsed.iter().map(|p| p.utterance.words()).collect();
    let counts: AlignmentCounts =
        refs.iter().zip(&hyp_words).map(|(r, h)| align(&r.utterance.words(), h)).sum();

    let mut gold = Vec::new();
    let mut predicted = Vec::new();
    for (r, p) in refs.iter().zip(&parsed) {
        let Some(span) = r.callsign_span() else { continue };
        match icao_from_spoken(&span.words(&r.utterance), parser.table()) {
            Some(cs) => {
                gold.push(cs);
                predicted.push(prediction.predict(&p.callsign_words(), parser.table()));
            }
            None => log::warn!("reference callsign {:?} has no ICAO form", span.words(&r.utterance).join(" ")),
        }
    }

    let ref_spans: Vec<Vec<EntitySpan>> = refs
        .iter()
        .zip(&hyp_words)
        .map(|(r, h)| project_spans(&align_ops(&r.utterance.words(), h), &r.spans, h.len()))
        .collect();
    let hyp_spans: Vec<Vec<EntitySpan>> = parsed.iter().map(|p| p.spans()).collect();
    let class_counts = span_match_counts(&ref_spans, &hyp_spans, mode)?;

    Ok(EvalReport {
        utterances: refs.len(),
        wer: wer(&counts)?,
        ent_wer: entity_wer(refs, &hyp_words).ok(),
        callsign_acc: callsign_accuracy(&gold, &predicted).ok(),
        per_class: prf1(&class_counts),
    })
}
