//! Contextual biasing with surveillance data: expands the callsigns active
//! in the airspace, exports boosting lists for external decoders and
//! re-ranks an extracted callsign by weighted word-level Levenshtein
//! distance.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phraseology::{
    shortened_variants, verbalize_callsign, AirlineDesignatorTable, IcaoCallsign, SpokenCallsign,
    VerbalizeMode,
};
use crate::scalar::{min_cost, Cost};

/// Above this many expanded entities biasing tends to hurt recognition.
pub const CONTEXT_ENTITY_LIMIT: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum ResolveError {
    #[error("surveillance snapshot has no valid callsign")]
    EmptySnapshot,
    #[error("duplicate callsign {0} in snapshot")]
    DuplicateCallsign(IcaoCallsign),
    #[error("re-ranking query is empty")]
    EmptyQuery,
    #[error("invalid edit cost {0}")]
    InvalidCost(String),
    #[error("{path}: line {line}: {reason}")]
    MalformedLine { path: String, line: usize, reason: String },
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurveillanceSnapshot {
    pub timestamp: u64,
    callsigns: Vec<IcaoCallsign>,
}

impl SurveillanceSnapshot {
    pub fn new(timestamp: u64, callsigns: Vec<IcaoCallsign>) -> Result<Self, ResolveError> {
        if callsigns.is_empty() {
            return Err(ResolveError::EmptySnapshot);
        }
        let mut seen = HashSet::new();
        if let Some(dup) = callsigns.iter().find(|c| !seen.insert(*c)) {
            return Err(ResolveError::DuplicateCallsign(dup.clone()));
        }
        Ok(Self { timestamp, callsigns })
    }

    pub fn callsigns(&self) -> &[IcaoCallsign] {
        &self.callsigns
    }

    pub fn len(&self) -> usize {
        self.callsigns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.callsigns.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedSnapshot {
    pub snapshot: SurveillanceSnapshot,
    pub warnings: Vec<String>,
}

/// Parses the surveillance file format: optional `#timestamp=<secs>`
/// first line, then one ICAO callsign per line, `#` comments.
pub fn parse_surveillance(text: &str) -> Result<LoadedSnapshot, ResolveError> {
    let mut timestamp = 0;
    let mut warnings = Vec::new();
    let mut callsigns = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if let Some(ts) = trimmed.strip_prefix("#timestamp=") {
            match ts.trim().parse() {
                Ok(v) => timestamp = v,
                Err(_) => warnings.push(format!("line {}: bad timestamp {ts:?}", i + 1)),
            }
            continue;
        }
        let line = trimmed.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<IcaoCallsign>() {
            Ok(cs) if !seen.insert(cs.clone()) => {
                warnings.push(format!("line {}: duplicate callsign {cs}", i + 1))
            }
            Ok(cs) => callsigns.push(cs),
            Err(_) => warnings.push(format!("line {}: invalid callsign {line:?}", i + 1)),
        }
    }
    for w in &warnings {
        log::warn!("surveillance: {w}");
    }
    Ok(LoadedSnapshot { snapshot: SurveillanceSnapshot::new(timestamp, callsigns)?, warnings })
}

pub fn load_surveillance(path: impl AsRef<Path>) -> Result<LoadedSnapshot, ResolveError> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| ResolveError::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_surveillance(&text)
}

/// Word-level edit weights. Overrides price specific substitutions, looked
/// up in either order.
#[derive(Debug, Clone, PartialEq)]
pub struct EditCosts<C> {
    pub substitution: C,
    pub insertion: C,
    pub deletion: C,
    pub overrides: HashMap<(String, String), C>,
}

impl<C: Cost> EditCosts<C> {
    pub fn unit() -> Self {
        Self::uniform(C::one())
    }

    pub fn uniform(weight: C) -> Self {
        Self { substitution: weight, insertion: weight, deletion: weight, overrides: HashMap::new() }
    }

    pub fn validate(&self) -> Result<(), ResolveError> {
        let all = [self.substitution, self.insertion, self.deletion];
        match all.iter().chain(self.overrides.values()).find(|w| !w.is_valid_weight()) {
            Some(bad) => Err(ResolveError::InvalidCost(format!("{bad:?}"))),
            None => Ok(()),
        }
    }

    pub fn with_override(mut self, a: &str, b: &str, weight: C) -> Self {
        self.overrides.insert((a.to_string(), b.to_string()), weight);
        self
    }

    pub fn substitution_cost(&self, a: &str, b: &str) -> C {
        if a == b {
            return C::zero();
        }
        if self.overrides.is_empty() {
            return self.substitution;
        }
        self.overrides
            .get(&(a.to_string(), b.to_string()))
            .or_else(|| self.overrides.get(&(b.to_string(), a.to_string())))
            .copied()
            .unwrap_or(self.substitution)
    }

    /// Reads `<word_a><TAB><word_b><TAB><weight>` lines into the overrides.
    pub fn parse_overrides(mut self, text: &str) -> Result<Self, ResolveError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let malformed = |reason: &str| ResolveError::MalformedLine {
                path: "cost overrides".into(),
                line: i + 1,
                reason: reason.into(),
            };
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            let [a, b, w] = fields.as_slice() else {
                return Err(malformed("expected word_a<TAB>word_b<TAB>weight"));
            };
            let weight = w
                .parse::<f64>()
                .ok()
                .and_then(C::from)
                .filter(|c: &C| c.is_valid_weight())
                .ok_or_else(|| malformed("weight is not a non-negative number"))?;
            self.overrides.insert((a.to_lowercase(), b.to_lowercase()), weight);
        }
        Ok(self)
    }

    pub fn load_overrides(self, path: impl AsRef<Path>) -> Result<Self, ResolveError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ResolveError::Io(format!("{}: {e}", path.as_ref().display())))?;
        self.parse_overrides(&text)
    }
}

impl<C: Cost> Default for EditCosts<C> {
    fn default() -> Self {
        Self::unit()
    }
}

/// Minimal total cost turning `a` into `b` (insert into `a`, delete from
/// `a`, substitute), computed row by row.
pub fn weighted_levenshtein<C, A, B>(a: &[A], b: &[B], costs: &EditCosts<C>) -> C
where
    C: Cost,
    A: AsRef<str>,
    B: AsRef<str>,
{
    let mut prev: Vec<C> = Vec::with_capacity(b.len() + 1);
    let mut acc = C::zero();
    prev.push(acc);
    for _ in b {
        acc = acc + costs.insertion;
        prev.push(acc);
    }
    let mut cur = vec![C::zero(); b.len() + 1];
    for wa in a {
        cur[0] = prev[0] + costs.deletion;
        for (j, wb) in b.iter().enumerate() {
            let sub = prev[j] + costs.substitution_cost(wa.as_ref(), wb.as_ref());
            let del = prev[j + 1] + costs.deletion;
            let ins = cur[j] + costs.insertion;
            cur[j + 1] = min_cost(min_cost(sub, del), ins);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedMatch<C> {
    pub candidate: IcaoCallsign,
    /// The variant of the candidate closest to the query.
    pub spoken: SpokenCallsign,
    pub cost: C,
    pub normalized_cost: f64,
}

#[derive(Debug, Clone)]
struct Candidate {
    callsign: IcaoCallsign,
    variants: Vec<SpokenCallsign>,
}

fn expand(snapshot: &SurveillanceSnapshot, table: &AirlineDesignatorTable) -> Vec<Candidate> {
    snapshot
        .callsigns()
        .iter()
        .map(|cs| {
            let full = verbalize_callsign(cs, table, VerbalizeMode::Lenient)
                .expect("valid callsigns always verbalize leniently");
            Candidate { callsign: cs.clone(), variants: shortened_variants(&full) }
        })
        .collect()
}

/// A snapshot expanded once into spoken variants, ready for repeated
/// re-ranking.
#[derive(Debug, Clone)]
pub struct CallsignResolver<C> {
    candidates: Vec<Candidate>,
    costs: EditCosts<C>,
}

impl<C: Cost> CallsignResolver<C> {
    pub fn new(
        snapshot: &SurveillanceSnapshot,
        table: &AirlineDesignatorTable,
        costs: EditCosts<C>,
    ) -> Result<Self, ResolveError> {
        costs.validate()?;
        Ok(Self { candidates: expand(snapshot, table), costs })
    }

    pub fn costs(&self) -> &EditCosts<C> {
        &self.costs
    }

    /// Every candidate with its cheapest variant, best first; ties are
    /// broken by the candidate's ICAO string.
    pub fn rerank(&self, extracted: &[impl AsRef<str>]) -> Result<Vec<RankedMatch<C>>, ResolveError> {
        if extracted.is_empty() {
            return Err(ResolveError::EmptyQuery);
        }
        let mut ranked: Vec<RankedMatch<C>> = self
            .candidates
            .iter()
            .map(|cand| {
                let (spoken, cost) = cand
                    .variants
                    .iter()
                    .map(|v| (v, weighted_levenshtein(extracted, v.words(), &self.costs)))
                    .fold(None, |best: Option<(&SpokenCallsign, C)>, (v, c)| match best {
                        Some((_, bc)) if bc <= c => best,
                        _ => Some((v, c)),
                    })
                    .expect("every candidate has its full form");
                let denom = extracted.len().max(spoken.len()) as f64;
                RankedMatch {
                    candidate: cand.callsign.clone(),
                    spoken: spoken.clone(),
                    cost,
                    normalized_cost: cost.as_f64() / denom,
                }
            })
            .collect();
        ranked.sort_by(|a, b| {
            a.cost
                .partial_cmp(&b.cost)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.candidate.cmp(&b.candidate))
        });
        Ok(ranked)
    }

    pub fn best(&self, extracted: &[impl AsRef<str>]) -> Result<Option<RankedMatch<C>>, ResolveError> {
        Ok(self.rerank(extracted)?.into_iter().next())
    }
}

pub fn rerank<C: Cost>(
    extracted: &SpokenCallsign,
    snapshot: &SurveillanceSnapshot,
    table: &AirlineDesignatorTable,
    costs: &EditCosts<C>,
) -> Result<Vec<RankedMatch<C>>, ResolveError> {
    CallsignResolver::new(snapshot, table, costs.clone())?.rerank(extracted.words())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoostMode {
    Unigram,
    Ngram,
}

impl std::str::FromStr for BoostMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "unigram" => Ok(BoostMode::Unigram),
            "ngram" => Ok(BoostMode::Ngram),
            other => Err(format!("unknown boost mode {other:?} (expected unigram or ngram)")),
        }
    }
}

pub const DEFAULT_BOOST_WEIGHT: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostList {
    pub mode: BoostMode,
    pub entries: Vec<(String, f64)>,
}

impl fmt::Display for BoostList {
    /// `<n-gram words><TAB><weight>` per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (ngram, weight) in &self.entries {
            writeln!(f, "{ngram}\t{weight}")?;
        }
        Ok(())
    }
}

pub fn make_boost_list(
    snapshot: &SurveillanceSnapshot,
    table: &AirlineDesignatorTable,
    mode: BoostMode,
) -> BoostList {
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for cand in expand(snapshot, table) {
        match mode {
            BoostMode::Ngram => {
                for v in cand.variants {
                    let text = v.to_string();
                    if seen.insert(text.clone()) {
                        entries.push((text, DEFAULT_BOOST_WEIGHT));
                    }
                }
            }
            BoostMode::Unigram => {
                for w in cand.variants[0].words() {
                    if seen.insert(w.clone()) {
                        entries.push((w.clone(), DEFAULT_BOOST_WEIGHT));
                    }
                }
            }
        }
    }
    BoostList { mode, entries }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotStats {
    pub count: usize,
    pub expanded_count: usize,
    pub over_limit: bool,
}

pub fn snapshot_stats(snapshot: &SurveillanceSnapshot, table: &AirlineDesignatorTable) -> SnapshotStats {
    let expanded_count = expand(snapshot, table).iter().map(|c| c.variants.len()).sum();
    SnapshotStats {
        count: snapshot.len(),
        expanded_count,
        over_limit: expanded_count > CONTEXT_ENTITY_LIMIT,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cs(s: &str) -> IcaoCallsign {
        IcaoCallsign::new(s).unwrap()
    }

    fn snapshot(list: &[&str]) -> SurveillanceSnapshot {
        SurveillanceSnapshot::new(0, list.iter().map(|s| cs(s)).collect()).unwrap()
    }

    fn words(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn loads_surveillance_file() {
        let loaded = parse_surveillance("#timestamp=1700000000\nRYR92BQ\nAUA392P\nDLH6LY\n").unwrap();
        assert_eq!(loaded.snapshot.len(), 3);
        assert_eq!(loaded.snapshot.timestamp, 1_700_000_000);
        assert!(loaded.warnings.is_empty());

        let dup = parse_surveillance("RYR92BQ\nRYR92BQ\n").unwrap();
        assert_eq!(dup.snapshot.len(), 1);
        assert_eq!(dup.warnings.len(), 1);

        let bad = parse_surveillance("123###\nDLH6LY # comment\n").unwrap();
        assert_eq!(bad.snapshot.callsigns(), [cs("DLH6LY")]);
        assert_eq!(bad.warnings.len(), 1);

        assert_eq!(parse_surveillance("# only\n123###\n"), Err(ResolveError::EmptySnapshot));
    }

    #[test]
    fn distance_examples() {
        let unit = EditCosts::<u32>::unit();
        assert_eq!(weighted_levenshtein(&words("six lima yankee"), &words("six lima yankee"), &unit), 0);
        assert_eq!(
            weighted_levenshtein(&words("six lima yankee"), &words("hansa six lima yankee"), &unit),
            1
        );
        assert_eq!(weighted_levenshtein::<u32, &str, &str>(&[], &words("a b"), &unit), 2);
    }

    #[test]
    fn overrides_price_confusable_pairs() {
        let costs = EditCosts::<f64>::unit().parse_overrides("five\tnine\t0.25\n").unwrap();
        assert_eq!(weighted_levenshtein(&["nine"], &["five"], &costs), 0.25);
        assert_eq!(weighted_levenshtein(&["five"], &["nine"], &costs), 0.25);
        assert!(EditCosts::<f64>::unit().parse_overrides("a\tb\n").is_err());
        assert!(EditCosts::<f64>::unit().parse_overrides("a\tb\t-1\n").is_err());
        assert!(EditCosts::<f64>::uniform(-1.0).validate().is_err());
        assert!(EditCosts::<f64>::uniform(f64::NAN).validate().is_err());
    }

    #[test]
    fn shortened_callsigns_resolve_at_zero_cost() {
        let table = AirlineDesignatorTable::builtin();
        let snap = snapshot(&["DLH6LY", "AUA392P"]);
        let q = SpokenCallsign::parse("six lima yankee").unwrap();
        let ranked = rerank(&q, &snap, &table, &EditCosts::<u32>::unit()).unwrap();
        assert_eq!(ranked[0].candidate, cs("DLH6LY"));
        assert_eq!(ranked[0].cost, 0);

        let q = SpokenCallsign::parse("three nine two papa").unwrap();
        let ranked = rerank(&q, &snapshot(&["AUA392P"]), &table, &EditCosts::<u32>::unit()).unwrap();
        assert_eq!(ranked[0].candidate, cs("AUA392P"));
        assert_eq!(ranked[0].cost, 0);
        assert_eq!(ranked[0].spoken.to_string(), "three nine two papa");
    }

    #[test]
    fn rerank_is_sorted_with_lexicographic_ties() {
        let table = AirlineDesignatorTable::builtin();
        let resolver = CallsignResolver::new(
            &snapshot(&["RYR92BQ", "RYR92BA", "AUA392P"]),
            &table,
            EditCosts::<f64>::unit(),
        )
        .unwrap();
        let ranked = resolver.rerank(&words("ryanair nine two bravo xray")).unwrap();
        let order: Vec<&str> = ranked.iter().map(|m| m.candidate.as_str()).collect();
        assert_eq!(order, ["RYR92BA", "RYR92BQ", "AUA392P"]);
        assert_eq!(ranked[0].normalized_cost, 0.2);
        assert_eq!(resolver.rerank(&Vec::<String>::new()), Err(ResolveError::EmptyQuery));
    }

    #[test]
    fn boost_lists() {
        let table = AirlineDesignatorTable::builtin();
        let snap = snapshot(&["AUA392P"]);
        let ngram = make_boost_list(&snap, &table, BoostMode::Ngram);
        let texts: Vec<&str> = ngram.entries.iter().map(|(t, _)| t.as_str()).collect();
        assert!(texts.contains(&"austrian three nine two papa"));
        assert!(texts.contains(&"three nine two papa"));
        let uni = make_boost_list(&snap, &table, BoostMode::Unigram);
        let set: HashSet<&str> = uni.entries.iter().map(|(t, _)| t.as_str()).collect();
        assert_eq!(set, HashSet::from(["austrian", "three", "nine", "two", "papa"]));
        assert_eq!(uni.entries.len(), 5);
        assert!(ngram.to_string().starts_with("austrian three nine two papa\t1\n"));
    }

    #[test]
    fn stats_and_entity_limit() {
        let table = AirlineDesignatorTable::builtin();
        // Four-word forms have exactly one shortened variant.
        let stats = snapshot_stats(&snapshot(&["DLH6LY", "DLH7LZ", "DLH8AB"]), &table);
        assert_eq!((stats.count, stats.expanded_count, stats.over_limit), (3, 6, false));

        let many: Vec<IcaoCallsign> = (0..600)
            .map(|i| cs(&format!("DLH{:02}{}", i / 26, (b'A' + (i % 26) as u8) as char)))
            .collect();
        let stats = snapshot_stats(&SurveillanceSnapshot::new(0, many).unwrap(), &table);
        assert_eq!(stats.expanded_count, 1200);
        assert!(stats.over_limit);
    }

    #[test]
    fn snapshot_rejects_empty_and_duplicates() {
        assert_eq!(SurveillanceSnapshot::new(0, vec![]), Err(ResolveError::EmptySnapshot));
        assert!(matches!(
            SurveillanceSnapshot::new(0, vec![cs("DLH6LY"), cs("DLH6LY")]),
            Err(ResolveError::DuplicateCallsign(_))
        ));
    }
}
