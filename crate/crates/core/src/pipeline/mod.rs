//! Session orchestration: transcript in, pilot read-back out, one JSONL
//! record per step.

mod config;

pub use config::{ConfigError, ExerciseConfig, Position, DEFAULT_RERANK_THRESHOLD};

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entity::{EntityParser, EntitySpan, ParseError, PhraseologyGrammar};
use crate::phraseology::{normalize, AirlineDesignatorTable, IcaoCallsign, SpeakerRole};
use crate::resolver::{load_surveillance, CallsignResolver, EditCosts, ResolveError};
use crate::response::{
    apply_word_fixer, convert_grammar, insert_readback_error, render_readback, DuplicatePolicy, RbeError,
    ReadbackError, RuleApplication, WordFixerRules,
};
use crate::tts::{send_to_tts, NullSink, SinkError, TtsSink, DEFAULT_SINK_TIMEOUT};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Resolve(#[from] ResolveError),
    #[error("log line {line}: {detail}")]
    MalformedRecord { line: usize, detail: String },
    #[error("io: {0}")]
    Io(String),
}

impl PipelineError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "config_error",
            PipelineError::UnknownSession(_) => "unknown_session",
            PipelineError::Parse(_) => "parse_error",
            PipelineError::Resolve(_) => "resolve_error",
            PipelineError::MalformedRecord { .. } => "malformed_record",
            PipelineError::Io(_) => "io_error",
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> PipelineError {
    PipelineError::Io(format!("{}: {e}", path.display()))
}

pub trait Clock: Send {
    fn now_ms(&mut self) -> u64;
}

/// Wall-clock milliseconds since the Unix epoch.
#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&mut self) -> u64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
    }
}

/// Counts up by one per reading. Makes logs reproducible byte for byte.
#[derive(Debug, Default, Clone, Copy)]
pub struct LogicalClock(pub u64);

impl Clock for LogicalClock {
    fn now_ms(&mut self) -> u64 {
        let t = self.0;
        self.0 += 1;
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClockMode {
    #[default]
    System,
    /// Each session gets its own [`LogicalClock`] starting at zero.
    Logical,
}

impl ClockMode {
    fn make(self) -> Box<dyn Clock> {
        match self {
            ClockMode::System => Box::new(SystemClock),
            ClockMode::Logical => Box::new(LogicalClock::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedCallsign {
    pub callsign: IcaoCallsign,
    pub cost: f64,
    pub normalized_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timestamps {
    pub received_ms: u64,
    pub responded_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionRecord {
    pub session_id: String,
    pub step_index: u64,
    pub atco_text: String,
    pub parsed: String,
    pub resolved_callsign: Option<ResolvedCallsign>,
    pub pilot_text: String,
    pub rbe: Option<ReadbackError>,
    pub rules_applied: Vec<RuleApplication>,
    pub advisories: Vec<String>,
    pub timestamps: Timestamps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotResponse {
    pub step_index: u64,
    pub text: String,
    pub entities: String,
    pub spans: Vec<EntitySpan>,
    pub rbe_inserted: bool,
    pub resolved_callsign: Option<IcaoCallsign>,
    pub advisories: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub steps: u64,
    pub rbe_count: u64,
    pub no_callsign_count: u64,
}

pub mod advisory {
    pub const NO_CALLSIGN: &str = "no_callsign";
    pub const CALLSIGN_UNRESOLVED: &str = "callsign_unresolved";
    pub const EMPTY_READBACK: &str = "empty_readback";
    pub const UNMATCHED_COMMAND: &str = "unmatched_command";
    pub const RBE_NOT_APPLICABLE: &str = "rbe_not_applicable";
    pub const TTS_TIMEOUT: &str = "tts_timeout";
    pub const TTS_UNAVAILABLE: &str = "tts_unavailable";
}

pub struct EngineOptions {
    pub log_dir: PathBuf,
    pub sink: Arc<dyn TtsSink>,
    pub sink_timeout: Duration,
    pub clock: ClockMode,
}

impl EngineOptions {
    pub fn new(log_dir: impl Into<PathBuf>) -> Self {
        Self {
            log_dir: log_dir.into(),
            sink: Arc::new(NullSink),
            sink_timeout: DEFAULT_SINK_TIMEOUT,
            clock: ClockMode::System,
        }
    }
}

struct Session {
    id: String,
    config: ExerciseConfig,
    parser: EntityParser,
    rules: Arc<WordFixerRules>,
    resolver: CallsignResolver<f64>,
    rng: ChaCha8Rng,
    clock: Box<dyn Clock>,
    log: File,
    log_path: PathBuf,
    steps: u64,
    rbe_count: u64,
    no_callsign_count: u64,
}

/// Grammar, rules and designator tables keyed by path; `None` is the
/// bundled copy.
#[derive(Default)]
struct AssetCache {
    grammars: HashMap<Option<PathBuf>, Arc<PhraseologyGrammar>>,
    rules: HashMap<Option<PathBuf>, Arc<WordFixerRules>>,
    tables: HashMap<Option<PathBuf>, Arc<AirlineDesignatorTable>>,
}

fn cached<T, E: std::fmt::Display>(
    map: &mut HashMap<Option<PathBuf>, Arc<T>>,
    key: &Option<PathBuf>,
    field: &str,
    builtin: impl FnOnce() -> T,
    load: impl FnOnce(&Path) -> Result<T, E>,
) -> Result<Arc<T>, ConfigError> {
    if let Some(hit) = map.get(key) {
        return Ok(Arc::clone(hit));
    }
    let value = match key {
        None => builtin(),
        Some(path) => load(path).map_err(|e| ConfigError::new(field, format!("{}: {e}", path.display())))?,
    };
    let value = Arc::new(value);
    map.insert(key.clone(), Arc::clone(&value));
    Ok(value)
}

pub struct Engine {
    options: EngineOptions,
    assets: Mutex<AssetCache>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    closed: Mutex<HashMap<String, PathBuf>>,
    next_id: Mutex<u64>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

impl Engine {
    pub fn new(options: EngineOptions) -> Result<Self, PipelineError> {
        std::fs::create_dir_all(&options.log_dir).map_err(|e| io_err(&options.log_dir, e))?;
        Ok(Self {
            options,
            assets: Mutex::default(),
            sessions: Mutex::default(),
            closed: Mutex::default(),
            next_id: Mutex::new(1),
        })
    }

    pub fn log_dir(&self) -> &Path {
        &self.options.log_dir
    }

    pub fn start_session(&self, config: ExerciseConfig) -> Result<String, PipelineError> {
        config.validate()?;
        let (grammar, rules, table) = {
            let mut assets = lock(&self.assets);
            let grammar = cached(
                &mut assets.grammars,
                &config.grammar_path,
                "grammar_path",
                PhraseologyGrammar::builtin,
                |p| PhraseologyGrammar::load(p),
            )?;
            let rules = cached(&mut assets.rules, &config.rules_path, "rules_path", WordFixerRules::builtin, |p| {
                WordFixerRules::load_with(p, DuplicatePolicy::Shadow)
            })?;
            let table = cached(
                &mut assets.tables,
                &config.designator_table_path,
                "designator_table_path",
                AirlineDesignatorTable::builtin,
                |p| AirlineDesignatorTable::load(p),
            )?;
            (grammar, rules, table)
        };
        let loaded = load_surveillance(&config.surveillance_path)
            .map_err(|e| ConfigError::new("surveillance_path", format!("{}: {e}", config.surveillance_path.display())))?;
        for w in &loaded.warnings {
            log::warn!("{}: {w}", config.surveillance_path.display());
        }
        let resolver = CallsignResolver::new(&loaded.snapshot, &table, EditCosts::unit())?;

        let (id, log_path, log) = self.open_log()?;
        let session = Session {
            id: id.clone(),
            parser: EntityParser::new(grammar, table),
            rules,
            resolver,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            clock: self.options.clock.make(),
            log,
            log_path,
            steps: 0,
            rbe_count: 0,
            no_callsign_count: 0,
            config,
        };
        log::info!("started {id}");
        lock(&self.sessions).insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    fn open_log(&self) -> Result<(String, PathBuf, File), PipelineError> {
        let mut next = lock(&self.next_id);
        loop {
            let id = format!("session-{:04}", *next);
            *next += 1;
            let path = self.options.log_dir.join(format!("{id}.jsonl"));
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(file) => return Ok((id, path, file)),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(io_err(&path, e)),
            }
        }
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, PipelineError> {
        lock(&self.sessions)
            .get(id)
            .cloned()
            .ok_or_else(|| PipelineError::UnknownSession(id.to_string()))
    }

    pub fn active_sessions(&self) -> Vec<String> {
        let mut ids: Vec<String> = lock(&self.sessions).keys().cloned().collect();
        ids.sort();
        ids
    }

    pub fn step(&self, session_id: &str, atco_text: &str) -> Result<PilotResponse, PipelineError> {
        let session = self.session(session_id)?;
        let mut s = lock(&session);
        let (record, response) = s.process(atco_text, &self.options)?;
        let mut line = serde_json::to_string(&record).expect("records serialize");
        line.push('\n');
        s.log.write_all(line.as_bytes()).and_then(|_| s.log.flush()).map_err(|e| io_err(&s.log_path, e))?;
        s.steps += 1;
        s.rbe_count += u64::from(record.rbe.is_some());
        s.no_callsign_count += u64::from(record.advisories.iter().any(|a| a == advisory::NO_CALLSIGN));
        Ok(response)
    }

    pub fn end_session(&self, session_id: &str) -> Result<SessionSummary, PipelineError> {
        let session = lock(&self.sessions)
            .remove(session_id)
            .ok_or_else(|| PipelineError::UnknownSession(session_id.to_string()))?;
        let mut s = lock(&session);
        s.log.flush().map_err(|e| io_err(&s.log_path, e))?;
        lock(&self.closed).insert(s.id.clone(), s.log_path.clone());
        log::info!("ended {} after {} steps", s.id, s.steps);
        Ok(SessionSummary {
            session_id: s.id.clone(),
            steps: s.steps,
            rbe_count: s.rbe_count,
            no_callsign_count: s.no_callsign_count,
        })
    }

    /// Log file of an active or ended session.
    pub fn log_path(&self, session_id: &str) -> Result<PathBuf, PipelineError> {
        if let Some(s) = lock(&self.sessions).get(session_id) {
            return Ok(lock(s).log_path.clone());
        }
        lock(&self.closed)
            .get(session_id)
            .cloned()
            .ok_or_else(|| PipelineError::UnknownSession(session_id.to_string()))
    }

    pub fn records(&self, session_id: &str) -> Result<Vec<SessionRecord>, PipelineError> {
        replay(self.log_path(session_id)?)
    }

    pub fn config(&self, session_id: &str) -> Result<ExerciseConfig, PipelineError> {
        let session = self.session(session_id)?;
        let config = lock(&session).config.clone();
        Ok(config)
    }
}

impl Session {
    fn process(&mut self, atco_text: &str, options: &EngineOptions) -> Result<(SessionRecord, PilotResponse), PipelineError> {
        let received_ms = self.clock.now_ms();
        let step_index = self.steps;
        let utterance = normalize(atco_text).with_source(SpeakerRole::Atco, format!("{}#{step_index}", self.id));
        let parsed = self.parser.parse(&utterance)?;
        let mut advisories = Vec::new();

        let resolved = if parsed.no_callsign {
            advisories.push(advisory::NO_CALLSIGN.to_string());
            None
        } else {
            match self.resolver.best(&parsed.callsign_words())? {
                Some(m) if m.normalized_cost <= self.config.rerank_threshold => Some(ResolvedCallsign {
                    callsign: m.candidate,
                    cost: m.cost,
                    normalized_cost: m.normalized_cost,
                }),
                _ => {
                    advisories.push(advisory::CALLSIGN_UNRESOLVED.to_string());
                    None
                }
            }
        };

        let fixed = apply_word_fixer(&convert_grammar(&parsed), &self.rules);
        if !fixed.unmatched.is_empty() {
            advisories.push(advisory::UNMATCHED_COMMAND.to_string());
        }
        let plan = match insert_readback_error(&fixed.plan, self.config.rbe_probability, &mut self.rng, &self.config.rbe_kinds) {
            Ok((plan, _)) => plan,
            Err(RbeError::NoApplicableKind) => {
                advisories.push(advisory::RBE_NOT_APPLICABLE.to_string());
                fixed.plan.clone()
            }
            Err(e @ RbeError::InvalidProbability(_)) => {
                return Err(ConfigError::new("rbe_probability", e).into());
            }
        };
        let text = render_readback(&plan);
        if text.is_empty() {
            advisories.push(advisory::EMPTY_READBACK.to_string());
        } else {
            match send_to_tts(&text, &options.sink, options.sink_timeout) {
                Ok(_) => {}
                Err(e) => {
                    log::warn!("{}: {e}", self.id);
                    advisories.push(
                        match e {
                            SinkError::SinkTimeout(_) => advisory::TTS_TIMEOUT,
                            SinkError::SinkUnavailable(_) => advisory::TTS_UNAVAILABLE,
                        }
                        .to_string(),
                    );
                }
            }
        }
        let responded_ms = self.clock.now_ms();

        let entities = parsed.render_tagged();
        let record = SessionRecord {
            session_id: self.id.clone(),
            step_index,
            atco_text: atco_text.to_string(),
            parsed: entities.clone(),
            resolved_callsign: resolved.clone(),
            pilot_text: text.clone(),
            rbe: plan.rbe.clone(),
            rules_applied: fixed.applied,
            advisories: advisories.clone(),
            timestamps: Timestamps { received_ms, responded_ms },
        };
        let response = PilotResponse {
            step_index,
            text,
            entities,
            spans: parsed.spans(),
            rbe_inserted: plan.rbe.is_some(),
            resolved_callsign: resolved.map(|r| r.callsign),
            advisories,
        };
        Ok((record, response))
    }
}

/// Reads a JSONL session log back. Lines are 1-based in errors.
pub fn replay(log_path: impl AsRef<Path>) -> Result<Vec<SessionRecord>, PipelineError> {
    let path = log_path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut records: Vec<SessionRecord> = Vec::new();
    let mut last_step: HashMap<String, u64> = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let n = i + 1;
        let record: SessionRecord =
            serde_json::from_str(&line).map_err(|e| PipelineError::MalformedRecord { line: n, detail: e.to_string() })?;
        if let Some(prev) = last_step.get(&record.session_id) {
            if record.step_index <= *prev {
                return Err(PipelineError::MalformedRecord {
                    line: n,
                    detail: format!("step_index {} does not follow {prev}", record.step_index),
                });
            }
        }
        last_step.insert(record.session_id.clone(), record.step_index);
        records.push(record);
    }
    Ok(records)
}
