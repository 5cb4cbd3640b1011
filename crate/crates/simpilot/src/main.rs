use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use simpilot::server::{router, AppState};
use simpilot_core::entity::{EntityParser, PhraseologyGrammar, TaggedUtterance};
use simpilot_core::metrics::{evaluate_corpus, CallsignPrediction, MatchMode};
use simpilot_core::phraseology::AirlineDesignatorTable;
use simpilot_core::pipeline::{ClockMode, Engine, EngineOptions, ExerciseConfig, DEFAULT_RERANK_THRESHOLD};
use simpilot_core::resolver::{load_surveillance, make_boost_list, BoostMode, CallsignResolver, EditCosts};
use simpilot_core::tts::{FileSink, NullSink, TtsSink};

#[derive(Parser)]
#[command(name = "simpilot", version, about = "Virtual simulation-pilot for ATC controller training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Interactive session: one ATCo transcript per stdin line.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "logs")]
        log_dir: PathBuf,
        /// Append pilot read-backs to this file for a TTS process.
        #[arg(long)]
        tts_out: Option<PathBuf>,
        /// Counter timestamps instead of wall-clock, for reproducible logs.
        #[arg(long)]
        logical_clock: bool,
    },
    /// HTTP/JSON API for the trainer console.
    Serve {
        /// Default exercise for `POST /sessions` with an empty body.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value = "logs")]
        log_dir: PathBuf,
        #[arg(long)]
        tts_out: Option<PathBuf>,
        #[arg(long)]
        logical_clock: bool,
    },
    /// Score hypotheses against a tagged reference corpus.
    Eval {
        /// Tagged reference corpus, one utterance per line.
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Plain-text hypotheses, line-aligned with the reference.
        #[arg(long)]
        hyp: PathBuf,
        /// Re-rank hypothesis callsigns against this snapshot.
        #[arg(long)]
        surveillance: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_RERANK_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        designators: Option<PathBuf>,
        #[arg(long)]
        grammar: Option<PathBuf>,
        /// Count entity matches per token instead of per exact span.
        #[arg(long)]
        token_level: bool,
        #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Contextual-biasing list for an external recognizer.
    Boostlist {
        #[arg(long)]
        surveillance: PathBuf,
        #[arg(long, default_value = "ngram")]
        mode: BoostMode,
        #[arg(long)]
        designators: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Table,
    Kv,
    Json,
}

fn engine_options(log_dir: PathBuf, tts_out: Option<PathBuf>, logical_clock: bool) -> EngineOptions {
    let mut options = EngineOptions::new(log_dir);
    options.sink = match tts_out {
        Some(path) => Arc::new(FileSink::new(path)) as Arc<dyn TtsSink>,
        None => Arc::new(NullSink),
    };
    options.clock = if logical_clock { ClockMode::Logical } else { ClockMode::System };
    options
}

fn designators(path: Option<&Path>) -> Result<AirlineDesignatorTable> {
    match path {
        Some(p) => AirlineDesignatorTable::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(AirlineDesignatorTable::builtin()),
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(config: &Path, options: EngineOptions) -> Result<()> {
    let config = ExerciseConfig::load(config)?;
    let engine = Engine::new(options)?;
    let id = engine.start_session(config)?;
    eprintln!("{id} started; one transmission per line, end with Ctrl-D");
    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout();
    for line in stdin.lock().lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match engine.step(&id, &line) {
            Ok(r) => {
                writeln!(stdout, "{}", r.text)?;
                stdout.flush()?;
                if !r.advisories.is_empty() {
                    eprintln!("  [{}]", r.advisories.join(", "));
                }
            }
            Err(e) => eprintln!("error: {e}"),
        }
    }
    let summary = engine.end_session(&id)?;
    eprintln!(
        "{}: {} steps, {} read-back errors, {} without callsign",
        summary.session_id, summary.steps, summary.rbe_count, summary.no_callsign_count
    );
    Ok(())
}

async fn serve(config: Option<&Path>, host: &str, port: u16, options: EngineOptions) -> Result<()> {
    let default_config = config.map(ExerciseConfig::load).transpose()?;
    let state = AppState { engine: Arc::new(Engine::new(options)?), default_config };
    let listener = tokio::net::TcpListener::bind((host, port))
        .await
        .with_context(|| format!("binding {host}:{port}"))?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    Ok(std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?
        .lines()
        .map(str::to_string)
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn eval(
    reference: &Path,
    hyp: &Path,
    surveillance: Option<&Path>,
    threshold: f64,
    designator_path: Option<&Path>,
    grammar: Option<&Path>,
    token_level: bool,
    format: ReportFormat,
    out: Option<&Path>,
) -> Result<()> {
    let refs = read_lines(reference)?
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| TaggedUtterance::parse(l).with_context(|| format!("{} line {}", reference.display(), i + 1)))
        .collect::<Result<Vec<_>>>()?;
    let hyps: Vec<String> = read_lines(hyp)?.into_iter().filter(|l| !l.trim().is_empty()).collect();
    if refs.len() != hyps.len() {
        bail!("{} reference lines but {} hypothesis lines", refs.len(), hyps.len());
    }
    let table = Arc::new(designators(designator_path)?);
    let grammar = Arc::new(match grammar {
        Some(p) => PhraseologyGrammar::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => PhraseologyGrammar::builtin(),
    });
    let parser = EntityParser::new(grammar, Arc::clone(&table));
    let resolver = match surveillance {
        Some(p) => {
            let snapshot = load_surveillance(p).with_context(|| format!("loading {}", p.display()))?.snapshot;
            Some(CallsignResolver::new(&snapshot, &table, EditCosts::<f64>::unit())?)
        }
        None => None,
    };
    let prediction = match &resolver {
        Some(resolver) => CallsignPrediction::Reranked { resolver, threshold },
        None => CallsignPrediction::Direct,
    };
    let mode = if token_level { MatchMode::Token } else { MatchMode::Strict };
    let report = evaluate_corpus(&refs, &hyps, &parser, prediction, mode)?;
    let text = match format {
        ReportFormat::Table => report.to_table(),
        ReportFormat::Kv => report.to_key_values(),
        ReportFormat::Json => serde_json::to_string_pretty(&report)? + "\n",
    };
    write_output(out, &text)
}

fn boostlist(surveillance: &Path, mode: BoostMode, designator_path: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let loaded = load_surveillance(surveillance).with_context(|| format!("loading {}", surveillance.display()))?;
    for w in &loaded.warnings {
        log::warn!("{w}");
    }
    let list = make_boost_list(&loaded.snapshot, &designators(designator_path)?, mode);
    write_output(out, &list.to_string())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run { config, log_dir, tts_out, logical_clock } => {
            run(&config, engine_options(log_dir, tts_out, logical_clock))
        }
        Command::Serve { config, port, host, log_dir, tts_out, logical_clock } => {
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(serve(config.as_deref(), &host, port, engine_options(log_dir, tts_out, logical_clock)))
        }
        Command::Eval { reference, hyp, surveillance, threshold, designators, grammar, token_level, format, out } => eval(
            &reference,
            &hyp,
            surveillance.as_deref(),
            threshold,
            designators.as_deref(),
            grammar.as_deref(),
            token_level,
            format,
            out.as_deref(),
        ),
        Command::Boostlist { surveillance, mode, designators, out } => {
            boostlist(&surveillance, mode, designators.as_deref(), out.as_deref())
        }
    }
}
