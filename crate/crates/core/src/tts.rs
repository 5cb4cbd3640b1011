//! Text-to-speech sink adapters. Synthesis happens outside the engine; a
//! sink receives one UTF-8 line per pilot response.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

pub const DEFAULT_SINK_TIMEOUT: Duration = Duration::from_secs(2);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SinkError {
    #[error("TTS sink did not acknowledge within {0:?}")]
    SinkTimeout(Duration),
    #[error("TTS sink unavailable: {0}")]
    SinkUnavailable(String),
}

pub trait TtsSink: Send + Sync {
    fn deliver(&self, line: &str) -> Result<(), SinkError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Acknowledgment {
    pub bytes: usize,
    pub elapsed: Duration,
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl TtsSink for NullSink {
    fn deliver(&self, _line: &str) -> Result<(), SinkError> {
        Ok(())
    }
}

/// Appends each response as a line to a text file.
#[derive(Debug)]
pub struct FileSink {
    path: PathBuf,
    file: Mutex<Option<File>>,
}

impl FileSink {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into(), file: Mutex::new(None) }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl TtsSink for FileSink {
    fn deliver(&self, line: &str) -> Result<(), SinkError> {
        let unavailable = |e: std::io::Error| SinkError::SinkUnavailable(format!("{}: {e}", self.path.display()));
        let mut guard = self.file.lock().unwrap_or_else(|e| e.into_inner());
        if guard.is_none() {
            *guard = Some(OpenOptions::new().create(true).append(true).open(&self.path).map_err(unavailable)?);
        }
        let file = guard.as_mut().expect("opened above");
        writeln!(file, "{line}").and_then(|_| file.flush()).map_err(unavailable)
    }
}

/// Keeps delivered lines in memory.
#[derive(Debug, Default)]
pub struct MemorySink {
    lines: Mutex<Vec<String>>,
}

impl MemorySink {
    pub fn lines(&self) -> Vec<String> {
        self.lines.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

impl TtsSink for MemorySink {
    fn deliver(&self, line: &str) -> Result<(), SinkError> {
        self.lines.lock().unwrap_or_else(|e| e.into_inner()).push(line.to_string());
        Ok(())
    }
}

/// Delivers `text` once, waiting at most `timeout` for the sink.
///
/// The sink runs on its own thread; a sink that overruns keeps running
/// detached and its late result is discarded.
pub fn send_to_tts(text: &str, sink: &Arc<dyn TtsSink>, timeout: Duration) -> Result<Acknowledgment, SinkError> {
    let (tx, rx) = mpsc::channel();
    let sink = Arc::clone(sink);
    let line = text.to_string();
    let started = Instant::now();
    thread::Builder::new()
        .name("tts-sink".into())
        .spawn(move || {
            let _ = tx.send(sink.deliver(&line));
        })
        .map_err(|e| SinkError::SinkUnavailable(e.to_string()))?;
    match rx.recv_timeout(timeout) {
        Ok(Ok(())) => Ok(Acknowledgment { bytes: text.len(), elapsed: started.elapsed() }),
        Ok(Err(e)) => Err(e),
        Err(mpsc::RecvTimeoutError::Timeout) => Err(SinkError::SinkTimeout(timeout)),
        Err(mpsc::RecvTimeoutError::Disconnected) => Err(SinkError::SinkUnavailable("sink thread panicked".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Slow;

    impl TtsSink for Slow {
        fn deliver(&self, _: &str) -> Result<(), SinkError> {
            thread::sleep(Duration::from_millis(500));
            Ok(())
        }
    }

    #[test]
    fn null_sink_acknowledges() {
        let sink: Arc<dyn TtsSink> = Arc::new(NullSink);
        let ack = send_to_tts("heading right", &sink, DEFAULT_SINK_TIMEOUT).unwrap();
        assert_eq!(ack.bytes, 13);
    }

    #[test]
    fn file_sink_appends_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tts.txt");
        let sink: Arc<dyn TtsSink> = Arc::new(FileSink::new(&path));
        send_to_tts("one", &sink, DEFAULT_SINK_TIMEOUT).unwrap();
        send_to_tts("two", &sink, DEFAULT_SINK_TIMEOUT).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "one\ntwo\n");
    }

    #[test]
    fn dead_sink_is_unavailable() {
        let sink: Arc<dyn TtsSink> = Arc::new(FileSink::new("/nonexistent-dir/tts.txt"));
        assert!(matches!(send_to_tts("x", &sink, DEFAULT_SINK_TIMEOUT), Err(SinkError::SinkUnavailable(_))));
    }

    #[test]
    fn slow_sink_times_out() {
        let sink: Arc<dyn TtsSink> = Arc::new(Slow);
        let started = Instant::now();
        let err = send_to_tts("x", &sink, Duration::from_millis(50)).unwrap_err();
        assert_eq!(err, SinkError::SinkTimeout(Duration::from_millis(50)));
        assert!(started.elapsed() < Duration::from_millis(400));
    }

    #[test]
    fn memory_sink_receives_exactly_once() {
        let mem = Arc::new(MemorySink::default());
        let sink: Arc<dyn TtsSink> = mem.clone();
        send_to_tts("hello", &sink, DEFAULT_SINK_TIMEOUT).unwrap();
        assert_eq!(mem.lines(), ["hello"]);
    }
}
