use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use crate::formula::sexp::{self, Sexp};

use super::SolverError;

/// One solver subprocess speaking SMT-LIB 2 over pipes.
pub struct SmtProcess {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
    marker: u64,
}

impl SmtProcess {
    pub fn spawn(command: &str) -> Result<Self, SolverError> {
        let mut parts = command.split_whitespace();
        let prog = parts
            .next()
            .ok_or_else(|| SolverError::Spawn("empty solver command".into()))?;
        let mut child = Command::new(prog)
            .args(parts)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| SolverError::Spawn(format!("{command}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(SmtProcess {
            child,
            stdin,
            lines: rx,
            marker: 0,
        })
    }

    /// Sends `script`, then reads every response up to a synchronization marker.
    pub fn run(
        &mut self,
        script: &str,
        deadline: Instant,
        transcript: Option<&mut File>,
    ) -> Result<Vec<Sexp>, SolverError> {
        self.marker += 1;
        let marker = format!("imcv-sync-{}", self.marker);
        let mut transcript = transcript;
        if let Some(t) = transcript.as_deref_mut() {
            let _ = writeln!(t, "{script}");
        }
        let payload = format!("{script}\n(echo \"{marker}\")\n");
        self.stdin
            .write_all(payload.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| SolverError::Crash(format!("write failed: {e}")))?;
        let mut text = String::new();
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                return Err(SolverError::Timeout);
            }
            match self.lines.recv_timeout(left) {
                Ok(line) => {
                    if let Some(t) = transcript.as_deref_mut() {
                        let _ = writeln!(t, "; {line}");
                    }
                    let trimmed = line.trim();
                    if trimmed == marker || trimmed == format!("\"{marker}\"") {
                        break;
                    }
                    text.push_str(&line);
                    text.push('\n');
                }
                Err(RecvTimeoutError::Timeout) => return Err(SolverError::Timeout),
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(SolverError::Crash(format!(
                        "solver exited unexpectedly; partial output: {}",
                        text.trim()
                    )))
                }
            }
        }
        let out = sexp::parse_all(&text)
            .map_err(|e| SolverError::Crash(format!("unreadable response: {e}: {}", text.trim())))?;
        if let Some(e) = out.iter().find(|s| {
            s.list()
                .and_then(|l| l.first())
                .is_some_and(|h| h.is_atom("error"))
        }) {
            return Err(SolverError::Rejected(e.to_string()));
        }
        Ok(out)
    }

    pub fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for SmtProcess {
    fn drop(&mut self) {
        let _ = self.stdin.write_all(b"(exit)\n");
        let _ = self.stdin.flush();
        let start = Instant::now();
        while start.elapsed() < Duration::from_millis(50) {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(2));
        }
        self.kill();
    }
}

pub fn open_transcript(path: &Path) -> Option<File> {
    File::create(path).ok()
}
