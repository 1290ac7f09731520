//! The python3 worker process and its JSON-lines pipe.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::{Duration, Instant};

use serde_json::Value;

pub const PRELUDE: &str = include_str!("prelude.py");

#[derive(Debug, thiserror::Error)]
pub enum WorkerError {
    #[error("cannot start {python}: {source}")]
    Spawn { python: String, source: std::io::Error },
    #[error("worker did not answer in time")]
    Timeout,
    #[error("worker exited")]
    Closed,
    #[error("worker sent malformed message: {0}")]
    Malformed(String),
    #[error("worker pipe: {0}")]
    Io(#[from] std::io::Error),
}

pub struct Worker {
    child: Child,
    stdin: Option<ChildStdin>,
    rx: Receiver<String>,
    _dir: tempfile::TempDir,
}

impl Worker {
    /// Starts a fresh interpreter in an empty temporary working directory.
    pub fn spawn(python: &Path) -> Result<Worker, WorkerError> {
        let spawn_err = |e| WorkerError::Spawn { python: python.display().to_string(), source: e };
        let dir = tempfile::tempdir().map_err(spawn_err)?;
        let stderr = if std::env::var_os("PARTEXEC_WORKER_STDERR").is_some() { Stdio::inherit() } else { Stdio::null() };
        let mut child = Command::new(python)
            .arg("-c")
            .arg(PRELUDE)
            .current_dir(dir.path())
            .env("PYTHONHASHSEED", "0")
            .env("PYTHONDONTWRITEBYTECODE", "1")
            .env("PYTHONUNBUFFERED", "1")
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(stderr)
            .spawn()
            .map_err(spawn_err)?;
        let stdout = child.stdout.take().expect("piped stdout");
        let stdin = child.stdin.take();
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                match line {
                    Ok(l) => {
                        if tx.send(l).is_err() {
                            break;
                        }
                    }
                    Err(_) => break,
                }
            }
        });
        let mut w = Worker { child, stdin, rx, _dir: dir };
        let hello = w.recv(Some(Instant::now() + Duration::from_secs(60)))?;
        if hello["type"] != "ready" {
            return Err(WorkerError::Malformed(hello.to_string()));
        }
        Ok(w)
    }

    pub fn send(&mut self, msg: &Value) -> Result<(), WorkerError> {
        let stdin = self.stdin.as_mut().ok_or(WorkerError::Closed)?;
        let mut line = serde_json::to_string(msg).expect("message serialises");
        line.push('\n');
        stdin.write_all(line.as_bytes()).and_then(|_| stdin.flush()).map_err(|_| WorkerError::Closed)
    }

    pub fn recv(&mut self, deadline: Option<Instant>) -> Result<Value, WorkerError> {
        let line = match deadline {
            None => self.rx.recv().map_err(|_| WorkerError::Closed)?,
            Some(d) => {
                let wait = d.saturating_duration_since(Instant::now());
                match self.rx.recv_timeout(wait) {
                    Ok(l) => l,
                    Err(RecvTimeoutError::Timeout) => return Err(WorkerError::Timeout),
                    Err(RecvTimeoutError::Disconnected) => return Err(WorkerError::Closed),
                }
            }
        };
        serde_json::from_str(&line).map_err(|_| WorkerError::Malformed(line))
    }

    pub fn kill(&mut self) {
        self.stdin = None;
        let _ = self.child.kill();
        let _ = self.child.wait();
    }

    pub fn exit_status(&mut self) -> Option<i32> {
        self.child.try_wait().ok().flatten().and_then(|s| s.code())
    }
}

impl Drop for Worker {
    fn drop(&mut self) {
        if let Some(mut stdin) = self.stdin.take() {
            let _ = stdin.write_all(b"{\"type\": \"bye\"}\n");
        }
        let deadline = Instant::now() + Duration::from_millis(200);
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            std::thread::sleep(Duration::from_millis(5));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
