//! Objectives served by a child process over line-delimited JSON.
//!
//! The harness launches `sh -c <command>` and, for every evaluation, writes
//! one request line to the child's stdin and reads one response line from
//! its stdout:
//!
//! ```text
//! > {"run_id":"svc__default-T15__r003","index":1,"config":{"C":1.0,"gamma":0.01}}
//! < {"index":1,"value":0.8125}
//! ```
//!
//! `index` counts evaluations from 1 within one process and must be echoed
//! back. `value` is a JSON number; the strings `"nan"`, `"inf"` and `"-inf"`
//! are accepted and reported as non-finite evaluation failures. Values are
//! mapped onto the larger-is-better scale according to the declared
//! orientation, so a process reporting RMSE declares `minimize`.

use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{Evaluator, Orientation};
use crate::error::{EvalError, Error, Result};
use crate::space::Configuration;

fn default_timeout() -> f64 {
    300.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalSpec {
    /// Shell command launching the evaluator.
    pub command: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default)]
    pub orientation: Orientation,
    /// Working directory of the process; the caller's when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workdir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub run_id: String,
    pub index: usize,
    pub config: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub index: usize,
    pub value: Value,
}

impl Response {
    /// The numeric value, accepting the textual spellings of non-finite values.
    pub fn number(&self) -> Option<f64> {
        match &self.value {
            Value::Number(n) => n.as_f64(),
            Value::String(s) => match s.to_ascii_lowercase().as_str() {
                "nan" => Some(f64::NAN),
                "inf" | "+inf" | "infinity" => Some(f64::INFINITY),
                "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
                _ => None,
            },
            _ => None,
        }
    }
}

pub struct ExternalEvaluator {
    spec: ExternalSpec,
    names: Vec<String>,
    run_id: String,
    index: usize,
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    dead: bool,
}

impl ExternalEvaluator {
    /// Launches the evaluator process for configurations with the given
    /// parameter names.
    pub fn spawn(spec: ExternalSpec, names: Vec<String>, run_id: impl Into<String>) -> Result<Self> {
        if !(spec.timeout_secs > 0.0 && spec.timeout_secs.is_finite()) {
            return Err(Error::Config(format!(
                "evaluator timeout must be positive, got {}",
                spec.timeout_secs
            )));
        }
        let mut cmd = Command::new("sh");
        cmd.arg("-c").arg(&spec.command);
        if let Some(dir) = &spec.workdir {
            cmd.current_dir(dir);
        }
        let mut child = cmd
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::io(format!("launching `{}`", spec.command), e))?;
        let stdout = child.stdout.take().expect("stdout is piped");
        let stdin = child.stdin.take();
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        Ok(Self {
            spec,
            names,
            run_id: run_id.into(),
            index: 0,
            child,
            stdin,
            lines,
            dead: false,
        })
    }

    pub fn set_run_id(&mut self, run_id: impl Into<String>) {
        self.run_id = run_id.into();
    }

    fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.spec.timeout_secs)
    }

    fn shut_down(&mut self) {
        self.dead = true;
        self.stdin = None;
        let _ = self.child.kill();
        let _ = self.child.wait();
    }

    fn request_line(&self, x: &Configuration) -> std::result::Result<String, EvalError> {
        if x.len() != self.names.len() {
            return Err(EvalError::Process(format!(
                "configuration has {} values for {} parameters",
                x.len(),
                self.names.len()
            )));
        }
        let request = Request {
            run_id: self.run_id.clone(),
            index: self.index,
            config: self
                .names
                .iter()
                .cloned()
                .zip(x.values().iter().map(|&v| Value::from(v)))
                .collect(),
        };
        serde_json::to_string(&request).map_err(|e| EvalError::Process(e.to_string()))
    }

    fn exchange(&mut self, x: &Configuration) -> std::result::Result<f64, EvalError> {
        if self.dead {
            return Err(EvalError::Process("evaluator process is no longer running".into()));
        }
        self.index += 1;
        let line = self.request_line(x)?;
        let stdin = self.stdin.as_mut().expect("stdin open while alive");
        writeln!(stdin, "{line}")
            .and_then(|_| stdin.flush())
            .map_err(|e| EvalError::Process(format!("writing request: {e}")))?;

        let reply = match self.lines.recv_timeout(self.timeout()) {
            Ok(Ok(reply)) => reply,
            Ok(Err(e)) => return Err(EvalError::Process(format!("reading response: {e}"))),
            Err(RecvTimeoutError::Timeout) => return Err(EvalError::Timeout(self.timeout())),
            Err(RecvTimeoutError::Disconnected) => {
                return Err(EvalError::Process("evaluator closed its output".into()))
            }
        };
        let malformed = |reason: String| EvalError::Malformed {
            line: reply.clone(),
            reason,
        };
        let response: Response =
            serde_json::from_str(&reply).map_err(|e| malformed(e.to_string()))?;
        if response.index != self.index {
            return Err(malformed(format!(
                "expected index {}, got {}",
                self.index, response.index
            )));
        }
        let raw = response
            .number()
            .ok_or_else(|| malformed("value is not a number".into()))?;
        if !raw.is_finite() {
            return Err(EvalError::NonFinite(raw));
        }
        Ok(self.spec.orientation.normalize(raw))
    }
}

impl Evaluator for ExternalEvaluator {
    /// Any failure leaves the process unusable; it is killed and later calls fail.
    fn evaluate(&mut self, x: &Configuration) -> std::result::Result<f64, EvalError> {
        let out = self.exchange(x);
        if out.is_err() {
            self.shut_down();
        }
        out
    }
}

impl Drop for ExternalEvaluator {
    fn drop(&mut self) {
        if !self.dead {
            self.stdin = None;
            // give a well-behaved evaluator a moment to exit on EOF
            for _ in 0..20 {
                if matches!(self.child.try_wait(), Ok(Some(_))) {
                    return;
                }
                thread::sleep(Duration::from_millis(5));
            }
            self.shut_down();
        }
    }
}
