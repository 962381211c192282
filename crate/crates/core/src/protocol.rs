//! Client side of the line-delimited JSON forecaster protocol.
//!
//! The harness writes one JSON object per line to the adapter's stdin and
//! reads one JSON object per line from its stdout. A session handles one
//! request at a time. Messages:
//!
//! ```text
//! → {"op":"hello","protocol_version":1}
//! ← {"protocol_version":1,"name":"...","supports_covariates":false,"hyper_grid":{"L":[1,4,7]}}
//! → {"op":"forecast","protocol_version":1,"task_id":"...","horizon":h,
//!    "context":[[..l..]×n],"covariates_past":[[..l..]×m],"covariates_future":[[..h..]×m],
//!    "params":{"L":4}}
//! ← {"values":[[..h..]×n]}   or   {"error":{"code":"...","message":"..."}}
//! ```

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::forecasters::ParamValue;
use crate::task::{ForecastMatrix, Matrix};

pub const PROTOCOL_VERSION: u32 = 1;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);
const STDERR_LIMIT: usize = 64 * 1024;

/// How to launch an external forecaster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterCommand {
    pub command: String,
    #[serde(default)]
    pub args: Vec<String>,
    /// Per-request timeout in seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout_secs: Option<f64>,
}

impl AdapterCommand {
    pub fn new(command: impl Into<String>, args: impl IntoIterator<Item = impl Into<String>>) -> Self {
        AdapterCommand {
            command: command.into(),
            args: args.into_iter().map(Into::into).collect(),
            timeout_secs: None,
        }
    }

    pub fn timeout(&self) -> Duration {
        self.timeout_secs
            .filter(|s| s.is_finite() && *s > 0.0)
            .map_or(DEFAULT_TIMEOUT, Duration::from_secs_f64)
    }

    /// Command line rendered for logs.
    pub fn display(&self) -> String {
        std::iter::once(self.command.as_str())
            .chain(self.args.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRequest {
    pub op: String,
    pub protocol_version: u32,
    pub task_id: String,
    pub horizon: usize,
    pub context: Vec<Vec<f64>>,
    pub covariates_past: Vec<Vec<f64>>,
    pub covariates_future: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<BTreeMap<String, ParamValue>>,
}

impl ForecastRequest {
    pub fn new(task_id: impl Into<String>, context: &Matrix<f64>, horizon: usize) -> Self {
        ForecastRequest {
            op: "forecast".into(),
            protocol_version: PROTOCOL_VERSION,
            task_id: task_id.into(),
            horizon,
            context: context.to_rows(),
            covariates_past: Vec::new(),
            covariates_future: Vec::new(),
            params: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::Schema("horizon: must be at least 1".into()));
        }
        let rectangular = |rows: &[Vec<f64>], width: Option<usize>| {
            let w = width.or_else(|| rows.first().map(Vec::len));
            rows.iter().all(|r| Some(r.len()) == w)
        };
        if self.context.is_empty() || !rectangular(&self.context, None) {
            return Err(Error::Schema("context: must be a non-empty rectangular array".into()));
        }
        let l = self.context[0].len();
        if !rectangular(&self.covariates_past, Some(l)) {
            return Err(Error::Schema("covariates_past: rows must have context length".into()));
        }
        if !rectangular(&self.covariates_future, Some(self.horizon)) {
            return Err(Error::Schema("covariates_future: rows must have horizon length".into()));
        }
        Ok(())
    }
}

/// Adapter answer: exactly one of values or error.
#[derive(Debug, Clone, PartialEq)]
pub enum ForecastResponse {
    Values(Vec<Vec<f64>>),
    Error { code: String, message: String },
}

impl ForecastResponse {
    pub fn parse(line: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(line.trim())
            .map_err(|e| Error::MalformedResponse(format!("invalid JSON: {e}")))?;
        let obj = v
            .as_object()
            .ok_or_else(|| Error::MalformedResponse("response is not an object".into()))?;
        match (obj.get("values"), obj.get("error")) {
            (Some(values), None) => serde_json::from_value(values.clone())
                .map(ForecastResponse::Values)
                .map_err(|e| Error::MalformedResponse(format!("values: {e}"))),
            (None, Some(err)) => {
                let field = |k: &str| err.get(k).and_then(Value::as_str).unwrap_or_default().to_string();
                Ok(ForecastResponse::Error {
                    code: field("code"),
                    message: field("message"),
                })
            }
            (Some(_), Some(_)) => Err(Error::MalformedResponse("both values and error present".into())),
            (None, None) => Err(Error::MalformedResponse("neither values nor error present".into())),
        }
    }

    /// Converts to a forecast of shape `(n_targets, horizon)`.
    pub fn into_forecast(self, n_targets: usize, horizon: usize) -> Result<ForecastMatrix<f64>> {
        match self {
            ForecastResponse::Error { code, message } => Err(Error::AdapterReported { code, message }),
            ForecastResponse::Values(rows) => {
                let found = (rows.len(), rows.first().map_or(0, Vec::len));
                if rows.len() != n_targets || rows.iter().any(|r| r.len() != horizon) {
                    return Err(Error::ShapeMismatch {
                        expected: (n_targets, horizon),
                        found,
                    });
                }
                let values = if rows.is_empty() {
                    Matrix::empty(horizon)
                } else {
                    Matrix::from_rows(&rows)?
                };
                ForecastMatrix::for_task(values, n_targets, horizon)
            }
        }
    }
}

/// What an adapter declares in its handshake.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Capabilities {
    pub name: String,
    #[serde(default)]
    pub supports_covariates: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyper_grid: Option<BTreeMap<String, Vec<ParamValue>>>,
}

impl Capabilities {
    fn parse(line: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(line.trim())
            .map_err(|e| Error::MalformedResponse(format!("invalid JSON: {e}")))?;
        if v.get("protocol_version").and_then(Value::as_u64) != Some(u64::from(PROTOCOL_VERSION)) {
            return Err(Error::MalformedResponse("version".into()));
        }
        serde_json::from_value(v).map_err(|e| Error::MalformedResponse(format!("capabilities: {e}")))
    }

    /// Cartesian product of the declared grid, ordered by parameter name then
    /// value. Empty when no grid is declared.
    pub fn expand_grid(&self) -> Vec<BTreeMap<String, ParamValue>> {
        let Some(grid) = &self.hyper_grid else {
            return Vec::new();
        };
        let mut out = vec![BTreeMap::new()];
        for (name, values) in grid {
            let mut sorted = values.clone();
            sorted.sort_by(ParamValue::total_cmp);
            sorted.dedup_by(|a, b| a.total_cmp(b).is_eq());
            out = out
                .into_iter()
                .flat_map(|base| {
                    sorted.iter().map(move |v| {
                        let mut m = base.clone();
                        m.insert(name.clone(), *v);
                        m
                    })
                })
                .collect();
        }
        out
    }
}

/// A running adapter process.
pub struct AdapterProcess {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<String>,
    stderr: Arc<Mutex<String>>,
    timeout: Duration,
}

impl AdapterProcess {
    pub fn spawn(cmd: &AdapterCommand) -> Result<Self> {
        let mut child = Command::new(&cmd.command)
            .args(&cmd.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::AdapterCrash {
                code: None,
                stderr: format!("failed to spawn '{}': {e}", cmd.display()),
            })?;
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let stderr = Arc::new(Mutex::new(String::new()));
        let mut err_pipe = child.stderr.take().expect("piped stderr");
        let sink = Arc::clone(&stderr);
        thread::spawn(move || {
            let mut buf = [0u8; 4096];
            while let Ok(n) = err_pipe.read(&mut buf) {
                if n == 0 {
                    break;
                }
                let mut s = sink.lock().expect("stderr lock");
                if s.len() < STDERR_LIMIT {
                    s.push_str(&String::from_utf8_lossy(&buf[..n]));
                }
            }
        });
        Ok(AdapterProcess {
            stdin: child.stdin.take(),
            child,
            lines,
            stderr,
            timeout: cmd.timeout(),
        })
    }

    fn crash(&mut self) -> Error {
        let code = match self.child.try_wait() {
            Ok(Some(status)) => status.code(),
            _ => {
                // stdout closed but the process lingers
                let _ = self.child.kill();
                self.child.wait().ok().and_then(|s| s.code())
            }
        };
        // let the stderr reader drain
        thread::sleep(Duration::from_millis(20));
        let stderr = self.stderr.lock().map(|s| s.trim().to_string()).unwrap_or_default();
        Error::AdapterCrash { code, stderr }
    }

    /// Sends one line and waits for one line back.
    pub fn round_trip(&mut self, message: &str) -> Result<String> {
        let Some(stdin) = self.stdin.as_mut() else {
            return Err(self.crash());
        };
        let written = stdin
            .write_all(message.as_bytes())
            .and_then(|()| stdin.write_all(b"\n"))
            .and_then(|()| stdin.flush());
        if written.is_err() {
            return Err(self.crash());
        }
        match self.lines.recv_timeout(self.timeout) {
            Ok(line) => Ok(line),
            Err(RecvTimeoutError::Timeout) => {
                let _ = self.child.kill();
                let _ = self.child.wait();
                Err(Error::AdapterTimeout {
                    seconds: self.timeout.as_secs_f64(),
                })
            }
            Err(RecvTimeoutError::Disconnected) => Err(self.crash()),
        }
    }

    pub fn hello(&mut self) -> Result<Capabilities> {
        let msg = serde_json::json!({"op": "hello", "protocol_version": PROTOCOL_VERSION});
        let line = self.round_trip(&msg.to_string())?;
        Capabilities::parse(&line)
    }

    pub fn forecast(&mut self, request: &ForecastRequest) -> Result<ForecastMatrix<f64>> {
        request.validate()?;
        let line = self.round_trip(&serde_json::to_string(request)?)?;
        ForecastResponse::parse(&line)?.into_forecast(request.context.len(), request.horizon)
    }

    pub fn is_alive(&mut self) -> bool {
        matches!(self.child.try_wait(), Ok(None))
    }
}

impl Drop for AdapterProcess {
    fn drop(&mut self) {
        drop(self.stdin.take());
        if self.child.try_wait().ok().flatten().is_none() {
            let _ = self.child.kill();
        }
        let _ = self.child.wait();
    }
}

/// Spawns the adapter and returns its declared capabilities.
pub fn handshake(cmd: &AdapterCommand) -> Result<Capabilities> {
    AdapterProcess::spawn(cmd)?.hello()
}

/// One request against a fresh adapter process, without a handshake.
pub fn call_adapter(cmd: &AdapterCommand, request: &ForecastRequest) -> Result<ForecastMatrix<f64>> {
    AdapterProcess::spawn(cmd)?.forecast(request)
}

/// Adapter process bound to one benchmark cell. Restarts the process at most
/// once after a crash or timeout.
pub struct AdapterSession {
    cmd: AdapterCommand,
    process: Option<AdapterProcess>,
    pub capabilities: Capabilities,
    restarts_left: u8,
}

impl AdapterSession {
    pub fn start(cmd: &AdapterCommand) -> Result<Self> {
        let mut process = AdapterProcess::spawn(cmd)?;
        let capabilities = process.hello()?;
        Ok(AdapterSession {
            cmd: cmd.clone(),
            process: Some(process),
            capabilities,
            restarts_left: 1,
        })
    }

    /// Forecasts with covariates routed only when the adapter declared
    /// support for them.
    pub fn forecast(&mut self, mut request: ForecastRequest) -> Result<ForecastMatrix<f64>> {
        if !self.capabilities.supports_covariates {
            request.covariates_past.clear();
            request.covariates_future.clear();
        }
        if self.process.as_mut().is_none_or(|p| !p.is_alive()) {
            self.restart()?;
        }
        let process = self.process.as_mut().expect("running");
        let result = process.forecast(&request);
        if matches!(result, Err(Error::AdapterCrash { .. } | Error::AdapterTimeout { .. })) {
            self.process = None;
        }
        result
    }

    fn restart(&mut self) -> Result<()> {
        if self.restarts_left == 0 {
            return Err(Error::AdapterCrash {
                code: None,
                stderr: "adapter already restarted once".into(),
            });
        }
        self.restarts_left -= 1;
        let mut process = AdapterProcess::spawn(&self.cmd)?;
        process.hello()?;
        self.process = Some(process);
        Ok(())
    }
}
