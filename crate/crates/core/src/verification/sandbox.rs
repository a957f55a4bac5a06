//! Sandbox wire protocol and supervisors.
//!
//! The runner is an external process reading one JSON request per line on
//! stdin and writing one JSON response per line on stdout. It announces
//! itself with `{"ready": true, "protocol": 1}`. The supervisor enforces the
//! deadline from outside: if no response arrives within
//! `timeout_ms + grace`, the runner is killed and a `timeout` response is
//! synthesized. The next request starts a fresh runner.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

pub const PROTOCOL_VERSION: u64 = 1;
/// Extra wall-clock the supervisor allows beyond the request deadline.
pub const SUPERVISOR_GRACE: Duration = Duration::from_secs(2);
pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SandboxError {
    #[error("sandbox unavailable: {0}")]
    SandboxUnavailable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SandboxMode {
    Check,
    Run,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandboxRequest {
    pub mode: SandboxMode,
    pub source: String,
    pub function_name: String,
    pub args: Map<String, Value>,
    pub timeout_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory_cap_mb: Option<u64>,
}

impl SandboxRequest {
    pub fn check(source: &str, function_name: &str, timeout_ms: u64) -> Self {
        Self {
            mode: SandboxMode::Check,
            source: source.to_string(),
            function_name: function_name.to_string(),
            args: Map::new(),
            timeout_ms,
            memory_cap_mb: None,
        }
    }

    pub fn run(
        source: &str,
        function_name: &str,
        args: Map<String, Value>,
        timeout_ms: u64,
    ) -> Self {
        Self {
            mode: SandboxMode::Run,
            source: source.to_string(),
            function_name: function_name.to_string(),
            args,
            timeout_ms,
            memory_cap_mb: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandboxResponse {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default)]
    pub stdout: String,
    #[serde(default)]
    pub duration_ms: u64,
}

impl SandboxResponse {
    pub fn success(result: Option<Value>) -> Self {
        Self {
            ok: true,
            result,
            error: None,
            stdout: String::new(),
            duration_ms: 0,
        }
    }

    pub fn failure(error: impl Into<String>) -> Self {
        Self {
            ok: false,
            result: None,
            error: Some(error.into()),
            stdout: String::new(),
            duration_ms: 0,
        }
    }

    /// Enforces `ok == false => error is non-empty`.
    fn normalized(mut self) -> Self {
        if !self.ok && self.error.as_deref().is_none_or(|e| e.trim().is_empty()) {
            self.error = Some("runner reported failure without an error message".into());
        }
        self
    }
}

pub trait Sandbox: Send + Sync {
    fn execute(&self, request: &SandboxRequest) -> Result<SandboxResponse, SandboxError>;
}

struct Worker {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Worker {
    fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Supervises an external runner process.
pub struct ProcessSandbox {
    program: String,
    args: Vec<String>,
    startup_timeout: Duration,
    grace: Duration,
    memory_cap_mb: Option<u64>,
    worker: Mutex<Option<Worker>>,
}

impl ProcessSandbox {
    /// `command` is the runner command line, split on whitespace.
    pub fn new(command: &str) -> Result<Self, SandboxError> {
        let mut parts = command.split_whitespace().map(str::to_string);
        let program = parts
            .next()
            .ok_or_else(|| SandboxError::SandboxUnavailable("empty runner command".into()))?;
        Ok(Self {
            program,
            args: parts.collect(),
            startup_timeout: Duration::from_secs(10),
            grace: SUPERVISOR_GRACE,
            memory_cap_mb: None,
            worker: Mutex::new(None),
        })
    }

    pub fn with_grace(mut self, grace: Duration) -> Self {
        self.grace = grace;
        self
    }

    pub fn with_startup_timeout(mut self, timeout: Duration) -> Self {
        self.startup_timeout = timeout;
        self
    }

    /// Caps the runner's address space (Unix only, best effort).
    pub fn with_memory_cap_mb(mut self, cap: u64) -> Self {
        self.memory_cap_mb = Some(cap);
        self
    }

    /// Starts the runner eagerly so bootstrap failures surface early.
    pub fn start(&self) -> Result<(), SandboxError> {
        let mut slot = self.worker.lock().expect("sandbox lock");
        if slot.is_none() {
            *slot = Some(self.spawn()?);
        }
        Ok(())
    }

    fn spawn(&self) -> Result<Worker, SandboxError> {
        let unavailable = |m: String| SandboxError::SandboxUnavailable(m);
        let mut command = Command::new(&self.program);
        command
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null());
        #[cfg(unix)]
        if let Some(cap) = self.memory_cap_mb {
            use std::os::unix::process::CommandExt;
            let bytes = cap.saturating_mul(1024 * 1024);
            // SAFETY: setrlimit is async-signal-safe and touches no parent state.
            unsafe {
                command.pre_exec(move || {
                    let limit = libc::rlimit {
                        rlim_cur: bytes as libc::rlim_t,
                        rlim_max: bytes as libc::rlim_t,
                    };
                    if libc::setrlimit(libc::RLIMIT_AS, &limit) != 0 {
                        return Err(std::io::Error::last_os_error());
                    }
                    Ok(())
                });
            }
        }
        let mut child = command
            .spawn()
            .map_err(|e| unavailable(format!("cannot start `{}`: {e}", self.program)))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let worker = Worker {
            child,
            stdin,
            lines: rx,
        };
        match worker.lines.recv_timeout(self.startup_timeout) {
            Ok(Ok(line)) => {
                let hello: Value = serde_json::from_str(&line).unwrap_or(Value::Null);
                let ready = hello.get("ready").and_then(Value::as_bool) == Some(true);
                let protocol = hello.get("protocol").and_then(Value::as_u64);
                if ready && protocol == Some(PROTOCOL_VERSION) {
                    Ok(worker)
                } else {
                    worker.kill();
                    Err(unavailable(format!("unexpected runner handshake: {line}")))
                }
            }
            Ok(Err(e)) => {
                worker.kill();
                Err(unavailable(format!("reading runner handshake: {e}")))
            }
            Err(_) => {
                worker.kill();
                Err(unavailable("runner did not announce readiness".into()))
            }
        }
    }
}

impl Sandbox for ProcessSandbox {
    fn execute(&self, request: &SandboxRequest) -> Result<SandboxResponse, SandboxError> {
        let mut slot = self.worker.lock().expect("sandbox lock");
        let mut request = request.clone();
        if request.memory_cap_mb.is_none() {
            request.memory_cap_mb = self.memory_cap_mb;
        }
        let mut line = serde_json::to_string(&request).expect("request serializes");
        line.push('\n');

        if slot.is_none() {
            *slot = Some(self.spawn()?);
        }
        let started = Instant::now();
        let written = {
            let w = slot.as_mut().expect("worker present");
            w.stdin
                .write_all(line.as_bytes())
                .and_then(|()| w.stdin.flush())
        };
        if written.is_err() {
            // The previous runner died between requests; retry once on a fresh one.
            if let Some(w) = slot.take() {
                w.kill();
            }
            let mut w = self.spawn()?;
            w.stdin
                .write_all(line.as_bytes())
                .and_then(|()| w.stdin.flush())
                .map_err(|e| SandboxError::SandboxUnavailable(format!("writing to runner: {e}")))?;
            *slot = Some(w);
        }

        let deadline = Duration::from_millis(request.timeout_ms) + self.grace;
        let outcome = slot
            .as_ref()
            .expect("worker present")
            .lines
            .recv_timeout(deadline);
        let elapsed = started.elapsed().as_millis() as u64;
        match outcome {
            Ok(Ok(reply)) => match serde_json::from_str::<SandboxResponse>(&reply) {
                Ok(resp) => Ok(resp.normalized()),
                Err(e) => {
                    if let Some(w) = slot.take() {
                        w.kill();
                    }
                    let mut resp =
                        SandboxResponse::failure(format!("invalid runner response: {e}"));
                    resp.duration_ms = elapsed;
                    Ok(resp)
                }
            },
            Err(RecvTimeoutError::Timeout) => {
                if let Some(w) = slot.take() {
                    w.kill();
                }
                tracing::warn!(elapsed_ms = elapsed, "runner exceeded deadline; killed");
                let mut resp = SandboxResponse::failure("timeout");
                resp.duration_ms = elapsed;
                Ok(resp)
            }
            Ok(Err(_)) | Err(RecvTimeoutError::Disconnected) => {
                if let Some(w) = slot.take() {
                    w.kill();
                }
                let mut resp = SandboxResponse::failure("runner exited before responding");
                resp.duration_ms = elapsed;
                Ok(resp)
            }
        }
    }
}

impl Drop for ProcessSandbox {
    fn drop(&mut self) {
        if let Ok(mut slot) = self.worker.lock() {
            if let Some(w) = slot.take() {
                w.kill();
            }
        }
    }
}

/// Numbers compare by value so `20000` matches `20000.0`.
pub fn json_equivalent(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.as_f64() == y.as_f64(),
        (Value::Array(x), Value::Array(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| json_equivalent(p, q))
        }
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len()
                && x.iter()
                    .all(|(k, v)| y.get(k).is_some_and(|w| json_equivalent(v, w)))
        }
        _ => a == b,
    }
}

/// A canned-response rule. Unset fields match anything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CannedRule {
    pub mode: SandboxMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub args: Option<Map<String, Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_contains: Option<String>,
    pub response: SandboxResponse,
}

impl CannedRule {
    fn matches(&self, req: &SandboxRequest) -> bool {
        self.mode == req.mode
            && self
                .function_name
                .as_ref()
                .is_none_or(|f| *f == req.function_name)
            && self.args.as_ref().is_none_or(|a| {
                json_equivalent(&Value::Object(a.clone()), &Value::Object(req.args.clone()))
            })
            && self
                .source_contains
                .as_ref()
                .is_none_or(|s| req.source.contains(s.as_str()))
    }
}

/// Serves canned responses; stands in for the real runner in tests and
/// offline runs. The first matching rule wins. Unmatched `check` requests
/// succeed; unmatched `run` requests fail.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CannedSandbox {
    pub rules: Vec<CannedRule>,
}

impl CannedSandbox {
    pub fn new(rules: Vec<CannedRule>) -> Self {
        Self { rules }
    }

    pub fn from_path(path: &Path) -> Result<Self, SandboxError> {
        let bytes = std::fs::read(path).map_err(|e| {
            SandboxError::SandboxUnavailable(format!("cannot read {}: {e}", path.display()))
        })?;
        serde_json::from_slice(&bytes).map_err(|e| {
            SandboxError::SandboxUnavailable(format!("invalid canned sandbox file: {e}"))
        })
    }

    pub fn push(&mut self, rule: CannedRule) {
        self.rules.push(rule);
    }

    /// Adds a `run` rule returning `result` for `function_name(args)`.
    pub fn on_run(&mut self, function_name: &str, args: Map<String, Value>, result: Value) {
        self.push(CannedRule {
            mode: SandboxMode::Run,
            function_name: Some(function_name.into()),
            args: Some(args),
            source_contains: None,
            response: SandboxResponse::success(Some(result)),
        });
    }
}

impl Sandbox for CannedSandbox {
    fn execute(&self, request: &SandboxRequest) -> Result<SandboxResponse, SandboxError> {
        if let Some(rule) = self.rules.iter().find(|r| r.matches(request)) {
            return Ok(rule.response.clone().normalized());
        }
        Ok(match request.mode {
            SandboxMode::Check => SandboxResponse::success(None),
            SandboxMode::Run => SandboxResponse::failure(format!(
                "no canned response for {}({})",
                request.function_name,
                Value::Object(request.args.clone())
            )),
        })
    }
}

/// Sandbox backed by a closure.
pub struct FnSandbox<F>(pub F);

impl<F> Sandbox for FnSandbox<F>
where
    F: Fn(&SandboxRequest) -> Result<SandboxResponse, SandboxError> + Send + Sync,
{
    fn execute(&self, request: &SandboxRequest) -> Result<SandboxResponse, SandboxError> {
        (self.0)(request).map(SandboxResponse::normalized)
    }
}
