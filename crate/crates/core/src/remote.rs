//! Client for games served over line-delimited JSON.
//!
//! The server speaks first with a handshake line
//! `{"n_image": int, "n_text": int, "max_batch": int, ...}`; extra fields
//! are kept but not interpreted. Each request is
//! `{"id": int, "masks": ["0101…", …]}` (character `i` is player `i`) and is
//! answered by `{"id": int, "values": [float, …]}` in request order, or
//! `{"id": int, "error": str}`.
//!
//! Batches larger than the advertised `max_batch` are split. A batch whose
//! transport fails is resent on a fresh connection (requests are
//! idempotent); malformed answers are not retried.

use std::io::{BufRead, BufReader, Write};
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::game::{check_masks, GameOracle};
use crate::rng;
use crate::space::{Mask, PlayerSpace};

/// Where the oracle lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    /// `tcp://host:port`
    Tcp(String),
    /// `cmd:program arg …` — a child process speaking on stdin/stdout.
    Command { program: String, args: Vec<String> },
}

impl Endpoint {
    pub fn parse(text: &str) -> Result<Self> {
        if let Some(addr) = text.strip_prefix("tcp://") {
            if addr.is_empty() {
                return Err(Error::InvalidArgument("empty tcp address".into()));
            }
            return Ok(Endpoint::Tcp(addr.to_string()));
        }
        if let Some(cmd) = text.strip_prefix("cmd:") {
            let mut parts = cmd.split_whitespace().map(String::from);
            let program = parts
                .next()
                .ok_or_else(|| Error::InvalidArgument("empty command endpoint".into()))?;
            return Ok(Endpoint::Command {
                program,
                args: parts.collect(),
            });
        }
        Err(Error::InvalidArgument(format!(
            "endpoint {text:?} must start with tcp:// or cmd:"
        )))
    }
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Endpoint::Tcp(addr) => write!(f, "tcp://{addr}"),
            Endpoint::Command { program, args } => {
                write!(f, "cmd:{program}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub endpoint: Endpoint,
    /// Wait for the handshake and for each response.
    pub timeout: Duration,
    /// Extra attempts per batch after a transport failure.
    pub retries: usize,
    /// Reject servers advertising a different space.
    pub expected_space: Option<PlayerSpace>,
    /// Further cap on the batch size, below the advertised one.
    pub max_batch: Option<usize>,
}

impl RemoteConfig {
    pub fn new(endpoint: Endpoint) -> Self {
        Self {
            endpoint,
            timeout: Duration::from_secs(60),
            retries: 2,
            expected_space: None,
            max_batch: None,
        }
    }
}

/// First line sent by the server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Handshake {
    pub n_image: usize,
    pub n_text: usize,
    pub max_batch: usize,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

#[derive(Serialize)]
struct Request<'a> {
    id: u64,
    masks: &'a [String],
}

#[derive(Deserialize)]
struct Response {
    id: u64,
    #[serde(default)]
    values: Option<Vec<f64>>,
    #[serde(default)]
    error: Option<String>,
}

enum LineError {
    Timeout,
    Closed(String),
}

struct Connection {
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    tcp: Option<TcpStream>,
    child: Option<Child>,
}

impl Connection {
    fn open(endpoint: &Endpoint, timeout: Duration) -> std::io::Result<Self> {
        let (tx, rx) = mpsc::channel();
        let pump = |reader: Box<dyn BufRead + Send>| {
            thread::spawn(move || {
                for line in reader.lines() {
                    if tx.send(line).is_err() {
                        break;
                    }
                }
            });
        };
        match endpoint {
            Endpoint::Tcp(addr) => {
                let mut last = None;
                let mut stream = None;
                for sock in addr.to_socket_addrs()? {
                    match TcpStream::connect_timeout(&sock, timeout) {
                        Ok(s) => {
                            stream = Some(s);
                            break;
                        }
                        Err(e) => last = Some(e),
                    }
                }
                let stream = stream.ok_or_else(|| {
                    last.unwrap_or_else(|| std::io::Error::new(std::io::ErrorKind::NotFound, "address did not resolve"))
                })?;
                stream.set_nodelay(true)?;
                pump(Box::new(BufReader::new(stream.try_clone()?)));
                Ok(Self {
                    writer: Box::new(stream.try_clone()?),
                    lines: rx,
                    tcp: Some(stream),
                    child: None,
                })
            }
            Endpoint::Command { program, args } => {
                let mut child = Command::new(program)
                    .args(args)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()?;
                let stdout = child.stdout.take().expect("piped stdout");
                let stdin = child.stdin.take().expect("piped stdin");
                pump(Box::new(BufReader::new(stdout)));
                Ok(Self {
                    writer: Box::new(stdin),
                    lines: rx,
                    tcp: None,
                    child: Some(child),
                })
            }
        }
    }

    fn read_line(&self, timeout: Duration) -> std::result::Result<String, LineError> {
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(LineError::Closed(e.to_string())),
            Err(RecvTimeoutError::Timeout) => Err(LineError::Timeout),
            Err(RecvTimeoutError::Disconnected) => Err(LineError::Closed("connection closed by oracle".into())),
        }
    }

    fn send(&mut self, line: &str) -> std::io::Result<()> {
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()
    }
}

impl Drop for Connection {
    fn drop(&mut self) {
        if let Some(s) = &self.tcp {
            let _ = s.shutdown(Shutdown::Both);
        }
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

fn read_handshake(conn: &Connection, timeout: Duration) -> Result<Handshake> {
    let line = match conn.read_line(timeout) {
        Ok(line) => line,
        Err(LineError::Timeout) => {
            return Err(Error::Timeout {
                batch: 0,
                millis: timeout.as_millis() as u64,
            })
        }
        Err(LineError::Closed(msg)) => return Err(Error::HandshakeMismatch(format!("no handshake: {msg}"))),
    };
    let hs: Handshake =
        serde_json::from_str(&line).map_err(|e| Error::HandshakeMismatch(format!("unreadable handshake: {e}")))?;
    if hs.n_image == 0 || hs.n_text == 0 || hs.max_batch == 0 {
        return Err(Error::HandshakeMismatch(format!(
            "handshake advertises n_image={}, n_text={}, max_batch={}",
            hs.n_image, hs.n_text, hs.max_batch
        )));
    }
    Ok(hs)
}

/// A remote game. Transport is serialized internally; the handle can be
/// shared across threads.
pub struct RemoteOracle {
    config: RemoteConfig,
    handshake: Handshake,
    space: PlayerSpace,
    batch_size: usize,
    state: Mutex<State>,
}

struct State {
    conn: Option<Connection>,
    next_id: u64,
}

impl std::fmt::Debug for RemoteOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteOracle")
            .field("endpoint", &self.config.endpoint)
            .field("space", &self.space)
            .field("batch_size", &self.batch_size)
            .finish()
    }
}

impl RemoteOracle {
    pub fn connect(config: RemoteConfig) -> Result<Self> {
        let conn = Connection::open(&config.endpoint, config.timeout).map_err(|e| Error::Transport {
            batch: 0,
            message: format!("cannot reach {}: {e}", config.endpoint),
        })?;
        let handshake = read_handshake(&conn, config.timeout)?;
        let space = PlayerSpace::new(handshake.n_image, handshake.n_text)?;
        if let Some(expected) = config.expected_space {
            if expected != space {
                return Err(Error::HandshakeMismatch(format!(
                    "expected {}+{} players, oracle advertises {}+{}",
                    expected.n_image, expected.n_text, space.n_image, space.n_text
                )));
            }
        }
        let batch_size = config.max_batch.map_or(handshake.max_batch, |m| m.min(handshake.max_batch)).max(1);
        Ok(Self {
            config,
            handshake,
            space,
            batch_size,
            state: Mutex::new(State {
                conn: Some(conn),
                next_id: 0,
            }),
        })
    }

    pub fn handshake(&self) -> &Handshake {
        &self.handshake
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    fn reconnect(&self) -> Result<Connection> {
        let conn = Connection::open(&self.config.endpoint, self.config.timeout).map_err(|e| Error::Transport {
            batch: 0,
            message: e.to_string(),
        })?;
        let hs = read_handshake(&conn, self.config.timeout)?;
        if (hs.n_image, hs.n_text) != (self.space.n_image, self.space.n_text) {
            return Err(Error::HandshakeMismatch(format!(
                "oracle changed space on reconnect: {}+{} → {}+{}",
                self.space.n_image, self.space.n_text, hs.n_image, hs.n_text
            )));
        }
        Ok(conn)
    }

    fn run_batch(&self, state: &mut State, index: usize, masks: &[String]) -> Result<Vec<f64>> {
        let mut last_error = None;
        for _attempt in 0..=self.config.retries {
            if state.conn.is_none() {
                match self.reconnect() {
                    Ok(c) => state.conn = Some(c),
                    Err(Error::Transport { message, .. }) => {
                        last_error = Some(Error::Transport { batch: index, message });
                        continue;
                    }
                    Err(Error::Timeout { millis, .. }) => {
                        last_error = Some(Error::Timeout { batch: index, millis });
                        continue;
                    }
                    Err(other) => return Err(other),
                }
            }
            let id = state.next_id;
            state.next_id += 1;
            let conn = state.conn.as_mut().expect("connected");
            let request = serde_json::to_string(&Request { id, masks })?;
            if let Err(e) = conn.send(&request) {
                state.conn = None;
                last_error = Some(Error::Transport {
                    batch: index,
                    message: e.to_string(),
                });
                continue;
            }
            let line = match conn.read_line(self.config.timeout) {
                Ok(line) => line,
                Err(LineError::Timeout) => {
                    state.conn = None;
                    last_error = Some(Error::Timeout {
                        batch: index,
                        millis: self.config.timeout.as_millis() as u64,
                    });
                    continue;
                }
                Err(LineError::Closed(message)) => {
                    state.conn = None;
                    last_error = Some(Error::Transport { batch: index, message });
                    continue;
                }
            };
            return parse_response(&line, id, masks.len(), index);
        }
        Err(last_error.expect("at least one attempt"))
    }
}

fn parse_response(line: &str, id: u64, expected: usize, batch: usize) -> Result<Vec<f64>> {
    let resp: Response =
        serde_json::from_str(line).map_err(|e| Error::Protocol(format!("batch {batch}: malformed response: {e}")))?;
    if resp.id != id {
        return Err(Error::Protocol(format!(
            "batch {batch}: response id {} does not match request id {id}",
            resp.id
        )));
    }
    if let Some(msg) = resp.error {
        return Err(Error::Protocol(format!("batch {batch}: oracle reported: {msg}")));
    }
    let values = resp
        .values
        .ok_or_else(|| Error::Protocol(format!("batch {batch}: response has neither values nor error")))?;
    if values.len() != expected {
        return Err(Error::Protocol(format!(
            "batch {batch}: expected {expected} values, got {}",
            values.len()
        )));
    }
    Ok(values)
}

impl GameOracle for RemoteOracle {
    fn space(&self) -> PlayerSpace {
        self.space
    }

    fn evaluate(&self, masks: &[Mask]) -> Result<Vec<f64>> {
        check_masks(&self.space, masks)?;
        let mut state = self.state.lock().unwrap_or_else(|p| p.into_inner());
        let mut out = Vec::with_capacity(masks.len());
        for (index, chunk) in masks.chunks(self.batch_size).enumerate() {
            let bits: Vec<String> = chunk.iter().map(Mask::to_bitstring).collect();
            out.extend(self.run_batch(&mut state, index, &bits)?);
        }
        if let Some(bad) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::Protocol(format!("non-finite value at position {bad}")));
        }
        Ok(out)
    }
}

/// Deliberate misbehaviour of the fixture server.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Faults {
    /// Answer every batch in reversed order.
    pub reverse_order: bool,
    /// Add fresh random noise of this scale to each value.
    pub noise: f64,
    /// Drop the last value of every response.
    pub drop_value: bool,
}

/// Serves a game over one connection until the client hangs up: writes the
/// handshake, then answers requests line by line. Reference implementation
/// of the server side of the protocol.
pub fn serve_connection(
    game: &dyn GameOracle,
    max_batch: usize,
    faults: Faults,
    input: impl BufRead,
    mut output: impl Write,
) -> Result<()> {
    let space = game.space();
    let handshake = Handshake {
        n_image: space.n_image,
        n_text: space.n_text,
        max_batch,
        extra: Map::new(),
    };
    writeln!(output, "{}", serde_json::to_string(&handshake)?)?;
    output.flush()?;
    let mut noise = rng::stream(rng::derive_seed(std::process::id() as u64, "fixture-noise"), "noise");
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = match serde_json::from_str::<Value>(&line) {
            Err(e) => serde_json::json!({"id": Value::Null, "error": format!("malformed request: {e}")}),
            Ok(req) => {
                let id = req.get("id").cloned().unwrap_or(Value::Null);
                match answer(game, &req, max_batch) {
                    Ok(mut values) => {
                        if faults.noise > 0.0 {
                            for v in &mut values {
                                *v += faults.noise * noise.gen_range(-1.0..1.0);
                            }
                        }
                        if faults.reverse_order {
                            values.reverse();
                        }
                        if faults.drop_value {
                            values.pop();
                        }
                        serde_json::json!({"id": id, "values": values})
                    }
                    Err(e) => serde_json::json!({"id": id, "error": e.to_string()}),
                }
            }
        };
        writeln!(output, "{reply}")?;
        output.flush()?;
    }
    Ok(())
}

fn answer(game: &dyn GameOracle, req: &Value, max_batch: usize) -> Result<Vec<f64>> {
    let masks = req
        .get("masks")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Protocol("request without masks".into()))?;
    if masks.len() > max_batch {
        return Err(Error::Protocol(format!("batch of {} exceeds max_batch {max_batch}", masks.len())));
    }
    let masks = masks
        .iter()
        .map(|m| {
            m.as_str()
                .ok_or_else(|| Error::Protocol("mask is not a string".into()))
                .and_then(Mask::parse_bitstring)
        })
        .collect::<Result<Vec<_>>>()?;
    game.evaluate(&masks)
}

/// Outcome of one conformance check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformanceReport {
    pub endpoint: String,
    pub handshake: Option<Handshake>,
    pub checks: Vec<CheckResult>,
}

impl ConformanceReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }
}

/// Probes an endpoint: handshake, empty/full masks, determinism on repeated
/// masks, order preservation, and batches beyond `max_batch`.
pub fn conformance_check(config: RemoteConfig, seed: u64) -> ConformanceReport {
    let endpoint = config.endpoint.to_string();
    let mut checks = Vec::new();
    let mut record = |name: &str, outcome: std::result::Result<String, String>| {
        let (passed, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        checks.push(CheckResult {
            name: name.into(),
            passed,
            detail,
        });
    };
    let oracle = match RemoteOracle::connect(config) {
        Ok(o) => o,
        Err(e) => {
            record("handshake", Err(e.to_string()));
            return ConformanceReport {
                endpoint,
                handshake: None,
                checks,
            };
        }
    };
    let space = oracle.space();
    let n = space.size();
    record(
        "handshake",
        Ok(format!("{}+{} players, max_batch {}", space.n_image, space.n_text, oracle.handshake().max_batch)),
    );

    let ends = oracle.evaluate(&[space.empty_mask(), space.full_mask()]);
    record(
        "empty_and_full_masks",
        match &ends {
            Ok(v) => Ok(format!("empty → {}, full → {}", v[0], v[1])),
            Err(e) => Err(e.to_string()),
        },
    );

    let mut r = rng::stream(seed, "oracle-check");
    let probes: Vec<Mask> = (0..6)
        .map(|_| Mask::from_indices(n, (0..n).filter(|_| r.gen_bool(0.5))))
        .chain([space.image_mask(), space.text_mask()])
        .collect();

    let dup = vec![
        probes[0].clone(),
        probes[1].clone(),
        probes[0].clone(),
        probes[0].clone(),
        probes[1].clone(),
    ];
    record(
        "determinism",
        oracle
            .evaluate(&dup)
            .and_then(|a| Ok((a.clone(), oracle.evaluate(&dup)?)))
            .map_err(|e| e.to_string())
            .and_then(|(a, b)| {
                let within = a[0] == a[2] && a[0] == a[3] && a[1] == a[4];
                if within && a == b {
                    Ok("repeated masks return identical values".into())
                } else if !within {
                    Err(format!("duplicate masks in one batch disagree: {a:?}"))
                } else {
                    Err(format!("identical batches disagree across calls: {a:?} vs {b:?}"))
                }
            }),
    );

    record(
        "order_preservation",
        (|| -> Result<std::result::Result<String, String>> {
            let batch = oracle.evaluate(&probes)?;
            let mut mismatches = Vec::new();
            for (k, m) in probes.iter().enumerate() {
                let alone = oracle.evaluate(std::slice::from_ref(m))?[0];
                if alone != batch[k] {
                    mismatches.push(k);
                }
            }
            Ok(if mismatches.is_empty() {
                Ok(format!("{} positions match single-mask requests", probes.len()))
            } else {
                Err(format!("batch positions {mismatches:?} differ from single-mask requests"))
            })
        })()
        .unwrap_or_else(|e| Err(e.to_string())),
    );

    let split = (oracle.handshake().max_batch + 1).min(4097);
    let many: Vec<Mask> = (0..split).map(|k| probes[k % probes.len()].clone()).collect();
    record(
        "batch_splitting",
        match oracle.evaluate(&many) {
            Ok(v) if v.len() == split => Ok(format!("{split} masks answered across batches")),
            Ok(v) => Err(format!("expected {split} values, got {}", v.len())),
            Err(e) => Err(e.to_string()),
        },
    );

    ConformanceReport {
        endpoint,
        handshake: Some(oracle.handshake().clone()),
        checks,
    }
}
