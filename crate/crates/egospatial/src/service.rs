//! Streaming reward service.
//!
//! Requests and replies are single-line JSON objects:
//!
//! ```text
//! request  {"id": .., "task": "A1", "response": "..", "reference": "..", "meta": {"gt_box": [..]}}
//! reply    {"id": .., "reward": 0.8, "subscores": {"fmt": 1.0, ..}, "overlength": false}
//! error    {"id": .., "error": "unknown_task"}
//! ```
//!
//! The id is echoed verbatim. Replies may come back in any order; every
//! non-blank input line gets exactly one reply. Error codes are
//! `unknown_task`, `bad_reference` and `malformed_request`.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::{TcpListener, TcpStream};

use crossbeam_channel::{bounded, Receiver, Sender, TryRecvError};
use egospatial_core::reward::{RewardBreakdown, ScoreError, ScoreMeta, Scorer};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub id: Value,
    pub task: String,
    pub response: String,
    pub reference: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<ScoreMeta>,
}

/// Active sub-scores only; inactive terms are omitted from the wire.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Subscores {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fmt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sem: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ord: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReply {
    pub id: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subscores: Option<Subscores>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlength: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    UnknownTask,
    BadReference,
    MalformedRequest,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::UnknownTask => "unknown_task",
            ErrorCode::BadReference => "bad_reference",
            ErrorCode::MalformedRequest => "malformed_request",
        }
    }
}

impl ScoreReply {
    pub fn scored(id: Value, r: &RewardBreakdown) -> Self {
        ScoreReply {
            id,
            reward: Some(r.reward),
            subscores: Some(Subscores {
                fmt: r.fmt,
                sem: r.sem,
                num: r.num,
                ord: r.ord,
                geo: r.geo,
                valid: r.valid,
            }),
            overlength: Some(r.overlength),
            error: None,
        }
    }

    pub fn failed(id: Value, code: ErrorCode) -> Self {
        ScoreReply {
            id,
            reward: None,
            subscores: None,
            overlength: None,
            error: Some(code.as_str().into()),
        }
    }
}

pub fn handle_request(req: &ScoreRequest) -> ScoreReply {
    match Scorer.score_named(&req.task, &req.response, &req.reference, req.meta.as_ref()) {
        Ok(r) => ScoreReply::scored(req.id.clone(), &r),
        Err(ScoreError::UnknownTask(_)) => ScoreReply::failed(req.id.clone(), ErrorCode::UnknownTask),
        Err(ScoreError::BadReference { .. }) => {
            ScoreReply::failed(req.id.clone(), ErrorCode::BadReference)
        }
    }
}

/// Score one wire line. Lines that are not a well-formed request get a
/// `malformed_request` reply, echoing the id when one can be recovered.
pub fn handle_line(line: &str) -> ScoreReply {
    match serde_json::from_str::<ScoreRequest>(line) {
        Ok(req) => handle_request(&req),
        Err(_) => {
            let id = serde_json::from_str::<Value>(line)
                .ok()
                .and_then(|v| v.get("id").cloned())
                .unwrap_or(Value::Null);
            ScoreReply::failed(id, ErrorCode::MalformedRequest)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServeOptions {
    pub workers: usize,
    /// Upper bound on lines read but not yet written back.
    pub max_in_flight: usize,
}

impl Default for ServeOptions {
    fn default() -> Self {
        ServeOptions {
            workers: 4,
            max_in_flight: 1024,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ServeSummary {
    pub requests: usize,
    pub replies: usize,
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("reading requests failed after {read} lines")]
    Read { read: usize, source: std::io::Error },
    #[error("writing replies failed")]
    Write(#[source] std::io::Error),
}

fn write_replies<W: Write>(rx: Receiver<String>, out: W) -> std::io::Result<usize> {
    let mut out = BufWriter::new(out);
    let mut written = 0;
    loop {
        let line = match rx.try_recv() {
            Ok(l) => l,
            Err(TryRecvError::Empty) => {
                // nothing queued: make what we have visible before blocking
                out.flush()?;
                match rx.recv() {
                    Ok(l) => l,
                    Err(_) => break,
                }
            }
            Err(TryRecvError::Disconnected) => break,
        };
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
        written += 1;
    }
    out.flush()?;
    Ok(written)
}

fn score_lines(rx: Receiver<String>, tx: Sender<String>) {
    for line in rx {
        let reply = handle_line(&line);
        let text = serde_json::to_string(&reply).expect("reply serializes");
        if tx.send(text).is_err() {
            break;
        }
    }
}

/// Read requests from `input` until EOF and write one reply per request.
///
/// A read error stops intake; replies for everything already read are still
/// written before the error is returned.
pub fn serve_batch<R, W>(input: R, output: W, opts: ServeOptions) -> Result<ServeSummary, ServeError>
where
    R: BufRead,
    W: Write + Send,
{
    let workers = opts.workers.max(1);
    let window = opts.max_in_flight.max(2);
    let (req_tx, req_rx) = bounded::<String>(window / 2);
    let (rep_tx, rep_rx) = bounded::<String>(window - window / 2);

    std::thread::scope(|s| {
        let writer = s.spawn(move || write_replies(rep_rx, output));
        for _ in 0..workers {
            let (rx, tx) = (req_rx.clone(), rep_tx.clone());
            s.spawn(move || score_lines(rx, tx));
        }
        drop(req_rx);
        drop(rep_tx);

        let mut input = input;
        let mut requests = 0;
        let mut read_error = None;
        let mut buf = Vec::new();
        loop {
            buf.clear();
            match input.read_until(b'\n', &mut buf) {
                Ok(0) => break,
                Ok(_) => {}
                Err(e) => {
                    read_error = Some(e);
                    break;
                }
            }
            // bytes that are not UTF-8 cannot be JSON; they still get a reply
            let line = String::from_utf8_lossy(&buf);
            if line.trim().is_empty() {
                continue;
            }
            requests += 1;
            if req_tx.send(line.into_owned()).is_err() {
                // workers are gone because the writer failed
                break;
            }
        }
        drop(req_tx);

        let written = writer.join().expect("writer thread panicked");
        let replies = written.map_err(ServeError::Write)?;
        if let Some(source) = read_error {
            return Err(ServeError::Read {
                read: requests,
                source,
            });
        }
        Ok(ServeSummary { requests, replies })
    })
}

/// Serve one TCP connection until the peer closes its write half.
pub fn serve_connection(stream: TcpStream, opts: ServeOptions) -> Result<ServeSummary, ServeError> {
    let reader = stream.try_clone().map_err(ServeError::Write)?;
    serve_batch(BufReader::new(reader), stream, opts)
}

/// Accept connections forever, one thread per connection. Returns only when
/// accepting fails.
pub fn serve_tcp(listener: TcpListener, opts: ServeOptions) -> std::io::Error {
    loop {
        match listener.accept() {
            Ok((stream, _)) => {
                std::thread::spawn(move || {
                    let _ = serve_connection(stream, opts);
                });
            }
            Err(e) => return e,
        }
    }
}
