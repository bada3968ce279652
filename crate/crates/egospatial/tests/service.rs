use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{Shutdown, TcpListener, TcpStream};

use egospatial::service::{handle_line, serve_batch, serve_tcp, ScoreReply, ServeError, ServeOptions};
use proptest::prelude::*;
use serde_json::{json, Value};

fn request(i: usize) -> String {
    let (task, response, reference) = match i % 5 {
        0 => ("A1", format!("move forward {}.5 meters", i % 7), "move forward 2.0 meters".to_string()),
        1 => ("A3", "turn left 50 degrees; move forward 1.8 meters".into(), "move forward 1.8 meters; turn left 50 degrees".into()),
        2 => ("D4", if i.is_multiple_of(2) { "yes" } else { "no" }.into(), "yes".into()),
        3 => ("D1", format!("[{}, 100, 600, 700]", i % 300), "[100, 100, 600, 700]".into()),
        _ => ("Q7", "x".into(), "y".into()),
    };
    json!({"id": i, "task": task, "response": response, "reference": reference}).to_string()
}

fn run(input: &[u8], opts: ServeOptions) -> (Vec<ScoreReply>, Result<usize, ServeError>) {
    let mut out = Vec::new();
    let res = serve_batch(input, &mut out, opts).map(|s| s.replies);
    let replies = String::from_utf8(out)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    (replies, res)
}

fn by_id(replies: Vec<ScoreReply>) -> BTreeMap<u64, ScoreReply> {
    let mut m = BTreeMap::new();
    for r in replies {
        let id = r.id.as_u64().unwrap();
        assert!(m.insert(id, r).is_none(), "duplicate reply for {id}");
    }
    m
}

#[test]
fn batch_matches_single_scoring() {
    let lines: Vec<String> = (0..1000).map(request).collect();
    let input = lines.join("\n");
    for workers in [1, 4, 8] {
        let opts = ServeOptions { workers, max_in_flight: 64 };
        let (replies, res) = run(input.as_bytes(), opts);
        assert_eq!(res.unwrap(), 1000);
        let got = by_id(replies);
        assert_eq!(got.len(), 1000);
        for (i, line) in lines.iter().enumerate() {
            assert_eq!(got[&(i as u64)], handle_line(line), "request {i}");
        }
    }
}

#[test]
fn scoring_is_stateless() {
    let probe = |id: usize| {
        json!({"id": id, "task": "D1", "response": "[0, 0, 500, 500]", "reference": "[0, 0, 1000, 1000]"})
            .to_string()
    };
    let mut alone = handle_line(&probe(0));
    let lines: Vec<String> = (0..300)
        .map(|i| if i % 17 == 0 { probe(i) } else { request(i) })
        .collect();
    let (replies, _) = run(lines.join("\n").as_bytes(), ServeOptions::default());
    let got = by_id(replies);
    for i in (0..300).step_by(17) {
        alone.id = json!(i);
        assert_eq!(got[&(i as u64)], alone);
    }
}

#[test]
fn blank_lines_and_crlf() {
    let input = format!("\n{}\r\n   \n\n{}\n", request(0), request(2));
    let (replies, res) = run(input.as_bytes(), ServeOptions::default());
    assert_eq!(res.unwrap(), 2);
    assert!(replies.iter().all(|r| r.error.is_none()));
}

#[test]
fn empty_input() {
    let (replies, res) = run(b"", ServeOptions::default());
    assert_eq!(res.unwrap(), 0);
    assert!(replies.is_empty());
}

#[test]
fn smallest_window() {
    let input: Vec<String> = (0..50).map(request).collect();
    let opts = ServeOptions { workers: 3, max_in_flight: 1 };
    let (replies, res) = run(input.join("\n").as_bytes(), opts);
    assert_eq!(res.unwrap(), 50);
    assert_eq!(by_id(replies).len(), 50);
}

/// Yields `data`, then fails.
struct Broken<'a> {
    data: &'a [u8],
}

impl Read for Broken<'_> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        if self.data.is_empty() {
            return Err(std::io::Error::new(std::io::ErrorKind::ConnectionReset, "gone"));
        }
        let n = self.data.len().min(buf.len());
        buf[..n].copy_from_slice(&self.data[..n]);
        self.data = &self.data[n..];
        Ok(n)
    }
}

#[test]
fn read_error_flushes_then_fails() {
    let input = format!("{}\n{}\n", request(0), request(1));
    let mut out = Vec::new();
    let res = serve_batch(
        BufReader::new(Broken { data: input.as_bytes() }),
        &mut out,
        ServeOptions::default(),
    );
    assert!(matches!(res, Err(ServeError::Read { read: 2, .. })), "{res:?}");
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 2);
}

#[test]
fn malformed_lines_keep_their_id() {
    let input = b"{\"id\": \"k\", \"task\": 5}\n\xff\xfe not utf8\n[1, 2]\n";
    let (replies, res) = run(input, ServeOptions::default());
    assert_eq!(res.unwrap(), 3);
    assert!(replies.iter().all(|r| r.error.as_deref() == Some("malformed_request")));
    assert!(replies.iter().any(|r| r.id == json!("k")));
    assert_eq!(replies.iter().filter(|r| r.id == Value::Null).count(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn one_reply_per_nonblank_line(lines in prop::collection::vec(prop::collection::vec(any::<u8>(), 0..80), 0..40)) {
        let lines: Vec<Vec<u8>> = lines
            .into_iter()
            .map(|l| l.into_iter().filter(|b| *b != b'\n').collect())
            .collect();
        let expected = lines
            .iter()
            .filter(|l| !String::from_utf8_lossy(l).trim().is_empty())
            .count();
        let input = lines.join(&b'\n');
        let (replies, res) = run(&input, ServeOptions { workers: 2, max_in_flight: 8 });
        prop_assert_eq!(res.unwrap(), expected);
        prop_assert_eq!(replies.len(), expected);
    }
}

#[test]
fn tcp_round_trip() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || serve_tcp(listener, ServeOptions::default()));

    let clients: Vec<_> = (0..3)
        .map(|c| {
            std::thread::spawn(move || {
                let mut stream = TcpStream::connect(addr).unwrap();
                let lines: Vec<String> = (c * 100..c * 100 + 100).map(request).collect();
                stream.write_all(lines.join("\n").as_bytes()).unwrap();
                stream.shutdown(Shutdown::Write).unwrap();
                let replies: Vec<ScoreReply> = BufReader::new(stream)
                    .lines()
                    .map(|l| serde_json::from_str(&l.unwrap()).unwrap())
                    .collect();
                let got = by_id(replies);
                assert_eq!(got.len(), 100);
                for (i, line) in lines.iter().enumerate() {
                    assert_eq!(got[&((c * 100 + i) as u64)], handle_line(line));
                }
            })
        })
        .collect();
    for c in clients {
        c.join().unwrap();
    }
}
