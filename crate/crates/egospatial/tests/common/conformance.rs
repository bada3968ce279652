//! Frozen reward cases from `fixtures/reward_oracle.py`, replayed through
//! the wire handler.

use egospatial::service::handle_line;
use serde_json::{json, Value};

pub const TOLERANCE: f64 = 1e-9;

pub fn cases() -> Vec<Value> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/conformance.json");
    let text = std::fs::read_to_string(path).expect("conformance fixture");
    serde_json::from_str(&text).expect("fixture is JSON")
}

fn close(field: &str, got: Option<f64>, want: Option<f64>) -> Result<(), String> {
    match (got, want) {
        (None, None) => Ok(()),
        (Some(g), Some(w)) if (g - w).abs() <= TOLERANCE => Ok(()),
        _ => Err(format!("{field}: got {got:?}, want {want:?}")),
    }
}

/// Compare the scorer's reply for one case with the frozen expectation.
pub fn check(case: &Value) -> Result<(), String> {
    let mut req = json!({
        "id": case["name"],
        "task": case["task"],
        "response": case["response"],
        "reference": case["reference"],
    });
    if let Some(meta) = case.get("meta") {
        req["meta"] = meta.clone();
    }
    let reply = handle_line(&req.to_string());
    let want = &case["expected"];
    let name = case["name"].as_str().unwrap_or("?");
    let wrap = |e: String| format!("{name}: {e}");
    if reply.id != case["name"] {
        return Err(wrap(format!("id not echoed: {}", reply.id)));
    }
    if let Some(code) = want.get("error") {
        return match reply.error.as_deref() {
            Some(c) if Some(c) == code.as_str() && reply.reward.is_none() => Ok(()),
            _ => Err(wrap(format!("expected error {code}, got {reply:?}"))),
        };
    }
    if reply.error.is_some() {
        return Err(wrap(format!("unexpected error {reply:?}")));
    }
    let f = |k: &str| want.get(k).and_then(Value::as_f64);
    close("reward", reply.reward, f("reward")).map_err(wrap)?;
    let s = reply.subscores.unwrap_or_default();
    close("fmt", s.fmt, f("fmt")).map_err(wrap)?;
    close("sem", s.sem, f("sem")).map_err(wrap)?;
    close("num", s.num, f("num")).map_err(wrap)?;
    close("ord", s.ord, f("ord")).map_err(wrap)?;
    close("geo", s.geo, f("geo")).map_err(wrap)?;
    close("valid", s.valid, f("valid")).map_err(wrap)?;
    if reply.overlength != want.get("overlength").and_then(Value::as_bool) {
        return Err(wrap(format!("overlength: got {:?}", reply.overlength)));
    }
    Ok(())
}
