//! Response normalization and the answer grammars used by the reward.
//!
//! Two action patterns are recognized anywhere in a normalized response:
//!
//! ```text
//! move (forward|backward|left|right) <number> meter[s]
//! turn (left|right) <number> degree[s]
//! ```
//!
//! where `<number>` is `digits` or `digits.digits`. Keywords must start at a
//! word boundary and the unit must end at one.

use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Deref;

use crate::geometry::ActionKind;

/// Characters stripped from the end of a response.
pub const TRAILING_PUNCTUATION: [char; 6] = ['.', '!', '?', ';', ':', ','];

/// Responses longer than this many characters are penalized outright.
pub const MAX_RESPONSE_CHARS: usize = 200;

/// Lowercased text with whitespace runs collapsed and trailing punctuation removed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NormalizedText(String);

impl NormalizedText {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl Deref for NormalizedText {
    type Target = str;

    fn deref(&self) -> &str {
        &self.0
    }
}

pub fn preprocess(raw: &str) -> NormalizedText {
    let mut out = String::with_capacity(raw.len());
    let mut gap = false;
    for ch in raw.chars() {
        if ch.is_whitespace() {
            gap = !out.is_empty();
            continue;
        }
        if gap {
            out.push(' ');
            gap = false;
        }
        if ch.is_ascii() {
            out.push(ch.to_ascii_lowercase());
        } else {
            out.extend(ch.to_lowercase());
        }
    }
    // "yes. ." must become "yes", so spaces are stripped along with punctuation
    let keep = out
        .trim_end_matches(|c: char| c == ' ' || TRAILING_PUNCTUATION.contains(&c))
        .len();
    out.truncate(keep);
    NormalizedText(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParsedAction {
    pub kind: ActionKind,
    /// Meters for moves, degrees for turns.
    pub value: f64,
}

/// Every non-overlapping action match, in textual order.
pub fn parse_action_sequence(text: &str) -> Vec<ParsedAction> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i + 4 <= bytes.len() {
        let hit = memfind_keyword(&bytes[i..]);
        let Some(off) = hit else { break };
        let at = i + off;
        if at > 0 && is_word_byte(bytes[at - 1]) {
            i = at + 1;
            continue;
        }
        match match_action(bytes, at) {
            Some((action, end)) => {
                out.push(action);
                i = end;
            }
            None => i = at + 1,
        }
    }
    out
}

/// Offset of the next "move" or "turn".
fn memfind_keyword(hay: &[u8]) -> Option<usize> {
    hay.windows(4).position(|w| w == b"move" || w == b"turn")
}

fn is_word_byte(b: u8) -> bool {
    // any non-ASCII byte belongs to a letter-ish char as far as boundaries go
    b.is_ascii_alphanumeric() || b == b'_' || b >= 0x80
}

fn skip_spaces(b: &[u8], mut i: usize) -> usize {
    while i < b.len() && b[i].is_ascii_whitespace() {
        i += 1;
    }
    i
}

fn expect_spaces(b: &[u8], i: usize) -> Option<usize> {
    let j = skip_spaces(b, i);
    (j > i).then_some(j)
}

fn eat(b: &[u8], i: usize, words: &[(&[u8], ActionKind)]) -> Option<(ActionKind, usize)> {
    words
        .iter()
        .find(|(w, _)| b[i..].starts_with(w))
        .map(|(w, k)| (*k, i + w.len()))
}

/// `digits` or `digits.digits`; returns the value and the end offset.
fn number(b: &[u8], i: usize) -> Option<(f64, usize)> {
    let mut j = i;
    while j < b.len() && b[j].is_ascii_digit() {
        j += 1;
    }
    if j == i {
        return None;
    }
    if j + 1 < b.len() && b[j] == b'.' && b[j + 1].is_ascii_digit() {
        j += 1;
        while j < b.len() && b[j].is_ascii_digit() {
            j += 1;
        }
    }
    let s = core::str::from_utf8(&b[i..j]).ok()?;
    s.parse::<f64>().ok().map(|v| (v, j))
}

fn unit(b: &[u8], i: usize, singular: &[u8]) -> Option<usize> {
    if !b[i..].starts_with(singular) {
        return None;
    }
    let mut j = i + singular.len();
    if j < b.len() && b[j] == b's' {
        j += 1;
    }
    if j < b.len() && is_word_byte(b[j]) {
        return None;
    }
    Some(j)
}

fn match_action(b: &[u8], at: usize) -> Option<(ParsedAction, usize)> {
    use ActionKind::*;
    let is_move = b[at..].starts_with(b"move");
    let i = expect_spaces(b, at + 4)?;
    let (kind, i) = if is_move {
        eat(
            b,
            i,
            &[
                (b"forward", Forward),
                (b"backward", Backward),
                (b"left", ShiftLeft),
                (b"right", ShiftRight),
            ],
        )?
    } else {
        eat(b, i, &[(b"left", TurnLeft), (b"right", TurnRight)])?
    };
    let i = expect_spaces(b, i)?;
    let (value, i) = number(b, i)?;
    let i = skip_spaces(b, i);
    let end = unit(b, i, if is_move { b"meter" } else { b"degree" })?;
    Some((ParsedAction { kind, value }, end))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxFormat {
    /// The whole trimmed response is one `[x1, y1, x2, y2]`.
    Exact,
    /// A box occurs somewhere inside other text.
    Embedded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParsedBox {
    pub coords: [f64; 4],
    pub format: BoxFormat,
}

/// Find a bracketed integer 4-tuple in a raw (un-normalized) response.
///
/// Separators are `,` or `, `; integers may carry a leading `-`. The first
/// occurrence wins.
pub fn parse_bbox(raw: &str) -> Option<ParsedBox> {
    let trimmed = raw.trim();
    let b = trimmed.as_bytes();
    if let Some((coords, end)) = bracket_tuple(b, 0) {
        if end == b.len() {
            return Some(ParsedBox {
                coords,
                format: BoxFormat::Exact,
            });
        }
    }
    let mut i = 0;
    while let Some(off) = b[i..].iter().position(|c| *c == b'[') {
        let at = i + off;
        if let Some((coords, _)) = bracket_tuple(b, at) {
            return Some(ParsedBox {
                coords,
                format: BoxFormat::Embedded,
            });
        }
        i = at + 1;
    }
    None
}

fn bracket_tuple(b: &[u8], at: usize) -> Option<([f64; 4], usize)> {
    if b.get(at) != Some(&b'[') {
        return None;
    }
    let mut i = at + 1;
    let mut coords = [0.0; 4];
    for (k, c) in coords.iter_mut().enumerate() {
        if k > 0 {
            if b.get(i) != Some(&b',') {
                return None;
            }
            i += 1;
            if b.get(i) == Some(&b' ') {
                i += 1;
            }
        }
        let start = i;
        if b.get(i) == Some(&b'-') {
            i += 1;
        }
        let digits = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == digits {
            return None;
        }
        *c = core::str::from_utf8(&b[start..i]).ok()?.parse().ok()?;
    }
    (b.get(i) == Some(&b']')).then_some((coords, i + 1))
}

/// `yes`/`true` are positive, `no`/`false` negative; nothing else parses.
pub fn parse_boolean(text: &str) -> Option<bool> {
    match text {
        "yes" | "true" => Some(true),
        "no" | "false" => Some(false),
        _ => None,
    }
}

/// Strictly more than [`MAX_RESPONSE_CHARS`] characters (not bytes).
pub fn is_overlength(raw: &str) -> bool {
    raw.len() > MAX_RESPONSE_CHARS && raw.chars().count() > MAX_RESPONSE_CHARS
}
