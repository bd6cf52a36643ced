//! Line/semicolon separated sequence text format.
//!
//! ```text
//! tau 20u
//! channel H
//! [ d1; p90 x; d1; p90 -y; d2; p90 y; d1; p90 -x; d1; acq ] x4
//! ```

use super::{Phase, PulseEvent, PulseSequence};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Open,
    Close,
    Sep,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn err(line: usize, col: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, column: col, message: message.into() }
}

fn lex(text: &str) -> Vec<Spanned> {
    let mut out = Vec::new();
    for (li, raw) in text.lines().enumerate() {
        let line = li + 1;
        let chars: Vec<char> = raw.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            match c {
                '#' => break,
                ';' => out.push(Spanned { tok: Tok::Sep, line, col }),
                '[' => out.push(Spanned { tok: Tok::Open, line, col }),
                ']' => out.push(Spanned { tok: Tok::Close, line, col }),
                c if c.is_whitespace() => {}
                _ => {
                    let start = i;
                    while i + 1 < chars.len() && !matches!(chars[i + 1], ';' | '[' | ']' | '#') && !chars[i + 1].is_whitespace() {
                        i += 1;
                    }
                    let w: String = chars[start..=i].iter().collect();
                    out.push(Spanned { tok: Tok::Word(w), line, col: start + 1 });
                }
            }
            i += 1;
        }
        out.push(Spanned { tok: Tok::Sep, line, col: chars.len() + 1 });
    }
    out
}

#[derive(Debug)]
enum Node {
    Event(PulseEvent, usize, usize, Option<String>),
    Group(Vec<Node>, u32),
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    tau: Option<f64>,
    channels: Vec<String>,
}

/// Split a quantity like `20u` into its value in seconds.
fn parse_duration(w: &str, line: usize, col: usize) -> Result<f64> {
    let (num, unit) = match w.char_indices().rev().find(|(_, c)| c.is_ascii_digit() || *c == '.') {
        Some((i, _)) => w.split_at(i + 1),
        None => return Err(err(line, col, format!("expected a duration, found '{w}'"))),
    };
    let exp = match unit {
        "u" => "e-6",
        "m" => "e-3",
        "s" => "",
        "" => return Err(err(line, col, format!("duration '{w}' needs a unit (u, m or s)"))),
        other => return Err(err(line, col, format!("unknown time unit '{other}'"))),
    };
    if num.starts_with('-') {
        return Err(err(line, col, format!("negative duration '{w}'")));
    }
    let v: f64 = format!("{num}{exp}")
        .parse()
        .map_err(|_| err(line, col, format!("invalid number '{num}'")))?;
    if !v.is_finite() {
        return Err(err(line, col, format!("invalid number '{num}'")));
    }
    Ok(v)
}

/// Parse a standalone duration such as `20u`, `1.5m` or `2e-5s`.
pub fn parse_duration_text(w: &str) -> Result<f64> {
    parse_duration(w.trim(), 1, 1)
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn block(&mut self, nested: Option<(usize, usize)>) -> Result<Vec<Node>> {
        let mut nodes = Vec::new();
        loop {
            let Some(t) = self.peek().cloned() else {
                if let Some((l, c)) = nested {
                    return Err(err(l, c, "unclosed '['"));
                }
                return Ok(nodes);
            };
            match t.tok {
                Tok::Sep => self.pos += 1,
                Tok::Open => {
                    self.pos += 1;
                    let inner = self.block(Some((t.line, t.col)))?;
                    let count = self.repeat_count(t.line, t.col)?;
                    nodes.push(Node::Group(inner, count));
                }
                Tok::Close => {
                    if nested.is_none() {
                        return Err(err(t.line, t.col, "unmatched ']'"));
                    }
                    self.pos += 1;
                    return Ok(nodes);
                }
                Tok::Word(_) => {
                    if let Some(n) = self.statement()? {
                        nodes.push(n);
                    }
                }
            }
        }
    }

    fn repeat_count(&mut self, line: usize, col: usize) -> Result<u32> {
        match self.peek().cloned() {
            Some(Spanned { tok: Tok::Word(w), line, col }) => {
                self.pos += 1;
                let n = w
                    .strip_prefix('x')
                    .and_then(|d| d.parse::<u32>().ok())
                    .ok_or_else(|| err(line, col, format!("expected repeat count 'xN', found '{w}'")))?;
                if n == 0 {
                    return Err(err(line, col, "repeat count must be at least 1"));
                }
                Ok(n)
            }
            _ => Err(err(line, col, "group must be followed by a repeat count 'xN'")),
        }
    }

    fn words(&mut self) -> Vec<(String, usize, usize)> {
        let mut ws = Vec::new();
        while let Some(Spanned { tok: Tok::Word(w), line, col }) = self.peek().cloned() {
            ws.push((w, line, col));
            self.pos += 1;
        }
        ws
    }

    fn statement(&mut self) -> Result<Option<Node>> {
        let ws = self.words();
        let (head, line, col) = ws[0].clone();
        let extra = |n: usize| -> Result<()> {
            if let Some((w, l, c)) = ws.get(n) {
                return Err(err(*l, *c, format!("unexpected token '{w}'")));
            }
            Ok(())
        };
        match head.as_str() {
            "tau" => {
                let (w, l, c) = ws.get(1).cloned().ok_or_else(|| err(line, col, "tau needs a value"))?;
                extra(2)?;
                self.tau = Some(parse_duration(&w, l, c)?);
                Ok(None)
            }
            "channel" => {
                let (w, l, c) = ws.get(1).cloned().ok_or_else(|| err(line, col, "channel needs a name"))?;
                extra(2)?;
                if !w.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_') {
                    return Err(err(l, c, format!("invalid channel name '{w}'")));
                }
                if !self.channels.contains(&w) {
                    self.channels.push(w);
                }
                Ok(None)
            }
            "acq" => {
                extra(1)?;
                Ok(Some(Node::Event(PulseEvent::Acquire, line, col, None)))
            }
            h if h.starts_with('d') && h.len() > 1 => {
                extra(1)?;
                let k = &h[1..];
                if k.starts_with('-') {
                    return Err(err(line, col, format!("negative duration '{h}'")));
                }
                let multiple: u32 =
                    k.parse().map_err(|_| err(line, col, format!("invalid delay '{h}', expected d<k>")))?;
                Ok(Some(Node::Event(PulseEvent::Delay { multiple }, line, col, None)))
            }
            h if h.starts_with('p') && h.len() > 1 => {
                let flip_deg: f64 =
                    h[1..].parse().map_err(|_| err(line, col, format!("invalid pulse '{h}', expected p<angle>")))?;
                if !flip_deg.is_finite() {
                    return Err(err(line, col, format!("invalid flip angle in '{h}'")));
                }
                let (pw, pl, pc) =
                    ws.get(1).cloned().ok_or_else(|| err(line, col, "pulse needs a phase (x, -x, y, -y)"))?;
                let phase = Phase::from_token(&pw)
                    .ok_or_else(|| err(pl, pc, format!("unknown phase token '{pw}'")))?;
                let mut width = 0.0;
                let mut channel = None;
                for (w, l, c) in ws.iter().skip(2) {
                    if let Some(ch) = w.strip_prefix('@') {
                        if channel.is_some() {
                            return Err(err(*l, *c, "channel given twice"));
                        }
                        channel = Some((ch.to_string(), *l, *c));
                    } else if channel.is_none() && width == 0.0 {
                        width = parse_duration(w, *l, *c)?;
                    } else {
                        return Err(err(*l, *c, format!("unexpected token '{w}'")));
                    }
                }
                let ev = PulseEvent::Pulse { phase, flip_deg, width, channel: String::new() };
                let ch = channel.map(|(name, l, c)| {
                    // location of the channel reference for diagnostics
                    (name, l, c)
                });
                match ch {
                    Some((name, l, c)) => Ok(Some(Node::Event(ev, l, c, Some(name)))),
                    None => Ok(Some(Node::Event(ev, line, col, None))),
                }
            }
            _ => Err(err(line, col, format!("unknown statement '{head}'"))),
        }
    }
}

fn flatten(nodes: &[Node], channels: &[String], out: &mut Vec<PulseEvent>) -> Result<()> {
    for n in nodes {
        match n {
            Node::Event(ev, line, col, ch) => {
                let mut ev = ev.clone();
                if let PulseEvent::Pulse { channel, .. } = &mut ev {
                    let name = ch.clone().unwrap_or_else(|| channels[0].clone());
                    if !channels.contains(&name) {
                        return Err(err(*line, *col, format!("undeclared channel '{name}'")));
                    }
                    *channel = name;
                }
                out.push(ev);
            }
            Node::Group(inner, count) => {
                for _ in 0..*count {
                    flatten(inner, channels, out)?;
                }
            }
        }
    }
    Ok(())
}

/// Parse sequence text. Pulses without `@channel` go to the first declared
/// channel, or to `H` when no channel is declared.
pub fn parse_sequence(text: &str) -> Result<PulseSequence> {
    let mut p = Parser { toks: lex(text), pos: 0, tau: None, channels: Vec::new() };
    let nodes = p.block(None)?;
    if p.channels.is_empty() {
        p.channels.push("H".to_string());
    }
    let mut events = Vec::new();
    flatten(&nodes, &p.channels, &mut events)?;
    let needs_tau = events.iter().any(|e| matches!(e, PulseEvent::Delay { multiple } if *multiple > 0));
    let tau = match p.tau {
        Some(t) => t,
        None if needs_tau => return Err(err(1, 1, "delays used but no 'tau' statement given")),
        None => 0.0,
    };
    if needs_tau && tau == 0.0 {
        return Err(err(1, 1, "tau must be positive when delays are used"));
    }
    PulseSequence::new(events, tau, p.channels)
}

/// Plain decimal form of `x·10^shift`, exact on the shortest round-trip digits of `x`.
fn shifted_decimal(x: f64, shift: i32) -> String {
    let e = format!("{x:e}");
    let (mant, exp) = e.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("exponent");
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant),
    };
    let digits: String = mant.chars().filter(|c| *c != '.').collect();
    // value = 0.digits × 10^(point), with point counted from the left
    let point = 1 + exp + shift;
    let mut s = if point <= 0 {
        format!("0.{}{}", "0".repeat((-point) as usize), digits)
    } else if point as usize >= digits.len() {
        format!("{}{}", digits, "0".repeat(point as usize - digits.len()))
    } else {
        format!("{}.{}", &digits[..point as usize], &digits[point as usize..])
    };
    if s.contains('.') {
        s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    if neg {
        s.insert(0, '-');
    }
    s
}

fn format_duration(t: f64) -> String {
    if t == 0.0 {
        return "0u".to_string();
    }
    if t >= 1e-3 {
        format!("{}m", shifted_decimal(t, 3))
    } else {
        format!("{}u", shifted_decimal(t, 6))
    }
}

/// Canonical text form: one statement per line, groups expanded.
pub fn serialize_sequence(seq: &PulseSequence) -> String {
    let mut s = String::new();
    s.push_str(&format!("tau {}\n", format_duration(seq.tau)));
    for c in &seq.channels {
        s.push_str(&format!("channel {c}\n"));
    }
    for e in &seq.events {
        match e {
            PulseEvent::Pulse { phase, flip_deg, width, channel } => {
                s.push_str(&format!("p{flip_deg} {}", phase.token()));
                if *width > 0.0 {
                    s.push_str(&format!(" {}", format_duration(*width)));
                }
                s.push_str(&format!(" @{channel}\n"));
            }
            PulseEvent::Delay { multiple } => s.push_str(&format!("d{multiple}\n")),
            PulseEvent::Acquire => s.push_str("acq\n"),
        }
    }
    s
}
