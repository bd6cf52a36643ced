//! Pulse sequences: data model, text format, built-in cycles and symmetry transforms.

mod builtin;
mod dsl;

pub use builtin::{adsl_like, block8, dsl4, dsl4_channels, wahuha, Dsl4Variant};
pub use dsl::{parse_duration_text, parse_sequence, serialize_sequence};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::spinops::Mat2;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    X,
    Y,
    MinusX,
    MinusY,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::X, Phase::MinusX, Phase::Y, Phase::MinusY];

    pub fn axis(self) -> [f64; 3] {
        match self {
            Phase::X => [1.0, 0.0, 0.0],
            Phase::Y => [0.0, 1.0, 0.0],
            Phase::MinusX => [-1.0, 0.0, 0.0],
            Phase::MinusY => [0.0, -1.0, 0.0],
        }
    }

    /// Phase advanced by 90° (x → y → −x → −y → x).
    pub fn shifted90(self) -> Phase {
        match self {
            Phase::X => Phase::Y,
            Phase::Y => Phase::MinusX,
            Phase::MinusX => Phase::MinusY,
            Phase::MinusY => Phase::X,
        }
    }

    pub fn inverted(self) -> Phase {
        self.shifted90().shifted90()
    }

    pub fn token(self) -> &'static str {
        match self {
            Phase::X => "x",
            Phase::Y => "y",
            Phase::MinusX => "-x",
            Phase::MinusY => "-y",
        }
    }

    pub fn from_token(s: &str) -> Option<Phase> {
        match s {
            "x" | "+x" => Some(Phase::X),
            "y" | "+y" => Some(Phase::Y),
            "-x" => Some(Phase::MinusX),
            "-y" => Some(Phase::MinusY),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PulseEvent {
    /// Rotation by `flip_deg` about the phase axis; `width == 0` is an ideal delta pulse.
    Pulse { phase: Phase, flip_deg: f64, width: f64, channel: String },
    /// Free evolution for `multiple · τ`.
    Delay { multiple: u32 },
    /// Acquisition marker; never alters dynamics.
    Acquire,
}

impl PulseEvent {
    pub fn pulse(phase: Phase, channel: &str) -> Self {
        PulseEvent::Pulse { phase, flip_deg: 90.0, width: 0.0, channel: channel.to_string() }
    }

    pub fn is_pulse(&self) -> bool {
        matches!(self, PulseEvent::Pulse { .. })
    }

    /// Ideal rotation `exp(−i θ I_φ)` in the 2×2 representation.
    pub fn rotation(&self) -> Option<Mat2> {
        match self {
            PulseEvent::Pulse { phase, flip_deg, .. } => {
                Some(Mat2::rotation(phase.axis(), flip_deg * PI / 180.0))
            }
            _ => None,
        }
    }

    /// Nutation frequency ω₁ in rad/s of a finite pulse.
    pub fn nutation_rad_s(&self) -> Option<f64> {
        match self {
            PulseEvent::Pulse { flip_deg, width, .. } if *width > 0.0 => {
                Some(flip_deg * PI / 180.0 / width)
            }
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    PhaseShift90,
    PhaseInvert,
    TimeReverse,
    ChannelSwap,
}

impl Transform {
    pub const ALL: [Transform; 4] =
        [Transform::PhaseShift90, Transform::PhaseInvert, Transform::TimeReverse, Transform::ChannelSwap];
}

/// Ordered events on a base interpulse unit `tau`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub events: Vec<PulseEvent>,
    pub tau: f64,
    pub channels: Vec<String>,
}

/// Outcome of the ideal-rotation cyclicity check.
#[derive(Clone, Debug, PartialEq)]
pub struct CyclicReport {
    pub cyclic: bool,
    /// Largest per-channel distance of `∏P_k` from the identity up to global phase.
    pub residual: f64,
    pub per_channel: Vec<(String, f64)>,
}

pub const CYCLIC_TOLERANCE: f64 = 1e-9;

impl PulseSequence {
    pub fn new(events: Vec<PulseEvent>, tau: f64, channels: Vec<String>) -> Result<Self> {
        let seq = PulseSequence { events, tau, channels };
        seq.validate()?;
        Ok(seq)
    }

    pub fn empty() -> Self {
        PulseSequence { events: Vec::new(), tau: 0.0, channels: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(Error::Config(format!("tau must be finite and non-negative, got {}", self.tau)));
        }
        for e in &self.events {
            match e {
                PulseEvent::Pulse { width, channel, flip_deg, .. } => {
                    if !(*width >= 0.0) || !width.is_finite() || !flip_deg.is_finite() {
                        return Err(Error::Config("pulse width must be finite and non-negative".into()));
                    }
                    if !self.channels.iter().any(|c| c == channel) {
                        return Err(Error::Config(format!("pulse on undeclared channel '{channel}'")));
                    }
                }
                PulseEvent::Delay { multiple } => {
                    if *multiple > 0 && self.tau == 0.0 {
                        return Err(Error::Config("delays require tau > 0".into()));
                    }
                }
                PulseEvent::Acquire => {}
            }
        }
        Ok(())
    }

    /// Number of τ intervals in one cycle.
    pub fn n_intervals(&self) -> u32 {
        self.events
            .iter()
            .map(|e| if let PulseEvent::Delay { multiple } = e { *multiple } else { 0 })
            .sum()
    }

    /// Cycle duration in seconds: the sum of the delays. Finite pulses are
    /// centered on their nominal instants and borrow time from adjacent delays.
    pub fn cycle_duration(&self) -> f64 {
        self.n_intervals() as f64 * self.tau
    }

    pub fn n_pulses(&self) -> usize {
        self.events.iter().filter(|e| e.is_pulse()).count()
    }

    pub fn n_acquires(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, PulseEvent::Acquire)).count()
    }

    pub fn has_finite_pulses(&self) -> bool {
        self.events.iter().any(|e| matches!(e, PulseEvent::Pulse { width, .. } if *width > 0.0))
    }

    /// Nominal times of acquisition markers (in units of τ).
    pub fn acquire_intervals(&self) -> Vec<u32> {
        let mut t = 0;
        let mut out = Vec::new();
        for e in &self.events {
            match e {
                PulseEvent::Delay { multiple } => t += multiple,
                PulseEvent::Acquire => out.push(t),
                _ => {}
            }
        }
        out
    }

    /// Ideal pulse products on `channel`: the rotation applied before the first
    /// delay, and per interval `k` the rotation applied at its end (identity when
    /// no pulse). A sequence without delays has a single empty interval.
    pub fn interval_rotations(&self, channel: &str) -> (Mat2, Vec<Mat2>) {
        let n = self.n_intervals() as usize;
        let mut rots = vec![Mat2::identity(); n.max(1)];
        let mut leading = Mat2::identity();
        let mut k: usize = 0;
        for e in &self.events {
            match e {
                PulseEvent::Delay { multiple } => k += *multiple as usize,
                PulseEvent::Pulse { channel: c, .. } if c == channel => {
                    let r = e.rotation().expect("pulse");
                    if k == 0 {
                        leading = r * leading;
                    } else {
                        rots[k - 1] = r * rots[k - 1];
                    }
                }
                _ => {}
            }
        }
        (leading, rots)
    }

    /// Full ideal rotation product `∏P_k` on one channel.
    pub fn rotation_product(&self, channel: &str) -> Mat2 {
        let mut u = Mat2::identity();
        for e in &self.events {
            if let PulseEvent::Pulse { channel: c, .. } = e {
                if c == channel {
                    u = e.rotation().expect("pulse") * u;
                }
            }
        }
        u
    }

    /// Same events on a different base unit.
    pub fn with_tau(&self, tau: f64) -> Self {
        let mut s = self.clone();
        s.tau = tau;
        s
    }

    /// Same timing with every pulse removed.
    pub fn idealized_without_pulses(&self) -> Self {
        let mut s = self.clone();
        s.events.retain(|e| !e.is_pulse());
        s
    }

    /// Replace every finite pulse width by zero.
    pub fn idealized(&self) -> Self {
        let mut s = self.clone();
        for e in s.events.iter_mut() {
            if let PulseEvent::Pulse { width, .. } = e {
                *width = 0.0;
            }
        }
        s
    }
}

/// Ideal-rotation product per channel compared to the identity up to global phase.
pub fn validate_cyclic(seq: &PulseSequence) -> CyclicReport {
    let per_channel: Vec<(String, f64)> = seq
        .channels
        .iter()
        .map(|c| (c.clone(), seq.rotation_product(c).distance_to_identity_up_to_phase()))
        .collect();
    let residual = per_channel.iter().map(|(_, r)| *r).fold(0.0, f64::max);
    CyclicReport { cyclic: residual <= CYCLIC_TOLERANCE, residual, per_channel }
}

/// Apply one symmetry transform to every pulse of the block.
pub fn transform_block(seq: &PulseSequence, op: Transform) -> Result<PulseSequence> {
    let mut out = seq.clone();
    match op {
        Transform::PhaseShift90 | Transform::PhaseInvert => {
            for e in out.events.iter_mut() {
                if let PulseEvent::Pulse { phase, .. } = e {
                    *phase = if op == Transform::PhaseShift90 { phase.shifted90() } else { phase.inverted() };
                }
            }
        }
        Transform::ChannelSwap => {
            if seq.channels.len() != 2 {
                return Err(Error::Config(format!(
                    "channel_swap needs exactly two channels, sequence has {}",
                    seq.channels.len()
                )));
            }
            let (a, b) = (&seq.channels[0], &seq.channels[1]);
            for e in out.events.iter_mut() {
                if let PulseEvent::Pulse { channel, .. } = e {
                    *channel = if channel == a { b.clone() } else { a.clone() };
                }
            }
        }
        Transform::TimeReverse => out.events = time_reversed(seq)?,
    }
    Ok(out)
}

// Reverse pulses and delays; acquisition markers stay at their original times.
fn time_reversed(seq: &PulseSequence) -> Result<Vec<PulseEvent>> {
    let acquires = seq.acquire_intervals();
    let body: Vec<PulseEvent> =
        seq.events.iter().filter(|e| !matches!(e, PulseEvent::Acquire)).rev().cloned().collect();
    let mut out = Vec::with_capacity(seq.events.len());
    let mut pending = acquires.iter().peekable();
    let mut t = 0;
    let flush = |t: u32, out: &mut Vec<PulseEvent>, pending: &mut std::iter::Peekable<std::slice::Iter<u32>>| {
        while pending.peek().is_some_and(|&&a| a == t) {
            out.push(PulseEvent::Acquire);
            pending.next();
        }
    };
    for (i, e) in body.iter().enumerate() {
        if let PulseEvent::Delay { multiple } = e {
            // markers at this instant go after every pulse sharing it
            flush(t, &mut out, &mut pending);
            if pending.peek().is_some_and(|&&a| a > t && a < t + multiple) {
                return Err(Error::Config(
                    "time reversal would place an acquisition inside a delay".into(),
                ));
            }
            t += multiple;
        }
        out.push(e.clone());
        let _ = i;
    }
    flush(t, &mut out, &mut pending);
    Ok(out)
}

/// Concatenate blocks sharing τ and channels.
pub fn concat(blocks: &[PulseSequence]) -> Result<PulseSequence> {
    let Some(first) = blocks.first() else {
        return Ok(PulseSequence::empty());
    };
    let mut events = Vec::new();
    for (i, b) in blocks.iter().enumerate() {
        if b.tau != first.tau {
            return Err(Error::Config(format!(
                "block {i} has tau {} but block 0 has tau {}",
                b.tau, first.tau
            )));
        }
        if b.channels != first.channels {
            return Err(Error::Config(format!("block {i} has a different channel set")));
        }
        events.extend(b.events.iter().cloned());
    }
    Ok(PulseSequence { events, tau: first.tau, channels: first.channels.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_shift_has_order_four() {
        for p in Phase::ALL {
            assert_eq!(p.shifted90().shifted90().shifted90().shifted90(), p);
        }
    }

    #[test]
    fn wahuha_is_cyclic() {
        let w = wahuha(20e-6, 0.0).unwrap();
        let r = validate_cyclic(&w);
        assert!(r.cyclic && r.residual < 1e-12);
        assert!((w.cycle_duration() - 120e-6).abs() < 1e-18);
    }

    #[test]
    fn single_pulse_is_not_cyclic() {
        let s = PulseSequence::new(vec![PulseEvent::pulse(Phase::X, "H")], 1e-6, vec!["H".into()]).unwrap();
        assert!(!validate_cyclic(&s).cyclic);
    }

    #[test]
    fn phase_invert_of_wahuha() {
        let w = wahuha(20e-6, 0.0).unwrap();
        let inv = transform_block(&w, Transform::PhaseInvert).unwrap();
        let phases: Vec<Phase> = inv
            .events
            .iter()
            .filter_map(|e| if let PulseEvent::Pulse { phase, .. } = e { Some(*phase) } else { None })
            .collect();
        assert_eq!(phases, vec![Phase::MinusX, Phase::Y, Phase::MinusY, Phase::X]);
    }

    #[test]
    fn time_reverse_keeps_cyclicity_and_markers() {
        let w = wahuha(20e-6, 0.0).unwrap();
        let r = transform_block(&w, Transform::TimeReverse).unwrap();
        assert!(validate_cyclic(&r).residual < 1e-12);
        assert_eq!(r.events.len(), w.events.len());
        assert_eq!(r.acquire_intervals(), w.acquire_intervals());
    }

    #[test]
    fn channel_swap_requires_two_channels() {
        let w = wahuha(20e-6, 0.0).unwrap();
        assert!(transform_block(&w, Transform::ChannelSwap).is_err());
    }

    #[test]
    fn concat_checks_tau() {
        let a = wahuha(20e-6, 0.0).unwrap();
        let b = wahuha(10e-6, 0.0).unwrap();
        assert!(matches!(concat(&[a.clone(), b]), Err(Error::Config(_))));
        let four = concat(&[a.clone(), a.clone(), a.clone(), a]).unwrap();
        assert_eq!(four.n_intervals(), 24);
        assert!(concat(&[]).unwrap().events.is_empty());
    }

    #[test]
    fn interval_rotations_separate_leading_pulses() {
        let s = parse_sequence("tau 1u; p90 x; d1; p90 -x; d1").unwrap();
        let (lead, r) = s.interval_rotations("H");
        assert_eq!(r.len(), 2);
        assert!((lead.sub(&Mat2::rotation([1.0, 0.0, 0.0], PI / 2.0))).max_abs() < 1e-15);
        assert!((r[0].sub(&Mat2::rotation([-1.0, 0.0, 0.0], PI / 2.0))).max_abs() < 1e-15);
        assert_eq!(r[1], Mat2::identity());
    }
}
