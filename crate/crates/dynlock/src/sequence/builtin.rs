use serde::{Deserialize, Serialize};

use super::{concat, Phase, PulseEvent, PulseSequence};
use crate::{Error, Result};

use Phase::{MinusX as MX, MinusY as MY, X, Y};

/// Candidate phase patterns for four concatenated WaHuHa units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dsl4Variant {
    /// (x,y,−y,−x) (x,−y,y,−x) (−x,−y,y,x) (−x,y,−y,x)
    Canonical,
    /// The same WaHuHa unit four times.
    Repeated,
    /// Each unit phase-shifted by 90° relative to the previous one.
    PhaseCycled,
    /// WaHuHa alternating with its phase-inverted copy.
    Alternating,
}

impl Dsl4Variant {
    pub const ALL: [Dsl4Variant; 4] =
        [Dsl4Variant::Canonical, Dsl4Variant::Repeated, Dsl4Variant::PhaseCycled, Dsl4Variant::Alternating];

    pub fn unit_phases(self) -> [[Phase; 4]; 4] {
        let w = [X, MY, Y, MX];
        let inv = [MX, Y, MY, X];
        let shift = |p: [Phase; 4], k: usize| p.map(|mut q| {
            for _ in 0..k {
                q = q.shifted90();
            }
            q
        });
        match self {
            Dsl4Variant::Canonical => [[X, Y, MY, MX], [X, MY, Y, MX], [MX, MY, Y, X], [MX, Y, MY, X]],
            Dsl4Variant::Repeated => [w; 4],
            Dsl4Variant::PhaseCycled => [shift(w, 0), shift(w, 1), shift(w, 2), shift(w, 3)],
            Dsl4Variant::Alternating => [w, inv, w, inv],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dsl4Variant::Canonical => "canonical",
            Dsl4Variant::Repeated => "repeated",
            Dsl4Variant::PhaseCycled => "phase_cycled",
            Dsl4Variant::Alternating => "alternating",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s)
    }
}

fn check_timing(tau: f64, widths: &[f64]) -> Result<()> {
    if !(tau > 0.0) {
        return Err(Error::Config(format!("tau must be positive, got {tau}")));
    }
    for &w in widths {
        if !(w >= 0.0) {
            return Err(Error::Config(format!("pulse width must be non-negative, got {w}")));
        }
        if tau <= 2.0 * w {
            return Err(Error::Config(format!(
                "timing overlap: tau = {tau:e} s must exceed twice the pulse width {w:e} s"
            )));
        }
    }
    Ok(())
}

// d1 P a  d1 P b  d2 P c  d1 P d  d1 acq, with every pulse duplicated on all channels
fn unit(phases: [Phase; 4], widths: &[(String, f64)]) -> Vec<PulseEvent> {
    let pulse = |p: Phase| {
        widths.iter().map(move |(c, w)| PulseEvent::Pulse { phase: p, flip_deg: 90.0, width: *w, channel: c.clone() })
    };
    let mut ev = Vec::new();
    for (k, p) in phases.into_iter().enumerate() {
        ev.push(PulseEvent::Delay { multiple: if k == 2 { 2 } else { 1 } });
        ev.extend(pulse(p));
    }
    ev.push(PulseEvent::Delay { multiple: 1 });
    ev.push(PulseEvent::Acquire);
    ev
}

/// Single WaHuHa unit `(x, −y, y, −x)` on channel H, cycle 6τ.
pub fn wahuha(tau: f64, pulse_width: f64) -> Result<PulseSequence> {
    check_timing(tau, &[pulse_width])?;
    let w = vec![("H".to_string(), pulse_width)];
    PulseSequence::new(unit([X, MY, Y, MX], &w), tau, vec!["H".into()])
}

/// Four WaHuHa units (16 pulses, 24τ) with an acquisition every 6τ, on channel H.
pub fn dsl4(tau: f64, pulse_width: f64, variant: Dsl4Variant) -> Result<PulseSequence> {
    dsl4_channels(tau, &[("H", pulse_width)], variant)
}

/// DSL-4 driven synchronously on several channels, each with its own pulse width.
pub fn dsl4_channels(tau: f64, channels: &[(&str, f64)], variant: Dsl4Variant) -> Result<PulseSequence> {
    if channels.is_empty() {
        return Err(Error::Config("at least one channel required".into()));
    }
    check_timing(tau, &channels.iter().map(|c| c.1).collect::<Vec<_>>())?;
    let widths: Vec<(String, f64)> = channels.iter().map(|(c, w)| (c.to_string(), *w)).collect();
    let names: Vec<String> = widths.iter().map(|c| c.0.clone()).collect();
    let blocks: Vec<PulseSequence> = variant
        .unit_phases()
        .into_iter()
        .map(|p| PulseSequence { events: unit(p, &widths), tau, channels: names.clone() })
        .collect();
    concat(&blocks)
}

/// Eight ideal π/2 pulses over 12τ (two WaHuHa-shaped halves) ending in one acquisition.
pub fn block8(tau: f64, phases: [Phase; 8]) -> Result<PulseSequence> {
    check_timing(tau, &[0.0])?;
    let w = vec![("H".to_string(), 0.0)];
    let mut ev = unit([phases[0], phases[1], phases[2], phases[3]], &w);
    ev.pop();
    ev.extend(unit([phases[4], phases[5], phases[6], phases[7]], &w));
    PulseSequence::new(ev, tau, vec!["H".into()])
}

/// A protocol with the size and structure of a 67-block learned sequence:
/// 67 eight-pulse blocks of 12τ, each closed by an acquisition. Phases cycle
/// deterministically through the symmetry transforms of a WaHuHa pair.
pub fn adsl_like(tau: f64) -> Result<PulseSequence> {
    let base = [X, MY, Y, MX, MX, Y, MY, X];
    let blocks: Result<Vec<PulseSequence>> = (0..67)
        .map(|b| {
            let mut p = base;
            for q in p.iter_mut() {
                for _ in 0..(b % 4) {
                    *q = q.shifted90();
                }
            }
            block8(tau, p)
        })
        .collect();
    concat(&blocks?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::validate_cyclic;

    #[test]
    fn dsl4_layout() {
        let s = dsl4(20e-6, 0.0, Dsl4Variant::Canonical).unwrap();
        assert_eq!(s.n_pulses(), 16);
        assert_eq!(s.n_acquires(), 4);
        assert!((s.cycle_duration() - 480e-6).abs() < 1e-15);
        assert_eq!(s.acquire_intervals(), vec![6, 12, 18, 24]);
        let h = dsl4(4e-6, 0.0, Dsl4Variant::Canonical).unwrap();
        assert!((h.cycle_duration() - 96e-6).abs() < 1e-15);
    }

    #[test]
    fn all_variants_are_cyclic() {
        for v in Dsl4Variant::ALL {
            let s = dsl4(20e-6, 0.0, v).unwrap();
            assert!(validate_cyclic(&s).residual < 1e-12, "{v:?}");
        }
    }

    #[test]
    fn overlap_is_rejected() {
        assert!(matches!(dsl4(5e-6, 3e-6, Dsl4Variant::Canonical), Err(Error::Config(_))));
    }

    #[test]
    fn adsl_structure() {
        let s = adsl_like(1e-6).unwrap();
        assert_eq!(s.n_pulses(), 536);
        assert_eq!(s.n_acquires(), 67);
        assert_eq!(s.n_intervals(), 804);
        assert!(validate_cyclic(&s).cyclic);
    }
}
