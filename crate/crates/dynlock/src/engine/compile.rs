//! Lowering of a pulse sequence to piecewise-constant segments.

use std::f64::consts::PI;

use super::Sampling;
use crate::sequence::{PulseEvent, PulseSequence};
use crate::spinops::{Mat2, SpinSystem};
use crate::{Error, Result};

/// One piece of a cycle.
#[derive(Clone, Debug)]
pub(crate) enum Seg {
    /// Free evolution under offsets and couplings.
    Free(f64),
    /// Instantaneous rotation per species.
    Kick(Vec<Mat2>),
    /// Evolution with rf on: per species an optional `(axis, ω₁)`.
    Driven { duration: f64, fields: Vec<Option<([f64; 3], f64)>> },
    /// Sampling point.
    Mark,
}

#[derive(Clone, Debug)]
pub(crate) struct Timeline {
    pub segs: Vec<Seg>,
    pub t_c: f64,
    /// Cycle-relative time of each mark, in order.
    pub mark_times: Vec<f64>,
}

struct Pulse {
    species: usize,
    axis: [f64; 3],
    flip: f64,
    width: f64,
}

struct Group {
    t: f64,
    first_event: usize,
    pulses: Vec<Pulse>,
}

enum Atom {
    Kick(Vec<Mat2>),
    Driven(f64, Vec<Seg>),
    Mark,
}

/// `(start, order, atom)` sorted by start then event order.
type Placed = (f64, f64, Atom);

pub(crate) fn compile(seq: &PulseSequence, system: &SpinSystem, sampling: Sampling) -> Result<Timeline> {
    let n_species = system.species().len();
    let t_c = seq.cycle_duration();
    if t_c <= 0.0 {
        return Err(Error::Config("sequence has zero cycle duration".into()));
    }
    let eps = 1e-12 * t_c;
    let species_of = |c: &str| system.species_index(c);

    // groups of consecutive pulses and acquisition markers at nominal times
    let mut groups: Vec<Group> = Vec::new();
    let mut acquires: Vec<(f64, usize)> = Vec::new();
    let mut units = 0u32;
    let mut open = false;
    for (idx, e) in seq.events.iter().enumerate() {
        let t = units as f64 * seq.tau;
        match e {
            PulseEvent::Delay { multiple } => {
                units += multiple;
                open = false;
            }
            PulseEvent::Acquire => {
                acquires.push((t, idx));
                open = false;
            }
            PulseEvent::Pulse { phase, flip_deg, width, channel } => {
                let p = Pulse { species: species_of(channel)?, axis: phase.axis(), flip: flip_deg * PI / 180.0, width: *width };
                if open {
                    groups.last_mut().expect("open group").pulses.push(p);
                } else {
                    groups.push(Group { t, first_event: idx, pulses: vec![p] });
                    open = true;
                }
            }
        }
    }

    let mut placed: Vec<Placed> = Vec::new();
    let mut extents: Vec<(f64, f64, usize)> = Vec::new();
    for g in &groups {
        let finite = g.pulses.iter().filter(|p| p.width > 0.0).count();
        if finite == 0 {
            let mut rots = vec![Mat2::identity(); n_species];
            for p in &g.pulses {
                rots[p.species] = Mat2::rotation(p.axis, p.flip) * rots[p.species];
            }
            placed.push((g.t, g.first_event as f64, Atom::Kick(rots)));
            extents.push((g.t, g.t, g.first_event));
            continue;
        }
        if finite != g.pulses.len() {
            return Err(Error::Unsupported("simultaneous ideal and finite pulses".into()));
        }
        let mut per: Vec<Vec<&Pulse>> = vec![Vec::new(); n_species];
        for p in &g.pulses {
            per[p.species].push(p);
        }
        let widths: Vec<f64> = per.iter().map(|ps| ps.iter().map(|p| p.width).sum()).collect();
        let w = widths.iter().cloned().fold(0.0, f64::max);
        if w > t_c {
            return Err(Error::Config("pulse group longer than the cycle".into()));
        }
        let mut start = g.t - w / 2.0;
        if start < 0.0 {
            start = 0.0;
        }
        if start + w > t_c {
            start = t_c - w;
        }
        let center = start + w / 2.0;
        // per species: list of (from, to, axis, ω₁)
        let mut spans: Vec<Vec<(f64, f64, [f64; 3], f64)>> = vec![Vec::new(); n_species];
        let mut cuts = vec![start, start + w];
        for (s, ps) in per.iter().enumerate() {
            let mut t0 = center - widths[s] / 2.0;
            for p in ps {
                spans[s].push((t0, t0 + p.width, p.axis, p.flip / p.width));
                cuts.push(t0);
                cuts.push(t0 + p.width);
                t0 += p.width;
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() <= eps);
        let mut segs = Vec::new();
        for c in cuts.windows(2) {
            let dur = c[1] - c[0];
            if dur <= eps {
                continue;
            }
            let mid = 0.5 * (c[0] + c[1]);
            let fields: Vec<Option<([f64; 3], f64)>> = spans
                .iter()
                .map(|sp| sp.iter().find(|(a, b, _, _)| *a <= mid && mid < *b).map(|(_, _, ax, w1)| (*ax, *w1)))
                .collect();
            if fields.iter().all(|f| f.is_none()) {
                segs.push(Seg::Free(dur));
            } else {
                segs.push(Seg::Driven { duration: dur, fields });
            }
        }
        placed.push((start, g.first_event as f64, Atom::Driven(w, segs)));
        extents.push((start, start + w, g.first_event));
    }

    // sampling marks
    let mut mark_times: Vec<(f64, f64)> = Vec::new();
    match sampling {
        Sampling::PerAcquire => {
            if acquires.is_empty() {
                return Err(Error::Config("per-acquire sampling needs acquisition markers".into()));
            }
            for (t, idx) in &acquires {
                // a marker sharing its instant with a finite group sits on the group edge
                let mut tm = *t;
                for (s, e, first) in &extents {
                    if e > s && (*t - (s + e) / 2.0).abs() <= (e - s) / 2.0 + eps {
                        tm = if *idx < *first { *s } else { *e };
                    }
                }
                mark_times.push((tm, *idx as f64));
            }
        }
        Sampling::PerCycle => mark_times.push((t_c, f64::INFINITY)),
        Sampling::SubCycle(k) => {
            if k == 0 {
                return Err(Error::Config("sub-cycle sampling needs k >= 1".into()));
            }
            for j in 1..=k {
                mark_times.push((t_c * j as f64 / k as f64, f64::INFINITY));
            }
        }
    }
    for (t, ord) in &mark_times {
        placed.push((*t, *ord, Atom::Mark));
    }
    placed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.partial_cmp(&b.1).unwrap()));

    let mut segs = Vec::new();
    let mut cursor = 0.0;
    let mut times = Vec::new();
    for (start, _, atom) in placed {
        if start < cursor - eps {
            return Err(Error::Config(match atom {
                Atom::Mark => format!("sampling point at {start:e} s falls inside a pulse"),
                _ => format!("timing overlap: pulse at {start:e} s starts before the previous one ends"),
            }));
        }
        if start > cursor + eps {
            segs.push(Seg::Free(start - cursor));
            cursor = start;
        }
        match atom {
            Atom::Kick(r) => segs.push(Seg::Kick(r)),
            Atom::Driven(w, inner) => {
                segs.extend(inner);
                cursor = start + w;
            }
            Atom::Mark => {
                segs.push(Seg::Mark);
                times.push(start);
            }
        }
    }
    if t_c > cursor + eps {
        segs.push(Seg::Free(t_c - cursor));
    }
    Ok(Timeline { segs, t_c, mark_times: times })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{dsl4, dsl4_channels, Dsl4Variant};
    use crate::spinops::Species;

    fn total(tl: &Timeline) -> f64 {
        tl.segs
            .iter()
            .map(|s| match s {
                Seg::Free(t) => *t,
                Seg::Driven { duration, .. } => *duration,
                _ => 0.0,
            })
            .sum()
    }

    #[test]
    fn ideal_dsl4_timeline() {
        let seq = dsl4(20e-6, 0.0, Dsl4Variant::Canonical).unwrap();
        let sys = SpinSystem::homonuclear(2, "H").unwrap();
        let tl = compile(&seq, &sys, Sampling::PerAcquire).unwrap();
        assert_eq!(tl.mark_times.len(), 4);
        assert!((total(&tl) - 480e-6).abs() < 1e-15);
        assert_eq!(tl.segs.iter().filter(|s| matches!(s, Seg::Kick(_))).count(), 16);
        let tl = compile(&seq, &sys, Sampling::SubCycle(8)).unwrap();
        assert_eq!(tl.mark_times.len(), 8);
    }

    #[test]
    fn finite_pulses_borrow_from_delays() {
        let seq = dsl4(20e-6, 3.6e-6, Dsl4Variant::Canonical).unwrap();
        let sys = SpinSystem::homonuclear(1, "H").unwrap();
        let tl = compile(&seq, &sys, Sampling::PerAcquire).unwrap();
        assert!((total(&tl) - 480e-6).abs() < 1e-15);
        let driven = tl.segs.iter().filter(|s| matches!(s, Seg::Driven { .. })).count();
        assert_eq!(driven, 16);
    }

    #[test]
    fn two_channel_widths_split_into_overlaps() {
        let seq = dsl4_channels(6e-6, &[("H", 1e-6), ("C", 2e-6)], Dsl4Variant::Canonical).unwrap();
        let sys = SpinSystem::new(vec![Species::from_label("H"), Species::from_label("C")], vec![0, 0, 1]).unwrap();
        let tl = compile(&seq, &sys, Sampling::PerAcquire).unwrap();
        // each group: C alone, both, C alone
        let driven = tl.segs.iter().filter(|s| matches!(s, Seg::Driven { .. })).count();
        assert_eq!(driven, 48);
        assert!((total(&tl) - 144e-6).abs() < 1e-15);
    }

    #[test]
    fn overlapping_pulses_are_rejected() {
        let seq = crate::sequence::parse_sequence("tau 2u; d1; p90 x 2.5u; d1; p90 y 2.5u; d1; acq").unwrap();
        let sys = SpinSystem::homonuclear(1, "H").unwrap();
        assert!(matches!(compile(&seq, &sys, Sampling::PerAcquire), Err(Error::Config(_))));
    }
}
