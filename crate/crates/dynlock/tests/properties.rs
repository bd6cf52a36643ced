use ndarray::Array2;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

use dynlock::analysis::spectrum_of_signal;
use dynlock::effective::LockingFieldCalc;
use dynlock::search::{fidelity, reward_phase1};
use dynlock::sequence::{
    concat, dsl4, parse_sequence, serialize_sequence, transform_block, validate_cyclic, Dsl4Variant, Phase,
    PulseEvent, PulseSequence, Transform,
};
use dynlock::spinops::{hermitian_expm, unitary_logm, Operator};

fn phase() -> impl Strategy<Value = Phase> {
    prop_oneof![Just(Phase::X), Just(Phase::Y), Just(Phase::MinusX), Just(Phase::MinusY)]
}

fn event() -> impl Strategy<Value = PulseEvent> {
    prop_oneof![
        phase().prop_map(|p| PulseEvent::pulse(p, "H")),
        (1u32..4).prop_map(|multiple| PulseEvent::Delay { multiple }),
        Just(PulseEvent::Acquire),
    ]
}

fn sequence() -> impl Strategy<Value = PulseSequence> {
    (prop::collection::vec(event(), 1..16), prop_oneof![Just(2e-6), Just(5e-6), Just(2.5e-5)]).prop_map(
        |(mut events, tau)| {
            events.push(PulseEvent::Delay { multiple: 1 });
            PulseSequence::new(events, tau, vec!["H".into()]).unwrap()
        },
    )
}

/// Pulses only at delay boundaries, so every transform is defined.
fn cyclic_block() -> impl Strategy<Value = PulseSequence> {
    prop::collection::vec((phase(), 1u32..3), 1..6).prop_map(|units| {
        let mut events = vec![];
        for &(p, m) in &units {
            events.push(PulseEvent::Delay { multiple: m });
            events.push(PulseEvent::pulse(p, "H"));
        }
        // undo the rotations so the block is cyclic
        for &(p, _) in units.iter().rev() {
            events.push(PulseEvent::Delay { multiple: 1 });
            events.push(PulseEvent::pulse(p.inverted(), "H"));
        }
        events.push(PulseEvent::Delay { multiple: 1 });
        PulseSequence::new(events, 5e-6, vec!["H".into()]).unwrap()
    })
}

fn hermitian(n: usize) -> impl Strategy<Value = Operator> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
        let a = Array2::from_shape_fn((n, n), |(i, j)| C64::new(v[i * n + j].0, v[i * n + j].1));
        Operator::hermitian_part(&a + &a.t().mapv(|z| z.conj())).unwrap()
    })
}

fn max_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn text_round_trip(seq in sequence()) {
        let text = serialize_sequence(&seq);
        let back = parse_sequence(&text).unwrap();
        prop_assert_eq!(&back, &seq);
        prop_assert_eq!(serialize_sequence(&back), text);
    }

    #[test]
    fn transforms_have_their_orders(seq in cyclic_block()) {
        let shift4 = (0..4).try_fold(seq.clone(), |s, _| transform_block(&s, Transform::PhaseShift90)).unwrap();
        prop_assert_eq!(&shift4, &seq);
        let inv2 = transform_block(&transform_block(&seq, Transform::PhaseInvert).unwrap(), Transform::PhaseInvert).unwrap();
        prop_assert_eq!(&inv2, &seq);
        let rev2 = transform_block(&transform_block(&seq, Transform::TimeReverse).unwrap(), Transform::TimeReverse).unwrap();
        prop_assert_eq!(&rev2, &seq);
    }

    #[test]
    fn transforms_preserve_cyclicity_and_length(seq in cyclic_block()) {
        prop_assert!(validate_cyclic(&seq).cyclic);
        for op in [Transform::PhaseShift90, Transform::PhaseInvert, Transform::TimeReverse] {
            let t = transform_block(&seq, op).unwrap();
            prop_assert!(validate_cyclic(&t).cyclic);
            prop_assert_eq!(t.n_intervals(), seq.n_intervals());
            prop_assert_eq!(t.n_pulses(), seq.n_pulses());
        }
        let two = concat(&[seq.clone(), seq.clone()]).unwrap();
        prop_assert_eq!(two.n_intervals(), 2 * seq.n_intervals());
    }

    #[test]
    fn fidelity_symmetry_and_invariance(h1 in hermitian(4), h2 in hermitian(4), h3 in hermitian(4), phi in -3.0f64..3.0) {
        let u = hermitian_expm(&h1, 1.0).unwrap().into_matrix();
        let v = hermitian_expm(&h2, 1.0).unwrap().into_matrix();
        let a = hermitian_expm(&h3, 1.0).unwrap().into_matrix();
        let f = fidelity(&u, &v).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
        prop_assert!((f - fidelity(&v, &u).unwrap()).abs() < 1e-12);
        let phased = v.mapv(|z| z * C64::from_polar(1.0, phi));
        prop_assert!((f - fidelity(&u, &phased).unwrap()).abs() < 1e-12);
        prop_assert!((f - fidelity(&a.dot(&u), &a.dot(&v)).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn exponentials_compose(h in hermitian(4), s in -1.0f64..1.0, t in -1.0f64..1.0) {
        let a = hermitian_expm(&h, s).unwrap();
        let b = hermitian_expm(&h, t).unwrap();
        let ab = hermitian_expm(&h, s + t).unwrap();
        prop_assert!(max_diff(&a.dot(&b).into_matrix(), ab.matrix()) < 1e-10);
        prop_assert!(a.unitarity_defect() < 1e-12);
    }

    #[test]
    fn logarithm_inverts_exponential(h in hermitian(4)) {
        // scale so every phase stays away from the branch cut
        let g = h.scaled(0.3);
        let u = hermitian_expm(&g, 1.0).unwrap();
        let log = unitary_logm(&u).unwrap();
        prop_assert!(!log.branch_ambiguous);
        prop_assert!(max_diff(log.generator.matrix(), g.matrix()) < 1e-9);
    }

    #[test]
    fn spectrum_scales_with_signal(
        re in prop::collection::vec(-1.0f64..1.0, 8..40), c in 0.1f64..5.0, arg in -3.0f64..3.0
    ) {
        let times: Vec<f64> = (0..re.len()).map(|k| k as f64 * 1e-4).collect();
        let s: Vec<C64> = re.iter().enumerate().map(|(k, &r)| C64::new(r, (k as f64).sin())).collect();
        let scaled: Vec<C64> = s.iter().map(|z| z * C64::from_polar(c, arg)).collect();
        let a = spectrum_of_signal(&times, &s, "a").unwrap();
        let b = spectrum_of_signal(&times, &scaled, "b").unwrap();
        for (x, y) in a.magnitude.iter().zip(&b.magnitude) {
            prop_assert!((x * c - y).abs() < 1e-9 * (1.0 + y));
        }
    }

    #[test]
    fn locking_field_period_is_one_over_tau(nu in -24_000.0f64..24_000.0) {
        let seq = dsl4(20e-6, 0.0, Dsl4Variant::Canonical).unwrap();
        let calc = LockingFieldCalc::new(&seq).unwrap();
        let a = calc.principal(nu);
        let b = calc.principal(nu + 50_000.0);
        prop_assert!((a.principal_angle - b.principal_angle).abs() < 1e-9);
        prop_assert!(a.axis[1].abs() * a.principal_angle < 1e-9);
    }

    #[test]
    fn reward_is_monotone_above_threshold(f1 in 0.999f64..1.0, f2 in 0.999f64..1.0) {
        let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
        prop_assert!(reward_phase1(lo, 0.999) <= reward_phase1(hi, 0.999));
        prop_assert_eq!(reward_phase1(0.5 * lo, 0.999), -1.0);
    }
}
