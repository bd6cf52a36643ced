// Parse a sequence from text, check cyclicity, apply symmetry transforms and
// re-emit the canonical form.

use dynlock::sequence::{parse_sequence, serialize_sequence, transform_block, validate_cyclic, Transform};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let text = "tau 20u; [d1; p90 x; d1; p90 -y; d2; p90 y; d1; p90 -x; d1; acq] x4";
    let seq = parse_sequence(text)?;
    println!("{} pulses, {} acquisitions, cycle {:.1} us", seq.n_pulses(), seq.n_acquires(), seq.cycle_duration() * 1e6);

    let report = validate_cyclic(&seq);
    println!("cyclic: {} (residual {:.1e})", report.cyclic, report.residual);
    assert!(report.cyclic);

    for t in [Transform::PhaseShift90, Transform::PhaseInvert, Transform::TimeReverse] {
        let out = transform_block(&seq, t)?;
        assert!(validate_cyclic(&out).cyclic);
        println!("{t:?}: first pulse line '{}'", serialize_sequence(&out).lines().nth(3).unwrap_or(""));
    }

    let canonical = serialize_sequence(&seq);
    assert_eq!(parse_sequence(&canonical)?, seq);

    match parse_sequence("tau 20u; p90 z") {
        Err(e) => println!("diagnostic: {e}"),
        Ok(_) => return Err("bad phase accepted".into()),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("parse_sequence example");
}
