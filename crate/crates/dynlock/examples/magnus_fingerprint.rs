// Offset Magnus coefficients of DSL-4 and of a single WaHuHa unit.

use dynlock::effective::magnus_offset_expansion;
use dynlock::sequence::{dsl4, wahuha, Dsl4Variant};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dsl = magnus_offset_expansion(&dsl4(20e-6, 0.0, Dsl4Variant::Canonical)?, 3)?;
    println!("DSL-4 offset Magnus terms (units of τ^m ω^(m+1)):");
    for (m, c) in dsl.orders.iter().enumerate() {
        println!("  order {m}: ({:+.6}, {:+.6}, {:+.6})", c[0], c[1], c[2]);
    }
    let expected = [[0.0, 0.0, 1.0 / 3.0], [-2.0 / 3.0, 0.0, 1.0 / 3.0], [0.0, 0.0, -4.0 / 3.0], [19.0 / 9.0, 0.0, 19.0 / 18.0]];
    for (got, want) in dsl.orders.iter().zip(expected) {
        for k in 0..3 {
            assert!((got[k] - want[k]).abs() < 1e-9);
        }
    }

    let w = magnus_offset_expansion(&wahuha(20e-6, 0.0)?, 0)?;
    println!("WaHuHa order 0: {:?}", w.orders[0]);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("magnus_fingerprint example");
}
