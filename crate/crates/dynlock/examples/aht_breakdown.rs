// Exact single-spin DSL-4 spectra against truncated average-Hamiltonian series.

use dynlock::analysis::aht_breakdown_compare;
use dynlock::sequence::{dsl4, Dsl4Variant};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let seq = dsl4(20e-6, 0.0, Dsl4Variant::Canonical)?;
    let grid = [-1500.0, -1200.0, -800.0, -100.0, 50.0];
    let cmp = aht_breakdown_compare(&seq, &grid, 3, 256)?;
    for p in &cmp.points {
        println!(
            "ν = {:>7.0}: exact peak {:>8.1} Hz, orders 0..3 {:?}, gaps {:?}",
            p.nu,
            p.exact_peak_hz,
            p.order_peak_hz.iter().map(|f| f.round()).collect::<Vec<_>>(),
            cmp.bin_gaps(p)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("aht_breakdown example");
}
