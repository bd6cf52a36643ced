// Locking field δ(ν) of DSL-4 over one offset period and the predicted dips
// classified on a 6-spin cluster.

use dynlock::effective::{classify_dips, dip_predictions, LockingFieldCalc};
use dynlock::rad_to_hz;
use dynlock::sequence::{dsl4, Dsl4Variant};
use dynlock::spinops::Cluster;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let seq = dsl4(20e-6, 0.0, Dsl4Variant::Canonical)?;
    let calc = LockingFieldCalc::new(&seq)?;
    let grid: Vec<f64> = (0..=200).map(|i| -25_000.0 + 250.0 * i as f64).collect();
    let curve = calc.sweep(&grid)?;
    for f in curve.iter().step_by(20) {
        println!("ν = {:>8.0} Hz  |δ|/2π = {:>8.1} Hz  tilt = {:.3} rad", f.nu, rad_to_hz(f.magnitude()), f.tilt);
    }
    // one offset period is 1/τ = 50 kHz
    assert!((curve[0].magnitude() - curve[200].magnitude()).abs() < 1e-6 * curve[0].magnitude().max(1.0));

    let sys = Cluster::Prism6.system(3000.0)?;
    let mut dips = dip_predictions(&calc, &curve, 1);
    classify_dips(&mut dips, &seq, &sys, 0.05)?;
    for d in &dips {
        println!("dip m = {:+} at {:>9.1} Hz: {:?}", d.m, d.nu, d.class.unwrap());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("locking_field example");
}
