// 4 ¹H + 1 ¹³C under synchronized DSL-4 with 2:1 pulse widths. Polarization
// moves to carbon when the two locking fields have equal magnitude.

use dynlock::effective::LockingFieldCalc;
use dynlock::engine::{polarization_enhancement, run_two_species, InitialState, Sampling, SimulationConfig};
use dynlock::rad_to_hz;
use dynlock::sequence::{dsl4_channels, Dsl4Variant};
use dynlock::spinops::{Cluster, Species, SpinSystem};

fn cluster() -> Result<SpinSystem, dynlock::Error> {
    let h = Cluster::Tetra4.system(3000.0)?;
    let mut sys = SpinSystem::new(vec![Species::from_label("H"), Species::from_label("C")], vec![0, 0, 0, 0, 1])?;
    for i in 0..4 {
        for j in 0..i {
            sys.set_dipolar(i, j, h.dipolar()[[i, j]])?;
        }
    }
    for (i, j) in [150.0, 100.0, 120.0, 80.0].into_iter().enumerate() {
        sys.set_j(i, 4, j)?;
    }
    Ok(sys)
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let seq = dsl4_channels(6e-6, &[("H", 1e-6), ("C", 2e-6)], Dsl4Variant::Canonical)?;
    let hc = LockingFieldCalc::for_channel(&seq.idealized(), "H")?;
    let cc = LockingFieldCalc::for_channel(&seq.idealized(), "C")?;
    let gamma_ratio = 42.577_478_5 / 10.708_4;
    for (nh, nc) in [(-1500.0, -1500.0), (-1500.0, -6000.0)] {
        let sys = cluster()?.with_offset("H", nh)?.with_offset("C", nc)?;
        let cfg = SimulationConfig::new(sys.clone(), seq.clone(), 300)
            .with_initial(InitialState::AlongLockingAxis)
            .with_initial_species("H")
            .with_sampling(Sampling::PerCycle);
        let traj = run_two_species(&cfg)?;
        let enh = polarization_enhancement(&traj, &sys, "H", "C")?;
        let max = enh.iter().cloned().fold(0.0, f64::max);
        println!(
            "ν_H = {nh}, ν_C = {nc}: |δ_H| = {:.0} Hz, |δ_C| = {:.0} Hz, max enhancement {max:.3} ({:.0}% of γH/γC)",
            rad_to_hz(hc.principal(nh).magnitude()),
            rad_to_hz(cc.principal(nc).magnitude()),
            100.0 * max / gamma_ratio
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("heteronuclear_transfer example");
}
