// Offset round trip ω₀ → ω_root → ω₀ on a 6-spin cluster, through a
// dipolar-active and a dipolar-inert dip.

use dynlock::engine::{run_offset_schedule, InitialState, OffsetSchedule, Sampling, SimulationConfig};
use dynlock::sequence::{dsl4, Dsl4Variant};
use dynlock::spinops::Cluster;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let seq = dsl4(20e-6, 0.0, Dsl4Variant::Canonical)?;
    let nu0 = -3500.0;
    for (label, root) in [("active", -4397.3), ("inert", 0.0)] {
        for cycles in [100usize, 300] {
            let leg = cycles as f64 * seq.cycle_duration() / 2.0;
            let schedule = OffsetSchedule::ramps("H", nu0, &[(leg, root), (leg, nu0)]);
            let sys = Cluster::Prism6.system(3000.0)?.with_uniform_offset(nu0);
            let cfg = SimulationConfig::new(sys, seq.clone(), cycles)
                .with_initial(InitialState::AlongLockingAxis)
                .with_sampling(Sampling::PerCycle)
                .with_schedule(schedule);
            let out = run_offset_schedule(&cfg)?;
            println!("{label:>6} root {root:>8.1} Hz, {cycles:>4} cycles: recovered {:.3}", out.recovered_polarization);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("adrf example");
}
