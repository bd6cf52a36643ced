// Polarization seeded on one spin spreads over the cluster under DSL-4.

use dynlock::engine::{per_spin_traces, InitialState, Sampling, SimulationConfig};
use dynlock::sequence::{dsl4, Dsl4Variant};
use dynlock::spinops::{Axis, Cluster};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let seq = dsl4(20e-6, 0.0, Dsl4Variant::Canonical)?;
    let sys = Cluster::Prism6.system(3000.0)?.with_uniform_offset(-1400.0);
    let cfg = SimulationConfig::new(sys, seq, 40)
        .with_initial(InitialState::SingleSpin { spin: 0, axis: Axis::X })
        .with_sampling(Sampling::PerCycle);
    let traj = per_spin_traces(&cfg)?;
    let spins = traj.per_spin.as_ref().ok_or("per-spin traces missing")?;
    for k in [0, 10, 20, 40] {
        let row: Vec<String> = spins.iter().map(|s| format!("{:+.3}", s[k])).collect();
        println!("cycle {k:>3}: {}", row.join(" "));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("per_spin_thermalization example");
}
