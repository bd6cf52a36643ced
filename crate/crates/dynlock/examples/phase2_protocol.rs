// Phase-2 composition of eight-pulse blocks into a longer protocol, scored by
// the fidelity summed over acquisition windows.

use dynlock::search::{naive_protocol, phase2_extend, Phase2Config, SearchStrategy};
use dynlock::sequence::{adsl_like, block8, Phase};
use dynlock::spinops::Cluster;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    use Phase::*;
    let tau = 4e-6;
    let library = vec![
        block8(tau, [X, MinusY, Y, MinusX, MinusX, Y, MinusY, X])?,
        block8(tau, [Y, X, MinusX, MinusY, MinusY, MinusX, X, Y])?,
    ];
    let sys = Cluster::Tetra4.system(3000.0)?.with_uniform_offset(500.0);
    let cfg = Phase2Config::new(8.0 * 48e-6, 16.0 * 48e-6);
    let strategy = SearchStrategy::StochasticHillClimb { restarts: 4, iterations: 40, temperature: 0.02, seed: 7 };
    let out = phase2_extend(&sys, &library, &cfg, &strategy)?;
    println!(
        "protocol: {} pulses, {} windows, projected reward {:.4} (naive {:.4})",
        out.protocol.n_pulses(),
        out.protocol.n_acquires(),
        out.projected_reward,
        out.baseline_reward
    );
    assert!(out.projected_reward >= out.baseline_reward);
    println!("naive repetition: {} blocks", naive_protocol(&library[0], cfg.t_tgt)?.n_acquires());

    let big = adsl_like(tau)?;
    println!("67-block protocol: {} pulses, {} windows, {}τ", big.n_pulses(), big.n_acquires(), big.n_intervals());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("phase2_protocol example");
}
