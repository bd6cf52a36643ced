// Exhaustive Phase-1 search over single pulses and free evolution on a 4-spin
// cluster, compared with WaHuHa.

use dynlock::search::{phase1_search, wahuha_actions, Phase1Config, Phase1Env, Phase1Target, SearchStrategy};
use dynlock::spinops::Cluster;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let sys = Cluster::Tetra4.system(3000.0)?.with_uniform_offset(500.0);
    let cfg = Phase1Config { tau: 2e-6, n_max: 6, f_opt: 0.999, top_k: 3 };
    let env = Phase1Env::new(&sys, &Phase1Target::DipolarDecoupling, &cfg)?;
    let baseline = env.evaluate(&wahuha_actions())?;
    println!("WaHuHa fidelity {baseline:.6}");

    let out = phase1_search(&sys, &Phase1Target::DipolarDecoupling, &cfg, &SearchStrategy::Exhaustive { depth: 6 })?;
    println!("{} candidates evaluated", out.evaluated);
    for w in &out.winners {
        println!("F = {:.8}  reward = {:.3}  {:?}", w.fidelity, w.reward, w.actions);
    }
    assert!(out.winners[0].fidelity >= baseline);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("phase1_search example");
}
