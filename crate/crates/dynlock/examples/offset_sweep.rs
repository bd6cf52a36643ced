// Parallel offset sweep with the simulated locking efficiency and the
// effective-Hamiltonian report joined per point.

use dynlock::analysis::{linear_grid, local_minima, offset_sweep, SweepOptions};
use dynlock::engine::SimulationConfig;
use dynlock::sequence::{dsl4, Dsl4Variant};
use dynlock::spinops::Cluster;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let seq = dsl4(20e-6, 0.0, Dsl4Variant::Canonical)?;
    let base = SimulationConfig::new(Cluster::Tetra4.system(3000.0)?, seq, 64);
    let grid = linear_grid(-6000.0, 0.0, 13);
    let opts = SweepOptions { efficiency: true, report: true, keep_spectrum: false, ..SweepOptions::default() };
    let res = offset_sweep(&base, &grid, &opts)?;
    for p in &res.points {
        let r = p.report.as_ref().unwrap();
        println!("ν = {:>7.0}  L_S = {:.3}  L_C = {:.3}  peak = {:?}", p.nu, p.l_s.unwrap_or(f64::NAN), r.l_c, p.peak_hz);
    }
    let minima = local_minima(&res.l_s());
    println!("local minima of L_S at {:?}", minima.iter().map(|&i| grid[i]).collect::<Vec<_>>());
    println!("{} computed, {} cached, {} failed", res.stats.computed, res.stats.cached, res.stats.failed);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("offset_sweep example");
}
