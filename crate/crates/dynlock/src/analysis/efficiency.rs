use serde::{Deserialize, Serialize};

use crate::effective::{LockingField, LockingFieldCalc};
use crate::engine::{run_simulation, InitialState, Sampling, SimulationConfig, Trajectory};
use crate::spinops::SpinSystem;
use crate::{Error, Result};

/// Simulated locking efficiency at one offset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LockingEfficiency {
    pub nu: f64,
    pub value: f64,
    /// `|δ|` vanished and `value` is the terminal `|⟨I⟩|` fraction.
    pub flagged: bool,
    pub delta: LockingField,
}

/// Per-cycle samples of the locked component: `⟨I⟩·δ̂` for the driven species.
fn projected(traj: &Trajectory, label: &str, dir: [f64; 3]) -> Result<Vec<f64>> {
    let s = traj.species(label)?;
    Ok((0..s.x.len()).map(|k| s.x[k] * dir[0] + s.y[k] * dir[1] + s.z[k] * dir[2]).collect())
}

fn dc(samples: &[f64]) -> f64 {
    (samples.iter().sum::<f64>() / samples.len() as f64).abs()
}

/// `L_S`: magnetization starts along the locking axis, is sampled once per cycle,
/// and the zero-frequency bin of its projection on `δ̂` is compared with the same
/// quantity for uncoupled spins.
pub fn locking_efficiency_sim(cfg: &SimulationConfig) -> Result<LockingEfficiency> {
    let label = cfg
        .sequence
        .channels
        .first()
        .cloned()
        .ok_or_else(|| Error::Config("sequence has no channel".into()))?;
    let s = cfg.system.species_index(&label)?;
    let nu = cfg.system.offsets()[s];
    let calc = LockingFieldCalc::for_channel(&cfg.sequence.idealized(), &label)?;
    let delta = calc.principal(nu);
    let mut run = cfg.clone();
    run.initial_state = InitialState::AlongLockingAxis;
    run.initial_species = Some(label.clone());
    run.sampling = Sampling::PerCycle;
    run.per_spin = false;
    run.offset_schedule.clear();
    let traj = run_simulation(&run)?;

    if delta.principal_angle.abs() < 1e-9 {
        let m = traj.species(&label)?.magnitude();
        return Ok(LockingEfficiency { nu, value: m[m.len() - 1] / m[0], flagged: true, delta });
    }
    let dir = delta.direction();
    let value = dc(&projected(&traj, &label, dir)?);

    let mut reference = run.clone();
    reference.system = SpinSystem::new(vec![cfg.system.species()[s].clone()], vec![0])?.with_offsets(&[nu])?;
    reference.sequence = cfg.sequence.clone();
    reference.sequence.channels = vec![label.clone()];
    reference.sequence.events.retain(|e| match e {
        crate::sequence::PulseEvent::Pulse { channel, .. } => *channel == label,
        _ => true,
    });
    let r = dc(&projected(&run_simulation(&reference)?, &label, dir)?);
    Ok(LockingEfficiency { nu, value: if r > 0.0 { value / r } else { 0.0 }, flagged: false, delta })
}

/// `L_S` with the default length of 256 cycles.
pub fn locking_efficiency_default(system: &SpinSystem, seq: &crate::sequence::PulseSequence) -> Result<LockingEfficiency> {
    locking_efficiency_sim(&SimulationConfig::new(system.clone(), seq.clone(), 256))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{dsl4, Dsl4Variant};
    use crate::spinops::Cluster;

    #[test]
    fn uncoupled_system_is_fully_locked() {
        let seq = dsl4(20e-6, 0.0, Dsl4Variant::Canonical).unwrap();
        for nu in [-2900.0, 1200.0, 7000.0] {
            let sys = SpinSystem::homonuclear(3, "H").unwrap().with_uniform_offset(nu);
            let e = locking_efficiency_sim(&SimulationConfig::new(sys, seq.clone(), 64)).unwrap();
            assert!((e.value - 1.0).abs() < 1e-6, "{nu}: {}", e.value);
            assert!(!e.flagged);
        }
    }

    #[test]
    fn stronger_coupling_lowers_efficiency() {
        let seq = dsl4(20e-6, 0.0, Dsl4Variant::Canonical).unwrap();
        let sys = Cluster::Prism6.system(3000.0).unwrap().with_uniform_offset(-2900.0);
        let a = locking_efficiency_sim(&SimulationConfig::new(sys.clone(), seq.clone(), 128)).unwrap();
        let b = locking_efficiency_sim(&SimulationConfig::new(sys.scaled_couplings(2.0), seq, 128)).unwrap();
        assert!(b.value < a.value, "{} vs {}", a.value, b.value);
    }

    #[test]
    fn zero_field_is_flagged() {
        let seq = dsl4(20e-6, 0.0, Dsl4Variant::Canonical).unwrap();
        let sys = Cluster::Tetra4.system(3000.0).unwrap();
        let e = locking_efficiency_sim(&SimulationConfig::new(sys, seq, 16)).unwrap();
        assert!(e.flagged);
    }
}
