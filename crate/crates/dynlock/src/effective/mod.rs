//! Toggling frames, locking field, dressed dipolar Hamiltonian and the locking models.

mod frames;
mod locking;
mod magnus;
mod models;

pub use locking::{locking_field, LockingField, LockingFieldCalc};
pub use magnus::{
    bch_effective, dressed_dipolar_propagator, locking_term, magnus_dipolar, magnus_offset_expansion,
    q_product_operator, BchEffective, DipolarMagnus, OffsetMagnus,
};
pub use models::{
    classify_dips, dip_predictions, effective_report, fit_alpha, locking_models, DipClass, DipPrediction,
    EffectiveHamiltonianReport, LockingModel, ReportRecord,
};

use crate::sequence::PulseSequence;
use crate::spinops::{collective_operator, coupling_hamiltonian, Axis, Operator, SpinSystem};
use crate::Result;

/// Toggling-frame operators of one interval.
#[derive(Clone, Debug)]
pub struct TogglingFrame {
    /// 1-based interval index.
    pub k: usize,
    /// `I'_{z,k}` per species, in the order of `system.species()`.
    pub iz_toggled: Vec<Operator>,
    /// `D'_k` (homonuclear plus heteronuclear couplings).
    pub d_toggled: Operator,
    /// `D̃'_k = (∏_{l≥k} Q_l) D'_k (∏_{l≥k} Q_l)^{-1}`.
    pub d_dressed: Operator,
    /// `Q_k = exp(−iτ Σ_s ω_s I'_{z,k,s})`.
    pub q: Operator,
}

/// Dense toggling-frame operators for every interval at the system's offsets.
pub fn toggling_frames(seq: &PulseSequence, system: &SpinSystem) -> Result<Vec<TogglingFrame>> {
    frames::require_ideal_cyclic(seq)?;
    let per_species = frames::system_frames(seq, system)?;
    let omegas = frames::species_omegas(system);
    let n = per_species[0].n();
    let d = coupling_hamiltonian(system);
    let z: Vec<Operator> = system
        .species()
        .iter()
        .map(|s| collective_operator(system, Axis::Z, Some(&s.label)))
        .collect::<Result<_>>()?;
    let qs: Vec<Vec<_>> = per_species.iter().zip(&omegas).map(|(f, &w)| f.q_factors(w, seq.tau)).collect();
    let dress: Vec<Vec<_>> = per_species.iter().zip(&omegas).map(|(f, &w)| f.dressings(w, seq.tau)).collect();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let rot: Vec<_> = per_species.iter().map(|f| f.rotations[k]).collect();
        let r = frames::local_from_species(system, &rot);
        let g = frames::local_from_species(system, &dress.iter().map(|v| v[k]).collect::<Vec<_>>());
        let q = frames::local_from_species(system, &qs.iter().map(|v| v[k]).collect::<Vec<_>>());
        out.push(TogglingFrame {
            k: k + 1,
            iz_toggled: z.iter().map(|op| r.conjugate_operator(op)).collect(),
            d_toggled: r.conjugate_operator(&d),
            d_dressed: g.conjugate_operator(&d),
            q: Operator::new(q.to_dense())?,
        });
    }
    Ok(out)
}
