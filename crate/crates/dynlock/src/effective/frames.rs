use crate::sequence::{validate_cyclic, PulseSequence};
use crate::spinops::{LocalUnitary, Mat2, SpinSystem};
use crate::{hz_to_rad, Error, Result};

/// Per-channel toggling-frame data in the 2×2 representation.
#[derive(Clone, Debug)]
pub(crate) struct ChannelFrames {
    /// `R_k = P_n ⋯ P_k` for each interval.
    pub rotations: Vec<Mat2>,
    /// Toggled z axis `R_k ẑ` as a unit vector.
    pub axes: Vec<[f64; 3]>,
}

impl ChannelFrames {
    pub fn new(seq: &PulseSequence, channel: &str) -> Self {
        let (_, ends) = seq.interval_rotations(channel);
        let n = ends.len();
        let mut rotations = vec![Mat2::identity(); n];
        let mut acc = Mat2::identity();
        for k in (0..n).rev() {
            acc = acc * ends[k];
            rotations[k] = acc;
        }
        let axes = rotations
            .iter()
            .map(|r| {
                let (_, a) = (*r * Mat2::spin(crate::spinops::Axis::Z) * r.dagger()).pauli();
                [2.0 * a[0].re, 2.0 * a[1].re, 2.0 * a[2].re]
            })
            .collect();
        ChannelFrames { rotations, axes }
    }

    pub fn n(&self) -> usize {
        self.rotations.len()
    }

    /// `Q_k = exp(−i ωτ I'_{z,k})` for every interval.
    pub fn q_factors(&self, omega: f64, tau: f64) -> Vec<Mat2> {
        self.axes.iter().map(|a| Mat2::rotation(*a, omega * tau)).collect()
    }

    /// `∏_k Q_k`, later factors to the left.
    pub fn q_product(&self, omega: f64, tau: f64) -> Mat2 {
        self.q_factors(omega, tau).into_iter().fold(Mat2::identity(), |acc, q| q * acc)
    }

    /// Dressing `(∏_{l≥k} Q_l) R_k` per interval.
    pub fn dressings(&self, omega: f64, tau: f64) -> Vec<Mat2> {
        let q = self.q_factors(omega, tau);
        let n = self.n();
        let mut out = vec![Mat2::identity(); n];
        let mut acc = Mat2::identity();
        for k in (0..n).rev() {
            acc = acc * q[k];
            out[k] = acc * self.rotations[k];
        }
        out
    }
}

pub(crate) fn require_ideal_cyclic(seq: &PulseSequence) -> Result<()> {
    if seq.has_finite_pulses() {
        return Err(Error::Unsupported(
            "toggling-frame analysis needs ideal pulses; finite widths are handled by the engine".into(),
        ));
    }
    let c = validate_cyclic(seq);
    if !c.cyclic {
        return Err(Error::Config(format!("sequence is not cyclic (residual {:e})", c.residual)));
    }
    Ok(())
}

/// Channel label driving each species of `system`.
pub(crate) fn species_channels(seq: &PulseSequence, system: &SpinSystem) -> Result<Vec<Option<String>>> {
    for c in &seq.channels {
        system.species_index(c)?;
    }
    Ok(system
        .species()
        .iter()
        .map(|s| seq.channels.iter().find(|c| **c == s.label).cloned())
        .collect())
}

/// Per-species frames; species without a channel see no pulses.
pub(crate) fn system_frames(seq: &PulseSequence, system: &SpinSystem) -> Result<Vec<ChannelFrames>> {
    let chans = species_channels(seq, system)?;
    Ok(chans
        .iter()
        .map(|c| match c {
            Some(name) => ChannelFrames::new(seq, name),
            None => ChannelFrames::new(&seq.idealized_without_pulses(), "H"),
        })
        .collect())
}

/// Assemble per-species 2×2 factors into a product unitary over the spins.
pub(crate) fn local_from_species(system: &SpinSystem, per_species: &[Mat2]) -> LocalUnitary {
    LocalUnitary { factors: system.spin_species().iter().map(|&s| per_species[s]).collect() }
}

pub(crate) fn species_omegas(system: &SpinSystem) -> Vec<f64> {
    system.offsets().iter().map(|&nu| hz_to_rad(nu)).collect()
}
