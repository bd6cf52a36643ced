use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_MAX_SPINS: usize = 12;

/// A nuclear species with its gyromagnetic ratio (MHz/T).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub label: String,
    pub gamma_mhz_per_t: f64,
}

impl Species {
    pub fn new(label: &str, gamma_mhz_per_t: f64) -> Self {
        Species { label: label.to_string(), gamma_mhz_per_t }
    }

    /// Known species by label; unknown labels get γ = 1.
    pub fn from_label(label: &str) -> Self {
        let g = match label {
            "H" | "1H" => 42.577_478_5,
            "C" | "13C" => 10.708_4,
            "N" | "15N" => -4.316_4,
            "F" | "19F" => 40.078,
            "P" | "31P" => 17.235,
            _ => 1.0,
        };
        Species::new(label, g)
    }
}

/// Spin cluster: species per spin, couplings in Hz and per-species offsets in Hz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinSystem {
    species: Vec<Species>,
    spin_species: Vec<usize>,
    dipolar: Array2<f64>,
    j: Array2<f64>,
    offsets: Vec<f64>,
}

impl SpinSystem {
    /// `n` uncoupled spins of one species at zero offset.
    pub fn homonuclear(n: usize, label: &str) -> Result<Self> {
        Self::new(vec![Species::from_label(label)], vec![0; n])
    }

    /// Uncoupled spins; `spin_species[i]` indexes into `species`.
    pub fn new(species: Vec<Species>, spin_species: Vec<usize>) -> Result<Self> {
        Self::with_cap(species, spin_species, DEFAULT_MAX_SPINS)
    }

    pub fn with_cap(species: Vec<Species>, spin_species: Vec<usize>, cap: usize) -> Result<Self> {
        let n = spin_species.len();
        if n == 0 {
            return Err(Error::Config("spin system needs at least one spin".into()));
        }
        if n > cap {
            return Err(Error::Config(format!("{n} spins exceeds the configured cap of {cap}")));
        }
        if let Some(bad) = spin_species.iter().find(|&&s| s >= species.len()) {
            return Err(Error::Config(format!("species index {bad} out of range")));
        }
        for (a, s) in species.iter().enumerate() {
            if species[..a].iter().any(|t| t.label == s.label) {
                return Err(Error::Config(format!("duplicate species label {}", s.label)));
            }
        }
        let ns = species.len();
        Ok(SpinSystem {
            species,
            spin_species,
            dipolar: Array2::zeros((n, n)),
            j: Array2::zeros((n, n)),
            offsets: vec![0.0; ns],
        })
    }

    pub fn n_spins(&self) -> usize {
        self.spin_species.len()
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn spin_species(&self) -> &[usize] {
        &self.spin_species
    }

    pub fn dipolar(&self) -> &Array2<f64> {
        &self.dipolar
    }

    pub fn j_couplings(&self) -> &Array2<f64> {
        &self.j
    }

    /// Per-species offsets in Hz, ordered as [`Self::species`].
    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn species_index(&self, label: &str) -> Result<usize> {
        self.species
            .iter()
            .position(|s| s.label == label)
            .ok_or_else(|| Error::Config(format!("unknown species '{label}'")))
    }

    /// 1.0 for spins of species `s`, 0.0 otherwise.
    pub fn species_mask(&self, s: usize) -> Vec<f64> {
        self.spin_species.iter().map(|&t| if t == s { 1.0 } else { 0.0 }).collect()
    }

    pub fn spins_of(&self, s: usize) -> Vec<usize> {
        (0..self.n_spins()).filter(|&i| self.spin_species[i] == s).collect()
    }

    pub fn set_dipolar(&mut self, i: usize, j: usize, hz: f64) -> Result<()> {
        self.check_pair(i, j)?;
        if self.spin_species[i] != self.spin_species[j] {
            return Err(Error::Config(format!("dipolar coupling {i}-{j} joins different species")));
        }
        self.dipolar[[i, j]] = hz;
        self.dipolar[[j, i]] = hz;
        Ok(())
    }

    pub fn set_j(&mut self, i: usize, j: usize, hz: f64) -> Result<()> {
        self.check_pair(i, j)?;
        if self.spin_species[i] == self.spin_species[j] {
            return Err(Error::Config(format!("J coupling {i}-{j} joins spins of the same species")));
        }
        self.j[[i, j]] = hz;
        self.j[[j, i]] = hz;
        Ok(())
    }

    /// Replace the whole dipolar matrix (validated).
    pub fn with_dipolar(mut self, d: Array2<f64>) -> Result<Self> {
        let n = self.n_spins();
        if d.dim() != (n, n) {
            return Err(Error::Config(format!("dipolar matrix must be {n}x{n}")));
        }
        self.dipolar.fill(0.0);
        for i in 0..n {
            if d[[i, i]] != 0.0 {
                return Err(Error::Config(format!("dipolar diagonal entry {i} must be zero")));
            }
            for j in 0..i {
                if (d[[i, j]] - d[[j, i]]).abs() > 1e-12 * d[[i, j]].abs().max(1.0) {
                    return Err(Error::Config(format!("dipolar matrix not symmetric at {i},{j}")));
                }
                if d[[i, j]] != 0.0 {
                    self.set_dipolar(i, j, d[[i, j]])?;
                }
            }
        }
        Ok(self)
    }

    /// Replace the whole J matrix (validated).
    pub fn with_j(mut self, jm: Array2<f64>) -> Result<Self> {
        let n = self.n_spins();
        if jm.dim() != (n, n) {
            return Err(Error::Config(format!("J matrix must be {n}x{n}")));
        }
        self.j.fill(0.0);
        for i in 0..n {
            for j in 0..i {
                if (jm[[i, j]] - jm[[j, i]]).abs() > 1e-12 * jm[[i, j]].abs().max(1.0) {
                    return Err(Error::Config(format!("J matrix not symmetric at {i},{j}")));
                }
                if jm[[i, j]] != 0.0 {
                    self.set_j(i, j, jm[[i, j]])?;
                }
            }
        }
        Ok(self)
    }

    pub fn with_offset(mut self, label: &str, nu_hz: f64) -> Result<Self> {
        let s = self.species_index(label)?;
        self.offsets[s] = nu_hz;
        Ok(self)
    }

    /// Same offset for every species.
    pub fn with_uniform_offset(mut self, nu_hz: f64) -> Self {
        self.offsets.iter_mut().for_each(|o| *o = nu_hz);
        self
    }

    pub fn with_offsets(mut self, offsets: &[f64]) -> Result<Self> {
        if offsets.len() != self.species.len() {
            return Err(Error::Config("one offset per species required".into()));
        }
        self.offsets = offsets.to_vec();
        Ok(self)
    }

    /// Every coupling multiplied by `s`.
    pub fn scaled_couplings(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.dipolar.mapv_inplace(|v| v * s);
        out.j.mapv_inplace(|v| v * s);
        out
    }

    pub(crate) fn without_j(&self) -> Self {
        let mut out = self.clone();
        out.j.fill(0.0);
        out
    }

    pub fn without_couplings(&self) -> Self {
        self.scaled_couplings(0.0)
    }

    pub fn has_couplings(&self) -> bool {
        self.dipolar.iter().chain(self.j.iter()).any(|&v| v != 0.0)
    }

    /// Largest |J_ij| in Hz.
    pub fn j_scale(&self) -> f64 {
        self.j.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Structural checks, re-run after deserialization.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_spins();
        let rebuilt = SpinSystem::new(self.species.clone(), self.spin_species.clone())?
            .with_dipolar(self.dipolar.clone())?
            .with_j(self.j.clone())?;
        if self.offsets.len() != self.species.len() || rebuilt.n_spins() != n {
            return Err(Error::Config("offsets must list one value per species".into()));
        }
        Ok(())
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        let n = self.n_spins();
        if i >= n || j >= n || i == j {
            return Err(Error::Config(format!("invalid spin pair {i},{j} for {n} spins")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_cross_species_dipolar() {
        let mut s = SpinSystem::new(
            vec![Species::from_label("H"), Species::from_label("C")],
            vec![0, 0, 1],
        )
        .unwrap();
        assert!(s.set_dipolar(0, 2, 10.0).is_err());
        assert!(s.set_j(0, 1, 10.0).is_err());
        s.set_j(0, 2, 100.0).unwrap();
        assert_eq!(s.j_couplings()[[2, 0]], 100.0);
    }

    #[test]
    fn cap_is_enforced() {
        assert!(SpinSystem::homonuclear(13, "H").is_err());
        assert!(SpinSystem::with_cap(vec![Species::from_label("H")], vec![0; 13], 13).is_ok());
    }

    #[test]
    fn unknown_species_is_config_error() {
        let s = SpinSystem::homonuclear(2, "H").unwrap();
        assert!(matches!(s.species_index("C"), Err(Error::Config(_))));
    }
}
