use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::spinops::{second_moment, Cluster, Species, SpinSystem};
use crate::{Error, Result};

// μ0/4π · ħ / (2π) in SI, times (10⁹ m⁻¹)³: Hz·nm³ per (rad/s/T)²
const DIPOLAR_PREFACTOR: f64 = 1e-7 * 1.054_571_817e-34 / (2.0 * std::f64::consts::PI) * 1e27;

/// JSON description of a spin system.
///
/// Couplings come from one of `cluster`, `coords_nm` or `dipolar_hz`.
/// `linewidth_hz` rescales coordinate-derived couplings to a Gaussian FWHM.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    /// Species labels; defaults to `["H"]`.
    #[serde(default)]
    pub species: Vec<String>,
    /// Species label per spin; defaults to the first species for every spin.
    #[serde(default)]
    pub spins: Vec<String>,
    #[serde(default)]
    pub cluster: Option<String>,
    #[serde(default)]
    pub coords_nm: Option<Vec<[f64; 3]>>,
    #[serde(default)]
    pub dipolar_hz: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub j_hz: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub linewidth_hz: Option<f64>,
}

/// A loaded system with the coupling scale that was applied.
#[derive(Clone, Debug)]
pub struct LoadedSystem {
    pub system: SpinSystem,
    /// Multiplier on the physical `D_ij ∝ γ_iγ_j/r³`, or on the unit-κ cluster couplings.
    pub kappa: Option<f64>,
}

fn matrix(rows: &[Vec<f64>], n: usize, what: &str) -> Result<Array2<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!("{what} must be a {n}x{n} matrix")));
    }
    Ok(Array2::from_shape_fn((n, n), |(i, j)| rows[i][j]))
}

fn cluster_by_name(name: &str) -> Result<Cluster> {
    match name.to_ascii_lowercase().as_str() {
        "tetra4" => Ok(Cluster::Tetra4),
        "prism6" => Ok(Cluster::Prism6),
        "stacked_pentagons" | "pentagons10" => Ok(Cluster::StackedPentagons),
        other => Err(Error::Config(format!("unknown cluster '{other}' (tetra4, prism6, stacked_pentagons)"))),
    }
}

impl SystemFile {
    pub fn load(&self) -> Result<LoadedSystem> {
        let labels: Vec<String> = if self.species.is_empty() { vec!["H".into()] } else { self.species.clone() };
        let species: Vec<Species> = labels.iter().map(|l| Species::from_label(l)).collect();
        let sources = [self.cluster.is_some(), self.coords_nm.is_some(), self.dipolar_hz.is_some()];
        if sources.iter().filter(|&&s| s).count() > 1 {
            return Err(Error::Config("give at most one of cluster, coords_nm, dipolar_hz".into()));
        }
        let cluster = self.cluster.as_deref().map(cluster_by_name).transpose()?;
        let n = if let Some(c) = cluster {
            c.n_spins().max(self.spins.len())
        } else if let Some(c) = &self.coords_nm {
            c.len()
        } else if let Some(d) = &self.dipolar_hz {
            d.len()
        } else {
            self.spins.len()
        };
        let spin_species: Vec<usize> = if self.spins.is_empty() {
            vec![0; n]
        } else {
            if self.spins.len() != n {
                return Err(Error::Config(format!("spins lists {} entries but the couplings describe {n}", self.spins.len())));
            }
            self.spins
                .iter()
                .map(|l| labels.iter().position(|s| s == l).ok_or_else(|| Error::Config(format!("spin species '{l}' not declared"))))
                .collect::<Result<_>>()?
        };
        let mut system = SpinSystem::new(species.clone(), spin_species.clone())?;
        let mut kappa = None;

        let coords: Option<Vec<[f64; 3]>> = match cluster {
            Some(c) => {
                let mut xyz = c.coordinates();
                if n > xyz.len() {
                    // extra spins (e.g. a heteronucleus) sit at the centroid plus a unit offset
                    let m = xyz.len() as f64;
                    let cen = [0, 1, 2].map(|k| xyz.iter().map(|p| p[k]).sum::<f64>() / m);
                    for e in 0..(n - xyz.len()) {
                        xyz.push([cen[0], cen[1], cen[2] + 0.5 + e as f64]);
                    }
                }
                Some(xyz)
            }
            None => self.coords_nm.clone(),
        };
        if let Some(xyz) = coords {
            let mut d = Array2::zeros((n, n));
            for i in 0..n {
                for j in 0..n {
                    if i != j && spin_species[i] == spin_species[j] {
                        let r2: f64 = (0..3).map(|k| (xyz[i][k] - xyz[j][k]).powi(2)).sum();
                        if r2 == 0.0 {
                            return Err(Error::Config(format!("spins {i} and {j} coincide")));
                        }
                        let g = 2.0 * std::f64::consts::PI * 1e6 * species[spin_species[i]].gamma_mhz_per_t;
                        let base = if cluster.is_some() { 1.0 } else { DIPOLAR_PREFACTOR * g * g };
                        d[[i, j]] = base / r2.powf(1.5);
                    }
                }
            }
            system = system.with_dipolar(d)?;
            let mut scale = 1.0;
            if let Some(lw) = self.linewidth_hz {
                // linewidth of the species carried by spin 0
                let idx: Vec<usize> = (0..n).filter(|&i| spin_species[i] == spin_species[0]).collect();
                let sub = Array2::from_shape_fn((idx.len(), idx.len()), |(a, b)| system.dipolar()[[idx[a], idx[b]]]);
                let sub = SpinSystem::homonuclear(idx.len(), &labels[spin_species[0]])?.with_dipolar(sub)?;
                let m2 = second_moment(&sub)?;
                if m2 <= 0.0 {
                    return Err(Error::Config("linewidth scaling needs at least one dipolar pair".into()));
                }
                let sigma = lw / (2.0 * (2.0 * 2f64.ln()).sqrt());
                scale = 2.0 * std::f64::consts::PI * sigma / m2.sqrt();
            } else if cluster.is_some() {
                return Err(Error::Config("a built-in cluster needs linewidth_hz".into()));
            }
            system = system.scaled_couplings(scale);
            kappa = Some(scale);
        } else if let Some(rows) = &self.dipolar_hz {
            if self.linewidth_hz.is_some() {
                return Err(Error::Config("linewidth_hz applies to coordinates only".into()));
            }
            system = system.with_dipolar(matrix(rows, n, "dipolar_hz")?)?;
        }
        if let Some(rows) = &self.j_hz {
            system = system.with_j(matrix(rows, n, "j_hz")?)?;
        }
        Ok(LoadedSystem { system, kappa })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proton_pair_at_one_nanometre() {
        let f = SystemFile { coords_nm: Some(vec![[0.0; 3], [0.0, 0.0, 1.0]]), ..Default::default() };
        let s = f.load().unwrap().system;
        // μ0ħγ²/(4π r³)/2π with the CODATA proton γ
        let gamma: f64 = 2.675_221_874_4e8;
        let expected = 1e-7 * 1.054_571_817e-34 * gamma * gamma / (2.0 * std::f64::consts::PI) / 1e-27;
        assert!((s.dipolar()[[0, 1]] / expected - 1.0).abs() < 1e-6, "{}", s.dipolar()[[0, 1]]);
    }

    #[test]
    fn cluster_with_heteronucleus() {
        let f: SystemFile = serde_json::from_str(
            r#"{"species":["H","C"],"spins":["H","H","H","H","C"],"cluster":"tetra4","linewidth_hz":3000,
                "j_hz":[[0,0,0,0,150],[0,0,0,0,100],[0,0,0,0,120],[0,0,0,0,80],[150,100,120,80,0]]}"#,
        )
        .unwrap();
        let l = f.load().unwrap();
        let reference = Cluster::Tetra4.system(3000.0).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((l.system.dipolar()[[i, j]] - reference.dipolar()[[i, j]]).abs() < 1e-9);
            }
        }
        assert_eq!(l.system.j_scale(), 150.0);
    }

    #[test]
    fn conflicting_sources_rejected() {
        let f = SystemFile { cluster: Some("prism6".into()), dipolar_hz: Some(vec![]), ..Default::default() };
        assert!(f.load().is_err());
    }
}
