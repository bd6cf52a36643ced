use ndarray::Array2;
use std::f64::consts::PI;

use super::{collective_operator, dipolar_hamiltonian, Axis, SpinSystem};
use crate::Result;

/// Built-in homonuclear cluster geometries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cluster {
    /// Irregular 4-spin tetrahedron.
    Tetra4,
    /// Two stacked equilateral triangles.
    Prism6,
    /// Two stacked regular pentagons.
    StackedPentagons,
}

impl Cluster {
    pub fn n_spins(self) -> usize {
        match self {
            Cluster::Tetra4 => 4,
            Cluster::Prism6 => 6,
            Cluster::StackedPentagons => 10,
        }
    }

    /// Coordinates in arbitrary length units.
    pub fn coordinates(self) -> Vec<[f64; 3]> {
        let ring = |m: usize, z: f64| -> Vec<[f64; 3]> {
            (0..m)
                .map(|k| {
                    let a = 2.0 * PI * k as f64 / m as f64;
                    [a.cos(), a.sin(), z]
                })
                .collect()
        };
        match self {
            Cluster::Tetra4 => vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.2, 0.0], [0.3, 0.4, 0.9]],
            Cluster::Prism6 => [ring(3, 0.0), ring(3, 1.0)].concat(),
            Cluster::StackedPentagons => [ring(5, 0.0), ring(5, 1.0)].concat(),
        }
    }

    /// Proton cluster with couplings scaled to the given Gaussian FWHM linewidth (Hz).
    pub fn system(self, linewidth_hz: f64) -> Result<SpinSystem> {
        let (sys, _) = system_from_coordinates(&self.coordinates(), "H", Some(linewidth_hz), 1.0)?;
        Ok(sys)
    }
}

/// `D_ij = κ / r_ij³` (Hz). With a target linewidth, κ is chosen so that the
/// Gaussian FWHM `2·sqrt(2 ln 2)·sqrt(M2)/2π` matches it. Returns the system and κ.
pub fn system_from_coordinates(
    coords: &[[f64; 3]],
    label: &str,
    linewidth_hz: Option<f64>,
    kappa: f64,
) -> Result<(SpinSystem, f64)> {
    let n = coords.len();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let r2: f64 = (0..3).map(|k| (coords[i][k] - coords[j][k]).powi(2)).sum();
                d[[i, j]] = 1.0 / r2.powf(1.5);
            }
        }
    }
    let base = SpinSystem::homonuclear(n, label)?.with_dipolar(d.clone())?;
    let kappa = match linewidth_hz {
        None => kappa,
        Some(lw) => {
            let m2 = second_moment(&base)?;
            let sigma = lw / (2.0 * (2.0 * 2f64.ln()).sqrt());
            let target = (2.0 * PI * sigma).powi(2);
            if m2 > 0.0 {
                (target / m2).sqrt()
            } else {
                kappa
            }
        }
    };
    let sys = SpinSystem::homonuclear(n, label)?.with_dipolar(d * kappa)?;
    Ok((sys, kappa))
}

/// Van Vleck second moment `−Tr([D, I_x]²)/Tr(I_x²)` in (rad/s)².
pub fn second_moment(system: &SpinSystem) -> Result<f64> {
    let h = dipolar_hamiltonian(system);
    let x = collective_operator(system, Axis::X, None)?;
    let c = h.commutator(&x);
    let num = -c.dot(&c).trace().re;
    let den = x.dot(&x).trace().re;
    Ok(num / den)
}
