//! Cycle propagators and observable evaluation.

use std::collections::HashMap;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use super::compile::{Seg, Timeline};
use crate::spinops::{coupling_hamiltonian, weighted_spin_sum, z_diagonal, Axis, HermitianEigen, LocalUnitary, SpinSystem};
use crate::{hz_to_rad, Result};

/// Propagators of one cycle: the full `U(t_c)` and the partial products at each mark.
#[derive(Clone, Debug)]
pub(crate) struct CycleProps {
    pub u: Array2<C64>,
    pub marks: Vec<Array2<C64>>,
}

/// Builds cycle propagators with cached free-evolution and pulse segments.
pub(crate) struct CycleBuilder<'a> {
    system: &'a SpinSystem,
    coupling: Array2<C64>,
    coupled: bool,
    coupling_eig: Option<HermitianEigen>,
    species_z: Vec<Array1<f64>>,
    free_cache: HashMap<u64, Array2<C64>>,
    driven_cache: HashMap<Vec<u64>, Array2<C64>>,
}

impl<'a> CycleBuilder<'a> {
    pub fn new(system: &'a SpinSystem) -> Self {
        let n = system.n_spins();
        let species_z = (0..system.species().len()).map(|s| z_diagonal(n, &system.species_mask(s))).collect();
        CycleBuilder {
            system,
            coupling: coupling_hamiltonian(system).into_matrix(),
            coupled: system.has_couplings(),
            coupling_eig: None,
            species_z,
            free_cache: HashMap::new(),
            driven_cache: HashMap::new(),
        }
    }

    fn coupling_propagator(&mut self, t: f64) -> Result<&Array2<C64>> {
        if self.coupling_eig.is_none() {
            self.coupling_eig = Some(HermitianEigen::of_matrix(&self.coupling)?);
        }
        let eig = self.coupling_eig.as_ref().expect("eigensystem");
        Ok(self.free_cache.entry(t.to_bits()).or_insert_with(|| eig.propagator(t)))
    }

    fn offset_phases(&self, offsets: &[f64], t: f64) -> Array1<C64> {
        let d = 1usize << self.system.n_spins();
        let mut acc = Array1::<f64>::zeros(d);
        for (s, z) in self.species_z.iter().enumerate() {
            acc.scaled_add(hz_to_rad(offsets[s]), z);
        }
        acc.mapv(|w| C64::from_polar(1.0, -w * t))
    }

    fn driven_propagator(&mut self, offsets: &[f64], duration: f64, fields: &[Option<([f64; 3], f64)>]) -> Result<Array2<C64>> {
        let mut key: Vec<u64> = offsets.iter().map(|o| o.to_bits()).collect();
        key.push(duration.to_bits());
        for f in fields {
            match f {
                Some((ax, w)) => key.extend([ax[0].to_bits(), ax[1].to_bits(), ax[2].to_bits(), w.to_bits()]),
                None => key.push(u64::MAX),
            }
        }
        if let Some(p) = self.driven_cache.get(&key) {
            return Ok(p.clone());
        }
        let n = self.system.n_spins();
        let mut h = self.coupling.clone();
        for (s, z) in self.species_z.iter().enumerate() {
            let w = hz_to_rad(offsets[s]);
            for (k, zk) in z.iter().enumerate() {
                h[[k, k]] += C64::new(w * zk, 0.0);
            }
        }
        for (s, f) in fields.iter().enumerate() {
            if let Some((ax, w1)) = f {
                let mask = self.system.species_mask(s);
                for (a, axis) in [Axis::X, Axis::Y, Axis::Z].into_iter().enumerate() {
                    if ax[a] != 0.0 {
                        h.scaled_add(C64::new(w1 * ax[a], 0.0), &weighted_spin_sum(n, axis, &mask));
                    }
                }
            }
        }
        let p = HermitianEigen::of_matrix(&h)?.propagator(duration);
        self.driven_cache.insert(key, p.clone());
        Ok(p)
    }

    /// Propagators over one cycle at fixed per-species offsets in Hz.
    pub fn cycle(&mut self, tl: &Timeline, offsets: &[f64]) -> Result<CycleProps> {
        let n = self.system.n_spins();
        let d = 1usize << n;
        let mut u = Array2::<C64>::eye(d);
        let mut marks = Vec::with_capacity(tl.mark_times.len());
        for seg in &tl.segs {
            match seg {
                Seg::Free(t) => {
                    if self.coupled {
                        u = self.coupling_propagator(*t)?.dot(&u);
                    }
                    let ph = self.offset_phases(offsets, *t);
                    for (mut row, p) in u.rows_mut().into_iter().zip(ph.iter()) {
                        row.mapv_inplace(|z| z * p);
                    }
                }
                Seg::Kick(rots) => {
                    let factors = self.system.spin_species().iter().map(|&s| rots[s]).collect();
                    LocalUnitary { factors }.apply_left(&mut u);
                }
                Seg::Driven { duration, fields } => {
                    u = self.driven_propagator(offsets, *duration, fields)?.dot(&u);
                }
                Seg::Mark => marks.push(u.clone()),
            }
        }
        Ok(CycleProps { u, marks })
    }
}

fn mask(n: usize, spin: usize) -> usize {
    1usize << (n - 1 - spin)
}

/// `[⟨I_x⟩, ⟨I_y⟩, ⟨I_z⟩]` of every spin as raw traces `Tr(ρ I_a^{(i)})`.
pub(crate) fn spin_expectations(rho: &Array2<C64>, n: usize) -> Vec<[f64; 3]> {
    let d = 1usize << n;
    (0..n)
        .map(|i| {
            let m = mask(n, i);
            let (mut x, mut y, mut z) = (0.0, 0.0, 0.0);
            for k in 0..d {
                let up = k & m == 0;
                let off = rho[[k, k ^ m]];
                x += 0.5 * off.re;
                // (I_y)_{k⊕m,k} = ±i/2
                y += if up { -0.5 * off.im } else { 0.5 * off.im };
                z += if up { 0.5 * rho[[k, k]].re } else { -0.5 * rho[[k, k]].re };
            }
            [x, y, z]
        })
        .collect()
}

/// `(Σ_i w_i I_axis^{(i)}) · V` without forming the operator.
pub(crate) fn apply_weighted(n: usize, axis: Axis, weights: &[f64], v: &Array2<C64>) -> Array2<C64> {
    let d = 1usize << n;
    let mut out = Array2::<C64>::zeros(v.raw_dim());
    for (i, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let m = mask(n, i);
        for r in 0..d {
            let up = r & m == 0;
            let (src, c) = match axis {
                Axis::Z => (r, C64::new(if up { 0.5 * w } else { -0.5 * w }, 0.0)),
                Axis::X => (r ^ m, C64::new(0.5 * w, 0.0)),
                // source row r⊕m is up exactly when r is down
                Axis::Y => (r ^ m, C64::new(0.0, if up { -0.5 * w } else { 0.5 * w })),
            };
            let src_row = v.row(src);
            let mut dst = out.row_mut(r);
            dst.zip_mut_with(&src_row, |a, b| *a += c * b);
        }
    }
    out
}

pub(crate) fn conj_t(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

/// `U ρ U†`.
pub(crate) fn evolve(u: &Array2<C64>, rho: &Array2<C64>) -> Array2<C64> {
    u.dot(rho).dot(&conj_t(u))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_weighted_matches_dense() {
        let n = 3;
        let d = 8;
        let v = Array2::from_shape_fn((d, d), |(i, j)| C64::new((i * 3 + j) as f64 * 0.1, (i as f64 - j as f64) * 0.2));
        let w = [1.0, -0.5, 2.0];
        for axis in Axis::ALL {
            let dense = weighted_spin_sum(n, axis, &w).dot(&v);
            let fast = apply_weighted(n, axis, &w, &v);
            let diff = (&dense - &fast).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(diff < 1e-12, "{axis:?}");
        }
    }

    #[test]
    fn expectations_match_traces() {
        let n = 3;
        let d = 8;
        let a = Array2::from_shape_fn((d, d), |(i, j)| C64::new((i + 2 * j) as f64 * 0.1, (i * j) as f64 * 0.05));
        let rho = &a + &conj_t(&a);
        let ex = spin_expectations(&rho, n);
        for i in 0..n {
            let mut w = vec![0.0; n];
            w[i] = 1.0;
            for (k, axis) in Axis::ALL.into_iter().enumerate() {
                let t: C64 = rho.dot(&weighted_spin_sum(n, axis, &w)).diag().sum();
                assert!((t.re - ex[i][k]).abs() < 1e-12);
            }
        }
    }
}
