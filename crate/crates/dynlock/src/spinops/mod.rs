//! Operator algebra on the 2^N product space.
//!
//! Spin 0 is the most significant bit of the computational-basis index, and
//! bit value 0 is spin-up (`I_z = +1/2`).

mod geometry;
mod linalg;
mod local;
mod mat2;
mod system;

pub use geometry::{second_moment, system_from_coordinates, Cluster};
pub use linalg::{
    hermitian_expm, normalized_frobenius_norm, unitary_eigen, unitary_logm, HermitianEigen,
    UnitaryEigen, UnitaryLog,
};
pub use local::LocalUnitary;
pub use mat2::Mat2;
pub use system::{Species, SpinSystem, DEFAULT_MAX_SPINS};

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn unit(self) -> [f64; 3] {
        match self {
            Axis::X => [1.0, 0.0, 0.0],
            Axis::Y => [0.0, 1.0, 0.0],
            Axis::Z => [0.0, 0.0, 1.0],
        }
    }
}

/// Dense complex operator on `2^N` states.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: Array2<C64>,
    hermitian: bool,
}

fn check_dim(mat: &Array2<C64>) -> Result<usize> {
    let (r, c) = mat.dim();
    if r != c {
        return Err(Error::Config(format!("operator must be square, got {r}x{c}")));
    }
    if r == 0 || !r.is_power_of_two() {
        return Err(Error::Config(format!("operator dimension {r} is not a power of two")));
    }
    Ok(r.trailing_zeros() as usize)
}

fn max_abs(mat: &Array2<C64>) -> f64 {
    mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max|A − A†|`.
pub(crate) fn hermiticity_defect(mat: &Array2<C64>) -> f64 {
    let n = mat.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((mat[[i, j]] - mat[[j, i]].conj()).norm());
        }
    }
    worst
}

impl Operator {
    /// General (not necessarily Hermitian) operator.
    pub fn new(mat: Array2<C64>) -> Result<Self> {
        check_dim(&mat)?;
        Ok(Operator { mat, hermitian: false })
    }

    /// Hermitian operator; rejects inputs with `max|A − A†| > 1e-12·max|A|`.
    pub fn hermitian(mat: Array2<C64>) -> Result<Self> {
        check_dim(&mat)?;
        let scale = max_abs(&mat);
        let defect = hermiticity_defect(&mat);
        if defect > 1e-12 * scale {
            return Err(Error::Contract(format!(
                "matrix claimed Hermitian but max|A - A^dagger| = {defect:e}"
            )));
        }
        Ok(Operator { mat, hermitian: true })
    }

    /// Symmetrize `(A + A†)/2` and mark Hermitian.
    pub fn hermitian_part(mat: Array2<C64>) -> Result<Self> {
        check_dim(&mat)?;
        let h = (&mat + &mat.t().mapv(|z| z.conj())) * C64::new(0.5, 0.0);
        Ok(Operator { mat: h, hermitian: true })
    }

    pub(crate) fn from_parts(mat: Array2<C64>, hermitian: bool) -> Self {
        debug_assert!(check_dim(&mat).is_ok());
        Operator { mat, hermitian }
    }

    pub fn zeros(n_spins: usize) -> Self {
        let d = 1usize << n_spins;
        Operator { mat: Array2::zeros((d, d)), hermitian: true }
    }

    pub fn identity(n_spins: usize) -> Self {
        let d = 1usize << n_spins;
        Operator { mat: Array2::eye(d), hermitian: true }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn n_spins(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.mat
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn dagger(&self) -> Operator {
        Operator { mat: self.mat.t().mapv(|z| z.conj()), hermitian: self.hermitian }
    }

    pub fn trace(&self) -> C64 {
        self.mat.diag().sum()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.mat)
    }

    /// Normalized Frobenius norm `sqrt(Tr(A†A)/2^N)`.
    pub fn norm(&self) -> f64 {
        normalized_frobenius_norm(self)
    }

    pub fn dot(&self, other: &Operator) -> Operator {
        Operator { mat: self.mat.dot(&other.mat), hermitian: false }
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &Operator) -> Operator {
        let ab = self.mat.dot(&other.mat);
        let ba = other.mat.dot(&self.mat);
        Operator { mat: ab - ba, hermitian: false }
    }

    /// `i[A, B]`, Hermitian when both inputs are.
    pub fn i_commutator(&self, other: &Operator) -> Operator {
        let c = self.commutator(other);
        Operator { mat: c.mat * C64::new(0.0, 1.0), hermitian: self.hermitian && other.hermitian }
    }

    pub fn scaled(&self, s: f64) -> Operator {
        Operator { mat: &self.mat * C64::new(s, 0.0), hermitian: self.hermitian }
    }

    pub fn add(&self, other: &Operator) -> Operator {
        Operator { mat: &self.mat + &other.mat, hermitian: self.hermitian && other.hermitian }
    }

    pub fn sub(&self, other: &Operator) -> Operator {
        Operator { mat: &self.mat - &other.mat, hermitian: self.hermitian && other.hermitian }
    }

    /// `U A U†`.
    pub fn conjugated(&self, u: &Array2<C64>) -> Operator {
        let m = u.dot(&self.mat).dot(&u.t().mapv(|z| z.conj()));
        Operator { mat: m, hermitian: self.hermitian }
    }

    /// `max|U†U − 1|`.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.mat.t().mapv(|z| z.conj()).dot(&self.mat);
        let mut worst = 0.0f64;
        for ((i, j), z) in p.indexed_iter() {
            let e = if i == j { *z - 1.0 } else { *z };
            worst = worst.max(e.norm());
        }
        worst
    }

    /// `Tr(A† B)`.
    pub fn overlap(&self, other: &Operator) -> C64 {
        self.mat.iter().zip(other.mat.iter()).map(|(a, b)| a.conj() * b).sum()
    }
}

fn bit_mask(n_spins: usize, spin: usize) -> usize {
    1usize << (n_spins - 1 - spin)
}

/// Diagonal of `Σ_{i∈spins} c_i I_z^{(i)}` in the computational basis.
pub(crate) fn z_diagonal(n_spins: usize, weights: &[f64]) -> Array1<f64> {
    let d = 1usize << n_spins;
    Array1::from_shape_fn(d, |k| {
        (0..n_spins)
            .map(|i| if k & bit_mask(n_spins, i) == 0 { 0.5 * weights[i] } else { -0.5 * weights[i] })
            .sum()
    })
}

/// `Σ_i w_i I_axis^{(i)}` as a dense matrix.
pub(crate) fn weighted_spin_sum(n_spins: usize, axis: Axis, weights: &[f64]) -> Array2<C64> {
    let d = 1usize << n_spins;
    let mut m = Array2::<C64>::zeros((d, d));
    for (i, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let mask = bit_mask(n_spins, i);
        for k in 0..d {
            let up = k & mask == 0;
            match axis {
                Axis::Z => m[[k, k]] += C64::new(if up { 0.5 * w } else { -0.5 * w }, 0.0),
                Axis::X => m[[k ^ mask, k]] += C64::new(0.5 * w, 0.0),
                // I_y |↑> = (i/2)|↓>, I_y |↓> = (−i/2)|↑>
                Axis::Y => m[[k ^ mask, k]] += C64::new(0.0, if up { 0.5 * w } else { -0.5 * w }),
            }
        }
    }
    m
}

/// `I_axis` of a single spin.
pub fn single_spin_operator(n_spins: usize, spin: usize, axis: Axis) -> Result<Operator> {
    if spin >= n_spins {
        return Err(Error::Config(format!("spin index {spin} out of range for {n_spins} spins")));
    }
    let mut w = vec![0.0; n_spins];
    w[spin] = 1.0;
    Ok(Operator::from_parts(weighted_spin_sum(n_spins, axis, &w), true))
}

/// `Σ_i I_axis^{(i)}` over all spins or over the spins of one species.
pub fn collective_operator(
    system: &SpinSystem,
    axis: Axis,
    species_filter: Option<&str>,
) -> Result<Operator> {
    let w = match species_filter {
        None => vec![1.0; system.n_spins()],
        Some(label) => {
            let s = system.species_index(label)?;
            system.species_mask(s)
        }
    };
    Ok(Operator::from_parts(weighted_spin_sum(system.n_spins(), axis, &w), true))
}

/// Secular homonuclear dipolar Hamiltonian plus the secular heteronuclear J term, in rad/s.
///
/// `Σ_{i>j} 2π D_ij (I_z I_z − ¼(I₊I₋ + I₋I₊)) + Σ 2π J_ij I_z S_z`.
pub fn coupling_hamiltonian(system: &SpinSystem) -> Operator {
    let n = system.n_spins();
    let d = 1usize << n;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut m = Array2::<C64>::zeros((d, d));
    for i in 0..n {
        for j in 0..i {
            let dij = system.dipolar()[[i, j]];
            let jij = system.j_couplings()[[i, j]];
            if dij == 0.0 && jij == 0.0 {
                continue;
            }
            let (mi, mj) = (bit_mask(n, i), bit_mask(n, j));
            for k in 0..d {
                let si = if k & mi == 0 { 0.5 } else { -0.5 };
                let sj = if k & mj == 0 { 0.5 } else { -0.5 };
                m[[k, k]] += C64::new(two_pi * (dij + jij) * si * sj, 0.0);
                if dij != 0.0 && si != sj {
                    m[[k ^ mi ^ mj, k]] += C64::new(-0.25 * two_pi * dij, 0.0);
                }
            }
        }
    }
    Operator::from_parts(m, true)
}

/// Secular homonuclear dipolar Hamiltonian `Σ_{i>j} 2π D_ij (I_z I_z − ¼(I₊I₋ + I₋I₊))` in rad/s.
pub fn dipolar_hamiltonian(system: &SpinSystem) -> Operator {
    let stripped = system.without_j();
    coupling_hamiltonian(&stripped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray_linalg::{Eigh, UPLO};

    fn sorted_eigs(op: &Operator) -> Vec<f64> {
        let (w, _) = op.matrix().eigh(UPLO::Lower).unwrap();
        let mut v = w.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn single_spin_z() {
        let sys = SpinSystem::homonuclear(1, "H").unwrap();
        let z = collective_operator(&sys, Axis::Z, None).unwrap();
        assert_eq!(z.matrix()[[0, 0]], C64::new(0.5, 0.0));
        assert_eq!(z.matrix()[[1, 1]], C64::new(-0.5, 0.0));
    }

    #[test]
    fn two_spin_x_spectrum() {
        let sys = SpinSystem::homonuclear(2, "H").unwrap();
        let x = collective_operator(&sys, Axis::X, None).unwrap();
        let e = sorted_eigs(&x);
        for (a, b) in e.iter().zip([-1.0, 0.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ten_spin_z_square_trace() {
        let sys = SpinSystem::homonuclear(10, "H").unwrap();
        let z = collective_operator(&sys, Axis::Z, None).unwrap();
        let tr = z.dot(&z).trace().re;
        // Oracle: Σ_k (Σ_i s_i(k))² summed directly over basis states.
        let mut direct = 0.0;
        for k in 0..1024usize {
            let m: f64 = (0..10).map(|i| if k >> i & 1 == 0 { 0.5 } else { -0.5 }).sum();
            direct += m * m;
        }
        assert!((tr - direct).abs() < 1e-9);
        assert!((tr - 2560.0).abs() < 1e-9);
    }

    #[test]
    fn y_matches_commutator_of_z_and_x() {
        // [I_z, I_x] = i I_y on one spin
        let z = single_spin_operator(3, 1, Axis::Z).unwrap();
        let x = single_spin_operator(3, 1, Axis::X).unwrap();
        let y = single_spin_operator(3, 1, Axis::Y).unwrap();
        let c = z.commutator(&x);
        let diff = &c.matrix().view() - &(y.matrix() * C64::new(0.0, 1.0));
        assert!(diff.iter().all(|z| z.norm() < 1e-15));
    }

    fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
        let (ra, ca) = a.dim();
        let (rb, cb) = b.dim();
        Array2::from_shape_fn((ra * rb, ca * cb), |(i, j)| a[[i / rb, j / cb]] * b[[i % rb, j % cb]])
    }

    fn pauli(axis: Axis) -> Array2<C64> {
        let m = Mat2::spin(axis).0;
        Array2::from_shape_fn((2, 2), |(i, j)| m[i][j])
    }

    #[test]
    fn two_spin_dipolar_against_explicit_matrix() {
        let mut sys = SpinSystem::homonuclear(2, "H").unwrap();
        sys.set_dipolar(0, 1, 1000.0).unwrap();
        let h = dipolar_hamiltonian(&sys);
        let w = 2.0 * std::f64::consts::PI * 1000.0;
        let oracle = (kron(&pauli(Axis::Z), &pauli(Axis::Z))
            - (kron(&pauli(Axis::X), &pauli(Axis::X)) + kron(&pauli(Axis::Y), &pauli(Axis::Y)))
                * C64::new(0.5, 0.0))
            * C64::new(w, 0.0);
        let diff = h.matrix() - &oracle;
        assert!(diff.iter().all(|z| z.norm() < 1e-9));
        // eigenvalues: w/4 (x2, triplet ±1), w/4·(−1−2)/... computed from the oracle
        let e = sorted_eigs(&h);
        let o = sorted_eigs(&Operator::hermitian(oracle.clone()).unwrap());
        for (a, b) in e.iter().zip(o.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
        // Norm oracle: sqrt(Tr(H²)/4) from the explicit matrix.
        let tr: f64 = oracle.iter().map(|z| z.norm_sqr()).sum();
        assert!((h.norm() - (tr / 4.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn dipolar_commutes_with_total_z_on_pentagons() {
        let sys = Cluster::StackedPentagons.system(5500.0).unwrap();
        let h = dipolar_hamiltonian(&sys);
        let z = collective_operator(&sys, Axis::Z, None).unwrap();
        let c = h.commutator(&z);
        assert!(c.max_abs() <= 1e-12 * h.max_abs().max(1.0));
        assert!(h.trace().norm() < 1e-6);
    }

    #[test]
    fn zero_couplings_give_zero_operator() {
        let sys = SpinSystem::homonuclear(3, "H").unwrap();
        assert_eq!(dipolar_hamiltonian(&sys).max_abs(), 0.0);
    }

    #[test]
    fn norm_of_identity_is_one() {
        assert!((Operator::identity(4).norm() - 1.0).abs() < 1e-15);
        assert_eq!(Operator::zeros(3).norm(), 0.0);
    }

    #[test]
    fn hermitian_constructor_rejects_non_hermitian() {
        let mut m = Array2::<C64>::zeros((2, 2));
        m[[0, 1]] = C64::new(1.0, 0.0);
        assert!(Operator::hermitian(m).is_err());
    }
}
