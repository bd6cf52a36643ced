use ndarray::{Array1, Array2, Axis as NdAxis, ShapeBuilder};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use super::Operator;
use crate::{Error, Result};

/// Eigendecomposition `H = V diag(λ) V†` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Array1<f64>,
    pub vectors: Array2<C64>,
}

impl HermitianEigen {
    pub fn new(h: &Operator) -> Result<Self> {
        if !h.is_hermitian() {
            return Err(Error::Contract("eigendecomposition requires a Hermitian operator".into()));
        }
        Self::of_matrix(h.matrix())
    }

    pub(crate) fn of_matrix(m: &Array2<C64>) -> Result<Self> {
        // the LAPACK binding conjugates eigenvectors of row-major complex input
        let mut f = Array2::<C64>::zeros(m.raw_dim().f());
        f.assign(m);
        let (values, vectors) = f.eigh(UPLO::Lower)?;
        Ok(HermitianEigen { values, vectors })
    }

    /// `exp(−i t H)` as a dense matrix.
    pub fn propagator(&self, t: f64) -> Array2<C64> {
        let phases: Vec<C64> = self.values.iter().map(|&l| C64::from_polar(1.0, -l * t)).collect();
        let mut w = self.vectors.clone();
        for (mut col, p) in w.axis_iter_mut(NdAxis(1)).zip(phases) {
            col.mapv_inplace(|z| z * p);
        }
        w.dot(&self.vectors.t().mapv(|z| z.conj()))
    }
}

/// `exp(−i t H)` by eigendecomposition.
pub fn hermitian_expm(h: &Operator, t: f64) -> Result<Operator> {
    let eig = HermitianEigen::new(h)?;
    Ok(Operator::from_parts(eig.propagator(t), false))
}

pub fn normalized_frobenius_norm(a: &Operator) -> f64 {
    let s: f64 = a.matrix().iter().map(|z| z.norm_sqr()).sum();
    (s / a.dim() as f64).sqrt()
}

/// Eigendecomposition `U = W diag(e^{iφ}) W†` of a unitary matrix.
#[derive(Clone, Debug)]
pub struct UnitaryEigen {
    /// Eigen-phases `φ = arg λ` in `(−π, π]`.
    pub phases: Array1<f64>,
    pub vectors: Array2<C64>,
}

// Irrational mixing angle for the Hermitian combination.
const MIX: f64 = 0.618_033_988_749_894_8;

/// Unitary eigendecomposition through the commuting Hermitian pair
/// `A = (U + U†)/2`, `B = (U − U†)/2i`.
pub fn unitary_eigen(u: &Array2<C64>) -> Result<UnitaryEigen> {
    let n = u.nrows();
    let ud = u.t().mapv(|z| z.conj());
    let a = (u + &ud) * C64::new(0.5, 0.0);
    let b = (u - &ud) * C64::new(0.0, -0.5);
    let (c, s) = (MIX.cos(), MIX.sin());
    let m = &a * C64::new(c, 0.0) + &b * C64::new(s, 0.0);
    let eig = HermitianEigen::of_matrix(&m)?;
    let mut w = eig.vectors;
    let mu = eig.values;

    // Eigenvalues of M are cos(φ − MIX): distinct phases can collide, so split
    // near-degenerate clusters with the orthogonal combination sin(φ − MIX).
    let n_op = &b * C64::new(c, 0.0) - &a * C64::new(s, 0.0);
    let tol = 1e-7;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && mu[end] - mu[end - 1] < tol {
            end += 1;
        }
        if end - start > 1 {
            let block = w.slice(ndarray::s![.., start..end]).to_owned();
            let reduced = block.t().mapv(|z| z.conj()).dot(&n_op).dot(&block);
            let sub = HermitianEigen::of_matrix(&reduced)?;
            let rotated = block.dot(&sub.vectors);
            w.slice_mut(ndarray::s![.., start..end]).assign(&rotated);
        }
        start = end;
    }

    let uw = u.dot(&w);
    let mut phases = Array1::zeros(n);
    let mut residual = 0.0f64;
    for j in 0..n {
        let col = w.column(j);
        let lam: C64 = col.iter().zip(uw.column(j).iter()).map(|(v, x)| v.conj() * x).sum();
        phases[j] = lam.arg();
        let lam_unit = C64::from_polar(1.0, phases[j]);
        for i in 0..n {
            residual = residual.max((uw[[i, j]] - col[i] * lam_unit).norm());
        }
    }
    if residual > 1e-8 {
        return Err(Error::Contract(format!(
            "unitary eigendecomposition residual {residual:e} exceeds 1e-8"
        )));
    }
    Ok(UnitaryEigen { phases, vectors: w })
}

/// Principal logarithm of a unitary.
#[derive(Clone, Debug)]
pub struct UnitaryLog {
    /// Hermitian `G` with `exp(−iG) = U` and eigen-phases in `(−π, π]`.
    pub generator: Operator,
    /// Some eigen-phase lies within 1e-10 of the branch cut at ±π.
    pub branch_ambiguous: bool,
    /// Largest |eigenvalue| of `G`.
    pub max_abs_phase: f64,
}

pub fn unitary_logm(u: &Operator) -> Result<UnitaryLog> {
    let defect = u.unitarity_defect();
    if defect > 1e-9 {
        return Err(Error::Contract(format!("input not unitary: max|U'U - 1| = {defect:e}")));
    }
    let eig = unitary_eigen(u.matrix())?;
    // exp(−iG) = U  ⇒  g = −φ, mapped into (−π, π].
    let g: Vec<f64> = eig.phases.iter().map(|&p| if -p <= -PI { PI } else { -p }).collect();
    let max_abs_phase = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let branch_ambiguous = g.iter().any(|v| PI - v.abs() < 1e-10);
    let mut scaled = eig.vectors.clone();
    for (mut col, &gv) in scaled.axis_iter_mut(NdAxis(1)).zip(g.iter()) {
        col.mapv_inplace(|z| z * gv);
    }
    let m = scaled.dot(&eig.vectors.t().mapv(|z| z.conj()));
    let generator = Operator::hermitian_part(m)?;
    Ok(UnitaryLog { generator, branch_ambiguous, max_abs_phase })
}
