use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::spinops::HermitianEigen;
use crate::{Error, Result};

/// How the propagator overlap is scored.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityKind {
    /// `|Tr(U_a† U_tgt)|² / d²`.
    #[default]
    Trace,
    /// `(Tr|Ũ_a Ũ_tgt†|)²` with `Ũ = U/√d` and `|X| = √(X†X)`. Equal to 1 for
    /// any pair of unitaries; kept for comparison only.
    Literal,
}

fn check_dims(a: &Array2<C64>, b: &Array2<C64>) -> Result<()> {
    if a.dim() != b.dim() || a.nrows() != a.ncols() {
        return Err(Error::Config(format!("fidelity needs equal square matrices, got {:?} and {:?}", a.dim(), b.dim())));
    }
    Ok(())
}

/// Normalized trace fidelity, invariant under global phases.
pub fn fidelity(ua: &Array2<C64>, ut: &Array2<C64>) -> Result<f64> {
    check_dims(ua, ut)?;
    let d = ua.nrows() as f64;
    // Tr(A†B) = Σ conj(A_ij) B_ij
    let t: C64 = ua.iter().zip(ut.iter()).map(|(a, b)| a.conj() * b).sum();
    Ok((t.norm_sqr() / (d * d)).clamp(0.0, 1.0))
}

pub fn fidelity_with(kind: FidelityKind, ua: &Array2<C64>, ut: &Array2<C64>) -> Result<f64> {
    match kind {
        FidelityKind::Trace => fidelity(ua, ut),
        FidelityKind::Literal => {
            check_dims(ua, ut)?;
            let d = ua.nrows() as f64;
            let x = ua.dot(&ut.t().mapv(|z| z.conj())).mapv(|z| z / d);
            let xx = x.t().mapv(|z| z.conj()).dot(&x);
            let eig = HermitianEigen::of_matrix(&xx)?;
            let tr: f64 = eig.values.iter().map(|v| v.max(0.0).sqrt()).sum();
            Ok(tr * tr)
        }
    }
}

/// `−ln(1 − F)` once `F ≥ F_opt`, otherwise −1; `1 − F` is floored at 1e-15.
pub fn reward_phase1(f: f64, f_opt: f64) -> f64 {
    if f >= f_opt {
        -(1.0 - f).max(1e-15).ln()
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinops::{hermitian_expm, single_spin_operator, Axis};
    use std::f64::consts::PI;

    #[test]
    fn pi_rotation_is_orthogonal_to_identity() {
        let x = single_spin_operator(1, 0, Axis::X).unwrap();
        let u = hermitian_expm(&x, PI).unwrap();
        let f = fidelity(&Array2::eye(2), u.matrix()).unwrap();
        assert!(f.abs() < 1e-15);
    }

    #[test]
    fn literal_formula_is_degenerate() {
        let x = single_spin_operator(2, 1, Axis::Y).unwrap();
        let u = hermitian_expm(&x, 1.3).unwrap();
        let f = fidelity_with(FidelityKind::Literal, &Array2::eye(4), u.matrix()).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reward_branches() {
        assert_eq!(reward_phase1(0.5, 0.999), -1.0);
        assert!((reward_phase1(0.999, 0.999) - 6.907_755_278_982_137).abs() < 1e-9);
        assert!((reward_phase1(1.0, 0.999) - 34.538_776_394_910_684).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(fidelity(&Array2::eye(2), &Array2::eye(4)).is_err());
    }
}
