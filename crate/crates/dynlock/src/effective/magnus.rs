use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::frames::{local_from_species, require_ideal_cyclic, species_omegas, system_frames, ChannelFrames};
use super::locking::LockingFieldCalc;
use crate::sequence::PulseSequence;
use crate::spinops::{
    collective_operator, coupling_hamiltonian, unitary_logm, Axis, HermitianEigen, LocalUnitary, Mat2,
    Operator, SpinSystem,
};
use crate::{Error, Result};

/// Offset-term Magnus orders: order `m` is `τ^m ω^{m+1} (c_x I_x + c_y I_y + c_z I_z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffsetMagnus {
    pub orders: Vec<[f64; 3]>,
}

type Series = Vec<Mat2>;

fn series_mul(a: &Series, b: &Series, deg: usize) -> Series {
    let mut out = vec![Mat2::zero(); deg + 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            if i + j <= deg {
                out[i + j] = out[i + j].add(&(*x * *y));
            }
        }
    }
    out
}

/// Orders `0..=order` of the offset Magnus expansion, computed by truncated
/// power-series arithmetic on `∏_k exp(−i x n_k·σ/2)` in `x = ωτ`.
pub fn magnus_offset_expansion(seq: &PulseSequence, order: usize) -> Result<OffsetMagnus> {
    if order > 3 {
        return Err(Error::Unsupported(format!("offset Magnus order {order} (maximum 3)")));
    }
    if seq.channels.len() > 1 {
        return Err(Error::Unsupported("offset Magnus expansion is single-species".into()));
    }
    require_ideal_cyclic(seq)?;
    let ch = seq.channels.first().cloned().unwrap_or_else(|| "H".into());
    let frames = ChannelFrames::new(seq, &ch);
    let n = frames.n() as f64;
    let deg = order + 1;
    let mi = C64::new(0.0, -1.0);

    let mut prod: Series = vec![Mat2::zero(); deg + 1];
    prod[0] = Mat2::identity();
    for a in &frames.axes {
        // exp(−i x A), A = n·σ/2, as a series in x
        let gen = Mat2::spin_along(*a).scale(mi);
        let mut q: Series = vec![Mat2::zero(); deg + 1];
        let mut term = Mat2::identity();
        let mut fact = 1.0;
        for j in 0..=deg {
            if j > 0 {
                term = term * gen;
                fact *= j as f64;
            }
            q[j] = term.scale(C64::new(1.0 / fact, 0.0));
        }
        prod = series_mul(&q, &prod, deg);
    }
    // log(1 + Y) = Y − Y²/2 + Y³/3 − …
    let mut y = prod.clone();
    y[0] = Mat2::zero();
    let mut log: Series = vec![Mat2::zero(); deg + 1];
    let mut power = y.clone();
    for p in 1..=deg {
        let s = if p % 2 == 1 { 1.0 } else { -1.0 } / p as f64;
        for d in 0..=deg {
            log[d] = log[d].add(&power[d].scale(C64::new(s, 0.0)));
        }
        power = series_mul(&power, &y, deg);
    }
    // log = −i n Σ_m x^{m+1} (c_m·σ/2)  ⇒  c_m·σ/2 = i L_{m+1}/n
    let orders = (0..=order)
        .map(|m| {
            let h = log[m + 1].scale(C64::new(0.0, 1.0 / n));
            let (_, a) = h.pauli();
            [2.0 * a[0].re, 2.0 * a[1].re, 2.0 * a[2].re]
        })
        .collect();
    Ok(OffsetMagnus { orders })
}

/// Product-space dressing data for one offset setting.
pub(crate) struct Dressing {
    /// `G_k = (∏_{l≥k} Q_l) R_k` per interval.
    pub frames: Vec<LocalUnitary>,
    /// `∏_k Q_k`.
    pub q_product: LocalUnitary,
    pub tau: f64,
}

pub(crate) fn dressing(seq: &PulseSequence, system: &SpinSystem) -> Result<Dressing> {
    require_ideal_cyclic(seq)?;
    let frames = system_frames(seq, system)?;
    let omegas = species_omegas(system);
    let n = frames[0].n();
    if frames.iter().any(|f| f.n() != n) {
        return Err(Error::Config("channels disagree on the number of intervals".into()));
    }
    let dress: Vec<Vec<Mat2>> = frames.iter().zip(&omegas).map(|(f, &w)| f.dressings(w, seq.tau)).collect();
    let qprod: Vec<Mat2> = frames.iter().zip(&omegas).map(|(f, &w)| f.q_product(w, seq.tau)).collect();
    let g = (0..n)
        .map(|k| {
            let per: Vec<Mat2> = dress.iter().map(|d| d[k]).collect();
            local_from_species(system, &per)
        })
        .collect();
    Ok(Dressing { frames: g, q_product: local_from_species(system, &qprod), tau: seq.tau })
}

/// `∏_k exp(−iτ D̃'_k)`, later factors to the left.
pub fn dressed_dipolar_propagator(seq: &PulseSequence, system: &SpinSystem) -> Result<Operator> {
    let d = dressing(seq, system)?;
    let h = coupling_hamiltonian(system);
    let dim = h.dim();
    let mut u = Array2::<C64>::eye(dim);
    if h.max_abs() == 0.0 {
        return Ok(Operator::new(u)?);
    }
    let e = HermitianEigen::new(&h)?.propagator(d.tau);
    for g in &d.frames {
        // G E G† U
        g.dagger().apply_left(&mut u);
        u = e.dot(&u);
        g.apply_left(&mut u);
    }
    Operator::new(u)
}

/// `∏_k Q_k` on the product space.
pub fn q_product_operator(seq: &PulseSequence, system: &SpinSystem) -> Result<Operator> {
    Operator::new(dressing(seq, system)?.q_product.to_dense())
}

/// Magnus dipolar Hamiltonian with its diagnostics.
#[derive(Clone, Debug)]
pub struct DipolarMagnus {
    /// `D̃_M` in rad/s.
    pub operator: Operator,
    /// `t_c ‖D + J‖`, equal to `t_c ‖D̃'_k‖` for every k.
    pub tc_coupling_norm: f64,
    /// Largest |eigenvalue| of `t_c D̃_M`.
    pub max_phase: f64,
    pub warning: Option<String>,
}

/// `D̃_M = (i/t_c) log ∏_k exp(−iτ D̃'_k)` at the system's offsets.
pub fn magnus_dipolar(seq: &PulseSequence, system: &SpinSystem) -> Result<DipolarMagnus> {
    let u = dressed_dipolar_propagator(seq, system)?;
    let t_c = seq.cycle_duration();
    let l = unitary_logm(&u)?;
    if l.branch_ambiguous {
        return Err(Error::Contract(format!(
            "t_c·D_M has an eigen-phase at the branch cut (max {:.6}); reduce tau",
            l.max_abs_phase
        )));
    }
    let tc_norm = t_c * coupling_hamiltonian(system).norm();
    let warning = if l.max_abs_phase > 0.9 * std::f64::consts::PI {
        Some(format!("eigen-phase {:.4} close to the branch cut; reduce tau", l.max_abs_phase))
    } else if tc_norm > 0.1 {
        Some(format!("t_c·||D|| = {tc_norm:.3} exceeds 0.1; higher Magnus orders are not small"))
    } else {
        None
    };
    Ok(DipolarMagnus {
        operator: l.generator.scaled(1.0 / t_c),
        tc_coupling_norm: tc_norm,
        max_phase: l.max_abs_phase,
        warning,
    })
}

/// `Σ_s δ_s · I_s` from the principal locking field of each driven species.
pub fn locking_term(seq: &PulseSequence, system: &SpinSystem) -> Result<Operator> {
    let mut h = Operator::zeros(system.n_spins());
    for (s, sp) in system.species().iter().enumerate() {
        let calc = if seq.channels.contains(&sp.label) {
            LockingFieldCalc::for_channel(seq, &sp.label)?
        } else {
            LockingFieldCalc::new(&seq.idealized_without_pulses())?
        };
        let f = calc.principal(system.offsets()[s]);
        for (axis, comp) in Axis::ALL.iter().zip(f.vector()) {
            if comp != 0.0 {
                h = h.add(&collective_operator(system, *axis, Some(&sp.label))?.scaled(comp));
            }
        }
    }
    Ok(h)
}

/// Effective Hamiltonian from the BCH series of `exp(−i t_c D̃_M) exp(−i t_c δ·I)`.
#[derive(Clone, Debug)]
pub struct BchEffective {
    pub hamiltonian: Operator,
    pub order: usize,
    /// `‖exp(−i t_c H) − U_D·∏Q‖` (max-entry) against the factorized exact propagator.
    pub truncation_error: f64,
}

pub fn bch_effective(seq: &PulseSequence, system: &SpinSystem, order: usize) -> Result<BchEffective> {
    if order > 2 {
        return Err(Error::Unsupported(format!("BCH order {order} (maximum 2)")));
    }
    let t_c = seq.cycle_duration();
    let dm = magnus_dipolar(seq, system)?.operator;
    let di = locking_term(seq, system)?;
    let mut h = di.add(&dm);
    if order >= 1 {
        // (i t_c/2)[δI, D_M]
        h = h.add(&di.i_commutator(&dm).scaled(t_c / 2.0));
    }
    if order >= 2 {
        let a = dm.commutator(&dm.commutator(&di));
        let b = di.commutator(&di.commutator(&dm));
        let second = Operator::hermitian_part(a.add(&b).into_matrix())?;
        h = h.sub(&second.scaled(t_c * t_c / 12.0));
    }
    let h = Operator::hermitian_part(h.into_matrix())?;
    let approx = crate::spinops::hermitian_expm(&h, t_c)?;
    let exact = dressed_dipolar_propagator(seq, system)?.dot(&q_product_operator(seq, system)?);
    let truncation_error = approx.sub(&exact).max_abs();
    Ok(BchEffective { hamiltonian: h, order, truncation_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{dsl4, parse_sequence, wahuha, Dsl4Variant};
    use crate::spinops::Cluster;

    #[test]
    fn delays_only_sequence_gives_bare_offset() {
        let s = parse_sequence("tau 5u; d3").unwrap();
        let m = magnus_offset_expansion(&s, 3).unwrap();
        assert_eq!(m.orders[0], [0.0, 0.0, 1.0]);
        for o in &m.orders[1..] {
            assert!(o.iter().all(|v| v.abs() < 1e-15));
        }
    }

    #[test]
    fn wahuha_order_zero_is_one_third_along_111() {
        let m = magnus_offset_expansion(&wahuha(1e-6, 0.0).unwrap(), 0).unwrap();
        for v in m.orders[0] {
            assert!((v.abs() - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn canonical_dsl4_fingerprint() {
        let s = dsl4(20e-6, 0.0, Dsl4Variant::Canonical).unwrap();
        let m = magnus_offset_expansion(&s, 3).unwrap();
        let expect = [[0.0, 0.0, 1.0 / 3.0], [-2.0 / 3.0, 0.0, 1.0 / 3.0], [0.0, 0.0, -4.0 / 3.0], [19.0 / 9.0, 0.0, 19.0 / 18.0]];
        for (o, e) in m.orders.iter().zip(expect) {
            for k in 0..3 {
                assert!((o[k] - e[k]).abs() < 1e-12, "{:?}", m.orders);
            }
        }
        for v in [Dsl4Variant::Repeated, Dsl4Variant::PhaseCycled, Dsl4Variant::Alternating] {
            let o = magnus_offset_expansion(&dsl4(20e-6, 0.0, v).unwrap(), 3).unwrap();
            assert_ne!(o.orders, m.orders, "{v:?}");
        }
    }

    #[test]
    fn order_above_three_is_rejected() {
        let s = dsl4(1e-6, 0.0, Dsl4Variant::Canonical).unwrap();
        assert!(matches!(magnus_offset_expansion(&s, 4), Err(Error::Unsupported(_))));
    }

    #[test]
    fn zero_coupling_gives_zero_magnus() {
        let s = dsl4(20e-6, 0.0, Dsl4Variant::Canonical).unwrap();
        let sys = crate::spinops::SpinSystem::homonuclear(3, "H").unwrap().with_uniform_offset(-1400.0);
        let m = magnus_dipolar(&s, &sys).unwrap();
        assert!(m.operator.max_abs() < 1e-9);
    }

    #[test]
    fn bch_without_coupling_is_locking_term() {
        let s = dsl4(20e-6, 0.0, Dsl4Variant::Canonical).unwrap();
        let sys = crate::spinops::SpinSystem::homonuclear(2, "H").unwrap().with_uniform_offset(-1400.0);
        for order in 0..=2 {
            let b = bch_effective(&s, &sys, order).unwrap();
            let d = locking_term(&s, &sys).unwrap();
            assert!(b.hamiltonian.sub(&d).max_abs() < 1e-6);
            assert!(b.truncation_error < 1e-10);
        }
    }

    #[test]
    fn bch_at_zero_offset_is_magnus_dipolar() {
        let s = dsl4(20e-6, 0.0, Dsl4Variant::Canonical).unwrap();
        let sys = Cluster::Tetra4.system(3000.0).unwrap();
        let b = bch_effective(&s, &sys, 2).unwrap();
        let m = magnus_dipolar(&s, &sys).unwrap();
        assert!(b.hamiltonian.sub(&m.operator).max_abs() < 1e-9 * m.operator.max_abs().max(1.0));
    }
}
