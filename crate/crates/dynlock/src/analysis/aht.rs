use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::spectrum::{spectral_distance, spectrum_of_signal, Spectrum};
use crate::effective::{magnus_offset_expansion, LockingFieldCalc};
use crate::sequence::PulseSequence;
use crate::spinops::Mat2;
use crate::{hz_to_rad, Result};

/// Exact vs truncated-Magnus spectra at one offset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AhtPoint {
    pub nu: f64,
    pub exact_peak_hz: f64,
    /// Peak frequency under `exp(−i t H_M^{(≤k)})` for `k = 0..=max_order`.
    pub order_peak_hz: Vec<f64>,
    /// Relative L2 distance of magnitude spectra per order.
    pub distance: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AhtComparison {
    pub points: Vec<AhtPoint>,
    pub bin_hz: f64,
    pub n_cycles: usize,
}

impl AhtComparison {
    /// Largest `|ν|` such that every point with `|ν'| ≤ |ν|` has order-`k` distance ≤ `tol`.
    pub fn agreement_radius(&self, order: usize, tol: f64) -> f64 {
        let mut pts: Vec<&AhtPoint> = self.points.iter().collect();
        pts.sort_by(|a, b| a.nu.abs().partial_cmp(&b.nu.abs()).unwrap());
        let mut r = 0.0;
        for p in pts {
            if p.distance[order] > tol {
                break;
            }
            r = p.nu.abs();
        }
        r
    }

    /// Peak disagreement in bins per order at one point.
    pub fn bin_gaps(&self, p: &AhtPoint) -> Vec<f64> {
        p.order_peak_hz.iter().map(|f| ((f - p.exact_peak_hz) / self.bin_hz).abs().round()).collect()
    }
}

fn bloch_signal(step: Mat2, n_cycles: usize, t_c: f64) -> (Vec<f64>, Vec<C64>) {
    let mut rho = Mat2::spin_along([0.0, 1.0, 0.0]);
    let mut times = Vec::with_capacity(n_cycles + 1);
    let mut sig = Vec::with_capacity(n_cycles + 1);
    for l in 0..=n_cycles {
        let (_, a) = rho.pauli();
        // ρ = v·σ/2, normalized ⟨I_k⟩ = v_k
        sig.push(C64::new(2.0 * a[0].re, 2.0 * a[1].re));
        times.push(l as f64 * t_c);
        rho = step * rho * step.dagger();
    }
    (times, sig)
}

/// Per-cycle dynamics of one uncoupled spin starting along y, exact and under
/// the Magnus offset Hamiltonian truncated at each order.
pub fn aht_breakdown_compare(seq: &PulseSequence, nu_grid: &[f64], max_order: usize, n_cycles: usize) -> Result<AhtComparison> {
    let calc = LockingFieldCalc::new(seq)?;
    let magnus = magnus_offset_expansion(seq, max_order)?;
    let t_c = seq.cycle_duration();
    let tau = seq.tau;
    let mut points = Vec::with_capacity(nu_grid.len());
    let mut bin_hz = 0.0;
    for &nu in nu_grid {
        let w = hz_to_rad(nu);
        let (t, sig) = bloch_signal(calc.q_product(nu), n_cycles, t_c);
        let exact = spectrum_of_signal(&t, &sig, "exact")?;
        bin_hz = exact.bin_width();
        let mut field = [0.0; 3];
        let mut order_peak_hz = Vec::new();
        let mut distance = Vec::new();
        for (m, c) in magnus.orders.iter().enumerate() {
            let s = tau.powi(m as i32) * w.powi(m as i32 + 1);
            for a in 0..3 {
                field[a] += s * c[a];
            }
            let amp = (field[0].powi(2) + field[1].powi(2) + field[2].powi(2)).sqrt();
            let step = if amp == 0.0 { Mat2::identity() } else { Mat2::rotation(field.map(|f| f / amp), amp * t_c) };
            let (t, sig) = bloch_signal(step, n_cycles, t_c);
            let sp: Spectrum = spectrum_of_signal(&t, &sig, "magnus")?;
            order_peak_hz.push(sp.peak().0);
            distance.push(spectral_distance(&exact, &sp));
        }
        points.push(AhtPoint { nu, exact_peak_hz: exact.peak().0, order_peak_hz, distance });
    }
    Ok(AhtComparison { points, bin_hz, n_cycles })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{dsl4, Dsl4Variant};

    #[test]
    fn zero_offset_is_exact_for_every_order() {
        let seq = dsl4(20e-6, 0.0, Dsl4Variant::Canonical).unwrap();
        let c = aht_breakdown_compare(&seq, &[0.0], 3, 128).unwrap();
        assert!(c.points[0].distance.iter().all(|d| *d <= 1e-9));
    }

    #[test]
    fn higher_order_helps_near_resonance() {
        let seq = dsl4(20e-6, 0.0, Dsl4Variant::Canonical).unwrap();
        let c = aht_breakdown_compare(&seq, &[-300.0, -150.0, 150.0, 300.0], 3, 256).unwrap();
        for p in &c.points {
            assert!(p.distance[3] < p.distance[0], "{p:?}");
        }
    }
}
