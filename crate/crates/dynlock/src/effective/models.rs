use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::locking::{LockingField, LockingFieldCalc};
use super::magnus::{magnus_dipolar, magnus_offset_expansion, DipolarMagnus};
use crate::sequence::PulseSequence;
use crate::spinops::{coupling_hamiltonian, SpinSystem};
use crate::Result;

/// `r = ‖D̃_M‖/|δ|`, `L_C = 1/(1 + r^α)`, `S_C = |δ̂·û| L_C`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LockingModel {
    pub r: f64,
    pub l_c: f64,
    pub s_c: f64,
}

pub fn locking_models(delta: &LockingField, d_magnus_norm: f64, alpha: f64, init_axis: [f64; 3]) -> LockingModel {
    let amp = delta.magnitude();
    if amp == 0.0 {
        return LockingModel { r: f64::INFINITY, l_c: 0.0, s_c: 0.0 };
    }
    let r = d_magnus_norm / amp;
    let l_c = 1.0 / (1.0 + r.powf(alpha));
    let u_norm = init_axis.iter().map(|v| v * v).sum::<f64>().sqrt();
    let d = delta.axis;
    let proj = if u_norm > 0.0 { (d[0] * init_axis[0] + d[1] * init_axis[1] + d[2] * init_axis[2]).abs() / u_norm } else { 0.0 };
    LockingModel { r, l_c, s_c: proj.min(1.0) * l_c }
}

/// Least-squares steepness α of `L_C(r)` against simulated efficiencies.
pub fn fit_alpha(r: &[f64], l_s: &[f64]) -> f64 {
    let cost = |alpha: f64| -> f64 {
        r.iter()
            .zip(l_s)
            .filter(|(r, l)| r.is_finite() && l.is_finite())
            .map(|(&r, &l)| (1.0 / (1.0 + r.powf(alpha)) - l).powi(2))
            .sum()
    };
    // golden-section search on log α
    let (mut a, mut b) = ((0.05f64).ln(), (20.0f64).ln());
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    for _ in 0..100 {
        if cost(c.exp()) < cost(d.exp()) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    ((a + b) / 2.0).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DipClass {
    DipolarActive,
    DipolarInert,
}

/// A predicted signal dip where `t_c δ(ν) = mπ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipPrediction {
    pub nu: f64,
    pub m: i32,
    /// `|t_c δ(ν) − mπ|` at the returned offset.
    pub residual: f64,
    pub class: Option<DipClass>,
    pub d_magnus_norm: Option<f64>,
}

/// Roots of `t_c δ(ν) − mπ` for `|m| ≤ m_max`, bracketed on the unwrapped curve
/// and refined by bisection with continuation from the left bracket.
pub fn dip_predictions(calc: &LockingFieldCalc, curve: &[LockingField], m_max: i32) -> Vec<DipPrediction> {
    let tc = calc.cycle_time();
    let mut out = Vec::new();
    for m in -m_max..=m_max {
        let target = m as f64 * PI;
        let f = |field: &LockingField| field.amplitude * tc - target;
        for (i, w) in curve.windows(2).enumerate() {
            let (fa, fb) = (f(&w[0]), f(&w[1]));
            if fa.abs() < 1e-12 {
                out.push(DipPrediction { nu: w[0].nu, m, residual: fa.abs(), class: None, d_magnus_norm: None });
                continue;
            }
            if i + 2 == curve.len() && fb.abs() < 1e-12 {
                out.push(DipPrediction { nu: w[1].nu, m, residual: fb.abs(), class: None, d_magnus_norm: None });
                continue;
            }
            if fa * fb >= 0.0 {
                continue;
            }
            let (mut lo, mut hi) = (w[0].nu, w[1].nu);
            let mut flo = fa;
            let mut best = (fa.abs(), lo);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = f(&calc.continued(&w[0], mid));
                if fm.abs() < best.0 {
                    best = (fm.abs(), mid);
                }
                if fm.abs() < 1e-12 || hi - lo < 1e-12 * mid.abs().max(1.0) {
                    break;
                }
                if fm * flo < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            out.push(DipPrediction { nu: best.1, m, residual: best.0, class: None, d_magnus_norm: None });
        }
    }
    out.sort_by(|a, b| a.nu.partial_cmp(&b.nu).unwrap().then(a.m.cmp(&b.m)));
    out.dedup_by(|a, b| a.m == b.m && (a.nu - b.nu).abs() < 1e-6);
    out
}

/// Mark each root dipolar-active when `‖D̃_M‖ > threshold·‖D‖` at the root.
pub fn classify_dips(
    dips: &mut [DipPrediction],
    seq: &PulseSequence,
    system: &SpinSystem,
    threshold: f64,
) -> Result<()> {
    let baseline = coupling_hamiltonian(system).norm();
    for d in dips.iter_mut() {
        let sys = system.clone().with_uniform_offset(d.nu);
        let n = magnus_dipolar(seq, &sys)?.operator.norm();
        d.d_magnus_norm = Some(n);
        d.class = Some(if n > threshold * baseline { DipClass::DipolarActive } else { DipClass::DipolarInert });
    }
    Ok(())
}

/// Per-offset summary of the effective description.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EffectiveHamiltonianReport {
    pub nu: f64,
    pub delta: LockingField,
    /// `‖D̃_M‖` in rad/s.
    pub d_magnus_norm: f64,
    pub model: LockingModel,
    pub magnus_offset_terms: Vec<[f64; 3]>,
    pub tc_coupling_norm: f64,
    pub warning: Option<String>,
}

/// JSON record of one report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub nu_hz: f64,
    pub delta_amp_rad_s: f64,
    pub tilt_rad: f64,
    pub d_magnus_norm: f64,
    pub r: f64,
    #[serde(rename = "L_C")]
    pub l_c: f64,
    #[serde(rename = "S_C")]
    pub s_c: f64,
}

impl EffectiveHamiltonianReport {
    pub fn record(&self) -> ReportRecord {
        ReportRecord {
            nu_hz: self.nu,
            delta_amp_rad_s: self.delta.amplitude,
            tilt_rad: self.delta.tilt,
            d_magnus_norm: self.d_magnus_norm,
            r: self.model.r,
            l_c: self.model.l_c,
            s_c: self.model.s_c,
        }
    }
}

/// Build the report at one offset (uniform across species). `delta` supplies the
/// continuity-unwrapped field; otherwise the principal field is used.
pub fn effective_report(
    seq: &PulseSequence,
    system: &SpinSystem,
    nu: f64,
    delta: Option<LockingField>,
    alpha: f64,
    init_axis: [f64; 3],
) -> Result<EffectiveHamiltonianReport> {
    let calc = LockingFieldCalc::new(seq)?;
    let delta = delta.unwrap_or_else(|| calc.principal(nu));
    let sys = system.clone().with_uniform_offset(nu);
    let DipolarMagnus { operator, tc_coupling_norm, warning, .. } = magnus_dipolar(seq, &sys)?;
    let norm = operator.norm();
    let terms = if seq.channels.len() == 1 { magnus_offset_expansion(seq, 3)?.orders } else { Vec::new() };
    Ok(EffectiveHamiltonianReport {
        nu,
        model: locking_models(&delta, norm, alpha, init_axis),
        delta,
        d_magnus_norm: norm,
        magnus_offset_terms: terms,
        tc_coupling_norm,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(amp: f64, axis: [f64; 3]) -> LockingField {
        LockingField { nu: 0.0, amplitude: amp, axis, tilt: 0.0, principal_angle: 0.0, branch_flag: false }
    }

    #[test]
    fn model_limits() {
        let m = locking_models(&field(10.0, [0.0, 0.0, 1.0]), 0.0, 2.0, [0.0, 0.0, 1.0]);
        assert_eq!(m.l_c, 1.0);
        let m = locking_models(&field(0.0, [0.0, 0.0, 1.0]), 3.0, 2.0, [0.0, 0.0, 1.0]);
        assert_eq!((m.l_c, m.s_c), (0.0, 0.0));
        let m = locking_models(&field(10.0, [0.0, 0.0, 1.0]), 5.0, 2.0, [1.0, 0.0, 0.0]);
        assert_eq!(m.s_c, 0.0);
        assert!((m.l_c - 0.8).abs() < 1e-12);
    }

    #[test]
    fn alpha_fit_recovers_generator() {
        let r: Vec<f64> = (1..40).map(|i| i as f64 * 0.1).collect();
        let l: Vec<f64> = r.iter().map(|r| 1.0 / (1.0 + r.powf(1.7))).collect();
        assert!((fit_alpha(&r, &l) - 1.7).abs() < 1e-4);
    }
}
